//! Vocabulary data model: language identifiers, shared and language-specific
//! token entries, the `@@code` tag encoding and complete separation.
//!
//! A language-specific entry is written on disk as its base surface followed
//! by the tag delimiter and the language code, e.g. `▁the@@en`. Base surfaces
//! may never contain the delimiter, which keeps tag stripping unambiguous.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LavsError, Result};

/// Reserved delimiter separating a base surface from its language tag.
pub const TAG_DELIMITER: &str = "@@";

/// Code reserved for "some language outside the evaluated set" in detection data.
pub const OTHER_CODE: &str = "other";

/// A language in an ordered language list.
///
/// Ordering and equality follow the dense index first, so sorting a set of
/// ids reproduces the language-list order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageId {
    index: usize,
    code: Arc<str>,
}

impl LanguageId {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn code(&self) -> &str {
        &self.code
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// Checks the lexical rules for a language code: non-empty, at most 16 bytes
/// of `[a-z0-9_-]`.
pub fn is_valid_language_code(code: &str) -> bool {
    !code.is_empty()
        && code.len() <= 16
        && code
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-')
}

/// The ordered language list of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Languages {
    ids: Vec<LanguageId>,
    by_code: HashMap<Arc<str>, usize>,
}

impl Languages {
    pub fn new<I, S>(codes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut langs = Languages::default();
        for code in codes {
            let code = code.as_ref();
            if langs.get(code).is_some() {
                return Err(LavsError::DuplicateLanguage(code.to_string()));
            }
            langs.push(code)?;
        }
        Ok(langs)
    }

    /// Returns the id for `code`, appending it to the list if absent.
    pub fn push(&mut self, code: &str) -> Result<LanguageId> {
        if let Some(id) = self.get(code) {
            return Ok(id.clone());
        }
        if !is_valid_language_code(code) || code == OTHER_CODE {
            return Err(LavsError::InvalidLanguageCode(code.to_string()));
        }
        let code: Arc<str> = Arc::from(code);
        let id = LanguageId {
            index: self.ids.len(),
            code: code.clone(),
        };
        self.by_code.insert(code, id.index);
        self.ids.push(id.clone());
        Ok(id)
    }

    pub fn get(&self, code: &str) -> Option<&LanguageId> {
        self.by_code.get(code).map(|&i| &self.ids[i])
    }

    pub fn require(&self, code: &str) -> Result<&LanguageId> {
        self.get(code)
            .ok_or_else(|| LavsError::UnknownLanguage(code.to_string()))
    }

    pub fn by_index(&self, index: usize) -> Option<&LanguageId> {
        self.ids.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LanguageId> {
        self.ids.iter()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn codes(&self) -> Vec<&str> {
        self.ids.iter().map(|l| l.code()).collect()
    }
}

/// Dense index of a vocabulary entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Shared,
    Specific(LanguageId),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TokenEntry {
    /// Base surface, without any language tag.
    pub surface: String,
    pub kind: TokenKind,
}

impl TokenEntry {
    pub fn shared(surface: impl Into<String>) -> Self {
        TokenEntry {
            surface: surface.into(),
            kind: TokenKind::Shared,
        }
    }

    pub fn specific(surface: impl Into<String>, lang: LanguageId) -> Self {
        TokenEntry {
            surface: surface.into(),
            kind: TokenKind::Specific(lang),
        }
    }

    pub fn lang(&self) -> Option<&LanguageId> {
        match &self.kind {
            TokenKind::Shared => None,
            TokenKind::Specific(lang) => Some(lang),
        }
    }

    /// The on-disk surface: the base surface, tagged if language-specific.
    pub fn render(&self) -> String {
        match &self.kind {
            TokenKind::Shared => self.surface.clone(),
            TokenKind::Specific(lang) => format!("{}{}{}", self.surface, TAG_DELIMITER, lang.code()),
        }
    }
}

fn check_base_surface(base: &str) -> Result<()> {
    if base.is_empty() || base.contains('\n') {
        return Err(LavsError::InvalidSurface(base.to_string()));
    }
    if base.contains(TAG_DELIMITER) {
        return Err(LavsError::ReservedDelimiter(base.to_string()));
    }
    Ok(())
}

/// Appends the language tag to a base surface.
pub fn make_specific_surface(base: &str, lang: &LanguageId) -> Result<String> {
    if base.contains(TAG_DELIMITER) {
        return Err(LavsError::ReservedDelimiter(base.to_string()));
    }
    Ok(format!("{base}{TAG_DELIMITER}{}", lang.code()))
}

/// Splits a surface into `(base, code)` if it carries a syntactically valid
/// tag. Does not consult any language list.
pub fn split_tag(surface: &str) -> Option<(&str, &str)> {
    let at = surface.rfind(TAG_DELIMITER)?;
    let base = &surface[..at];
    let code = &surface[at + TAG_DELIMITER.len()..];
    if base.is_empty() || base.contains(TAG_DELIMITER) || !is_valid_language_code(code) {
        return None;
    }
    Some((base, code))
}

/// Inverse of [`make_specific_surface`]; untagged surfaces and tags naming a
/// language outside `langs` pass through unchanged.
pub fn strip_specific_surface<'a>(
    surface: &'a str,
    langs: &Languages,
) -> (&'a str, Option<LanguageId>) {
    match split_tag(surface) {
        Some((base, code)) => match langs.get(code) {
            Some(lang) => (base, Some(lang.clone())),
            None => (surface, None),
        },
        None => (surface, None),
    }
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    surface: String,
    lang: Option<String>,
}

/// An ordered, immutable set of token entries with dense ids.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    entries: Vec<TokenEntry>,
    rendered: Vec<String>,
    index: HashMap<String, TokenId>,
    base_size: usize,
    fully_separated: bool,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.fully_separated == other.fully_separated
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    /// Builds a vocabulary from entries in id order. The `fully_separated`
    /// flag is set when some specific entry has no shared counterpart.
    pub fn new(entries: Vec<TokenEntry>) -> Result<Self> {
        let mut vocab = Self::build(entries)?;
        vocab.fully_separated = vocab.entries.iter().any(|e| {
            e.lang().is_some() && vocab.shared_id(&e.surface).is_none()
        });
        Ok(vocab)
    }

    pub fn from_shared<I, S>(surfaces: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(surfaces.into_iter().map(TokenEntry::shared).collect())
    }

    fn build(entries: Vec<TokenEntry>) -> Result<Self> {
        if entries.len() > u32::MAX as usize {
            return Err(LavsError::Domain("vocabulary exceeds u32 ids".into()));
        }
        let mut index = HashMap::with_capacity(entries.len());
        let mut rendered = Vec::with_capacity(entries.len());
        let mut base_size = 0;
        for (i, entry) in entries.iter().enumerate() {
            check_base_surface(&entry.surface)?;
            if entry.lang().is_none() {
                base_size += 1;
            }
            let surface = entry.render();
            if index.insert(surface.clone(), TokenId(i as u32)).is_some() {
                return Err(LavsError::DuplicateEntry(surface));
            }
            rendered.push(surface);
        }
        Ok(Vocabulary {
            entries,
            rendered,
            index,
            base_size,
            fully_separated: false,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn base_size(&self) -> usize {
        self.base_size
    }

    pub fn specific_size(&self) -> usize {
        self.entries.len() - self.base_size
    }

    pub fn is_fully_separated(&self) -> bool {
        self.fully_separated
    }

    pub fn entries(&self) -> &[TokenEntry] {
        &self.entries
    }

    pub fn entry(&self, id: TokenId) -> &TokenEntry {
        &self.entries[id.index()]
    }

    /// Rendered (possibly tagged) surface of an entry.
    pub fn surface(&self, id: TokenId) -> &str {
        &self.rendered[id.index()]
    }

    /// Looks up a rendered surface, tagged or not.
    pub fn lookup(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    pub fn id_of(&self, surface: &str, kind: &TokenKind) -> Option<TokenId> {
        match kind {
            TokenKind::Shared => self.shared_id(surface),
            TokenKind::Specific(lang) => self.specific_id(surface, lang),
        }
    }

    pub fn shared_id(&self, surface: &str) -> Option<TokenId> {
        self.lookup(surface)
            .filter(|&id| self.entries[id.index()].lang().is_none())
    }

    pub fn specific_id(&self, base: &str, lang: &LanguageId) -> Option<TokenId> {
        let id = self.lookup(&format!("{base}{TAG_DELIMITER}{}", lang.code()))?;
        (self.entries[id.index()].lang() == Some(lang)).then_some(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.entries.len() as u32).map(TokenId)
    }

    pub fn shared_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.ids().filter(|&id| self.entries[id.index()].lang().is_none())
    }

    /// Hex SHA-256 over the rendered entries in id order.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for s in &self.rendered {
            hasher.update(s.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Parses the plain-text form: one rendered surface per line.
    pub fn parse_text(text: &str, langs: &Languages) -> Result<Self> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Self::new(Vec::new());
        }
        let entries = body
            .split('\n')
            .map(|line| parse_rendered(line, langs))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    /// Parses the JSON form: `[{"surface": str, "lang": str|null}, ...]`.
    pub fn parse_json(text: &str, langs: &Languages) -> Result<Self> {
        let raw: Vec<JsonEntry> = serde_json::from_str(text)?;
        let entries = raw
            .into_iter()
            .map(|e| match e.lang {
                None => Ok(TokenEntry::shared(e.surface)),
                Some(code) => Ok(TokenEntry::specific(e.surface, langs.require(&code)?.clone())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.rendered.iter().map(|s| s.len() + 1).sum());
        for s in &self.rendered {
            out.push_str(s);
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let raw: Vec<JsonEntry> = self
            .entries
            .iter()
            .map(|e| JsonEntry {
                surface: e.surface.clone(),
                lang: e.lang().map(|l| l.code().to_string()),
            })
            .collect();
        serde_json::to_string_pretty(&raw).expect("vocabulary serializes") + "\n"
    }

    /// Loads either form; files ending in `.json` use the JSON form.
    pub fn load(path: &Path, langs: &Languages) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if is_json_path(path) {
            Self::parse_json(&text, langs)
        } else {
            Self::parse_text(&text, langs)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let body = if is_json_path(path) {
            self.to_json()
        } else {
            self.to_text()
        };
        std::fs::write(path, body)?;
        Ok(())
    }
}

fn is_json_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn parse_rendered(line: &str, langs: &Languages) -> Result<TokenEntry> {
    if !line.contains(TAG_DELIMITER) {
        return Ok(TokenEntry::shared(line));
    }
    match split_tag(line) {
        Some((base, code)) => Ok(TokenEntry::specific(base, langs.require(code)?.clone())),
        None => Err(LavsError::ReservedDelimiter(line.to_string())),
    }
}

/// Language codes carried by tagged lines of a plain-text vocabulary, in
/// order of first appearance.
pub fn scan_tag_codes(text: &str) -> Vec<String> {
    let mut seen = Vec::<String>::new();
    for line in text.lines() {
        if let Some((_, code)) = split_tag(line) {
            if !seen.iter().any(|c| c == code) {
                seen.push(code.to_string());
            }
        }
    }
    seen
}

/// Per-token language usage for [`split_all`], keyed by shared surface.
pub type Usage = HashMap<String, BTreeSet<LanguageId>>;

/// Complete separation: every shared token used by two or more languages is
/// replaced by one specific entry per using language.
///
/// Kept shared entries come first in input order, followed by pre-existing
/// specific entries, then the new specific entries ordered by token id and
/// language index.
pub fn split_all(vocab: &Vocabulary, usage: &Usage) -> Result<Vocabulary> {
    let mut kept = Vec::new();
    let mut existing = Vec::new();
    let mut created = Vec::new();
    for id in vocab.ids() {
        let entry = vocab.entry(id);
        if entry.lang().is_some() {
            existing.push(entry.clone());
            continue;
        }
        let users = usage
            .get(&entry.surface)
            .ok_or_else(|| LavsError::MissingUsage(entry.surface.clone()))?;
        if users.len() >= 2 {
            created.extend(
                users
                    .iter()
                    .map(|lang| TokenEntry::specific(entry.surface.clone(), lang.clone())),
            );
        } else {
            kept.push(entry.clone());
        }
    }
    let mut entries = kept;
    let mut seen: std::collections::HashSet<TokenEntry> = existing.iter().cloned().collect();
    entries.extend(existing);
    entries.extend(created.into_iter().filter(|e| seen.insert(e.clone())));
    let mut out = Vocabulary::build(entries)?;
    out.fully_separated = true;
    Ok(out)
}
