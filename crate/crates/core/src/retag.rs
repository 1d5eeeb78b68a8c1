//! Token-stream rewriting: swap shared tokens for a language's specific
//! variants, and strip tags again after decoding.
//!
//! Lines are split on single spaces with empty pieces preserved, so a
//! retag/detag round trip reproduces the input byte for byte.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::corpus::UnkPolicy;
use crate::error::{LavsError, Result};
use crate::vocab::{split_tag, LanguageId, Vocabulary};

/// Per-language `base surface → tagged surface` map built from the specific
/// entries of a vocabulary.
#[derive(Clone, Debug)]
pub struct RetagMap {
    per_lang: HashMap<LanguageId, HashMap<String, String>>,
    known: HashSet<String>,
    fingerprint: String,
}

impl RetagMap {
    pub fn new(vocab: &Vocabulary) -> Self {
        let mut per_lang: HashMap<LanguageId, HashMap<String, String>> = HashMap::new();
        let mut known = HashSet::with_capacity(vocab.len());
        for id in vocab.ids() {
            let entry = vocab.entry(id);
            if let Some(lang) = entry.lang() {
                per_lang
                    .entry(lang.clone())
                    .or_default()
                    .insert(entry.surface.clone(), vocab.surface(id).to_string());
            }
            known.insert(vocab.surface(id).to_string());
        }
        RetagMap {
            per_lang,
            known,
            fingerprint: vocab.fingerprint(),
        }
    }

    /// Fingerprint of the vocabulary the map was built from.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Tagged surface of `base` for `lang`, if that language has one.
    pub fn get(&self, base: &str, lang: &LanguageId) -> Option<&str> {
        self.per_lang.get(lang)?.get(base).map(String::as_str)
    }

    /// Number of remapped surfaces for `lang`.
    pub fn len_for(&self, lang: &LanguageId) -> usize {
        self.per_lang.get(lang).map_or(0, HashMap::len)
    }

    fn is_known(&self, token: &str, lang: &LanguageId) -> bool {
        self.known.contains(token) || self.get(token, lang).is_some()
    }
}

/// Replaces every token that has a specific variant for `lang`.
pub fn retag_line<'a, S: AsRef<str>>(
    tokens: &'a [S],
    lang: &LanguageId,
    map: &'a RetagMap,
    policy: UnkPolicy,
) -> Result<Vec<&'a str>> {
    let table = map.per_lang.get(lang);
    tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            if let Some(tagged) = table.and_then(|m| m.get(t)) {
                return Ok(tagged.as_str());
            }
            if policy == UnkPolicy::Strict && !t.is_empty() && !map.is_known(t, lang) {
                return Err(LavsError::UnknownToken(t.to_string()));
            }
            Ok(t)
        })
        .collect()
}

/// Strips the language tag from every tagged token.
pub fn detag_line<S: AsRef<str>>(tokens: &[S]) -> Vec<&str> {
    tokens.iter().map(|t| detag_token(t.as_ref())).collect()
}

fn detag_token(token: &str) -> &str {
    split_tag(token).map_or(token, |(base, _)| base)
}

/// Retags one corpus line (tokens separated by single spaces).
pub fn retag_text(line: &str, lang: &LanguageId, map: &RetagMap, policy: UnkPolicy) -> Result<String> {
    let tokens: Vec<&str> = line.split(' ').collect();
    Ok(retag_line(&tokens, lang, map, policy)?.join(" "))
}

pub fn detag_text(line: &str) -> String {
    let tokens: Vec<&str> = line.split(' ').collect();
    detag_line(&tokens).join(" ")
}

const BATCH_LINES: usize = 4096;

fn split_terminator(raw: &str) -> (&str, &str) {
    if let Some(body) = raw.strip_suffix("\r\n") {
        (body, "\r\n")
    } else if let Some(body) = raw.strip_suffix('\n') {
        (body, "\n")
    } else {
        (raw, "")
    }
}

/// Applies `f` to each line of `reader` and writes results in input order.
/// Line terminators are carried over unchanged; batches of lines are
/// transformed in parallel. Returns the number of lines written.
pub fn transform_lines<R, W, F>(mut reader: R, mut writer: W, f: F) -> Result<u64>
where
    R: BufRead,
    W: Write,
    F: Fn(&str) -> Result<String> + Sync,
{
    let mut lines_done = 0u64;
    let mut batch: Vec<String> = Vec::with_capacity(BATCH_LINES);
    loop {
        batch.clear();
        let mut eof = false;
        while batch.len() < BATCH_LINES {
            let mut raw = String::new();
            if reader.read_line(&mut raw)? == 0 {
                eof = true;
                break;
            }
            batch.push(raw);
        }
        let out: Vec<String> = batch
            .par_iter()
            .enumerate()
            .map(|(i, raw)| {
                let (body, term) = split_terminator(raw);
                if body.contains('\0') {
                    return Err(LavsError::MalformedLine {
                        line: lines_done as usize + i + 1,
                        reason: "embedded NUL".into(),
                    });
                }
                let mut s = f(body)?;
                s.push_str(term);
                Ok(s)
            })
            .collect::<Result<_>>()?;
        for s in &out {
            writer.write_all(s.as_bytes())?;
        }
        lines_done += out.len() as u64;
        if eof {
            break;
        }
    }
    writer.flush()?;
    Ok(lines_done)
}

pub fn retag_stream<R: BufRead, W: Write>(
    reader: R,
    writer: W,
    lang: &LanguageId,
    map: &RetagMap,
    policy: UnkPolicy,
) -> Result<u64> {
    transform_lines(reader, writer, |line| retag_text(line, lang, map, policy))
}

pub fn detag_stream<R: BufRead, W: Write>(reader: R, writer: W) -> Result<u64> {
    transform_lines(reader, writer, |line| Ok(detag_text(line)))
}
