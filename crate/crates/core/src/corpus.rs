//! Unigram counting over pre-tokenized corpora and add-one-smoothed token
//! distributions.
//!
//! Corpus files hold one sentence per line with tokens separated by a single
//! space. Empty tokens (from repeated spaces) are ignored when counting.

use std::collections::BTreeSet;
use std::io::BufRead;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{check_len, LavsError, Result};
use crate::numeric::compensated_sum;
use crate::vocab::{LanguageId, TokenId, Usage, Vocabulary};

/// What to do with surfaces that are not in the vocabulary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UnkPolicy {
    /// Fail with `UNKNOWN_TOKEN`.
    #[default]
    Strict,
    /// Skip the token and count it in the drop tally.
    Drop,
}

impl FromStr for UnkPolicy {
    type Err = LavsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(UnkPolicy::Strict),
            "drop" => Ok(UnkPolicy::Drop),
            other => Err(LavsError::ConfigInvalid(format!("unknown unk policy {other:?}"))),
        }
    }
}

/// Raw unigram counts of one language over a vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusStats {
    pub lang: LanguageId,
    pub counts: Vec<u64>,
    pub total: u64,
    pub lines: u64,
    /// Tokens skipped under [`UnkPolicy::Drop`].
    pub dropped: u64,
}

impl CorpusStats {
    pub fn empty(lang: LanguageId, vocab: &Vocabulary) -> Self {
        CorpusStats {
            lang,
            counts: vec![0; vocab.len()],
            total: 0,
            lines: 0,
            dropped: 0,
        }
    }

    /// Builds stats from explicit counts.
    pub fn from_counts(lang: LanguageId, counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        CorpusStats {
            lang,
            counts,
            total,
            lines: 0,
            dropped: 0,
        }
    }

    pub fn count(&self, id: TokenId) -> u64 {
        self.counts[id.index()]
    }

    /// Counts one sentence given as token surfaces.
    pub fn add_tokens<'a, I>(&mut self, tokens: I, vocab: &Vocabulary, policy: UnkPolicy) -> Result<()>
    where
        I: IntoIterator<Item = &'a str>,
    {
        check_len(self.counts.len(), vocab.len())?;
        for token in tokens {
            if token.is_empty() {
                continue;
            }
            match vocab.lookup(token) {
                Some(id) => {
                    self.counts[id.index()] += 1;
                    self.total += 1;
                }
                None => match policy {
                    UnkPolicy::Strict => return Err(LavsError::UnknownToken(token.to_string())),
                    UnkPolicy::Drop => self.dropped += 1,
                },
            }
        }
        self.lines += 1;
        Ok(())
    }

    /// Counts one raw corpus line.
    pub fn add_line(&mut self, line: &str, vocab: &Vocabulary, policy: UnkPolicy) -> Result<()> {
        if line.contains('\0') {
            return Err(LavsError::MalformedLine {
                line: self.lines as usize + 1,
                reason: "embedded NUL".into(),
            });
        }
        self.add_tokens(line.split(' '), vocab, policy)
    }

    /// Element-wise sum of two stats over the same vocabulary and language.
    pub fn merge(&mut self, other: &CorpusStats) -> Result<()> {
        check_len(self.counts.len(), other.counts.len())?;
        if self.lang != other.lang {
            return Err(LavsError::ConfigInvalid(format!(
                "cannot merge stats of {} into {}",
                other.lang, self.lang
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.lines += other.lines;
        self.dropped += other.dropped;
        Ok(())
    }

    /// Re-expresses these counts (aligned to `from`) over `to`, moving the
    /// count of each shared token onto this language's specific variant
    /// wherever `to` has one. Equivalent to retagging the corpus and counting
    /// it again against `to`.
    pub fn project_onto(&self, from: &Vocabulary, to: &Vocabulary) -> Result<CorpusStats> {
        check_len(from.len(), self.counts.len())?;
        let mut counts = vec![0u64; to.len()];
        for id in from.ids() {
            let c = self.counts[id.index()];
            let entry = from.entry(id);
            let target = match entry.lang() {
                None => to
                    .specific_id(&entry.surface, &self.lang)
                    .or_else(|| to.shared_id(&entry.surface)),
                Some(lang) => to.specific_id(&entry.surface, lang),
            };
            match target {
                Some(t) => counts[t.index()] += c,
                None if c == 0 => {}
                None => return Err(LavsError::UnknownToken(from.surface(id).to_string())),
            }
        }
        Ok(CorpusStats {
            lang: self.lang.clone(),
            counts,
            total: self.total,
            lines: self.lines,
            dropped: self.dropped,
        })
    }

    /// JSON export: `{"lang", "total", "lines", "counts": [[surface, count], ...]}`
    /// with non-zero counts sorted by descending count, then surface.
    pub fn to_json(&self, vocab: &Vocabulary) -> Result<String> {
        check_len(vocab.len(), self.counts.len())?;
        #[derive(Serialize)]
        struct Export<'a> {
            lang: &'a str,
            total: u64,
            lines: u64,
            counts: Vec<(&'a str, u64)>,
        }
        let mut counts: Vec<(&str, u64)> = vocab
            .ids()
            .filter(|&id| self.count(id) > 0)
            .map(|id| (vocab.surface(id), self.count(id)))
            .collect();
        counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let export = Export {
            lang: self.lang.code(),
            total: self.total,
            lines: self.lines,
            counts,
        };
        Ok(serde_json::to_string_pretty(&export)? + "\n")
    }
}

/// Counts a stream of token sequences.
pub fn ingest_corpus<I, L, S>(
    lines: I,
    lang: &LanguageId,
    vocab: &Vocabulary,
    policy: UnkPolicy,
) -> Result<CorpusStats>
where
    I: IntoIterator<Item = L>,
    L: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut stats = CorpusStats::empty(lang.clone(), vocab);
    for line in lines {
        let tokens: Vec<S> = line.into_iter().collect();
        stats.add_tokens(tokens.iter().map(|t| t.as_ref()), vocab, policy)?;
    }
    Ok(stats)
}

/// Counts a corpus file read line by line.
pub fn ingest_reader<R: BufRead>(
    reader: R,
    lang: &LanguageId,
    vocab: &Vocabulary,
    policy: UnkPolicy,
) -> Result<CorpusStats> {
    let mut stats = CorpusStats::empty(lang.clone(), vocab);
    for line in reader.lines() {
        stats.add_line(&line?, vocab, policy)?;
    }
    Ok(stats)
}

/// Add-one-smoothed unigram distribution of one language.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenDistribution {
    pub lang: LanguageId,
    probs: Vec<f64>,
}

impl TokenDistribution {
    /// Wraps explicit probabilities; they must be positive and sum to one.
    pub fn from_probs(lang: LanguageId, probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(LavsError::Domain(format!("probability {p} is not positive")));
        }
        let sum = compensated_sum(probs.iter().copied());
        if (sum - 1.0).abs() > 1e-9 {
            return Err(LavsError::Domain(format!("probabilities sum to {sum}")));
        }
        Ok(TokenDistribution { lang, probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, id: TokenId) -> f64 {
        self.probs[id.index()]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `p[i] = (count[i] + 1) / (total + |V|)`.
pub fn distribution(stats: &CorpusStats, vocab: &Vocabulary) -> Result<TokenDistribution> {
    check_len(vocab.len(), stats.counts.len())?;
    let denom = stats.total as f64 + vocab.len() as f64;
    let probs = stats
        .counts
        .iter()
        .map(|&c| (c as f64 + 1.0) / denom)
        .collect();
    Ok(TokenDistribution {
        lang: stats.lang.clone(),
        probs,
    })
}

/// Which languages use each shared token (count > `threshold`), in the form
/// [`crate::vocab::split_all`] expects.
pub fn usage_from_stats(vocab: &Vocabulary, stats: &[CorpusStats], threshold: u64) -> Result<Usage> {
    for s in stats {
        check_len(vocab.len(), s.counts.len())?;
    }
    Ok(vocab
        .shared_ids()
        .map(|id| {
            let users: BTreeSet<LanguageId> = stats
                .iter()
                .filter(|s| s.count(id) > threshold)
                .map(|s| s.lang.clone())
                .collect();
            (vocab.entry(id).surface.clone(), users)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::Languages;

    fn setup() -> (Languages, Vocabulary) {
        (
            Languages::new(["en", "fr"]).unwrap(),
            Vocabulary::from_shared(["a", "b"]).unwrap(),
        )
    }

    #[test]
    fn counts_occurrences() {
        let (l, v) = setup();
        let en = l.get("en").unwrap();
        let s = ingest_corpus(vec![vec!["a", "b"], vec!["a"]], en, &v, UnkPolicy::Strict).unwrap();
        assert_eq!(s.counts, vec![2, 1]);
        assert_eq!(s.total, 3);
        assert_eq!(s.lines, 2);
    }

    #[test]
    fn empty_stream() {
        let (l, v) = setup();
        let s = ingest_corpus(Vec::<Vec<&str>>::new(), l.get("en").unwrap(), &v, UnkPolicy::Strict)
            .unwrap();
        assert_eq!(s.counts, vec![0, 0]);
        assert_eq!((s.total, s.lines), (0, 0));
    }

    #[test]
    fn unknown_token_policies() {
        let (l, v) = setup();
        let en = l.get("en").unwrap();
        let err = ingest_corpus(vec![vec!["a", "zzz"]], en, &v, UnkPolicy::Strict).unwrap_err();
        assert!(matches!(&err, LavsError::UnknownToken(t) if t == "zzz"));
        let s = ingest_corpus(vec![vec!["a", "zzz"]], en, &v, UnkPolicy::Drop).unwrap();
        assert_eq!(s.counts, vec![1, 0]);
        assert_eq!(s.dropped, 1);
    }

    #[test]
    fn nul_is_malformed() {
        let (l, v) = setup();
        let err = ingest_reader("a\nb\0\n".as_bytes(), l.get("en").unwrap(), &v, UnkPolicy::Strict)
            .unwrap_err();
        assert!(matches!(err, LavsError::MalformedLine { line: 2, .. }));
    }

    #[test]
    fn reader_skips_empty_tokens() {
        let (l, v) = setup();
        let s = ingest_reader("a  b\n\nb\n".as_bytes(), l.get("en").unwrap(), &v, UnkPolicy::Strict)
            .unwrap();
        assert_eq!(s.counts, vec![1, 2]);
        assert_eq!(s.lines, 3);
    }

    #[test]
    fn add_one_smoothing() {
        let (l, v) = setup();
        let en = l.get("en").unwrap().clone();
        let d = distribution(&CorpusStats::from_counts(en.clone(), vec![3, 1]), &v).unwrap();
        assert_eq!(d.probs(), &[4.0 / 6.0, 2.0 / 6.0]);
        let d = distribution(&CorpusStats::from_counts(en.clone(), vec![0, 0]), &v).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        let v3 = Vocabulary::from_shared(["a", "b", "c"]).unwrap();
        let d = distribution(&CorpusStats::from_counts(en.clone(), vec![0, 0, 6]), &v3).unwrap();
        assert_eq!(d.probs(), &[1.0 / 9.0, 1.0 / 9.0, 7.0 / 9.0]);
        let err = distribution(&CorpusStats::from_counts(en, vec![1]), &v).unwrap_err();
        assert_eq!(err.code(), "SIZE_MISMATCH");
    }

    #[test]
    fn stats_json_sorted_by_count() {
        let l = Languages::new(["en"]).unwrap();
        let v = Vocabulary::from_shared(["b", "a", "c", "d"]).unwrap();
        let s = CorpusStats::from_counts(l.get("en").unwrap().clone(), vec![2, 2, 5, 0]);
        let json: serde_json::Value = serde_json::from_str(&s.to_json(&v).unwrap()).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "lang": "en", "total": 9, "lines": 0,
                "counts": [["c", 5], ["a", 2], ["b", 2]]
            })
        );
    }

    #[test]
    fn projection_moves_counts_to_specific() {
        let l = Languages::new(["en", "fr"]).unwrap();
        let fr = l.get("fr").unwrap().clone();
        let base = Vocabulary::from_shared(["a", "b"]).unwrap();
        let lavs = Vocabulary::parse_text("a\nb\na@@fr\na@@en\n", &l).unwrap();
        let s = CorpusStats::from_counts(fr, vec![3, 4]);
        let p = s.project_onto(&base, &lavs).unwrap();
        assert_eq!(p.counts, vec![0, 4, 3, 0]);
        assert_eq!(p.total, 7);
        // Idempotent once counts sit on the specific entry.
        assert_eq!(p.project_onto(&lavs, &lavs).unwrap(), p);
    }

    #[test]
    fn usage_threshold() {
        let l = Languages::new(["en", "fr"]).unwrap();
        let v = Vocabulary::from_shared(["a", "b"]).unwrap();
        let en = CorpusStats::from_counts(l.get("en").unwrap().clone(), vec![1, 0]);
        let fr = CorpusStats::from_counts(l.get("fr").unwrap().clone(), vec![3, 2]);
        let u = usage_from_stats(&v, &[en.clone(), fr.clone()], 0).unwrap();
        assert_eq!(u["a"].len(), 2);
        assert_eq!(u["b"].len(), 1);
        let u = usage_from_stats(&v, &[en, fr], 1).unwrap();
        assert_eq!(u["a"].len(), 1);
    }
}
