//! Independent oracles and fixture generators shared by the integration
//! suites. Nothing here calls the library's numeric routines; probabilities
//! and divergences are recomputed directly from counts.

#![allow(dead_code)]

use std::collections::HashSet;

use lavs::corpus::CorpusStats;
use lavs::vocab::{LanguageId, Languages, TokenEntry, TokenId, Vocabulary};
use lavs::TokenDistribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Add-one smoothing written out by hand.
pub fn smoothed(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let denom = (total + counts.len() as u64) as f64;
    counts.iter().map(|&c| (c + 1) as f64 / denom).collect()
}

/// Correctly rounded sum using Shewchuk's exact partials.
pub fn exact_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in xs {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    partials.iter().rev().fold(0.0, |acc, &p| acc + p)
}

/// `Σ p ln(p/q)` term by term, summed exactly.
pub fn naive_kl(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    exact_sum((0..p.len()).map(|i| p[i] * (p[i] / q[i]).ln()))
}

/// The same terms accumulated in a plain `f64` loop.
pub fn plain_loop_kl(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += p[i] * (p[i] / q[i]).ln();
    }
    s
}

/// Mean of KL over every ordered pair (diagonal included).
pub fn naive_objective(counts: &[Vec<u64>]) -> f64 {
    let probs: Vec<Vec<f64>> = counts.iter().map(|c| smoothed(c)).collect();
    let mut s = 0.0;
    for a in &probs {
        for b in &probs {
            s += naive_kl(a, b);
        }
    }
    s / (probs.len() * probs.len()) as f64
}

/// Textbook single-pass Pearson formula.
pub fn direct_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// One brute-force selection result.
#[derive(Debug, PartialEq)]
pub struct OraclePlan {
    /// `(surface, lang_a, lang_b)` of consumed candidates.
    pub consumed: Vec<(String, String, String)>,
    pub realized: Vec<(String, String)>,
}

/// Materializes every candidate, sorts them all and replays the
/// dedup-and-stop rule.
pub fn brute_force_select(
    vocab: &Vocabulary,
    dists: &[TokenDistribution],
    budget: usize,
) -> OraclePlan {
    let mut ordered: Vec<&TokenDistribution> = dists.iter().collect();
    ordered.sort_by_key(|d| d.lang.index());
    let mut all = Vec::new();
    for id in vocab.ids() {
        let surface = vocab.surface(id).to_string();
        for a in 0..ordered.len() {
            for b in a + 1..ordered.len() {
                let freq = ordered[a].prob(id).min(ordered[b].prob(id));
                all.push((freq, ordered[a].lang.clone(), ordered[b].lang.clone(), surface.clone()));
            }
        }
    }
    all.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap()
            .then(x.1.index().cmp(&y.1.index()))
            .then(x.2.index().cmp(&y.2.index()))
            .then(x.3.cmp(&y.3))
    });
    let mut consumed = Vec::new();
    let mut realized = Vec::new();
    let mut seen = HashSet::new();
    for (_, a, b, surface) in all {
        if realized.len() == budget {
            break;
        }
        for l in [&a, &b] {
            if realized.len() < budget && seen.insert((surface.clone(), l.code().to_string())) {
                realized.push((surface.clone(), l.code().to_string()));
            }
        }
        consumed.push((surface, a.code().to_string(), b.code().to_string()));
    }
    OraclePlan { consumed, realized }
}

/// Random surface from a small alphabet that includes multi-byte letters
/// and a lone `@`.
pub fn random_surface(rng: &mut impl Rng) -> String {
    const ALPHABET: &[&str] = &["a", "b", "e", "n", "s", "t", "▁", "é", "ß", "ж", "@", "1", "-"];
    loop {
        let len = rng.gen_range(1..=6);
        let s: String = (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect();
        if !s.contains("@@") && !s.ends_with('@') {
            return s;
        }
    }
}

/// `n` distinct random surfaces in random order.
pub fn random_surfaces(rng: &mut impl Rng, n: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = random_surface(rng);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

pub fn language_codes(n: usize) -> Vec<String> {
    ["cs", "de", "fr", "fi", "lv", "et", "ro", "hi", "tr", "gu", "en"][..n]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Counts with many zeros and small values so that frequency ties occur.
pub fn tie_heavy_counts(rng: &mut impl Rng, n: usize) -> Vec<u64> {
    (0..n)
        .map(|_| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(0..6) })
        .collect()
}

pub fn dists_from_counts(
    vocab: &Vocabulary,
    langs: &Languages,
    counts: &[Vec<u64>],
) -> Vec<TokenDistribution> {
    langs
        .iter()
        .zip(counts)
        .map(|(l, c)| lavs::distribution(&CorpusStats::from_counts(l.clone(), c.clone()), vocab).unwrap())
        .collect()
}

/// Vocabulary with a random subset of tokens given specific entries.
pub fn random_lavs_vocab(rng: &mut impl Rng, langs: &Languages, shared: usize) -> Vocabulary {
    let surfaces = random_surfaces(rng, shared);
    let mut entries: Vec<TokenEntry> = surfaces.iter().map(TokenEntry::shared).collect();
    for s in &surfaces {
        for l in langs.iter() {
            if rng.gen_bool(0.3) {
                entries.push(TokenEntry::specific(s.clone(), l.clone()));
            }
        }
    }
    Vocabulary::new(entries).unwrap()
}

/// A line over the shared part of `vocab`, occasionally with empty pieces
/// from doubled spaces.
pub fn random_line(rng: &mut impl Rng, vocab: &Vocabulary) -> String {
    let shared: Vec<TokenId> = vocab.shared_ids().collect();
    let n = rng.gen_range(0..20);
    let mut parts = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.gen_bool(0.05) {
            parts.push(String::new());
        } else {
            parts.push(vocab.surface(*shared.choose(rng).unwrap()).to_string());
        }
    }
    parts.join(" ")
}

/// Synthetic corpora: each language draws from a Zipf-like law over a
/// language-specific permutation of a common vocabulary, so every pair
/// shares some frequent tokens.
pub struct CorpusFixture {
    pub langs: Languages,
    pub vocab: Vocabulary,
    pub corpora: Vec<(LanguageId, String)>,
}

pub fn corpus_fixture(seed: u64, n_langs: usize, n_tokens: usize, n_lines: usize) -> CorpusFixture {
    let mut r = rng(seed);
    let langs = Languages::new(language_codes(n_langs)).unwrap();
    let surfaces = random_surfaces(&mut r, n_tokens);
    let vocab = Vocabulary::from_shared(&surfaces).unwrap();
    let weights: Vec<f64> = (1..=n_tokens).map(|k| 1.0 / k as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut corpora = Vec::new();
    for l in langs.iter() {
        let mut order: Vec<usize> = (0..n_tokens).collect();
        // Partial shuffle keeps a common head while making the tails differ.
        for i in 0..n_tokens {
            if r.gen_bool(0.6) {
                let j = r.gen_range(0..n_tokens);
                order.swap(i, j);
            }
        }
        let mut text = String::new();
        for _ in 0..n_lines {
            let len = r.gen_range(3..15);
            let mut parts = Vec::with_capacity(len);
            for _ in 0..len {
                let mut u = r.gen::<f64>() * total;
                let mut k = 0;
                while k + 1 < n_tokens && u > weights[k] {
                    u -= weights[k];
                    k += 1;
                }
                parts.push(surfaces[order[k]].as_str());
            }
            text.push_str(&parts.join(" "));
            text.push('\n');
        }
        corpora.push((l.clone(), text));
    }
    CorpusFixture {
        langs,
        vocab,
        corpora,
    }
}
