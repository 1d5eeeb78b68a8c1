//! Greedy selection of shared tokens to split into language-specific ones.
//!
//! Every (token, language pair) candidate is scored by the smaller of the two
//! languages' probabilities for the token. Candidates are consumed in
//! descending score; each contributes the token's specific entries for both
//! languages, skipping entries already realized, until the budget of new
//! entries is met exactly.
//!
//! Ties are broken by ascending language indices, then ascending token
//! surface, so the plan is a pure function of its inputs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::io::BufRead;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{distribution, ingest_reader, CorpusStats, TokenDistribution, UnkPolicy};
use crate::error::{check_len, LavsError, Result};
use crate::numeric::round_export;
use crate::vocab::{LanguageId, TokenEntry, TokenId, Vocabulary};

#[derive(Clone, Debug, PartialEq)]
pub struct SplitCandidate {
    /// `min(P_a(token), P_b(token))`.
    pub freq: f64,
    pub lang_a: LanguageId,
    pub lang_b: LanguageId,
    pub token: TokenId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitPlan {
    pub budget: usize,
    /// Consumed candidates in selection order.
    pub selections: Vec<SplitCandidate>,
    /// New specific entries `(base token, language)` in creation order.
    pub realized: Vec<(TokenId, LanguageId)>,
    vocab_fingerprint: String,
}

impl SplitPlan {
    pub fn vocab_fingerprint(&self) -> &str {
        &self.vocab_fingerprint
    }

    /// JSON export of selections and realized entries.
    pub fn to_json(&self, vocab: &Vocabulary) -> Result<String> {
        if vocab.fingerprint() != self.vocab_fingerprint {
            return Err(LavsError::PlanMismatch("vocabulary fingerprint differs".into()));
        }
        #[derive(Serialize)]
        struct Selection<'a> {
            surface: &'a str,
            lang_a: &'a str,
            lang_b: &'a str,
            freq: f64,
        }
        #[derive(Serialize)]
        struct Export<'a> {
            budget: usize,
            selections: Vec<Selection<'a>>,
            realized: Vec<(&'a str, &'a str)>,
        }
        let export = Export {
            budget: self.budget,
            selections: self
                .selections
                .iter()
                .map(|c| Selection {
                    surface: vocab.surface(c.token),
                    lang_a: c.lang_a.code(),
                    lang_b: c.lang_b.code(),
                    freq: round_export(c.freq),
                })
                .collect(),
            realized: self
                .realized
                .iter()
                .map(|(t, l)| (vocab.surface(*t), l.code()))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&export)? + "\n")
    }
}

/// Scored candidate with a precomputed surface rank for cheap comparisons.
#[derive(Clone, Copy, Debug)]
struct Ranked {
    freq: f64,
    a: usize,
    b: usize,
    token: TokenId,
    surface_rank: u32,
}

impl Ranked {
    /// `Less` means `self` is consumed first.
    fn selection_cmp(&self, other: &Self) -> Ordering {
        other
            .freq
            .total_cmp(&self.freq)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
            .then(self.surface_rank.cmp(&other.surface_rank))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.selection_cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Max-heap order puts the candidate consumed last on top, ready for eviction.
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.selection_cmp(other)
    }
}

/// Keeps the `cap` earliest-consumed candidates of a stream.
struct BoundedQueue {
    heap: BinaryHeap<Ranked>,
    cap: usize,
}

impl BoundedQueue {
    fn new(cap: usize) -> Self {
        BoundedQueue {
            heap: BinaryHeap::with_capacity(cap.saturating_add(1).min(1 << 20)),
            cap,
        }
    }

    fn push(&mut self, item: Ranked) {
        if self.heap.len() < self.cap {
            self.heap.push(item);
        } else if let Some(mut worst) = self.heap.peek_mut() {
            if item < *worst {
                *worst = item;
            }
        }
    }

    fn merge(mut self, other: BoundedQueue) -> Self {
        for item in other.heap {
            self.push(item);
        }
        self
    }

    fn into_sorted(self) -> Vec<Ranked> {
        self.heap.into_sorted_vec()
    }
}

/// Validated view of the inputs: positions of the distributions in language
/// order plus the surface rank of every token.
struct Prepared<'a> {
    dists: Vec<&'a TokenDistribution>,
    shared: Vec<TokenId>,
    surface_rank: Vec<u32>,
}

fn prepare<'a>(vocab: &Vocabulary, dists: &'a [TokenDistribution]) -> Result<Prepared<'a>> {
    if dists.len() < 2 {
        return Err(LavsError::TooFewLanguages(dists.len()));
    }
    for d in dists {
        check_len(vocab.len(), d.len())?;
    }
    let mut ordered: Vec<&TokenDistribution> = dists.iter().collect();
    ordered.sort_by_key(|d| d.lang.index());
    for w in ordered.windows(2) {
        if w[0].lang == w[1].lang {
            return Err(LavsError::DuplicateLanguage(w[0].lang.code().to_string()));
        }
    }
    if let Some(id) = vocab.ids().find(|&id| vocab.entry(id).lang().is_some()) {
        return Err(LavsError::NotShared(vocab.surface(id).to_string()));
    }
    let shared: Vec<TokenId> = vocab.ids().collect();
    let mut by_surface = shared.clone();
    by_surface.sort_by(|x, y| vocab.surface(*x).cmp(vocab.surface(*y)));
    let mut surface_rank = vec![0u32; vocab.len()];
    for (rank, id) in by_surface.iter().enumerate() {
        surface_rank[id.index()] = rank as u32;
    }
    Ok(Prepared {
        dists: ordered,
        shared,
        surface_rank,
    })
}

impl Prepared<'_> {
    fn candidates_of(&self, token: TokenId) -> impl Iterator<Item = Ranked> + '_ {
        let n = self.dists.len();
        let rank = self.surface_rank[token.index()];
        (0..n).flat_map(move |a| {
            (a + 1..n).map(move |b| Ranked {
                freq: self.dists[a].prob(token).min(self.dists[b].prob(token)),
                a,
                b,
                token,
                surface_rank: rank,
            })
        })
    }

    fn candidate(&self, r: &Ranked) -> SplitCandidate {
        SplitCandidate {
            freq: r.freq,
            lang_a: self.dists[r.a].lang.clone(),
            lang_b: self.dists[r.b].lang.clone(),
            token: r.token,
        }
    }
}

/// Every candidate in enumeration order: tokens by id, then language pairs.
/// Candidates are generated lazily.
pub fn enumerate_candidates<'a>(
    vocab: &'a Vocabulary,
    dists: &'a [TokenDistribution],
) -> Result<impl Iterator<Item = SplitCandidate> + 'a> {
    let Prepared {
        dists: ordered,
        shared,
        ..
    } = prepare(vocab, dists)?;
    let n = ordered.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    Ok(shared.into_iter().flat_map(move |token| {
        let ordered = ordered.clone();
        pairs.clone().into_iter().map(move |(a, b)| SplitCandidate {
            freq: ordered[a].prob(token).min(ordered[b].prob(token)),
            lang_a: ordered[a].lang.clone(),
            lang_b: ordered[b].lang.clone(),
            token,
        })
    }))
}

/// Largest budget the greedy rule can satisfy.
pub fn max_budget(vocab: &Vocabulary, languages: usize) -> usize {
    vocab.base_size() * languages
}

/// Runs the greedy selection for `budget` new language-specific entries.
///
/// Only a bounded prefix of the candidate order is kept in memory: each
/// consumed candidate either realizes an entry or pairs two languages whose
/// entries for that token already exist, so at most `budget·(|L|+1)/2`
/// candidates are ever consumed.
pub fn select_splits(
    vocab: &Vocabulary,
    dists: &[TokenDistribution],
    budget: usize,
) -> Result<SplitPlan> {
    let prep = prepare(vocab, dists)?;
    let langs = prep.dists.len();
    let max = max_budget(vocab, langs);
    if budget > max {
        return Err(LavsError::BudgetUnreachable { budget, max });
    }
    let cap = budget.saturating_mul(langs + 1).div_ceil(2);
    let queue = if cap == 0 {
        BoundedQueue::new(0)
    } else {
        prep.shared
            .par_chunks(4096)
            .map(|chunk| {
                let mut q = BoundedQueue::new(cap);
                for &t in chunk {
                    for r in prep.candidates_of(t) {
                        q.push(r);
                    }
                }
                q
            })
            .reduce(|| BoundedQueue::new(cap), BoundedQueue::merge)
    };

    let mut selections = Vec::new();
    let mut realized = Vec::with_capacity(budget);
    let mut seen = HashSet::with_capacity(budget);
    for r in queue.into_sorted() {
        if realized.len() == budget {
            break;
        }
        for pos in [r.a, r.b] {
            if realized.len() < budget && seen.insert((r.token, pos)) {
                realized.push((r.token, prep.dists[pos].lang.clone()));
            }
        }
        selections.push(prep.candidate(&r));
    }
    if realized.len() < budget {
        return Err(LavsError::BudgetUnreachable { budget, max });
    }
    Ok(SplitPlan {
        budget,
        selections,
        realized,
        vocab_fingerprint: vocab.fingerprint(),
    })
}

/// Appends the plan's realized entries to the vocabulary it was built from.
pub fn apply_splits(vocab: &Vocabulary, plan: &SplitPlan) -> Result<Vocabulary> {
    if vocab.fingerprint() != plan.vocab_fingerprint {
        return Err(LavsError::PlanMismatch("vocabulary fingerprint differs".into()));
    }
    if plan.realized.len() != plan.budget {
        return Err(LavsError::PlanMismatch(format!(
            "{} realized entries for budget {}",
            plan.realized.len(),
            plan.budget
        )));
    }
    let mut entries = vocab.entries().to_vec();
    for (token, lang) in &plan.realized {
        let base = vocab
            .entries()
            .get(token.index())
            .filter(|e| e.lang().is_none())
            .ok_or_else(|| LavsError::PlanMismatch(format!("token {} is not shared", token.0)))?;
        entries.push(TokenEntry::specific(base.surface.clone(), lang.clone()));
    }
    Vocabulary::new(entries).map_err(|e| match e {
        LavsError::DuplicateEntry(s) => LavsError::PlanMismatch(format!("duplicate entry {s}")),
        other => other,
    })
}

/// Result of the end-to-end pipeline.
#[derive(Clone, Debug)]
pub struct LavsOutput {
    pub vocab: Vocabulary,
    pub plan: SplitPlan,
    pub stats: Vec<CorpusStats>,
}

/// Ingest, smooth, select and apply in one call. Corpora are counted in
/// parallel.
pub fn lavs<R>(
    vocab: &Vocabulary,
    corpora: Vec<(LanguageId, R)>,
    budget: usize,
    policy: UnkPolicy,
) -> Result<LavsOutput>
where
    R: BufRead + Send,
{
    let stats: Vec<CorpusStats> = corpora
        .into_par_iter()
        .map(|(lang, reader)| ingest_reader(reader, &lang, vocab, policy))
        .collect::<Result<_>>()?;
    let dists = stats
        .iter()
        .map(|s| distribution(s, vocab))
        .collect::<Result<Vec<_>>>()?;
    let plan = select_splits(vocab, &dists, budget)?;
    let out = apply_splits(vocab, &plan)?;
    Ok(LavsOutput {
        vocab: out,
        plan,
        stats,
    })
}
