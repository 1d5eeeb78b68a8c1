//! KL divergence between token distributions, the pairwise matrix, the mean
//! pairwise divergence objective and the closed-form split increment.
//!
//! All logarithms are natural, so values are in nats. Every sum runs over
//! ascending token ids with compensated accumulation, which makes results
//! independent of how pairs are scheduled across threads.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenDistribution;
use crate::error::{check_len, LavsError, Result};
use crate::numeric::{fmt_export, round_export, KahanSum};
use crate::vocab::{LanguageId, Languages, TokenId, Vocabulary};

/// `D_KL(a ‖ b) = Σ_x a(x) ln(a(x) / b(x))`.
pub fn kl(a: &TokenDistribution, b: &TokenDistribution) -> Result<f64> {
    check_len(a.len(), b.len())?;
    if std::ptr::eq(a, b) || a.probs() == b.probs() {
        return Ok(0.0);
    }
    let mut acc = KahanSum::new();
    for (&p, &q) in a.probs().iter().zip(b.probs()) {
        acc.add(p * (p / q).ln());
    }
    // Rounding can leave a tiny negative value for near-identical inputs.
    Ok(acc.value().max(0.0))
}

/// Square matrix of `D_KL(row ‖ column)` in nats.
#[derive(Clone, Debug, PartialEq)]
pub struct KlMatrix {
    pub langs: Vec<LanguageId>,
    pub values: Vec<Vec<f64>>,
}

impl KlMatrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row][col]
    }

    pub fn position(&self, code: &str) -> Option<usize> {
        self.langs.iter().position(|l| l.code() == code)
    }

    /// Mean over all ordered pairs, diagonal included.
    pub fn mean(&self) -> f64 {
        let n = self.langs.len();
        if n == 0 {
            return 0.0;
        }
        let sum: KahanSum = self.values.iter().flatten().copied().collect();
        sum.value() / (n * n) as f64
    }

    /// CSV with a header row and first column of language codes.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for l in &self.langs {
            out.push(',');
            out.push_str(l.code());
        }
        out.push('\n');
        for (l, row) in self.langs.iter().zip(&self.values) {
            out.push_str(l.code());
            for v in row {
                out.push(',');
                out.push_str(&fmt_export(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let export = KlMatrixJson {
            langs: self.langs.iter().map(|l| l.code().to_string()).collect(),
            values: self
                .values
                .iter()
                .map(|r| r.iter().map(|v| round_export(*v)).collect())
                .collect(),
            objective: Some(round_export(self.mean())),
        };
        serde_json::to_string_pretty(&export).expect("matrix serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: KlMatrixJson = serde_json::from_str(text)?;
        let langs = Languages::new(&raw.langs)?;
        let n = langs.len();
        check_len(n, raw.values.len())?;
        for row in &raw.values {
            check_len(n, row.len())?;
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(LavsError::Domain("KL values must be finite and non-negative".into()));
            }
        }
        Ok(KlMatrix {
            langs: langs.iter().cloned().collect(),
            values: raw.values,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct KlMatrixJson {
    langs: Vec<String>,
    values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
}

fn check_aligned(dists: &[TokenDistribution]) -> Result<()> {
    if let Some(first) = dists.first() {
        for d in dists {
            check_len(first.len(), d.len())?;
        }
    }
    Ok(())
}

/// `values[m][n] = kl(dists[m], dists[n])`; pairs are evaluated in parallel.
pub fn pairwise_kl(dists: &[TokenDistribution]) -> Result<KlMatrix> {
    check_aligned(dists)?;
    let n = dists.len();
    let flat: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (m, j) = (k / n, k % n);
            if m == j {
                Ok(0.0)
            } else {
                kl(&dists[m], &dists[j])
            }
        })
        .collect::<Result<_>>()?;
    Ok(KlMatrix {
        langs: dists.iter().map(|d| d.lang.clone()).collect(),
        values: flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect(),
    })
}

/// Mean pairwise divergence `(1/|L|²) Σ_m Σ_n D_KL(P_m ‖ P_n)`.
pub fn objective(vocab: &Vocabulary, dists: &[TokenDistribution]) -> Result<f64> {
    for d in dists {
        check_len(vocab.len(), d.len())?;
    }
    Ok(pairwise_kl(dists)?.mean())
}

/// Increment of the pairwise divergence when one shared token is split for
/// a language pair, up to the smoothing constant λ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitIncrement {
    pub token: Option<TokenId>,
    pub j_prob: f64,
    pub q_prob: f64,
    /// `(J − Q) · ln(Q / J)`; never positive.
    pub first_term: f64,
}

impl SplitIncrement {
    /// The smoothing constant is kept symbolic.
    pub const LAMBDA: &'static str = "λ";
}

impl fmt::Display for SplitIncrement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}", self.first_term, Self::LAMBDA)
    }
}

pub fn delta_kl_closed_form(j_prob: f64, q_prob: f64) -> Result<SplitIncrement> {
    for p in [j_prob, q_prob] {
        if !(p > 0.0 && p < 1.0) {
            return Err(LavsError::Domain(format!("probability {p} outside (0, 1)")));
        }
    }
    // Evaluated on the ordered pair so that swapping J and Q is bit-exact.
    let (lo, hi) = if j_prob <= q_prob { (j_prob, q_prob) } else { (q_prob, j_prob) };
    let first_term = if lo == hi { 0.0 } else { -((hi - lo) * (hi / lo).ln()) };
    Ok(SplitIncrement {
        token: None,
        j_prob,
        q_prob,
        first_term,
    })
}

/// Closed-form increment for splitting `token` between two distributions.
pub fn split_increment(
    token: TokenId,
    j: &TokenDistribution,
    q: &TokenDistribution,
) -> Result<SplitIncrement> {
    check_len(j.len(), q.len())?;
    let mut inc = delta_kl_closed_form(j.prob(token), q.prob(token))?;
    inc.token = Some(token);
    Ok(inc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{distribution, CorpusStats};

    fn fixture() -> (Vocabulary, Vec<TokenDistribution>) {
        let l = Languages::new(["a", "b"]).unwrap();
        let v = Vocabulary::from_shared(["x", "y"]).unwrap();
        let da = distribution(&CorpusStats::from_counts(l.get("a").unwrap().clone(), vec![3, 1]), &v)
            .unwrap();
        let db = distribution(&CorpusStats::from_counts(l.get("b").unwrap().clone(), vec![1, 3]), &v)
            .unwrap();
        (v, vec![da, db])
    }

    // Two-term oracle: (2/3) ln 2 + (1/3) ln(1/2) = ln 2 / 3.
    const LN2_OVER_3: f64 = 0.231_049_060_186_648_44;

    #[test]
    fn kl_two_token_fixture() {
        let (_, d) = fixture();
        assert!((kl(&d[0], &d[1]).unwrap() - LN2_OVER_3).abs() < 1e-15);
        assert_eq!(kl(&d[0], &d[0]).unwrap(), 0.0);
    }

    #[test]
    fn uniform_distributions_have_zero_divergence() {
        let l = Languages::new(["a", "b"]).unwrap();
        let u = |c: &str| {
            TokenDistribution::from_probs(l.get(c).unwrap().clone(), vec![0.25; 4]).unwrap()
        };
        assert_eq!(kl(&u("a"), &u("b")).unwrap(), 0.0);
    }

    #[test]
    fn pairwise_and_objective() {
        let (v, d) = fixture();
        let m = pairwise_kl(&d).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
        assert!((m.get(0, 1) - LN2_OVER_3).abs() < 1e-15);
        assert!((m.get(1, 0) - LN2_OVER_3).abs() < 1e-15);
        let obj = objective(&v, &d).unwrap();
        assert!((obj - LN2_OVER_3 / 2.0).abs() < 1e-15);
        let rev: Vec<_> = d.iter().rev().cloned().collect();
        assert!((objective(&v, &rev).unwrap() - obj).abs() < 1e-15);
    }

    #[test]
    fn identical_distributions_give_zero_matrix() {
        let (v, d) = fixture();
        let same = vec![d[0].clone(), d[0].clone()];
        assert_eq!(pairwise_kl(&same).unwrap().values, vec![vec![0.0; 2]; 2]);
        assert_eq!(objective(&v, &same).unwrap(), 0.0);
    }

    #[test]
    fn size_mismatch() {
        let (_, d) = fixture();
        let l = Languages::new(["c"]).unwrap();
        let other =
            TokenDistribution::from_probs(l.get("c").unwrap().clone(), vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(kl(&d[0], &other).unwrap_err().code(), "SIZE_MISMATCH");
        assert_eq!(
            pairwise_kl(&[d[0].clone(), other]).unwrap_err().code(),
            "SIZE_MISMATCH"
        );
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(delta_kl_closed_form(0.2, 0.2).unwrap().first_term, 0.0);
        let inc = delta_kl_closed_form(0.4, 0.1).unwrap();
        assert!((inc.first_term - 0.3 * 0.25f64.ln()).abs() < 1e-15);
        assert!((inc.first_term + 0.415_888_308_335_967).abs() < 1e-12);
        assert_eq!(
            delta_kl_closed_form(0.1, 0.4).unwrap().first_term,
            inc.first_term
        );
        assert_eq!(delta_kl_closed_form(0.0, 0.4).unwrap_err().code(), "DOMAIN");
        assert_eq!(delta_kl_closed_form(0.3, 1.0).unwrap_err().code(), "DOMAIN");
        assert!(inc.to_string().ends_with("+ λ"));
    }

    #[test]
    fn csv_and_json_exports() {
        let (_, d) = fixture();
        let m = pairwise_kl(&d).unwrap();
        let csv = m.to_csv();
        assert_eq!(csv, ",a,b\na,0,0.231049060187\nb,0.231049060187,0\n");
        let back = KlMatrix::from_json(&m.to_json()).unwrap();
        assert_eq!(back.langs.len(), 2);
        assert!((back.get(0, 1) - m.get(0, 1)).abs() < 1e-12);
    }
}
