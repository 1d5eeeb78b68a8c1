//! Off-target analytics over externally detected output languages: per
//! direction rates, resource-tier aggregates, where off-target outputs go,
//! and the correlation between lexical divergence and off-target rate.
//!
//! Detection records come from a TSV file, `src<TAB>tgt<TAB>detected`, with
//! an optional fourth `copied` column (`1`/`true`) marking outputs that copy
//! the source sentence; those are folded into `detected = src`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::divergence::KlMatrix;
use crate::error::{LavsError, Result};
use crate::numeric::{compensated_sum, fmt_export, mean, round_export, sample_sd};
use crate::vocab::{is_valid_language_code, LanguageId, Languages, OTHER_CODE};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Detected {
    Lang(LanguageId),
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionRecord {
    pub src: LanguageId,
    pub tgt: LanguageId,
    pub detected: Detected,
}

impl DetectionRecord {
    pub fn is_off_target(&self) -> bool {
        self.detected != Detected::Lang(self.tgt.clone())
    }
}

/// Parsed detection file plus the languages it mentions.
#[derive(Clone, Debug)]
pub struct DetectionTable {
    pub langs: Languages,
    pub records: Vec<DetectionRecord>,
}

impl DetectionTable {
    /// Parses detection TSV. Languages are indexed in `seed` order first,
    /// then in order of first appearance.
    pub fn parse_tsv(text: &str, seed: &[String]) -> Result<Self> {
        let mut langs = Languages::new(seed)?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let malformed = |reason: String| LavsError::MalformedLine {
                line: lineno,
                reason,
            };
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 && cols.len() != 4 {
                return Err(malformed(format!("expected 3 or 4 columns, got {}", cols.len())));
            }
            let mut lang = |code: &str| -> Result<LanguageId> {
                if !is_valid_language_code(code) || code == OTHER_CODE {
                    return Err(malformed(format!("invalid language code {code:?}")));
                }
                langs.push(code)
            };
            let src = lang(cols[0])?;
            let tgt = lang(cols[1])?;
            if src == tgt {
                return Err(malformed(format!("source equals target ({src})")));
            }
            let copied = match cols.get(3).map(|s| s.trim()) {
                None | Some("") | Some("0") | Some("false") => false,
                Some("1") | Some("true") => true,
                Some(other) => return Err(malformed(format!("bad copied flag {other:?}"))),
            };
            let detected = if copied {
                Detected::Lang(src.clone())
            } else if cols[2] == OTHER_CODE {
                Detected::Other
            } else {
                Detected::Lang(lang(cols[2])?)
            };
            records.push(DetectionRecord { src, tgt, detected });
        }
        Ok(DetectionTable { langs, records })
    }
}

/// Fraction of records whose detected language differs from the target.
pub fn otr(records: &[DetectionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(LavsError::EmptyDirection {
            src: "?".into(),
            tgt: "?".into(),
        });
    }
    let off = records.iter().filter(|r| r.is_off_target()).count();
    Ok(off as f64 / records.len() as f64)
}

/// Off-target rates per (source, target) direction.
#[derive(Clone, Debug, PartialEq)]
pub struct OtrMatrix {
    /// Languages seen as source or target, in language-list order.
    pub langs: Vec<LanguageId>,
    pub counts: Vec<Vec<u64>>,
    pub off_target: Vec<Vec<u64>>,
    /// Whether a direction counts as zero-shot (neither side is the pivot).
    pub zero_shot: Vec<Vec<bool>>,
}

impl OtrMatrix {
    pub fn position(&self, code: &str) -> Option<usize> {
        self.langs.iter().position(|l| l.code() == code)
    }

    /// Rate of a direction, if it has records.
    pub fn rate(&self, src: usize, tgt: usize) -> Option<f64> {
        let n = self.counts[src][tgt];
        (n > 0).then(|| self.off_target[src][tgt] as f64 / n as f64)
    }

    /// Zero-shot directions that have records, as `(src, tgt, rate)`.
    pub fn zero_shot_cells(&self) -> Vec<(usize, usize, f64)> {
        let n = self.langs.len();
        let mut out = Vec::new();
        for s in 0..n {
            for t in 0..n {
                if self.zero_shot[s][t] {
                    if let Some(r) = self.rate(s, t) {
                        out.push((s, t, r));
                    }
                }
            }
        }
        out
    }

    /// Unweighted mean over zero-shot directions.
    pub fn grand_mean(&self) -> Option<f64> {
        let rates: Vec<f64> = self.zero_shot_cells().iter().map(|c| c.2).collect();
        mean(&rates)
    }

    /// Pooled rate over all zero-shot records (count-weighted mean).
    pub fn pooled_rate(&self) -> Option<f64> {
        let (mut off, mut total) = (0u64, 0u64);
        for (s, t, _) in self.zero_shot_cells() {
            off += self.off_target[s][t];
            total += self.counts[s][t];
        }
        (total > 0).then(|| off as f64 / total as f64)
    }

    /// Unweighted mean rate of each source over its zero-shot targets.
    pub fn source_means(&self) -> Vec<(LanguageId, Option<f64>)> {
        self.line_means(|s, _| s)
    }

    /// Unweighted mean rate of each target over its zero-shot sources.
    pub fn target_means(&self) -> Vec<(LanguageId, Option<f64>)> {
        self.line_means(|_, t| t)
    }

    fn line_means(&self, key: impl Fn(usize, usize) -> usize) -> Vec<(LanguageId, Option<f64>)> {
        let mut buckets = vec![Vec::new(); self.langs.len()];
        for (s, t, r) in self.zero_shot_cells() {
            buckets[key(s, t)].push(r);
        }
        self.langs
            .iter()
            .cloned()
            .zip(buckets.iter().map(|b| mean(b)))
            .collect()
    }

    /// CSV of rates, rows = source, columns = target, empty where no data.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for l in &self.langs {
            out.push(',');
            out.push_str(l.code());
        }
        out.push('\n');
        for (s, l) in self.langs.iter().enumerate() {
            out.push_str(l.code());
            for t in 0..self.langs.len() {
                out.push(',');
                if let Some(r) = self.rate(s, t) {
                    out.push_str(&fmt_export(r));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Export<'a> {
            langs: Vec<&'a str>,
            values: Vec<Vec<Option<f64>>>,
            counts: &'a [Vec<u64>],
            zero_shot: &'a [Vec<bool>],
            grand_mean: Option<f64>,
            pooled_rate: Option<f64>,
        }
        let n = self.langs.len();
        let export = Export {
            langs: self.langs.iter().map(|l| l.code()).collect(),
            values: (0..n)
                .map(|s| (0..n).map(|t| self.rate(s, t).map(round_export)).collect())
                .collect(),
            counts: &self.counts,
            zero_shot: &self.zero_shot,
            grand_mean: self.grand_mean().map(round_export),
            pooled_rate: self.pooled_rate().map(round_export),
        };
        serde_json::to_string_pretty(&export).expect("matrix serializes") + "\n"
    }
}

/// Aggregates records by direction. Directions touching `pivot` are treated
/// as supervised; with no pivot every direction is zero-shot.
pub fn otr_matrix(records: &[DetectionRecord], pivot: Option<&str>) -> OtrMatrix {
    let mut langs: Vec<LanguageId> = records
        .iter()
        .flat_map(|r| [r.src.clone(), r.tgt.clone()])
        .collect();
    langs.sort();
    langs.dedup();
    let pos: HashMap<&LanguageId, usize> = langs.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let n = langs.len();
    let mut counts = vec![vec![0u64; n]; n];
    let mut off_target = vec![vec![0u64; n]; n];
    for r in records {
        let (s, t) = (pos[&r.src], pos[&r.tgt]);
        counts[s][t] += 1;
        if r.is_off_target() {
            off_target[s][t] += 1;
        }
    }
    let zero_shot = (0..n)
        .map(|s| {
            (0..n)
                .map(|t| {
                    s != t && pivot.is_none_or(|p| langs[s].code() != p && langs[t].code() != p)
                })
                .collect()
        })
        .collect();
    OtrMatrix {
        langs,
        counts,
        off_target,
        zero_shot,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    High,
    Mid,
    Low,
}

impl FromStr for Tier {
    type Err = LavsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "high" | "h" => Ok(Tier::High),
            "mid" | "m" => Ok(Tier::Mid),
            "low" | "l" => Ok(Tier::Low),
            other => Err(LavsError::ConfigInvalid(format!("unknown tier {other:?}"))),
        }
    }
}

/// Resource tier of each language, keyed by code.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TierSpec {
    tiers: HashMap<String, Tier>,
}

impl TierSpec {
    pub fn new<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Tier)>,
        S: Into<String>,
    {
        TierSpec {
            tiers: pairs.into_iter().map(|(c, t)| (c.into(), t)).collect(),
        }
    }

    /// Parses `code=tier` pairs separated by commas, e.g. `cs=high,lv=mid`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut tiers = HashMap::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (code, tier) = item
                .split_once('=')
                .ok_or_else(|| LavsError::ConfigInvalid(format!("expected code=tier, got {item:?}")))?;
            tiers.insert(code.trim().to_string(), tier.trim().parse()?);
        }
        Ok(TierSpec { tiers })
    }

    /// The ten-language WMT grouping: cs, fr, de, fi high; lv, et mid;
    /// ro, tr, hi, gu low.
    pub fn wmt10() -> Self {
        use Tier::*;
        TierSpec::new([
            ("cs", High),
            ("fr", High),
            ("de", High),
            ("fi", High),
            ("lv", Mid),
            ("et", Mid),
            ("ro", Low),
            ("tr", Low),
            ("hi", Low),
            ("gu", Low),
        ])
    }

    pub fn tier(&self, code: &str) -> Option<Tier> {
        self.tiers.get(code).copied()
    }
}

/// Mean direction rates per tier pair; `None` where a bucket is empty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TierMeans {
    #[serde(serialize_with = "serialize_rounded_opt")]
    pub high_to_high: Option<f64>,
    #[serde(serialize_with = "serialize_rounded_opt")]
    pub high_to_low: Option<f64>,
    #[serde(serialize_with = "serialize_rounded_opt")]
    pub low_to_high: Option<f64>,
    #[serde(serialize_with = "serialize_rounded_opt")]
    pub low_to_low: Option<f64>,
}

fn serialize_rounded_opt<S: serde::Serializer>(
    x: &Option<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round_export(*v)),
        None => s.serialize_none(),
    }
}

fn serialize_rounded<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_export(*x))
}

/// Unweighted mean of zero-shot direction rates within each High/Low tier
/// pair. Directions involving a Mid language fall in no bucket.
pub fn tier_aggregate(matrix: &OtrMatrix, tiers: &TierSpec) -> Result<TierMeans> {
    let mut buckets: [Vec<f64>; 4] = Default::default();
    for (s, t, r) in matrix.zero_shot_cells() {
        let tier_of = |i: usize| {
            let code = matrix.langs[i].code();
            tiers
                .tier(code)
                .ok_or_else(|| LavsError::UncoveredLanguage(code.to_string()))
        };
        let slot = match (tier_of(s)?, tier_of(t)?) {
            (Tier::High, Tier::High) => 0,
            (Tier::High, Tier::Low) => 1,
            (Tier::Low, Tier::High) => 2,
            (Tier::Low, Tier::Low) => 3,
            _ => continue,
        };
        buckets[slot].push(r);
    }
    Ok(TierMeans {
        high_to_high: mean(&buckets[0]),
        high_to_low: mean(&buckets[1]),
        low_to_high: mean(&buckets[2]),
        low_to_low: mean(&buckets[3]),
    })
}

/// Where an off-target output went.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Deviation {
    /// Output in the source language (copy of the input).
    Source,
    Lang(String),
    Other,
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deviation::Source => f.write_str("src"),
            Deviation::Lang(code) => f.write_str(code),
            Deviation::Other => f.write_str(OTHER_CODE),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationShare {
    #[serde(serialize_with = "serialize_display")]
    pub category: Deviation,
    pub count: u64,
    #[serde(serialize_with = "serialize_rounded")]
    pub share: f64,
}

fn serialize_display<S: serde::Serializer>(d: &Deviation, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(d)
}

/// Shares of deviation categories over off-target records, largest first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationDistribution {
    pub off_target: u64,
    /// Set when no record was off-target; `shares` is then empty.
    pub empty: bool,
    pub shares: Vec<DeviationShare>,
}

pub fn deviation_distribution(records: &[DetectionRecord]) -> DeviationDistribution {
    let mut tally: HashMap<Deviation, u64> = HashMap::new();
    let mut off = 0u64;
    for r in records.iter().filter(|r| r.is_off_target()) {
        off += 1;
        let cat = match &r.detected {
            Detected::Lang(l) if *l == r.src => Deviation::Source,
            Detected::Lang(l) => Deviation::Lang(l.code().to_string()),
            Detected::Other => Deviation::Other,
        };
        *tally.entry(cat).or_default() += 1;
    }
    let mut shares: Vec<DeviationShare> = tally
        .into_iter()
        .map(|(category, count)| DeviationShare {
            category,
            count,
            share: count as f64 / off as f64,
        })
        .collect();
    shares.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.category.cmp(&b.category)));
    DeviationDistribution {
        off_target: off,
        empty: off == 0,
        shares,
    }
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(LavsError::SizeMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(LavsError::DegenerateVariance(format!("{} points", xs.len())));
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(xs) || constant(ys) {
        return Err(LavsError::DegenerateVariance("constant series".into()));
    }
    let mx = compensated_sum(xs.iter().copied()) / xs.len() as f64;
    let my = compensated_sum(ys.iter().copied()) / ys.len() as f64;
    let sxy = compensated_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let syy = compensated_sum(ys.iter().map(|y| (y - my) * (y - my)));
    if sxx == 0.0 || syy == 0.0 {
        return Err(LavsError::DegenerateVariance("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Which divergence is paired with the off-target rate of `src → tgt`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Orientation {
    /// `D_KL(P_tgt ‖ P_src)`.
    #[default]
    TargetToSource,
    /// `D_KL(P_src ‖ P_tgt)`.
    SourceToTarget,
}

impl FromStr for Orientation {
    type Err = LavsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t2s" => Ok(Orientation::TargetToSource),
            "s2t" => Ok(Orientation::SourceToTarget),
            other => Err(LavsError::ConfigInvalid(format!("unknown orientation {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub src: String,
    pub tgt: String,
    pub kl: f64,
    pub otr: f64,
}

#[derive(Debug)]
pub struct SourceCorrelation {
    pub source: LanguageId,
    pub points: usize,
    pub r: Result<f64>,
}

#[derive(Debug)]
pub struct CorrelationReport {
    pub per_source: Vec<SourceCorrelation>,
    /// Mean and sample standard deviation of the defined per-source values.
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub scatter: Vec<ScatterPoint>,
}

impl CorrelationReport {
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            source: &'a str,
            points: usize,
            r: Option<f64>,
            error: Option<&'static str>,
        }
        #[derive(Serialize)]
        struct Export<'a> {
            per_source: Vec<Row<'a>>,
            mean: Option<f64>,
            sd: Option<f64>,
        }
        let export = Export {
            per_source: self
                .per_source
                .iter()
                .map(|s| Row {
                    source: s.source.code(),
                    points: s.points,
                    r: s.r.as_ref().ok().map(|r| round_export(*r)),
                    error: s.r.as_ref().err().map(LavsError::code),
                })
                .collect(),
            mean: self.mean.map(round_export),
            sd: self.sd.map(round_export),
        };
        serde_json::to_string_pretty(&export).expect("report serializes") + "\n"
    }

    /// `src,tgt,kl,otr` rows for plotting.
    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("src,tgt,kl,otr\n");
        for p in &self.scatter {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.src,
                p.tgt,
                fmt_export(p.kl),
                fmt_export(p.otr)
            ));
        }
        out
    }
}

/// Per-source Pearson correlation between divergence and off-target rate
/// over that source's zero-shot targets. Languages are matched by code;
/// directions missing from the KL matrix are skipped.
pub fn correlate_kl_otr(
    matrix: &OtrMatrix,
    kl: &KlMatrix,
    orientation: Orientation,
) -> CorrelationReport {
    let mut per_source = Vec::new();
    let mut scatter = Vec::new();
    let cells = matrix.zero_shot_cells();
    for (s, src) in matrix.langs.iter().enumerate() {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        let Some(ks) = kl.position(src.code()) else {
            continue;
        };
        for &(_, t, rate) in cells.iter().filter(|c| c.0 == s) {
            let tgt = &matrix.langs[t];
            let Some(kt) = kl.position(tgt.code()) else {
                continue;
            };
            let x = match orientation {
                Orientation::TargetToSource => kl.get(kt, ks),
                Orientation::SourceToTarget => kl.get(ks, kt),
            };
            xs.push(x);
            ys.push(rate);
            scatter.push(ScatterPoint {
                src: src.code().to_string(),
                tgt: tgt.code().to_string(),
                kl: x,
                otr: rate,
            });
        }
        if xs.is_empty() {
            continue;
        }
        per_source.push(SourceCorrelation {
            source: src.clone(),
            points: xs.len(),
            r: pearson(&xs, &ys),
        });
    }
    let rs: Vec<f64> = per_source.iter().filter_map(|s| s.r.as_ref().ok().copied()).collect();
    CorrelationReport {
        mean: mean(&rs),
        sd: sample_sd(&rs),
        per_source,
        scatter,
    }
}
