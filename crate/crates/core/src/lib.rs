//! # lavs
//!
//! Language-aware vocabulary sharing for multilingual subword vocabularies.
//!
//! Shared subword vocabularies make the token distributions of related
//! languages look alike. This crate measures that overlap and reduces it:
//!
//! * [`corpus`] counts unigrams over pre-tokenized corpora and builds
//!   add-one-smoothed token distributions.
//! * [`divergence`] computes KL divergence between languages, the pairwise
//!   matrix and its mean.
//! * [`select`] greedily picks the shared tokens whose smaller per-language
//!   probability is highest and turns them into language-specific entries.
//! * [`retag`] rewrites token streams to use those entries and strips the
//!   tags again after decoding.
//! * [`mask`] builds per-language masks for constrained decoding.
//! * [`eval`] computes off-target rates from detected output languages and
//!   correlates them with lexical divergence.
//!
//! Runnable examples for each capability live in `examples/`:
//!
//! ```bash
//! cargo run -p lavs --example select_splits
//! ```

pub mod corpus;
pub mod divergence;
pub mod error;
pub mod eval;
pub mod mask;
pub mod numeric;
pub mod retag;
pub mod select;
pub mod vocab;

pub use corpus::{distribution, ingest_corpus, ingest_reader, CorpusStats, TokenDistribution, UnkPolicy};
pub use divergence::{delta_kl_closed_form, kl, objective, pairwise_kl, KlMatrix, SplitIncrement};
pub use error::{LavsError, Result};
pub use eval::{
    correlate_kl_otr, deviation_distribution, otr, otr_matrix, pearson, tier_aggregate,
    DetectionRecord, DetectionTable, Orientation, OtrMatrix, Tier, TierSpec,
};
pub use mask::{build_mask, mask_report, TargetMask};
pub use retag::{detag_line, retag_line, RetagMap};
pub use select::{apply_splits, enumerate_candidates, lavs, select_splits, SplitCandidate, SplitPlan};
pub use vocab::{
    make_specific_surface, split_all, strip_specific_surface, LanguageId, Languages, TokenEntry,
    TokenId, TokenKind, Vocabulary,
};
