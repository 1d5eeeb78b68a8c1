//! Per-target-language vocabulary masks for constrained decoding.

use std::collections::BTreeSet;

use crate::corpus::CorpusStats;
use crate::error::{check_len, LavsError, Result};
use crate::vocab::{LanguageId, TokenId, Vocabulary};

pub const MASK_MAGIC: &[u8; 4] = b"LVSM";

/// Fixed-size bitset over token ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitset {
    words: Vec<u64>,
    len: usize,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersection_count(&self, other: &Bitset) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    /// Little-endian packing: bit `i` is bit `i % 8` of byte `i / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len.div_ceil(8));
        for (k, w) in self.words.iter().enumerate() {
            let bytes = w.to_le_bytes();
            let take = (self.len.div_ceil(8) - k * 8).min(8);
            out.extend_from_slice(&bytes[..take]);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        check_len(len.div_ceil(8), bytes.len())?;
        let mut bits = Bitset::new(len);
        for (k, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            bits.words[k] = u64::from_le_bytes(buf);
        }
        if !len.is_multiple_of(64) {
            if let Some(last) = bits.words.last() {
                if last >> (len % 64) != 0 {
                    return Err(LavsError::Domain("padding bits set past vocabulary size".into()));
                }
            }
        }
        Ok(bits)
    }
}

/// Tokens the decoder may emit when translating into `lang`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetMask {
    pub lang: LanguageId,
    pub bits: Bitset,
    pub always_allowed: BTreeSet<TokenId>,
}

impl TargetMask {
    pub fn size(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn allows(&self, id: TokenId) -> bool {
        self.bits.get(id.index())
    }

    /// Newline-delimited rendered surfaces, in id order.
    pub fn to_text(&self, vocab: &Vocabulary) -> Result<String> {
        check_len(vocab.len(), self.bits.len())?;
        let mut out = String::new();
        for i in self.bits.ones() {
            out.push_str(vocab.surface(TokenId(i as u32)));
            out.push('\n');
        }
        Ok(out)
    }

    /// `"LVSM"`, little-endian u32 vocabulary size, packed bits.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.bits.len().div_ceil(8));
        out.extend_from_slice(MASK_MAGIC);
        out.extend_from_slice(&(self.bits.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.bits.to_bytes());
        out
    }
}

/// Decodes the binary mask format into its bitset.
pub fn read_binary_mask(bytes: &[u8]) -> Result<Bitset> {
    if bytes.len() < 8 || &bytes[..4] != MASK_MAGIC {
        return Err(LavsError::Domain("missing LVSM header".into()));
    }
    let len = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    Bitset::from_bytes(&bytes[8..], len)
}

/// Allows every token seen more than `threshold` times in the language's
/// corpus, every specific entry of that language and the control tokens.
/// Specific entries of other languages are never allowed.
pub fn build_mask(
    lang: &LanguageId,
    stats: &CorpusStats,
    vocab: &Vocabulary,
    controls: &[&str],
    threshold: u64,
) -> Result<TargetMask> {
    check_len(vocab.len(), stats.counts.len())?;
    if &stats.lang != lang {
        return Err(LavsError::ConfigInvalid(format!(
            "stats for {} used to build the {} mask",
            stats.lang, lang
        )));
    }
    let mut bits = Bitset::new(vocab.len());
    for id in vocab.ids() {
        let allowed = match vocab.entry(id).lang() {
            Some(l) if l == lang => true,
            Some(_) => false,
            None => stats.count(id) > threshold,
        };
        if allowed {
            bits.set(id.index());
        }
    }
    let mut always_allowed = BTreeSet::new();
    for c in controls {
        let id = vocab
            .lookup(c)
            .ok_or_else(|| LavsError::UnknownToken(c.to_string()))?;
        bits.set(id.index());
        always_allowed.insert(id);
    }
    Ok(TargetMask {
        lang: lang.clone(),
        bits,
        always_allowed,
    })
}

/// `(language, mask size)` rows ordered by language index.
pub fn mask_report(masks: &[TargetMask]) -> Vec<(LanguageId, usize)> {
    let mut rows: Vec<_> = masks.iter().map(|m| (m.lang.clone(), m.size())).collect();
    rows.sort_by_key(|(l, _)| l.index());
    rows
}
