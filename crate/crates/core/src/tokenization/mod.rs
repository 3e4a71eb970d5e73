//! Segmentation strategies and the boundary-marked symbol stream they all
//! feed into.
//!
//! Three segmenters are provided: per-character, learned byte-pair encoding,
//! and lexicon lookup with a character or BPE fallback for words the lexicon
//! does not cover. Every segmenter returns a [`Segmentation`] whose units
//! concatenate back to the input word.

mod bpe;
mod segmenter;
mod symbols;

pub use bpe::{bpe_apply, bpe_learn, bpe_learn_detailed, BpeOutcome, MergeTable};
pub use segmenter::{
    parse_segmented_line, segment_with_lexicon, write_segmented_line, Backoff, Segmenter,
    SegmenterMode, SegmenterSpec,
};
pub use symbols::{
    escape_text, mark_boundaries, mark_partial, parse_symbol_token, unit_tokens, Symbol,
    SymbolScheme, SymbolStream, SEPARATOR_TOKEN,
};

use crate::error::{Error, Result};

/// The subword units of one word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segmentation {
    units: Vec<String>,
}

impl Segmentation {
    /// Fails if `units` is empty or contains an empty unit.
    pub fn new<S: Into<String>>(units: impl IntoIterator<Item = S>) -> Result<Self> {
        let units: Vec<String> = units.into_iter().map(Into::into).collect();
        if units.is_empty() {
            return Err(Error::Domain("segmentation with no units".into()));
        }
        if units.iter().any(String::is_empty) {
            return Err(Error::Domain(format!("empty unit in {units:?}")));
        }
        Ok(Segmentation { units })
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// The word this segmentation was made from.
    pub fn word(&self) -> String {
        join(self)
    }

    pub fn char_count(&self) -> usize {
        self.units.iter().map(|u| u.chars().count()).sum()
    }
}

/// Concatenates the units of a segmentation.
pub fn join(seg: &Segmentation) -> String {
    seg.units.concat()
}

/// One unit per Unicode scalar value.
pub fn char_segment(word: &str) -> Result<Segmentation> {
    if word.is_empty() {
        return Err(Error::Domain("cannot segment an empty word".into()));
    }
    Ok(Segmentation {
        units: word.chars().map(String::from).collect(),
    })
}
