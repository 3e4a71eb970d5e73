//! Corpus loading and the descriptive statistics used to characterise how
//! synthetic a language is: type-token ratio (TTR) and mean distance to the
//! next novel type (MDN).
//!
//! Tokens are compared byte-exact after NFC normalisation. No case folding.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::error::{Error, Result};

/// Sentence-segmented, whitespace-tokenised text.
///
/// Every sentence is non-empty and no token is empty or contains whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<Vec<String>>,
}

impl Corpus {
    /// Parses one-sentence-per-line text. Blank lines are skipped and tokens
    /// are NFC-normalised.
    pub fn parse(text: &str) -> Self {
        let sentences = text
            .lines()
            .map(|line| {
                line.split_whitespace()
                    .map(|tok| nfc(tok).into_owned())
                    .collect::<Vec<_>>()
            })
            .filter(|s| !s.is_empty())
            .collect();
        Corpus { sentences }
    }

    /// Builds a corpus from pre-tokenised sentences, enforcing the type
    /// invariants.
    pub fn from_sentences<S: AsRef<str>>(sentences: &[Vec<S>]) -> Result<Self> {
        let mut out = Vec::with_capacity(sentences.len());
        for (i, sentence) in sentences.iter().enumerate() {
            if sentence.is_empty() {
                return Err(Error::Domain(format!("sentence {i} is empty")));
            }
            let mut toks = Vec::with_capacity(sentence.len());
            for tok in sentence {
                let tok = tok.as_ref();
                if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                    return Err(Error::Domain(format!(
                        "invalid token {tok:?} in sentence {i}"
                    )));
                }
                toks.push(nfc(tok).into_owned());
            }
            out.push(toks);
        }
        Ok(Corpus { sentences: out })
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    /// All tokens in reading order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Reads a one-sentence-per-line UTF-8 corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        offset: e.valid_up_to(),
    })?;
    Ok(Corpus::parse(text))
}

fn nfc(s: &str) -> Cow<'_, str> {
    if is_nfc(s) {
        Cow::Borrowed(s)
    } else {
        Cow::Owned(s.nfc().collect())
    }
}

/// `|types| / |tokens|`.
pub fn type_token_ratio<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::Domain("type-token ratio of an empty sequence".into()));
    }
    let types: HashSet<Cow<'_, str>> = tokens.iter().map(|t| nfc(t.as_ref())).collect();
    Ok(types.len() as f64 / tokens.len() as f64)
}

/// Mean number of already-seen tokens between consecutive first occurrences
/// of a type. The run after the last novel type is not recorded.
pub fn mean_distance_to_novel<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::Domain(
            "mean distance to novel type of an empty sequence".into(),
        ));
    }
    let mut seen: HashSet<Cow<'_, str>> = HashSet::new();
    let mut distances: Vec<usize> = Vec::new();
    let mut current = 0usize;
    for tok in tokens {
        let tok = nfc(tok.as_ref());
        if seen.contains(&tok) {
            current += 1;
        } else {
            distances.push(current);
            current = 0;
            seen.insert(tok);
        }
    }
    // The first token is always novel, so `distances` is non-empty here.
    Ok(distances.iter().sum::<usize>() as f64 / distances.len() as f64)
}

/// One row of corpus statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub sentences: usize,
    pub tokens: usize,
    pub types: usize,
    pub ttr: f64,
    pub mdn: f64,
}

impl StatsReport {
    pub const TSV_HEADER: &'static str = "Sentences\tTokens\tTypes\tTTR\tMDN";

    pub fn to_tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:.4}\t{:.2}",
            self.sentences, self.tokens, self.types, self.ttr, self.mdn
        )
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tsv_row())
    }
}

pub fn corpus_summary(corpus: &Corpus) -> Result<StatsReport> {
    if corpus.is_empty() {
        return Err(Error::Domain("summary of an empty corpus".into()));
    }
    let tokens: Vec<&str> = corpus.tokens().collect();
    let types = tokens.iter().collect::<HashSet<_>>().len();
    Ok(StatsReport {
        sentences: corpus.len(),
        tokens: tokens.len(),
        types,
        ttr: types as f64 / tokens.len() as f64,
        mdn: mean_distance_to_novel(&tokens)?,
    })
}
