use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{bpe_apply, char_segment, MergeTable, Segmentation};
use crate::analyzer_weighting::{select_analysis, AnalysisLexicon, SelectionPolicy};
use crate::error::{Error, Result};

/// Segmenter used for words an analysis lexicon does not cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backoff {
    #[default]
    Char,
    Bpe,
}

impl std::str::FromStr for Backoff {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "char" => Ok(Backoff::Char),
            "bpe" => Ok(Backoff::Bpe),
            other => Err(Error::Config(format!("unknown backoff {other:?}"))),
        }
    }
}

/// Segments with the lexicon's selected analysis, or with the backoff
/// segmenter when the lexicon has nothing for `word`.
pub fn segment_with_lexicon(
    word: &str,
    lexicon: &AnalysisLexicon,
    policy: SelectionPolicy,
    backoff: Backoff,
    merges: Option<&MergeTable>,
) -> Result<Segmentation> {
    if backoff == Backoff::Bpe && merges.is_none() {
        return Err(Error::Config("BPE backoff requires a merge table".into()));
    }
    if word.is_empty() {
        return Err(Error::Domain("cannot segment an empty word".into()));
    }
    match select_analysis(word, lexicon, policy) {
        Ok(analysis) => analysis.segmentation(),
        Err(Error::NotFound(_)) => match (backoff, merges) {
            (Backoff::Char, _) => char_segment(word),
            (Backoff::Bpe, Some(table)) => bpe_apply(word, table),
            (Backoff::Bpe, None) => unreachable!("checked above"),
        },
        Err(e) => Err(e),
    }
}

/// A ready-to-use segmenter.
#[derive(Debug, Clone)]
pub enum Segmenter {
    Char,
    Bpe(MergeTable),
    Lexicon {
        lexicon: AnalysisLexicon,
        policy: SelectionPolicy,
        backoff: Backoff,
        merges: Option<MergeTable>,
    },
}

impl Segmenter {
    pub fn lexicon(
        lexicon: AnalysisLexicon,
        policy: SelectionPolicy,
        backoff: Backoff,
        merges: Option<MergeTable>,
    ) -> Result<Self> {
        if backoff == Backoff::Bpe && merges.is_none() {
            return Err(Error::Config("BPE backoff requires a merge table".into()));
        }
        Ok(Segmenter::Lexicon {
            lexicon,
            policy,
            backoff,
            merges,
        })
    }

    pub fn segment(&self, word: &str) -> Result<Segmentation> {
        match self {
            Segmenter::Char => char_segment(word),
            Segmenter::Bpe(table) => bpe_apply(word, table),
            Segmenter::Lexicon {
                lexicon,
                policy,
                backoff,
                merges,
            } => segment_with_lexicon(word, lexicon, *policy, *backoff, merges.as_ref()),
        }
    }

    pub fn segment_sentence<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<Segmentation>> {
        words.iter().map(|w| self.segment(w.as_ref())).collect()
    }

    pub fn mode(&self) -> SegmenterMode {
        match self {
            Segmenter::Char => SegmenterMode::Char,
            Segmenter::Bpe(_) => SegmenterMode::Bpe,
            Segmenter::Lexicon { .. } => SegmenterMode::Lexicon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmenterMode {
    #[default]
    Char,
    Bpe,
    Lexicon,
}

impl std::fmt::Display for SegmenterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SegmenterMode::Char => "char",
            SegmenterMode::Bpe => "bpe",
            SegmenterMode::Lexicon => "lexicon",
        })
    }
}

impl std::str::FromStr for SegmenterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "char" => Ok(SegmenterMode::Char),
            "bpe" => Ok(SegmenterMode::Bpe),
            "lexicon" => Ok(SegmenterMode::Lexicon),
            other => Err(Error::Config(format!("unknown segmenter mode {other:?}"))),
        }
    }
}

/// Serializable segmenter configuration, as stored in model files and
/// service manifests. Relative paths resolve against a base directory.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SegmenterSpec {
    pub mode: SegmenterMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backoff: Option<Backoff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merges: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<SelectionPolicy>,
}

impl SegmenterSpec {
    pub fn char() -> Self {
        SegmenterSpec::default()
    }

    pub fn build(&self, base_dir: &Path) -> Result<Segmenter> {
        let resolve = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base_dir.join(p)
            }
        };
        let merges = self
            .merges
            .as_ref()
            .map(|p| MergeTable::load(resolve(p)))
            .transpose()?;
        match self.mode {
            SegmenterMode::Char => Ok(Segmenter::Char),
            SegmenterMode::Bpe => merges
                .map(Segmenter::Bpe)
                .ok_or_else(|| Error::Config("bpe mode requires a merges file".into())),
            SegmenterMode::Lexicon => {
                let path = self
                    .lexicon
                    .as_ref()
                    .ok_or_else(|| Error::Config("lexicon mode requires a lexicon file".into()))?;
                let lexicon = AnalysisLexicon::load(resolve(path))?;
                Segmenter::lexicon(
                    lexicon,
                    self.policy.unwrap_or_default(),
                    self.backoff.unwrap_or_default(),
                    merges,
                )
            }
        }
    }
}

/// Writes a sentence in the `@@ ` convention: `ña@@ ha'arõ@@ va che`.
pub fn write_segmented_line(sentence: &[Segmentation]) -> String {
    sentence
        .iter()
        .map(|seg| seg.units().join("@@ "))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses a line in the `@@ ` convention.
pub fn parse_segmented_line(line: &str) -> Result<Vec<Segmentation>> {
    let mut out = Vec::new();
    let mut units: Vec<String> = Vec::new();
    for tok in line.split_whitespace() {
        match tok.strip_suffix("@@") {
            Some(unit) if !unit.is_empty() => units.push(unit.to_string()),
            _ => {
                units.push(tok.to_string());
                out.push(Segmentation::new(std::mem::take(&mut units))?);
            }
        }
    }
    if !units.is_empty() {
        return Err(Error::Domain(format!(
            "line ends inside a word: {line:?}"
        )));
    }
    Ok(out)
}
