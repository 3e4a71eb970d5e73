//! Weighted analysis lexicons.
//!
//! An [`AnalysisLexicon`] stands in for the output of a finite-state
//! morphological analyser: for each wordform, the candidate analyses with
//! their surface segmentation. Weights are costs, lower is preferred.
//!
//! Lexicon file format (TSV, one analysis per line):
//!
//! ```text
//! wordform <TAB> re<prn><p2><sg>+ho<v><iv>+ta<fti>+pa<qst> <TAB> Rehó>ta>pa [<TAB> weight]
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenization::{bpe_apply, MergeTable, Segmentation};

/// One morpheme of an analysis: `lemma<tag1><tag2>…`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Morpheme {
    pub lemma: Option<String>,
    pub tags: Vec<String>,
    /// Surface form, known only when the analysis and its segmentation have
    /// the same number of pieces.
    pub surface: Option<String>,
}

impl Morpheme {
    pub fn parse(text: &str) -> Result<Self> {
        let (lemma, mut rest) = match text.find('<') {
            Some(i) => (&text[..i], &text[i..]),
            None => (text, ""),
        };
        let mut tags = Vec::new();
        while !rest.is_empty() {
            let close = rest.find('>').filter(|_| rest.starts_with('<')).ok_or_else(|| {
                Error::Domain(format!("malformed tags in morpheme {text:?}"))
            })?;
            let tag = &rest[1..close];
            if tag.is_empty() {
                return Err(Error::Domain(format!("empty tag in morpheme {text:?}")));
            }
            tags.push(tag.to_string());
            rest = &rest[close + 1..];
        }
        if lemma.is_empty() && tags.is_empty() {
            return Err(Error::Domain("empty morpheme".into()));
        }
        Ok(Morpheme {
            lemma: (!lemma.is_empty()).then(|| lemma.to_string()),
            tags,
            surface: None,
        })
    }

    /// `lemma<tag>…` without the surface.
    pub fn key(&self) -> String {
        let mut s = self.lemma.clone().unwrap_or_default();
        for t in &self.tags {
            s.push('<');
            s.push_str(t);
            s.push('>');
        }
        s
    }
}

/// A candidate analysis of one wordform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub morphemes: Vec<Morpheme>,
    /// Surface segmentation; concatenates to the wordform.
    pub surfaces: Vec<String>,
    pub weight: f64,
}

impl Analysis {
    /// Parses a `+`-joined analysis string and a `>`-joined segmentation.
    pub fn parse(analysis: &str, segmentation: &str, weight: f64) -> Result<Self> {
        let mut morphemes = analysis
            .split('+')
            .map(Morpheme::parse)
            .collect::<Result<Vec<_>>>()?;
        let surfaces: Vec<String> = segmentation
            .split('>')
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        if surfaces.is_empty() {
            return Err(Error::Domain(format!("empty segmentation for {analysis:?}")));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::Domain(format!("invalid weight {weight}")));
        }
        if morphemes.len() == surfaces.len() {
            for (m, s) in morphemes.iter_mut().zip(&surfaces) {
                m.surface = Some(s.clone());
            }
        }
        Ok(Analysis {
            morphemes,
            surfaces,
            weight,
        })
    }

    /// The `+`-joined analysis string; supervised weights are keyed on it.
    pub fn analysis_string(&self) -> String {
        self.morphemes
            .iter()
            .map(Morpheme::key)
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn segmentation_string(&self) -> String {
        self.surfaces.join(">")
    }

    pub fn word(&self) -> String {
        self.surfaces.concat()
    }

    pub fn segmentation(&self) -> Result<Segmentation> {
        Segmentation::new(self.surfaces.iter().cloned())
    }

    /// Total order used to break ties between equally scored analyses.
    fn tie_key(&self) -> (String, String) {
        (self.analysis_string(), self.segmentation_string())
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}",
            self.analysis_string(),
            self.segmentation_string(),
            self.weight
        )
    }
}

/// Map from wordform to its candidate analyses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisLexicon {
    entries: BTreeMap<String, Vec<Analysis>>,
}

impl AnalysisLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an analysis, checking that its surfaces spell the wordform.
    pub fn insert(&mut self, wordform: &str, analysis: Analysis) -> Result<()> {
        if analysis.word() != wordform {
            return Err(Error::Domain(format!(
                "segmentation {} does not spell {wordform:?}",
                analysis.segmentation_string()
            )));
        }
        self.entries
            .entry(wordform.to_string())
            .or_default()
            .push(analysis);
        Ok(())
    }

    pub fn get(&self, wordform: &str) -> Option<&[Analysis]> {
        self.entries.get(wordform).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Analysis])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut lex = AnalysisLexicon::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<lexicon>", e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if !(3..=4).contains(&cols.len()) {
                return Err(parse_err(format!(
                    "expected 3 or 4 tab-separated columns, got {}",
                    cols.len()
                )));
            }
            let weight = match cols.get(3) {
                Some(w) => w
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("bad weight {w:?}: {e}")))?,
                None => 1.0,
            };
            let analysis = Analysis::parse(cols[1], cols[2], weight)
                .map_err(|e| parse_err(e.to_string()))?;
            lex.insert(cols[0], analysis)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        AnalysisLexicon::read(std::io::BufReader::new(file))
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        for (word, analyses) in &self.entries {
            for a in analyses {
                writeln!(out, "{word}\t{a}")?;
            }
        }
        Ok(())
    }
}

/// An annotated (wordform, analysis) pair the lexicon could not account for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageWarning {
    pub wordform: String,
    pub analysis: String,
    pub reason: &'static str,
}

impl fmt::Display for CoverageWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}: {}", self.wordform, self.analysis, self.reason)
    }
}

/// Reads `wordform <TAB> analysis` lines of a disambiguated corpus.
pub fn read_annotated(reader: impl BufRead) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<annotated>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match line.split_once('\t') {
            Some((w, a)) if !w.is_empty() && !a.trim().is_empty() => {
                out.push((w.to_string(), a.trim().to_string()))
            }
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "expected wordform<TAB>analysis".into(),
                })
            }
        }
    }
    Ok(out)
}

fn normalize_analysis(text: &str) -> String {
    // Re-serialise so that equivalent spellings compare equal; fall back to
    // the raw text if it does not parse.
    text.split('+')
        .map(Morpheme::parse)
        .collect::<Result<Vec<_>>>()
        .map(|ms| ms.iter().map(Morpheme::key).collect::<Vec<_>>().join("+"))
        .unwrap_or_else(|_| text.to_string())
}

/// Sets every weight to `1 - P(a|w)` from a disambiguated corpus, where
/// `P(a|w) = count(a, w) / count(w)`. Pairs that never occur keep weight 1.
pub fn supervised_weights(
    annotated: &[(String, String)],
    lexicon: &AnalysisLexicon,
) -> (AnalysisLexicon, Vec<CoverageWarning>) {
    let mut word_counts: HashMap<&str, u64> = HashMap::new();
    let mut pair_counts: HashMap<(&str, String), u64> = HashMap::new();
    let mut warnings = Vec::new();
    for (word, analysis) in annotated {
        let key = normalize_analysis(analysis);
        *word_counts.entry(word).or_default() += 1;
        match lexicon.get(word) {
            None => warnings.push(CoverageWarning {
                wordform: word.clone(),
                analysis: analysis.clone(),
                reason: "wordform not in lexicon",
            }),
            Some(cands) if !cands.iter().any(|c| c.analysis_string() == key) => {
                warnings.push(CoverageWarning {
                    wordform: word.clone(),
                    analysis: analysis.clone(),
                    reason: "analysis not in lexicon",
                })
            }
            Some(_) => {}
        }
        *pair_counts.entry((word, key)).or_default() += 1;
    }

    let mut out = lexicon.clone();
    for (word, analyses) in out.entries.iter_mut() {
        let total = word_counts.get(word.as_str()).copied().unwrap_or(0);
        for a in analyses {
            let seen = pair_counts
                .get(&(word.as_str(), a.analysis_string()))
                .copied()
                .unwrap_or(0);
            a.weight = if total > 0 && seen > 0 {
                1.0 - seen as f64 / total as f64
            } else {
                1.0
            };
        }
    }
    (out, warnings)
}

/// One unit of cost per morpheme boundary.
pub fn boundary_penalty(analysis: &Analysis) -> f64 {
    analysis.morphemes.len().saturating_sub(1) as f64
}

/// Unsupervised stand-in weighting: the cost of an analysis is the number of
/// BPE units its surface segmentation breaks into, so analyses built from
/// frequent (lexicalised) pieces are preferred. Experimental; not applied by
/// default anywhere.
pub fn bpe_unit_weights(lexicon: &AnalysisLexicon, table: &MergeTable) -> Result<AnalysisLexicon> {
    let mut out = lexicon.clone();
    for analyses in out.entries.values_mut() {
        for a in analyses {
            let mut units = 0;
            for s in &a.surfaces {
                units += bpe_apply(s, table)?.len();
            }
            a.weight = units as f64;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionPolicy {
    /// Lowest weight plus boundary penalty.
    MinWeight,
    /// Fewest morphemes.
    #[default]
    Shortest,
}

impl std::str::FromStr for SelectionPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min-weight" | "min_weight" => Ok(SelectionPolicy::MinWeight),
            "shortest" => Ok(SelectionPolicy::Shortest),
            other => Err(Error::Config(format!("unknown selection policy {other:?}"))),
        }
    }
}

/// Picks one analysis for `wordform`. Ties are broken by the serialised
/// analysis, so the choice is deterministic.
pub fn select_analysis<'a>(
    wordform: &str,
    lexicon: &'a AnalysisLexicon,
    policy: SelectionPolicy,
) -> Result<&'a Analysis> {
    let cands = lexicon
        .get(wordform)
        .filter(|c| !c.is_empty())
        .ok_or_else(|| Error::NotFound(format!("no analysis for {wordform:?}")))?;
    let best = match policy {
        SelectionPolicy::MinWeight => cands.iter().min_by(|a, b| {
            let sa = a.weight + boundary_penalty(a);
            let sb = b.weight + boundary_penalty(b);
            sa.total_cmp(&sb).then_with(|| a.tie_key().cmp(&b.tie_key()))
        }),
        SelectionPolicy::Shortest => cands.iter().min_by(|a, b| {
            a.morphemes
                .len()
                .cmp(&b.morphemes.len())
                .then_with(|| a.tie_key().cmp(&b.tie_key()))
        }),
    };
    Ok(best.expect("non-empty candidate list"))
}
