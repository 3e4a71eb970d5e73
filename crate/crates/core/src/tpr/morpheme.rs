use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::space::{make_role_space, FillerScheme, FillerVocab, RoleScheme, RoleSpace};
use super::tensor::{bind_hierarchical, Structure, TprTensor};
use crate::analyzer_weighting::{AnalysisLexicon, Morpheme};
use crate::error::{Error, Result};

pub const LEMMA_ROLE: &str = "lemma";
pub const FORM_ROLE: &str = "form";
pub const VALUE_ROLE: &str = "value";
pub const CHAR_PREFIX: &str = "char:";
/// Spare character positions beyond the longest observed form.
pub const POSITION_SLACK: usize = 2;

/// How morphemes become feature/value structures and how the spaces are
/// embedded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphemeTprConfig {
    /// Feature for bare tags (`sg` → `num`). Tags written `feature:value`
    /// need no entry; unlisted bare tags get the positional role `tag{i}`.
    #[serde(default)]
    pub tag_features: BTreeMap<String, String>,
    /// Adds a nested level binding the morpheme's characters to position
    /// roles under a `form` role.
    #[serde(default)]
    pub char_level: bool,
    #[serde(default = "default_filler_scheme")]
    pub filler_scheme: FillerScheme,
    /// Embedding size for dense fillers.
    #[serde(default)]
    pub filler_dim: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_filler_scheme() -> FillerScheme {
    FillerScheme::OneHot
}

impl Default for MorphemeTprConfig {
    fn default() -> Self {
        MorphemeTprConfig {
            tag_features: BTreeMap::new(),
            char_level: false,
            filler_scheme: FillerScheme::OneHot,
            filler_dim: None,
            seed: None,
        }
    }
}

/// The feature/value pairs of a morpheme.
pub fn morpheme_features(m: &Morpheme, cfg: &MorphemeTprConfig) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    if let Some(lemma) = &m.lemma {
        out.push((LEMMA_ROLE.into(), lemma.clone()));
    }
    for (i, tag) in m.tags.iter().enumerate() {
        let pair = match tag.split_once(':') {
            Some((f, v)) if !f.is_empty() && !v.is_empty() => (f.to_string(), v.to_string()),
            _ => match cfg.tag_features.get(tag) {
                Some(f) => (f.clone(), tag.clone()),
                None => (format!("tag{i}"), tag.clone()),
            },
        };
        if out.iter().any(|(f, _)| *f == pair.0) {
            return Err(Error::Domain(format!(
                "feature {:?} bound twice in {:?}",
                pair.0,
                m.key()
            )));
        }
        out.push(pair);
    }
    Ok(out)
}

fn form_of(m: &Morpheme) -> Option<&str> {
    m.surface.as_deref().or(m.lemma.as_deref())
}

/// Builds the binding tree of a morpheme.
pub fn morpheme_structure(m: &Morpheme, cfg: &MorphemeTprConfig) -> Result<Structure> {
    let features = morpheme_features(m, cfg)?;
    if !cfg.char_level {
        return Ok(Structure::Node(
            features.into_iter().map(|(f, v)| (f, Structure::Leaf(v))).collect(),
        ));
    }
    let mut children: Vec<(String, Structure)> = features
        .into_iter()
        .map(|(f, v)| (f, Structure::Node(vec![(VALUE_ROLE.into(), Structure::Leaf(v))])))
        .collect();
    if let Some(form) = form_of(m) {
        let chars = form
            .chars()
            .enumerate()
            .map(|(i, c)| (format!("pos{}", i + 1), Structure::Leaf(format!("{CHAR_PREFIX}{c}"))))
            .collect();
        children.push((FORM_ROLE.into(), Structure::Node(chars)));
    }
    Ok(Structure::Node(children))
}

/// Role and filler spaces for a set of morphemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphemeSpaces {
    pub config: MorphemeTprConfig,
    pub fillers: FillerVocab,
    /// Outermost level first.
    pub roles: Vec<RoleSpace>,
}

fn collect(s: &Structure, level: usize, roles: &mut Vec<BTreeSet<String>>, fillers: &mut BTreeSet<String>) {
    match s {
        Structure::Leaf(f) => {
            fillers.insert(f.clone());
        }
        Structure::Node(children) => {
            for (r, c) in children {
                roles[level].insert(r.clone());
                collect(c, level + 1, roles, fillers);
            }
        }
    }
}

impl MorphemeSpaces {
    /// Registers every feature, value and character the morphemes use.
    /// Roles are orthonormal; the character level gets
    /// [`POSITION_SLACK`] spare positions.
    pub fn build<'m>(morphemes: impl IntoIterator<Item = &'m Morpheme>, config: MorphemeTprConfig) -> Result<Self> {
        let depth = if config.char_level { 2 } else { 1 };
        let mut roles = vec![BTreeSet::new(); depth];
        let mut fillers = BTreeSet::new();
        let mut longest = 0;
        for m in morphemes {
            collect(&morpheme_structure(m, &config)?, 0, &mut roles, &mut fillers);
            longest = longest.max(form_of(m).map_or(0, |f| f.chars().count()));
        }
        if fillers.is_empty() {
            return Err(Error::Domain("no fillers to register".into()));
        }
        if config.char_level {
            roles[1].insert(VALUE_ROLE.into());
            roles[1].extend((1..=longest + POSITION_SLACK).map(|i| format!("pos{i}")));
        }
        let role_spaces = roles
            .iter()
            .map(|ids| {
                let ids: Vec<&String> = ids.iter().collect();
                make_role_space(&ids, ids.len().max(1), RoleScheme::Orthonormal, config.seed)
            })
            .collect::<Result<Vec<_>>>()?;
        let ids: Vec<&String> = fillers.iter().collect();
        let fillers = match config.filler_scheme {
            FillerScheme::OneHot => FillerVocab::one_hot(&ids)?,
            FillerScheme::Dense => {
                let dim = config
                    .filler_dim
                    .ok_or_else(|| Error::Config("dense fillers need filler_dim".into()))?;
                FillerVocab::dense(&ids, dim, config.seed.unwrap_or(0))?
            }
            FillerScheme::Custom => {
                return Err(Error::Config("custom fillers cannot be derived from a lexicon".into()))
            }
        };
        Ok(MorphemeSpaces {
            config,
            fillers,
            roles: role_spaces,
        })
    }

    pub fn role_refs(&self) -> Vec<&RoleSpace> {
        self.roles.iter().collect()
    }

    /// Shape of every morpheme tensor in these spaces.
    pub fn shape(&self) -> Vec<usize> {
        let mut shape = vec![self.fillers.dim()];
        shape.extend(self.roles.iter().rev().map(RoleSpace::dim));
        shape
    }
}

/// The tensor of one morpheme.
pub fn morpheme_tpr(m: &Morpheme, spaces: &MorphemeSpaces) -> Result<TprTensor> {
    let s = morpheme_structure(m, &spaces.config)?;
    bind_hierarchical(&s, &spaces.fillers, &spaces.role_refs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub morpheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<String>,
    pub structure: Structure,
}

const DICTIONARY_FORMAT: &str = "polylm-tpr-dictionary";
const DICTIONARY_VERSION: u32 = 1;

/// Every distinct morpheme of a lexicon with its binding tree. Tensors are
/// rebuilt on demand from the spaces, which persist by seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TprDictionary {
    format: String,
    version: u32,
    pub spaces: MorphemeSpaces,
    pub shape: Vec<usize>,
    pub entries: Vec<DictionaryEntry>,
}

impl TprDictionary {
    pub fn from_lexicon(lexicon: &AnalysisLexicon, config: MorphemeTprConfig) -> Result<Self> {
        let mut distinct: BTreeMap<(String, Option<String>), &Morpheme> = BTreeMap::new();
        for (_, analyses) in lexicon.iter() {
            for a in analyses {
                for m in &a.morphemes {
                    let surface = if config.char_level { m.surface.clone() } else { None };
                    distinct.entry((m.key(), surface)).or_insert(m);
                }
            }
        }
        let spaces = MorphemeSpaces::build(distinct.values().copied(), config)?;
        let entries = distinct
            .into_iter()
            .map(|((morpheme, surface), m)| {
                Ok(DictionaryEntry {
                    morpheme,
                    surface,
                    structure: morpheme_structure(m, &spaces.config)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TprDictionary {
            format: DICTIONARY_FORMAT.into(),
            version: DICTIONARY_VERSION,
            shape: spaces.shape(),
            spaces,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(gold structure, tensor)` for every entry.
    pub fn tensors(&self) -> Result<Vec<(Structure, TprTensor)>> {
        let roles = self.spaces.role_refs();
        self.entries
            .iter()
            .map(|e| Ok((e.structure.clone(), bind_hierarchical(&e.structure, &self.spaces.fillers, &roles)?)))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let d: TprDictionary = serde_json::from_str(&text)?;
        if d.format != DICTIONARY_FORMAT || d.version != DICTIONARY_VERSION {
            return Err(Error::Model(format!("unsupported dictionary {} v{}", d.format, d.version)));
        }
        if d.shape != d.spaces.shape() {
            return Err(Error::Model("dictionary shape does not match its spaces".into()));
        }
        Ok(d)
    }
}
