//! Prediction service and command-line front end.
//!
//! Models are listed in a JSON manifest and loaded once at startup:
//!
//! ```json
//! [{"model_id": "gn-char", "lm_path": "gn.json", "segmenter": {"mode": "char"}}]
//! ```
//!
//! Paths are relative to the manifest. The segmenter defaults to the one
//! recorded in the model file. Request handling is a pure function of the
//! loaded registry ([`ModelRegistry::handle_predict`]); the HTTP layer only
//! decodes and encodes JSON.

pub mod cli;
pub mod http;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ngram_lm::{LanguageModel, ModelDocument, NgramLm, Vocab};
use crate::predictor::{predict, Candidate, PredictorConfig};
use crate::tokenization::{mark_boundaries, mark_partial, Segmenter, SegmenterSpec, Symbol, SymbolScheme, SymbolStream};

pub const ADDR_ENV: &str = "POLYLM_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub model_id: String,
    pub lm_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segmenter: Option<SegmenterSpec>,
}

/// A model ready to answer requests.
pub struct LoadedModel {
    pub id: String,
    pub lm: NgramLm,
    pub segmenter: Segmenter,
    pub segmenter_spec: SegmenterSpec,
}

/// Removes segmentation markers (`@@ `) a client may have left in the text.
pub fn strip_markers(raw: &str) -> String {
    let s = raw.replace("@@ ", "");
    match s.strip_suffix("@@") {
        Some(rest) => rest.to_string(),
        None => s,
    }
}

/// Turns raw typed text into the symbol context the predictor sees. Unless
/// the text ends in whitespace, the last word is still being typed and its
/// final unit is left open, provided the model has seen that symbol open.
/// Otherwise (always the case for character models) it is closed.
pub fn preprocess_context(raw: &str, segmenter: &Segmenter, vocab: &Vocab) -> Result<SymbolStream> {
    let text = strip_markers(raw);
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return Ok(SymbolStream::default());
    }
    let segs = segmenter.segment_sentence(&words)?;
    if text.ends_with(char::is_whitespace) {
        let mut s = mark_boundaries(&segs);
        s.push(Symbol::Separator);
        Ok(s)
    } else {
        let mut symbols = mark_partial(&segs).into_symbols();
        if let Some(Symbol::Char { ch, boundary: false }) = symbols.last().copied() {
            let open = Symbol::plain(ch).token();
            if vocab.id(&open).is_none() && vocab.id(&Symbol::marked(ch).token()).is_some() {
                *symbols.last_mut().expect("non-empty") = Symbol::marked(ch);
            }
        }
        Ok(SymbolStream::new(symbols))
    }
}

impl LoadedModel {
    pub fn from_file(id: &str, lm_path: &Path, segmenter: Option<SegmenterSpec>, base_dir: &Path) -> Result<Self> {
        let doc = ModelDocument::load(lm_path)?;
        if doc.scheme != SymbolScheme::Marked {
            return Err(Error::Model(format!(
                "model {id:?} uses the {:?} scheme; prediction needs boundary-marked symbols",
                doc.scheme
            )));
        }
        let (spec, dir) = match segmenter {
            Some(s) => (s, base_dir.to_path_buf()),
            None => (
                doc.segmenter.clone(),
                lm_path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
        };
        let segmenter = spec.build(&dir)?;
        Ok(LoadedModel {
            id: id.to_string(),
            lm: doc.into_model()?,
            segmenter,
            segmenter_spec: spec,
        })
    }

    pub fn candidates(&self, context: &str, n: usize) -> Result<Vec<Candidate>> {
        let ctx = preprocess_context(context, &self.segmenter, self.lm.vocab())?;
        predict(&self.lm, &ctx, &PredictorConfig::with_n(n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub context: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub display_text: String,
    pub logprob: f64,
    pub truncated: bool,
}

impl From<&Candidate> for CandidateView {
    fn from(c: &Candidate) -> Self {
        CandidateView {
            display_text: c.display_text(),
            logprob: c.logprob,
            truncated: c.truncated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub candidates: Vec<CandidateView>,
    pub model_id: String,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_id: String,
    pub order: usize,
    pub vocab_size: usize,
    pub segmenter: String,
}

/// Request failure with the HTTP status it maps to.
#[derive(Debug, Clone, PartialEq)]
pub enum ServiceError {
    BadRequest(String),
    UnknownModel(String),
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::BadRequest(_) => 400,
            ServiceError::UnknownModel(_) => 404,
            ServiceError::Internal(_) => 500,
        }
    }

    pub fn message(&self) -> String {
        match self {
            ServiceError::BadRequest(m) | ServiceError::Internal(m) => m.clone(),
            ServiceError::UnknownModel(id) => format!("unknown model_id {id:?}"),
        }
    }
}

/// Read-only set of loaded models.
pub struct ModelRegistry {
    models: BTreeMap<String, LoadedModel>,
    default_id: String,
}

impl ModelRegistry {
    /// The first model becomes the default for requests without a model id.
    pub fn new(models: Vec<LoadedModel>) -> Result<Self> {
        let default_id = models
            .first()
            .map(|m| m.id.clone())
            .ok_or_else(|| Error::Config("manifest lists no models".into()))?;
        let mut map = BTreeMap::new();
        for m in models {
            let id = m.id.clone();
            if map.insert(id.clone(), m).is_some() {
                return Err(Error::Config(format!("duplicate model_id {id:?}")));
            }
        }
        Ok(ModelRegistry {
            models: map,
            default_id,
        })
    }

    pub fn load_manifest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<ManifestEntry> = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let models = entries
            .into_iter()
            .map(|e| {
                let lm_path = base.join(&e.lm_path);
                LoadedModel::from_file(&e.model_id, &lm_path, e.segmenter, base)
            })
            .collect::<Result<Vec<_>>>()?;
        ModelRegistry::new(models)
    }

    pub fn get(&self, id: &str) -> Option<&LoadedModel> {
        self.models.get(id)
    }

    pub fn default_id(&self) -> &str {
        &self.default_id
    }

    pub fn models(&self) -> Vec<ModelInfo> {
        self.models
            .values()
            .map(|m| ModelInfo {
                model_id: m.id.clone(),
                order: m.lm.order(),
                vocab_size: m.lm.vocab().len(),
                segmenter: m.segmenter.mode().to_string(),
            })
            .collect()
    }

    pub fn handle_predict(&self, req: &PredictRequest) -> Result<PredictResponse, ServiceError> {
        let start = Instant::now();
        if req.n == 0 {
            return Err(ServiceError::BadRequest("n must be at least 1".into()));
        }
        let id = req.model_id.as_deref().unwrap_or(&self.default_id);
        let model = self.get(id).ok_or_else(|| ServiceError::UnknownModel(id.to_string()))?;
        let cands = model.candidates(&req.context, req.n).map_err(|e| match e {
            Error::Domain(_) | Error::Config(_) => ServiceError::BadRequest(e.to_string()),
            other => ServiceError::Internal(other.to_string()),
        })?;
        Ok(PredictResponse {
            candidates: cands.iter().map(CandidateView::from).collect(),
            model_id: id.to_string(),
            latency_ms: start.elapsed().as_secs_f64() * 1000.0,
        })
    }
}
