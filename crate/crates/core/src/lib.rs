//! Language modelling and text prediction for polysynthetic languages.
//!
//! The crate covers the full path from raw corpora to keyboard suggestions:
//! corpus statistics, subword segmentation (characters, BPE or a weighted
//! morphological lexicon), boundary-marked symbol streams, n-gram language
//! models evaluated with tokenisation-independent perplexity, tensor product
//! representations of morphological structure, an autoencoder over those
//! representations, a multi-candidate predictor and an HTTP service.

pub mod analyzer_weighting;
pub mod autoencoder;
pub mod corpus_stats;
pub mod error;
pub mod ngram_lm;
pub mod predictor;
pub mod service;
pub mod tokenization;
pub mod tpr;

pub use error::{Error, Result};
