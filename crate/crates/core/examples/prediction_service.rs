//! Loads a model into the service registry and answers requests. With
//! `serve` as argument it also listens on POLYLM_ADDR (default
//! 127.0.0.1:8080) until interrupted.
//!
//! ```text
//! cargo run --example prediction_service -- serve
//! curl -s localhost:8080/v1/predict -d '{"context": "aiko po", "n": 3}' -H 'content-type: application/json'
//! ```

use polylm::corpus_stats::Corpus;
use polylm::ngram_lm::NgramLm;
use polylm::service::http::{resolve_addr, serve};
use polylm::service::{LoadedModel, ModelRegistry, PredictRequest};
use polylm::tokenization::{mark_boundaries, Segmenter, SegmenterSpec};

const TRAIN: &str = "\
mba'éichapa reiko
aiko porã ha nde
aiko porã avei
";

fn main() -> polylm::Result<()> {
    let corpus = Corpus::parse(TRAIN);
    let streams = corpus
        .sentences()
        .iter()
        .map(|s| Ok(mark_boundaries(&Segmenter::Char.segment_sentence(s)?)))
        .collect::<polylm::Result<Vec<_>>>()?;
    let model = LoadedModel {
        id: "gn-char".into(),
        lm: NgramLm::train_streams(&streams, 5)?,
        segmenter: Segmenter::Char,
        segmenter_spec: SegmenterSpec::char(),
    };
    let registry = ModelRegistry::new(vec![model])?;
    println!("{}", serde_json::to_string_pretty(&registry.models())?);

    for (context, n, model_id) in [("aiko po", 3, None), ("mba", 2, Some("gn-char")), ("a", 0, None), ("a", 1, Some("qu"))] {
        let req = PredictRequest { context: context.into(), n, model_id: model_id.map(str::to_string) };
        match registry.handle_predict(&req) {
            Ok(resp) => println!("{} -> {}", serde_json::to_string(&req)?, serde_json::to_string(&resp.candidates)?),
            Err(e) => println!("{} -> {} {}", serde_json::to_string(&req)?, e.status(), e.message()),
        }
    }

    if std::env::args().nth(1).as_deref() == Some("serve") {
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
        serve(resolve_addr(None)?, registry)?;
    }
    Ok(())
}
