//! Next-unit suggestions and a simulated typing session.

use polylm::corpus_stats::Corpus;
use polylm::ngram_lm::NgramLm;
use polylm::predictor::{predict, simulate_typing, PredictorConfig, TypingReport};
use polylm::service::preprocess_context;
use polylm::tokenization::{bpe_learn, mark_boundaries, Segmenter, SymbolStream};

const TRAIN: &str = "\
mba'éichapa reiko
aiko porã ha nde
mba'éichapa reiko ko'ápe
aiko porã avei
mba'éichapa oiko nde ru
";

fn main() -> polylm::Result<()> {
    let corpus = Corpus::parse(TRAIN);
    let seg = Segmenter::Bpe(bpe_learn(&corpus, 20));
    let streams = corpus
        .sentences()
        .iter()
        .map(|s| Ok(mark_boundaries(&seg.segment_sentence(s)?)))
        .collect::<polylm::Result<Vec<SymbolStream>>>()?;
    let lm = NgramLm::train_streams(&streams, 6)?;

    let cfg = PredictorConfig::with_n(3);
    for context in ["", "mba'", "aiko po", "mba'éichapa "] {
        let ctx = preprocess_context(context, &seg, polylm::ngram_lm::LanguageModel::vocab(&lm))?;
        let cands: Vec<String> = predict(&lm, &ctx, &cfg)?
            .iter()
            .map(|c| format!("{}{} ({:.2})", c.display_text(), if c.truncated { "…" } else { "" }, c.logprob))
            .collect();
        println!("{context:>14}| {}", cands.join("  "));
    }

    let script = Corpus::parse("mba'éichapa reiko\naiko porã");
    println!();
    println!("{}", TypingReport::TSV_HEADER);
    for n in [1, 3, 5] {
        let r = simulate_typing(&lm, &script, &seg, &PredictorConfig::with_n(n))?;
        println!("{}", r.to_tsv_row(n));
    }
    Ok(())
}
