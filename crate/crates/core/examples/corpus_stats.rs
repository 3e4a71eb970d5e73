//! Type-token ratio and mean distance to a novel type for a small corpus.
//!
//! ```text
//! cargo run --example corpus_stats [corpus.txt]
//! ```

use polylm::corpus_stats::{corpus_summary, load_corpus, mean_distance_to_novel, type_token_ratio, Corpus, StatsReport};

const SAMPLE: &str = "\
Mba'éichapa reiko
Aiko porã ha nde
Che aiko porã avei
Mba'éichapa oiko nde ru
";

fn main() -> polylm::Result<()> {
    let corpus = match std::env::args().nth(1) {
        Some(path) => load_corpus(path)?,
        None => Corpus::parse(SAMPLE),
    };
    let tokens: Vec<&str> = corpus.tokens().collect();
    println!("tokens: {}", tokens.len());
    println!("TTR:    {:.4}", type_token_ratio(&tokens)?);
    println!("MDN:    {:.4}", mean_distance_to_novel(&tokens)?);

    // a repeated type between two novel ones
    println!("MDN [a b a c] = {:.4}", mean_distance_to_novel(&["a", "b", "a", "c"])?);

    println!();
    println!("{}", StatsReport::TSV_HEADER);
    println!("{}", corpus_summary(&corpus)?.to_tsv_row());
    Ok(())
}
