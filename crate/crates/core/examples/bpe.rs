//! Learns byte-pair merges and segments seen and unseen words.
//!
//! ```text
//! cargo run --example bpe [num_merges]
//! ```

use polylm::corpus_stats::Corpus;
use polylm::tokenization::{bpe_apply, bpe_learn, join, write_segmented_line};

const SAMPLE: &str = "\
ahata ahecha ahayhu
rehóta rehecha rehayhu
ohóta ohecha ohayhu
jahata jahecha jahayhu
";

fn main() -> polylm::Result<()> {
    let merges = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let corpus = Corpus::parse(SAMPLE);
    let table = bpe_learn(&corpus, merges);

    println!("{} merges:", table.len());
    let mut out = std::io::stdout();
    table.write(&mut out).expect("stdout");

    println!();
    for word in ["ahecha", "rehayhu", "pehóta", "ñandeyvy"] {
        let seg = bpe_apply(word, &table)?;
        assert_eq!(join(&seg), word);
        println!("{word:>10} -> {}", write_segmented_line(&[seg]));
    }
    Ok(())
}
