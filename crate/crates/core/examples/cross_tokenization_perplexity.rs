//! Trains n-gram models over character, BPE and lexicon segmentations and
//! compares them on a per-character basis, which does not depend on how the
//! text was cut into tokens.

use polylm::analyzer_weighting::{AnalysisLexicon, SelectionPolicy};
use polylm::corpus_stats::Corpus;
use polylm::ngram_lm::{evaluate, EvalReport, LanguageModel, NgramLm, UniformModel};
use polylm::tokenization::{bpe_learn, Backoff, Segmenter, SymbolScheme};

const TRAIN: &str = "\
ahata ko'ápe
rehóta pe
ahata ko'ápe ko'ágã
ohóta ha'e avei
rehecha ko'ápe
ahecha pe
";

const TEST: &str = "\
rehóta ko'ápe
ahecha ha'e
";

const LEXICON: &str = "\
ahata\ta<p1>+ha<v>+ta<fut>\ta>ha>ta
rehóta\tre<p2>+hó<v>+ta<fut>\tre>hó>ta
ohóta\to<p3>+hó<v>+ta<fut>\to>hó>ta
ahecha\ta<p1>+hecha<v>\ta>hecha
rehecha\tre<p2>+hecha<v>\tre>hecha
";

fn main() -> polylm::Result<()> {
    let train = Corpus::parse(TRAIN);
    let test = Corpus::parse(TEST);
    let merges = bpe_learn(&train, 10);
    let lexicon = AnalysisLexicon::read(std::io::Cursor::new(LEXICON))?;
    let segmenters = [
        ("char", Segmenter::Char),
        ("bpe", Segmenter::Bpe(merges.clone())),
        ("lexicon", Segmenter::lexicon(lexicon, SelectionPolicy::Shortest, Backoff::Bpe, Some(merges))?),
    ];

    println!("model\tscheme\t{}", EvalReport::TSV_HEADER);
    for (name, seg) in &segmenters {
        for scheme in [SymbolScheme::Marked, SymbolScheme::Units] {
            let streams = train
                .sentences()
                .iter()
                .map(|s| Ok(scheme.tokens(&seg.segment_sentence(s)?)))
                .collect::<polylm::Result<Vec<_>>>()?;
            let lm = NgramLm::train(&streams, 4)?;
            let r = evaluate(&lm, &test, seg, scheme)?;
            println!("{name}\t{scheme:?}\t{}", r.to_tsv_row());

            if *name == "char" && scheme == SymbolScheme::Units {
                // a uniform model over the same vocabulary, for reference
                let uniform = UniformModel::new(lm.vocab().clone());
                let u = evaluate(&uniform, &test, seg, scheme)?;
                println!("uniform\t{scheme:?}\t{}", u.to_tsv_row());
            }
        }
    }
    Ok(())
}
