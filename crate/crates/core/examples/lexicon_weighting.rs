//! Weights an ambiguous analysis lexicon from a disambiguated sample, then
//! picks analyses under both selection policies.

use std::io::Cursor;

use polylm::analyzer_weighting::{
    bpe_unit_weights, read_annotated, select_analysis, supervised_weights, AnalysisLexicon, SelectionPolicy,
};
use polylm::corpus_stats::Corpus;
use polylm::tokenization::bpe_learn;

const LEXICON: &str = "\
ohopa\to<p3>+ho<v>+pa<qst>\to>ho>pa
ohopa\to<p3>+ho<v>+pa<all>\to>ho>pa
ohopa\tohopa<n>\tohopa
rehóta\tre<p2>+hó<v>+ta<fut>\tre>hó>ta
";

const ANNOTATED: &str = "\
ohopa\to<p3>+ho<v>+pa<all>
ohopa\to<p3>+ho<v>+pa<all>
ohopa\to<p3>+ho<v>+pa<qst>
jaha\tja<p1pl>+ha<v>
";

fn show(title: &str, lex: &AnalysisLexicon) -> polylm::Result<()> {
    println!("{title}");
    let mut out = std::io::stdout();
    lex.write(&mut out).expect("stdout");
    for policy in [SelectionPolicy::MinWeight, SelectionPolicy::Shortest] {
        let a = select_analysis("ohopa", lex, policy)?;
        println!("  {policy:?}: {}", a.analysis_string());
    }
    println!();
    Ok(())
}

fn main() -> polylm::Result<()> {
    let lex = AnalysisLexicon::read(Cursor::new(LEXICON))?;
    show("unweighted", &lex)?;

    let gold = read_annotated(Cursor::new(ANNOTATED))?;
    let (weighted, warnings) = supervised_weights(&gold, &lex);
    for w in &warnings {
        println!("warning: {w}");
    }
    show("supervised (1 - P(a|w))", &weighted)?;

    let table = bpe_learn(&Corpus::parse("ohopa ohopa rehóta ohóta"), 6);
    show("BPE unit counts", &bpe_unit_weights(&lex, &table)?)?;
    Ok(())
}
