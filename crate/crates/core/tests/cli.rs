use std::path::{Path, PathBuf};
use std::process::Command;

use polylm::service::cli::run;

const CORPUS: &str = "ahata ko'ápe\nrehóta pe\nahata ko'ápe ko'ágã\nohopa ha'e\n";

const LEXICON: &str = "\
ahata\ta<p1>+ha<v>+ta<fut>\ta>ha>ta
rehóta\tre<p2>+hó<v>+ta<fut>\tre>hó>ta
ohopa\to<p3>+ho<v>+pa<qst>\to>ho>pa
ohopa\to<p3>+ho<v>+pa<all>\to>ho>pa
";

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("train.txt"), CORPUS).unwrap();
        std::fs::write(dir.path().join("lex.tsv"), LEXICON).unwrap();
        std::fs::write(dir.path().join("gold.tsv"), "ohopa\to<p3>+ho<v>+pa<qst>\nohopa\to<p3>+ho<v>+pa<qst>\n").unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }
}

fn polylm(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("polylm").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn train_char_model(fx: &Fixture) -> String {
    let model = fx.p("char.json");
    let (code, _, err) = polylm(&["lm-train", &fx.p("train.txt"), "--order", "3", "--out", &model]);
    assert_eq!(code, 0, "{err}");
    model
}

#[test]
fn stats_prints_header_and_row() {
    let fx = Fixture::new();
    let (code, out, _) = polylm(&["stats", &fx.p("train.txt")]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "Sentences\tTokens\tTypes\tTTR\tMDN");
    assert!(lines[1].starts_with("4\t9\t7\t"), "{}", lines[1]);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let (code, _, err) = polylm(&["bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("bogus"));
}

#[test]
fn runtime_errors_are_one_line() {
    let (code, _, err) = polylm(&["stats", "/nonexistent/corpus.txt"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("polylm: error: "));
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn bpe_learn_then_segment() {
    let fx = Fixture::new();
    let merges = fx.p("merges.txt");
    assert_eq!(polylm(&["bpe-learn", &fx.p("train.txt"), "--merges", "5", "--out", &merges]).0, 0);
    assert_eq!(std::fs::read_to_string(&merges).unwrap().lines().count(), 5);
    let (code, out, _) = polylm(&["segment", &fx.p("train.txt"), "--merges", &merges]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 4);
    let joined: Vec<String> = out.lines().map(|l| l.replace("@@ ", "")).collect();
    let expected: Vec<&str> = CORPUS.lines().collect();
    assert_eq!(joined, expected);
}

#[test]
fn segment_with_lexicon_and_symbols() {
    let fx = Fixture::new();
    let (code, out, _) = polylm(&["segment", &fx.p("train.txt"), "--lexicon", &fx.p("lex.tsv")]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().nth(1).unwrap(), "re@@ hó@@ ta p@@ e");
    let (_, symbols, _) = polylm(&["segment", &fx.p("train.txt"), "--lexicon", &fx.p("lex.tsv"), "--symbols"]);
    assert_eq!(symbols.lines().nth(1).unwrap(), "r e@ h ó@ t a@ _ p@ e@");
}

#[test]
fn weight_lexicon_both_ways() {
    let fx = Fixture::new();
    let (code, out, _) = polylm(&["weight-lexicon", "--lexicon", &fx.p("lex.tsv"), "--annotated", &fx.p("gold.tsv")]);
    assert_eq!(code, 0);
    assert!(out.contains("pa<qst>\to>ho>pa\t0"), "{out}");
    let merges = fx.p("merges.txt");
    polylm(&["bpe-learn", &fx.p("train.txt"), "--merges", "3", "--out", &merges]);
    let (code, out, _) = polylm(&["weight-lexicon", "--lexicon", &fx.p("lex.tsv"), "--merges", &merges]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 4);
    assert_eq!(polylm(&["weight-lexicon", "--lexicon", &fx.p("lex.tsv")]).0, 1);
}

#[test]
fn train_eval_and_predict() {
    let fx = Fixture::new();
    let model = train_char_model(&fx);
    let (code, out, err) = polylm(&["lm-eval", &fx.p("train.txt"), "--model", &model]);
    assert_eq!(code, 0, "{err}");
    let row: Vec<&str> = out.lines().nth(1).unwrap().split('\t').collect();
    // token and char perplexity coincide under character segmentation
    assert_eq!(row[4], row[5]);

    let (code, out, _) = polylm(&["predict", "--model", &model, "--context", "ahata ko", "--n", "2"]);
    assert_eq!(code, 0);
    let first: Vec<&str> = out.lines().next().unwrap().split('\t').collect();
    assert_eq!(first[0], "'");
    assert_eq!(first[3], "false");

    let (code, out, _) = polylm(&["kb-eval", "--model", &model, "--script", &fx.p("train.txt"), "--ns", "1,3"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn eval_with_a_different_segmenter_fails_with_oov_report() {
    let fx = Fixture::new();
    let model = train_char_model(&fx);
    let (code, _, err) = polylm(&["lm-eval", &fx.p("train.txt"), "--model", &model, "--lexicon", &fx.p("lex.tsv")]);
    assert_ne!(code, 0);
    assert!(err.contains("OOV report"), "{err}");
}

#[test]
fn lexicon_model_completes_the_open_unit() {
    let fx = Fixture::new();
    let model = fx.p("lex.json");
    let (code, _, err) = polylm(&[
        "lm-train", &fx.p("train.txt"), "--lexicon", &fx.p("lex.tsv"), "--order", "4", "--out", &model,
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = polylm(&["predict", "--model", &model, "--context", "rehó", "--n", "1"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.split('\t').next(), Some("ta"));
}

#[test]
fn tpr_build_and_autoencode() {
    let fx = Fixture::new();
    let dict = fx.p("dict.json");
    let (code, _, err) = polylm(&["tpr-build", "--lexicon", &fx.p("lex.tsv"), "--char-level", "--out", &dict]);
    assert_eq!(code, 0, "{err}");
    let params = fx.p("ae.json");
    let vectors = fx.p("vectors.jsonl");
    let (code, out, err) = polylm(&[
        "tpr-autoencode", "--dictionary", &dict, "--latent", "4", "--epochs", "20", "--out", &params, "--vectors",
        &vectors,
    ]);
    assert_eq!(code, 0, "{err}");
    let losses: Vec<f64> = out.lines().skip(1).map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(losses.len(), 21);
    assert!(losses[20] < losses[0]);
    assert!(Path::new(&params).exists());
    assert!(std::fs::read_to_string(&vectors).unwrap().lines().count() >= 7);
}

#[test]
fn serve_rejects_bad_manifest() {
    let fx = Fixture::new();
    std::fs::write(fx.path("manifest.json"), "[]").unwrap();
    let (code, _, err) = polylm(&["serve", "--manifest", &fx.p("manifest.json"), "--addr", "127.0.0.1:0"]);
    assert_eq!(code, 1);
    assert!(err.contains("no models"));
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_polylm");
    let fx = Fixture::new();
    let ok = Command::new(exe).args(["stats", &fx.p("train.txt")]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("Sentences"));
    let bad = Command::new(exe).arg("bogus").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
