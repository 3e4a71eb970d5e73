//! `polylm` command line.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::http::{resolve_addr, serve};
use super::{preprocess_context, ModelRegistry};
use crate::analyzer_weighting::{bpe_unit_weights, read_annotated, supervised_weights, AnalysisLexicon, SelectionPolicy};
use crate::autoencoder::{encode_all, train_autoencoder, Activation, Dataset, Objective, TrainConfig};
use crate::corpus_stats::{corpus_summary, load_corpus, StatsReport};
use crate::error::{Error, Result};
use crate::ngram_lm::{evaluate, EvalReport, ModelDocument, NgramLm};
use crate::predictor::{predict, simulate_typing, PredictorConfig, TypingReport};
use crate::tokenization::{
    bpe_learn, mark_boundaries, write_segmented_line, Backoff, SegmenterMode, SegmenterSpec, SymbolScheme,
};
use crate::tpr::{FillerScheme, LossConfig, MorphemeTprConfig, TprDictionary};

#[derive(Parser, Debug)]
#[command(name = "polylm", version, about = "Subword language modelling and text prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct SegArgs {
    /// char, bpe or lexicon (inferred from the files given when omitted)
    #[arg(long)]
    mode: Option<SegmenterMode>,
    /// BPE merges file
    #[arg(long)]
    merges: Option<PathBuf>,
    /// Analysis lexicon (TSV)
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Segmenter for words missing from the lexicon: char or bpe
    #[arg(long)]
    backoff: Option<Backoff>,
    /// Analysis selection: shortest or min-weight
    #[arg(long)]
    policy: Option<SelectionPolicy>,
}

impl SegArgs {
    fn given(&self) -> bool {
        self.mode.is_some() || self.merges.is_some() || self.lexicon.is_some()
    }

    /// Paths are made absolute so the settings can be stored in a model file.
    fn spec(&self) -> Result<SegmenterSpec> {
        let abs = |p: &PathBuf| std::path::absolute(p).map_err(|e| Error::io(p, e));
        let mode = self.mode.unwrap_or(match (&self.lexicon, &self.merges) {
            (Some(_), _) => SegmenterMode::Lexicon,
            (None, Some(_)) => SegmenterMode::Bpe,
            _ => SegmenterMode::Char,
        });
        Ok(SegmenterSpec {
            mode,
            backoff: self.backoff,
            merges: self.merges.as_ref().map(abs).transpose()?,
            lexicon: self.lexicon.as_ref().map(abs).transpose()?,
            policy: self.policy,
        })
    }
}

#[derive(Args, Debug, Clone)]
struct PredictArgs {
    /// Number of candidates
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Context window in symbols
    #[arg(long, default_value_t = 30)]
    window: usize,
    #[arg(long, default_value_t = 40)]
    max_unroll: usize,
    #[arg(long)]
    min_length: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    logprob_floor: Option<f64>,
}

impl PredictArgs {
    fn config(&self, n: usize) -> PredictorConfig {
        PredictorConfig {
            context_window: self.window,
            n_candidates: n,
            max_unroll: self.max_unroll,
            min_length: self.min_length,
            logprob_floor: self.logprob_floor,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sentence, token and type counts, TTR and MDN as TSV
    Stats {
        corpus: PathBuf,
        #[arg(long)]
        no_header: bool,
    },
    /// Learn BPE merges from a corpus
    BpeLearn {
        corpus: PathBuf,
        /// Number of merges
        #[arg(long)]
        merges: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Segment a corpus, one sentence per line
    Segment {
        corpus: PathBuf,
        #[command(flatten)]
        seg: SegArgs,
        /// Print boundary-marked symbols instead of `@@ ` segments
        #[arg(long)]
        symbols: bool,
    },
    /// Reweight an analysis lexicon
    WeightLexicon {
        #[arg(long)]
        lexicon: PathBuf,
        /// Disambiguated corpus (wordform<TAB>analysis) for supervised weights
        #[arg(long, conflicts_with = "merges")]
        annotated: Option<PathBuf>,
        /// BPE merges for unit-count weights
        #[arg(long)]
        merges: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train an n-gram model
    LmTrain {
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        order: usize,
        /// marked (one token per character) or units (one per subword)
        #[arg(long, default_value = "marked")]
        scheme: SymbolScheme,
        #[command(flatten)]
        seg: SegArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Token, character and word perplexity on a test corpus
    LmEval {
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Override the segmenter stored with the model
        #[command(flatten)]
        seg: SegArgs,
    },
    /// Build the morpheme tensor dictionary of a lexicon
    TprBuild {
        #[arg(long)]
        lexicon: PathBuf,
        /// Bind characters to position roles under each morpheme
        #[arg(long)]
        char_level: bool,
        /// Feature of a bare tag, as TAG=FEATURE (repeatable)
        #[arg(long = "tag-feature", value_parser = parse_pair)]
        tag_features: Vec<(String, String)>,
        /// Dense filler embeddings of this size instead of one-hot
        #[arg(long)]
        dense: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train the morpheme tensor autoencoder
    TprAutoencode {
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long, default_value_t = 16)]
        latent: usize,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "linear")]
        activation: Activation,
        /// Train on mean squared error instead of the unbinding loss
        #[arg(long)]
        mse: bool,
        /// Penalty weight on roles a morpheme leaves empty
        #[arg(long, default_value_t = 0.0)]
        unbound_weight: f64,
        /// Where to write the trained parameters
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Where to write the morpheme vectors (JSON lines)
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Suggest continuations of a context
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        context: String,
        #[command(flatten)]
        opts: PredictArgs,
    },
    /// Recall and keystroke savings of typing a script
    KbEval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        script: PathBuf,
        /// Candidate counts to evaluate, comma separated
        #[arg(long = "ns", value_delimiter = ',', default_value = "1,3")]
        ns: Vec<usize>,
        #[command(flatten)]
        opts: PredictArgs,
    },
    /// Serve predictions over HTTP
    Serve {
        #[arg(long)]
        manifest: PathBuf,
        /// Bind address (default from POLYLM_ADDR, else 127.0.0.1:8080)
        #[arg(long)]
        addr: Option<String>,
    },
}

fn parse_pair(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.into(), b.into())),
        _ => Err(format!("expected TAG=FEATURE, got {s:?}")),
    }
}

fn open_out(path: &Option<PathBuf>, out: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = File::create(p).map_err(|e| Error::io(p, e))?;
            f(&mut file).map_err(|e| Error::io(p, e))
        }
        None => f(out).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn load_model(path: &Path) -> Result<(ModelDocument, NgramLm)> {
    let doc = ModelDocument::load(path)?;
    let lm = doc.clone().into_model()?;
    Ok((doc, lm))
}

fn model_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Stats { corpus, no_header } => {
            let report = corpus_summary(&load_corpus(&corpus)?)?;
            if !no_header {
                writeln!(out, "{}", StatsReport::TSV_HEADER).map_err(stdout_err)?;
            }
            writeln!(out, "{}", report.to_tsv_row()).map_err(stdout_err)?;
        }
        Command::BpeLearn { corpus, merges, out: path } => {
            let table = bpe_learn(&load_corpus(&corpus)?, merges);
            log::info!("learned {} merges", table.len());
            open_out(&path, out, |w| table.write(w))?;
        }
        Command::Segment { corpus, seg, symbols } => {
            let segmenter = seg.spec()?.build(Path::new("."))?;
            for sentence in load_corpus(&corpus)?.sentences() {
                let segs = segmenter.segment_sentence(sentence)?;
                let line = if symbols {
                    mark_boundaries(&segs).to_text()
                } else {
                    write_segmented_line(&segs)
                };
                writeln!(out, "{line}").map_err(stdout_err)?;
            }
        }
        Command::WeightLexicon {
            lexicon,
            annotated,
            merges,
            out: path,
        } => {
            let lex = AnalysisLexicon::load(&lexicon)?;
            let weighted = match (annotated, merges) {
                (Some(a), _) => {
                    let file = File::open(&a).map_err(|e| Error::io(&a, e))?;
                    let pairs = read_annotated(BufReader::new(file))?;
                    let (weighted, warnings) = supervised_weights(&pairs, &lex);
                    for w in &warnings {
                        log::warn!("{w}");
                    }
                    weighted
                }
                (None, Some(m)) => bpe_unit_weights(&lex, &crate::tokenization::MergeTable::load(&m)?)?,
                (None, None) => {
                    return Err(Error::Config("weight-lexicon needs --annotated or --merges".into()))
                }
            };
            open_out(&path, out, |w| weighted.write(w))?;
        }
        Command::LmTrain {
            corpus,
            order,
            scheme,
            seg,
            out: path,
        } => {
            let spec = seg.spec()?;
            let segmenter = spec.build(Path::new("."))?;
            let corpus = load_corpus(&corpus)?;
            let streams = corpus
                .sentences()
                .iter()
                .map(|s| Ok(scheme.tokens(&segmenter.segment_sentence(s)?)))
                .collect::<Result<Vec<_>>>()?;
            let lm = NgramLm::train(&streams, order)?;
            lm.save(&path, scheme, &spec)?;
            log::info!("trained order-{order} model with {} symbols", crate::ngram_lm::LanguageModel::vocab(&lm).len());
        }
        Command::LmEval { corpus, model, seg } => {
            let (doc, lm) = load_model(&model)?;
            let test = load_corpus(&corpus)?;
            let (spec, base) = if seg.given() {
                (seg.spec()?, PathBuf::from("."))
            } else {
                (doc.segmenter.clone(), model_dir(&model))
            };
            let segmenter = spec.build(&base)?;
            let report = evaluate(&lm, &test, &segmenter, doc.scheme)?;
            if spec.mode != doc.segmenter.mode {
                return Err(Error::Config(format!(
                    "segmenter mode {} differs from the model's {}; OOV report: {} of {} test tokens unknown to the model",
                    spec.mode,
                    doc.segmenter.mode,
                    report.oov_count,
                    report.token_count - test.len()
                )));
            }
            writeln!(out, "{}\toov", EvalReport::TSV_HEADER).map_err(stdout_err)?;
            writeln!(out, "{}\t{}", report.to_tsv_row(), report.oov_count).map_err(stdout_err)?;
        }
        Command::TprBuild {
            lexicon,
            char_level,
            tag_features,
            dense,
            seed,
            out: path,
        } => {
            let cfg = MorphemeTprConfig {
                tag_features: tag_features.into_iter().collect(),
                char_level,
                filler_scheme: if dense.is_some() { FillerScheme::Dense } else { FillerScheme::OneHot },
                filler_dim: dense,
                seed,
            };
            let dict = TprDictionary::from_lexicon(&AnalysisLexicon::load(&lexicon)?, cfg)?;
            log::info!("{} morphemes, tensor shape {:?}", dict.len(), dict.shape);
            let json = serde_json::to_string_pretty(&dict)?;
            open_out(&path, out, |w| writeln!(w, "{json}"))?;
        }
        Command::TprAutoencode {
            dictionary,
            latent,
            epochs,
            lr,
            seed,
            activation,
            mse,
            unbound_weight,
            out: path,
            vectors,
        } => {
            let dict = TprDictionary::load(&dictionary)?;
            let samples = dict.tensors()?;
            let roles = dict.spaces.role_refs();
            let data = Dataset {
                samples: &samples,
                fillers: &dict.spaces.fillers,
                roles: &roles,
            };
            let objective = if mse {
                Objective::Mse
            } else {
                Objective::Unbinding(LossConfig { unbound_weight })
            };
            let cfg = TrainConfig {
                latent_dim: latent,
                epochs,
                lr,
                seed,
                activation,
                objective,
            };
            let trained = train_autoencoder(&data, &cfg)?;
            writeln!(out, "epoch\tloss").map_err(stdout_err)?;
            for (i, l) in trained.trace.iter().enumerate() {
                writeln!(out, "{i}\t{l:.6}").map_err(stdout_err)?;
            }
            if let Some(p) = path {
                trained.params.save(&p)?;
            }
            if let Some(p) = vectors {
                let ids: Vec<String> = dict
                    .entries
                    .iter()
                    .map(|e| match &e.surface {
                        Some(s) => format!("{}|{s}", e.morpheme),
                        None => e.morpheme.clone(),
                    })
                    .collect();
                let vs = encode_all(&trained.params, ids.iter().map(String::as_str).zip(samples.iter().map(|(_, t)| t)))?;
                let mut file = File::create(&p).map_err(|e| Error::io(&p, e))?;
                for v in vs {
                    writeln!(file, "{}", serde_json::to_string(&v)?).map_err(|e| Error::io(&p, e))?;
                }
            }
        }
        Command::Predict { model, context, opts } => {
            let (doc, lm) = load_model(&model)?;
            if doc.scheme != SymbolScheme::Marked {
                return Err(Error::Model("prediction needs a boundary-marked model".into()));
            }
            let segmenter = doc.segmenter.build(&model_dir(&model))?;
            let ctx = preprocess_context(&context, &segmenter, crate::ngram_lm::LanguageModel::vocab(&lm))?;
            for c in predict(&lm, &ctx, &opts.config(opts.n))? {
                writeln!(out, "{}\t{}\t{:.6}\t{}", c.display_text(), c.text(), c.logprob, c.truncated)
                    .map_err(stdout_err)?;
            }
        }
        Command::KbEval { model, script, ns, opts } => {
            let (doc, lm) = load_model(&model)?;
            if doc.scheme != SymbolScheme::Marked {
                return Err(Error::Model("typing simulation needs a boundary-marked model".into()));
            }
            let segmenter = doc.segmenter.build(&model_dir(&model))?;
            let script = load_corpus(&script)?;
            writeln!(out, "{}", TypingReport::TSV_HEADER).map_err(stdout_err)?;
            for n in ns {
                let r = simulate_typing(&lm, &script, &segmenter, &opts.config(n))?;
                writeln!(out, "{}", r.to_tsv_row(n)).map_err(stdout_err)?;
            }
        }
        Command::Serve { manifest, addr } => {
            let registry = ModelRegistry::load_manifest(&manifest)?;
            serve(resolve_addr(addr.as_deref())?, registry)?;
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command. Returns
/// the process exit status: 0 on success, 2 on usage errors, 1 otherwise.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "polylm: error: {msg}");
            1
        }
    }
}
