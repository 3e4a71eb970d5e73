//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail.
//!
//! Every check compares the library against an independent computation
//! written here (brute-force counts, closed forms, explicit sums) rather than
//! against its own output.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tower::ServiceExt;

use polylm::analyzer_weighting::{Analysis, AnalysisLexicon};
use polylm::autoencoder::{gradient_check, train_autoencoder, Activation, AutoencoderParams, Dataset, Objective, TrainConfig};
use polylm::corpus_stats::{mean_distance_to_novel, type_token_ratio, Corpus};
use polylm::ngram_lm::{evaluate, LanguageModel, NgramLm, UniformModel, Vocab, EOS_TOKEN};
use polylm::predictor::{predict, simulate_typing, PredictorConfig, ScriptOracle};
use polylm::service::http::router;
use polylm::service::{preprocess_context, CandidateView, LoadedModel, ModelRegistry, PredictRequest};
use polylm::tokenization::{
    bpe_apply, bpe_learn, join, mark_boundaries, Segmenter, SegmenterSpec, SymbolScheme, SymbolStream,
};
use polylm::tpr::{
    bind, bind_hierarchical, make_role_space, nearest_filler, unbind, unbinding_loss, FillerVocab, LossConfig,
    MorphemeTprConfig, RoleScheme, RoleSpace, Structure, TprDictionary,
};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], max_len: usize) -> String {
    let n = rng.random_range(1..=max_len);
    (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn random_corpus(rng: &mut ChaCha8Rng, alphabet: &[char], sentences: usize, words: usize, max_len: usize) -> Corpus {
    let text: Vec<String> = (0..sentences)
        .map(|_| {
            let n = rng.random_range(1..=words);
            (0..n).map(|_| random_word(rng, alphabet, max_len)).collect::<Vec<_>>().join(" ")
        })
        .collect();
    Corpus::parse(&text.join("\n"))
}

const LETTERS: [char; 6] = ['a', 'b', 'c', 'd', 'e', 'ñ'];

// ---------------------------------------------------------------------------
// corpus metrics

fn brute_ttr(tokens: &[String]) -> f64 {
    let mut types: Vec<&String> = Vec::new();
    for t in tokens {
        if !types.contains(&t) {
            types.push(t);
        }
    }
    types.len() as f64 / tokens.len() as f64
}

/// Gaps between the positions of consecutive first occurrences.
fn brute_mdn(tokens: &[String]) -> f64 {
    let novel: Vec<usize> = (0..tokens.len()).filter(|&i| !tokens[..i].contains(&tokens[i])).collect();
    let gaps: Vec<usize> = novel
        .iter()
        .enumerate()
        .map(|(k, &i)| if k == 0 { i } else { i - novel[k - 1] - 1 })
        .collect();
    gaps.iter().sum::<usize>() as f64 / gaps.len() as f64
}

fn corpus_metrics() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..50 {
        let alphabet = rng.random_range(1..=10);
        let len = rng.random_range(1..=200);
        let tokens: Vec<String> = (0..len).map(|_| format!("t{}", rng.random_range(0..alphabet))).collect();
        let ttr = ok(type_token_ratio(&tokens))?;
        let mdn = ok(mean_distance_to_novel(&tokens))?;
        ensure(ttr == brute_ttr(&tokens), || format!("case {case}: TTR {ttr} vs {}", brute_ttr(&tokens)))?;
        ensure(mdn == brute_mdn(&tokens), || format!("case {case}: MDN {mdn} vs {}", brute_mdn(&tokens)))?;
    }
    let mdn = ok(mean_distance_to_novel(&["a", "b", "a", "c"]))?;
    ensure(mdn == 1.0 / 3.0, || format!("[a,b,a,c] gave MDN {mdn}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("50 sequences exact, [a,b,a,c] -> 1/3, {:.0?}", start.elapsed()))
}

// ---------------------------------------------------------------------------
// BPE

fn bpe_roundtrip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut words_checked = 0;
    for case in 0..100 {
        let corpus = random_corpus(&mut rng, &LETTERS, 8, 6, 7);
        let merges = rng.random_range(0..30);
        let table = bpe_learn(&corpus, merges);
        ensure(bpe_learn(&corpus, merges) == table, || format!("case {case}: merge tables differ"))?;
        for w in corpus.tokens() {
            let seg = ok(bpe_apply(w, &table))?;
            ensure(join(&seg) == w, || format!("case {case}: {w:?} became {:?}", seg.units()))?;
            words_checked += 1;
        }
        // unseen words still roundtrip
        let fresh = random_word(&mut rng, &LETTERS, 10);
        ensure(join(&ok(bpe_apply(&fresh, &table))?) == fresh, || format!("case {case}: unseen {fresh:?}"))?;
    }
    let table = bpe_learn(&Corpus::parse("abab abab abab ab"), 1);
    let first = table.merges().first().cloned();
    ensure(first == Some(("a".into(), "b".into())), || format!("first merge {first:?}"))?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("100 corpora, {words_checked} words roundtrip, first merge (a,b), {:.0?}", start.elapsed()))
}

// ---------------------------------------------------------------------------
// n-gram normalisation

/// Interpolated unigram from raw token counts: `(c(w) + T/V) / (N + T)`.
fn closed_form_unigram(streams: &[Vec<String>], vocab: &Vocab) -> Vec<f64> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for s in streams {
        for t in s.iter().map(String::as_str).chain([EOS_TOKEN]) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let n: u64 = counts.values().sum();
    let t = counts.len() as f64;
    let v = vocab.len() as f64;
    vocab
        .tokens()
        .iter()
        .map(|w| (counts.get(w.as_str()).copied().unwrap_or(0) as f64 + t / v) / (n as f64 + t))
        .collect()
}

fn lm_normalisation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut contexts = 0;
    let mut backoffs = 0;
    while contexts < 1000 {
        let letters = rng.random_range(1..=LETTERS.len());
        let corpus = random_corpus(&mut rng, &LETTERS[..letters], 6, 5, 5);
        let streams: Vec<Vec<String>> = corpus
            .sentences()
            .iter()
            .map(|s| mark_boundaries(&Segmenter::Char.segment_sentence(s).unwrap()).tokens())
            .collect();
        let order = rng.random_range(1..=5);
        let lm = ok(NgramLm::train(&streams, order))?;
        let v = lm.vocab().len() as u32;
        for _ in 0..50 {
            let len = rng.random_range(0..8);
            let ctx: Vec<u32> = (0..len).map(|_| rng.random_range(0..v)).collect();
            let sum: f64 = lm.next_distribution(&ctx).iter().sum();
            ensure((sum - 1.0).abs() <= 1e-9, || format!("order {order}, context {ctx:?}: sum {sum}"))?;
            contexts += 1;
        }
        // a context ending in a symbol never seen as history backs off fully
        let unigram = closed_form_unigram(&streams, lm.vocab());
        for prefix_len in 0..3 {
            let mut ctx: Vec<u32> = (0..prefix_len).map(|_| rng.random_range(0..v)).collect();
            ctx.push(Vocab::UNK);
            let dist = lm.next_distribution(&ctx);
            for (p, q) in dist.iter().zip(&unigram) {
                ensure((p - q).abs() < 1e-12, || format!("backoff context {ctx:?}: {p} vs unigram {q}"))?;
            }
            backoffs += 1;
        }
    }
    Ok(format!("{contexts} contexts sum to 1 within 1e-9, {backoffs} full-backoff contexts equal the unigram"))
}

// ---------------------------------------------------------------------------
// cross-tokenisation perplexity

fn perplexity_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..30 {
        let train = random_corpus(&mut rng, &LETTERS, 10, 6, 6);
        let test = random_corpus(&mut rng, &LETTERS, 5, 6, 8);
        let segmenter = if case % 2 == 0 { Segmenter::Char } else { Segmenter::Bpe(bpe_learn(&train, 10)) };
        let train_tokens = train
            .sentences()
            .iter()
            .flat_map(|s| SymbolScheme::Units.tokens(&segmenter.segment_sentence(s).unwrap()))
            .collect::<Vec<_>>();
        let lm = UniformModel::new(Vocab::new(train_tokens));
        let r = ok(evaluate(&lm, &test, &segmenter, SymbolScheme::Units))?;

        // events: units, separators between words, one end of sentence each
        let mut events = 0usize;
        let mut chars = 0usize;
        for s in test.sentences() {
            let segs = segmenter.segment_sentence(s).unwrap();
            events += segs.iter().map(|g| g.len()).sum::<usize>() + (s.len() - 1) + 1;
            // whitespace and the end of sentence count as one character each
            chars += s.iter().map(|w| w.chars().count()).sum::<usize>() + s.len();
        }
        ensure(r.token_count == events && r.char_count == chars, || {
            format!("case {case}: counted {}/{} vs {events}/{chars}", r.token_count, r.char_count)
        })?;
        let expected = (events as f64 * (lm.vocab().len() as f64).ln() / chars as f64).exp();
        ensure((r.char_ppl - expected).abs() <= 1e-9, || {
            format!("case {case}: char_ppl {} vs closed form {expected}", r.char_ppl)
        })?;

        // with character segmentation the two perplexities coincide exactly
        let streams: Vec<SymbolStream> = train
            .sentences()
            .iter()
            .map(|s| mark_boundaries(&Segmenter::Char.segment_sentence(s).unwrap()))
            .collect();
        let ngram = ok(NgramLm::train_streams(&streams, 3))?;
        let rc = ok(evaluate(&ngram, &test, &Segmenter::Char, SymbolScheme::Marked))?;
        ensure(rc.token_ppl == rc.char_ppl, || format!("case {case}: {} != {}", rc.token_ppl, rc.char_ppl))?;
    }
    Ok("30 cases: uniform char_ppl = exp(E ln V / C) within 1e-9, char segmentation token_ppl == char_ppl".into())
}

// ---------------------------------------------------------------------------
// tensor product representations

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn tpr_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let k = rng.random_range(1..=6);
        let dim = k + rng.random_range(0..3);
        let roles = ok(make_role_space(&ids("r", k), dim, RoleScheme::Orthonormal, Some(rng.random())))?;
        let nf = rng.random_range(1..=6);
        let fillers = ok(FillerVocab::dense(&ids("f", nf), rng.random_range(1..=6), rng.random()))?;
        let mut used: Vec<usize> = (0..k).collect();
        used.truncate(rng.random_range(1..=k));
        let b: Vec<(String, String)> = used.iter().map(|&j| (format!("f{}", rng.random_range(0..nf)), format!("r{j}"))).collect();
        let t = ok(bind(&b, &fillers, &roles))?;
        for (f, r) in &b {
            let u = ok(unbind(&t, r, 0, &roles))?;
            let gold = ok(fillers.vector(f))?;
            let err = u.data().iter().zip(gold).map(|(a, g)| (a - g).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("case {case}: {f}/{r} recovered with error {err}"))?;
            let (_, sim) = ok(nearest_filler(u.data(), &fillers))?;
            ensure(sim >= 1.0 - 1e-9, || format!("case {case}: similarity {sim}"))?;
        }
    }

    let mut worst_intrusion: f64 = 0.0;
    for case in 0..200 {
        let k = rng.random_range(2..=5);
        let dim = rng.random_range(2..=7);
        let vectors: Vec<Vec<f64>> = (0..k).map(|_| unit_gaussian(&mut rng, dim)).collect();
        let roles = ok(RoleSpace::from_vectors(&ids("r", k), vectors.clone()))?;
        let fd = rng.random_range(1..=4);
        let fillers = ok(FillerVocab::dense(&ids("f", k), fd, rng.random()))?;
        let b: Vec<(String, String)> = (0..k).map(|i| (format!("f{i}"), format!("r{i}"))).collect();
        let t = ok(bind(&b, &fillers, &roles))?;
        for i in 0..k {
            let u = ok(unbind(&t, &format!("r{i}"), 0, &roles))?;
            // f_i + Σ_{j≠i} <r_j, r_i> f_j
            let mut expect = ok(fillers.vector(&format!("f{i}")))?.to_vec();
            for j in (0..k).filter(|&j| j != i) {
                let c: f64 = (0..dim).map(|d| vectors[j][d] * vectors[i][d]).sum();
                for (e, f) in expect.iter_mut().zip(ok(fillers.vector(&format!("f{j}")))?) {
                    *e += c * f;
                }
            }
            let err = u.data().iter().zip(&expect).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
            worst_intrusion = worst_intrusion.max(err);
            ensure(err <= 1e-8, || format!("intrusion case {case}, role {i}: error {err}"))?;
        }
    }
    Ok(format!(
        "200 orthonormal lists (max error {worst:.1e}), 200 intrusion instances (max error {worst_intrusion:.1e})"
    ))
}

fn loss_closed_form() -> Outcome {
    let mut out = Vec::new();
    for v in [2usize, 5, 26] {
        let fillers = ok(FillerVocab::one_hot(&ids("f", v)))?;
        let closed = (1f64.exp() + v as f64 - 1.0).ln() - 1.0;

        let roles = ok(make_role_space(&ids("r", 3), 3, RoleScheme::Orthonormal, None))?;
        let flat = Structure::Node((0..3).map(|j| (format!("r{j}"), Structure::Leaf(format!("f{}", (j * 7) % v)))).collect());
        let t = ok(bind_hierarchical(&flat, &fillers, &[&roles]))?;
        let per_leaf = ok(unbinding_loss(&t, &flat, &fillers, &[&roles], LossConfig::default()))? / 3.0;
        ensure((per_leaf - closed).abs() <= 1e-9, || format!("|V|={v}: {per_leaf} vs {closed}"))?;

        // two levels, rotated inner roles
        let inner = ok(make_role_space(&ids("p", 2), 2, RoleScheme::Orthonormal, Some(v as u64)))?;
        let nested = Structure::Node(vec![
            ("r0".into(), Structure::Node(vec![("p0".into(), Structure::Leaf("f0".into())), ("p1".into(), Structure::Leaf(format!("f{}", v - 1)))])),
            ("r2".into(), Structure::Node(vec![("p1".into(), Structure::Leaf("f1".into()))])),
        ]);
        let t = ok(bind_hierarchical(&nested, &fillers, &[&roles, &inner]))?;
        let per_leaf = ok(unbinding_loss(&t, &nested, &fillers, &[&roles, &inner], LossConfig::default()))? / 3.0;
        ensure((per_leaf - closed).abs() <= 1e-9, || format!("|V|={v} nested: {per_leaf} vs {closed}"))?;
        out.push(format!("|V|={v}: {closed:.6}"));
    }
    Ok(out.join(", "))
}

// ---------------------------------------------------------------------------
// autoencoder

fn toy_dictionary() -> TprDictionary {
    let mut lex = AnalysisLexicon::new();
    for (word, analysis, seg) in [
        ("ahata", "a<p1>+ha<v>+ta<fut>", "a>ha>ta"),
        ("rehóta", "re<p2>+hó<v>+ta<fut>", "re>hó>ta"),
        ("ohopa", "o<p3>+ho<v>+pa<qst>", "o>ho>pa"),
        ("ajapo", "a<p1>+japo<v>", "a>japo"),
    ] {
        lex.insert(word, Analysis::parse(analysis, seg, 1.0).unwrap()).unwrap();
    }
    TprDictionary::from_lexicon(&lex, MorphemeTprConfig::default()).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (FillerVocab, RoleSpace, Vec<(Structure, polylm::tpr::TprTensor)>) {
    let nf = rng.random_range(2..=4);
    let k = rng.random_range(1..=3);
    let fillers = if rng.random_bool(0.5) {
        FillerVocab::one_hot(&ids("f", nf)).unwrap()
    } else {
        FillerVocab::dense(&ids("f", nf), 3, rng.random()).unwrap()
    };
    let roles = make_role_space(&ids("r", k), k + 1, RoleScheme::Orthonormal, Some(rng.random())).unwrap();
    let samples = (0..rng.random_range(2..=4))
        .map(|_| {
            let mut children = Vec::new();
            for j in 0..k {
                if rng.random_bool(0.7) {
                    children.push((format!("r{j}"), Structure::Leaf(format!("f{}", rng.random_range(0..nf)))));
                }
            }
            let s = Structure::Node(children);
            let t = bind_hierarchical(&s, &fillers, &[&roles]).unwrap();
            (s, t)
        })
        .collect();
    (fillers, roles, samples)
}

fn autoencoder_gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let (fillers, roles, samples) = random_instance(&mut rng);
        let rs = [&roles];
        let data = Dataset { samples: &samples, fillers: &fillers, roles: &rs };
        let act = if seed % 2 == 0 { Activation::Linear } else { Activation::Tanh };
        let p = ok(AutoencoderParams::init(samples[0].1.shape(), rng.random_range(2..=4), act, seed))?;
        let err = ok(gradient_check(&p, &data, Objective::default(), 1e-5))?;
        worst = worst.max(err);
        ensure(err < 1e-4, || format!("instance {seed} ({act:?}): relative error {err:.2e}"))?;
    }

    let dict = toy_dictionary();
    let samples = ok(dict.tensors())?;
    let roles = dict.spaces.role_refs();
    let data = Dataset { samples: &samples, fillers: &dict.spaces.fillers, roles: &roles };
    let trained = ok(train_autoencoder(&data, &TrainConfig::default()))?;
    let (first, last) = (trained.trace[0], *trained.trace.last().unwrap());
    ensure(last < first, || format!("toy loss went {first} -> {last}"))?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "10 instances max relative error {worst:.1e}; toy loss {first:.4} -> {last:.4} in {} epochs, {:.1?}",
        trained.trace.len() - 1,
        start.elapsed()
    ))
}

// ---------------------------------------------------------------------------
// predictor

fn four_char_case() -> Result<(f64, f64), String> {
    let script = Corpus::parse("abcdefghijklmnop");
    let mut lex = AnalysisLexicon::new();
    ok(lex.insert("abcdefghijklmnop", ok(Analysis::parse("w+x+y+z", "abcd>efgh>ijkl>mnop", 1.0))?))?;
    let seg = ok(Segmenter::lexicon(lex, Default::default(), Default::default(), None))?;
    let oracle = ok(ScriptOracle::new(&script, &seg, 30))?;
    let r = ok(simulate_typing(&oracle, &script, &seg, &PredictorConfig::with_n(3)))?;
    Ok((r.recall, r.savings_ratio))
}

fn predictor_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        let corpus = random_corpus(&mut rng, &LETTERS, 5, 4, 5);
        let seg = if case % 3 == 0 { Segmenter::Bpe(bpe_learn(&corpus, 6)) } else { Segmenter::Char };
        let streams: Vec<SymbolStream> = corpus
            .sentences()
            .iter()
            .map(|s| mark_boundaries(&seg.segment_sentence(s).unwrap()))
            .collect();
        let lm = ok(NgramLm::train_streams(&streams, rng.random_range(1..=5)))?;
        let raw = random_context(&mut rng);
        let ctx = ok(preprocess_context(&raw, &seg, lm.vocab()))?;
        let cfg = PredictorConfig {
            n_candidates: rng.random_range(1..=6),
            max_unroll: rng.random_range(1..=8),
            ..PredictorConfig::default()
        };
        let cands = ok(predict(&lm, &ctx, &cfg))?;
        let firsts: HashSet<_> = cands.iter().map(|c| c.symbols[0]).collect();
        ensure(firsts.len() == cands.len(), || format!("case {case}: repeated first symbol"))?;
        ensure(cands.len() <= cfg.n_candidates, || format!("case {case}: {} candidates", cands.len()))?;
        for c in &cands {
            ensure(!c.symbols.is_empty() && c.symbols.len() <= cfg.max_unroll, || {
                format!("case {case}: length {} with cap {}", c.symbols.len(), cfg.max_unroll)
            })?;
        }
        ensure(ok(predict(&lm, &ctx, &cfg))? == cands, || format!("case {case}: not deterministic"))?;
    }

    for case in 0..20 {
        let script = random_corpus(&mut rng, &LETTERS, 1, 6, 6);
        let seg = if case % 2 == 0 { Segmenter::Bpe(bpe_learn(&script, 5)) } else { Segmenter::Char };
        let oracle = ok(ScriptOracle::new(&script, &seg, 30))?;
        for n in [1, 3] {
            let r = ok(simulate_typing(&oracle, &script, &seg, &PredictorConfig::with_n(n)))?;
            ensure(r.recall == 1.0, || format!("oracle script {case}, n={n}: recall {}", r.recall))?;
        }
    }
    let (recall, savings) = four_char_case()?;
    ensure(recall == 1.0 && savings == 0.75, || format!("length-4 units: recall {recall}, savings {savings}"))?;
    Ok("100 random models: distinct first symbols, length <= cap, deterministic; oracle recall 1.0; savings 0.75".into())
}

fn random_context(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..4);
    let mut s: Vec<String> = (0..n).map(|_| random_word(rng, &LETTERS, 5)).collect();
    if rng.random_bool(0.3) {
        s.push(String::new());
    }
    s.join(" ")
}

// ---------------------------------------------------------------------------
// service

fn service_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let corpus = random_corpus(&mut rng, &LETTERS, 30, 5, 6);
    let table = bpe_learn(&corpus, 15);
    let make = |id: &str, seg: Segmenter| -> Result<LoadedModel, String> {
        let streams: Vec<SymbolStream> = corpus
            .sentences()
            .iter()
            .map(|s| mark_boundaries(&seg.segment_sentence(s).unwrap()))
            .collect();
        Ok(LoadedModel {
            id: id.into(),
            lm: ok(NgramLm::train_streams(&streams, 4))?,
            segmenter: seg,
            segmenter_spec: SegmenterSpec::char(),
        })
    };
    let registry = Arc::new(ok(ModelRegistry::new(vec![make("char", Segmenter::Char)?, make("bpe", Segmenter::Bpe(table))?]))?);
    let app = router(registry.clone());
    let rt = ok(tokio::runtime::Builder::new_current_thread().enable_all().build())?;

    let mut seen_models = BTreeSet::new();
    for case in 0..100 {
        let model_id = match rng.random_range(0..3) {
            0 => None,
            1 => Some("char".to_string()),
            _ => Some("bpe".to_string()),
        };
        let req = PredictRequest { context: random_context(&mut rng), n: rng.random_range(1..=5), model_id };
        let body = ok(serde_json::to_vec(&req))?;
        let (status, bytes) = rt.block_on(async {
            let resp = app
                .clone()
                .oneshot(
                    Request::post("/v1/predict")
                        .header("content-type", "application/json")
                        .body(Body::from(body))
                        .unwrap(),
                )
                .await
                .unwrap();
            let status = resp.status();
            (status, axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap())
        });
        ensure(status == StatusCode::OK, || format!("case {case}: status {status}"))?;
        let json: serde_json::Value = ok(serde_json::from_slice(&bytes))?;
        let id = json["model_id"].as_str().unwrap_or_default().to_string();
        let model = registry.get(&id).ok_or_else(|| format!("case {case}: unknown model {id:?} in response"))?;
        let ctx = ok(preprocess_context(&req.context, &model.segmenter, model.lm.vocab()))?;
        let direct: Vec<CandidateView> = ok(predict(&model.lm, &ctx, &PredictorConfig::with_n(req.n)))?
            .iter()
            .map(CandidateView::from)
            .collect();
        let served = ok(serde_json::to_string(&json["candidates"]))?;
        let expected = ok(serde_json::to_string(&direct))?;
        ensure(served == expected, || format!("case {case}: {served} vs {expected}"))?;
        seen_models.insert(id);
    }
    Ok(format!("100 requests byte-identical to direct calls across models {seen_models:?}; no UI needed"))
}

// ---------------------------------------------------------------------------

fn main() {
    let checks: [Check; 9] = [
        ("corpus metrics oracle", corpus_metrics),
        ("BPE roundtrip and determinism", bpe_roundtrip),
        ("LM normalisation", lm_normalisation),
        ("cross-tokenisation perplexity identity", perplexity_identity),
        ("TPR exactness and intrusion", tpr_exactness),
        ("unbinding loss closed form", loss_closed_form),
        ("autoencoder gradient check and training", autoencoder_gradients),
        ("predictor properties", predictor_properties),
        ("service equivalence", service_equivalence),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS  {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name}: panicked");
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
