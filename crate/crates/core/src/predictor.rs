//! Keyboard prediction over a boundary-marked symbol model.
//!
//! The N most likely next symbols each seed one candidate; each candidate
//! is extended greedily with the most likely symbol until it emits a boundary
//! (a unit-final character or the word separator), so candidates are whole
//! morphs or the rest of one. Because every candidate starts with a different
//! symbol, no two suggestions share their first character.
//!
//! Typing simulation: each sentence of a script is typed symbol by symbol from
//! an empty context. Whenever the rest of the current unit is offered, it is
//! taken with a single touch; otherwise one symbol is typed.

use serde::Serialize;

use crate::corpus_stats::Corpus;
use crate::error::{Error, Result};
use crate::ngram_lm::{LanguageModel, SymbolId};
use crate::tokenization::{mark_boundaries, parse_symbol_token, Segmenter, Symbol, SymbolStream};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    /// Symbols of context passed to the model.
    pub context_window: usize,
    pub n_candidates: usize,
    /// Hard cap on candidate length.
    pub max_unroll: usize,
    /// Do not stop at a boundary before this many symbols.
    pub min_length: Option<usize>,
    /// Keep extending past boundaries while the cumulative log probability
    /// stays at or above this value.
    pub logprob_floor: Option<f64>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            context_window: 30,
            n_candidates: 3,
            max_unroll: 40,
            min_length: None,
            logprob_floor: None,
        }
    }
}

impl PredictorConfig {
    pub fn with_n(n: usize) -> Self {
        PredictorConfig {
            n_candidates: n,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.context_window == 0 || self.n_candidates == 0 || self.max_unroll == 0 {
            return Err(Error::Config(
                "context window, candidate count and unroll cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub symbols: Vec<Symbol>,
    /// Natural-log probability of the whole candidate given the context.
    pub logprob: f64,
    /// The unroll cap was hit before a boundary.
    pub truncated: bool,
}

impl Candidate {
    /// Token form, e.g. `"a b@"`.
    pub fn text(&self) -> String {
        SymbolStream::new(self.symbols.clone()).to_text()
    }

    /// Plain text with boundary flags removed.
    pub fn display_text(&self) -> String {
        self.symbols.iter().map(Symbol::display_char).collect()
    }
}

/// Vocabulary ids that stand for symbols, with the symbol each denotes.
/// End-of-sentence and unknown are never offered.
fn emittable<M: LanguageModel + ?Sized>(lm: &M) -> Vec<(SymbolId, Symbol)> {
    lm.vocab()
        .tokens()
        .iter()
        .enumerate()
        .filter_map(|(i, t)| parse_symbol_token(t).map(|s| (i as SymbolId, s)))
        .collect()
}

fn window(ids: &[SymbolId], x: usize) -> &[SymbolId] {
    &ids[ids.len().saturating_sub(x)..]
}

/// Candidate continuations of `context`, ranked by first-symbol probability.
pub fn predict<M: LanguageModel + ?Sized>(
    lm: &M,
    context: &SymbolStream,
    cfg: &PredictorConfig,
) -> Result<Vec<Candidate>> {
    cfg.validate()?;
    let symbols = emittable(lm);
    if symbols.is_empty() {
        return Err(Error::Model("model vocabulary has no symbols to predict".into()));
    }
    let vocab = lm.vocab();
    let ctx: Vec<SymbolId> = context.symbols().iter().map(|s| vocab.id_or_unk(&s.token())).collect();
    let first = lm.next_distribution(window(&ctx, cfg.context_window));
    let mut ranked: Vec<&(SymbolId, Symbol)> = symbols.iter().collect();
    ranked.sort_by(|a, b| first[b.0 as usize].total_cmp(&first[a.0 as usize]).then(a.0.cmp(&b.0)));
    ranked.truncate(cfg.n_candidates);

    let min_len = cfg.min_length.unwrap_or(1);
    Ok(ranked
        .into_iter()
        .map(|&(id, sym)| {
            let mut ids = ctx.clone();
            ids.push(id);
            let mut out = vec![sym];
            let mut logprob = first[id as usize].ln();
            loop {
                let last = *out.last().expect("non-empty");
                let confident = cfg.logprob_floor.is_some_and(|f| logprob >= f);
                if last.ends_unit() && out.len() >= min_len && !confident {
                    break;
                }
                if out.len() >= cfg.max_unroll {
                    break;
                }
                let dist = lm.next_distribution(window(&ids, cfg.context_window));
                let &(next, s) = symbols
                    .iter()
                    .max_by(|a, b| dist[a.0 as usize].total_cmp(&dist[b.0 as usize]).then(b.0.cmp(&a.0)))
                    .expect("non-empty");
                logprob += dist[next as usize].ln();
                ids.push(next);
                out.push(s);
            }
            let truncated = !out.last().expect("non-empty").ends_unit();
            Candidate {
                symbols: out,
                logprob,
                truncated,
            }
        })
        .collect())
}

/// Outcome of a typing simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypingReport {
    /// Keystrokes and selection touches actually made.
    pub keystrokes_typed: usize,
    /// Symbols entered by selections beyond the one touch each.
    pub keystrokes_saved: usize,
    pub savings_ratio: f64,
    /// Unit starts at which the true unit was among the candidates.
    pub recall_hits: usize,
    /// Unit starts considered (word separators excluded).
    pub recall_opportunities: usize,
    pub recall: f64,
}

impl TypingReport {
    pub const TSV_HEADER: &'static str = "n\trecall\tsavings_ratio\tkeystrokes_typed\tkeystrokes_saved";

    pub fn to_tsv_row(&self, n: usize) -> String {
        format!(
            "{n}\t{:.4}\t{:.4}\t{}\t{}",
            self.recall, self.savings_ratio, self.keystrokes_typed, self.keystrokes_saved
        )
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Types out every sentence of `script`, taking offered units when they
/// match.
pub fn simulate_typing<M: LanguageModel + ?Sized>(
    lm: &M,
    script: &Corpus,
    segmenter: &Segmenter,
    cfg: &PredictorConfig,
) -> Result<TypingReport> {
    cfg.validate()?;
    let (mut typed, mut saved, mut hits, mut chances) = (0, 0, 0, 0);
    for sentence in script.sentences() {
        let stream = mark_boundaries(&segmenter.segment_sentence(sentence)?);
        let mut history = SymbolStream::default();
        for unit in stream.units() {
            if unit == [Symbol::Separator] {
                typed += 1;
                history.push(Symbol::Separator);
                continue;
            }
            for pos in 0..unit.len() {
                let rest = &unit[pos..];
                let offered = predict(lm, &history, cfg)?.iter().any(|c| c.symbols == rest);
                if pos == 0 {
                    chances += 1;
                    hits += usize::from(offered);
                }
                if offered {
                    typed += 1;
                    saved += rest.len() - 1;
                    rest.iter().for_each(|&s| history.push(s));
                    break;
                }
                typed += 1;
                history.push(unit[pos]);
            }
        }
    }
    Ok(TypingReport {
        keystrokes_typed: typed,
        keystrokes_saved: saved,
        savings_ratio: ratio(saved, typed + saved),
        recall_hits: hits,
        recall_opportunities: chances,
        recall: ratio(hits, chances),
    })
}

pub fn keystroke_savings<M: LanguageModel + ?Sized>(
    lm: &M,
    script: &Corpus,
    segmenter: &Segmenter,
    cfg: &PredictorConfig,
) -> Result<TypingReport> {
    simulate_typing(lm, script, segmenter, cfg)
}

/// Fraction of unit starts at which the true unit is among the candidates.
pub fn top_n_recall<M: LanguageModel + ?Sized>(
    lm: &M,
    script: &Corpus,
    segmenter: &Segmenter,
    cfg: &PredictorConfig,
) -> Result<f64> {
    simulate_typing(lm, script, segmenter, cfg).map(|r| r.recall)
}

/// A model that knows the script: after any history seen while typing it,
/// the true next symbol gets most of the mass. Useful as an upper bound.
pub struct ScriptOracle {
    vocab: crate::ngram_lm::Vocab,
    next: std::collections::HashMap<Vec<SymbolId>, SymbolId>,
    window: usize,
}

impl ScriptOracle {
    /// Builds the oracle for `script` as segmented by `segmenter`, for
    /// prediction with the given context window. Histories that occur with
    /// two different continuations keep the first.
    pub fn new(script: &Corpus, segmenter: &Segmenter, window: usize) -> Result<Self> {
        let streams = script
            .sentences()
            .iter()
            .map(|s| Ok(mark_boundaries(&segmenter.segment_sentence(s)?)))
            .collect::<Result<Vec<_>>>()?;
        let vocab = crate::ngram_lm::Vocab::new(streams.iter().flat_map(|s| s.tokens()));
        let mut next = std::collections::HashMap::new();
        for s in &streams {
            let ids = vocab.encode(&s.tokens());
            for i in 0..ids.len() {
                next.entry(window_vec(&ids[..i], window)).or_insert(ids[i]);
            }
        }
        Ok(ScriptOracle { vocab, next, window })
    }
}

fn window_vec(ids: &[SymbolId], x: usize) -> Vec<SymbolId> {
    window(ids, x).to_vec()
}

impl LanguageModel for ScriptOracle {
    fn vocab(&self) -> &crate::ngram_lm::Vocab {
        &self.vocab
    }

    fn next_distribution(&self, context: &[SymbolId]) -> Vec<f64> {
        let v = self.vocab.len();
        match self.next.get(&window_vec(context, self.window)) {
            Some(&w) => {
                let mut p = vec![0.1 / (v - 1) as f64; v];
                p[w as usize] = 0.9;
                p
            }
            None => vec![1.0 / v as f64; v],
        }
    }
}
