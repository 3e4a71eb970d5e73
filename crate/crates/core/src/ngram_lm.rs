//! Symbol-level language models and tokenisation-independent evaluation.
//!
//! [`LanguageModel`] is the interface every evaluator and the predictor is
//! written against: a vocabulary plus a next-symbol distribution. The
//! reference implementation is [`NgramLm`], an order-n model with
//! interpolated Witten-Bell smoothing:
//!
//! ```text
//! P(w | h) = (c(h, w) + T(h) * P(w | h')) / (c(h) + T(h))
//! ```
//!
//! where `h'` drops the oldest symbol of `h`, `T(h)` is the number of
//! distinct symbols seen after `h`, and the recursion bottoms out in the
//! uniform distribution over the vocabulary. A context never seen in training
//! contributes nothing, so the estimate falls through to the shorter context.
//!
//! Perplexities are reported per token, per character and per word. The
//! character count is shared by every tokenisation of the same text: the
//! characters of all words, plus one per word separator, plus one per
//! end-of-sentence, so `char_ppl = exp(total_nll / char_count)` compares
//! models built on different segmentations directly.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus_stats::Corpus;
use crate::error::{Error, Result};
use crate::tokenization::{Segmenter, SegmenterSpec, SymbolScheme, SymbolStream, SEPARATOR_TOKEN};

pub type SymbolId = u32;

pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

/// Symbol inventory. Ids 0, 1 and 2 are always end-of-sentence, unknown and
/// the word separator; the remaining tokens follow in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, SymbolId>,
}

impl Vocab {
    pub const EOS: SymbolId = 0;
    pub const UNK: SymbolId = 1;
    pub const SEPARATOR: SymbolId = 2;

    pub fn new<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut rest: Vec<String> = tokens
            .into_iter()
            .map(|t| t.as_ref().to_string())
            .filter(|t| t != EOS_TOKEN && t != UNK_TOKEN && t != SEPARATOR_TOKEN)
            .collect();
        rest.sort();
        rest.dedup();
        let mut all = vec![
            EOS_TOKEN.to_string(),
            UNK_TOKEN.to_string(),
            SEPARATOR_TOKEN.to_string(),
        ];
        all.extend(rest);
        let index = all
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as SymbolId))
            .collect();
        Vocab { tokens: all, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<SymbolId> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> SymbolId {
        self.id(token).unwrap_or(Vocab::UNK)
    }

    pub fn token(&self, id: SymbolId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<SymbolId> {
        tokens.iter().map(|t| self.id_or_unk(t.as_ref())).collect()
    }
}

/// A next-symbol distribution over a fixed vocabulary.
pub trait LanguageModel: Send + Sync {
    fn vocab(&self) -> &Vocab;

    /// Probability of every vocabulary symbol after `context`, indexed by id.
    /// Sums to one; every entry is strictly positive.
    fn next_distribution(&self, context: &[SymbolId]) -> Vec<f64>;

    fn prob(&self, context: &[SymbolId], next: SymbolId) -> f64 {
        self.next_distribution(context)[next as usize]
    }
}

/// Assigns `1 / |V|` to every event. Useful as a reference point.
#[derive(Debug, Clone)]
pub struct UniformModel {
    vocab: Vocab,
}

impl UniformModel {
    pub fn new(vocab: Vocab) -> Self {
        UniformModel { vocab }
    }
}

impl LanguageModel for UniformModel {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_distribution(&self, _context: &[SymbolId]) -> Vec<f64> {
        vec![1.0 / self.vocab.len() as f64; self.vocab.len()]
    }

    fn prob(&self, _context: &[SymbolId], _next: SymbolId) -> f64 {
        1.0 / self.vocab.len() as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ContextCounts {
    total: u64,
    next: BTreeMap<SymbolId, u64>,
}

impl ContextCounts {
    fn add(&mut self, sym: SymbolId, n: u64) {
        self.total += n;
        *self.next.entry(sym).or_default() += n;
    }

    fn distinct(&self) -> u64 {
        self.next.len() as u64
    }
}

/// Interpolated Witten-Bell n-gram model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramLm {
    order: usize,
    vocab: Vocab,
    /// `levels[k]` holds contexts of length `k`.
    levels: Vec<HashMap<Vec<SymbolId>, ContextCounts>>,
}

impl NgramLm {
    /// Trains on token sequences; an end-of-sentence token is appended to
    /// each.
    pub fn train<S: AsRef<str>>(streams: &[Vec<S>], order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("n-gram order must be at least 1".into()));
        }
        if streams.is_empty() {
            return Err(Error::Domain("no training data".into()));
        }
        let vocab = Vocab::new(streams.iter().flatten());
        let mut levels = vec![HashMap::new(); order];
        for stream in streams {
            let mut ids = vocab.encode(stream);
            ids.push(Vocab::EOS);
            for i in 0..ids.len() {
                for k in 0..order.min(i + 1) {
                    let ctx = ids[i - k..i].to_vec();
                    levels[k]
                        .entry(ctx)
                        .or_insert_with(ContextCounts::default)
                        .add(ids[i], 1);
                }
            }
        }
        Ok(NgramLm {
            order,
            vocab,
            levels,
        })
    }

    pub fn train_streams(streams: &[SymbolStream], order: usize) -> Result<Self> {
        let tokens: Vec<Vec<String>> = streams.iter().map(SymbolStream::tokens).collect();
        NgramLm::train(&tokens, order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Contexts of length `0..order` that were observed, from the shortest
    /// upwards, stopping at the first unseen one.
    fn observed_contexts<'a>(&'a self, context: &'a [SymbolId]) -> impl Iterator<Item = &'a ContextCounts> + 'a {
        let max = context.len().min(self.order - 1);
        (0..=max).map_while(move |k| self.levels[k].get(&context[context.len() - k..]))
    }

    /// Length of the longest observed suffix of `context` that the model
    /// conditions on.
    pub fn effective_context_len(&self, context: &[SymbolId]) -> usize {
        self.observed_contexts(context).count().saturating_sub(1)
    }

    /// Raw count of `next` after exactly `context` (no smoothing).
    pub fn count(&self, context: &[SymbolId], next: SymbolId) -> u64 {
        self.levels
            .get(context.len())
            .and_then(|l| l.get(context))
            .and_then(|c| c.next.get(&next))
            .copied()
            .unwrap_or(0)
    }

    pub fn save(&self, path: impl AsRef<Path>, scheme: SymbolScheme, segmenter: &SegmenterSpec) -> Result<()> {
        let doc = ModelDocument::from_model(self, scheme, segmenter.clone());
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(&doc)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

impl LanguageModel for NgramLm {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_distribution(&self, context: &[SymbolId]) -> Vec<f64> {
        let v = self.vocab.len();
        let mut p = vec![1.0 / v as f64; v];
        for cc in self.observed_contexts(context) {
            let t = cc.distinct() as f64;
            let denom = cc.total as f64 + t;
            for (w, pw) in p.iter_mut().enumerate() {
                let c = cc.next.get(&(w as SymbolId)).copied().unwrap_or(0) as f64;
                *pw = (c + t * *pw) / denom;
            }
        }
        p
    }

    fn prob(&self, context: &[SymbolId], next: SymbolId) -> f64 {
        let mut p = 1.0 / self.vocab.len() as f64;
        for cc in self.observed_contexts(context) {
            let t = cc.distinct() as f64;
            let c = cc.next.get(&next).copied().unwrap_or(0) as f64;
            p = (c + t * p) / (cc.total as f64 + t);
        }
        p
    }
}

/// `-sum(ln P(s_i | s_<i))` over the tokens and a closing end-of-sentence.
pub fn sequence_nll<M: LanguageModel + ?Sized, S: AsRef<str>>(lm: &M, tokens: &[S]) -> f64 {
    let mut ids = lm.vocab().encode(tokens);
    ids.push(Vocab::EOS);
    (0..ids.len())
        .map(|i| -lm.prob(&ids[..i], ids[i]).ln())
        .sum()
}

/// Perplexities of one model on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub total_nll: f64,
    /// Model events: tokens, separators and end-of-sentence symbols.
    pub token_count: usize,
    /// Characters, plus one per separator and one per end-of-sentence.
    pub char_count: usize,
    /// Words plus one end-of-sentence per sentence.
    pub word_count: usize,
    pub token_ppl: f64,
    pub char_ppl: f64,
    pub word_ppl: f64,
    /// Test tokens missing from the model vocabulary.
    pub oov_count: usize,
}

impl EvalReport {
    pub const TSV_HEADER: &'static str = "total_nll\ttokens\tchars\twords\ttoken_ppl\tchar_ppl\tword_ppl";

    fn from_totals(total_nll: f64, token_count: usize, char_count: usize, word_count: usize, oov_count: usize) -> Self {
        EvalReport {
            total_nll,
            token_count,
            char_count,
            word_count,
            token_ppl: (total_nll / token_count as f64).exp(),
            char_ppl: (total_nll / char_count as f64).exp(),
            word_ppl: (total_nll / word_count as f64).exp(),
            oov_count,
        }
    }

    pub fn to_tsv_row(&self) -> String {
        format!(
            "{:.6}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            self.total_nll,
            self.token_count,
            self.char_count,
            self.word_count,
            self.token_ppl,
            self.char_ppl,
            self.word_ppl
        )
    }
}

/// Segments and scores every test sentence. Unknown symbols are scored as the
/// unknown token (never zero probability) and counted in `oov_count`.
pub fn evaluate<M: LanguageModel + ?Sized>(
    lm: &M,
    test: &Corpus,
    segmenter: &Segmenter,
    scheme: SymbolScheme,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Domain("empty test corpus".into()));
    }
    let (mut nll, mut tokens, mut chars, mut words, mut oov) = (0.0, 0, 0, 0, 0);
    for sentence in test.sentences() {
        let segs = segmenter.segment_sentence(sentence)?;
        let toks = scheme.tokens(&segs);
        oov += toks.iter().filter(|t| lm.vocab().id(t).is_none()).count();
        nll += sequence_nll(lm, &toks);
        tokens += toks.len() + 1;
        chars += sentence.iter().map(|w| w.chars().count()).sum::<usize>() + sentence.len();
        words += sentence.len() + 1;
    }
    Ok(EvalReport::from_totals(nll, tokens, chars, words, oov))
}

const FORMAT_NAME: &str = "polylm-ngram";
const FORMAT_VERSION: u32 = 1;

/// On-disk form of a trained model: vocabulary, order and count tables keyed
/// by space-joined context tokens, plus how the training text was tokenised.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub order: usize,
    #[serde(default)]
    pub scheme: SymbolScheme,
    #[serde(default)]
    pub segmenter: SegmenterSpec,
    pub vocab: Vec<String>,
    pub counts: BTreeMap<String, BTreeMap<String, u64>>,
}

impl ModelDocument {
    pub fn from_model(lm: &NgramLm, scheme: SymbolScheme, segmenter: SegmenterSpec) -> Self {
        let mut counts = BTreeMap::new();
        for level in &lm.levels {
            for (ctx, cc) in level {
                let key = ctx
                    .iter()
                    .map(|&id| lm.vocab.token(id))
                    .collect::<Vec<_>>()
                    .join(" ");
                let next = cc
                    .next
                    .iter()
                    .map(|(&id, &n)| (lm.vocab.token(id).to_string(), n))
                    .collect();
                counts.insert(key, next);
            }
        }
        ModelDocument {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            order: lm.order,
            scheme,
            segmenter,
            vocab: lm.vocab.tokens.clone(),
            counts,
        }
    }

    pub fn into_model(self) -> Result<NgramLm> {
        if self.format != FORMAT_NAME || self.version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        if self.order == 0 {
            return Err(Error::Model("order must be at least 1".into()));
        }
        let vocab = Vocab::new(&self.vocab);
        if vocab.tokens != self.vocab {
            return Err(Error::Model("vocabulary is not in canonical order".into()));
        }
        let lookup = |t: &str| {
            vocab
                .id(t)
                .ok_or_else(|| Error::Model(format!("token {t:?} not in vocabulary")))
        };
        let mut levels = vec![HashMap::new(); self.order];
        for (key, next) in &self.counts {
            let ctx = key
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(lookup)
                .collect::<Result<Vec<_>>>()?;
            let level = levels
                .get_mut(ctx.len())
                .ok_or_else(|| Error::Model(format!("context {key:?} longer than order")))?;
            let mut cc = ContextCounts::default();
            for (tok, &n) in next {
                cc.add(lookup(tok)?, n);
            }
            level.insert(ctx, cc);
        }
        if levels[0].is_empty() {
            return Err(Error::Model("missing unigram counts".into()));
        }
        Ok(NgramLm {
            order: self.order,
            vocab,
            levels,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
