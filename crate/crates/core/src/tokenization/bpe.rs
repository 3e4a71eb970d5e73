//! Greedy byte-pair encoding over characters.
//!
//! Learning starts from each distinct training word split into characters
//! followed by an internal end-of-word sentinel, and repeatedly merges the most
//! frequent adjacent pair (weighted by word count). Ties go to the
//! lexicographically smallest `(left, right)`. Pairs touching the sentinel are
//! never merge candidates, so merges and units never contain it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use super::Segmentation;
use crate::corpus_stats::Corpus;
use crate::error::{Error, Result};

const END_OF_WORD: &str = "\u{0}</w>";

/// Learned merges in order, plus the subword vocabulary they induce.
#[derive(Debug, Clone, Default)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
    vocab: BTreeSet<String>,
    ranks: HashMap<String, HashMap<String, usize>>,
}

impl PartialEq for MergeTable {
    fn eq(&self, other: &Self) -> bool {
        self.merges == other.merges && self.vocab == other.vocab
    }
}

impl Eq for MergeTable {}

impl MergeTable {
    /// Builds a table from an ordered merge list. Each constituent must be a
    /// single character or the result of an earlier merge, and no pair may
    /// repeat. The vocabulary is every constituent and merge result.
    pub fn from_merges(merges: Vec<(String, String)>) -> Result<Self> {
        let mut vocab = BTreeSet::new();
        let mut produced: BTreeSet<String> = BTreeSet::new();
        let mut ranks: HashMap<String, HashMap<String, usize>> = HashMap::new();
        for (rank, (left, right)) in merges.iter().enumerate() {
            for part in [left, right] {
                let single_char = part.chars().count() == 1;
                if !single_char && !produced.contains(part) {
                    return Err(Error::Parse {
                        line: rank + 1,
                        message: format!("constituent {part:?} is not a character or an earlier merge"),
                    });
                }
                vocab.insert(part.clone());
            }
            let slot = ranks.entry(left.clone()).or_default();
            if slot.insert(right.clone(), rank).is_some() {
                return Err(Error::Parse {
                    line: rank + 1,
                    message: format!("duplicate merge {left} {right}"),
                });
            }
            let merged = format!("{left}{right}");
            produced.insert(merged.clone());
            vocab.insert(merged);
        }
        Ok(MergeTable {
            merges,
            vocab,
            ranks,
        })
    }

    fn with_vocab(merges: Vec<(String, String)>, vocab: BTreeSet<String>) -> Self {
        let mut table = MergeTable::from_merges(merges).expect("learned merges are well formed");
        table.vocab = vocab;
        table
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    fn rank(&self, left: &str, right: &str) -> Option<usize> {
        self.ranks.get(left).and_then(|m| m.get(right)).copied()
    }

    /// Reads the one-merge-per-line format. Blank lines and a leading
    /// `#version` line are ignored.
    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut merges = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<merges>", e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || (i == 0 && line.starts_with("#version")) {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()))
                }
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected two space-separated symbols, got {line:?}"),
                    })
                }
            }
        }
        MergeTable::from_merges(merges)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        MergeTable::read(std::io::BufReader::new(file))
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        for (l, r) in &self.merges {
            writeln!(out, "{l} {r}")?;
        }
        Ok(())
    }
}

/// Replaces every left-to-right occurrence of `(left, right)` with its
/// concatenation.
fn merge_pair(symbols: &mut Vec<String>, left: &str, right: &str) {
    let mut i = 0;
    while i + 1 < symbols.len() {
        if symbols[i] == left && symbols[i + 1] == right {
            let merged = format!("{left}{right}");
            symbols[i] = merged;
            symbols.remove(i + 1);
        }
        i += 1;
    }
}

/// Result of learning, including the final symbol sequence of every training
/// word type.
#[derive(Debug, Clone)]
pub struct BpeOutcome {
    pub table: MergeTable,
    pub segmentations: BTreeMap<String, Vec<String>>,
}

pub fn bpe_learn(corpus: &Corpus, num_merges: usize) -> MergeTable {
    bpe_learn_detailed(corpus, num_merges).table
}

pub fn bpe_learn_detailed(corpus: &Corpus, num_merges: usize) -> BpeOutcome {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for tok in corpus.tokens() {
        *counts.entry(tok).or_default() += 1;
    }
    let mut words: Vec<(Vec<String>, u64)> = counts
        .iter()
        .map(|(w, &c)| {
            let mut symbols: Vec<String> = w.chars().map(String::from).collect();
            symbols.push(END_OF_WORD.to_string());
            (symbols, c)
        })
        .collect();

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let mut pair_counts: HashMap<(&str, &str), u64> = HashMap::new();
        for (symbols, count) in &words {
            for pair in symbols.windows(2) {
                if pair[1] == END_OF_WORD {
                    continue;
                }
                *pair_counts.entry((&pair[0], &pair[1])).or_default() += count;
            }
        }
        // Highest count, then smallest (left, right).
        let best = pair_counts
            .into_iter()
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)));
        let (left, right) = match best {
            Some(((l, r), c)) if c >= 2 => (l.to_string(), r.to_string()),
            _ => break,
        };
        for (symbols, _) in &mut words {
            merge_pair(symbols, &left, &right);
        }
        merges.push((left, right));
    }

    let mut vocab = BTreeSet::new();
    let mut segmentations = BTreeMap::new();
    for ((word, _), (mut symbols, _)) in counts.iter().zip(words) {
        symbols.pop();
        vocab.extend(symbols.iter().cloned());
        segmentations.insert(word.to_string(), symbols);
    }
    BpeOutcome {
        table: MergeTable::with_vocab(merges, vocab),
        segmentations,
    }
}

/// Replays the learned merges, in order, on the character split of `word`.
pub fn bpe_apply(word: &str, table: &MergeTable) -> Result<Segmentation> {
    let mut symbols: Vec<String> = super::char_segment(word)?.units;
    // Cursor-based replay: merges below the cursor have already had their
    // turn, so only ranks >= cursor are eligible.
    let mut cursor = 0;
    loop {
        let next = symbols
            .windows(2)
            .filter_map(|p| table.rank(&p[0], &p[1]))
            .filter(|&r| r >= cursor)
            .min();
        let Some(rank) = next else { break };
        let (left, right) = &table.merges[rank];
        merge_pair(&mut symbols, left, right);
        cursor = rank + 1;
    }
    Ok(Segmentation { units: symbols })
}
