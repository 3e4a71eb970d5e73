//! Boundary-marked symbols.
//!
//! A character model that should also predict morpheme boundaries sees each
//! character together with a flag saying whether it ends a unit. Words are
//! separated by a dedicated separator symbol that never carries the flag.
//!
//! Text form: one token per symbol, unit-final characters suffixed with `@`,
//! the separator written `_`. Literal `\`, `_`, `@` and `<` characters are
//! backslash-escaped so every token parses back unambiguously.

use std::fmt;

use super::Segmentation;
use crate::error::{Error, Result};

pub const SEPARATOR_TOKEN: &str = "_";
const BOUNDARY_MARK: char = '@';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Char { ch: char, boundary: bool },
    Separator,
}

impl Symbol {
    pub fn plain(ch: char) -> Self {
        Symbol::Char {
            ch,
            boundary: false,
        }
    }

    pub fn marked(ch: char) -> Self {
        Symbol::Char { ch, boundary: true }
    }

    /// True for unit-final characters and for the separator.
    pub fn ends_unit(&self) -> bool {
        match self {
            Symbol::Char { boundary, .. } => *boundary,
            Symbol::Separator => true,
        }
    }

    pub fn token(&self) -> String {
        match self {
            Symbol::Separator => SEPARATOR_TOKEN.to_string(),
            Symbol::Char { ch, boundary } => {
                let mut s = String::with_capacity(4);
                push_escaped(&mut s, *ch);
                if *boundary {
                    s.push(BOUNDARY_MARK);
                }
                s
            }
        }
    }

    /// The character with its flag removed; the separator becomes a space.
    pub fn display_char(&self) -> char {
        match self {
            Symbol::Char { ch, .. } => *ch,
            Symbol::Separator => ' ',
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

fn push_escaped(out: &mut String, ch: char) {
    if matches!(ch, '\\' | '_' | '@' | '<') {
        out.push('\\');
    }
    out.push(ch);
}

/// Escapes a whole unit for unit-level token streams.
pub fn escape_text(text: &str) -> String {
    let mut s = String::with_capacity(text.len());
    for ch in text.chars() {
        push_escaped(&mut s, ch);
    }
    s
}

/// Parses one token of the text form. Returns `None` for tokens that are not
/// symbols (e.g. reserved model tokens such as end-of-sentence).
pub fn parse_symbol_token(token: &str) -> Option<Symbol> {
    if token == SEPARATOR_TOKEN {
        return Some(Symbol::Separator);
    }
    let mut chars = token.chars();
    let ch = match chars.next()? {
        '\\' => chars.next()?,
        '_' | '@' | '<' => return None,
        c => c,
    };
    match (chars.next(), chars.next()) {
        (None, _) => Some(Symbol::plain(ch)),
        (Some(BOUNDARY_MARK), None) => Some(Symbol::marked(ch)),
        _ => None,
    }
}

/// An ordered run of boundary-marked symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SymbolStream {
    symbols: Vec<Symbol>,
}

impl SymbolStream {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        SymbolStream { symbols }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn push(&mut self, s: Symbol) {
        self.symbols.push(s);
    }

    pub fn tokens(&self) -> Vec<String> {
        self.symbols.iter().map(Symbol::token).collect()
    }

    /// Whitespace-separated text form.
    pub fn to_text(&self) -> String {
        self.tokens().join(" ")
    }

    pub fn parse(text: &str) -> Result<Self> {
        text.split_whitespace()
            .map(|tok| {
                parse_symbol_token(tok)
                    .ok_or_else(|| Error::Domain(format!("not a symbol token: {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(SymbolStream::new)
    }

    /// Drops the boundary flags and rebuilds the plain words.
    pub fn words(&self) -> Vec<String> {
        let mut words = vec![String::new()];
        for s in &self.symbols {
            match s {
                Symbol::Separator => words.push(String::new()),
                Symbol::Char { ch, .. } => words.last_mut().unwrap().push(*ch),
            }
        }
        if words.len() == 1 && words[0].is_empty() {
            words.clear();
        }
        words
    }

    /// Plain text with flags removed and separators as spaces.
    pub fn display_text(&self) -> String {
        self.symbols.iter().map(Symbol::display_char).collect()
    }

    /// Splits the stream into units, each ending at a boundary symbol. A
    /// trailing run without a boundary is returned as a final partial unit.
    pub fn units(&self) -> Vec<&[Symbol]> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, s) in self.symbols.iter().enumerate() {
            if s.ends_unit() {
                out.push(&self.symbols[start..=i]);
                start = i + 1;
            }
        }
        if start < self.symbols.len() {
            out.push(&self.symbols[start..]);
        }
        out
    }
}

impl fmt::Display for SymbolStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn push_unit(out: &mut Vec<Symbol>, unit: &str, close: bool) {
    let n = unit.chars().count();
    for (i, ch) in unit.chars().enumerate() {
        out.push(Symbol::Char {
            ch,
            boundary: close && i + 1 == n,
        });
    }
}

/// Flattens a segmented sentence into boundary-marked symbols.
pub fn mark_boundaries(sentence: &[Segmentation]) -> SymbolStream {
    let mut out = Vec::new();
    for (i, seg) in sentence.iter().enumerate() {
        if i > 0 {
            out.push(Symbol::Separator);
        }
        for unit in seg.units() {
            push_unit(&mut out, unit, true);
        }
    }
    SymbolStream::new(out)
}

/// Like [`mark_boundaries`], except that the final unit of the final word is
/// left open: it is still being typed, so its last character is not known to
/// end the unit.
pub fn mark_partial(sentence: &[Segmentation]) -> SymbolStream {
    let mut out = Vec::new();
    for (i, seg) in sentence.iter().enumerate() {
        if i > 0 {
            out.push(Symbol::Separator);
        }
        let last_word = i + 1 == sentence.len();
        for (j, unit) in seg.units().iter().enumerate() {
            let open = last_word && j + 1 == seg.len();
            push_unit(&mut out, unit, !open);
        }
    }
    SymbolStream::new(out)
}

/// Unit-level tokens: every unit is one token, words separated by the
/// separator token.
pub fn unit_tokens(sentence: &[Segmentation]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, seg) in sentence.iter().enumerate() {
        if i > 0 {
            out.push(SEPARATOR_TOKEN.to_string());
        }
        out.extend(seg.units().iter().map(|u| escape_text(u)));
    }
    out
}

/// How a segmented sentence is turned into language-model tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolScheme {
    /// One token per character, unit-final characters flagged.
    #[default]
    Marked,
    /// One token per subword unit.
    Units,
}

impl SymbolScheme {
    pub fn tokens(&self, sentence: &[Segmentation]) -> Vec<String> {
        match self {
            SymbolScheme::Marked => mark_boundaries(sentence).tokens(),
            SymbolScheme::Units => unit_tokens(sentence),
        }
    }
}

impl std::str::FromStr for SymbolScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marked" => Ok(SymbolScheme::Marked),
            "units" => Ok(SymbolScheme::Units),
            other => Err(Error::Config(format!("unknown symbol scheme {other:?}"))),
        }
    }
}
