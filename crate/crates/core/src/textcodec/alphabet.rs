use std::fmt;

use super::CodecError;

pub const ALPHABET_SIZE: usize = 16;
pub const BITS_PER_SYMBOL: u64 = 4;

/// The symbol table, in index order. Space is 0, then the fifteen consonants
/// in the order the compression prompt lists them (n = 1 ... v = 15).
///
/// This ordering is part of the `.smc` wire format.
pub const ALPHABET: [char; ALPHABET_SIZE] = [
    ' ', 'n', 't', 's', 'r', 'h', 'l', 'd', 'c', 'm', 'f', 'g', 'p', 'b', 'k', 'v',
];

/// A 4-bit alphabet index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(u8);

impl Symbol {
    pub const SPACE: Symbol = Symbol(0);

    pub fn new(index: u8) -> Result<Self, CodecError> {
        if (index as usize) < ALPHABET_SIZE {
            Ok(Symbol(index))
        } else {
            Err(CodecError::InvalidIndex(index))
        }
    }

    /// Builds a symbol from the low nibble of `byte`.
    pub(crate) fn from_nibble(byte: u8) -> Self {
        Symbol(byte & 0x0F)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn to_char(self) -> char {
        ALPHABET[self.0 as usize]
    }
}

/// Lookup between characters and [`Symbol`]s.
#[derive(Debug, Clone, Copy, Default)]
pub struct Alphabet;

impl Alphabet {
    pub fn symbols(&self) -> &'static [char; ALPHABET_SIZE] {
        &ALPHABET
    }

    pub fn encode(&self, c: char) -> Option<Symbol> {
        ALPHABET.iter().position(|&a| a == c).map(|i| Symbol(i as u8))
    }

    pub fn decode(&self, s: Symbol) -> char {
        s.to_char()
    }

    pub fn contains(&self, c: char) -> bool {
        self.encode(c).is_some()
    }
}

/// A sequence of alphabet symbols. Its payload costs exactly four bits per symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymbolString(Vec<Symbol>);

impl SymbolString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_indices(indices: &[u8]) -> Result<Self, CodecError> {
        indices.iter().map(|&i| Symbol::new(i)).collect::<Result<Vec<_>, _>>().map(SymbolString)
    }

    pub fn indices(&self) -> Vec<u8> {
        self.0.iter().map(|s| s.index()).collect()
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit_len(&self) -> u64 {
        self.0.len() as u64 * BITS_PER_SYMBOL
    }

    pub fn push(&mut self, s: Symbol) {
        self.0.push(s);
    }
}

impl From<Vec<Symbol>> for SymbolString {
    fn from(v: Vec<Symbol>) -> Self {
        SymbolString(v)
    }
}

impl FromIterator<Symbol> for SymbolString {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        SymbolString(iter.into_iter().collect())
    }
}

impl fmt::Display for SymbolString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.to_char())?;
        }
        Ok(())
    }
}

pub fn from_symbols(s: &SymbolString) -> String {
    s.to_string()
}
