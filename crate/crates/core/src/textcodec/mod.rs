//! Deterministic text layer of the codec.
//!
//! Compressed descriptions live in a 16-symbol alphabet (space plus fifteen
//! consonants), so every character costs exactly four bits. This module owns
//! the alphabet, the canonicalization and repair of model output, nibble
//! packing, and the `.smc` container.

mod alphabet;
mod container;
mod normalize;
mod oracle;
mod packing;

use thiserror::Error;

pub use alphabet::{from_symbols, Alphabet, Symbol, SymbolString, ALPHABET, ALPHABET_SIZE, BITS_PER_SYMBOL};
pub use container::{
    decode_container, encode_container, ContainerHeader, SemanticContainer, CONTAINER_HEADER_LEN, CONTAINER_MAGIC,
    CONTAINER_VERSION,
};
pub use normalize::{canonicalize, to_symbols, RepairMode, RepairPolicy};
pub use oracle::{devowel_oracle, is_vowel, VOWELS};
pub use packing::{pack, unpack};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("IllegalSymbol: {ch:?} at position {position} is outside the 16-symbol alphabet")]
    IllegalSymbol { position: usize, ch: char },
    #[error("symbol index {0} is outside [0, 15]")]
    InvalidIndex(u8),
    #[error("substitution target {target:?} for {from:?} is not in the alphabet")]
    InvalidSubstitution { from: char, target: char },
    #[error("LengthMismatch: {symbols} symbols need {expected} payload bytes, found {actual}")]
    LengthMismatch { symbols: u64, expected: u64, actual: u64 },
    #[error("DimensionOverflow: {field} = {value} exceeds {max}")]
    DimensionOverflow { field: &'static str, value: u64, max: u64 },
    #[error("ZeroDimension: {field} must be positive")]
    ZeroDimension { field: &'static str },
    #[error("BadMagic: expected \"SMC1\", found {found:?}")]
    BadMagic { found: Vec<u8> },
    #[error("UnsupportedVersion: version {0} (only 1 is supported)")]
    UnsupportedVersion(u8),
    #[error("Truncated: container ends inside the {field} field")]
    Truncated { field: &'static str },
}

impl CodecError {
    /// True for errors that mean the container bytes themselves are malformed.
    pub fn is_container_error(&self) -> bool {
        matches!(
            self,
            CodecError::BadMagic { .. }
                | CodecError::UnsupportedVersion(_)
                | CodecError::Truncated { .. }
                | CodecError::LengthMismatch { .. }
                | CodecError::ZeroDimension { .. }
        )
    }
}
