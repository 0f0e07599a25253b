use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::alphabet::{Alphabet, SymbolString};
use super::CodecError;

/// Lowercases, strips punctuation and collapses whitespace.
///
/// Only alphanumerics and whitespace survive; runs of whitespace become a
/// single space and the ends are trimmed. Idempotent.
pub fn canonicalize(text: &str) -> String {
    let kept: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    collapse_whitespace(&kept)
}

pub(crate) fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairMode {
    /// Any character outside the alphabet is an error.
    Strict,
    /// Substitute or drop characters outside the alphabet.
    #[default]
    Repair,
}

impl fmt::Display for RepairMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairMode::Strict => "strict",
            RepairMode::Repair => "repair",
        })
    }
}

impl FromStr for RepairMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(RepairMode::Strict),
            "repair" => Ok(RepairMode::Repair),
            other => Err(format!("unknown repair mode {other:?} (expected strict or repair)")),
        }
    }
}

/// How to treat model output that strays outside the alphabet.
///
/// `substitutions` maps an out-of-alphabet consonant to an in-alphabet one,
/// or to `None` to drop it. Strict mode ignores the table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairPolicy {
    pub mode: RepairMode,
    substitutions: BTreeMap<char, Option<char>>,
}

impl Default for RepairPolicy {
    fn default() -> Self {
        Self::repair()
    }
}

impl RepairPolicy {
    pub fn default_substitutions() -> BTreeMap<char, Option<char>> {
        BTreeMap::from([
            ('w', Some('v')),
            ('j', Some('g')),
            ('q', Some('k')),
            ('x', Some('k')),
            ('z', Some('s')),
            ('y', None),
        ])
    }

    pub fn strict() -> Self {
        Self {
            mode: RepairMode::Strict,
            substitutions: Self::default_substitutions(),
        }
    }

    pub fn repair() -> Self {
        Self {
            mode: RepairMode::Repair,
            substitutions: Self::default_substitutions(),
        }
    }

    pub fn with_mode(mode: RepairMode) -> Self {
        match mode {
            RepairMode::Strict => Self::strict(),
            RepairMode::Repair => Self::repair(),
        }
    }

    /// Repair policy with a custom table. Every target must be in the alphabet.
    pub fn repair_with(substitutions: BTreeMap<char, Option<char>>) -> Result<Self, CodecError> {
        for (&from, target) in &substitutions {
            if let Some(t) = *target {
                if !Alphabet.contains(t) {
                    return Err(CodecError::InvalidSubstitution { from, target: t });
                }
            }
        }
        Ok(Self {
            mode: RepairMode::Repair,
            substitutions,
        })
    }

    pub fn substitutions(&self) -> &BTreeMap<char, Option<char>> {
        &self.substitutions
    }

    /// Applies the table to one character. `None` means drop it. Strict mode
    /// and characters without an entry pass through unchanged.
    pub(crate) fn substitute(&self, c: char) -> Option<char> {
        if self.mode == RepairMode::Strict {
            return Some(c);
        }
        match self.substitutions.get(&c) {
            Some(target) => *target,
            None => Some(c),
        }
    }
}

/// Maps canonical text onto alphabet symbols.
///
/// Strict mode rejects the first out-of-alphabet character. Repair mode
/// substitutes per the policy table, drops whatever is left over (vowels,
/// digits, other letters), and re-collapses whitespace.
pub fn to_symbols(text: &str, policy: &RepairPolicy) -> Result<SymbolString, CodecError> {
    let alphabet = Alphabet;
    match policy.mode {
        RepairMode::Strict => text
            .chars()
            .enumerate()
            .map(|(position, ch)| alphabet.encode(ch).ok_or(CodecError::IllegalSymbol { position, ch }))
            .collect(),
        RepairMode::Repair => {
            let repaired: String = text
                .chars()
                .map(|c| if c.is_whitespace() { ' ' } else { c })
                .filter_map(|c| policy.substitute(c))
                .filter(|&c| alphabet.contains(c))
                .collect();
            let collapsed = collapse_whitespace(&repaired);
            Ok(collapsed.chars().filter_map(|c| alphabet.encode(c)).collect())
        }
    }
}
