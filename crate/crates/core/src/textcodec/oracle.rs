use super::alphabet::Alphabet;
use super::normalize::{collapse_whitespace, RepairPolicy};

pub const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];

pub fn is_vowel(c: char) -> bool {
    VOWELS.contains(&c)
}

/// Rule-based character compression: drop vowels, apply the policy's
/// substitutions, drop anything still outside the alphabet, collapse spaces.
///
/// Stand-in for the model's own compression in the mock backend and tests.
/// No stemming or plural handling.
pub fn devowel_oracle(text: &str, policy: &RepairPolicy) -> String {
    let alphabet = Alphabet;
    let kept: String = text
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .filter(|&c| !is_vowel(c))
        .filter_map(|c| policy.substitute(c))
        .filter(|&c| alphabet.contains(c))
        .collect();
    collapse_whitespace(&kept)
}
