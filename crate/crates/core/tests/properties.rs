use std::collections::HashSet;

use proptest::prelude::*;

use semcodec::backends::{BackendSession, ImageRef, MockBackend, MockImageStamp, TextTask};
use semcodec::metrics::{bpp, classify_region, microbpp, Region, RegionThresholds};
use semcodec::textcodec::{
    canonicalize, devowel_oracle, from_symbols, to_symbols, RepairPolicy, SemanticContainer, ALPHABET,
};
use semcodec::{Backend, Exact};

fn legal_text() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(ALPHABET.to_vec()), 0..300).prop_map(|v| v.into_iter().collect())
}

/// Single-space-separated words over the consonant symbols.
fn canonical_text() -> impl Strategy<Value = String> {
    let word = proptest::collection::vec(proptest::sample::select(ALPHABET[1..].to_vec()), 1..8)
        .prop_map(|v| v.into_iter().collect::<String>());
    proptest::collection::vec(word, 0..40).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent(s in "\\PC{0,200}") {
        let once = canonicalize(&s);
        prop_assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn strict_and_repair_agree_on_canonical_text(s in canonical_text()) {
        let strict = to_symbols(&s, &RepairPolicy::strict()).unwrap();
        let repaired = to_symbols(&s, &RepairPolicy::repair()).unwrap();
        prop_assert_eq!(&strict, &repaired);
        prop_assert_eq!(from_symbols(&strict), s);
    }

    #[test]
    fn oracle_output_is_always_encodable(s in "[a-zA-Z ,.'-]{0,200}") {
        let out = devowel_oracle(&canonicalize(&s), &RepairPolicy::repair());
        prop_assert!(to_symbols(&out, &RepairPolicy::strict()).is_ok());
    }

    #[test]
    fn container_roundtrip(s in legal_text(), w in 1u16.., h in 1u16..) {
        let symbols = to_symbols(&s, &RepairPolicy::strict()).unwrap();
        let c = SemanticContainer::new(symbols, w as u32, h as u32).unwrap();
        let bytes = c.to_bytes();
        prop_assert_eq!(bytes.len(), 13 + s.chars().count().div_ceil(2));
        prop_assert_eq!(SemanticContainer::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn bpp_is_monotone_in_bits(a in 0u64..1_000_000, b in 0u64..1_000_000, w in 1u32..5000, h in 1u32..5000) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(bpp::<Exact>(lo, w, h).unwrap() <= bpp::<Exact>(hi, w, h).unwrap());
    }

    #[test]
    fn bpp_scales_inversely_with_pixels(bits in 0u64..1_000_000, w in 1u32..2000, h in 1u32..2000) {
        let one = bpp::<Exact>(bits, w, h).unwrap();
        let four = bpp::<Exact>(bits, 2 * w, 2 * h).unwrap();
        prop_assert_eq!(one, four * Exact::from_integer(4));
        let micro = microbpp::<Exact>(bits, w, h).unwrap();
        prop_assert_eq!(micro, one * Exact::from_integer(1_000_000));
    }

    #[test]
    fn region_is_monotone(a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let t = RegionThresholds::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(classify_region(lo, &t) <= classify_region(hi, &t));
    }

    #[test]
    fn mock_compress_is_strict_legal(s in "[a-zA-Z ]{1,200}") {
        prop_assume!(!s.trim().is_empty());
        let mock = MockBackend::new(Default::default());
        let mut session = BackendSession::new("p");
        let out = mock.transform(&mut session, &TextTask::WordCompress, "compress", &s).unwrap();
        prop_assert!(to_symbols(&out, &RepairPolicy::strict()).is_ok());
    }
}

#[test]
fn region_ordering_matches_bands() {
    let t = RegionThresholds::default();
    assert_eq!(classify_region(0.2, &t), Region::Structural);
    assert_eq!(classify_region(0.01, &t), Region::Mixed);
    assert_eq!(classify_region(1e-4, &t), Region::Semantic);
    assert_eq!(classify_region(1e-6, &t), Region::SubSemantic);
}

#[test]
fn distinct_prompts_give_distinct_images() {
    let mock = MockBackend::new(Default::default());
    let mut hashes = HashSet::new();
    for i in 0..1000 {
        let mut session = BackendSession::new("g");
        let img: ImageRef = mock.generate(&mut session, "draw", &format!("scene number {i}")).unwrap();
        assert!(MockImageStamp::read(&img).is_some());
        hashes.insert(img.content_hash().clone());
    }
    assert_eq!(hashes.len(), 1000);
}
