//! Numeric abstraction used by the rate arithmetic.
//!
//! Bitrates are ratios of integer counts, so they can be carried exactly as
//! rationals or approximately as floats. Everything in [`crate::metrics`] is
//! written against [`Scalar`] so callers pick the representation.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};

/// Exact rational rate type.
pub type Exact = Ratio<u128>;

pub trait Scalar: Num + Copy + PartialOrd + Debug {
    /// Converts an integer count. Exact for rationals; rounds to nearest for floats.
    fn from_count(n: u64) -> Self;

    /// `numer / denom`, with `denom > 0`.
    fn from_ratio(numer: u64, denom: u64) -> Self {
        Self::from_count(numer) / Self::from_count(denom)
    }

    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for Exact {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as u128)
    }

    fn from_ratio(numer: u64, denom: u64) -> Self {
        Ratio::new(numer as u128, denom as u128)
    }

    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}
