//! Bitrate accounting and compression-region classification.
//!
//! Rates are computed from integer bit and pixel counts and carried in any
//! [`Scalar`]: use [`Exact`](crate::scalar::Exact) when the identity
//! `bpp * pixels == bits` must hold exactly, `f64` for display.
//!
//! Only the 4-bit payload counts toward the headline rate. The container
//! header is transport framing and is reported separately as `total_bpp`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::textcodec::{BITS_PER_SYMBOL, CONTAINER_HEADER_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("image has zero pixels")]
    ZeroPixels,
    #[error("compressed size is zero bits")]
    ZeroBits,
}

/// Fig. 1 style bands: what kind of information a codec at this rate keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    SubSemantic,
    Semantic,
    Mixed,
    Structural,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Structural => "structural",
            Region::Mixed => "mixed",
            Region::Semantic => "semantic",
            Region::SubSemantic => "sub_semantic",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lower edges (in bpp) of the structural, mixed and semantic bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionThresholds<T> {
    pub structural_min: T,
    pub mixed_min: T,
    pub semantic_min: T,
}

impl<T: Scalar> Default for RegionThresholds<T> {
    fn default() -> Self {
        Self {
            structural_min: T::from_ratio(1, 10),
            mixed_min: T::from_ratio(1, 1_000),
            semantic_min: T::from_ratio(1, 100_000),
        }
    }
}

impl<T: Scalar> RegionThresholds<T> {
    /// Returns `None` unless `structural_min > mixed_min > semantic_min > 0`.
    pub fn new(structural_min: T, mixed_min: T, semantic_min: T) -> Option<Self> {
        let ordered = structural_min > mixed_min && mixed_min > semantic_min && semantic_min > T::zero();
        ordered.then_some(Self {
            structural_min,
            mixed_min,
            semantic_min,
        })
    }
}

/// Bits carried by `n` alphabet symbols.
pub fn bits_of_symbols(n: u64) -> u64 {
    n * BITS_PER_SYMBOL
}

/// Bits of a whole container file holding `n` symbols, header included.
pub fn container_bits(n: u64) -> u64 {
    (CONTAINER_HEADER_LEN as u64 + n.div_ceil(2)) * 8
}

pub fn pixel_count(width: u32, height: u32) -> Result<u64, MetricsError> {
    let pixels = width as u64 * height as u64;
    if pixels == 0 {
        return Err(MetricsError::ZeroPixels);
    }
    Ok(pixels)
}

/// Bits per pixel, `bits / (width * height)`.
pub fn bpp<T: Scalar>(bits: u64, width: u32, height: u32) -> Result<T, MetricsError> {
    let pixels = pixel_count(width, height)?;
    Ok(T::from_ratio(bits, pixels))
}

pub fn microbpp<T: Scalar>(bits: u64, width: u32, height: u32) -> Result<T, MetricsError> {
    Ok(bpp::<T>(bits, width, height)? * T::from_count(1_000_000))
}

pub fn classify_region<T: Scalar>(bpp: T, thresholds: &RegionThresholds<T>) -> Region {
    if bpp >= thresholds.structural_min {
        Region::Structural
    } else if bpp >= thresholds.mixed_min {
        Region::Mixed
    } else if bpp >= thresholds.semantic_min {
        Region::Semantic
    } else {
        Region::SubSemantic
    }
}

/// How many times larger the baseline is: `baseline_bits / our_bits`.
pub fn baseline_ratio<T: Scalar>(our_bits: u64, baseline_bits: u64) -> Result<T, MetricsError> {
    if our_bits == 0 {
        return Err(MetricsError::ZeroBits);
    }
    Ok(T::from_ratio(baseline_bits, our_bits))
}

/// Rate summary for one compressed image.
#[derive(Debug, Clone, PartialEq)]
pub struct BitrateReport<T> {
    pub symbols: u64,
    /// Payload bits (4 per symbol).
    pub bits: u64,
    pub pixels: u64,
    pub bpp: T,
    pub microbpp: T,
    /// Bits of the full container, header included.
    pub total_bits: u64,
    pub total_bpp: T,
    pub region: Region,
    pub baseline_ratio: Option<T>,
}

impl<T: Scalar> BitrateReport<T> {
    pub fn for_symbols(symbols: u64, width: u32, height: u32) -> Result<Self, MetricsError> {
        Self::for_symbols_with(symbols, width, height, &RegionThresholds::default())
    }

    pub fn for_symbols_with(
        symbols: u64,
        width: u32,
        height: u32,
        thresholds: &RegionThresholds<T>,
    ) -> Result<Self, MetricsError> {
        let pixels = pixel_count(width, height)?;
        let bits = bits_of_symbols(symbols);
        let total_bits = container_bits(symbols);
        let rate = T::from_ratio(bits, pixels);
        Ok(Self {
            symbols,
            bits,
            pixels,
            bpp: rate,
            microbpp: rate * T::from_count(1_000_000),
            total_bits,
            total_bpp: T::from_ratio(total_bits, pixels),
            region: classify_region(rate, thresholds),
            baseline_ratio: None,
        })
    }

    /// Attaches `baseline_bits / bits`. Fails on an empty payload.
    pub fn with_baseline(mut self, baseline_bits: u64) -> Result<Self, MetricsError> {
        self.baseline_ratio = Some(baseline_ratio(self.bits, baseline_bits)?);
        Ok(self)
    }

    pub fn total_microbpp(&self) -> T {
        self.total_bpp * T::from_count(1_000_000)
    }

    /// µbpp rounded to the nearest hundred, the granularity published figures
    /// tend to quote (25 symbols on 1024² is 95.37 µbpp, quoted as ~100).
    pub fn coarse_microbpp(&self) -> u64 {
        let v = self.microbpp.to_f64();
        ((v / 100.0).round() * 100.0) as u64
    }

    pub fn record(&self) -> RateRecord {
        RateRecord {
            symbols: self.symbols,
            bits: self.bits,
            pixels: self.pixels,
            bpp: self.bpp.to_f64(),
            microbpp: self.microbpp.to_f64(),
            total_bits: self.total_bits,
            total_microbpp: self.total_microbpp().to_f64(),
            region: self.region,
            baseline_ratio: self.baseline_ratio.map(Scalar::to_f64),
        }
    }

    /// Two-column plain-text table.
    pub fn table(&self) -> String {
        let mut rows = vec![
            ("symbols", self.symbols.to_string()),
            ("payload bits", self.bits.to_string()),
            ("pixels", self.pixels.to_string()),
            ("payload bpp", format!("{:.6e}", self.bpp.to_f64())),
            (
                "payload µbpp",
                format!("{:.2} (≈{} µbpp)", self.microbpp.to_f64(), self.coarse_microbpp()),
            ),
            ("total bits", self.total_bits.to_string()),
            ("total µbpp", format!("{:.2}", self.total_microbpp().to_f64())),
            ("region", self.region.to_string()),
        ];
        if let Some(r) = self.baseline_ratio {
            rows.push(("baseline ratio", format!("{:.2}x", r.to_f64())));
        }
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let pad = width - k.chars().count();
            out.push_str(&format!("{k}{}  {v}\n", " ".repeat(pad)));
        }
        out
    }
}

/// Serializable view of a [`BitrateReport`], rates as `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub symbols: u64,
    pub bits: u64,
    pub pixels: u64,
    pub bpp: f64,
    pub microbpp: f64,
    pub total_bits: u64,
    pub total_microbpp: f64,
    pub region: Region,
    pub baseline_ratio: Option<f64>,
}
