//! Text-based semantic image compression.
//!
//! An image is described by a vision-language model, reduced to its K most
//! important words, and those words are stripped to a 16-symbol consonant
//! alphabet so each character costs four bits. Decoding expands the text back
//! into a prompt and asks an image model to draw it, optionally refining the
//! result with a few rounds of reflection.
//!
//! Model calls go through [`backends::Backend`]; [`backends::MockBackend`]
//! makes everything deterministic and offline.

pub mod backends;
pub mod metrics;
pub mod pipeline;
pub mod reflection;
pub mod scalar;
pub mod textcodec;

pub use backends::{Backend, BackendError, ImageRef, MockBackend};
pub use pipeline::{decode_container, encode_image, roundtrip, PipelineConfig, PipelineError};
pub use scalar::{Exact, Scalar};
pub use textcodec::{CodecError, RepairPolicy, SemanticContainer, SymbolString};

/// Rate report with `f64` rates.
pub type BitrateReport = metrics::BitrateReport<f64>;
/// Rate report with single-precision rates.
pub type BitrateReportF32 = metrics::BitrateReport<f32>;
/// Rate report with exact rational rates.
pub type ExactBitrateReport = metrics::BitrateReport<Exact>;
pub type RegionThresholds = metrics::RegionThresholds<f64>;
pub type ExactRegionThresholds = metrics::RegionThresholds<Exact>;
