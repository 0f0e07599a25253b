//! Encoder and decoder stage sequences.
//!
//! Encoder (one session): Describe → Word Select(K) → Word Compress → pack.
//! Decoder (a separate session): unpack → Word Decompress → Generate →
//! optional reflection. The two sessions share nothing but the container.

mod prompts;
mod transcript;

use std::collections::HashSet;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use prompts::{load_prompts, PromptSet, K_PLACEHOLDER, TEMPLATE_NAMES};
pub use transcript::{
    Artifact, CropRecord, SessionRole, SessionTranscript, SkipReason, Stage, StageRecord, TimestampMode, Warning,
};

use crate::backends::{render_generate, Backend, BackendError, BackendSession, ImageRef, TextTask};
use crate::metrics::{BitrateReport, MetricsError};
use crate::reflection::{self, IterationImages, ReflectionTrace};
use crate::textcodec::{canonicalize, from_symbols, to_symbols, CodecError, RepairPolicy, SemanticContainer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("MissingTemplate: {0}")]
    MissingTemplate(String),
    #[error("MissingPlaceholder: template {template} lacks {placeholder}")]
    MissingPlaceholder { template: String, placeholder: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("reflection failed after {} iteration(s): {source}", partial.iterations.len())]
    Reflection {
        partial: Box<ReflectionTrace>,
        source: BackendError,
    },
    #[error("decoder session saw encoder context: {0:?}")]
    SessionLeak(Vec<String>),
}

/// Parameters shared by encoder and decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// K: how many words Word Select should keep.
    pub target_words: usize,
    /// Allowed relative deviation from K before a warning is recorded.
    pub word_count_tolerance: f64,
    /// R: reflection passes when reflection runs.
    pub reflection_iterations: u32,
    /// Reflection runs only at or above this rate, in µbpp.
    pub reflection_threshold: f64,
    pub repair_policy: RepairPolicy,
    pub prompts: PromptSet,
    pub timestamps: TimestampMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target_words: 25,
            word_count_tolerance: 0.10,
            reflection_iterations: 2,
            reflection_threshold: 500.0,
            repair_policy: RepairPolicy::default(),
            prompts: PromptSet::bundled(),
            timestamps: TimestampMode::default(),
        }
    }
}

impl PipelineConfig {
    pub fn with_words(mut self, k: usize) -> Self {
        self.target_words = k;
        self
    }

    pub fn with_reflection(mut self, iterations: u32) -> Self {
        self.reflection_iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.target_words == 0 {
            return Err(PipelineError::InvalidConfig("target word count must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.word_count_tolerance) {
            return Err(PipelineError::InvalidConfig("word count tolerance must be in [0, 1)".into()));
        }
        if self.reflection_threshold.is_nan() || self.reflection_threshold < 0.0 {
            return Err(PipelineError::InvalidConfig("reflection threshold must be non-negative".into()));
        }
        Ok(())
    }

    /// `None` when `actual` is within `K ± tolerance·K`.
    pub fn word_budget_check(&self, actual: usize) -> Option<Warning> {
        let target = self.target_words;
        let deviation = actual.abs_diff(target) as f64 / target as f64;
        (deviation > self.word_count_tolerance).then_some(Warning::WordBudgetViolation {
            target,
            actual,
            deviation,
            tolerance: self.word_count_tolerance,
        })
    }
}

/// A backend session plus its transcript.
#[derive(Debug, Clone)]
pub struct SessionContext {
    pub session: BackendSession,
    pub transcript: SessionTranscript,
}

impl SessionContext {
    pub fn new(id: String, role: SessionRole, backend: &dyn Backend, timestamps: TimestampMode) -> Self {
        Self {
            session: BackendSession::new(id.clone()),
            transcript: SessionTranscript::new(id, role, backend.name(), timestamps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intermediate {
    pub description: String,
    pub selected_words: String,
    /// Word Compress output exactly as the model returned it.
    pub compressed_raw: String,
    /// What the container holds: canonicalized and mapped onto the alphabet.
    pub compressed_text: String,
}

#[derive(Debug, Clone)]
pub struct EncodeResult {
    pub container: Vec<u8>,
    pub intermediate: Intermediate,
    pub transcript: SessionTranscript,
    pub report: BitrateReport<f64>,
}

#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub image: ImageRef,
    pub decompressed_text: String,
    /// The full Generate message.
    pub expanded_prompt: String,
    pub transcript: SessionTranscript,
    pub reflection_images: Vec<IterationImages>,
    pub report: BitrateReport<f64>,
}

impl DecodeResult {
    pub fn reflection_trace(&self) -> Option<&ReflectionTrace> {
        self.transcript.reflection.as_ref()
    }
}

fn word_count(text: &str) -> usize {
    canonicalize(text).split(' ').filter(|w| !w.is_empty()).count()
}

pub fn encode_image(image: &ImageRef, config: &PipelineConfig, backend: &dyn Backend) -> Result<EncodeResult, PipelineError> {
    config.validate()?;
    let prompts = &config.prompts;
    let id = format!("enc-{}", image.content_hash().short());
    let mut ctx = SessionContext::new(id, SessionRole::Encoder, backend, config.timestamps);

    let description = backend.describe(&mut ctx.session, image, &prompts.describe)?;
    ctx.transcript.record(
        Stage::Describe,
        prompts.describe.clone(),
        vec![Artifact::Image(image.content_hash().clone())],
        Artifact::Text(description.clone()),
        vec![],
    );

    let select_prompt = prompts.word_select_for(config.target_words);
    let task = TextTask::WordSelect {
        target_words: config.target_words,
    };
    let selected = backend.transform(&mut ctx.session, &task, &select_prompt, &description)?;
    let warnings = config.word_budget_check(word_count(&selected)).into_iter().collect();
    ctx.transcript.record(
        Stage::WordSelect,
        task.render(&select_prompt, &description),
        vec![Artifact::Text(description.clone())],
        Artifact::Text(selected.clone()),
        warnings,
    );

    let task = TextTask::WordCompress;
    let compressed_raw = backend.transform(&mut ctx.session, &task, &prompts.word_compress, &selected)?;
    ctx.transcript.record(
        Stage::WordCompress,
        task.render(&prompts.word_compress, &selected),
        vec![Artifact::Text(selected.clone())],
        Artifact::Text(compressed_raw.clone()),
        vec![],
    );

    let symbols = to_symbols(&canonicalize(&compressed_raw), &config.repair_policy)?;
    let container = SemanticContainer::new(symbols, image.width(), image.height())?;
    let report = BitrateReport::for_symbols(container.symbols.len() as u64, image.width(), image.height())?;

    Ok(EncodeResult {
        intermediate: Intermediate {
            description,
            selected_words: selected,
            compressed_raw,
            compressed_text: from_symbols(&container.symbols),
        },
        container: container.to_bytes(),
        transcript: ctx.transcript,
        report,
    })
}

/// Decodes `.smc` bytes into an image in a fresh decoder session.
pub fn decode_container(
    container_bytes: &[u8],
    config: &PipelineConfig,
    backend: &dyn Backend,
) -> Result<DecodeResult, PipelineError> {
    config.validate()?;
    let prompts = &config.prompts;
    let container = SemanticContainer::from_bytes(container_bytes)?;
    let (width, height) = (container.width as u32, container.height as u32);
    let report = BitrateReport::for_symbols(container.symbols.len() as u64, width, height)?;
    let compressed = from_symbols(&container.symbols);

    let digest = hex::encode(Sha256::digest(container_bytes));
    let id = format!("dec-{}", &digest[..16]);
    let mut ctx = SessionContext::new(id, SessionRole::Decoder, backend, config.timestamps);

    let task = TextTask::WordDecompress;
    let decompressed = backend.transform(&mut ctx.session, &task, &prompts.word_decompress, &compressed)?;
    ctx.transcript.record(
        Stage::WordDecompress,
        task.render(&prompts.word_decompress, &compressed),
        vec![Artifact::Text(compressed.clone())],
        Artifact::Text(decompressed.clone()),
        vec![],
    );

    let expanded_prompt = render_generate(&prompts.generate, &decompressed);
    let image = backend.generate(&mut ctx.session, &prompts.generate, &decompressed)?;
    ctx.transcript.record(
        Stage::Generate,
        expanded_prompt.clone(),
        vec![Artifact::Text(decompressed.clone())],
        Artifact::Image(image.content_hash().clone()),
        vec![],
    );

    let skip = if config.reflection_iterations == 0 {
        Some(SkipReason::NoIterations)
    } else if !reflection::gate(report.bits, width, height, config) {
        Some(SkipReason::BelowThreshold)
    } else if !backend.capabilities().supports_session_edit {
        Some(SkipReason::EditUnsupported)
    } else {
        None
    };

    let (final_image, reflection_images) = match skip {
        Some(reason) => {
            ctx.transcript.record(
                Stage::ReflectionSkipped,
                String::new(),
                vec![],
                Artifact::Text(reason.as_str().to_string()),
                vec![],
            );
            (image, Vec::new())
        }
        None => {
            let run = reflection::run_reflection(&mut ctx, &image, &decompressed, config, backend)?;
            ctx.transcript.reflection = Some(run.trace);
            (run.final_image, run.images)
        }
    };

    Ok(DecodeResult {
        image: final_image,
        decompressed_text: decompressed,
        expanded_prompt,
        transcript: ctx.transcript,
        reflection_images,
        report,
    })
}

/// Encoder texts that reached the decoder by any route other than the
/// payload.
///
/// A decoder input is legitimate when it is the payload or an output of an
/// earlier decoder stage. Any other decoder input that matches encoder text
/// is a leak, as is any appearance of the encoder's Describe output anywhere
/// in the decoder transcript.
pub fn shared_context(encoder: &SessionTranscript, decoder: &SessionTranscript) -> Vec<String> {
    let payload = encoder
        .find(Stage::WordCompress)
        .and_then(|s| s.output.as_text())
        .map(canonicalize)
        .unwrap_or_default();
    let encoder_texts: HashSet<&str> = encoder
        .texts()
        .filter(|t| canonicalize(t) != payload && !t.is_empty())
        .collect();

    let mut leaks = Vec::new();
    let mut produced: HashSet<&Artifact> = HashSet::new();
    for stage in &decoder.stages {
        for input in &stage.inputs {
            let from_payload = input.as_text().is_some_and(|t| canonicalize(t) == payload);
            if from_payload || produced.contains(input) {
                continue;
            }
            if let Some(t) = input.as_text() {
                if encoder_texts.contains(t) {
                    leaks.push(t.to_string());
                }
            }
        }
        produced.insert(&stage.output);
    }

    if let Some(description) = encoder.find(Stage::Describe).and_then(|s| s.output.as_text()) {
        let seen = decoder.texts().any(|t| t.contains(description))
            || decoder.stages.iter().any(|s| s.prompt.contains(description));
        if seen && !leaks.iter().any(|l| l == description) {
            leaks.push(description.to_string());
        }
    }
    leaks
}

/// Encode then decode in two independent sessions, checking that the decoder
/// only ever saw the container.
pub fn roundtrip(
    image: &ImageRef,
    config: &PipelineConfig,
    backend: &dyn Backend,
) -> Result<(EncodeResult, DecodeResult), PipelineError> {
    let encoded = encode_image(image, config, backend)?;
    let decoded = decode_container(&encoded.container, config, backend)?;
    let leaks = shared_context(&encoded.transcript, &decoded.transcript);
    if !leaks.is_empty() {
        return Err(PipelineError::SessionLeak(leaks));
    }
    Ok((encoded, decoded))
}
