//! Per-session stage records.
//!
//! One transcript per backend session. Serialized as pretty JSON; the shape
//! is the serde derive below, with `stage` one of the snake_case names of
//! [`Stage`]. Images are referenced by content hash, never embedded.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::backends::ContentHash;
use crate::reflection::ReflectionTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Describe,
    WordSelect,
    WordCompress,
    WordDecompress,
    Generate,
    ReflectDescribe,
    ReflectCompare,
    ReflectGenerate,
    ReflectionSkipped,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Describe => "describe",
            Stage::WordSelect => "word_select",
            Stage::WordCompress => "word_compress",
            Stage::WordDecompress => "word_decompress",
            Stage::Generate => "generate",
            Stage::ReflectDescribe => "reflect_describe",
            Stage::ReflectCompare => "reflect_compare",
            Stage::ReflectGenerate => "reflect_generate",
            Stage::ReflectionSkipped => "reflection_skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Text(String),
    Image(ContentHash),
}

impl Artifact {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Artifact::Text(t) => Some(t),
            Artifact::Image(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Word Select returned a count outside `K ± tolerance·K`. Not fatal.
    WordBudgetViolation {
        target: usize,
        actual: usize,
        deviation: f64,
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    BelowThreshold,
    EditUnsupported,
    #[serde(rename = "r=0")]
    NoIterations,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::BelowThreshold => "below_threshold",
            SkipReason::EditUnsupported => "edit_unsupported",
            SkipReason::NoIterations => "r=0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    /// The message sent to the model, or empty for bookkeeping stages.
    pub prompt: String,
    pub inputs: Vec<Artifact>,
    pub output: Artifact,
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionRole {
    Encoder,
    Decoder,
}

/// `logical` stamps each stage with its index, which keeps transcripts
/// byte-reproducible. `wall` uses milliseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampMode {
    Logical,
    #[default]
    Wall,
}

/// How the input was cropped and resampled before encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRecord {
    pub source_width: u32,
    pub source_height: u32,
    pub crop_x: u32,
    pub crop_y: u32,
    pub crop_side: u32,
    pub output_side: u32,
    pub resampled: bool,
    pub filter: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub session_id: String,
    pub role: SessionRole,
    pub backend: String,
    pub timestamps: TimestampMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<CropRecord>,
    pub stages: Vec<StageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<ReflectionTrace>,
}

impl SessionTranscript {
    pub fn new(session_id: impl Into<String>, role: SessionRole, backend: &str, timestamps: TimestampMode) -> Self {
        Self {
            session_id: session_id.into(),
            role,
            backend: backend.to_string(),
            timestamps,
            preprocess: None,
            stages: Vec::new(),
            reflection: None,
        }
    }

    fn next_timestamp(&self) -> u64 {
        match self.timestamps {
            TimestampMode::Logical => self.stages.len() as u64,
            TimestampMode::Wall => {
                let now = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0);
                let last = self.stages.last().map_or(0, |s| s.timestamp);
                now.max(last)
            }
        }
    }

    pub fn record(&mut self, stage: Stage, prompt: String, inputs: Vec<Artifact>, output: Artifact, warnings: Vec<Warning>) {
        let timestamp = self.next_timestamp();
        self.stages.push(StageRecord {
            stage,
            prompt,
            inputs,
            output,
            timestamp,
            warnings,
        });
    }

    pub fn stage_names(&self) -> Vec<Stage> {
        self.stages.iter().map(|s| s.stage).collect()
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Warning> {
        self.stages.iter().flat_map(|s| s.warnings.iter())
    }

    pub fn find(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    /// Checks stage order for the session's role and that timestamps never decrease.
    pub fn validate(&self) -> Result<(), String> {
        if self.stages.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err("timestamps decrease".into());
        }
        let names = self.stage_names();
        match self.role {
            SessionRole::Encoder => {
                if names != [Stage::Describe, Stage::WordSelect, Stage::WordCompress] {
                    return Err(format!("encoder stages out of order: {names:?}"));
                }
            }
            SessionRole::Decoder => {
                if names.len() < 2 || names[..2] != [Stage::WordDecompress, Stage::Generate] {
                    return Err(format!("decoder must start with word_decompress, generate: {names:?}"));
                }
                let rest = &names[2..];
                let skipped = rest == [Stage::ReflectionSkipped];
                let reflected = rest.len().is_multiple_of(3)
                    && rest
                        .chunks(3)
                        .all(|c| c == [Stage::ReflectDescribe, Stage::ReflectCompare, Stage::ReflectGenerate]);
                if !skipped && !reflected {
                    return Err(format!("decoder reflection stages malformed: {rest:?}"));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Every text artifact in the transcript, inputs and outputs.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.stages
            .iter()
            .flat_map(|s| s.inputs.iter().chain(std::iter::once(&s.output)))
            .filter_map(Artifact::as_text)
    }
}
