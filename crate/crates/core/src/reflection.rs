//! Image reflection: describe the generated image, compare that description
//! with the decoder's original one, and regenerate with the single most
//! important edit. Runs for a fixed number of iterations; there is no
//! convergence test, and the last image is always the result.

use serde::{Deserialize, Serialize};

use crate::backends::{render_regenerate, Backend, BackendError, ContentHash, ImageRef, TextTask};
use crate::metrics;
use crate::pipeline::{Artifact, PipelineConfig, PipelineError, PromptSet, SessionContext, Stage};

/// One describe → compare → regenerate pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub generated_image_hash: ContentHash,
    pub new_description: String,
    pub edit_suggestion: String,
    pub regenerated_image_hash: ContentHash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BudgetExhausted,
    EditUnsupported,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionTrace {
    pub iterations: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

impl ReflectionTrace {
    /// Each iteration must describe the image the previous one produced.
    pub fn verify_chain(&self, initial: &ContentHash) -> bool {
        let mut current = initial;
        for it in &self.iterations {
            if &it.generated_image_hash != current {
                return false;
            }
            current = &it.regenerated_image_hash;
        }
        true
    }
}

/// A single requested change. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditSuggestion(String);

impl EditSuggestion {
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into().trim().to_string();
        (!text.is_empty()).then_some(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Images on either side of one iteration.
#[derive(Debug, Clone)]
pub struct IterationImages {
    pub pre: ImageRef,
    pub post: ImageRef,
}

#[derive(Debug, Clone)]
pub struct ReflectionRun {
    pub trace: ReflectionTrace,
    pub images: Vec<IterationImages>,
    pub final_image: ImageRef,
}

/// True when the rate is at or above the configured threshold (in µbpp).
pub fn gate(bits: u64, width: u32, height: u32, config: &PipelineConfig) -> bool {
    match metrics::microbpp::<f64>(bits, width, height) {
        Ok(rate) => rate >= config.reflection_threshold,
        Err(_) => false,
    }
}

pub fn reflect_once(
    ctx: &mut SessionContext,
    current: &ImageRef,
    original_description: &str,
    prompts: &PromptSet,
    backend: &dyn Backend,
) -> Result<(IterationRecord, ImageRef), BackendError> {
    if !backend.capabilities().supports_session_edit {
        return Err(BackendError::EditUnsupported);
    }

    let new_description = backend.describe(&mut ctx.session, current, &prompts.describe)?;
    ctx.transcript.record(
        Stage::ReflectDescribe,
        prompts.describe.clone(),
        vec![Artifact::Image(current.content_hash().clone())],
        Artifact::Text(new_description.clone()),
        vec![],
    );

    let task = TextTask::ReflectCompare {
        original: original_description.to_string(),
    };
    let raw_edit = backend.transform(&mut ctx.session, &task, &prompts.reflect_compare, &new_description)?;
    let edit = EditSuggestion::new(raw_edit).ok_or_else(|| BackendError::MalformedResponse {
        field: "edit_suggestion".into(),
    })?;
    ctx.transcript.record(
        Stage::ReflectCompare,
        task.render(&prompts.reflect_compare, &new_description),
        vec![
            Artifact::Text(new_description.clone()),
            Artifact::Text(original_description.to_string()),
        ],
        Artifact::Text(edit.as_str().to_string()),
        vec![],
    );

    let edited = backend.regenerate(&mut ctx.session, &prompts.reflect_generate, edit.as_str())?;
    ctx.transcript.record(
        Stage::ReflectGenerate,
        render_regenerate(&prompts.reflect_generate, edit.as_str()),
        vec![
            Artifact::Image(current.content_hash().clone()),
            Artifact::Text(edit.as_str().to_string()),
        ],
        Artifact::Image(edited.content_hash().clone()),
        vec![],
    );

    let record = IterationRecord {
        generated_image_hash: current.content_hash().clone(),
        new_description,
        edit_suggestion: edit.0,
        regenerated_image_hash: edited.content_hash().clone(),
    };
    Ok((record, edited))
}

/// Runs exactly `config.reflection_iterations` passes unless the backend
/// cannot edit. Other failures return the partial trace inside the error.
pub fn run_reflection(
    ctx: &mut SessionContext,
    image: &ImageRef,
    original_description: &str,
    config: &PipelineConfig,
    backend: &dyn Backend,
) -> Result<ReflectionRun, PipelineError> {
    let mut trace = ReflectionTrace {
        iterations: Vec::new(),
        stop_reason: StopReason::BudgetExhausted,
    };
    let mut images = Vec::new();
    let mut current = image.clone();
    for _ in 0..config.reflection_iterations {
        match reflect_once(ctx, &current, original_description, &config.prompts, backend) {
            Ok((record, edited)) => {
                trace.iterations.push(record);
                images.push(IterationImages {
                    pre: current,
                    post: edited.clone(),
                });
                current = edited;
            }
            Err(BackendError::EditUnsupported) => {
                trace.stop_reason = StopReason::EditUnsupported;
                break;
            }
            Err(source) => {
                return Err(PipelineError::Reflection {
                    partial: Box::new(trace),
                    source,
                })
            }
        }
    }
    Ok(ReflectionRun {
        trace,
        images,
        final_image: current,
    })
}
