//! Model backends.
//!
//! The pipeline needs three capabilities: describe an image, transform text,
//! and generate (or edit) an image. [`Backend`] exposes exactly those.
//! [`MockBackend`] implements them deterministically for offline use and
//! [`HttpBackend`] forwards them to a JSON-over-HTTP service.

mod http;
mod image;
mod mock;
mod retry;
mod session;

use std::time::Duration;

use thiserror::Error;

pub use self::http::{
    http_call, HttpBackend, HttpConfig, ReqwestTransport, Transport, TransportError, TransportResponse,
    ENV_API_KEY, ENV_API_URL, ENV_BACKEND,
};
pub use self::image::{ContentHash, ImageRef};
pub use self::mock::{
    mock_compare, mock_word_select, FixtureTable, MockBackend, MockImageStamp, ReverseDictionary, MOCK_IMAGE_SIZE,
    NO_CHANGE, STOPWORDS,
};
pub use self::retry::{NoSleep, RetryPolicy, Sleeper, ThreadSleeper};
pub use self::session::{BackendSession, Message, MessageRole};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("BackendUnavailable after {attempts} attempt(s): {reason}")]
    BackendUnavailable { attempts: u32, reason: String },
    #[error("RateLimited (retry after {retry_after:?})")]
    RateLimited { retry_after: Option<Duration> },
    #[error("ContentRefused: {0}")]
    ContentRefused(String),
    #[error("EditUnsupported: backend cannot modify a previously generated image")]
    EditUnsupported,
    #[error("NoPriorImage: session {0} has no generated image to edit")]
    NoPriorImage(String),
    #[error("FixtureMissing: no description fixture for image {0}")]
    FixtureMissing(ContentHash),
    #[error("MalformedResponse: missing or invalid field `{field}`")]
    MalformedResponse { field: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("image error: {0}")]
    Image(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BackendCapabilities {
    /// Whether `regenerate` can edit the previous image of a session.
    pub supports_session_edit: bool,
}

/// Which text transformation a `transform` call performs.
///
/// The instruction text comes from the prompt templates; the task tells the
/// backend how the payload is laid out in the message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextTask {
    WordSelect { target_words: usize },
    WordCompress,
    WordDecompress,
    /// Compare the payload (new description) against `original`.
    ReflectCompare { original: String },
}

impl TextTask {
    pub fn name(&self) -> &'static str {
        match self {
            TextTask::WordSelect { .. } => "word_select",
            TextTask::WordCompress => "word_compress",
            TextTask::WordDecompress => "word_decompress",
            TextTask::ReflectCompare { .. } => "reflect_compare",
        }
    }

    /// The message actually sent to a model.
    pub fn render(&self, instruction: &str, payload: &str) -> String {
        match self {
            // The compare prompt refers to the new description "above" and
            // the original "below".
            TextTask::ReflectCompare { original } => format!("{payload}\n\n{instruction}\n\n{original}"),
            _ => format!("{instruction}\n\n{payload}"),
        }
    }
}

pub fn render_generate(instruction: &str, description: &str) -> String {
    format!("{instruction}\n\n{description}")
}

pub fn render_regenerate(instruction: &str, edit: &str) -> String {
    format!("{instruction} {edit}")
}

/// A model provider.
///
/// Implementations must be shareable across threads. Each
/// [`BackendSession`] is used by one pipeline run at a time.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    fn capabilities(&self) -> BackendCapabilities;

    fn describe(&self, session: &mut BackendSession, image: &ImageRef, prompt: &str) -> Result<String, BackendError>;

    fn transform(
        &self,
        session: &mut BackendSession,
        task: &TextTask,
        instruction: &str,
        payload: &str,
    ) -> Result<String, BackendError>;

    fn generate(
        &self,
        session: &mut BackendSession,
        instruction: &str,
        description: &str,
    ) -> Result<ImageRef, BackendError>;

    /// Edits the session's most recent image. Fails with
    /// [`BackendError::EditUnsupported`] when the capability is missing and
    /// [`BackendError::NoPriorImage`] on a session without a generated image.
    fn regenerate(&self, session: &mut BackendSession, instruction: &str, edit: &str) -> Result<ImageRef, BackendError>;
}

pub(crate) fn require_nonempty(what: &str, text: &str) -> Result<(), BackendError> {
    if text.trim().is_empty() {
        Err(BackendError::InvalidRequest(format!("{what} is empty")))
    } else {
        Ok(())
    }
}

/// Shared precondition check for `regenerate`.
pub(crate) fn edit_target(
    caps: BackendCapabilities,
    session: &BackendSession,
) -> Result<ImageRef, BackendError> {
    if !caps.supports_session_edit {
        return Err(BackendError::EditUnsupported);
    }
    session
        .last_image()
        .cloned()
        .ok_or_else(|| BackendError::NoPriorImage(session.id().to_string()))
}
