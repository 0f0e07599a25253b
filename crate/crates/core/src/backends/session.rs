use serde::{Deserialize, Serialize};

use super::image::{ContentHash, ImageRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageRole {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: MessageRole,
    pub content: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<ContentHash>,
}

/// One isolated model conversation. History is append-only.
#[derive(Debug, Clone)]
pub struct BackendSession {
    id: String,
    history: Vec<Message>,
    last_image: Option<ImageRef>,
}

impl BackendSession {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            history: Vec::new(),
            last_image: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn history(&self) -> &[Message] {
        &self.history
    }

    /// The most recent image produced in this session, if any.
    pub fn last_image(&self) -> Option<&ImageRef> {
        self.last_image.as_ref()
    }

    pub fn push_user(&mut self, content: impl Into<String>, image: Option<&ImageRef>) {
        self.history.push(Message {
            role: MessageRole::User,
            content: content.into(),
            image: image.map(|i| i.content_hash().clone()),
        });
    }

    pub fn push_assistant_text(&mut self, content: impl Into<String>) {
        self.history.push(Message {
            role: MessageRole::Assistant,
            content: content.into(),
            image: None,
        });
    }

    pub fn push_assistant_image(&mut self, image: ImageRef) {
        self.history.push(Message {
            role: MessageRole::Assistant,
            content: String::new(),
            image: Some(image.content_hash().clone()),
        });
        self.last_image = Some(image);
    }
}
