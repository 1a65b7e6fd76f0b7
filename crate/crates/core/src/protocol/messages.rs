use serde::{Deserialize, Serialize};

use super::Role;

pub const PROTOCOL_VERSION: u32 = 1;
pub const IMAGE_FORMAT_PNG_B64: &str = "png-base64";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageFormat {
    pub width: u32,
    pub height: u32,
    pub format: String,
}

impl ImageFormat {
    pub fn png(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            format: IMAGE_FORMAT_PNG_B64.to_string(),
        }
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

/// Every message either side may send. Field names are part of the wire
/// contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Frame {
    Init {
        protocol: u32,
        role: Role,
        catalog: serde_json::Value,
        catalog_digest: String,
        image: ImageFormat,
    },
    Ready {
        name: String,
        version_tag: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        checkpoint_step: Option<u64>,
        /// Optional echo of the role the worker believes it serves.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        role: Option<Role>,
        /// Optional echo of the digest of the catalog the worker loaded.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        catalog_digest: Option<String>,
    },
    Generate {
        id: u64,
        class_id: usize,
        prompt: String,
        seed: u64,
    },
    Image {
        id: u64,
        png_b64: String,
    },
    Classify {
        id: u64,
        png_b64: String,
    },
    Verdict {
        id: u64,
        probs: Vec<f64>,
        pred: usize,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        code: String,
        message: String,
    },
    Shutdown,
}

impl Frame {
    pub fn kind(&self) -> &'static str {
        match self {
            Frame::Init { .. } => "init",
            Frame::Ready { .. } => "ready",
            Frame::Generate { .. } => "generate",
            Frame::Image { .. } => "image",
            Frame::Classify { .. } => "classify",
            Frame::Verdict { .. } => "verdict",
            Frame::Error { .. } => "error",
            Frame::Shutdown => "shutdown",
        }
    }

    /// The request id a reply refers to, if any.
    pub fn id(&self) -> Option<u64> {
        match self {
            Frame::Generate { id, .. }
            | Frame::Image { id, .. }
            | Frame::Classify { id, .. }
            | Frame::Verdict { id, .. } => Some(*id),
            Frame::Error { id, .. } => *id,
            _ => None,
        }
    }

    pub fn error(id: Option<u64>, code: impl Into<String>, message: impl Into<String>) -> Self {
        Frame::Error {
            id,
            code: code.into(),
            message: message.into(),
        }
    }

    /// Serializes to a single line without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }

    pub fn parse(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}
