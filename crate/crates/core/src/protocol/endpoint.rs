use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ProtocolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Generator,
    Validator,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::Generator => "generator",
            Role::Validator => "validator",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "snake_case")]
pub enum Transport {
    /// Program plus arguments; the protocol runs over its stdin/stdout.
    Subprocess { command: Vec<String> },
    /// `host:port` of a worker already listening.
    Tcp { address: String },
}

fn default_generate_timeout() -> f64 {
    120.0
}
fn default_classify_timeout() -> f64 {
    30.0
}
fn default_handshake_timeout() -> f64 {
    10.0
}
fn default_shutdown_timeout() -> f64 {
    5.0
}

/// Where a worker lives and how long to wait for it. Timeouts are seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpec {
    #[serde(flatten)]
    pub transport: Transport,
    pub role: Role,
    #[serde(default = "default_generate_timeout")]
    pub generate_timeout: f64,
    #[serde(default = "default_classify_timeout")]
    pub classify_timeout: f64,
    #[serde(default = "default_handshake_timeout")]
    pub handshake_timeout: f64,
    #[serde(default = "default_shutdown_timeout")]
    pub shutdown_timeout: f64,
}

impl EndpointSpec {
    pub fn subprocess<S: Into<String>>(role: Role, command: impl IntoIterator<Item = S>) -> Self {
        Self::with_transport(
            role,
            Transport::Subprocess {
                command: command.into_iter().map(Into::into).collect(),
            },
        )
    }

    pub fn tcp(role: Role, address: impl Into<String>) -> Self {
        Self::with_transport(
            role,
            Transport::Tcp {
                address: address.into(),
            },
        )
    }

    pub fn with_transport(role: Role, transport: Transport) -> Self {
        Self {
            transport,
            role,
            generate_timeout: default_generate_timeout(),
            classify_timeout: default_classify_timeout(),
            handshake_timeout: default_handshake_timeout(),
            shutdown_timeout: default_shutdown_timeout(),
        }
    }

    /// Sets every timeout to `secs`; handy for tests.
    pub fn with_all_timeouts(mut self, secs: f64) -> Self {
        self.generate_timeout = secs;
        self.classify_timeout = secs;
        self.handshake_timeout = secs;
        self.shutdown_timeout = secs;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let all = [
            ("generate_timeout", self.generate_timeout),
            ("classify_timeout", self.classify_timeout),
            ("handshake_timeout", self.handshake_timeout),
            ("shutdown_timeout", self.shutdown_timeout),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(ProtocolError::InvalidRequest(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        match &self.transport {
            Transport::Subprocess { command } if command.is_empty() => Err(
                ProtocolError::InvalidRequest("empty subprocess command".into()),
            ),
            Transport::Tcp { address } if address.is_empty() => {
                Err(ProtocolError::InvalidRequest("empty tcp address".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn timeouts(&self) -> Timeouts {
        Timeouts {
            generate: Duration::from_secs_f64(self.generate_timeout),
            classify: Duration::from_secs_f64(self.classify_timeout),
            handshake: Duration::from_secs_f64(self.handshake_timeout),
            shutdown: Duration::from_secs_f64(self.shutdown_timeout),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Timeouts {
    pub generate: Duration,
    pub classify: Duration,
    pub handshake: Duration,
    pub shutdown: Duration,
}

impl Default for Timeouts {
    fn default() -> Self {
        Self {
            generate: Duration::from_secs_f64(default_generate_timeout()),
            classify: Duration::from_secs_f64(default_classify_timeout()),
            handshake: Duration::from_secs_f64(default_handshake_timeout()),
            shutdown: Duration::from_secs_f64(default_shutdown_timeout()),
        }
    }
}
