use serde::{Deserialize, Serialize};

/// Who a worker says it is in its handshake.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerIdentity {
    pub name: String,
    pub version_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_step: Option<u64>,
}

impl std::fmt::Display for WorkerIdentity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}@{}", self.name, self.version_tag)?;
        if let Some(step) = self.checkpoint_step {
            write!(f, ":{step}")?;
        }
        Ok(())
    }
}

/// Identity and configuration snapshot of one run directory.
///
/// `run_id` and `created_at` differ between otherwise identical runs; every
/// other field is a pure function of the configuration and the workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub created_at: String,
    pub config_snapshot: String,
    pub base_seed: u64,
    pub generator_identity: Option<WorkerIdentity>,
    pub validator_identity: Option<WorkerIdentity>,
    pub catalog_digest: String,
    #[serde(default)]
    pub completed: bool,
}

impl RunManifest {
    pub fn new(config_snapshot: String, base_seed: u64, catalog_digest: String) -> Self {
        Self {
            run_id: uuid::Uuid::new_v4().to_string(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            config_snapshot,
            base_seed,
            generator_identity: None,
            validator_identity: None,
            catalog_digest,
            completed: false,
        }
    }

    /// The reproducible part of the manifest, without per-execution ids and
    /// timestamps.
    pub fn reproducible(&self) -> ReproducibleManifest {
        ReproducibleManifest {
            config_snapshot: self.config_snapshot.clone(),
            base_seed: self.base_seed,
            generator_identity: self.generator_identity.clone(),
            validator_identity: self.validator_identity.clone(),
            catalog_digest: self.catalog_digest.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproducibleManifest {
    pub config_snapshot: String,
    pub base_seed: u64,
    pub generator_identity: Option<WorkerIdentity>,
    pub validator_identity: Option<WorkerIdentity>,
    pub catalog_digest: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_ids_are_unique() {
        let a = RunManifest::new("{}".into(), 1, "ab".into());
        let b = RunManifest::new("{}".into(), 1, "ab".into());
        assert_ne!(a.run_id, b.run_id);
        assert_eq!(a.reproducible(), b.reproducible());
    }

    #[test]
    fn identity_display() {
        let id = WorkerIdentity {
            name: "lora".into(),
            version_tag: "V9".into(),
            checkpoint_step: Some(1131),
        };
        assert_eq!(id.to_string(), "lora@V9:1131");
    }
}
