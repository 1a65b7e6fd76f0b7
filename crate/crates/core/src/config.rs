//! Engine configuration: one JSON file per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::ClassCatalog;
use crate::error::{Error, Result};
use crate::evaluation::EvalConfig;
use crate::protocol::{EndpointSpec, Role};
use crate::validation::LoopConfig;

fn default_catalog() -> String {
    "default".into()
}
fn default_run_root() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// `"default"` or a path to a catalog JSON file.
    #[serde(default = "default_catalog")]
    pub catalog: String,
    pub generator: EndpointSpec,
    pub validator: EndpointSpec,
    #[serde(rename = "loop", default)]
    pub loop_cfg: LoopConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Relative `--out` paths are resolved against this directory.
    #[serde(default = "default_run_root")]
    pub run_root: PathBuf,
}

impl EngineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Loads a config file. Relative `catalog` and `run_root` paths are taken
    /// relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.catalog != "default" && Path::new(&cfg.catalog).is_relative() {
            cfg.catalog = base.join(&cfg.catalog).to_string_lossy().into_owned();
        }
        if cfg.run_root.is_relative() {
            cfg.run_root = base.join(&cfg.run_root);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.generator.role != Role::Generator {
            return Err(Error::Config(format!(
                "generator endpoint has role {}",
                self.generator.role
            )));
        }
        if self.validator.role != Role::Validator {
            return Err(Error::Config(format!(
                "validator endpoint has role {}",
                self.validator.role
            )));
        }
        self.generator
            .validate()
            .map_err(|e| Error::Config(format!("generator: {e}")))?;
        self.validator
            .validate()
            .map_err(|e| Error::Config(format!("validator: {e}")))?;
        self.loop_cfg.validate()?;
        self.eval.validate()?;
        if self.catalog != "default" && !Path::new(&self.catalog).is_file() {
            return Err(Error::MissingFile(PathBuf::from(&self.catalog)));
        }
        Ok(())
    }

    pub fn catalog(&self) -> Result<ClassCatalog> {
        ClassCatalog::resolve(&self.catalog)
    }

    /// Compact JSON with sorted keys. Parsing it back gives an equal config.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        value.to_string()
    }

    /// Resolves a run directory argument against `run_root`.
    pub fn resolve_out(&self, out: &Path) -> PathBuf {
        if out.is_absolute() {
            out.to_path_buf()
        } else {
            self.run_root.join(out)
        }
    }
}
