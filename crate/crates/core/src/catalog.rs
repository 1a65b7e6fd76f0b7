//! Class catalog: the ordered set of classes a run generates and validates.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Tissue names of the default nine-class catalog, in dataset label order.
pub const DEFAULT_CLASS_NAMES: [&str; 9] = [
    "adipose",
    "background",
    "debris",
    "lymphocytes",
    "mucus",
    "smooth muscle",
    "normal colon mucosa",
    "cancer-associated stroma",
    "adenocarcinoma epithelium",
];

pub fn default_prompt(name: &str) -> String {
    format!("histopathology patch of {name}, H&E stain")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDef {
    pub id: usize,
    pub name: String,
    pub prompt: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    classes: Vec<ClassDef>,
}

/// Validated, immutable class catalog. Classes are stored in id order and
/// ids are dense `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCatalog {
    classes: Vec<ClassDef>,
    digest: String,
}

impl ClassCatalog {
    pub fn new(mut classes: Vec<ClassDef>) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::Catalog(format!(
                "catalog needs at least 2 classes, got {}",
                classes.len()
            )));
        }
        classes.sort_by_key(|c| c.id);
        if let Some(pair) = classes.windows(2).find(|p| p[0].id == p[1].id) {
            return Err(Error::Catalog(format!("duplicate id {}", pair[0].id)));
        }
        if classes.iter().enumerate().any(|(i, c)| c.id != i) {
            return Err(Error::Catalog("non-dense ids".into()));
        }
        let mut names = std::collections::HashSet::new();
        for c in &classes {
            if c.name.trim().is_empty() {
                return Err(Error::Catalog(format!("class {} has an empty name", c.id)));
            }
            if c.prompt.trim().is_empty() {
                return Err(Error::Catalog(format!(
                    "class {} has an empty prompt",
                    c.id
                )));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::Catalog(format!("duplicate name {:?}", c.name)));
            }
        }
        let digest = digest_of(&classes);
        Ok(Self { classes, digest })
    }

    /// The nine-class colorectal tissue catalog with default prompts.
    pub fn default_catalog() -> Self {
        let classes = DEFAULT_CLASS_NAMES
            .iter()
            .enumerate()
            .map(|(id, name)| ClassDef {
                id,
                name: (*name).to_string(),
                prompt: default_prompt(name),
            })
            .collect();
        Self::new(classes).expect("default catalog is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CatalogFile =
            serde_json::from_str(text).map_err(|e| Error::Catalog(format!("parse error: {e}")))?;
        Self::new(file.classes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// `"default"` selects the built-in catalog; anything else is a file path.
    pub fn resolve(spec: &str) -> Result<Self> {
        if spec == "default" {
            Ok(Self::default_catalog())
        } else {
            Self::load(spec)
        }
    }

    /// Canonical serialization: sorted keys, no whitespace.
    pub fn canonical_json(&self) -> String {
        canonical_json(&self.classes)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::from_str(&self.canonical_json()).expect("canonical catalog is valid json")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ClassDef] {
        &self.classes
    }

    pub fn get(&self, id: usize) -> Option<&ClassDef> {
        self.classes.get(id)
    }

    pub fn name(&self, id: usize) -> &str {
        &self.classes[id].name
    }

    pub fn names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    /// Accepts either a numeric id or a class name.
    pub fn lookup(&self, id_or_name: &str) -> Result<usize> {
        if let Ok(id) = id_or_name.parse::<usize>() {
            if id < self.k() {
                return Ok(id);
            }
            return Err(Error::Catalog(format!(
                "class id {id} out of range (k={})",
                self.k()
            )));
        }
        self.classes
            .iter()
            .find(|c| c.name == id_or_name)
            .map(|c| c.id)
            .ok_or_else(|| Error::Catalog(format!("unknown class {id_or_name:?}")))
    }
}

fn canonical_json(classes: &[ClassDef]) -> String {
    // serde_json's default map is ordered, so going through Value sorts keys.
    let value = serde_json::to_value(CatalogFile {
        classes: classes.to_vec(),
    })
    .expect("catalog serializes");
    serde_json::to_string(&value).expect("value serializes")
}

fn digest_of(classes: &[ClassDef]) -> String {
    hex::encode(Sha256::digest(canonical_json(classes).as_bytes()))
}
