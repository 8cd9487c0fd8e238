//! Feature catalog: the ordered list of features a cohort is described by,
//! each with a unit, a kind (clinical assessment or instrumented TUG), and
//! a declared risk direction used for threshold derivation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

/// Where a feature comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Clinical,
    Itug,
}

/// Expected relationship between a feature's value and fall risk:
/// for `HigherSafer` features (e.g. gait speed) larger values mean lower
/// risk; for `HigherRiskier` (e.g. walk duration) larger values mean
/// higher risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskDirection {
    HigherSafer,
    HigherRiskier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    pub kind: FeatureKind,
    pub direction: RiskDirection,
}

/// Ordered, name-unique collection of feature descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCatalog {
    features: Vec<FeatureDescriptor>,
    index: HashMap<String, usize>,
}

impl FeatureCatalog {
    pub fn new(features: Vec<FeatureDescriptor>) -> Result<Self> {
        let mut index = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if index.insert(f.name.clone(), i).is_some() {
                return Err(Error::Catalog(format!("duplicate feature name: {}", f.name)));
            }
        }
        Ok(FeatureCatalog { features, index })
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureDescriptor> {
        self.index.get(name).map(|&i| &self.features[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// Sub-catalog with only the features of `kind`, preserving order.
    pub fn filter_kind(&self, kind: FeatureKind) -> FeatureCatalog {
        let features: Vec<FeatureDescriptor> = self
            .features
            .iter()
            .filter(|f| f.kind == kind)
            .cloned()
            .collect();
        // Names were unique in the parent catalog.
        FeatureCatalog::new(features).expect("subset of a valid catalog")
    }

    pub fn count_kind(&self, kind: FeatureKind) -> usize {
        self.features.iter().filter(|f| f.kind == kind).count()
    }
}

/// Parse a catalog from its JSON form: an array of
/// `{name, unit, kind, direction}` objects, order preserved.
pub fn parse_catalog(json: &str) -> Result<FeatureCatalog> {
    let features: Vec<FeatureDescriptor> = serde_json::from_str(json)?;
    FeatureCatalog::new(features)
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<FeatureCatalog> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Catalog(format!("{}: {e}", path.as_ref().display())))?;
    parse_catalog(&text)
}

pub fn save_catalog(catalog: &FeatureCatalog, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(catalog.features())?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// The bundled reference catalog: 8 clinical features plus the 100 features
/// extracted from the instrumented TUG test.
pub fn reference_catalog() -> &'static FeatureCatalog {
    static CATALOG: OnceLock<FeatureCatalog> = OnceLock::new();
    CATALOG.get_or_init(|| {
        parse_catalog(include_str!("../data/reference_catalog.json"))
            .expect("bundled reference catalog is valid")
    })
}
