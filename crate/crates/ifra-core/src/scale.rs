//! Risk scales: per-feature tertile thresholds with a direction, assembled
//! into named scales, plus mode-vote assessment of subjects.
//!
//! Threshold derivation ranks the training subjects' values by increasing
//! risk (ascending for higher-riskier features, descending for
//! higher-safer) and, with k = floor(n/3), stores the k-th value (the last
//! member of the low tertile) as the low boundary and the (2k+1)-th value
//! (the first member of the high tertile) as the high boundary. Extreme
//! strata are boundary-inclusive, so re-stratifying n = 3k distinct
//! training values reproduces the three tertiles exactly (31/31/31 at the
//! reference n = 93).

use crate::catalog::{FeatureCatalog, RiskDirection};
use crate::dataset::SubjectRecord;
use crate::error::{Error, Result};
use crate::selection::SelectionReport;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

/// Ordered risk stratum; the ordering drives tie-breaking (ties resolve to
/// the higher-risk stratum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Low,
    Medium,
    High,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [Stratum::Low, Stratum::Medium, Stratum::High];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stratum::Low => "low",
            Stratum::Medium => "medium",
            Stratum::High => "high",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Stratum::Low => 0,
            Stratum::Medium => 1,
            Stratum::High => 2,
        }
    }
}

/// Thresholds for a single feature. For `HigherSafer` features
/// `t_low > t_high` (e.g. gait speed: low risk at or above 1.13, high risk
/// at or below 0.72); for `HigherRiskier` the inequality flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureThresholds {
    pub feature: String,
    pub direction: RiskDirection,
    pub t_low: f64,
    pub t_high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_pct: Option<f64>,
}

impl FeatureThresholds {
    fn validate(&self) -> Result<()> {
        if !self.t_low.is_finite() || !self.t_high.is_finite() {
            return Err(Error::Scale(format!("{}: non-finite thresholds", self.feature)));
        }
        let coherent = match self.direction {
            RiskDirection::HigherSafer => self.t_low >= self.t_high,
            RiskDirection::HigherRiskier => self.t_low <= self.t_high,
        };
        if !coherent {
            return Err(Error::Scale(format!(
                "{}: thresholds contradict direction (t_low {}, t_high {})",
                self.feature, self.t_low, self.t_high
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Derived,
    Published,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskScale {
    pub name: String,
    pub provenance: Provenance,
    pub entries: Vec<FeatureThresholds>,
}

impl RiskScale {
    pub fn new(name: impl Into<String>, provenance: Provenance, entries: Vec<FeatureThresholds>) -> Result<Self> {
        let scale = RiskScale {
            name: name.into(),
            provenance,
            entries,
        };
        let mut seen = HashSet::new();
        for e in &scale.entries {
            e.validate()?;
            if !seen.insert(e.feature.as_str()) {
                return Err(Error::Scale(format!(
                    "{}: duplicate feature {}",
                    scale.name, e.feature
                )));
            }
        }
        Ok(scale)
    }

    /// Check that every entry's feature exists in `catalog`.
    pub fn validate_against_catalog(&self, catalog: &FeatureCatalog) -> Result<()> {
        for e in &self.entries {
            if catalog.get(&e.feature).is_none() {
                return Err(Error::Scale(format!(
                    "{}: feature {:?} not present in catalog",
                    self.name, e.feature
                )));
            }
        }
        Ok(())
    }

    pub fn entry(&self, feature: &str) -> Option<&FeatureThresholds> {
        self.entries.iter().find(|e| e.feature == feature)
    }
}

/// Assign the stratum for a single feature value. Boundary values fall
/// into the extreme strata; medium is strictly between the thresholds.
pub fn stratify_feature(value: f64, thresholds: &FeatureThresholds) -> Stratum {
    match thresholds.direction {
        RiskDirection::HigherSafer => {
            if value >= thresholds.t_low {
                Stratum::Low
            } else if value <= thresholds.t_high {
                Stratum::High
            } else {
                Stratum::Medium
            }
        }
        RiskDirection::HigherRiskier => {
            if value <= thresholds.t_low {
                Stratum::Low
            } else if value >= thresholds.t_high {
                Stratum::High
            } else {
                Stratum::Medium
            }
        }
    }
}

/// A boundary anomaly noticed while deriving thresholds: tied values
/// straddling a tertile boundary (which unbalances re-stratification) or a
/// collapsed medium stratum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivationWarning {
    pub feature: String,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ScaleDerivation {
    pub scale: RiskScale,
    pub warnings: Vec<DerivationWarning>,
}

/// Derive tertile thresholds from training subjects for every selected
/// feature, in the report's selection order (descending selection
/// percentage).
pub fn derive_scale(
    train: &[&SubjectRecord],
    selected: &SelectionReport,
    catalog: &FeatureCatalog,
    name: impl Into<String>,
) -> Result<ScaleDerivation> {
    let n = train.len();
    if n < 3 {
        return Err(Error::Scale(format!(
            "threshold derivation requires at least 3 training subjects, got {n}"
        )));
    }
    if selected.selected.is_empty() {
        return Err(Error::Scale("selection report has no selected features".into()));
    }
    let k = n / 3;
    let mut entries = Vec::with_capacity(selected.selected.len());
    let mut warnings = Vec::new();
    for feature in &selected.selected {
        let descriptor = catalog
            .get(feature)
            .ok_or_else(|| Error::Scale(format!("feature {feature:?} not present in catalog")))?;
        let mut values: Vec<f64> = train
            .iter()
            .map(|s| {
                s.value(feature).ok_or_else(|| {
                    Error::Scale(format!(
                        "subject {} lacks a value for {feature:?}",
                        s.subject_id
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        // Risk order: ascending raw value when higher is riskier,
        // descending when higher is safer.
        match descriptor.direction {
            RiskDirection::HigherRiskier => values.sort_by(f64::total_cmp),
            RiskDirection::HigherSafer => values.sort_by(|a, b| f64::total_cmp(b, a)),
        }
        let t_low = values[k - 1];
        let t_high = values[2 * k];
        if values[k - 1] == values[k] {
            warnings.push(DerivationWarning {
                feature: feature.clone(),
                detail: format!("tied values {} straddle the low/medium boundary", values[k - 1]),
            });
        }
        if values[2 * k - 1] == values[2 * k] {
            warnings.push(DerivationWarning {
                feature: feature.clone(),
                detail: format!("tied values {} straddle the medium/high boundary", values[2 * k]),
            });
        }
        if t_low == t_high {
            warnings.push(DerivationWarning {
                feature: feature.clone(),
                detail: "degenerate thresholds: medium stratum is unreachable".into(),
            });
        }
        entries.push(FeatureThresholds {
            feature: feature.clone(),
            direction: descriptor.direction,
            t_low,
            t_high,
            selection_pct: selected.relevance_of(feature).map(|f| f.selection_pct),
        });
    }
    Ok(ScaleDerivation {
        scale: RiskScale::new(name, Provenance::Derived, entries)?,
        warnings,
    })
}

/// Per-feature vote produced while assessing a subject.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureVote {
    pub feature: String,
    pub stratum: Stratum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assessment {
    pub stratum: Stratum,
    pub votes: Vec<FeatureVote>,
    /// Scale features the subject has no value for.
    pub skipped: Vec<String>,
    /// Vote tallies indexed low/medium/high.
    pub counts: [usize; 3],
}

/// Stratify every scale feature available on the subject and combine the
/// votes by mode; ties go to the highest-risk stratum involved. Features
/// missing on the subject are skipped and reported.
pub fn assess(subject: &SubjectRecord, scale: &RiskScale) -> Result<Assessment> {
    let mut votes = Vec::new();
    let mut skipped = Vec::new();
    let mut counts = [0usize; 3];
    for entry in &scale.entries {
        match subject.value(&entry.feature) {
            Some(v) => {
                let stratum = stratify_feature(v, entry);
                counts[stratum.index()] += 1;
                votes.push(FeatureVote {
                    feature: entry.feature.clone(),
                    stratum,
                });
            }
            None => skipped.push(entry.feature.clone()),
        }
    }
    if votes.is_empty() {
        return Err(Error::Scale(format!(
            "subject {} has no value for any feature of scale {}",
            subject.subject_id, scale.name
        )));
    }
    let top = *counts.iter().max().expect("non-empty");
    let stratum = Stratum::ALL
        .iter()
        .copied()
        .filter(|s| counts[s.index()] == top)
        .max()
        .expect("at least one stratum at the top count");
    Ok(Assessment {
        stratum,
        votes,
        skipped,
        counts,
    })
}

/// Scale files hold either a single scale object or an array of scales.
pub fn parse_scales(json: &str) -> Result<Vec<RiskScale>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(RiskScale),
        Many(Vec<RiskScale>),
    }
    let parsed: OneOrMany = serde_json::from_str(json)?;
    let scales = match parsed {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    };
    // Re-run construction checks on deserialized data.
    scales
        .into_iter()
        .map(|s| RiskScale::new(s.name, s.provenance, s.entries))
        .collect()
}

pub fn load_scales(path: impl AsRef<Path>) -> Result<Vec<RiskScale>> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Scale(format!("{}: {e}", path.as_ref().display())))?;
    parse_scales(&text)
}

pub fn save_scale(scale: &RiskScale, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(scale)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn save_scales(scales: &[RiskScale], path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(scales)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// The published 22-feature instrumented scale.
pub fn builtin_ifra_scale() -> &'static RiskScale {
    static SCALE: OnceLock<RiskScale> = OnceLock::new();
    SCALE.get_or_init(|| {
        let scales = parse_scales(include_str!("../data/ifra_published.json"))
            .expect("bundled instrumented scale is valid");
        scales.into_iter().next().expect("exactly one scale")
    })
}

/// The eight published single-feature clinical scales.
pub fn builtin_clinical_scales() -> &'static [RiskScale] {
    static SCALES: OnceLock<Vec<RiskScale>> = OnceLock::new();
    SCALES.get_or_init(|| {
        parse_scales(include_str!("../data/clinical_published.json"))
            .expect("bundled clinical scales are valid")
    })
}
