//! Cohort model and CSV ingestion.
//!
//! A dataset is one row per participant: outcome label, synthetic flag,
//! split assignment, and a value for every catalog feature. Rows with any
//! missing feature cell are excluded at ingestion and listed in the
//! ingestion log; no imputation is performed. Split assignments travel
//! with the data as an explicit column so a cohort's composition is fixed
//! once and reproducible thereafter.

use crate::catalog::{FeatureCatalog, RiskDirection};
use crate::error::{Error, Result};
use crate::seeding;
use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Faller,
    NonFaller,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Faller => "faller",
            Outcome::NonFaller => "non_faller",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "faller" => Ok(Outcome::Faller),
            "non_faller" => Ok(Outcome::NonFaller),
            other => Err(Error::Dataset(format!("unknown outcome token: {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Dataset(format!("unknown split token: {other:?}"))),
        }
    }

    fn index(&self) -> usize {
        match self {
            Split::Train => 0,
            Split::Validation => 1,
            Split::Test => 2,
        }
    }
}

/// One participant: identity, outcome, provenance, split, and the feature
/// value map (insertion order follows the catalog).
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub outcome: Outcome,
    pub synthetic: bool,
    pub split: Split,
    pub values: IndexMap<String, f64>,
}

impl SubjectRecord {
    pub fn value(&self, feature: &str) -> Option<f64> {
        self.values.get(feature).copied()
    }
}

/// An immutable cohort: catalog plus fully-populated subject records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    catalog: FeatureCatalog,
    subjects: Vec<SubjectRecord>,
}

impl Dataset {
    /// Validates subject-id uniqueness, value completeness against the
    /// catalog, finiteness, and the synthetic => train rule.
    pub fn new(catalog: FeatureCatalog, subjects: Vec<SubjectRecord>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(subjects.len());
        for s in &subjects {
            if !ids.insert(s.subject_id.as_str()) {
                return Err(Error::Dataset(format!("duplicate subject_id: {}", s.subject_id)));
            }
            if s.synthetic && s.split != Split::Train {
                return Err(Error::Dataset(format!(
                    "synthetic subject {} must be in the train split, found {}",
                    s.subject_id,
                    s.split.as_str()
                )));
            }
            if s.values.len() != catalog.len() {
                return Err(Error::Dataset(format!(
                    "subject {} has {} feature values, catalog has {}",
                    s.subject_id,
                    s.values.len(),
                    catalog.len()
                )));
            }
            for name in catalog.names() {
                match s.values.get(name) {
                    Some(v) if v.is_finite() => {}
                    Some(_) => {
                        return Err(Error::Dataset(format!(
                            "subject {} has a non-finite value for {name:?}",
                            s.subject_id
                        )))
                    }
                    None => {
                        return Err(Error::Dataset(format!(
                            "subject {} is missing feature {name:?}",
                            s.subject_id
                        )))
                    }
                }
            }
        }
        Ok(Dataset { catalog, subjects })
    }

    pub fn catalog(&self) -> &FeatureCatalog {
        &self.catalog
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn subject(&self, id: &str) -> Option<&SubjectRecord> {
        self.subjects.iter().find(|s| s.subject_id == id)
    }

    pub fn subjects_in(&self, split: Split) -> Vec<&SubjectRecord> {
        self.subjects.iter().filter(|s| s.split == split).collect()
    }

    pub fn split_summary(&self) -> SplitSummary {
        let mut counts = [[[0usize; 2]; 2]; 3];
        for s in &self.subjects {
            let o = usize::from(s.outcome == Outcome::Faller);
            counts[s.split.index()][o][usize::from(s.synthetic)] += 1;
        }
        SplitSummary { counts }
    }

    /// Lint: features whose observed faller/non-faller mean ordering
    /// contradicts the declared risk direction. Advisory only.
    pub fn direction_lint(&self) -> Vec<DirectionLint> {
        let mut findings = Vec::new();
        let fallers: Vec<&SubjectRecord> = self
            .subjects
            .iter()
            .filter(|s| s.outcome == Outcome::Faller)
            .collect();
        let non_fallers: Vec<&SubjectRecord> = self
            .subjects
            .iter()
            .filter(|s| s.outcome == Outcome::NonFaller)
            .collect();
        if fallers.is_empty() || non_fallers.is_empty() {
            return findings;
        }
        for f in self.catalog.features() {
            let mean = |group: &[&SubjectRecord]| {
                group.iter().map(|s| s.values[&f.name]).sum::<f64>() / group.len() as f64
            };
            let faller_mean = mean(&fallers);
            let non_faller_mean = mean(&non_fallers);
            let contradicted = match f.direction {
                RiskDirection::HigherSafer => faller_mean > non_faller_mean,
                RiskDirection::HigherRiskier => faller_mean < non_faller_mean,
            };
            if contradicted {
                findings.push(DirectionLint {
                    feature: f.name.clone(),
                    direction: f.direction,
                    faller_mean,
                    non_faller_mean,
                });
            }
        }
        findings
    }
}

/// Cross-tabulated subject counts: split x outcome x synthetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSummary {
    counts: [[[usize; 2]; 2]; 3],
}

impl SplitSummary {
    pub fn count(&self, split: Split, outcome: Outcome, synthetic: bool) -> usize {
        self.counts[split.index()][usize::from(outcome == Outcome::Faller)][usize::from(synthetic)]
    }

    pub fn outcome_total(&self, split: Split, outcome: Outcome) -> usize {
        self.count(split, outcome, false) + self.count(split, outcome, true)
    }

    pub fn split_total(&self, split: Split) -> usize {
        self.outcome_total(split, Outcome::Faller) + self.outcome_total(split, Outcome::NonFaller)
    }

    pub fn synthetic_total(&self, split: Split) -> usize {
        self.count(split, Outcome::Faller, true) + self.count(split, Outcome::NonFaller, true)
    }

    pub fn total(&self) -> usize {
        Split::ALL.iter().map(|&s| self.split_total(s)).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let per_split = |s: Split| {
            serde_json::json!({
                "total": self.split_total(s),
                "fallers": self.outcome_total(s, Outcome::Faller),
                "non_fallers": self.outcome_total(s, Outcome::NonFaller),
                "synthetic": self.synthetic_total(s),
            })
        };
        serde_json::json!({
            "total": self.total(),
            "train": per_split(Split::Train),
            "validation": per_split(Split::Validation),
            "test": per_split(Split::Test),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionLint {
    pub feature: String,
    pub direction: RiskDirection,
    pub faller_mean: f64,
    pub non_faller_mean: f64,
}

/// One row excluded at ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExcludedRow {
    /// 1-based CSV line of the excluded record.
    pub line: u64,
    pub subject_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestionLog {
    pub excluded: Vec<ExcludedRow>,
}

/// Load a cohort CSV against `catalog`.
///
/// Header layout: `subject_id, outcome, synthetic, split`, then one column
/// per catalog feature (written in catalog order; any order is accepted on
/// read as long as the column set matches exactly). Rows with blank feature
/// cells are excluded and logged; malformed cells and unknown tokens are
/// hard errors.
pub fn load_dataset(path: impl AsRef<Path>, catalog: &FeatureCatalog) -> Result<(Dataset, IngestionLog)> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Dataset(format!("{}: {e}", path.as_ref().display())))?;
    parse_dataset_csv(&text, catalog)
}

pub fn parse_dataset_csv(text: &str, catalog: &FeatureCatalog) -> Result<(Dataset, IngestionLog)> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let fixed = ["subject_id", "outcome", "synthetic", "split"];
    if headers.len() < fixed.len() || headers.iter().take(4).ne(fixed) {
        return Err(Error::Dataset(format!(
            "header must start with {fixed:?}, got {:?}",
            headers.iter().take(4).collect::<Vec<_>>()
        )));
    }

    // Map feature columns; demand exact set equality with the catalog.
    let mut column_feature: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    for h in headers.iter().skip(4) {
        if catalog.get(h).is_none() {
            return Err(Error::Dataset(format!("unknown feature column: {h:?}")));
        }
        if !seen.insert(h.to_string()) {
            return Err(Error::Dataset(format!("duplicate feature column: {h:?}")));
        }
        column_feature.push(h.to_string());
    }
    for name in catalog.names() {
        if !seen.contains(name) {
            return Err(Error::Dataset(format!("header lacks catalog feature: {name:?}")));
        }
    }

    let mut subjects = Vec::new();
    let mut log = IngestionLog::default();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let subject_id = record.get(0).unwrap_or("").trim().to_string();
        if subject_id.is_empty() {
            return Err(Error::Dataset(format!("line {line}: empty subject_id")));
        }
        let outcome = Outcome::parse(record.get(1).unwrap_or("").trim())
            .map_err(|e| Error::Dataset(format!("line {line}: {e}")))?;
        let synthetic = match record.get(2).unwrap_or("").trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Dataset(format!(
                    "line {line}: synthetic must be 0 or 1, got {other:?}"
                )))
            }
        };
        let split = Split::parse(record.get(3).unwrap_or("").trim())
            .map_err(|e| Error::Dataset(format!("line {line}: {e}")))?;

        let mut values: IndexMap<String, f64> = IndexMap::with_capacity(catalog.len());
        let mut missing: Option<String> = None;
        for (k, feature) in column_feature.iter().enumerate() {
            let cell = record.get(4 + k).unwrap_or("").trim();
            if cell.is_empty() {
                missing = Some(feature.clone());
                break;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Dataset(format!(
                    "line {line}: non-numeric cell {cell:?} in feature column {feature:?}"
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Dataset(format!(
                    "line {line}: non-finite value in feature column {feature:?}"
                )));
            }
            values.insert(feature.clone(), v);
        }
        if let Some(feature) = missing {
            log.excluded.push(ExcludedRow {
                line,
                subject_id,
                reason: format!("missing value for feature {feature:?}"),
            });
            continue;
        }
        // Reorder values into catalog order regardless of column order.
        let mut ordered = IndexMap::with_capacity(catalog.len());
        for name in catalog.names() {
            ordered.insert(name.to_string(), values[name]);
        }
        subjects.push(SubjectRecord {
            subject_id,
            outcome,
            synthetic,
            split,
            values: ordered,
        });
    }
    let dataset = Dataset::new(catalog.clone(), subjects)?;
    Ok((dataset, log))
}

/// Serialize the dataset back to CSV in catalog column order. Floats use
/// the shortest representation that round-trips, so load(save(d)) == d.
pub fn write_dataset_csv(dataset: &Dataset, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "subject_id".to_string(),
        "outcome".to_string(),
        "synthetic".to_string(),
        "split".to_string(),
    ];
    header.extend(dataset.catalog().names().map(str::to_string));
    w.write_record(&header)?;
    for s in dataset.subjects() {
        let mut row = vec![
            s.subject_id.clone(),
            s.outcome.as_str().to_string(),
            if s.synthetic { "1" } else { "0" }.to_string(),
            s.split.as_str().to_string(),
        ];
        row.extend(dataset.catalog().names().map(|name| s.values[name].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset_csv(dataset, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn dataset_to_csv_string(dataset: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    write_dataset_csv(dataset, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Dataset(format!("non-utf8 csv output: {e}")))
}

/// Requested validation/test composition for [`make_splits`]; everything
/// else goes to train. Synthetic records always stay in train.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitPlan {
    pub validation_fallers: usize,
    pub validation_non_fallers: usize,
    pub test_fallers: usize,
    pub test_non_fallers: usize,
}

/// Reassign splits by seeded stratified sampling of the real subjects.
pub fn make_splits(dataset: &Dataset, plan: &SplitPlan, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive_seed(seed, seeding::stream::SPLITS, 0));
    let mut subjects = dataset.subjects().to_vec();

    let mut assign = |outcome: Outcome, test_n: usize, val_n: usize, rng: &mut ChaCha8Rng| -> Result<()> {
        let mut idx: Vec<usize> = subjects
            .iter()
            .enumerate()
            .filter(|(_, s)| s.outcome == outcome && !s.synthetic)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < test_n + val_n {
            return Err(Error::Dataset(format!(
                "not enough real {} subjects: need {} for validation+test, have {}",
                outcome.as_str(),
                test_n + val_n,
                idx.len()
            )));
        }
        // Partial Fisher-Yates: only the first test_n + val_n slots matter.
        for i in 0..(test_n + val_n) {
            let j = rng.gen_range(i..idx.len());
            idx.swap(i, j);
        }
        for (k, &i) in idx.iter().enumerate() {
            subjects[i].split = if k < test_n {
                Split::Test
            } else if k < test_n + val_n {
                Split::Validation
            } else {
                Split::Train
            };
        }
        Ok(())
    };

    assign(Outcome::Faller, plan.test_fallers, plan.validation_fallers, &mut rng)?;
    assign(
        Outcome::NonFaller,
        plan.test_non_fallers,
        plan.validation_non_fallers,
        &mut rng,
    )?;
    Dataset::new(dataset.catalog().clone(), subjects)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{FeatureDescriptor, FeatureKind};

    pub(crate) fn tiny_catalog(names: &[&str]) -> FeatureCatalog {
        FeatureCatalog::new(
            names
                .iter()
                .map(|n| FeatureDescriptor {
                    name: n.to_string(),
                    unit: String::new(),
                    kind: FeatureKind::Itug,
                    direction: RiskDirection::HigherRiskier,
                })
                .collect(),
        )
        .unwrap()
    }

    fn csv_of(rows: &[&str], features: &str) -> String {
        let mut s = format!("subject_id,outcome,synthetic,split,{features}\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn missing_cells_are_excluded_and_logged() {
        let catalog = tiny_catalog(&["f1", "f2"]);
        let rows: Vec<String> = (0..10)
            .map(|i| {
                if i == 3 {
                    format!("s{i},faller,0,train,,2.0")
                } else if i == 7 {
                    format!("s{i},faller,0,train,1.0,")
                } else {
                    format!("s{i},faller,0,train,1.0,2.0")
                }
            })
            .collect();
        let text = csv_of(&rows.iter().map(String::as_str).collect::<Vec<_>>(), "f1,f2");
        let (ds, log) = parse_dataset_csv(&text, &catalog).unwrap();
        assert_eq!(ds.len(), 8);
        assert_eq!(log.excluded.len(), 2);
        assert!(log.excluded[0].reason.contains("f1"));
        assert!(log.excluded[1].reason.contains("f2"));
    }

    #[test]
    fn header_must_cover_catalog() {
        let catalog = tiny_catalog(&["f1", "f2"]);
        let text = csv_of(&["s1,faller,0,train,1.0"], "f1");
        let err = parse_dataset_csv(&text, &catalog).unwrap_err();
        assert!(err.to_string().contains("f2"), "{err}");
    }

    #[test]
    fn unknown_column_rejected() {
        let catalog = tiny_catalog(&["f1"]);
        let text = csv_of(&["s1,faller,0,train,1.0,9"], "f1,mystery");
        let err = parse_dataset_csv(&text, &catalog).unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }

    #[test]
    fn bad_tokens_rejected() {
        let catalog = tiny_catalog(&["f1"]);
        for row in [
            "s1,winner,0,train,1.0",
            "s1,faller,2,train,1.0",
            "s1,faller,0,holdout,1.0",
            "s1,faller,0,train,abc",
        ] {
            let text = csv_of(&[row], "f1");
            assert!(parse_dataset_csv(&text, &catalog).is_err(), "{row}");
        }
    }

    #[test]
    fn synthetic_outside_train_rejected() {
        let catalog = tiny_catalog(&["f1"]);
        let text = csv_of(&["s1,faller,1,test,1.0"], "f1");
        assert!(parse_dataset_csv(&text, &catalog).is_err());
    }

    #[test]
    fn duplicate_subject_rejected() {
        let catalog = tiny_catalog(&["f1"]);
        let text = csv_of(&["s1,faller,0,train,1.0", "s1,faller,0,train,2.0"], "f1");
        assert!(parse_dataset_csv(&text, &catalog).is_err());
    }

    #[test]
    fn roundtrip_is_lossless() {
        let catalog = tiny_catalog(&["f1", "f2"]);
        let text = csv_of(
            &[
                "s1,faller,0,train,0.1,-2.5e-7",
                "s2,non_faller,0,test,1e300,0.30000000000000004",
                "s3,faller,1,train,3.5,42",
            ],
            "f1,f2",
        );
        let (ds, _) = parse_dataset_csv(&text, &catalog).unwrap();
        let csv = dataset_to_csv_string(&ds).unwrap();
        let (back, log) = parse_dataset_csv(&csv, &catalog).unwrap();
        assert!(log.excluded.is_empty());
        assert_eq!(ds, back);
    }

    #[test]
    fn split_summary_counts() {
        let catalog = tiny_catalog(&["f1"]);
        let text = csv_of(
            &[
                "s1,faller,0,test,1.0",
            ],
            "f1",
        );
        let (ds, _) = parse_dataset_csv(&text, &catalog).unwrap();
        let sum = ds.split_summary();
        assert_eq!(sum.count(Split::Test, Outcome::Faller, false), 1);
        assert_eq!(sum.total(), 1);
        assert_eq!(sum.split_total(Split::Train), 0);

        let empty = Dataset::new(catalog, vec![]).unwrap();
        assert_eq!(empty.split_summary().total(), 0);
    }

    #[test]
    fn make_splits_hits_requested_counts() {
        let catalog = tiny_catalog(&["f1"]);
        let rows: Vec<String> = (0..30)
            .map(|i| {
                let outcome = if i < 12 { "faller" } else { "non_faller" };
                format!("s{i},{outcome},0,train,{}.5", i)
            })
            .collect();
        let text = csv_of(&rows.iter().map(String::as_str).collect::<Vec<_>>(), "f1");
        let (ds, _) = parse_dataset_csv(&text, &catalog).unwrap();
        let plan = SplitPlan {
            validation_fallers: 2,
            validation_non_fallers: 3,
            test_fallers: 4,
            test_non_fallers: 5,
        };
        let split = make_splits(&ds, &plan, 99).unwrap();
        let sum = split.split_summary();
        assert_eq!(sum.outcome_total(Split::Validation, Outcome::Faller), 2);
        assert_eq!(sum.outcome_total(Split::Validation, Outcome::NonFaller), 3);
        assert_eq!(sum.outcome_total(Split::Test, Outcome::Faller), 4);
        assert_eq!(sum.outcome_total(Split::Test, Outcome::NonFaller), 5);
        assert_eq!(sum.split_total(Split::Train), 30 - 2 - 3 - 4 - 5);
        // deterministic
        let again = make_splits(&ds, &plan, 99).unwrap();
        assert_eq!(split, again);
        // insufficient subjects
        let greedy = SplitPlan {
            validation_fallers: 10,
            validation_non_fallers: 0,
            test_fallers: 10,
            test_non_fallers: 0,
        };
        assert!(make_splits(&ds, &greedy, 1).is_err());
    }

    #[test]
    fn direction_lint_flags_contradictions() {
        let catalog = tiny_catalog(&["rises_with_risk"]);
        // Declared higher_riskier but fallers have the smaller mean.
        let text = csv_of(
            &[
                "f1,faller,0,train,1.0",
                "f2,faller,0,train,2.0",
                "n1,non_faller,0,train,5.0",
                "n2,non_faller,0,train,6.0",
            ],
            "rises_with_risk",
        );
        let (ds, _) = parse_dataset_csv(&text, &catalog).unwrap();
        let lints = ds.direction_lint();
        assert_eq!(lints.len(), 1);
        assert_eq!(lints[0].feature, "rises_with_risk");
    }
}
