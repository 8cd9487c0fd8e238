//! Scale evaluation against faller outcomes: build the 2 x 3
//! faller-status by stratum contingency table on a held-out slice, run the
//! exact test, and emit comparison reports.

use crate::dataset::{Outcome, SubjectRecord};
use crate::error::{Error, Result};
use crate::scale::{assess, RiskScale, Stratum};
use crate::stats::{fisher_exact, ContingencyTable};
use indexmap::IndexMap;
use serde::Serialize;

/// Evaluation of one scale on one subject slice. Counts and percentages
/// have non-fallers in row 0 and fallers in row 1; columns are
/// low/medium/high. Percentages are row-normalized and kept at full
/// precision (rounding is display-only).
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub scale: String,
    pub counts: [[u64; 3]; 2],
    pub row_percentages: [[f64; 3]; 2],
    pub p_value: f64,
    pub alpha: f64,
    pub reject_h0: bool,
}

impl EvaluationReport {
    pub fn contingency(&self) -> ContingencyTable {
        ContingencyTable::new(self.counts.iter().map(|r| r.to_vec()).collect())
            .expect("report tables are valid by construction")
    }
}

/// Cross-tabulate outcomes against assessed strata. Every subject in the
/// slice must have an assessment.
pub fn build_contingency(
    subjects: &[&SubjectRecord],
    assessments: &IndexMap<String, Stratum>,
) -> Result<[[u64; 3]; 2]> {
    let mut counts = [[0u64; 3]; 2];
    for s in subjects {
        let stratum = assessments.get(&s.subject_id).ok_or_else(|| {
            Error::Evaluation(format!("missing assessment for subject {}", s.subject_id))
        })?;
        let row = usize::from(s.outcome == Outcome::Faller);
        counts[row][stratum.index()] += 1;
    }
    Ok(counts)
}

/// Assess every subject in the slice with `scale`, build the table, and
/// run the exact test at level `alpha`.
pub fn evaluate_scale(
    subjects: &[&SubjectRecord],
    scale: &RiskScale,
    alpha: f64,
) -> Result<EvaluationReport> {
    let fallers = subjects.iter().filter(|s| s.outcome == Outcome::Faller).count();
    if fallers == 0 || fallers == subjects.len() {
        return Err(Error::Evaluation(format!(
            "degenerate slice for {}: need at least one faller and one non-faller, \
             got {fallers} fallers of {}",
            scale.name,
            subjects.len()
        )));
    }
    let mut assessments: IndexMap<String, Stratum> = IndexMap::with_capacity(subjects.len());
    for s in subjects {
        assessments.insert(s.subject_id.clone(), assess(s, scale)?.stratum);
    }
    let counts = build_contingency(subjects, &assessments)?;
    let table = ContingencyTable::new(counts.iter().map(|r| r.to_vec()).collect())?;
    let p_value = fisher_exact(&table)?.p_value;
    let row_pct = |row: [u64; 3]| -> [f64; 3] {
        let total: u64 = row.iter().sum();
        row.map(|c| 100.0 * c as f64 / total as f64)
    };
    Ok(EvaluationReport {
        scale: scale.name.clone(),
        counts,
        row_percentages: [row_pct(counts[0]), row_pct(counts[1])],
        p_value,
        alpha,
        reject_h0: p_value < alpha,
    })
}

/// Evaluate several scales on the same slice, one report per scale in
/// input order.
pub fn compare_scales(
    subjects: &[&SubjectRecord],
    scales: &[RiskScale],
    alpha: f64,
) -> Result<Vec<EvaluationReport>> {
    scales
        .iter()
        .map(|scale| evaluate_scale(subjects, scale, alpha))
        .collect()
}

/// Markdown table mirroring the published comparison layout: row
/// percentages per stratum for each outcome plus the p-value column.
pub fn comparison_markdown(reports: &[EvaluationReport]) -> String {
    let mut out = String::from(
        "| Scale | NF low | NF medium | NF high | F low | F medium | F high | p-value |\n\
         |---|---|---|---|---|---|---|---|\n",
    );
    for r in reports {
        out.push_str(&format!(
            "| {} | {:.1}% | {:.1}% | {:.1}% | {:.1}% | {:.1}% | {:.1}% | {:.3} |\n",
            r.scale,
            r.row_percentages[0][0],
            r.row_percentages[0][1],
            r.row_percentages[0][2],
            r.row_percentages[1][0],
            r.row_percentages[1][1],
            r.row_percentages[1][2],
            r.p_value,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::RiskDirection;
    use crate::dataset::Split;
    use crate::scale::{FeatureThresholds, Provenance};

    fn subject(id: &str, outcome: Outcome, value: f64) -> SubjectRecord {
        SubjectRecord {
            subject_id: id.to_string(),
            outcome,
            synthetic: false,
            split: Split::Test,
            values: IndexMap::from([("f".to_string(), value)]),
        }
    }

    fn single_feature_scale() -> RiskScale {
        RiskScale::new(
            "single",
            Provenance::Derived,
            vec![FeatureThresholds {
                feature: "f".into(),
                direction: RiskDirection::HigherRiskier,
                t_low: 1.0,
                t_high: 3.0,
                selection_pct: None,
            }],
        )
        .unwrap()
    }

    #[test]
    fn contingency_counts_by_outcome_and_stratum() {
        let subjects = [
            subject("n1", Outcome::NonFaller, 0.0),
            subject("n2", Outcome::NonFaller, 2.0),
            subject("f1", Outcome::Faller, 4.0),
        ];
        let refs: Vec<&SubjectRecord> = subjects.iter().collect();
        let mut assessments = IndexMap::new();
        assessments.insert("n1".to_string(), Stratum::Low);
        assessments.insert("n2".to_string(), Stratum::Medium);
        assessments.insert("f1".to_string(), Stratum::High);
        let counts = build_contingency(&refs, &assessments).unwrap();
        assert_eq!(counts, [[1, 1, 0], [0, 0, 1]]);

        assessments.shift_remove("f1");
        assert!(build_contingency(&refs, &assessments).is_err());
    }

    #[test]
    fn one_faller_assessed_medium() {
        let subjects = [subject("f1", Outcome::Faller, 2.0)];
        let refs: Vec<&SubjectRecord> = subjects.iter().collect();
        let mut assessments = IndexMap::new();
        assessments.insert("f1".to_string(), Stratum::Medium);
        let counts = build_contingency(&refs, &assessments).unwrap();
        assert_eq!(counts, [[0, 0, 0], [0, 1, 0]]);
    }

    #[test]
    fn perfectly_separating_scale_is_significant() {
        let mut subjects = Vec::new();
        for i in 0..22 {
            subjects.push(subject(&format!("n{i}"), Outcome::NonFaller, 0.0));
        }
        for i in 0..10 {
            subjects.push(subject(&format!("f{i}"), Outcome::Faller, 5.0));
        }
        let refs: Vec<&SubjectRecord> = subjects.iter().collect();
        let report = evaluate_scale(&refs, &single_feature_scale(), 0.05).unwrap();
        assert_eq!(report.counts, [[22, 0, 0], [0, 0, 10]]);
        assert!(report.p_value < 1e-6, "p = {}", report.p_value);
        assert!(report.reject_h0);
    }

    #[test]
    fn constant_stratum_scale_gives_p_one() {
        let mut subjects = Vec::new();
        for i in 0..5 {
            subjects.push(subject(&format!("n{i}"), Outcome::NonFaller, 2.0));
        }
        for i in 0..3 {
            subjects.push(subject(&format!("f{i}"), Outcome::Faller, 2.0));
        }
        let refs: Vec<&SubjectRecord> = subjects.iter().collect();
        let report = evaluate_scale(&refs, &single_feature_scale(), 0.05).unwrap();
        assert_eq!(report.p_value, 1.0);
        assert!(!report.reject_h0);
    }

    #[test]
    fn degenerate_slice_rejected() {
        let subjects = [subject("n1", Outcome::NonFaller, 0.0)];
        let refs: Vec<&SubjectRecord> = subjects.iter().collect();
        assert!(evaluate_scale(&refs, &single_feature_scale(), 0.05).is_err());
    }

    #[test]
    fn percentages_sum_to_100() {
        let mut subjects = Vec::new();
        for (i, v) in [0.0, 2.0, 4.0, 2.0, 0.0].iter().enumerate() {
            subjects.push(subject(&format!("n{i}"), Outcome::NonFaller, *v));
        }
        for (i, v) in [4.0, 2.0, 4.0].iter().enumerate() {
            subjects.push(subject(&format!("f{i}"), Outcome::Faller, *v));
        }
        let refs: Vec<&SubjectRecord> = subjects.iter().collect();
        let report = evaluate_scale(&refs, &single_feature_scale(), 0.05).unwrap();
        for row in report.row_percentages {
            let sum: f64 = row.iter().sum();
            assert!((sum - 100.0).abs() < 0.1, "row sums to {sum}");
        }
    }

    #[test]
    fn compare_emits_reports_in_input_order_without_dedup() {
        let mut subjects = Vec::new();
        for i in 0..4 {
            subjects.push(subject(&format!("n{i}"), Outcome::NonFaller, 0.0));
        }
        subjects.push(subject("f0", Outcome::Faller, 4.0));
        let refs: Vec<&SubjectRecord> = subjects.iter().collect();
        let scale = single_feature_scale();
        let reports = compare_scales(&refs, &[scale.clone(), scale.clone()], 0.05).unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].counts, reports[1].counts);
        let md = comparison_markdown(&reports);
        assert_eq!(md.lines().count(), 4);
        assert!(md.contains("| single |"));
    }

    #[test]
    fn p_value_invariant_under_stratum_relabeling() {
        // Relabeling columns together with their margins leaves p unchanged.
        let mut subjects = Vec::new();
        for (i, v) in [0.0, 0.0, 2.0, 4.0, 2.0, 0.0, 2.0].iter().enumerate() {
            subjects.push(subject(&format!("n{i}"), Outcome::NonFaller, *v));
        }
        for (i, v) in [4.0, 4.0, 2.0, 0.0].iter().enumerate() {
            subjects.push(subject(&format!("f{i}"), Outcome::Faller, *v));
        }
        let refs: Vec<&SubjectRecord> = subjects.iter().collect();
        let report = evaluate_scale(&refs, &single_feature_scale(), 0.05).unwrap();
        let permuted = ContingencyTable::new(vec![
            vec![report.counts[0][2], report.counts[0][0], report.counts[0][1]],
            vec![report.counts[1][2], report.counts[1][0], report.counts[1][1]],
        ])
        .unwrap();
        let p2 = fisher_exact(&permuted).unwrap().p_value;
        assert!((report.p_value - p2).abs() < 1e-12);
    }
}
