//! SVM-gated subsampled feature selection.
//!
//! Each iteration draws a balanced training subset (all fallers plus an
//! equal number of non-fallers sampled without replacement), trains an SVM
//! on every filtered feature, and — only when the model clears the
//! validation accuracy gate — tests each feature's faller/non-faller
//! difference: Shapiro-Wilk normality per subgroup decides between the
//! pooled t test and the rank-sum test, and a significant comparison marks
//! the feature relevant for that iteration. Features relevant in at least
//! `relevance_fraction` of the counted iterations are selected.
//!
//! Iterations derive independent seeds from the master seed and merge by
//! integer counts, so results are identical under any execution order or
//! parallelism degree.

use crate::catalog::FeatureKind;
use crate::dataset::{Dataset, Outcome, Split, SubjectRecord};
use crate::error::{Error, Result};
use crate::seeding;
use crate::stats::{ranksum_test, shapiro_wilk, t_test_two_sample, RanksumMode, VarianceMode};
use crate::svm::{self, SvmConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKindFilter {
    #[default]
    Itug,
    Clinical,
    All,
}

impl FeatureKindFilter {
    fn admits(&self, kind: FeatureKind) -> bool {
        match self {
            FeatureKindFilter::Itug => kind == FeatureKind::Itug,
            FeatureKindFilter::Clinical => kind == FeatureKind::Clinical,
            FeatureKindFilter::All => true,
        }
    }
}

/// Denominator for the per-feature selection percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionDenominator {
    /// Iterations that cleared the accuracy gate (a feature can only be
    /// marked in gated iterations).
    #[default]
    GatedIterations,
    /// All iterations run.
    TotalIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub iterations: usize,
    /// Validation accuracy a subset's SVM must reach (inclusive) for the
    /// subset's statistics to count.
    pub accuracy_gate: f64,
    /// Significance level for both the normality and comparison tests.
    pub alpha: f64,
    /// Minimum selection percentage for a feature to be selected.
    pub relevance_fraction: f64,
    pub seed: u64,
    pub feature_kind: FeatureKindFilter,
    pub denominator: SelectionDenominator,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            iterations: 1000,
            accuracy_gate: 0.80,
            alpha: 0.05,
            relevance_fraction: 0.50,
            seed: 0,
            feature_kind: FeatureKindFilter::default(),
            denominator: SelectionDenominator::default(),
        }
    }
}

impl SelectionConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Selection("iterations must be positive".into()));
        }
        if !(self.accuracy_gate > 0.0 && self.accuracy_gate <= 1.0) {
            return Err(Error::Selection("accuracy_gate must be in (0, 1]".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Selection("alpha must be in (0, 1)".into()));
        }
        if !(self.relevance_fraction > 0.0 && self.relevance_fraction <= 1.0) {
            return Err(Error::Selection("relevance_fraction must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRelevance {
    pub name: String,
    pub relevance_count: u64,
    pub selection_pct: f64,
}

/// Outcome of the selection loop. `features` follows catalog order;
/// `selected` is ordered by descending selection percentage with catalog
/// order breaking ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub config: SelectionConfig,
    pub iterations_run: u64,
    pub iterations_passed_gate: u64,
    /// True when no iteration cleared the gate; `selected` is then empty.
    pub no_gated_iterations: bool,
    pub features: Vec<FeatureRelevance>,
    pub selected: Vec<String>,
}

impl SelectionReport {
    pub fn relevance_of(&self, feature: &str) -> Option<&FeatureRelevance> {
        self.features.iter().find(|f| f.name == feature)
    }
}

/// Draw the balanced subset for one iteration: every faller in `train`
/// plus an equal number of non-fallers, uniformly without replacement.
pub fn sample_balanced_subset<'a>(
    train: &[&'a SubjectRecord],
    iteration_seed: u64,
) -> Result<Vec<&'a SubjectRecord>> {
    let fallers: Vec<&SubjectRecord> = train
        .iter()
        .copied()
        .filter(|s| s.outcome == Outcome::Faller)
        .collect();
    let mut non_fallers: Vec<&SubjectRecord> = train
        .iter()
        .copied()
        .filter(|s| s.outcome == Outcome::NonFaller)
        .collect();
    if fallers.is_empty() {
        return Err(Error::Selection("training slice has no fallers".into()));
    }
    if non_fallers.len() < fallers.len() {
        return Err(Error::Selection(format!(
            "training slice has fewer non-fallers ({}) than fallers ({})",
            non_fallers.len(),
            fallers.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(iteration_seed);
    let take = fallers.len();
    for i in 0..take {
        let j = rng.gen_range(i..non_fallers.len());
        non_fallers.swap(i, j);
    }
    let mut subset = fallers;
    subset.extend(non_fallers.into_iter().take(take));
    Ok(subset)
}

struct IterationOutcome {
    passed_gate: bool,
    marked: Vec<bool>,
}

/// Run the full selection loop over the dataset's train and validation
/// splits. Deterministic given `config.seed`.
pub fn run_selection(
    dataset: &Dataset,
    svm_config: &SvmConfig,
    config: &SelectionConfig,
) -> Result<SelectionReport> {
    config.validate()?;
    let feature_names: Vec<String> = dataset
        .catalog()
        .features()
        .iter()
        .filter(|f| config.feature_kind.admits(f.kind))
        .map(|f| f.name.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::Selection("feature kind filter admits no features".into()));
    }
    let train = dataset.subjects_in(Split::Train);
    let validation = dataset.subjects_in(Split::Validation);
    if validation.is_empty() {
        return Err(Error::Selection("validation slice is empty".into()));
    }

    let row = |s: &SubjectRecord| -> Vec<f64> {
        feature_names.iter().map(|n| s.values[n]).collect()
    };
    let label = |s: &SubjectRecord| -> i8 {
        if s.outcome == Outcome::Faller {
            1
        } else {
            -1
        }
    };
    let val_x: Vec<Vec<f64>> = validation.iter().map(|s| row(s)).collect();
    let val_y: Vec<i8> = validation.iter().map(|s| label(s)).collect();

    let outcomes: Vec<IterationOutcome> = (0..config.iterations as u64)
        .into_par_iter()
        .map(|i| -> Result<IterationOutcome> {
            let iteration_seed =
                seeding::derive_seed(config.seed, seeding::stream::SELECTION_ITERATION, i);
            let subset = sample_balanced_subset(&train, iteration_seed)?;
            let x: Vec<Vec<f64>> = subset.iter().map(|s| row(s)).collect();
            let y: Vec<i8> = subset.iter().map(|s| label(s)).collect();
            // The SMO partner stream gets its own seed, decoupled from the
            // subset-sampling draws.
            let svm_seed = seeding::splitmix64(iteration_seed);
            let model = svm::train(&x, &y, svm_config, svm_seed)?;
            let acc = svm::accuracy(&model, &val_x, &val_y)?;
            if acc < config.accuracy_gate {
                return Ok(IterationOutcome {
                    passed_gate: false,
                    marked: vec![false; feature_names.len()],
                });
            }
            let faller_rows: Vec<&Vec<f64>> = x
                .iter()
                .zip(&y)
                .filter(|(_, &l)| l == 1)
                .map(|(r, _)| r)
                .collect();
            let non_faller_rows: Vec<&Vec<f64>> = x
                .iter()
                .zip(&y)
                .filter(|(_, &l)| l == -1)
                .map(|(r, _)| r)
                .collect();
            let marked = (0..feature_names.len())
                .map(|k| {
                    let fa: Vec<f64> = faller_rows.iter().map(|r| r[k]).collect();
                    let nf: Vec<f64> = non_faller_rows.iter().map(|r| r[k]).collect();
                    feature_is_relevant(&fa, &nf, config.alpha)
                })
                .collect();
            Ok(IterationOutcome {
                passed_gate: true,
                marked,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut counts = vec![0u64; feature_names.len()];
    let mut gated = 0u64;
    for out in &outcomes {
        if out.passed_gate {
            gated += 1;
            for (c, &m) in counts.iter_mut().zip(&out.marked) {
                *c += u64::from(m);
            }
        }
    }

    let denominator = match config.denominator {
        SelectionDenominator::GatedIterations => gated,
        SelectionDenominator::TotalIterations => config.iterations as u64,
    };
    let features: Vec<FeatureRelevance> = feature_names
        .iter()
        .zip(&counts)
        .map(|(name, &relevance_count)| FeatureRelevance {
            name: name.clone(),
            relevance_count,
            selection_pct: if denominator == 0 {
                0.0
            } else {
                relevance_count as f64 / denominator as f64
            },
        })
        .collect();

    let mut order: Vec<usize> = (0..features.len())
        .filter(|&k| features[k].selection_pct >= config.relevance_fraction)
        .collect();
    order.sort_by(|&a, &b| {
        features[b]
            .selection_pct
            .total_cmp(&features[a].selection_pct)
            .then(a.cmp(&b))
    });
    let selected: Vec<String> = if gated == 0 {
        Vec::new()
    } else {
        order.iter().map(|&k| features[k].name.clone()).collect()
    };

    Ok(SelectionReport {
        config: *config,
        iterations_run: config.iterations as u64,
        iterations_passed_gate: gated,
        no_gated_iterations: gated == 0,
        features,
        selected,
    })
}

/// Per-feature significance decision inside one gated iteration. Subgroups
/// that Shapiro-Wilk cannot assess (too small or constant) are treated as
/// non-normal and routed to the rank-sum test, which degrades gracefully
/// on ties.
fn feature_is_relevant(fallers: &[f64], non_fallers: &[f64], alpha: f64) -> bool {
    let normal = |vals: &[f64]| -> bool {
        match shapiro_wilk(vals) {
            Ok(out) => out.p_value > alpha,
            Err(_) => false,
        }
    };
    let comparison = if normal(fallers) && normal(non_fallers) {
        t_test_two_sample(fallers, non_fallers, VarianceMode::Pooled)
    } else {
        ranksum_test(fallers, non_fallers, RanksumMode::Approx)
    };
    match comparison {
        Ok(out) => out.p_value < alpha,
        Err(_) => false,
    }
}
