//! Hypothesis tests used by the pipeline: Shapiro-Wilk normality,
//! two-sample t, Wilcoxon rank-sum, and the exact test on r x c
//! contingency tables (Freeman-Halton generalization of Fisher's test).

pub mod fisher;
pub mod ranksum;
pub mod shapiro;
pub mod special;
pub mod ttest;

pub use fisher::{fisher_exact, ContingencyTable};
pub use ranksum::{ranksum_test, RanksumMode};
pub use shapiro::shapiro_wilk;
pub use ttest::{t_test_two_sample, VarianceMode};

use serde::Serialize;

/// Which test produced a [`TestOutcome`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    ShapiroWilk,
    StudentTPooled,
    StudentTWelch,
    RanksumApprox,
    RanksumExact,
    FisherExact,
}

/// Result of a hypothesis test.
///
/// `statistic` is method-specific: W for Shapiro-Wilk, t for the t-test,
/// the z score (approx) or rank sum (exact) for the rank-sum test, and the
/// observed table probability for the exact contingency test.
#[derive(Debug, Clone, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    /// Group sizes (single entry for one-sample tests, total for tables).
    pub n: Vec<usize>,
}

impl TestOutcome {
    pub(crate) fn new(statistic: f64, p_value: f64, method: TestMethod, n: Vec<usize>) -> Self {
        debug_assert!((0.0..=1.0).contains(&p_value), "p out of range: {p_value}");
        TestOutcome {
            statistic,
            p_value,
            method,
            n,
        }
    }
}
