//! Two-sample t test, pooled-variance (Student) or Welch.

use super::special::student_t_two_sided;
use super::{TestMethod, TestOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceMode {
    /// Classic Student's t with pooled variance, df = n_a + n_b - 2.
    #[default]
    Pooled,
    /// Welch's t with Satterthwaite degrees of freedom.
    Welch,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sided two-sample t test of equal means.
pub fn t_test_two_sample(a: &[f64], b: &[f64], mode: VarianceMode) -> Result<TestOutcome> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Stats(format!(
            "t-test requires at least 2 observations per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (mean_a, var_a) = mean_var(a);
    let (mean_b, var_b) = mean_var(b);
    if var_a == 0.0 && var_b == 0.0 {
        // t is undefined at zero pooled variance; identical constant groups
        // are not evidence either way.
        return Err(Error::Stats(
            "t-test undefined: both samples have zero variance".into(),
        ));
    }
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let (t, df, method) = match mode {
        VarianceMode::Pooled => {
            let df = na + nb - 2.0;
            let sp2 = ((na - 1.0) * var_a + (nb - 1.0) * var_b) / df;
            let se = (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
            ((mean_a - mean_b) / se, df, TestMethod::StudentTPooled)
        }
        VarianceMode::Welch => {
            let va = var_a / na;
            let vb = var_b / nb;
            let se = (va + vb).sqrt();
            let df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
            ((mean_a - mean_b) / se, df, TestMethod::StudentTWelch)
        }
    };
    if !t.is_finite() {
        return Err(Error::Stats("t statistic is not finite".into()));
    }
    let p = student_t_two_sided(t, df);
    Ok(TestOutcome::new(t, p, method, vec![a.len(), b.len()]))
}
