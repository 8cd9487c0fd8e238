//! Shapiro-Wilk W test for normality, Royston's AS R94 algorithm (1995).
//!
//! W is the squared correlation between the ordered sample and the expected
//! normal order-statistic coefficients; the p-value comes from Royston's
//! normalizing transformation of ln(1 - W). Valid for 3 <= n <= 5000, the
//! same range R's `shapiro.test` accepts.

use super::special::{normal_quantile, normal_sf};
use super::{TestMethod, TestOutcome};
use crate::error::{Error, Result};

// Royston (1995) polynomial coefficients, constant term first.
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Test the sample against the null hypothesis of normality.
///
/// Errors when `n` is outside `[3, 5000]` or the sample is constant
/// (W is undefined at zero variance).
pub fn shapiro_wilk(sample: &[f64]) -> Result<TestOutcome> {
    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::Stats(format!(
            "shapiro-wilk requires 3 <= n <= 5000, got {n}"
        )));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::Stats("shapiro-wilk sample contains non-finite values".into()));
    }

    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= 0.0 {
        return Err(Error::Stats(
            "shapiro-wilk undefined for a constant sample (zero variance)".into(),
        ));
    }

    let coef = half_coefficients(n);

    // Full coefficient vector: -a[k] on the lower half, +a[mirror] on the
    // upper half, zero in the middle for odd n.
    let nn2 = n / 2;
    let weight = |i: usize| -> f64 {
        if i < nn2 {
            -coef[i]
        } else if i >= n - nn2 {
            coef[n - 1 - i]
        } else {
            0.0
        }
    };

    // W as squared correlation between scaled data and coefficients,
    // computed as 1 - w1 to keep precision near W = 1.
    let sx: f64 = x.iter().map(|v| v / range).sum::<f64>() / n as f64;
    let sa: f64 = (0..n).map(weight).sum::<f64>() / n as f64;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, xi) in x.iter().enumerate() {
        let asa = weight(i) - sa;
        let xsx = xi / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = (1.0 - w1).clamp(0.0, 1.0);

    let p = p_value(w, n).clamp(0.0, 1.0);
    Ok(TestOutcome::new(w, p, TestMethod::ShapiroWilk, vec![n]))
}

/// Normalized coefficients a[1..=n/2] (returned 0-based: `a[0]` pairs with
/// the sample minimum).
fn half_coefficients(n: usize) -> Vec<f64> {
    let nn2 = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an = n as f64;
    let an25 = an + 0.25;
    let mut m: Vec<f64> = (1..=nn2)
        .map(|i| normal_quantile((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let start;
    let fac;
    if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        m[1] = a2;
        start = 2;
    } else {
        fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        start = 1;
    }
    m[0] = a1;
    for v in m.iter_mut().skip(start) {
        // m[i] is a negative normal quantile; dividing by -fac flips it
        // into the normalized positive coefficient.
        *v /= -fac;
    }
    m
}

fn p_value(w: f64, n: usize) -> f64 {
    let an = n as f64;
    if n == 3 {
        // Exact small-sample distribution; the offset is asin(sqrt(3/4)).
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::FRAC_PI_3;
        return (pi6 * (w.sqrt().asin() - stqr)).clamp(0.0, 1.0);
    }
    let w1 = 1.0 - w;
    if w1 <= 0.0 {
        return 1.0;
    }
    let y = w1.ln();
    if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 0.0;
        }
        let y = -(gamma - y).ln();
        let m = poly(&C3, an);
        let s = poly(&C4, an).exp();
        normal_sf((y - m) / s)
    } else {
        let m = poly(&C5, an.ln());
        let s = poly(&C6, an.ln()).exp();
        normal_sf((y - m) / s)
    }
}
