//! Exact test of independence on r x c contingency tables.
//!
//! Two-sidedness follows the probability-ordering (Freeman-Halton)
//! convention: the p-value is the total multivariate-hypergeometric
//! probability, over all tables sharing the observed margins, of tables no
//! more probable than the observed one. For 2 x 2 this reduces to the
//! classic two-sided Fisher test. Probabilities are accumulated in
//! log-space via log-factorials.

use super::special::ln_factorial;
use super::{TestMethod, TestOutcome};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest grand total accepted for enumeration.
pub const MAX_TOTAL: u64 = 200;
/// Guard on the number of candidate tables visited (only reachable for
/// margin shapes far wider than the 2 x 3 reference use).
const MAX_TABLES: u64 = 50_000_000;

/// Relative slack when comparing table probabilities to the observed one,
/// absorbing round-off in the log-factorial sums.
const REL_TOL: f64 = 1e-7;

/// An r x c grid of non-negative counts. The reference use is 2 outcome
/// rows by 3 stratum columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    rows: Vec<Vec<u64>>,
}

impl ContingencyTable {
    /// Build from rows; all rows must have equal, non-zero length and the
    /// grand total must be positive.
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Stats("contingency table must be non-empty".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Stats("contingency table rows have unequal lengths".into()));
        }
        let table = ContingencyTable { rows };
        if table.total() == 0 {
            return Err(Error::Stats("contingency table has zero total".into()));
        }
        Ok(table)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn cell(&self, row: usize, col: usize) -> u64 {
        self.rows[row][col]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn row_margins(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_margins(&self) -> Vec<u64> {
        (0..self.n_cols())
            .map(|j| self.rows.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().flatten().sum()
    }
}

/// ln P(table) under the multivariate hypergeometric null with the given
/// margins: sum ln R_i! + sum ln C_j! - ln N! - sum ln T_ij!.
fn log_prob(cells: &[u64], const_part: f64) -> f64 {
    const_part - cells.iter().map(|&c| ln_factorial(c)).sum::<f64>()
}

/// Freeman-Halton exact test.
pub fn fisher_exact(table: &ContingencyTable) -> Result<TestOutcome> {
    let total = table.total();
    if total > MAX_TOTAL {
        return Err(Error::Stats(format!(
            "contingency table total {total} exceeds enumeration limit {MAX_TOTAL}"
        )));
    }
    let row_margins = table.row_margins();
    let col_margins = table.col_margins();
    let const_part = row_margins.iter().map(|&m| ln_factorial(m)).sum::<f64>()
        + col_margins.iter().map(|&m| ln_factorial(m)).sum::<f64>()
        - ln_factorial(total);

    let observed: Vec<u64> = table.rows.iter().flatten().copied().collect();
    let lp_obs = log_prob(&observed, const_part);
    let cutoff = lp_obs + REL_TOL.ln_1p();

    let mut acc = Accumulator {
        cutoff,
        const_part,
        p_sum: 0.0,
        visited: 0,
    };
    let n_rows = table.n_rows();
    let n_cols = table.n_cols();
    let mut cells = vec![0u64; n_rows * n_cols];
    enumerate_tables(
        &mut acc,
        &mut cells,
        &row_margins,
        &mut col_margins.clone(),
        0,
        0,
        row_margins[0],
        n_rows,
        n_cols,
    )?;

    let p = acc.p_sum.min(1.0);
    Ok(TestOutcome::new(
        lp_obs.exp(),
        p,
        TestMethod::FisherExact,
        vec![total as usize],
    ))
}

struct Accumulator {
    cutoff: f64,
    const_part: f64,
    p_sum: f64,
    visited: u64,
}

/// Recursively fill rows left to right; the last row and the last cell of
/// each row are forced by the margins.
#[allow(clippy::too_many_arguments)]
fn enumerate_tables(
    acc: &mut Accumulator,
    cells: &mut [u64],
    row_margins: &[u64],
    col_remaining: &mut [u64],
    row: usize,
    col: usize,
    row_remaining: u64,
    n_rows: usize,
    n_cols: usize,
) -> Result<()> {
    if row == n_rows - 1 {
        // Final row forced; check feasibility (each forced cell must not
        // exceed its remaining column margin -- it equals it by margins).
        let base = row * n_cols;
        cells[base..base + n_cols].copy_from_slice(col_remaining);
        acc.visited += 1;
        if acc.visited > MAX_TABLES {
            return Err(Error::Stats(
                "contingency table margins too wide to enumerate".into(),
            ));
        }
        let lp = log_prob(cells, acc.const_part);
        if lp <= acc.cutoff {
            acc.p_sum += lp.exp();
        }
        return Ok(());
    }
    if col == n_cols - 1 {
        // Last cell of the row is forced by its row margin.
        if row_remaining > col_remaining[col] {
            return Ok(());
        }
        cells[row * n_cols + col] = row_remaining;
        col_remaining[col] -= row_remaining;
        enumerate_tables(
            acc,
            cells,
            row_margins,
            col_remaining,
            row + 1,
            0,
            row_margins[row + 1],
            n_rows,
            n_cols,
        )?;
        col_remaining[col] += row_remaining;
        return Ok(());
    }
    let hi = row_remaining.min(col_remaining[col]);
    for v in 0..=hi {
        cells[row * n_cols + col] = v;
        col_remaining[col] -= v;
        enumerate_tables(
            acc,
            cells,
            row_margins,
            col_remaining,
            row,
            col + 1,
            row_remaining - v,
            n_rows,
            n_cols,
        )?;
        col_remaining[col] += v;
    }
    Ok(())
}
