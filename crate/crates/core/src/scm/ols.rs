//! Ordinary least squares via the normal equations.
//!
//! The regressions here are tiny (an intercept plus two or three parents),
//! so the solver optimizes for determinism rather than large-scale numerics:
//! accumulate X'X and X'y, then Gaussian elimination with partial pivoting.

// Index loops mirror the matrix algebra.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Relative pivot tolerance for declaring the normal equations singular.
const RANK_TOLERANCE: f64 = 1e-10;

/// Fitted coefficients and residual spread for `y ~ 1 + regressors`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    pub intercept: f64,
    /// One coefficient per regressor, in input order.
    pub coefficients: Vec<f64>,
    /// Sample standard deviation of the residuals.
    pub residual_std: f64,
    pub residuals: Vec<f64>,
}

/// Fit `y = b0 + b1*x1 + ... + bp*xp` by least squares.
///
/// `regressors` are column slices, all of length `y.len()`. Errors when the
/// design matrix is rank deficient at the pivot tolerance.
pub fn least_squares(regressors: &[&[f64]], y: &[f64], target: &str) -> Result<LeastSquaresFit> {
    let n = y.len();
    let p = regressors.len() + 1; // + intercept
    if n == 0 {
        return Err(Error::Fit(format!("no observations for '{target}'")));
    }
    for column in regressors {
        assert_eq!(column.len(), n, "regressor length mismatch");
    }
    if n < p {
        return Err(Error::RankDeficient {
            target: target.to_string(),
        });
    }

    // Normal equations: ata = X'X, aty = X'y with X = [1 | regressors].
    let mut ata = vec![vec![0.0; p]; p];
    let mut aty = vec![0.0; p];
    let design_value = |row: usize, col: usize| -> f64 {
        if col == 0 {
            1.0
        } else {
            regressors[col - 1][row]
        }
    };
    for row in 0..n {
        for i in 0..p {
            let xi = design_value(row, i);
            aty[i] += xi * y[row];
            for j in i..p {
                ata[i][j] += xi * design_value(row, j);
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            ata[i][j] = ata[j][i];
        }
    }

    let beta = solve_pivoted(ata, aty, target)?;

    let mut residuals = Vec::with_capacity(n);
    for row in 0..n {
        let mut prediction = beta[0];
        for (j, column) in regressors.iter().enumerate() {
            prediction += beta[j + 1] * column[row];
        }
        residuals.push(y[row] - prediction);
    }
    let residual_std = sample_std(&residuals);

    Ok(LeastSquaresFit {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        residual_std,
        residuals,
    })
}

/// Gaussian elimination with partial pivoting on a square system.
fn solve_pivoted(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, target: &str) -> Result<Vec<f64>> {
    let p = b.len();
    let max_diagonal = (0..p).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    let tolerance = RANK_TOLERANCE * max_diagonal.max(f64::MIN_POSITIVE);

    for col in 0..p {
        let pivot_row = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < tolerance {
            return Err(Error::RankDeficient {
                target: target.to_string(),
            });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..p {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..p {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; p];
    for col in (0..p).rev() {
        let mut sum = b[col];
        for k in col + 1..p {
            sum -= a[col][k] * x[k];
        }
        x[col] = sum / a[col][col];
    }
    Ok(x)
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}
