//! Numeric column scalings: z-score, range, robust range, principal component.
//!
//! ## Purpose
//! Put numeric variables on comparable footing before distances are taken.
//! Which footing is "comparable" depends on the scaling, and the expected
//! pairwise distance after scaling differs per distribution; the
//! `expected` module carries those values.
//!
//! ## Conventions
//! - All variances and covariances use the population divisor `n`.
//! - Quantiles interpolate linearly at position `1 + (n - 1) p` (1-based),
//!   the convention most statistical software defaults to.
//! - Principal-component scaling rotates the whole centered block onto its
//!   eigenbasis and normalizes each component to unit variance. No
//!   truncation: all components are kept, small eigenvalues guarded by a
//!   relative rank threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, Matrix};

/// Eigenvalues below `RANK_EPSILON * lambda_max` make the block rank
/// deficient for principal-component scaling.
const RANK_EPSILON: f64 = 1e-10;

/// Available numeric scalings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericScaling {
    /// (x - mean) / sd, population sd.
    Sd,
    /// (x - min) / (max - min).
    Range,
    /// (x - median) / IQR.
    RobustRange,
    /// Whole-block rotation onto unit-variance principal components.
    Pc,
}

impl NumericScaling {
    pub fn name(self) -> &'static str {
        match self {
            NumericScaling::Sd => "sd",
            NumericScaling::Range => "range",
            NumericScaling::RobustRange => "robust_range",
            NumericScaling::Pc => "pc",
        }
    }
}

/// Mean with the population divisor.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation (divisor `n`).
pub fn population_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Linear-interpolation quantile at 1-based position `1 + (n - 1) p`.
/// `sorted` must be ascending.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Z-score scaling: (x - mean) / sd. Errors when the sd is zero.
pub fn sd_scale(values: &[f64], column: &str) -> Result<Vec<f64>> {
    let m = mean(values);
    let sd = population_sd(values);
    if sd == 0.0 {
        return Err(degenerate(column, "zero standard deviation"));
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

/// Range scaling: (x - min) / (max - min). Errors when the range is zero.
pub fn range_scale(values: &[f64], column: &str) -> Result<Vec<f64>> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Err(degenerate(column, "zero range"));
    }
    Ok(values.iter().map(|v| (v - min) / (max - min)).collect())
}

/// Robust range scaling: (x - median) / IQR. Errors when the interquartile
/// range is zero.
pub fn robust_range_scale(values: &[f64], column: &str) -> Result<Vec<f64>> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = quantile(&sorted, 0.5);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    if iqr == 0.0 {
        return Err(degenerate(column, "zero interquartile range"));
    }
    Ok(values.iter().map(|v| (v - median) / iqr).collect())
}

/// Apply a per-column scaling. `Pc` is a whole-block operation and is
/// rejected here; use [`pc_scale`].
pub fn scale_column(kind: NumericScaling, values: &[f64], column: &str) -> Result<Vec<f64>> {
    match kind {
        NumericScaling::Sd => sd_scale(values, column),
        NumericScaling::Range => range_scale(values, column),
        NumericScaling::RobustRange => robust_range_scale(values, column),
        NumericScaling::Pc => Err(Error::Config(format!(
            "pc scaling applies to the whole numeric block, not column '{column}'"
        ))),
    }
}

/// Population covariance matrix of the columns of `block`: centered
/// cross-products divided by `n`.
pub fn covariance(block: &Matrix) -> Matrix {
    let n = block.rows();
    let p = block.cols();
    let means: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| block[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let mut s = Matrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let mut acc = 0.0;
            for i in 0..n {
                acc += (block[(i, a)] - means[a]) * (block[(i, b)] - means[b]);
            }
            let v = acc / n as f64;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    s
}

/// Principal-component scaling of a numeric block.
#[derive(Debug, Clone)]
pub struct PcScaled {
    /// The rotated, unit-variance scores: `centered * rotation * diag(1/sqrt(lambda))`.
    pub scores: Matrix,
    /// Eigenvalues of the covariance matrix, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Eigenvector matrix (columns), with the deterministic sign convention.
    pub rotation: Matrix,
}

/// Rotate the centered block onto its principal axes and normalize each
/// component to unit variance. Keeps every component (no truncation);
/// errors if any eigenvalue falls below `1e-10 * lambda_max`.
pub fn pc_scale(block: &Matrix) -> Result<PcScaled> {
    let n = block.rows();
    let p = block.cols();
    let s = covariance(block);
    let eig = sym_eig(&s)?;
    let lambda_max = eig.values.first().copied().unwrap_or(0.0);
    if lambda_max <= 0.0 {
        return Err(Error::Degenerate(
            "numeric block has zero variance, cannot pc-scale".into(),
        ));
    }
    if let Some(k) = eig
        .values
        .iter()
        .position(|&l| l <= RANK_EPSILON * lambda_max)
    {
        return Err(Error::Degenerate(format!(
            "numeric block is rank deficient: component {} has eigenvalue {:e} \
             below {:e} of the largest",
            k + 1,
            eig.values[k],
            RANK_EPSILON
        )));
    }

    let means: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| block[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let inv_sqrt: Vec<f64> = eig.values.iter().map(|l| 1.0 / l.sqrt()).collect();
    let mut scores = Matrix::zeros(n, p);
    for i in 0..n {
        for k in 0..p {
            let mut acc = 0.0;
            for j in 0..p {
                acc += (block[(i, j)] - means[j]) * eig.vectors[(j, k)];
            }
            scores[(i, k)] = acc * inv_sqrt[k];
        }
    }
    Ok(PcScaled {
        scores,
        eigenvalues: eig.values,
        rotation: eig.vectors,
    })
}

fn degenerate(column: &str, reason: &str) -> Error {
    Error::DegenerateColumn {
        column: column.to_owned(),
        reason: reason.to_owned(),
    }
}
