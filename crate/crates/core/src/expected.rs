//! Analytic and Monte-Carlo oracles for mean pairwise distances.
//!
//! Commensurability weighting needs E[d_j] for every variable. This module
//! provides the closed forms that exist — uniform and normal numeric
//! columns under the per-column scalings, and pᵀΔp for categorical
//! variables — together with the reference tables built from them and a
//! seeded Monte-Carlo estimator for the cells without a closed form.
//!
//! Closed forms are returned as `Option<f64>`: `None` means the
//! combination genuinely has no sample-size-free closed form (the range
//! scaling depends on sample extremes; principal-component scaling mixes
//! columns), not that the value is unknown numerically.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as RandDistribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catdissim::{
    self, CatDissimKind, CategoryDissimilarity, ConditionalMatrix,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scaling::{self, NumericScaling};

/// 75th percentile of the standard normal distribution, accurate to about
/// 1e-15; fixed here so the robust-scaling oracle is a constant rather
/// than a runtime root-find.
pub const STD_NORMAL_Q75: f64 = 0.674489750196082;

/// Expected |X − Y| for X, Y independent uniform on an interval, after the
/// given per-column scaling. The interval's location and width cancel.
pub fn uniform_mean(scaling: NumericScaling) -> Option<f64> {
    match scaling {
        // sd = width/sqrt(12); E|X-Y| = width/3, so the ratio is sqrt(12)/3.
        NumericScaling::Sd => Some(12.0_f64.sqrt() / 3.0),
        NumericScaling::Range => Some(1.0 / 3.0),
        // IQR = width/2.
        NumericScaling::RobustRange => Some(2.0 / 3.0),
        NumericScaling::Pc => None,
    }
}

/// Expected |X − Y| for X, Y independent normal, after the given scaling.
/// The range scaling has no sample-size-free closed form (it depends on
/// sample extrema), so it reports `None`.
pub fn normal_mean(scaling: NumericScaling) -> Option<f64> {
    match scaling {
        // X - Y ~ N(0, 2 sd^2); the folded mean is 2 sd / sqrt(pi).
        NumericScaling::Sd => Some(2.0 / std::f64::consts::PI.sqrt()),
        NumericScaling::Range => None,
        // IQR of a normal is 2 * q75 * sd.
        NumericScaling::RobustRange => {
            Some(2.0 / std::f64::consts::PI.sqrt() / (2.0 * STD_NORMAL_Q75))
        }
        NumericScaling::Pc => None,
    }
}

/// Expected categorical distance pᵀΔp: the mean dissimilarity between two
/// independent draws from p.
pub fn cat_expected(p: &[f64], delta: &CategoryDissimilarity) -> f64 {
    delta.quadratic_form(p)
}

/// The two limiting values of the Hennig–Liao factor at balanced counts:
/// (n → ∞, n = q), i.e. √(φq/(q−1)) and √(φ(q+1)/(q−1)).
pub fn eta_limits(q: usize, phi: f64) -> (f64, f64) {
    let q = q as f64;
    ((phi * q / (q - 1.0)).sqrt(), (phi * (q + 1.0) / (q - 1.0)).sqrt())
}

/// Large-n Hennig–Liao factor for arbitrary proportions: √(φ/(1 − Σp²)).
/// Reduces to √(φq/(q−1)) at uniform p.
pub fn eta_limit_for_proportions(p: &[f64], phi: f64) -> f64 {
    let concentration: f64 = p.iter().map(|v| v * v).sum();
    (phi / (1.0 - concentration)).sqrt()
}

/// One reference-table entry: a dissimilarity name and its expected
/// distance under uniform category probabilities.
#[derive(Debug, Clone, Serialize)]
pub struct ExpectedEntry {
    pub dissim: &'static str,
    pub expected: f64,
}

/// Expected distances of every category dissimilarity under uniform
/// proportions with q categories and sample size n (n enters only through
/// the inverse-OF frequencies and is assumed balanced).
///
/// Association-based entries (total variation, Kullback–Leibler) are
/// evaluated under perfect dependence — conditional rows are distinct unit
/// vectors — which is their reference scenario. The Hennig–Liao entry uses
/// the large-n factor √(φq/(q−1)).
pub fn uniform_reference_table(
    q: usize,
    n: usize,
    phi: f64,
    kl_epsilon: f64,
) -> Result<Vec<ExpectedEntry>> {
    let p = vec![1.0 / q as f64; q];
    let (eta_inf, _) = eta_limits(q, phi);
    let perfect = ConditionalMatrix::from_rows(Matrix::identity(q))?;

    let entries = vec![
        ExpectedEntry {
            dissim: "matching",
            expected: cat_expected(&p, &catdissim::matching(q)?),
        },
        ExpectedEntry {
            dissim: "eskin",
            expected: cat_expected(&p, &catdissim::eskin(q)?),
        },
        ExpectedEntry {
            dissim: "of",
            expected: cat_expected(&p, &catdissim::of_dissim(&p)?),
        },
        ExpectedEntry {
            dissim: "iof",
            expected: cat_expected(&p, &catdissim::iof_dissim(&p, n)?),
        },
        ExpectedEntry {
            dissim: "indicator_plain",
            expected: cat_expected(&p, &catdissim::indicator_plain(q)?),
        },
        ExpectedEntry {
            dissim: "indicator_hl",
            expected: cat_expected(&p, &catdissim::indicator_hl(q, eta_inf)?),
        },
        ExpectedEntry {
            dissim: "indicator_sd",
            expected: cat_expected(&p, &catdissim::indicator_sd(&p)?),
        },
        ExpectedEntry {
            dissim: "indicator_cds",
            expected: cat_expected(&p, &catdissim::indicator_cds(&p)?),
        },
        ExpectedEntry {
            dissim: "tvd",
            expected: cat_expected(&p, &catdissim::tvd_dissim(&perfect)?),
        },
        ExpectedEntry {
            dissim: "kl",
            expected: cat_expected(&p, &catdissim::kl_dissim(&perfect, kl_epsilon)?),
        },
    ];
    Ok(entries)
}

/// One point of a skewed-proportions curve.
#[derive(Debug, Clone, Serialize)]
pub struct SkewPoint {
    /// Probability of the first category.
    pub p1: f64,
    /// Expected distance, or `None` where the dissimilarity is undefined
    /// (inverse OF once an expected count drops below 1).
    pub expected: Option<f64>,
}

/// Expected distances along a family of skewed distributions: the first
/// category has probability p₁, the remaining q−1 categories share the
/// rest equally. Association-based kinds are evaluated under perfect
/// dependence, the Hennig–Liao kind with its large-n factor for the
/// skewed proportions.
pub fn skew_profile(
    q: usize,
    kind: CatDissimKind,
    n: usize,
    phi: f64,
    kl_epsilon: f64,
    p1_grid: &[f64],
) -> Result<Vec<SkewPoint>> {
    let mut curve = Vec::with_capacity(p1_grid.len());
    for &p1 in p1_grid {
        if !(0.0 < p1 && p1 < 1.0) {
            return Err(Error::Config(format!(
                "skew grid values must lie strictly between 0 and 1, got {p1}"
            )));
        }
        let mut p = vec![(1.0 - p1) / (q as f64 - 1.0); q];
        p[0] = p1;
        let delta = match kind {
            CatDissimKind::Matching => catdissim::matching(q)?,
            CatDissimKind::Eskin => catdissim::eskin(q)?,
            CatDissimKind::Of => catdissim::of_dissim(&p)?,
            CatDissimKind::Iof => match catdissim::iof_dissim(&p, n) {
                Ok(delta) => delta,
                Err(Error::IofGuard { .. }) => {
                    curve.push(SkewPoint { p1, expected: None });
                    continue;
                }
                Err(other) => return Err(other),
            },
            CatDissimKind::IndicatorPlain => catdissim::indicator_plain(q)?,
            CatDissimKind::IndicatorHl => {
                catdissim::indicator_hl(q, eta_limit_for_proportions(&p, phi))?
            }
            CatDissimKind::IndicatorSd => catdissim::indicator_sd(&p)?,
            CatDissimKind::IndicatorCds => catdissim::indicator_cds(&p)?,
            CatDissimKind::TvdAssoc => {
                catdissim::tvd_dissim(&ConditionalMatrix::from_rows(Matrix::identity(q))?)?
            }
            CatDissimKind::KlAssoc => catdissim::kl_dissim(
                &ConditionalMatrix::from_rows(Matrix::identity(q))?,
                kl_epsilon,
            )?,
        };
        curve.push(SkewPoint {
            p1,
            expected: Some(cat_expected(&p, &delta)),
        })
    }
    Ok(curve)
}

/// The default skew grid p₁ ∈ {0.05, 0.10, …, 0.95}.
pub fn default_skew_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

/// Mean |x_i − x_l| over ordered pairs i ≠ l, computed from the sorted
/// order in O(n log n): each sorted value x_(i) enters the pair sum with
/// coefficient 2i − n + 1.
pub fn mean_abs_pair_differences(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n >= 2, "pair distances need at least two values");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (2 * i as i64 - n as i64 + 1) as f64 * x)
        .sum();
    2.0 * total / (n as f64 * (n as f64 - 1.0))
}

/// Sampling distributions of the Monte-Carlo reference table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceDistribution {
    Normal,
    Uniform,
    /// Chi-squared with 0.5 degrees of freedom (Gamma, shape 1/4, scale 2).
    Skewed,
    /// Half the sample from the skewed distribution censored above at 10,
    /// half from its mirror image 10 − X censored below at 0.
    Bimodal,
}

impl ReferenceDistribution {
    pub const ALL: [ReferenceDistribution; 4] = [
        ReferenceDistribution::Normal,
        ReferenceDistribution::Uniform,
        ReferenceDistribution::Skewed,
        ReferenceDistribution::Bimodal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceDistribution::Normal => "normal",
            ReferenceDistribution::Uniform => "uniform",
            ReferenceDistribution::Skewed => "skewed",
            ReferenceDistribution::Bimodal => "bimodal",
        }
    }

    fn sample(self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            ReferenceDistribution::Normal => {
                (0..n).map(|_| StandardNormal.sample(rng)).collect()
            }
            ReferenceDistribution::Uniform => (0..n).map(|_| rng.random::<f64>()).collect(),
            ReferenceDistribution::Skewed => {
                let gamma = Gamma::new(0.25, 2.0).expect("valid gamma parameters");
                (0..n).map(|_| gamma.sample(rng)).collect()
            }
            ReferenceDistribution::Bimodal => {
                let gamma = Gamma::new(0.25, 2.0).expect("valid gamma parameters");
                let half = n / 2;
                let draw = |rng: &mut ChaCha8Rng| {
                    let g: f64 = gamma.sample(rng);
                    g.min(10.0)
                };
                let mut values: Vec<f64> = (0..half).map(|_| draw(rng)).collect();
                values.extend((half..n).map(|_| 10.0 - draw(rng)));
                values
            }
        }
    }
}

/// One Monte-Carlo cell: a distribution/scaling pair with the mean and
/// standard deviation of the per-replication mean pair distances.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloCell {
    pub distribution: ReferenceDistribution,
    pub scaling: NumericScaling,
    pub mean: f64,
    pub sd: f64,
}

/// The per-column scalings covered by the Monte-Carlo reference table.
const MC_SCALINGS: [NumericScaling; 3] = [
    NumericScaling::Sd,
    NumericScaling::Range,
    NumericScaling::RobustRange,
];

/// Estimate the mean pair distance for every distribution/scaling cell by
/// simulation: `reps` independent samples of size `n` per distribution,
/// each scaled by all three per-column scalings.
///
/// Deterministic for a fixed seed regardless of thread count: replication
/// r of distribution d uses an RNG stream derived from (seed, d, r), and
/// aggregation follows replication order.
pub fn monte_carlo_reference(n: usize, reps: usize, seed: u64) -> Result<Vec<MonteCarloCell>> {
    if n < 2 || reps == 0 {
        return Err(Error::Config(
            "Monte-Carlo reference needs n >= 2 and at least one replication".into(),
        ));
    }
    let mut cells = Vec::new();
    for (d_index, &distribution) in ReferenceDistribution::ALL.iter().enumerate() {
        // reps × 3 matrix of per-replication means, replication-major.
        let per_rep: Vec<Result<[f64; 3]>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replication_rng(seed, d_index as u64, rep as u64);
                let sample = distribution.sample(n, &mut rng);
                let mut means = [0.0; 3];
                for (s, &scaling) in MC_SCALINGS.iter().enumerate() {
                    let scaled = scaling::scale_column(scaling, &sample, distribution.name())?;
                    means[s] = mean_abs_pair_differences(&scaled);
                }
                Ok(means)
            })
            .collect();
        let per_rep: Vec<[f64; 3]> = per_rep.into_iter().collect::<Result<_>>()?;

        for (s, &scaling) in MC_SCALINGS.iter().enumerate() {
            let mean = per_rep.iter().map(|m| m[s]).sum::<f64>() / reps as f64;
            let var = per_rep
                .iter()
                .map(|m| (m[s] - mean) * (m[s] - mean))
                .sum::<f64>()
                / reps as f64;
            cells.push(MonteCarloCell {
                distribution,
                scaling,
                mean,
                sd: var.sqrt(),
            });
        }
    }
    Ok(cells)
}

/// RNG for one replication of one experiment arm: the root seed keys the
/// generator, and (arm, replication) select a dedicated stream.
pub fn replication_rng(seed: u64, arm: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Streams are 64-bit; arms stay small, so pack both indices.
    rng.set_stream(arm.wrapping_mul(0x1_0000_0000).wrapping_add(rep));
    rng
}
