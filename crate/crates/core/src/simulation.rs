//! Simulated mixed datasets with known two-dimensional structure.
//!
//! Each replication plants points on a plane, mixes them into p observed
//! columns, and optionally discretizes some columns into categories. The
//! two study designs on top of that:
//!
//! - **Variable effects**: every distance variant is scored by
//!   leave-one-out importance per variable, exposing how discretization
//!   coarseness distorts a variable's influence.
//! - **Retrieval**: every variant's distances are mapped back to two
//!   dimensions and compared against the planted configuration by
//!   alienation, as the number of categories q varies.
//!
//! Replications are independent ChaCha streams of one base seed, so
//! results are bit-reproducible for any thread count, and the same
//! replication index draws the same data for every q — comparisons
//! across q use common random numbers.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{alienation, classical_mds, euclidean_distances, loo_distance_importance};
use crate::catdissim::{DEFAULT_KL_EPSILON, DEFAULT_PHI};
use crate::data::{discretize, Column, MixedDataset};
use crate::error::{Error, Result};
use crate::expected::replication_rng;
use crate::linalg::Matrix;
use crate::scaling::quantile;
use crate::variant::{variant_distance, VariantKind};

/// Amplitude of the uniform draws behind both the planted plane and the
/// mixing matrix.
const SIGNAL_AMPLITUDE: f64 = 2.0;
/// Standard deviation of the observation noise.
const NOISE_SD: f64 = 0.03;

/// One simulated dataset: planted coordinates and observed columns.
#[derive(Debug, Clone)]
pub struct SimInstance {
    /// n × 2 planted configuration with orthogonal columns.
    pub truth: Matrix,
    /// n × p observed numeric matrix, before any discretization.
    pub observed: Matrix,
    /// Base seed the instance was drawn from.
    pub seed: u64,
}

/// Draw one instance from an already-positioned stream.
fn sample_instance(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Result<(Matrix, Matrix)> {
    // Planted plane: two uniform columns, orthogonalized while keeping
    // each column's original length so the axes stay comparable.
    let mut truth = Matrix::zeros(n, 2);
    for i in 0..n {
        for j in 0..2 {
            truth[(i, j)] = rng.random_range(-SIGNAL_AMPLITUDE..SIGNAL_AMPLITUDE);
        }
    }
    let dot = |a: &Matrix, ca: usize, cb: usize| -> f64 {
        (0..a.rows()).map(|i| a[(i, ca)] * a[(i, cb)]).sum()
    };
    let norm0 = dot(&truth, 0, 0).sqrt();
    let norm1 = dot(&truth, 1, 1).sqrt();
    let coef = dot(&truth, 0, 1) / (norm0 * norm0);
    for i in 0..n {
        truth[(i, 1)] -= coef * truth[(i, 0)];
    }
    let residual = dot(&truth, 1, 1).sqrt();
    if !(residual > 0.0) || !(norm0 > 0.0) {
        return Err(Error::Degenerate(
            "planted coordinates are collinear; cannot orthogonalize".into(),
        ));
    }
    let restore = norm1 / residual;
    for i in 0..n {
        truth[(i, 1)] *= restore;
    }

    // Mixing matrix and observation noise.
    let mut loadings = Matrix::zeros(2, p);
    for j in 0..2 {
        for c in 0..p {
            loadings[(j, c)] = rng.random_range(-SIGNAL_AMPLITUDE..SIGNAL_AMPLITUDE);
        }
    }
    let noise = Normal::new(0.0, NOISE_SD).expect("valid noise distribution");
    let mut observed = truth.matmul(&loadings);
    for i in 0..n {
        for c in 0..p {
            observed[(i, c)] += noise.sample(rng);
        }
    }
    Ok((truth, observed))
}

/// Generate the instance for replication 0 of a seed. Replication r of
/// the batch runs uses stream r of the same seed.
pub fn generate_instance(n: usize, p: usize, seed: u64) -> Result<SimInstance> {
    let mut rng = replication_rng(seed, 0, 0);
    let (truth, observed) = sample_instance(n, p, &mut rng)?;
    Ok(SimInstance {
        truth,
        observed,
        seed,
    })
}

/// The observed matrix as an all-numeric dataset with columns x1..xp.
fn numeric_dataset(observed: &Matrix) -> Result<MixedDataset> {
    let columns = (0..observed.cols())
        .map(|c| {
            Column::numeric(
                format!("x{}", c + 1),
                (0..observed.rows()).map(|i| observed[(i, c)]).collect(),
            )
        })
        .collect();
    MixedDataset::new(columns)
}

/// The observed matrix with its first `cats.len()` columns discretized
/// into the given numbers of categories.
fn discretized_dataset(observed: &Matrix, cats: &[usize]) -> Result<MixedDataset> {
    let columns = (0..observed.cols())
        .map(|c| {
            let name = format!("x{}", c + 1);
            let values: Vec<f64> = (0..observed.rows()).map(|i| observed[(i, c)]).collect();
            match cats.get(c) {
                Some(&q) => discretize(&name, &values, q),
                None => Ok(Column::numeric(name, values)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    MixedDataset::new(columns)
}

/// One observation of the tidy results table.
#[derive(Debug, Clone, Serialize)]
pub struct EffectRecord {
    pub replication: usize,
    pub variant: String,
    /// Variable name for importance records, `q=...` for retrieval.
    pub key: String,
    pub metric: String,
    pub value: f64,
}

/// Leave-one-out importance of every variable under every variant, over
/// independent replications. The first `cats.len()` observed columns are
/// discretized; the numerical variant sees the undiscretized data.
pub fn run_variable_effects(
    reps: usize,
    n: usize,
    p: usize,
    cats: &[usize],
    seed: u64,
) -> Result<Vec<EffectRecord>> {
    if reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    if cats.len() >= p {
        return Err(Error::Config(format!(
            "cannot discretize {} of {} columns; at least one numeric column must remain",
            cats.len(),
            p
        )));
    }
    let per_rep: Vec<Vec<EffectRecord>> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<EffectRecord>> {
            let mut rng = replication_rng(seed, 0, rep as u64);
            let (_, observed) = sample_instance(n, p, &mut rng)?;
            let undiscretized = numeric_dataset(&observed)?;
            let mixed = discretized_dataset(&observed, cats)?;
            let mut records = Vec::new();
            for kind in VariantKind::ALL {
                let dataset = if kind == VariantKind::Numerical {
                    &undiscretized
                } else {
                    &mixed
                };
                let report =
                    loo_distance_importance(dataset, kind, DEFAULT_PHI, DEFAULT_KL_EPSILON)?;
                for entry in report.entries {
                    records.push(EffectRecord {
                        replication: rep,
                        variant: kind.name().to_owned(),
                        key: entry.variable.clone(),
                        metric: "loo_abs".to_owned(),
                        value: entry.absolute,
                    });
                    records.push(EffectRecord {
                        replication: rep,
                        variant: kind.name().to_owned(),
                        key: entry.variable,
                        metric: "loo_rel".to_owned(),
                        value: entry.relative,
                    });
                }
            }
            Ok(records)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// How faithfully each variant's distances recover the planted plane
/// when the first three columns are discretized into q categories.
/// Replication r draws the same data for every q.
pub fn run_retrieval(
    reps: usize,
    n: usize,
    q: usize,
    seed: u64,
    variants: &[VariantKind],
) -> Result<Vec<EffectRecord>> {
    const P: usize = 6;
    const DISCRETIZED: usize = 3;
    if reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    let per_rep: Vec<Vec<EffectRecord>> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<EffectRecord>> {
            let mut rng = replication_rng(seed, 0, rep as u64);
            let (truth, observed) = sample_instance(n, P, &mut rng)?;
            let truth_distances = euclidean_distances(&truth);
            let undiscretized = numeric_dataset(&observed)?;
            let mixed = discretized_dataset(&observed, &[q; DISCRETIZED])?;
            let mut records = Vec::new();
            for &kind in variants {
                let dataset = if kind == VariantKind::Numerical {
                    &undiscretized
                } else {
                    &mixed
                };
                let d = variant_distance(dataset, kind, DEFAULT_PHI, DEFAULT_KL_EPSILON)?.matrix;
                let recovered = euclidean_distances(&classical_mds(&d, 2)?.coordinates);
                records.push(EffectRecord {
                    replication: rep,
                    variant: kind.name().to_owned(),
                    key: format!("q={q}"),
                    metric: "alienation".to_owned(),
                    value: alienation(&recovered, &truth_distances)?,
                });
            }
            Ok(records)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Distribution summary of one (variant, key, metric) cell.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRecord {
    pub variant: String,
    pub key: String,
    pub metric: String,
    pub reps: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor reps − 1; zero for one rep).
    pub sd: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Summarize tidy records over replications, grouped by variant, key,
/// and metric in first-appearance order.
pub fn summarize(records: &[EffectRecord]) -> Vec<SummaryRecord> {
    let mut order: Vec<(String, String, String)> = Vec::new();
    let mut groups: std::collections::HashMap<(String, String, String), Vec<f64>> =
        std::collections::HashMap::new();
    for record in records {
        let cell = (
            record.variant.clone(),
            record.key.clone(),
            record.metric.clone(),
        );
        let values = groups.entry(cell.clone()).or_default();
        if values.is_empty() {
            order.push(cell);
        }
        values.push(record.value);
    }
    order
        .into_iter()
        .map(|cell| {
            let mut values = groups.remove(&cell).expect("group exists");
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
            let reps = values.len();
            let mean = values.iter().sum::<f64>() / reps as f64;
            let sd = if reps > 1 {
                (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (reps - 1) as f64)
                    .sqrt()
            } else {
                0.0
            };
            let (variant, key, metric) = cell;
            SummaryRecord {
                variant,
                key,
                metric,
                reps,
                mean,
                sd,
                q1: quantile(&values, 0.25),
                median: quantile(&values, 0.5),
                q3: quantile(&values, 0.75),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_reproducible_and_seed_sensitive() {
        let a = generate_instance(30, 6, 7).unwrap();
        let b = generate_instance(30, 6, 7).unwrap();
        let c = generate_instance(30, 6, 8).unwrap();
        for i in 0..30 {
            for j in 0..6 {
                assert_eq!(a.observed[(i, j)].to_bits(), b.observed[(i, j)].to_bits());
            }
        }
        assert!((0..30).any(|i| a.observed[(i, 0)] != c.observed[(i, 0)]));
    }

    #[test]
    fn planted_columns_are_orthogonal_with_kept_lengths() {
        let instance = generate_instance(200, 6, 3).unwrap();
        let t = &instance.truth;
        let mut dot = 0.0;
        let mut n0 = 0.0;
        let mut n1 = 0.0;
        for i in 0..200 {
            dot += t[(i, 0)] * t[(i, 1)];
            n0 += t[(i, 0)] * t[(i, 0)];
            n1 += t[(i, 1)] * t[(i, 1)];
        }
        assert!(dot.abs() < 1e-10 * n0.sqrt() * n1.sqrt());
        // Uniform(-2, 2) columns have norm ~ sqrt(n * 4/3); keeping the
        // original lengths means both land near that, well off zero.
        assert!(n0.sqrt() > 10.0);
        assert!(n1.sqrt() > 10.0);
    }

    #[test]
    fn observed_columns_sit_on_the_planted_plane_up_to_noise() {
        let instance = generate_instance(100, 6, 11).unwrap();
        // Regress one observed column on the two planted columns; the
        // residual should be on the order of the noise.
        let t = &instance.truth;
        let y: Vec<f64> = (0..100).map(|i| instance.observed[(i, 2)]).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, z)| x * z).sum::<f64>();
        let t0: Vec<f64> = (0..100).map(|i| t[(i, 0)]).collect();
        let t1: Vec<f64> = (0..100).map(|i| t[(i, 1)]).collect();
        let b0 = dot(&y, &t0) / dot(&t0, &t0);
        let b1 = dot(&y, &t1) / dot(&t1, &t1);
        let residual: f64 = (0..100)
            .map(|i| {
                let r = y[i] - b0 * t0[i] - b1 * t1[i];
                r * r
            })
            .sum::<f64>()
            / 100.0;
        assert!(
            residual.sqrt() < 5.0 * NOISE_SD,
            "residual sd {} too large",
            residual.sqrt()
        );
    }

    #[test]
    fn variable_effects_produce_a_complete_tidy_table() {
        let records = run_variable_effects(2, 40, 5, &[2, 3, 3], 42).unwrap();
        // 2 reps x 8 variants x 5 variables x 2 metrics
        assert_eq!(records.len(), 2 * 8 * 5 * 2);
        for rep in 0..2 {
            for kind in VariantKind::ALL {
                let rel_sum: f64 = records
                    .iter()
                    .filter(|r| {
                        r.replication == rep
                            && r.variant == kind.name()
                            && r.metric == "loo_rel"
                    })
                    .map(|r| r.value)
                    .sum();
                assert!(
                    (rel_sum - 1.0).abs() < 1e-9,
                    "{} rep {rep} relative effects sum to {rel_sum}",
                    kind.name()
                );
            }
        }
    }

    #[test]
    fn variable_effects_are_bit_reproducible() {
        // Three categorical columns, so the leave-one-out of the
        // dependent variant always keeps an association partner.
        let a = run_variable_effects(2, 30, 4, &[2, 3, 3], 5).unwrap();
        let b = run_variable_effects(2, 30, 4, &[2, 3, 3], 5).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.value.to_bits(), y.value.to_bits());
        }
    }

    #[test]
    fn retrieval_uses_common_draws_across_category_counts() {
        let variants = [VariantKind::Numerical, VariantKind::Gower];
        let at_q3 = run_retrieval(2, 30, 3, 9, &variants).unwrap();
        let at_q5 = run_retrieval(2, 30, 5, 9, &variants).unwrap();
        for records in [&at_q3, &at_q5] {
            assert_eq!(records.len(), 4);
            for r in records.iter() {
                assert!((0.0..=1.0).contains(&r.value), "alienation {}", r.value);
            }
        }
        // The numerical variant ignores discretization entirely, so with
        // common draws its score is identical for every q.
        let num3: Vec<f64> = at_q3
            .iter()
            .filter(|r| r.variant == "numerical")
            .map(|r| r.value)
            .collect();
        let num5: Vec<f64> = at_q5
            .iter()
            .filter(|r| r.variant == "numerical")
            .map(|r| r.value)
            .collect();
        assert_eq!(num3.len(), 2);
        for (a, b) in num3.iter().zip(&num5) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn summarize_computes_quartiles_per_cell() {
        let records: Vec<EffectRecord> = (0..5)
            .map(|rep| EffectRecord {
                replication: rep,
                variant: "gower".into(),
                key: "q=3".into(),
                metric: "alienation".into(),
                value: (rep + 1) as f64,
            })
            .collect();
        let summary = summarize(&records);
        assert_eq!(summary.len(), 1);
        let cell = &summary[0];
        assert_eq!(cell.reps, 5);
        assert_eq!(cell.mean, 3.0);
        assert_eq!(cell.median, 3.0);
        assert_eq!(cell.q1, 2.0);
        assert_eq!(cell.q3, 4.0);
        assert!((cell.sd - 2.5_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_designs_are_rejected() {
        assert!(run_variable_effects(0, 30, 4, &[2], 1).is_err());
        assert!(run_variable_effects(2, 30, 4, &[2, 2, 2, 2], 1).is_err());
    }
}
