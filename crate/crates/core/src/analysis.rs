//! Configuration recovery and variable importance.
//!
//! Classical multidimensional scaling turns a distance matrix into a
//! low-dimensional configuration by double-centering the squared
//! distances and keeping the leading positive eigenpairs. Alienation
//! quantifies how far apart two configurations are: zero when their
//! distance matrices are proportional, one when uncorrelated.
//!
//! Variable importance is measured by leaving one variable out and
//! recomputing from scratch — scalings, dissimilarities, weights, and
//! (for the dependent variant) the component rotation are all re-fit on
//! the reduced dataset, so non-additive effects are captured too.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::MixedDataset;
use crate::distance::mean_pair_distance;
use crate::error::{Error, Result};
use crate::linalg::{sym_eig, Matrix};
use crate::variant::{variant_distance, VariantKind};

/// A low-dimensional configuration recovered from distances.
#[derive(Debug, Clone)]
pub struct MdsSolution {
    /// n × k coordinates; column c scales eigenvector c by √λ_c.
    pub coordinates: Matrix,
    /// Full spectrum of the double-centered matrix, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// How many of the k requested columns carry a genuinely positive
    /// eigenvalue (relative to the leading one, beyond rank tolerance).
    pub used_dimensions: usize,
    /// True when fewer than k positive eigenvalues existed and the
    /// remaining columns were padded with zeros.
    pub padded: bool,
    /// Total magnitude of the negative eigenvalues that were truncated;
    /// zero exactly when the distances are Euclidean-embeddable.
    pub negative_mass: f64,
}

/// Relative agreement tolerance for symmetry and diagonal checks.
const INPUT_TOLERANCE: f64 = 1e-9;

/// An eigenvalue below this fraction of the leading one is numerical
/// noise, not a real dimension.
const RANK_EPSILON: f64 = 1e-12;

fn check_distance_matrix(d: &Matrix) -> Result<()> {
    if !d.is_square() {
        return Err(Error::Config(format!(
            "distance matrix must be square, got {}x{}",
            d.rows(),
            d.cols()
        )));
    }
    let scale = d.max_abs().max(1.0);
    for i in 0..d.rows() {
        if d[(i, i)].abs() > scale * INPUT_TOLERANCE {
            return Err(Error::Config(format!(
                "distance matrix has nonzero diagonal entry at row {i}"
            )));
        }
        for l in (i + 1)..d.cols() {
            if (d[(i, l)] - d[(l, i)]).abs() > scale * INPUT_TOLERANCE {
                return Err(Error::Config(format!(
                    "distance matrix is not symmetric at ({i}, {l})"
                )));
            }
        }
    }
    Ok(())
}

/// Classical (Torgerson) multidimensional scaling into k dimensions.
pub fn classical_mds(d: &Matrix, k: usize) -> Result<MdsSolution> {
    check_distance_matrix(d)?;
    if k == 0 {
        return Err(Error::Config("mds needs at least one dimension".into()));
    }
    let n = d.rows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }

    // B = -1/2 J (D ∘ D) J, via row, column, and grand means of the
    // squared distances. Built from the upper triangle and mirrored so
    // the eigensolver sees an exactly symmetric matrix.
    let squared = Matrix::from_fn(n, n, |i, l| d[(i, l)] * d[(i, l)]);
    let mut row_means = vec![0.0; n];
    for i in 0..n {
        row_means[i] = squared.row(i).iter().sum::<f64>() / n as f64;
    }
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = Matrix::zeros(n, n);
    for i in 0..n {
        for l in i..n {
            let v = -0.5 * (squared[(i, l)] - row_means[i] - row_means[l] + grand);
            b[(i, l)] = v;
            b[(l, i)] = v;
        }
    }

    let eig = sym_eig(&b)?;
    let floor = eig.values.first().copied().unwrap_or(0.0).max(0.0) * RANK_EPSILON;
    let positive = eig
        .values
        .iter()
        .take(k)
        .filter(|&&v| v > floor)
        .count();
    let mut coordinates = Matrix::zeros(n, k);
    for c in 0..k.min(n) {
        let lambda = eig.values[c];
        if lambda > floor {
            let scale = lambda.sqrt();
            for i in 0..n {
                coordinates[(i, c)] = eig.vectors[(i, c)] * scale;
            }
        }
    }
    let negative_mass = eig.values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();

    Ok(MdsSolution {
        coordinates,
        eigenvalues: eig.values,
        used_dimensions: positive,
        padded: positive < k,
        negative_mass,
    })
}

/// Pairwise Euclidean distances between the rows of a coordinate matrix.
pub fn euclidean_distances(coordinates: &Matrix) -> Matrix {
    let n = coordinates.rows();
    Matrix::from_fn(n, n, |i, l| {
        let a = coordinates.row(i);
        let b = coordinates.row(l);
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    })
}

/// Alienation between two distance matrices on the same observations:
/// √(1 − c²) with c the congruence of their upper triangles. Zero for
/// proportional matrices, one for uncorrelated ones.
pub fn alienation(a: &Matrix, b: &Matrix) -> Result<f64> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::Config(format!(
            "alienation needs two square matrices of equal size, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let mut cross = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..n {
        for l in (i + 1)..n {
            cross += a[(i, l)] * b[(i, l)];
            aa += a[(i, l)] * a[(i, l)];
            bb += b[(i, l)] * b[(i, l)];
        }
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::Degenerate(
            "alienation is undefined against an all-zero distance matrix".into(),
        ));
    }
    let c = cross / (aa.sqrt() * bb.sqrt());
    // c can land a hair above 1 for proportional matrices.
    Ok((1.0 - c * c).max(0.0).sqrt())
}

/// Importance of one variable under leave-one-out recomputation.
#[derive(Debug, Clone, Serialize)]
pub struct ImportanceEntry {
    pub variable: String,
    /// Raw effect size: mean absolute pair-distance change, or the
    /// alienation between the configurations with and without.
    pub absolute: f64,
    /// Share of the total effect; the entries sum to one.
    pub relative: f64,
}

/// Leave-one-out importances for every variable of a dataset.
#[derive(Debug, Clone, Serialize)]
pub struct ImportanceReport {
    /// "mean_abs_diff" for distance-level effects, "alienation" for
    /// configuration-level effects.
    pub metric: &'static str,
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    fn from_effects(effects: Vec<(String, f64)>) -> Result<Self> {
        let total: f64 = effects.iter().map(|(_, e)| e).sum();
        if total == 0.0 {
            return Err(Error::Degenerate(
                "all leave-one-out effects are zero; relative importance undefined".into(),
            ));
        }
        Ok(ImportanceReport {
            metric: "mean_abs_diff",
            entries: effects
                .into_iter()
                .map(|(variable, absolute)| ImportanceEntry {
                    variable,
                    relative: absolute / total,
                    absolute,
                })
                .collect(),
        })
    }
}

/// Distance-level importance under any recomputation rule: `compute`
/// maps a (possibly reduced) dataset to its distance matrix.
pub fn loo_distance_importance_with<F>(
    dataset: &MixedDataset,
    compute: F,
) -> Result<ImportanceReport>
where
    F: Fn(&MixedDataset) -> Result<Matrix> + Sync,
{
    let full = compute(dataset)?;
    let n = dataset.n_rows();
    let effects: Vec<(String, f64)> = (0..dataset.n_columns())
        .into_par_iter()
        .map(|j| -> Result<(String, f64)> {
            let reduced = compute(&dataset.without_column(j)?)?;
            let gap = Matrix::from_fn(n, n, |i, l| (full[(i, l)] - reduced[(i, l)]).abs());
            Ok((dataset.column(j).name.clone(), mean_pair_distance(&gap)))
        })
        .collect::<Result<Vec<_>>>()?;
    ImportanceReport::from_effects(effects)
}

/// Distance-level importance: how much the pair distances move, on
/// average, when a variable is removed and the distance re-fit.
pub fn loo_distance_importance(
    dataset: &MixedDataset,
    kind: VariantKind,
    phi: f64,
    kl_epsilon: f64,
) -> Result<ImportanceReport> {
    loo_distance_importance_with(dataset, |d| {
        Ok(variant_distance(d, kind, phi, kl_epsilon)?.matrix)
    })
}

/// Configuration-level importance under any recomputation rule: the
/// alienation between the k-dimensional configurations recovered with
/// and without each variable.
pub fn loo_mds_importance_with<F>(
    dataset: &MixedDataset,
    k: usize,
    compute: F,
) -> Result<ImportanceReport>
where
    F: Fn(&MixedDataset) -> Result<Matrix> + Sync,
{
    let full = compute(dataset)?;
    let full_config = euclidean_distances(&classical_mds(&full, k)?.coordinates);
    let effects: Vec<(String, f64)> = (0..dataset.n_columns())
        .into_par_iter()
        .map(|j| -> Result<(String, f64)> {
            let reduced = compute(&dataset.without_column(j)?)?;
            let reduced_config = euclidean_distances(&classical_mds(&reduced, k)?.coordinates);
            Ok((
                dataset.column(j).name.clone(),
                alienation(&full_config, &reduced_config)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ImportanceReport::from_effects(effects)?;
    report.metric = "alienation";
    Ok(report)
}

/// Configuration-level importance for a named variant.
pub fn loo_mds_importance(
    dataset: &MixedDataset,
    kind: VariantKind,
    k: usize,
    phi: f64,
    kl_epsilon: f64,
) -> Result<ImportanceReport> {
    loo_mds_importance_with(dataset, k, |d| {
        Ok(variant_distance(d, kind, phi, kl_epsilon)?.matrix)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catdissim::{DEFAULT_KL_EPSILON, DEFAULT_PHI};
    use crate::data::Column;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn planted_coordinates(n: usize, k: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, k, |_, _| rng.random_range(-3.0..3.0))
    }

    #[test]
    fn collinear_points_recover_their_line() {
        let d = Matrix::from_rows(&[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ]);
        let mds = classical_mds(&d, 2).unwrap();
        assert_eq!(mds.used_dimensions, 1);
        assert!(mds.padded);
        assert!(mds.negative_mass < 1e-12);
        let rebuilt = euclidean_distances(&mds.coordinates);
        for i in 0..3 {
            for l in 0..3 {
                assert!((rebuilt[(i, l)] - d[(i, l)]).abs() < 1e-12);
            }
        }
        // second dimension is padding
        for i in 0..3 {
            assert_eq!(mds.coordinates[(i, 1)], 0.0);
        }
    }

    #[test]
    fn planted_configuration_is_recovered() {
        let coords = planted_coordinates(12, 2, 5);
        let d = euclidean_distances(&coords);
        let mds = classical_mds(&d, 2).unwrap();
        assert_eq!(mds.used_dimensions, 2);
        assert!(!mds.padded);
        let rebuilt = euclidean_distances(&mds.coordinates);
        for i in 0..12 {
            for l in 0..12 {
                assert!((rebuilt[(i, l)] - d[(i, l)]).abs() < 1e-10);
            }
        }
        assert!(alienation(&rebuilt, &d).unwrap() < 1e-12);
    }

    #[test]
    fn recovered_coordinates_are_column_centered() {
        let coords = planted_coordinates(15, 3, 8);
        let d = euclidean_distances(&coords);
        let mds = classical_mds(&d, 3).unwrap();
        for c in 0..3 {
            let mean: f64 =
                (0..15).map(|i| mds.coordinates[(i, c)]).sum::<f64>() / 15.0;
            assert!(mean.abs() < 1e-10);
        }
    }

    #[test]
    fn non_euclidean_distances_report_negative_mass() {
        // A star tree: three leaves pairwise 2 apart, all at distance 1
        // from the hub. No Euclidean embedding exists.
        let d = Matrix::from_rows(&[
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0, 2.0],
            vec![1.0, 2.0, 0.0, 2.0],
            vec![1.0, 2.0, 2.0, 0.0],
        ]);
        let mds = classical_mds(&d, 2).unwrap();
        assert!(mds.negative_mass > 1e-6);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let not_square = Matrix::zeros(3, 4);
        assert!(classical_mds(&not_square, 2).is_err());

        let mut asymmetric = Matrix::zeros(3, 3);
        asymmetric[(0, 1)] = 1.0;
        asymmetric[(1, 0)] = 2.0;
        assert!(classical_mds(&asymmetric, 2).is_err());

        let mut dirty_diagonal = Matrix::zeros(2, 2);
        dirty_diagonal[(0, 0)] = 0.5;
        assert!(classical_mds(&dirty_diagonal, 1).is_err());
    }

    #[test]
    fn alienation_for_proportional_and_unrelated_matrices() {
        let coords = planted_coordinates(8, 2, 3);
        let d = euclidean_distances(&coords);
        let doubled = Matrix::from_fn(8, 8, |i, l| 2.0 * d[(i, l)]);
        assert!(alienation(&d, &doubled).unwrap() < 1e-12);

        // Orthogonal upper triangles: disjoint supports.
        let mut a = Matrix::zeros(3, 3);
        let mut b = Matrix::zeros(3, 3);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        b[(0, 2)] = 1.0;
        b[(2, 0)] = 1.0;
        assert!((alienation(&a, &b).unwrap() - 1.0).abs() < 1e-12);

        assert!(matches!(
            alienation(&d, &Matrix::zeros(8, 8)),
            Err(Error::Degenerate(_))
        ));
    }

    fn three_variable_dataset() -> MixedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draw = |rng: &mut ChaCha8Rng| (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
        MixedDataset::new(vec![
            Column::numeric("a", draw(&mut rng)),
            Column::numeric("b", draw(&mut rng)),
            Column::numeric("c", draw(&mut rng)),
        ])
        .unwrap()
    }

    #[test]
    fn loo_importance_of_commensurable_terms_is_uniform() {
        let dataset = three_variable_dataset();
        let report = loo_distance_importance(
            &dataset,
            VariantKind::Numerical,
            DEFAULT_PHI,
            DEFAULT_KL_EPSILON,
        )
        .unwrap();
        assert_eq!(report.metric, "mean_abs_diff");
        let total: f64 = report.entries.iter().map(|e| e.relative).sum();
        assert!((total - 1.0).abs() < 1e-10);
        for entry in &report.entries {
            // Empirical weights normalize every term's mean contribution
            // to one, and removing a term does not disturb the others.
            assert!((entry.absolute - 1.0).abs() < 1e-10);
            assert!((entry.relative - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn loo_importance_tracks_fixed_term_weights() {
        // Gower terms keep their raw scale, so a variable with a wider
        // spread of range-scaled values moves distances more.
        let dataset = MixedDataset::new(vec![
            Column::numeric("wide", vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]),
            Column::numeric("narrow", vec![0.0, 1.0, 0.45, 0.55, 0.5, 0.5]),
        ])
        .unwrap();
        let report = loo_distance_importance(
            &dataset,
            VariantKind::Gower,
            DEFAULT_PHI,
            DEFAULT_KL_EPSILON,
        )
        .unwrap();
        let wide = &report.entries[0];
        let narrow = &report.entries[1];
        assert_eq!(wide.variable, "wide");
        assert!(wide.absolute > narrow.absolute);
    }

    #[test]
    fn mds_importance_normalizes_and_names_its_metric() {
        let dataset = three_variable_dataset();
        let report = loo_mds_importance(
            &dataset,
            VariantKind::Numerical,
            2,
            DEFAULT_PHI,
            DEFAULT_KL_EPSILON,
        )
        .unwrap();
        assert_eq!(report.metric, "alienation");
        assert_eq!(report.entries.len(), 3);
        let total: f64 = report.entries.iter().map(|e| e.relative).sum();
        assert!((total - 1.0).abs() < 1e-10);
        for entry in &report.entries {
            assert!(entry.absolute >= 0.0);
        }
    }

    #[test]
    fn loo_on_a_single_variable_dataset_is_rejected() {
        let dataset =
            MixedDataset::new(vec![Column::numeric("only", vec![1.0, 2.0, 3.0])]).unwrap();
        assert!(loo_distance_importance(
            &dataset,
            VariantKind::Numerical,
            DEFAULT_PHI,
            DEFAULT_KL_EPSILON
        )
        .is_err());
    }
}
