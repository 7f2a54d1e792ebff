//! Category dissimilarity matrices for categorical variables.
//!
//! Every constructor returns a [`CategoryDissimilarity`]: a symmetric q×q
//! matrix with zero diagonal and nonnegative off-diagonal entries giving
//! the dissimilarity between pairs of category levels. Combined with an
//! indicator matrix `Z`, the pairwise observation distances are `Z Δ Zᵀ`.
//!
//! Two families are provided:
//! - **marginal** constructors that look only at the variable itself
//!   (matching, Eskin, occurrence frequencies, scaled indicators), and
//! - **association-based** constructors that compare the conditional
//!   distributions of the *other* categorical variables given each level
//!   (total-variation and symmetric Kullback–Leibler kernels, averaged
//!   over all partners).

use serde::{Deserialize, Serialize};

use crate::data::{indicator, level_counts, proportions, ColumnData, MixedDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default scale parameter φ for the Hennig–Liao factor.
pub const DEFAULT_PHI: f64 = 0.5;

/// Default replacement for zero probabilities inside Kullback–Leibler
/// log ratios.
pub const DEFAULT_KL_EPSILON: f64 = 1e-5;

/// φ variant sometimes preferred for ordinal-coded variables.
pub fn ordinal_phi(q: usize) -> f64 {
    (q as f64 - 1.0) / q as f64
}

/// The available category dissimilarity constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatDissimKind {
    /// 0/1 mismatch.
    Matching,
    /// Mismatch scaled by 2/q².
    Eskin,
    /// Products of log observed proportions.
    Of,
    /// Products of log observed frequencies.
    Iof,
    /// Squared Euclidean distance between one-hot rows (2 × matching).
    IndicatorPlain,
    /// Indicator distance with the Hennig–Liao variance-balancing factor.
    IndicatorHl,
    /// Indicator columns scaled by inverse standard deviations.
    IndicatorSd,
    /// Indicator scaling calibrated so the expected distance is 1 at
    /// uniform proportions.
    IndicatorCds,
    /// Symmetric Kullback–Leibler divergence between conditional
    /// distributions, averaged over the other categorical variables.
    KlAssoc,
    /// Total-variation distance between conditional distributions,
    /// averaged over the other categorical variables.
    TvdAssoc,
}

impl CatDissimKind {
    pub const ALL: [CatDissimKind; 10] = [
        CatDissimKind::Matching,
        CatDissimKind::Eskin,
        CatDissimKind::Of,
        CatDissimKind::Iof,
        CatDissimKind::IndicatorPlain,
        CatDissimKind::IndicatorHl,
        CatDissimKind::IndicatorSd,
        CatDissimKind::IndicatorCds,
        CatDissimKind::KlAssoc,
        CatDissimKind::TvdAssoc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CatDissimKind::Matching => "matching",
            CatDissimKind::Eskin => "eskin",
            CatDissimKind::Of => "of",
            CatDissimKind::Iof => "iof",
            CatDissimKind::IndicatorPlain => "indicator_plain",
            CatDissimKind::IndicatorHl => "indicator_hl",
            CatDissimKind::IndicatorSd => "indicator_sd",
            CatDissimKind::IndicatorCds => "indicator_cds",
            CatDissimKind::KlAssoc => "kl_assoc",
            CatDissimKind::TvdAssoc => "tvd_assoc",
        }
    }

    /// Whether the construction depends on other variables in the dataset.
    pub fn is_association_based(self) -> bool {
        matches!(self, CatDissimKind::KlAssoc | CatDissimKind::TvdAssoc)
    }
}

impl std::str::FromStr for CatDissimKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CatDissimKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = CatDissimKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!(
                    "unknown dissimilarity '{s}'; expected one of: {}",
                    known.join(", ")
                ))
            })
    }
}

/// Symmetric q×q matrix of pairwise category dissimilarities, zero on the
/// diagonal and nonnegative off it.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryDissimilarity {
    delta: Matrix,
}

impl CategoryDissimilarity {
    /// Validate and wrap a raw matrix.
    pub fn new(delta: Matrix) -> Result<Self> {
        if !delta.is_square() || delta.rows() < 2 {
            return Err(Error::Degenerate(
                "category dissimilarity must be square with q >= 2".into(),
            ));
        }
        let q = delta.rows();
        for a in 0..q {
            if delta[(a, a)] != 0.0 {
                return Err(Error::Degenerate(format!(
                    "category dissimilarity diagonal entry {a} is {}, expected 0",
                    delta[(a, a)]
                )));
            }
            for b in 0..q {
                let v = delta[(a, b)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Degenerate(format!(
                        "category dissimilarity entry ({a}, {b}) is {v}"
                    )));
                }
                if delta[(b, a)] != v {
                    return Err(Error::Degenerate(format!(
                        "category dissimilarity not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self { delta })
    }

    /// Build from a function of the level pair (a, b), a ≠ b; the diagonal
    /// is zero and symmetry comes from evaluating each unordered pair once.
    fn from_off_diag(q: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut delta = Matrix::zeros(q, q);
        for a in 0..q {
            for b in (a + 1)..q {
                let v = f(a, b);
                delta[(a, b)] = v;
                delta[(b, a)] = v;
            }
        }
        Self::new(delta)
    }

    pub fn q(&self) -> usize {
        self.delta.rows()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.delta[(a, b)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.delta
    }

    /// The dissimilarity after relabeling categories: entry (a, b) becomes
    /// the old entry (perm[a], perm[b]). Exact (entries are moved, not
    /// recomputed).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let q = self.q();
        assert_eq!(perm.len(), q, "permutation length must equal q");
        let delta = Matrix::from_fn(q, q, |a, b| self.delta[(perm[a], perm[b])]);
        Self { delta }
    }

    /// Pairwise mean under proportions p: pᵀ Δ p.
    pub fn quadratic_form(&self, p: &[f64]) -> f64 {
        let q = self.q();
        assert_eq!(p.len(), q, "proportion length must equal q");
        let mut total = 0.0;
        for a in 0..q {
            let mut row = 0.0;
            for b in 0..q {
                row += self.delta[(a, b)] * p[b];
            }
            total += p[a] * row;
        }
        total
    }
}

/// Simple matching: 1 for differing categories, 0 otherwise.
pub fn matching(q: usize) -> Result<CategoryDissimilarity> {
    CategoryDissimilarity::from_off_diag(q, |_, _| 1.0)
}

/// Eskin: mismatch weighted down by 2/q², so variables with many
/// categories contribute less per mismatch.
pub fn eskin(q: usize) -> Result<CategoryDissimilarity> {
    let v = 2.0 / (q * q) as f64;
    CategoryDissimilarity::from_off_diag(q, |_, _| v)
}

/// Occurrence frequency: δ_ab = ln(p_a)·ln(p_b) for a ≠ b. Both logs are
/// negative, so the product is positive; rare level pairs score high.
pub fn of_dissim(p: &[f64]) -> Result<CategoryDissimilarity> {
    check_open_proportions(p, false)?;
    let logs: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    CategoryDissimilarity::from_off_diag(p.len(), |a, b| logs[a] * logs[b])
}

/// Inverse occurrence frequency: δ_ab = ln(n·p_a)·ln(n·p_b) for a ≠ b.
/// Requires every expected count n·p_a ≥ 1; below that the log turns
/// negative and products lose their dissimilarity meaning.
pub fn iof_dissim(p: &[f64], n: usize) -> Result<CategoryDissimilarity> {
    check_open_proportions(p, false)?;
    let mut logs = Vec::with_capacity(p.len());
    for (a, &pa) in p.iter().enumerate() {
        let np = n as f64 * pa;
        if np < 1.0 {
            return Err(Error::IofGuard {
                level: a.to_string(),
                np,
            });
        }
        logs.push(np.ln());
    }
    CategoryDissimilarity::from_off_diag(p.len(), |a, b| logs[a] * logs[b])
}

/// Plain indicator distance: squared Euclidean distance between one-hot
/// rows, i.e. 2 × matching.
pub fn indicator_plain(q: usize) -> Result<CategoryDissimilarity> {
    CategoryDissimilarity::from_off_diag(q, |_, _| 2.0)
}

/// Hennig–Liao scaling factor η = √(φ·T/B) with T = n(n+1)/2,
/// W = Σ_a n_a(n_a+1)/2, B = T − W. Balances the variance contribution of
/// an indicator block against a numeric variable.
pub fn hl_factor(counts: &[usize], phi: f64) -> Result<f64> {
    if !(phi > 0.0) {
        return Err(Error::Config(format!("phi must be positive, got {phi}")));
    }
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    let t = n * (n + 1) / 2;
    let w: u64 = counts.iter().map(|&c| (c as u64) * (c as u64 + 1) / 2).sum();
    let b = t - w;
    if b == 0 {
        return Err(Error::Degenerate(
            "Hennig-Liao factor undefined: all observations share one category".into(),
        ));
    }
    Ok((phi * t as f64 / b as f64).sqrt())
}

/// Indicator distance with Hennig–Liao scaling: 2η × matching.
pub fn indicator_hl(q: usize, eta: f64) -> Result<CategoryDissimilarity> {
    let v = 2.0 * eta;
    CategoryDissimilarity::from_off_diag(q, |_, _| v)
}

/// Indicator columns scaled by the inverse standard deviation of each
/// category: δ_ab = √(1/q)·(s_a^{-1/2} + s_b^{-1/2}) with s_a = p_a(1−p_a).
pub fn indicator_sd(p: &[f64]) -> Result<CategoryDissimilarity> {
    check_open_proportions(p, true)?;
    let q = p.len() as f64;
    let inv_sd: Vec<f64> = p.iter().map(|&pa| 1.0 / (pa * (1.0 - pa)).sqrt()).collect();
    CategoryDissimilarity::from_off_diag(p.len(), |a, b| {
        (1.0 / q).sqrt() * (inv_sd[a] + inv_sd[b])
    })
}

/// Category-dissimilarity scaling: δ_ab = (1/q)·(s_a·s_b)^{-1/2} with
/// s_a = p_a(1−p_a). Calibrated so pᵀΔp = 1 at uniform proportions.
pub fn indicator_cds(p: &[f64]) -> Result<CategoryDissimilarity> {
    check_open_proportions(p, true)?;
    let q = p.len() as f64;
    let s: Vec<f64> = p.iter().map(|&pa| pa * (1.0 - pa)).collect();
    CategoryDissimilarity::from_off_diag(p.len(), |a, b| 1.0 / (q * (s[a] * s[b]).sqrt()))
}

/// Conditional distributions of one categorical variable given another:
/// row a holds the distribution of the partner variable over observations
/// whose conditioning variable equals category a.
#[derive(Debug, Clone)]
pub struct ConditionalMatrix {
    rows: Matrix,
}

impl ConditionalMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.cols()
    }

    pub fn get(&self, a: usize, l: usize) -> f64 {
        self.rows[(a, l)]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        self.rows.row(a)
    }

    /// Wrap a row-stochastic matrix (rows must sum to 1 within 1e-12).
    pub fn from_rows(rows: Matrix) -> Result<Self> {
        for a in 0..rows.rows() {
            let sum: f64 = rows.row(a).iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Degenerate(format!(
                    "conditional matrix row {a} sums to {sum}, expected 1"
                )));
            }
            if rows.row(a).iter().any(|&v| v < 0.0) {
                return Err(Error::Degenerate(format!(
                    "conditional matrix row {a} has a negative entry"
                )));
            }
        }
        Ok(Self { rows })
    }
}

/// Conditional matrix from two indicator matrices over the same
/// observations: (Z_jᵀZ_j)^{-1} Z_jᵀZ_k. Z_jᵀZ_j is the diagonal of
/// category counts and Z_jᵀZ_k the cross tabulation, so row a is the
/// empirical distribution of the partner variable within category a.
pub fn conditional_rows(zj: &Matrix, zk: &Matrix) -> Result<ConditionalMatrix> {
    assert_eq!(
        zj.rows(),
        zk.rows(),
        "indicator matrices must cover the same observations"
    );
    let (n, qj, qk) = (zj.rows(), zj.cols(), zk.cols());
    let mut crosstab = Matrix::zeros(qj, qk);
    let mut counts = vec![0u64; qj];
    for i in 0..n {
        // One-hot rows: the single 1-entry is located exactly.
        let a = zj.row(i).iter().position(|&v| v == 1.0).expect("one-hot row");
        let l = zk.row(i).iter().position(|&v| v == 1.0).expect("one-hot row");
        crosstab[(a, l)] += 1.0;
        counts[a] += 1;
    }
    for a in 0..qj {
        if counts[a] == 0 {
            return Err(Error::Degenerate(format!(
                "conditioning category {a} has no observations"
            )));
        }
        for l in 0..qk {
            crosstab[(a, l)] /= counts[a] as f64;
        }
    }
    ConditionalMatrix::from_rows(crosstab)
}

/// Sum in ascending order so the result does not depend on how the
/// summands were indexed; relabeling the conditioning categories then
/// leaves the dissimilarity bit-identical.
fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Symmetric Kullback–Leibler dissimilarity between conditional rows:
/// δ_ab = Σ_l [r_al·log₂(r_al/r_bl) + r_bl·log₂(r_bl/r_al)]. Terms with a
/// zero multiplier contribute 0; a zero inside a log ratio is replaced by
/// `epsilon` without renormalizing the row.
pub fn kl_dissim(r: &ConditionalMatrix, epsilon: f64) -> Result<CategoryDissimilarity> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "KL epsilon must be positive, got {epsilon}"
        )));
    }
    let term = |u: f64, v: f64| -> f64 {
        if u == 0.0 {
            0.0
        } else {
            u * (u / if v == 0.0 { epsilon } else { v }).log2()
        }
    };
    CategoryDissimilarity::from_off_diag(r.n_rows(), |a, b| {
        canonical_sum(
            (0..r.n_cols())
                .map(|l| term(r.get(a, l), r.get(b, l)) + term(r.get(b, l), r.get(a, l)))
                .collect(),
        )
    })
}

/// Total-variation dissimilarity between conditional rows:
/// δ_ab = ½·Σ_l |r_al − r_bl|, always in [0, 1].
pub fn tvd_dissim(r: &ConditionalMatrix) -> Result<CategoryDissimilarity> {
    CategoryDissimilarity::from_off_diag(r.n_rows(), |a, b| {
        0.5 * canonical_sum(
            (0..r.n_cols())
                .map(|l| (r.get(a, l) - r.get(b, l)).abs())
                .collect(),
        )
    })
}

/// Association kernel used by [`aggregate_assoc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssocKernel {
    Kl,
    Tvd,
}

/// Association-based dissimilarity for categorical column `j`: the
/// unweighted mean, over every other categorical column k, of the kernel
/// applied to the conditional rows of k given j. Requires at least one
/// partner column.
pub fn aggregate_assoc(
    dataset: &MixedDataset,
    j: usize,
    kernel: AssocKernel,
    kl_epsilon: f64,
) -> Result<CategoryDissimilarity> {
    let (codes_j, levels_j) = match &dataset.column(j).data {
        ColumnData::Categorical { codes, levels } => (codes, levels),
        ColumnData::Numeric(_) => {
            return Err(Error::Config(format!(
                "column '{}' is numeric; association dissimilarities need a categorical column",
                dataset.column(j).name
            )))
        }
    };
    let qj = levels_j.len();
    let zj = indicator(codes_j, qj);
    let partners: Vec<usize> = dataset
        .categorical_indices()
        .into_iter()
        .filter(|&k| k != j)
        .collect();
    if partners.is_empty() {
        return Err(Error::NoAssociationPartner);
    }

    let mut sum = Matrix::zeros(qj, qj);
    for &k in &partners {
        let (codes_k, levels_k) = match &dataset.column(k).data {
            ColumnData::Categorical { codes, levels } => (codes, levels),
            ColumnData::Numeric(_) => unreachable!("categorical_indices returns categoricals"),
        };
        let zk = indicator(codes_k, levels_k.len());
        let r = conditional_rows(&zj, &zk)?;
        let pairwise = match kernel {
            AssocKernel::Kl => kl_dissim(&r, kl_epsilon)?,
            AssocKernel::Tvd => tvd_dissim(&r)?,
        };
        for a in 0..qj {
            for b in 0..qj {
                sum[(a, b)] += pairwise.get(a, b);
            }
        }
    }
    let m = partners.len() as f64;
    CategoryDissimilarity::new(Matrix::from_fn(qj, qj, |a, b| sum[(a, b)] / m))
}

/// Build the dissimilarity of the given kind for categorical column `j`.
pub fn build_dissim(
    dataset: &MixedDataset,
    j: usize,
    kind: CatDissimKind,
    phi: f64,
    kl_epsilon: f64,
) -> Result<CategoryDissimilarity> {
    let column = dataset.column(j);
    let (codes, levels) = match &column.data {
        ColumnData::Categorical { codes, levels } => (codes, levels),
        ColumnData::Numeric(_) => {
            return Err(Error::Config(format!(
                "column '{}' is numeric; cannot build a category dissimilarity",
                column.name
            )))
        }
    };
    let q = levels.len();
    match kind {
        CatDissimKind::Matching => matching(q),
        CatDissimKind::Eskin => eskin(q),
        CatDissimKind::Of => of_dissim(&proportions(codes, levels, &column.name)?),
        CatDissimKind::Iof => iof_dissim(
            &proportions(codes, levels, &column.name)?,
            dataset.n_rows(),
        ),
        CatDissimKind::IndicatorPlain => indicator_plain(q),
        CatDissimKind::IndicatorHl => {
            let counts = level_counts(codes, q);
            indicator_hl(q, hl_factor(&counts, phi)?)
        }
        CatDissimKind::IndicatorSd => indicator_sd(&proportions(codes, levels, &column.name)?),
        CatDissimKind::IndicatorCds => indicator_cds(&proportions(codes, levels, &column.name)?),
        CatDissimKind::KlAssoc => aggregate_assoc(dataset, j, AssocKernel::Kl, kl_epsilon),
        CatDissimKind::TvdAssoc => aggregate_assoc(dataset, j, AssocKernel::Tvd, kl_epsilon),
    }
}

fn check_open_proportions(p: &[f64], strict_upper: bool) -> Result<()> {
    if p.len() < 2 {
        return Err(Error::Degenerate(
            "proportions must cover at least two categories".into(),
        ));
    }
    for (a, &pa) in p.iter().enumerate() {
        if pa <= 0.0 {
            return Err(Error::Degenerate(format!(
                "category {a} has proportion {pa}; positive proportions required"
            )));
        }
        if strict_upper && pa >= 1.0 {
            return Err(Error::Degenerate(format!(
                "category {a} has proportion {pa}; proportions below 1 required"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, MixedDataset};
    use proptest::prelude::*;

    fn cat(name: &str, codes: &[usize], q: usize) -> Column {
        let levels: Vec<String> = (0..q).map(|a| format!("L{a}")).collect();
        Column::categorical(name, codes.to_vec(), levels)
    }

    #[test]
    fn matching_is_zero_one() {
        let d = matching(3).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(d.get(a, b), if a == b { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn eskin_scales_mismatch_by_two_over_q_squared() {
        assert_eq!(eskin(2).unwrap().get(0, 1), 0.5);
        assert_eq!(eskin(5).unwrap().get(0, 1), 0.08);
    }

    #[test]
    fn of_small_examples() {
        let d = of_dissim(&[0.5, 0.5]).unwrap();
        assert!((d.get(0, 1) - 0.4804530139182014).abs() < 1e-15);
        let d = of_dissim(&[0.25, 0.75]).unwrap();
        assert!((d.get(0, 1) - 0.3988120348351877).abs() < 1e-15);
    }

    #[test]
    fn of_rejects_zero_proportion() {
        assert!(of_dissim(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn iof_small_example() {
        // n=8, p=(0.25, 0.75): counts 2 and 6.
        let d = iof_dissim(&[0.25, 0.75], 8).unwrap();
        assert!((d.get(0, 1) - 1.2419530243370103).abs() < 1e-15);
    }

    #[test]
    fn iof_guards_expected_count_below_one() {
        let err = iof_dissim(&[0.125, 0.875], 4).unwrap_err();
        match err {
            Error::IofGuard { level, np } => {
                assert_eq!(level, "0");
                assert!((np - 0.5).abs() < 1e-15);
            }
            other => panic!("expected the IOF guard, got {other:?}"),
        }
    }

    #[test]
    fn indicator_plain_doubles_matching() {
        let plain = indicator_plain(4).unwrap();
        let m = matching(4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(plain.get(a, b), 2.0 * m.get(a, b));
            }
        }
    }

    #[test]
    fn hl_factor_small_counts() {
        // counts (1,1,1): T=6, W=3, B=3, eta = sqrt(0.5*2) = 1.
        assert_eq!(hl_factor(&[1, 1, 1], 0.5).unwrap(), 1.0);
        // counts (2,2): T=10, W=6, B=4, eta = sqrt(1.25).
        assert!((hl_factor(&[2, 2], 0.5).unwrap() - 1.118033988749895).abs() < 1e-15);
    }

    #[test]
    fn hl_factor_matches_both_limits() {
        // n = q with one observation per category: sqrt(phi (q+1)/(q-1)), exact.
        for q in 2..=10usize {
            let counts = vec![1usize; q];
            let eta = hl_factor(&counts, 0.5).unwrap();
            let limit = (0.5 * (q as f64 + 1.0) / (q as f64 - 1.0)).sqrt();
            assert_eq!(eta, limit, "q = {q}");
        }
        // Large balanced n approaches sqrt(phi q/(q-1)).
        let eta = hl_factor(&[500, 500], 0.5).unwrap();
        assert!((eta - 1.000499875062461).abs() < 1e-15);
        assert!((eta - 1.0).abs() < 2e-3);
    }

    #[test]
    fn hl_factor_rejects_single_occupied_category() {
        assert!(hl_factor(&[3, 0], 0.5).is_err());
        assert!(hl_factor(&[7], 0.5).is_err());
    }

    #[test]
    fn indicator_hl_is_two_eta_matching() {
        let d = indicator_hl(2, 1.0).unwrap();
        assert_eq!(d.get(0, 1), 2.0);
        let d = indicator_hl(3, 1.5).unwrap();
        assert_eq!(d.get(0, 2), 3.0);
    }

    #[test]
    fn indicator_sd_examples() {
        // Uniform q=2: s=1/4, delta = sqrt(1/2)*(2+2) = 2*sqrt(2).
        let d = indicator_sd(&[0.5, 0.5]).unwrap();
        assert!((d.get(0, 1) - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-14);
        let d = indicator_sd(&[0.25, 0.75]).unwrap();
        assert!((d.get(0, 1) - 3.2659863237109046).abs() < 1e-14);
    }

    #[test]
    fn indicator_cds_examples() {
        // Uniform: off-diagonal q/(q-1), expected value exactly 1.
        for q in 2..=6usize {
            let p = vec![1.0 / q as f64; q];
            let d = indicator_cds(&p).unwrap();
            assert!((d.get(0, 1) - q as f64 / (q as f64 - 1.0)).abs() < 1e-12);
            assert!((d.quadratic_form(&p) - 1.0).abs() < 1e-12);
        }
        let d = indicator_cds(&[0.25, 0.75]).unwrap();
        assert!((d.get(0, 1) - 2.6666666666666665).abs() < 1e-14);
    }

    #[test]
    fn cds_expectation_at_skewed_proportions() {
        // q = 2 is special: s_0 = s_1 = p0*p1, so p'Δp = 1 for every p.
        let p2 = [0.9, 0.1];
        let d2 = indicator_cds(&p2).unwrap();
        assert!((d2.quadratic_form(&p2) - 1.0).abs() < 1e-12);
        // From q = 3 on, skewed proportions break the calibration.
        let p3 = [0.9, 0.05, 0.05];
        let d3 = indicator_cds(&p3).unwrap();
        assert!((d3.quadratic_form(&p3) - 1.0).abs() > 1e-2);
    }

    #[test]
    fn degenerate_proportions_rejected() {
        assert!(indicator_sd(&[1.0, 0.0]).is_err());
        assert!(indicator_cds(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn conditional_rows_self_is_identity() {
        let z = indicator(&[0, 1, 2, 1, 0], 3);
        let r = conditional_rows(&z, &z).unwrap();
        for a in 0..3 {
            for l in 0..3 {
                assert_eq!(r.get(a, l), if a == l { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn conditional_rows_of_independent_variables_match_the_marginal() {
        // Balanced product table: every (a, l) combination appears once.
        let codes_j = [0, 0, 0, 1, 1, 1];
        let codes_k = [0, 1, 2, 0, 1, 2];
        let r = conditional_rows(&indicator(&codes_j, 2), &indicator(&codes_k, 3)).unwrap();
        for a in 0..2 {
            for l in 0..3 {
                assert!((r.get(a, l) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn conditional_rows_sum_to_one() {
        let zj = indicator(&[0, 1, 0, 1, 1, 0, 1], 2);
        let zk = indicator(&[2, 0, 1, 1, 0, 2, 2], 3);
        let r = conditional_rows(&zj, &zk).unwrap();
        for a in 0..2 {
            let sum: f64 = (0..3).map(|l| r.get(a, l)).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_rows_reject_empty_conditioning_category() {
        // Declared q=3 for j but category 2 never observed.
        let zj = indicator(&[0, 1, 0], 3);
        let zk = indicator(&[0, 1, 1], 2);
        assert!(conditional_rows(&zj, &zk).is_err());
    }

    #[test]
    fn kl_of_identical_rows_is_zero() {
        let r = ConditionalMatrix::from_rows(Matrix::from_rows(&[
            vec![0.3, 0.7],
            vec![0.3, 0.7],
        ]))
        .unwrap();
        assert_eq!(kl_dissim(&r, DEFAULT_KL_EPSILON).unwrap().get(0, 1), 0.0);
    }

    #[test]
    fn kl_under_perfect_dependence() {
        // Rows e1, e2: both directions contribute log2(1/eps), giving
        // 2*log2(1e5) = 10*log2(10).
        let r = ConditionalMatrix::from_rows(Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ]))
        .unwrap();
        let d = kl_dissim(&r, DEFAULT_KL_EPSILON).unwrap();
        assert!((d.get(0, 1) - 33.219280948873624).abs() < 1e-12);
    }

    #[test]
    fn kl_partial_overlap_example() {
        // Rows (2/3, 1/3, 0) and (0, 1/3, 2/3): the shared middle mass
        // cancels, each side contributes (2/3)*log2((2/3)/eps).
        let r = ConditionalMatrix::from_rows(Matrix::from_rows(&[
            vec![2.0 / 3.0, 1.0 / 3.0, 0.0],
            vec![0.0, 1.0 / 3.0, 2.0 / 3.0],
        ]))
        .unwrap();
        let d = kl_dissim(&r, DEFAULT_KL_EPSILON).unwrap();
        assert!((d.get(0, 1) - 21.366237298287537).abs() < 1e-12);
    }

    #[test]
    fn tvd_examples() {
        let r = ConditionalMatrix::from_rows(Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ]))
        .unwrap();
        assert_eq!(tvd_dissim(&r).unwrap().get(0, 1), 1.0);

        let r = ConditionalMatrix::from_rows(Matrix::from_rows(&[
            vec![0.5, 0.3, 0.2],
            vec![0.5, 0.3, 0.2],
        ]))
        .unwrap();
        assert_eq!(tvd_dissim(&r).unwrap().get(0, 1), 0.0);
    }

    #[test]
    fn aggregate_with_two_variables_equals_the_single_pairwise_dissim() {
        let dataset = MixedDataset::new(vec![
            cat("a", &[0, 0, 1, 1, 0, 1], 2),
            cat("b", &[0, 1, 1, 2, 2, 0], 3),
        ])
        .unwrap();
        let agg = aggregate_assoc(&dataset, 0, AssocKernel::Tvd, DEFAULT_KL_EPSILON).unwrap();
        let r = conditional_rows(&indicator(&[0, 0, 1, 1, 0, 1], 2), &indicator(&[0, 1, 1, 2, 2, 0], 3))
            .unwrap();
        let single = tvd_dissim(&r).unwrap();
        assert_eq!(agg.get(0, 1), single.get(0, 1));
    }

    #[test]
    fn aggregate_with_three_variables_is_the_mean_of_the_pairs() {
        let codes_a = [0usize, 0, 1, 1, 0, 1, 1, 0];
        let codes_b = [0usize, 1, 1, 2, 2, 0, 1, 2];
        let codes_c = [1usize, 0, 0, 1, 1, 0, 0, 1];
        let dataset = MixedDataset::new(vec![
            cat("a", &codes_a, 2),
            cat("b", &codes_b, 3),
            cat("c", &codes_c, 2),
        ])
        .unwrap();
        let agg = aggregate_assoc(&dataset, 0, AssocKernel::Tvd, DEFAULT_KL_EPSILON).unwrap();

        let za = indicator(&codes_a, 2);
        let with_b = tvd_dissim(&conditional_rows(&za, &indicator(&codes_b, 3)).unwrap()).unwrap();
        let with_c = tvd_dissim(&conditional_rows(&za, &indicator(&codes_c, 2)).unwrap()).unwrap();
        let mean = 0.5 * (with_b.get(0, 1) + with_c.get(0, 1));
        assert!((agg.get(0, 1) - mean).abs() < 1e-15);
    }

    #[test]
    fn aggregate_requires_a_partner() {
        let dataset = MixedDataset::new(vec![
            cat("only", &[0, 1, 0, 1], 2),
            Column::numeric("x", vec![1.0, 2.0, 3.0, 4.0]),
        ])
        .unwrap();
        let err = aggregate_assoc(&dataset, 0, AssocKernel::Tvd, DEFAULT_KL_EPSILON).unwrap_err();
        assert!(matches!(err, Error::NoAssociationPartner));
    }

    #[test]
    fn permuted_moves_entries_exactly() {
        let d = of_dissim(&[0.2, 0.3, 0.5]).unwrap();
        let p = d.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0, 1), d.get(2, 0));
        assert_eq!(p.get(1, 2), d.get(0, 1));
        assert_eq!(p.get(0, 0), 0.0);
    }

    fn proportion_strategy() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(1.0f64..50.0, 2..7).prop_map(|raw| {
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
    }

    proptest! {
        #[test]
        fn constructors_return_valid_dissimilarities(p in proportion_strategy()) {
            let q = p.len();
            let built = [
                matching(q).unwrap(),
                eskin(q).unwrap(),
                of_dissim(&p).unwrap(),
                indicator_plain(q).unwrap(),
                indicator_sd(&p).unwrap(),
                indicator_cds(&p).unwrap(),
            ];
            for d in &built {
                for a in 0..q {
                    prop_assert_eq!(d.get(a, a), 0.0);
                    for b in 0..q {
                        prop_assert!(d.get(a, b) >= 0.0);
                        prop_assert_eq!(d.get(a, b), d.get(b, a));
                    }
                }
            }
        }

        #[test]
        fn tvd_is_bounded_by_one(rows in proptest::collection::vec(
            proptest::collection::vec(0.01f64..1.0, 4), 2..5,
        )) {
            let normalized: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.iter().map(|v| v / s).collect()
                })
                .collect();
            let r = ConditionalMatrix::from_rows(Matrix::from_rows(&normalized)).unwrap();
            let d = tvd_dissim(&r).unwrap();
            for a in 0..r.n_rows() {
                for b in 0..r.n_rows() {
                    prop_assert!(d.get(a, b) <= 1.0 + 1e-12);
                }
            }
        }
    }
}
