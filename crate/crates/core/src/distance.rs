//! Assembly of mixed distances from per-variable terms.
//!
//! The additive distance between observations i and l is
//! `d(i, l) = Σ_j w_j · δ_j(i, l)`, with one term per variable: numeric
//! terms are absolute differences of scaled values, categorical terms are
//! category-dissimilarity lookups (equivalently Z Δ Zᵀ). The weights make
//! variables commensurable: `w_j = 1/E[d_j]`, estimated empirically from
//! the sample or taken from analytic expected values.
//!
//! Principal-component scaling is a whole-block transform, so under it the
//! numeric terms are the rotated components rather than the original
//! columns; the per-term ledger names them `pc_1`, `pc_2`, ….
//!
//! Besides the configurable additive engine, the benchmark distances used
//! for comparison live here: Gower, naive Euclidean on the standardized
//! one-hot matrix, and the two Hennig–Liao constructions. The Euclidean
//! ones are not additive over variables and therefore return a bare
//! matrix without a term ledger.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catdissim::{
    self, CatDissimKind, CategoryDissimilarity, DEFAULT_KL_EPSILON, DEFAULT_PHI,
};
use crate::data::{indicator, level_counts, proportions, ColumnData, ColumnKind, MixedDataset};
use crate::error::{Error, Result};
use crate::expected::{cat_expected, normal_mean, uniform_mean};
use crate::linalg::Matrix;
use crate::scaling::{self, NumericScaling};

/// Distribution declared for a numeric column so its expected pair
/// distance can be taken from a closed form instead of the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclaredDistribution {
    Uniform,
    Normal,
}

impl DeclaredDistribution {
    /// Closed-form expected pair distance under the scaling, if one exists.
    pub fn closed_form(self, scaling: NumericScaling) -> Option<f64> {
        match self {
            DeclaredDistribution::Uniform => uniform_mean(scaling),
            DeclaredDistribution::Normal => normal_mean(scaling),
        }
    }
}

/// How per-term weights are chosen. Fixed weights replace the weight mode
/// entirely, so the two cannot be combined by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    /// Every term gets weight 1 (no commensurability correction).
    Unit,
    /// w = 1 / (sample mean distance over ordered pairs), per term.
    Empirical,
    /// w = 1 / (analytic expected distance): closed forms for declared
    /// numeric distributions, pᵀΔp for categorical terms.
    Theoretical,
    /// Explicit per-term weights, keyed by term name.
    Fixed(BTreeMap<String, f64>),
}

/// Full configuration of the additive mixed distance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceConfig {
    /// Scaling for numeric columns without an override.
    pub numeric_scaling: NumericScaling,
    /// Dissimilarity for categorical columns without an override.
    pub cat_dissim: CatDissimKind,
    /// Per-column scaling overrides.
    pub numeric_overrides: BTreeMap<String, NumericScaling>,
    /// Per-column dissimilarity overrides.
    pub cat_overrides: BTreeMap<String, CatDissimKind>,
    /// Weight selection.
    pub weights: WeightSpec,
    /// Hennig–Liao φ.
    pub phi: f64,
    /// Zero replacement inside Kullback–Leibler log ratios.
    pub kl_epsilon: f64,
    /// Declared distributions for theoretical numeric weights, by column.
    pub declared: BTreeMap<String, DeclaredDistribution>,
    /// Keep the per-term contribution matrices on the result.
    pub keep_contributions: bool,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            numeric_scaling: NumericScaling::Sd,
            cat_dissim: CatDissimKind::Matching,
            numeric_overrides: BTreeMap::new(),
            cat_overrides: BTreeMap::new(),
            weights: WeightSpec::Unit,
            phi: DEFAULT_PHI,
            kl_epsilon: DEFAULT_KL_EPSILON,
            declared: BTreeMap::new(),
            keep_contributions: false,
        }
    }
}

impl DistanceConfig {
    pub fn new(
        numeric_scaling: NumericScaling,
        cat_dissim: CatDissimKind,
        weights: WeightSpec,
    ) -> Self {
        DistanceConfig {
            numeric_scaling,
            cat_dissim,
            weights,
            ..DistanceConfig::default()
        }
    }

    /// Gower: range-scaled numerics, simple matching, unit weights.
    pub fn gower() -> Self {
        Self::new(
            NumericScaling::Range,
            CatDissimKind::Matching,
            WeightSpec::Unit,
        )
    }

    /// Additive Hennig–Liao: z-scores plus scaled indicator mismatch,
    /// unit weights.
    pub fn hl_additive() -> Self {
        Self::new(
            NumericScaling::Sd,
            CatDissimKind::IndicatorHl,
            WeightSpec::Unit,
        )
    }

    /// Unbiased distance treating variables as independent: z-scores,
    /// simple matching, empirical commensurability weights.
    pub fn unbiased_independent() -> Self {
        Self::new(
            NumericScaling::Sd,
            CatDissimKind::Matching,
            WeightSpec::Empirical,
        )
    }

    /// Unbiased distance with standardized category dissimilarities.
    pub fn unbiased_standardized() -> Self {
        Self::new(
            NumericScaling::Sd,
            CatDissimKind::IndicatorCds,
            WeightSpec::Empirical,
        )
    }

    /// Unbiased distance acknowledging dependence: principal-component
    /// scaling and association-based category dissimilarities.
    pub fn unbiased_dependent() -> Self {
        Self::new(
            NumericScaling::Pc,
            CatDissimKind::TvdAssoc,
            WeightSpec::Empirical,
        )
    }

    fn numeric_kind_for(&self, column: &str) -> NumericScaling {
        self.numeric_overrides
            .get(column)
            .copied()
            .unwrap_or(self.numeric_scaling)
    }

    fn cat_kind_for(&self, column: &str) -> CatDissimKind {
        self.cat_overrides
            .get(column)
            .copied()
            .unwrap_or(self.cat_dissim)
    }

    /// Whether the numeric block uses principal-component scaling. Pc is a
    /// whole-block transform, so mixing it with per-column scalings is
    /// rejected.
    fn resolve_pc_mode(&self, dataset: &MixedDataset) -> Result<bool> {
        let kinds: Vec<NumericScaling> = dataset
            .numeric_indices()
            .into_iter()
            .map(|j| self.numeric_kind_for(&dataset.column(j).name))
            .collect();
        let pc_count = kinds
            .iter()
            .filter(|k| **k == NumericScaling::Pc)
            .count();
        if pc_count == 0 {
            Ok(false)
        } else if pc_count == kinds.len() {
            Ok(true)
        } else {
            Err(Error::Config(
                "pc scaling is a whole-block transform; it cannot be mixed with \
                 per-column scalings on the same dataset"
                    .into(),
            ))
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.phi > 0.0) {
            return Err(Error::Config(format!(
                "phi must be positive, got {}",
                self.phi
            )));
        }
        if !(self.kl_epsilon > 0.0) {
            return Err(Error::Config(format!(
                "kl_epsilon must be positive, got {}",
                self.kl_epsilon
            )));
        }
        if let WeightSpec::Fixed(map) = &self.weights {
            for (name, w) in map {
                if !w.is_finite() || *w <= 0.0 {
                    return Err(Error::Config(format!(
                        "fixed weight for '{name}' must be a positive number, got {w}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Where a term came from; carries what the weight computation needs.
enum TermSource {
    Numeric {
        scaling: NumericScaling,
    },
    PcComponent,
    Categorical {
        column: usize,
        delta: CategoryDissimilarity,
    },
}

struct Term {
    name: String,
    method: &'static str,
    source: TermSource,
    contribution: Matrix,
}

/// Scalar summary of one additive term.
#[derive(Debug, Clone, Serialize)]
pub struct TermSummary {
    /// Column name, or `pc_k` for principal components.
    pub term: String,
    pub kind: ColumnKind,
    /// Scaling or dissimilarity name.
    pub method: String,
    pub weight: f64,
    /// Mean ordered-pair distance of the weighted contribution; 1 for
    /// every term under empirical weights.
    pub weighted_mean: f64,
}

/// An assembled additive distance matrix with its term ledger.
#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub matrix: Matrix,
    pub terms: Vec<TermSummary>,
    /// Unweighted per-term contribution matrices, aligned with `terms`;
    /// present when the config asked to keep them.
    pub contributions: Option<Vec<Matrix>>,
}

/// Per-pair contributions of a scaled numeric column: |f_i − f_l|.
pub fn numeric_contrib(scaled: &[f64]) -> Matrix {
    Matrix::from_fn(scaled.len(), scaled.len(), |i, l| {
        (scaled[i] - scaled[l]).abs()
    })
}

/// Per-pair contributions of a categorical column: entry (i, l) is
/// δ(code_i, code_l). This is Z Δ Zᵀ unrolled over the one-hot rows; the
/// matrix product selects exactly one δ entry per pair, so lookup and
/// product agree bit for bit.
pub fn categorical_contrib(codes: &[usize], delta: &CategoryDissimilarity) -> Matrix {
    Matrix::from_fn(codes.len(), codes.len(), |i, l| {
        delta.get(codes[i], codes[l])
    })
}

/// Mean distance over ordered pairs i ≠ l (divisor n(n−1)). Row sums are
/// accumulated first and then combined, keeping the rounding error far
/// below commensurability tolerances even at n in the thousands.
pub fn mean_pair_distance(d: &Matrix) -> f64 {
    let n = d.rows();
    assert!(n >= 2, "pair distances need at least two observations");
    let mut total = 0.0;
    for i in 0..n {
        let row = d.row(i);
        let mut row_sum = 0.0;
        for (l, v) in row.iter().enumerate() {
            if l != i {
                row_sum += v;
            }
        }
        total += row_sum;
    }
    total / (n as f64 * (n as f64 - 1.0))
}

/// Assemble the additive mixed distance for a dataset under a config.
pub fn mixed_distance(dataset: &MixedDataset, config: &DistanceConfig) -> Result<DistanceResult> {
    config.validate()?;
    let n = dataset.n_rows();
    let pc_mode = config.resolve_pc_mode(dataset)?;

    // Terms in dataset column order; under pc scaling the whole numeric
    // block enters as components at the first numeric column's position.
    let mut terms: Vec<Term> = Vec::new();
    let mut pc_emitted = false;
    for (j, column) in dataset.columns().iter().enumerate() {
        match &column.data {
            ColumnData::Numeric(values) => {
                if pc_mode {
                    if !pc_emitted {
                        pc_emitted = true;
                        let pc = scaling::pc_scale(&numeric_block(dataset))?;
                        for k in 0..pc.scores.cols() {
                            let component: Vec<f64> =
                                (0..n).map(|i| pc.scores[(i, k)]).collect();
                            terms.push(Term {
                                name: format!("pc_{}", k + 1),
                                method: NumericScaling::Pc.name(),
                                source: TermSource::PcComponent,
                                contribution: numeric_contrib(&component),
                            });
                        }
                    }
                } else {
                    let kind = config.numeric_kind_for(&column.name);
                    let scaled = scaling::scale_column(kind, values, &column.name)?;
                    terms.push(Term {
                        name: column.name.clone(),
                        method: kind.name(),
                        source: TermSource::Numeric { scaling: kind },
                        contribution: numeric_contrib(&scaled),
                    });
                }
            }
            ColumnData::Categorical { codes, .. } => {
                let kind = config.cat_kind_for(&column.name);
                let delta =
                    catdissim::build_dissim(dataset, j, kind, config.phi, config.kl_epsilon)?;
                terms.push(Term {
                    name: column.name.clone(),
                    method: kind.name(),
                    source: TermSource::Categorical {
                        column: j,
                        delta: delta.clone(),
                    },
                    contribution: categorical_contrib(codes, &delta),
                });
            }
        }
    }

    // Weights.
    let mut weights = Vec::with_capacity(terms.len());
    for term in &terms {
        let w = match &config.weights {
            WeightSpec::Unit => 1.0,
            WeightSpec::Empirical => {
                let mean = mean_pair_distance(&term.contribution);
                if mean == 0.0 {
                    return Err(Error::Degenerate(format!(
                        "term '{}' has zero mean pair distance; empirical weighting undefined",
                        term.name
                    )));
                }
                1.0 / mean
            }
            WeightSpec::Theoretical => 1.0 / theoretical_expected(dataset, config, term)?,
            WeightSpec::Fixed(map) => *map.get(&term.name).ok_or_else(|| {
                Error::Config(format!("fixed weights missing term '{}'", term.name))
            })?,
        };
        weights.push(w);
    }
    if let WeightSpec::Fixed(map) = &config.weights {
        for name in map.keys() {
            if !terms.iter().any(|t| t.name == *name) {
                return Err(Error::Config(format!(
                    "fixed weight refers to unknown term '{name}'"
                )));
            }
        }
    }

    // Assemble the total in term order with a fixed summation order.
    let mut matrix = Matrix::zeros(n, n);
    for (term, &w) in terms.iter().zip(&weights) {
        for i in 0..n {
            let src = term.contribution.row(i);
            let dst = matrix.row_mut(i);
            for l in 0..n {
                dst[l] += w * src[l];
            }
        }
    }

    let summaries = terms
        .iter()
        .zip(&weights)
        .map(|(term, &w)| TermSummary {
            term: term.name.clone(),
            kind: match term.source {
                TermSource::Categorical { .. } => ColumnKind::Categorical,
                _ => ColumnKind::Numeric,
            },
            method: term.method.to_owned(),
            weight: w,
            weighted_mean: w * mean_pair_distance(&term.contribution),
        })
        .collect();

    let contributions = config
        .keep_contributions
        .then(|| terms.into_iter().map(|t| t.contribution).collect());

    Ok(DistanceResult {
        matrix,
        terms: summaries,
        contributions,
    })
}

/// Analytic expected pair distance for one term, used by theoretical
/// weighting.
fn theoretical_expected(
    dataset: &MixedDataset,
    config: &DistanceConfig,
    term: &Term,
) -> Result<f64> {
    match &term.source {
        TermSource::Numeric { scaling } => {
            let declared = config.declared.get(&term.name).ok_or_else(|| {
                Error::Config(format!(
                    "theoretical weights need a declared distribution for numeric column '{}'",
                    term.name
                ))
            })?;
            declared.closed_form(*scaling).ok_or_else(|| {
                Error::Config(format!(
                    "no closed-form expected distance for a {} column under {} scaling",
                    match declared {
                        DeclaredDistribution::Uniform => "uniform",
                        DeclaredDistribution::Normal => "normal",
                    },
                    scaling.name()
                ))
            })
        }
        TermSource::PcComponent => Err(Error::Config(
            "no closed-form expected distance for principal components; \
             use empirical weights"
                .into(),
        )),
        TermSource::Categorical { column, delta } => {
            let col = dataset.column(*column);
            let (codes, levels) = col.as_categorical().expect("categorical term");
            let p = proportions(codes, levels, &col.name)?;
            let expected = cat_expected(&p, delta);
            if expected == 0.0 {
                return Err(Error::Degenerate(format!(
                    "term '{}' has zero expected distance; theoretical weighting undefined",
                    term.name
                )));
            }
            Ok(expected)
        }
    }
}

/// Numeric columns of the dataset as a matrix, in dataset column order.
fn numeric_block(dataset: &MixedDataset) -> Matrix {
    let indices = dataset.numeric_indices();
    Matrix::from_fn(dataset.n_rows(), indices.len(), |i, k| {
        dataset.column(indices[k]).as_numeric().expect("numeric")[i]
    })
}

/// Gower distance: range-scaled numerics plus simple matching, summed
/// with unit weights (no division by the number of variables).
pub fn gower_distance(dataset: &MixedDataset) -> Result<DistanceResult> {
    mixed_distance(dataset, &DistanceConfig::gower())
}

/// Additive Hennig–Liao distance: Manhattan on z-scores plus 2η-scaled
/// mismatch, unit weights.
pub fn hl_additive(dataset: &MixedDataset, phi: f64) -> Result<DistanceResult> {
    let mut config = DistanceConfig::hl_additive();
    config.phi = phi;
    mixed_distance(dataset, &config)
}

/// Euclidean distance on the complete standardized matrix: numeric
/// columns and indicator columns alike are z-scored, then pairs are
/// compared by the Euclidean norm. Not additive over variables.
pub fn naive_euclidean(dataset: &MixedDataset) -> Result<Matrix> {
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for column in dataset.columns() {
        match &column.data {
            ColumnData::Numeric(values) => {
                columns.push(scaling::sd_scale(values, &column.name)?);
            }
            ColumnData::Categorical { codes, levels } => {
                let z = indicator(codes, levels.len());
                for (a, level) in levels.iter().enumerate() {
                    let raw: Vec<f64> = (0..codes.len()).map(|i| z[(i, a)]).collect();
                    let label = format!("{}={}", column.name, level);
                    columns.push(scaling::sd_scale(&raw, &label)?);
                }
            }
        }
    }
    Ok(euclidean_from_columns(&columns, dataset.n_rows()))
}

/// Euclidean distance with Hennig–Liao scaling: z-scored numerics and
/// indicator columns multiplied by the per-variable factor η. Not
/// additive over variables.
pub fn hl_euclidean(dataset: &MixedDataset, phi: f64) -> Result<Matrix> {
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for column in dataset.columns() {
        match &column.data {
            ColumnData::Numeric(values) => {
                columns.push(scaling::sd_scale(values, &column.name)?);
            }
            ColumnData::Categorical { codes, levels } => {
                let counts = level_counts(codes, levels.len());
                let eta = catdissim::hl_factor(&counts, phi)?;
                let z = indicator(codes, levels.len());
                for a in 0..levels.len() {
                    columns.push((0..codes.len()).map(|i| eta * z[(i, a)]).collect());
                }
            }
        }
    }
    Ok(euclidean_from_columns(&columns, dataset.n_rows()))
}

fn euclidean_from_columns(columns: &[Vec<f64>], n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, l| {
        columns
            .iter()
            .map(|c| {
                let d = c[i] - c[l];
                d * d
            })
            .sum::<f64>()
            .sqrt()
    })
}
