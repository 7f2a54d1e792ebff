//! Named distance variants: the configurations compared throughout the
//! simulation studies, exposed as presets for the CLI and the analyses.
//!
//! Six of the eight are additive and therefore carry a per-term ledger;
//! the naive Euclidean and Hennig–Liao Euclidean distances mix variables
//! inside a square root and return a bare matrix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::MixedDataset;
use crate::distance::{self, DistanceConfig, TermSummary};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// The eight benchmark distance constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    /// z-scores with empirical weights on an all-numeric dataset; the
    /// reference when undiscretized data are available.
    Numerical,
    /// Euclidean distance after z-scoring every column of the one-hot
    /// expanded matrix, indicators included.
    Naive,
    /// Euclidean distance with Hennig–Liao η-scaled indicators.
    HlEuclidean,
    /// Additive Hennig–Liao: Manhattan z-scores plus 2η mismatch.
    HlAdditive,
    /// Range-scaled numerics plus simple matching, unit weights.
    Gower,
    /// Unbiased distance, variables treated as independent.
    UnbiasedIndependent,
    /// Unbiased distance with standardized category dissimilarities.
    UnbiasedStandardized,
    /// Unbiased distance acknowledging dependence between variables.
    UnbiasedDependent,
}

impl VariantKind {
    pub const ALL: [VariantKind; 8] = [
        VariantKind::Numerical,
        VariantKind::Naive,
        VariantKind::HlEuclidean,
        VariantKind::HlAdditive,
        VariantKind::Gower,
        VariantKind::UnbiasedIndependent,
        VariantKind::UnbiasedStandardized,
        VariantKind::UnbiasedDependent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantKind::Numerical => "numerical",
            VariantKind::Naive => "naive",
            VariantKind::HlEuclidean => "hl_euclidean",
            VariantKind::HlAdditive => "hl_additive",
            VariantKind::Gower => "gower",
            VariantKind::UnbiasedIndependent => "unbiased_independent",
            VariantKind::UnbiasedStandardized => "unbiased_standardized",
            VariantKind::UnbiasedDependent => "unbiased_dependent",
        }
    }

    /// Whether the variant decomposes into per-variable terms.
    pub fn is_additive(self) -> bool {
        !matches!(self, VariantKind::Naive | VariantKind::HlEuclidean)
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VariantKind::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = VariantKind::ALL.iter().map(|v| v.name()).collect();
                Error::Config(format!(
                    "unknown variant '{s}'; expected one of: {}",
                    known.join(", ")
                ))
            })
    }
}

/// A variant's distance matrix, with the term ledger when additive.
#[derive(Debug, Clone)]
pub struct VariantOutput {
    pub matrix: Matrix,
    pub terms: Option<Vec<TermSummary>>,
}

/// Compute one of the benchmark distances on a dataset.
pub fn variant_distance(
    dataset: &MixedDataset,
    kind: VariantKind,
    phi: f64,
    kl_epsilon: f64,
) -> Result<VariantOutput> {
    let additive_config = |mut config: DistanceConfig| {
        config.phi = phi;
        config.kl_epsilon = kl_epsilon;
        config
    };
    match kind {
        VariantKind::Numerical => {
            if let Some(&j) = dataset.categorical_indices().first() {
                return Err(Error::Config(format!(
                    "the numerical variant needs an all-numeric dataset; \
                     column '{}' is categorical",
                    dataset.column(j).name
                )));
            }
            let config = additive_config(DistanceConfig::new(
                crate::scaling::NumericScaling::Sd,
                crate::catdissim::CatDissimKind::Matching,
                distance::WeightSpec::Empirical,
            ));
            let result = distance::mixed_distance(dataset, &config)?;
            Ok(VariantOutput {
                matrix: result.matrix,
                terms: Some(result.terms),
            })
        }
        VariantKind::Naive => Ok(VariantOutput {
            matrix: distance::naive_euclidean(dataset)?,
            terms: None,
        }),
        VariantKind::HlEuclidean => Ok(VariantOutput {
            matrix: distance::hl_euclidean(dataset, phi)?,
            terms: None,
        }),
        VariantKind::HlAdditive
        | VariantKind::Gower
        | VariantKind::UnbiasedIndependent
        | VariantKind::UnbiasedStandardized
        | VariantKind::UnbiasedDependent => {
            let config = additive_config(match kind {
                VariantKind::HlAdditive => DistanceConfig::hl_additive(),
                VariantKind::Gower => DistanceConfig::gower(),
                VariantKind::UnbiasedIndependent => DistanceConfig::unbiased_independent(),
                VariantKind::UnbiasedStandardized => DistanceConfig::unbiased_standardized(),
                VariantKind::UnbiasedDependent => DistanceConfig::unbiased_dependent(),
                _ => unreachable!(),
            });
            let result = distance::mixed_distance(dataset, &config)?;
            Ok(VariantOutput {
                matrix: result.matrix,
                terms: Some(result.terms),
            })
        }
    }
}
