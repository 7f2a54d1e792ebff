//! Commensurable distances for mixed numerical and categorical data.
//!
//! Off-the-shelf mixed-data distances (Gower, one-hot Euclidean) let the
//! measurement type dictate how much each variable matters: a variable
//! split into many categories, or one with a heavy-tailed distribution,
//! can quietly dominate every downstream clustering or embedding. This
//! crate builds distances that are additive over variables and weighted
//! so that every variable contributes the same expected amount — making
//! numerical and categorical variables commensurable by construction.
//!
//! The distance between observations i and l is
//!
//! ```text
//! d(i, l) = Σ_j w_j · δ_j(i, l)
//! ```
//!
//! where δ_j is an absolute difference of scaled values for numeric
//! variables, a category dissimilarity for categorical ones, and
//! `w_j = 1 / E[δ_j]` with the expectation estimated from the sample or
//! taken from a closed form.
//!
//! Module map:
//!
//! - [`data`]: typed columns, CSV ingestion, discretization.
//! - [`scaling`]: numeric scalings (z-score, range, robust range,
//!   principal components).
//! - [`catdissim`]: category dissimilarity matrices, from simple matching
//!   to association-based constructions.
//! - [`distance`]: the additive engine, weights, and the Euclidean
//!   benchmark distances.
//! - [`variant`]: the eight named benchmark configurations.
//! - [`expected`]: closed-form and simulated expected distances.
//! - [`analysis`]: classical MDS, alienation, leave-one-out importance.
//! - [`simulation`]: replicated studies on planted low-dimensional data.
//! - [`export`]: CSV output with fixed significant digits.
//!
//! # Example
//!
//! ```
//! use mixdist::data::{load_csv, ColumnKind, Schema};
//! use mixdist::distance::{mixed_distance, DistanceConfig};
//!
//! let csv = "\
//! height,foot
//! 1.80,left
//! 1.65,right
//! 1.72,left
//! 1.90,right
//! ";
//! let schema = Schema::new(vec![
//!     ("height".into(), ColumnKind::Numeric),
//!     ("foot".into(), ColumnKind::Categorical),
//! ]);
//! let dataset = load_csv(csv.as_bytes(), &schema)?;
//! let result = mixed_distance(&dataset, &DistanceConfig::unbiased_independent())?;
//!
//! // Both variables now contribute one unit on average.
//! for term in &result.terms {
//!     assert!((term.weighted_mean - 1.0).abs() < 1e-12);
//! }
//! assert_eq!(result.matrix.rows(), 4);
//! # Ok::<(), mixdist::Error>(())
//! ```

pub mod analysis;
pub mod catdissim;
pub mod data;
pub mod distance;
pub mod error;
pub mod export;
pub mod expected;
pub mod linalg;
pub mod scaling;
pub mod simulation;
pub mod variant;

pub use data::{load_csv, load_csv_path, Column, ColumnKind, MixedDataset, Schema};
pub use distance::{mixed_distance, DistanceConfig, DistanceResult, WeightSpec};
pub use error::{Error, Result};
pub use variant::{variant_distance, VariantKind};
