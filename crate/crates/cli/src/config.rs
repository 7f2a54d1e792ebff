//! Run configuration: JSON config file plus command-line overrides.
//!
//! Every field can live in the config file; a flag with the same meaning
//! wins. The `distance` block carries a full engine configuration for
//! runs that need more than a named preset.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use mixdist::catdissim::CatDissimKind;
use mixdist::data::{load_csv_path, ColumnKind, MixedDataset, Schema};
use mixdist::distance::{DistanceConfig, WeightSpec};
use mixdist::error::{Error, Result};
use mixdist::scaling::NumericScaling;
use mixdist::variant::VariantKind;

/// Contents of a JSON config file. All fields optional; flags override.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    /// column name → "numeric" | "categorical"
    pub schema: Option<BTreeMap<String, ColumnKind>>,
    /// named preset; ignored when `distance` is present
    pub variant: Option<String>,
    /// "none" | "empirical" | "theoretical"
    pub weights: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    /// full engine configuration, replacing the preset
    pub distance: Option<DistanceConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))
    }
}

/// What a run computes distances with: a named preset (optionally with
/// its weight mode overridden) or a custom engine configuration.
#[derive(Debug, Clone)]
pub enum DistanceChoice {
    Preset {
        kind: VariantKind,
        weights: Option<WeightSpec>,
    },
    Custom(DistanceConfig),
}

/// Fully resolved run settings, after merging file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub schema: Schema,
    pub choice: DistanceChoice,
    pub out: PathBuf,
    /// Worker-pool cap from the config file; the --threads flag wins.
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn dataset(&self) -> Result<MixedDataset> {
        load_csv_path(&self.input, &self.schema)
    }
}

/// Parse an inline schema: "height:numeric,foot:categorical".
pub fn parse_schema_flag(text: &str) -> Result<Vec<(String, ColumnKind)>> {
    let mut entries = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let (name, kind) = piece.split_once(':').ok_or_else(|| {
            Error::Config(format!(
                "schema entry '{piece}' must be 'name:numeric' or 'name:categorical'"
            ))
        })?;
        let kind = match kind.trim() {
            "numeric" => ColumnKind::Numeric,
            "categorical" => ColumnKind::Categorical,
            other => {
                return Err(Error::Config(format!(
                    "unknown column kind '{other}' for '{name}'; \
                     expected numeric or categorical"
                )))
            }
        };
        entries.push((name.trim().to_owned(), kind));
    }
    if entries.is_empty() {
        return Err(Error::Config("schema has no columns".into()));
    }
    Ok(entries)
}

/// Parse the --weights flag into a weight mode.
pub fn parse_weights_flag(text: &str) -> Result<WeightSpec> {
    match text {
        "none" => Ok(WeightSpec::Unit),
        "empirical" => Ok(WeightSpec::Empirical),
        "theoretical" => Ok(WeightSpec::Theoretical),
        other => Err(Error::Config(format!(
            "unknown weight mode '{other}'; expected none, empirical, or theoretical"
        ))),
    }
}

/// Flags shared by the dataset-consuming subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Input data CSV (first row header)
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Column types, e.g. "height:numeric,foot:categorical"
    #[arg(long, value_name = "SPEC")]
    pub schema: Option<String>,
    /// Distance preset: numerical, naive, hl_euclidean, hl_additive,
    /// gower, unbiased_independent, unbiased_standardized, or
    /// unbiased_dependent
    #[arg(long, value_name = "NAME")]
    pub variant: Option<String>,
    /// Weight mode override: none, empirical, or theoretical
    #[arg(long, value_name = "MODE")]
    pub weights: Option<String>,
    /// Base seed for any randomness
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory (created if missing)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    /// Merge file config and flags into resolved run settings.
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let input = self
            .input
            .clone()
            .or(file.input)
            .ok_or_else(|| Error::Config("no input file; pass --input or set it in the config".into()))?;

        let schema = match (&self.schema, &file.schema) {
            (Some(flag), _) => Schema::new(parse_schema_flag(flag)?),
            (None, Some(map)) => {
                Schema::new(map.iter().map(|(n, k)| (n.clone(), *k)).collect())
            }
            (None, None) => {
                return Err(Error::Config(
                    "no schema; pass --schema or set it in the config".into(),
                ))
            }
        };

        // A full engine config beats a preset; flags beat the file.
        let weights = match self.weights.clone().or(file.weights) {
            Some(mode) => Some(parse_weights_flag(&mode)?),
            None => None,
        };
        let variant_name = self.variant.clone().or(file.variant);
        let choice = match (&file.distance, variant_name) {
            (Some(config), _) => {
                let mut config = config.clone();
                if let Some(w) = weights {
                    config.weights = w;
                }
                DistanceChoice::Custom(config)
            }
            (None, name) => {
                let kind = match name {
                    Some(name) => name.parse()?,
                    None => VariantKind::UnbiasedIndependent,
                };
                DistanceChoice::Preset { kind, weights }
            }
        };

        // The dataset commands are fully deterministic; the seed is
        // accepted for interface uniformity but nothing draws from it.
        let _ = self.seed.or(file.seed);

        Ok(RunConfig {
            input,
            schema,
            choice,
            out: self.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            threads: file.threads,
        })
    }
}

/// The engine configuration behind an additive preset. The Euclidean
/// presets have no additive form, so weight overrides cannot apply.
pub fn preset_config(kind: VariantKind) -> Result<DistanceConfig> {
    match kind {
        VariantKind::Numerical => Ok(DistanceConfig::new(
            NumericScaling::Sd,
            CatDissimKind::Matching,
            WeightSpec::Empirical,
        )),
        VariantKind::Gower => Ok(DistanceConfig::gower()),
        VariantKind::HlAdditive => Ok(DistanceConfig::hl_additive()),
        VariantKind::UnbiasedIndependent => Ok(DistanceConfig::unbiased_independent()),
        VariantKind::UnbiasedStandardized => Ok(DistanceConfig::unbiased_standardized()),
        VariantKind::UnbiasedDependent => Ok(DistanceConfig::unbiased_dependent()),
        VariantKind::Naive | VariantKind::HlEuclidean => Err(Error::Config(format!(
            "the {} preset is not additive; weight modes do not apply",
            kind.name()
        ))),
    }
}
