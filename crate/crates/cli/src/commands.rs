//! The five subcommand implementations.
//!
//! Each command reads its inputs, computes through the library, and
//! writes fixed-name files into the output directory, reporting every
//! path it wrote on stdout. Warnings go to stderr; errors propagate to
//! `main` for single-line reporting.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use mixdist::analysis::{
    classical_mds, loo_distance_importance_with, loo_mds_importance_with, ImportanceReport,
};
use mixdist::catdissim::{CatDissimKind, DEFAULT_KL_EPSILON, DEFAULT_PHI};
use mixdist::data::{ColumnKind, MixedDataset};
use mixdist::distance::{mixed_distance, TermSummary};
use mixdist::error::{Error, Result};
use mixdist::export::{
    format_significant, write_condensed_csv, write_coordinates_csv, write_importance_csv,
    write_records_csv, write_square_csv, write_summaries_csv, EXPORT_DIGITS,
};
use mixdist::expected::{
    default_skew_grid, monte_carlo_reference, skew_profile, uniform_reference_table,
};
use mixdist::simulation::{run_retrieval, run_variable_effects, summarize, EffectRecord};
use mixdist::variant::{variant_distance, VariantKind, VariantOutput};

use crate::config::{preset_config, DistanceChoice, RunConfig};

/// Round to the export precision so JSON numbers match the CSVs.
fn sig(value: f64) -> f64 {
    format_significant(value, EXPORT_DIGITS)
        .parse()
        .expect("formatted float parses back")
}

/// Create the output directory (if needed) and return `dir/name`.
fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

/// Open `dir/name` for buffered writing.
fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = out_path(dir, name)?;
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

fn report_written(path: &Path) {
    println!("wrote {}", path.display());
}

/// Compute the configured distance on a dataset: a preset (with its
/// weight mode possibly overridden) or a custom engine configuration.
pub fn compute_distance(dataset: &MixedDataset, choice: &DistanceChoice) -> Result<VariantOutput> {
    match choice {
        DistanceChoice::Preset {
            kind,
            weights: None,
        } => variant_distance(dataset, *kind, DEFAULT_PHI, DEFAULT_KL_EPSILON),
        DistanceChoice::Preset {
            kind,
            weights: Some(weights),
        } => {
            // The numeric-only preset keeps its domain restriction even
            // when only the weight mode changes.
            if *kind == VariantKind::Numerical {
                if let Some(column) = dataset
                    .columns()
                    .iter()
                    .find(|c| c.kind() == ColumnKind::Categorical)
                {
                    return Err(Error::Config(format!(
                        "the numerical preset needs all-numeric data; '{}' is categorical",
                        column.name
                    )));
                }
            }
            let mut config = preset_config(*kind)?;
            config.weights = weights.clone();
            let result = mixed_distance(dataset, &config)?;
            Ok(VariantOutput {
                matrix: result.matrix,
                terms: Some(result.terms),
            })
        }
        DistanceChoice::Custom(config) => {
            let result = mixed_distance(dataset, config)?;
            Ok(VariantOutput {
                matrix: result.matrix,
                terms: Some(result.terms),
            })
        }
    }
}

/// The label a run's distance choice goes by in summaries.
fn choice_label(choice: &DistanceChoice) -> String {
    match choice {
        DistanceChoice::Preset { kind, .. } => kind.name().to_owned(),
        DistanceChoice::Custom(_) => "custom".to_owned(),
    }
}

#[derive(Serialize)]
struct TermJson {
    term: String,
    kind: ColumnKind,
    method: String,
    weight: f64,
    weighted_mean: f64,
}

impl TermJson {
    fn from_summary(t: &TermSummary) -> Self {
        TermJson {
            term: t.term.clone(),
            kind: t.kind,
            method: t.method.clone(),
            weight: sig(t.weight),
            weighted_mean: sig(t.weighted_mean),
        }
    }
}

#[derive(Serialize)]
struct DistSummary {
    variant: String,
    n_rows: usize,
    n_variables: usize,
    /// Per-term weight and weighted mean pair distance; absent for the
    /// Euclidean presets, which have no additive decomposition.
    terms: Option<Vec<TermJson>>,
}

/// `dist`: write the pairwise distance matrix and a JSON summary.
pub fn cmd_dist(run: &RunConfig, condensed: bool) -> Result<()> {
    let dataset = run.dataset()?;
    let output = compute_distance(&dataset, &run.choice)?;

    let (path, writer) = create(&run.out, "distances.csv")?;
    write_square_csv(&output.matrix, writer)?;
    report_written(&path);

    if condensed {
        let (path, writer) = create(&run.out, "distances_condensed.csv")?;
        write_condensed_csv(&output.matrix, writer)?;
        report_written(&path);
    }

    let summary = DistSummary {
        variant: choice_label(&run.choice),
        n_rows: dataset.n_rows(),
        n_variables: dataset.n_columns(),
        terms: output
            .terms
            .as_ref()
            .map(|ts| ts.iter().map(TermJson::from_summary).collect()),
    };
    let path = out_path(&run.out, "summary.json")?;
    let mut text = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Config(format!("summary serialization: {e}")))?;
    text.push('\n');
    fs::write(&path, text)?;
    report_written(&path);
    Ok(())
}

/// Negative eigenvalue mass below this is rounding noise, not a sign
/// the distances fail to embed.
const NEGATIVE_MASS_WARN: f64 = 1e-8;

/// `mds`: write k-dimensional coordinates and the eigenvalue spectrum.
pub fn cmd_mds(run: &RunConfig, k: usize) -> Result<()> {
    let dataset = run.dataset()?;
    let output = compute_distance(&dataset, &run.choice)?;
    let solution = classical_mds(&output.matrix, k)?;

    if solution.negative_mass > NEGATIVE_MASS_WARN {
        eprintln!(
            "warning: distances are not Euclidean; negative eigenvalue mass {}",
            format_significant(solution.negative_mass, 6)
        );
    }
    if solution.padded {
        eprintln!(
            "warning: only {} of {k} requested dimensions are supported; \
             remaining coordinates are zero",
            solution.used_dimensions
        );
    }

    let (path, writer) = create(&run.out, "coordinates.csv")?;
    write_coordinates_csv(&solution.coordinates, writer)?;
    report_written(&path);

    let path = out_path(&run.out, "eigenvalues.csv")?;
    let mut text = String::from("dimension,eigenvalue\n");
    for (i, value) in solution.eigenvalues.iter().enumerate() {
        text.push_str(&format!(
            "{},{}\n",
            i + 1,
            format_significant(*value, EXPORT_DIGITS)
        ));
    }
    fs::write(&path, text)?;
    report_written(&path);
    Ok(())
}

/// Which leave-one-out effect `importance` measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ImportanceMetric {
    /// Mean absolute change of the pair distances.
    Distance,
    /// Alienation between the recovered k-dimensional configurations.
    Mds,
}

/// `importance`: leave-one-out variable importance as CSV (and JSON on
/// request).
pub fn cmd_importance(
    run: &RunConfig,
    metric: ImportanceMetric,
    k: usize,
    json: bool,
) -> Result<()> {
    let dataset = run.dataset()?;
    let compute = |d: &MixedDataset| Ok(compute_distance(d, &run.choice)?.matrix);
    let report: ImportanceReport = match metric {
        ImportanceMetric::Distance => loo_distance_importance_with(&dataset, compute)?,
        ImportanceMetric::Mds => loo_mds_importance_with(&dataset, k, compute)?,
    };

    let (path, writer) = create(&run.out, "importance.csv")?;
    write_importance_csv(&report, writer)?;
    report_written(&path);

    if json {
        #[derive(Serialize)]
        struct EntryJson {
            variable: String,
            absolute: f64,
            relative: f64,
        }
        #[derive(Serialize)]
        struct ReportJson {
            metric: &'static str,
            entries: Vec<EntryJson>,
        }
        let rounded = ReportJson {
            metric: report.metric,
            entries: report
                .entries
                .iter()
                .map(|e| EntryJson {
                    variable: e.variable.clone(),
                    absolute: sig(e.absolute),
                    relative: sig(e.relative),
                })
                .collect(),
        };
        let path = out_path(&run.out, "importance.json")?;
        let mut text = serde_json::to_string_pretty(&rounded)
            .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
        text.push('\n');
        fs::write(&path, text)?;
        report_written(&path);
    }
    Ok(())
}

/// The reference tables `tables` can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableKind {
    /// Monte-Carlo means of scaled numeric pair distances per
    /// distribution shape.
    NumericMc,
    /// Expected categorical distances under uniform proportions.
    UniformExpected,
    /// Expected distance of one dissimilarity along a skew grid.
    SkewProfile,
}

/// Parameters for `tables`, shared across the three table kinds; each
/// kind reads the subset it needs.
pub struct TableParams {
    pub n: usize,
    pub reps: usize,
    pub q: usize,
    pub phi: f64,
    pub kl_epsilon: f64,
    pub dissim: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
}

/// `tables`: write one reference table as CSV.
pub fn cmd_tables(which: TableKind, params: &TableParams) -> Result<()> {
    match which {
        TableKind::NumericMc => {
            let cells = monte_carlo_reference(params.n, params.reps, params.seed)?;
            let path = out_path(&params.out, "numeric_mc.csv")?;
            let mut text = String::from("distribution,scaling,mean,sd\n");
            for cell in &cells {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    cell.distribution.name(),
                    cell.scaling.name(),
                    format_significant(cell.mean, EXPORT_DIGITS),
                    format_significant(cell.sd, EXPORT_DIGITS)
                ));
            }
            fs::write(&path, text)?;
            report_written(&path);
        }
        TableKind::UniformExpected => {
            let entries =
                uniform_reference_table(params.q, params.n, params.phi, params.kl_epsilon)?;
            let path = out_path(&params.out, "uniform_expected.csv")?;
            let mut text = String::from("dissim,expected\n");
            for entry in &entries {
                text.push_str(&format!(
                    "{},{}\n",
                    entry.dissim,
                    format_significant(entry.expected, EXPORT_DIGITS)
                ));
            }
            fs::write(&path, text)?;
            report_written(&path);
        }
        TableKind::SkewProfile => {
            let kind: CatDissimKind = params
                .dissim
                .as_deref()
                .ok_or_else(|| {
                    Error::Config("skew-profile needs --dissim (e.g. --dissim matching)".into())
                })?
                .parse()?;
            let grid = default_skew_grid();
            let points = skew_profile(
                params.q,
                kind,
                params.n,
                params.phi,
                params.kl_epsilon,
                &grid,
            )?;
            let path = out_path(&params.out, "skew_profile.csv")?;
            let mut text = String::from("p1,expected\n");
            for point in &points {
                let expected = match point.expected {
                    Some(v) => format_significant(v, EXPORT_DIGITS),
                    None => String::new(),
                };
                text.push_str(&format!(
                    "{},{}\n",
                    format_significant(point.p1, EXPORT_DIGITS),
                    expected
                ));
            }
            fs::write(&path, text)?;
            report_written(&path);
        }
    }
    Ok(())
}

/// The two simulation studies `simulate` can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StudyKind {
    /// Leave-one-out importance of every variable under every variant.
    VariableEffects,
    /// Alienation of each variant's recovered configuration from the
    /// planted one, across category counts.
    Retrieval,
}

/// Parameters for `simulate`.
pub struct SimulateParams {
    pub reps: usize,
    pub n: usize,
    pub p: usize,
    pub cats: Vec<usize>,
    pub q: Vec<usize>,
    pub seed: u64,
    pub summarize: bool,
    pub out: PathBuf,
}

/// `simulate`: run one study and write tidy records (plus summaries on
/// request).
pub fn cmd_simulate(study: StudyKind, params: &SimulateParams) -> Result<()> {
    let records: Vec<EffectRecord> = match study {
        StudyKind::VariableEffects => run_variable_effects(
            params.reps,
            params.n,
            params.p,
            &params.cats,
            params.seed,
        )?,
        StudyKind::Retrieval => {
            let mut all = Vec::new();
            for &q in &params.q {
                all.extend(run_retrieval(
                    params.reps,
                    params.n,
                    q,
                    params.seed,
                    &VariantKind::ALL,
                )?);
            }
            all
        }
    };

    let (path, writer) = create(&params.out, "records.csv")?;
    write_records_csv(&records, writer)?;
    report_written(&path);

    if params.summarize {
        let summaries = summarize(&records);
        let (path, writer) = create(&params.out, "summaries.csv")?;
        write_summaries_csv(&summaries, writer)?;
        report_written(&path);
    }
    Ok(())
}

/// Build the worker pool before any computation; zero keeps the
/// default (all available cores).
pub fn init_threads(threads: Option<usize>) -> Result<()> {
    let Some(threads) = threads else { return Ok(()) };
    if threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_rounds_to_export_precision() {
        assert_eq!(sig(1.0), 1.0);
        assert_eq!(sig(0.1234567890123456), 0.123456789012);
    }

    #[test]
    fn thread_flag_zero_is_rejected() {
        assert!(init_threads(Some(0)).is_err());
    }
}
