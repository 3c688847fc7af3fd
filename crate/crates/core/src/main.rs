use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use esda_mobility::ingest::DateWindow;
use esda_mobility::pipeline::{
    cmd_indicator, cmd_ingest, cmd_moran, cmd_render, cmd_weights, Level, RenderTarget, RunConfig, RunReport, Variable,
    WeightsFormat,
};
use esda_mobility::spatial::{Contiguity, Sidedness};
use esda_mobility::Error;

const SEED_ENV: &str = "ESDA_MOBILITY_SEED";

#[derive(Debug, Parser)]
#[command(name = "esda-mobility", version, about = "Mobility-report circulation indicator and spatial autocorrelation")]
struct Cli {
    /// TOML or JSON run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Permutation seed (falls back to the config, then $ESDA_MOBILITY_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Monte Carlo permutations (default 999).
    #[arg(long, global = true)]
    permutations: Option<usize>,
    /// queen | rook
    #[arg(long, global = true)]
    contiguity: Option<Contiguity>,
    /// LISA significance level (default 0.05).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Mobility report CSV.
    #[arg(long)]
    mobility: Option<PathBuf>,
    /// Restrict to one ISO country code.
    #[arg(long)]
    country: Option<String>,
    /// Skip and report bad rows instead of failing.
    #[arg(long)]
    lenient: bool,
    /// First day of the analysis window (YYYY-MM-DD).
    #[arg(long)]
    analysis_start: Option<NaiveDate>,
    /// Last day of the analysis window, inclusive.
    #[arg(long)]
    analysis_end: Option<NaiveDate>,
    /// Baseline window used for the report percentages.
    #[arg(long)]
    baseline_start: Option<NaiveDate>,
    #[arg(long)]
    baseline_end: Option<NaiveDate>,
    /// national | subregion
    #[arg(long)]
    level: Option<Level>,
}

#[derive(Debug, Args)]
struct GeometryArgs {
    /// GeoJSON FeatureCollection of region polygons.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Feature property holding the region id.
    #[arg(long)]
    id_property: Option<String>,
    /// Vertex snapping tolerance in coordinate units.
    #[arg(long)]
    snap_tol: Option<f64>,
    /// Link islands to their k nearest neighbors.
    #[arg(long)]
    island_knn: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, filter and impute a mobility report.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Daily radar-area circulation indicator per region.
    Indicator {
        #[command(flatten)]
        data: DataArgs,
        /// Region id, sub-region name or country code (repeatable).
        #[arg(long = "region")]
        regions: Vec<String>,
        /// Add an STL-deseasonalized indicator column.
        #[arg(long)]
        deseasonalize: bool,
        /// Add the STL trend instead of trend + remainder.
        #[arg(long)]
        trend_only: bool,
        /// Deseasonalize each category before computing the indicator.
        #[arg(long)]
        deseasonalize_inputs: bool,
        /// Use 15 robustness iterations in STL.
        #[arg(long)]
        robust_stl: bool,
        /// Draw residential as its negation (more time at home = less circulation).
        #[arg(long)]
        invert_residential: bool,
        /// Comma-separated category keys, clockwise from the top.
        #[arg(long)]
        axis_order: Option<String>,
        /// Radar center C (percent, <= -100).
        #[arg(long, allow_hyphen_values = true)]
        center: Option<f64>,
    },
    /// Global Moran's I, scatterplot and LISA maps per variable.
    Moran {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        geometry: GeometryArgs,
        /// categories | indicator
        #[arg(long)]
        variable: Option<Variable>,
        /// folded | greater | less | two_sided
        #[arg(long)]
        sidedness: Option<Sidedness>,
    },
    /// Contiguity weights from polygons.
    Weights {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// text | json
        #[arg(long)]
        format: Option<WeightsFormat>,
        #[arg(long)]
        row_standardize: bool,
    },
    /// Redraw figures from exported results.
    Render {
        #[command(subcommand)]
        target: RenderCmd,
    },
}

#[derive(Debug, Subcommand)]
enum RenderCmd {
    /// Choropleth of one numeric column of a results CSV.
    Choropleth {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        values: PathBuf,
        #[arg(long)]
        column: String,
    },
    /// Cluster and significance maps from a LISA CSV.
    Lisa {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long)]
        lisa: PathBuf,
    },
    /// Radar chart of six comma-separated percent changes.
    Radar {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long)]
        axis_order: Option<String>,
        #[arg(long)]
        invert_residential: bool,
    },
}

fn file_sets_key(path: &Path, key: &str) -> bool {
    let Ok(text) = std::fs::read_to_string(path) else {
        return false;
    };
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str::<serde_json::Value>(&text).is_ok_and(|v| v.get(key).is_some())
    } else {
        toml::from_str::<toml::Table>(&text).is_ok_and(|t| t.contains_key(key))
    }
}

fn window(current: DateWindow, start: Option<NaiveDate>, end: Option<NaiveDate>) -> DateWindow {
    DateWindow {
        start: start.unwrap_or(current.start),
        end: end.unwrap_or(current.end),
    }
}

fn apply_data(cfg: &mut RunConfig, d: DataArgs) {
    cfg.mobility = d.mobility.or(cfg.mobility.take());
    cfg.country = d.country.or(cfg.country.take());
    cfg.lenient |= d.lenient;
    cfg.analysis = window(cfg.analysis, d.analysis_start, d.analysis_end);
    cfg.baseline = window(cfg.baseline, d.baseline_start, d.baseline_end);
    cfg.level = d.level.or(cfg.level);
}

fn apply_geometry(cfg: &mut RunConfig, g: GeometryArgs) {
    cfg.geometry = g.geometry.or(cfg.geometry.take());
    if let Some(p) = g.id_property {
        cfg.id_property = p;
    }
    cfg.snap_tol = g.snap_tol.unwrap_or(cfg.snap_tol);
    cfg.island_knn = g.island_knn.unwrap_or(cfg.island_knn);
}

fn run(cli: Cli) -> Result<RunReport, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed_in_file = cli.config.as_deref().is_some_and(|p| file_sets_key(p, "seed"));
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    } else if !seed_in_file {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            cfg.seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::Param(format!("{SEED_ENV}=`{raw}` is not an unsigned integer")))?;
        }
    }
    cfg.out_dir = cli.out_dir.unwrap_or(cfg.out_dir);
    cfg.permutations = cli.permutations.unwrap_or(cfg.permutations);
    cfg.contiguity = cli.contiguity.unwrap_or(cfg.contiguity);
    cfg.alpha = cli.alpha.unwrap_or(cfg.alpha);

    match cli.command {
        Command::Ingest { data } => {
            apply_data(&mut cfg, data);
            cmd_ingest(&cfg)
        }
        Command::Indicator {
            data,
            regions,
            deseasonalize,
            trend_only,
            deseasonalize_inputs,
            robust_stl,
            invert_residential,
            axis_order,
            center,
        } => {
            apply_data(&mut cfg, data);
            if !regions.is_empty() {
                cfg.regions = regions;
            }
            cfg.deseasonalize |= deseasonalize;
            cfg.trend_only |= trend_only;
            cfg.deseasonalize_inputs |= deseasonalize_inputs;
            cfg.robust_stl |= robust_stl;
            cfg.invert_residential |= invert_residential;
            cfg.axis_order = axis_order.or(cfg.axis_order);
            cfg.center = center.unwrap_or(cfg.center);
            cmd_indicator(&cfg)
        }
        Command::Moran {
            data,
            geometry,
            variable,
            sidedness,
        } => {
            apply_data(&mut cfg, data);
            apply_geometry(&mut cfg, geometry);
            cfg.variable = variable.unwrap_or(cfg.variable);
            cfg.sidedness = sidedness.unwrap_or(cfg.sidedness);
            cmd_moran(&cfg)
        }
        Command::Weights {
            geometry,
            format,
            row_standardize,
        } => {
            apply_geometry(&mut cfg, geometry);
            cfg.weights_format = format.unwrap_or(cfg.weights_format);
            cfg.row_standardize |= row_standardize;
            cmd_weights(&cfg)
        }
        Command::Render { target } => {
            let target = match target {
                RenderCmd::Choropleth { geometry, values, column } => {
                    apply_geometry(&mut cfg, geometry);
                    RenderTarget::Choropleth { values, column }
                }
                RenderCmd::Lisa { geometry, lisa } => {
                    apply_geometry(&mut cfg, geometry);
                    RenderTarget::Lisa { lisa }
                }
                RenderCmd::Radar {
                    values,
                    axis_order,
                    invert_residential,
                } => {
                    cfg.axis_order = axis_order.or(cfg.axis_order);
                    cfg.invert_residential |= invert_residential;
                    let values: [f64; 6] = values
                        .try_into()
                        .map_err(|_| Error::Param("--values needs six numbers".into()))?;
                    RenderTarget::Radar { values }
                }
            };
            cmd_render(&cfg, &target)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            // A closed stdout (e.g. piped into `head`) is not an error.
            let mut stdout = std::io::stdout().lock();
            for note in &report.notes {
                let _ = writeln!(stdout, "{note}");
            }
            for file in &report.files {
                let _ = writeln!(stdout, "wrote {}", report.out_dir.join(file).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::IdMismatch {
                only_in_geometry,
                only_in_data,
            } = &e
            {
                eprintln!("{:<40} side", "region id");
                for id in only_in_geometry {
                    eprintln!("{id:<40} geometry only");
                }
                for id in only_in_data {
                    eprintln!("{id:<40} data only");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
