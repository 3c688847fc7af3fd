//! Config-driven orchestration behind the command-line tool.
//!
//! Every command reads a [`RunConfig`], writes its artifacts atomically
//! under `out_dir` and finishes with a `run-manifest.json` that echoes the
//! configuration and lists every file written. Outputs carry no timestamps,
//! so identical configs produce byte-identical directories.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::category::Category;
use crate::error::{Error, Result};
use crate::indicator::{indicator_from_values, parse_axis_order, window_values, RadarConfig};
use crate::ingest::{impute_missing, parse_cmr_csv, write_csv, DateWindow, MobilityTable, ParseMode, ParseOptions, RowIssue};
use crate::render::{
    render_choropleth, render_indicator_series, render_lisa_maps, render_moran_scatter, render_radar, Cell, ColorScale,
    FigureSpec, ResultTable, SeriesLine,
};
use crate::spatial::{
    adjacency, attach_islands_knn, lisa_classify, lisa_permutation, moran_permutation, moran_scatter, parse_geojson,
    row_standardize, standardize_values, ClusterLabel, Contiguity, GeoCollection, LisaRegion, LisaResult, Quadrant,
    Sampling, Sidedness, SpatialWeights, Tier,
};
use crate::timeseries::{stl_decompose, DailySeries, StlParams};

/// Which rows of the report are the spatial units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// One region per country (`sub_region_1` empty).
    National,
    /// One region per sub-region.
    Subregion,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "national" => Ok(Level::National),
            "subregion" => Ok(Level::Subregion),
            other => Err(Error::param(format!("unknown level `{other}` (national|subregion)"))),
        }
    }
}

/// Regional variable analysed by `moran`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    /// Window mean of each of the six categories, one bundle each.
    #[default]
    Categories,
    /// Period circulation indicator.
    Indicator,
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "categories" => Ok(Variable::Categories),
            "indicator" => Ok(Variable::Indicator),
            other => Err(Error::param(format!("unknown variable `{other}` (categories|indicator)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightsFormat {
    #[default]
    Text,
    Json,
}

impl FromStr for WeightsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(WeightsFormat::Text),
            "json" => Ok(WeightsFormat::Json),
            other => Err(Error::param(format!("unknown weights format `{other}` (text|json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Mobility report CSV.
    pub mobility: Option<PathBuf>,
    /// Region polygons (GeoJSON FeatureCollection).
    pub geometry: Option<PathBuf>,
    /// ISO country code to restrict the analysis to.
    pub country: Option<String>,
    /// Explicit region ids for `indicator`; empty selects by `level`.
    pub regions: Vec<String>,
    /// `None` picks national rows for `indicator` and sub-regions for `moran`
    /// when the table has them.
    pub level: Option<Level>,
    pub analysis: DateWindow,
    pub baseline: DateWindow,
    pub lenient: bool,
    /// Logical column key -> CSV header overrides.
    pub columns: BTreeMap<String, String>,
    pub contiguity: Contiguity,
    pub snap_tol: f64,
    /// Links each island to its k nearest centroids; 0 leaves islands alone.
    pub island_knn: usize,
    pub id_property: String,
    pub permutations: usize,
    pub seed: u64,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub variable: Variable,
    pub center: f64,
    /// Comma-separated category keys, clockwise from the top axis.
    pub axis_order: Option<String>,
    pub invert_residential: bool,
    pub deseasonalize: bool,
    pub trend_only: bool,
    pub deseasonalize_inputs: bool,
    pub robust_stl: bool,
    pub weights_format: WeightsFormat,
    pub row_standardize: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mobility: None,
            geometry: None,
            country: None,
            regions: Vec::new(),
            level: None,
            analysis: DateWindow::default_analysis(),
            baseline: DateWindow::default_baseline(),
            lenient: false,
            columns: BTreeMap::new(),
            contiguity: Contiguity::Queen,
            snap_tol: crate::spatial::DEFAULT_SNAP_TOL,
            island_knn: 0,
            id_property: "id".into(),
            permutations: 999,
            seed: 0,
            alpha: 0.05,
            sidedness: Sidedness::Folded,
            variable: Variable::Categories,
            center: -100.0,
            axis_order: None,
            invert_residential: false,
            deseasonalize: false,
            trend_only: false,
            deseasonalize_inputs: false,
            robust_stl: false,
            weights_format: WeightsFormat::Text,
            row_standardize: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file, or JSON when the extension is `.json`. Relative
    /// input paths are taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        let mut cfg: RunConfig = parsed.map_err(|e| Error::param(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.mobility, &mut cfg.geometry].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("analysis", self.analysis), ("baseline", self.baseline)] {
            if w.end < w.start {
                return Err(Error::param(format!("{name} window {}..{} is empty", w.start, w.end)));
            }
        }
        if self.permutations == 0 {
            return Err(Error::param("permutations must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if !(self.snap_tol > 0.0 && self.snap_tol.is_finite()) {
            return Err(Error::param("snap_tol must be positive"));
        }
        if self.trend_only && self.deseasonalize_inputs {
            return Err(Error::param("trend_only and deseasonalize_inputs are exclusive"));
        }
        self.radar_config().map(|_| ())
    }

    pub fn radar_config(&self) -> Result<RadarConfig> {
        let axis_order = match &self.axis_order {
            Some(s) => parse_axis_order(s)?,
            None => Category::ALL,
        };
        let cfg = RadarConfig {
            center: self.center,
            axis_order,
            invert_residential: self.invert_residential,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn stl_params(&self) -> StlParams {
        if self.robust_stl {
            StlParams::robust()
        } else {
            StlParams::default()
        }
    }

    fn mobility_path(&self) -> Result<&Path> {
        self.mobility
            .as_deref()
            .ok_or_else(|| Error::param("no mobility CSV given (--mobility or `mobility` in the config)"))
    }

    fn geometry_path(&self) -> Result<&Path> {
        self.geometry
            .as_deref()
            .ok_or_else(|| Error::param("no geometry given (--geometry or `geometry` in the config)"))
    }
}

/// Files written by one command, relative to `out_dir`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

struct Outputs {
    root: PathBuf,
    files: BTreeMap<String, usize>,
    notes: Vec<String>,
}

impl Outputs {
    fn new(root: &Path) -> Outputs {
        Outputs {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Temp file + rename so readers never see a partial file.
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        let dir = path.parent().unwrap_or(&self.root).to_path_buf();
        fs::create_dir_all(&dir).map_err(|source| Error::File {
            path: dir.clone(),
            source,
        })?;
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
        let tmp = dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|source| Error::File {
            path: tmp.clone(),
            source,
        })?;
        fs::rename(&tmp, &path).map_err(|source| Error::File { path, source })?;
        self.files.insert(rel.to_string(), bytes.len());
        Ok(())
    }

    fn finish(mut self, command: &str, config: &RunConfig) -> Result<RunReport> {
        let outputs: Vec<_> = self
            .files
            .iter()
            .map(|(path, bytes)| json!({ "path": path, "bytes": bytes }))
            .collect();
        let manifest = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "outputs": outputs,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        self.write("run-manifest.json", text.as_bytes())?;
        Ok(RunReport {
            out_dir: self.root,
            files: self.files.into_keys().collect(),
            notes: self.notes,
        })
    }
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// File-name-safe version of a region id.
fn slug(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c.to_ascii_lowercase() } else { '_' })
        .collect();
    let s = s.trim_matches('_').to_string();
    if s.is_empty() {
        "region".into()
    } else {
        s
    }
}

fn unique_slugs(ids: &[String]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    ids.iter()
        .map(|id| {
            let base = slug(id);
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}-{n}")
            }
        })
        .collect()
}

struct Loaded {
    table: MobilityTable,
    report: crate::ingest::ImputationReport,
    issues: Vec<RowIssue>,
}

/// Parse, restrict to `country`, impute.
fn load_table(config: &RunConfig) -> Result<Loaded> {
    let path = config.mobility_path()?;
    let file = fs::File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    let options = ParseOptions {
        column_map: config.columns.clone().into_iter().collect(),
        mode: if config.lenient { ParseMode::Lenient } else { ParseMode::Strict },
        baseline: config.baseline,
    };
    let parsed = parse_cmr_csv(std::io::BufReader::new(file), &options)?;
    let table = match &config.country {
        Some(cc) => parsed.table.subset(|r| &r.country_code == cc).ok_or_else(|| Error::NotFound {
            what: format!("country `{cc}`"),
            available: parsed.table.countries().iter().map(|s| s.to_string()).collect(),
        })?,
        None => parsed.table,
    };
    let (table, report) = impute_missing(&table)?;
    Ok(Loaded {
        table,
        report,
        issues: parsed.issues,
    })
}

/// `ingest`: normalized CSV plus imputation report.
pub fn cmd_ingest(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let loaded = load_table(config)?;
    let mut out = Outputs::new(&config.out_dir);
    let mut csv = Vec::new();
    write_csv(&loaded.table, &mut csv)?;
    out.write("mobility_normalized.csv", &csv)?;

    let entries: Vec<_> = loaded
        .report
        .entries
        .iter()
        .map(|e| {
            json!({
                "country_code": e.country_code,
                "category": e.category.key(),
                "missing_count": e.missing_count,
                "total_count": e.total_count,
                "missing_rate": e.missing_rate,
                "fill_value": e.fill_value,
            })
        })
        .collect();
    let issues: Vec<_> = loaded
        .issues
        .iter()
        .map(|i| json!({ "line": i.line, "message": i.message }))
        .collect();
    let report = json!({
        "regions": loaded.table.region_ids().len(),
        "records": loaded.table.len(),
        "coverage": loaded.table.coverage(),
        "entries": entries,
        "issues": issues,
    });
    out.write("imputation_report.json", &json_bytes(&report)?)?;
    for e in loaded.report.entries.iter().filter(|e| e.missing_count > 0) {
        out.notes.push(format!(
            "{} {}: imputed {}/{} cells ({:.2}%) with {:.4}",
            e.country_code,
            e.category.key(),
            e.missing_count,
            e.total_count,
            100.0 * e.missing_rate,
            e.fill_value
        ));
    }
    if !loaded.issues.is_empty() {
        out.notes.push(format!("{} row issues reported", loaded.issues.len()));
    }
    out.finish("ingest", config)
}

/// Region ids chosen for `indicator`.
fn indicator_regions(table: &MobilityTable, config: &RunConfig) -> Result<Vec<String>> {
    let all = table.region_ids();
    if !config.regions.is_empty() {
        return config
            .regions
            .iter()
            .map(|want| {
                all.iter()
                    .find(|id| *id == want)
                    .or_else(|| {
                        // Accept a bare sub-region name or country code.
                        let mut hits = table
                            .records()
                            .iter()
                            .filter(|r| r.sub_region.as_deref() == Some(want) || (r.sub_region.is_none() && &r.country_code == want))
                            .map(|r| r.region_id.as_str())
                            .collect::<BTreeSet<_>>()
                            .into_iter();
                        match (hits.next(), hits.next()) {
                            (Some(id), None) => all.iter().find(|a| **a == id),
                            _ => None,
                        }
                    })
                    .map(|id| id.to_string())
                    .ok_or_else(|| Error::NotFound {
                        what: format!("region `{want}`"),
                        available: all.iter().map(|s| s.to_string()).collect(),
                    })
            })
            .collect();
    }
    let national: Vec<String> = select_level(table, Level::National);
    let level = config.level.unwrap_or(if national.is_empty() { Level::Subregion } else { Level::National });
    let ids = select_level(table, level);
    if ids.is_empty() {
        return Err(Error::data(format!("no {level:?} rows in the input").to_lowercase()));
    }
    Ok(ids)
}

fn select_level(table: &MobilityTable, level: Level) -> Vec<String> {
    table
        .records()
        .iter()
        .filter(|r| r.sub_region.is_some() == (level == Level::Subregion))
        .map(|r| r.region_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

struct RegionIndicator {
    id: String,
    dates: Vec<chrono::NaiveDate>,
    areas: Vec<f64>,
    indicators: Vec<f64>,
    adjusted: Option<Vec<f64>>,
    period_indicator: f64,
    means: [f64; 6],
}

fn region_indicator(table: &MobilityTable, id: &str, config: &RunConfig, radar: &RadarConfig) -> Result<RegionIndicator> {
    let (dates, values) = window_values(table, id, &config.analysis)?;
    let series = indicator_from_values(id, dates.clone(), &values, radar)?;
    let stl = config.stl_params();
    let adjusted = if config.deseasonalize_inputs {
        // Deseasonalize each category, then rebuild the indicator; values
        // pushed below the radar center by the adjustment are clamped to it.
        let mut adj = values.clone();
        for c in Category::ALL {
            let col: Vec<f64> = values.iter().map(|v| v[c.index()]).collect();
            let d = stl_decompose(&DailySeries::new(dates[0], col), &stl)?;
            for (row, s) in adj.iter_mut().zip(d.deseasonalized()) {
                row[c.index()] = s.max(radar.center);
            }
        }
        Some(indicator_from_values(id, dates.clone(), &adj, radar)?.indicators)
    } else if config.deseasonalize || config.trend_only {
        let d = stl_decompose(&DailySeries::new(dates[0], series.indicators.clone()), &stl)?;
        Some(if config.trend_only { d.trend } else { d.deseasonalized() })
    } else {
        None
    };
    let mut means = [0.0; 6];
    for v in &values {
        for k in 0..6 {
            means[k] += v[k] / values.len() as f64;
        }
    }
    Ok(RegionIndicator {
        id: id.to_string(),
        dates,
        areas: series.areas,
        indicators: series.indicators,
        adjusted,
        period_indicator: series.period_indicator,
        means,
    })
}

/// `indicator`: per-region daily circulation indicator, radar charts of the
/// window means and one overlay plot.
pub fn cmd_indicator(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let radar = config.radar_config()?;
    let loaded = load_table(config)?;
    let ids = indicator_regions(&loaded.table, config)?;
    let results: Vec<RegionIndicator> = ids
        .par_iter()
        .map(|id| region_indicator(&loaded.table, id, config, &radar))
        .collect::<Result<_>>()?;

    let extra = if config.trend_only { "indicator_trend" } else { "indicator_deseasonalized" };
    let slugs = unique_slugs(&ids);
    let mut out = Outputs::new(&config.out_dir);
    let mut summary_cols = vec!["period_indicator".to_string()];
    summary_cols.extend(Category::ALL.iter().map(|c| format!("mean_{}", c.key())));
    let mut summary = ResultTable::new(summary_cols);
    let mut lines = Vec::new();
    for (r, slug) in results.iter().zip(&slugs) {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["date", "area", "indicator"];
        if r.adjusted.is_some() {
            header.push(extra);
        }
        wtr.write_record(&header)?;
        for (k, date) in r.dates.iter().enumerate() {
            let mut row = vec![date.to_string(), r.areas[k].to_string(), r.indicators[k].to_string()];
            if let Some(a) = &r.adjusted {
                row.push(a[k].to_string());
            }
            wtr.write_record(&row)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.write(&format!("indicator/{slug}.csv"), &bytes)?;

        let label = r.id.trim_end_matches('/');
        let svg = render_radar(&r.means, &radar, &FigureSpec::titled(format!("{label} (window mean)")))?;
        out.write(&format!("radar/{slug}.svg"), svg.as_bytes())?;

        let mut cells = vec![Cell::Num(r.period_indicator)];
        cells.extend(r.means.iter().map(|m| Cell::Num(*m)));
        summary.push(r.id.clone(), cells)?;
        lines.push(SeriesLine {
            label: label.to_string(),
            dates: r.dates.clone(),
            values: r.adjusted.clone().unwrap_or_else(|| r.indicators.clone()),
        });
    }
    out.write("indicator_summary.csv", summary.to_csv_string()?.as_bytes())?;
    let overlay = render_indicator_series(&lines, &FigureSpec::titled("Circulation indicator"))?;
    out.write("indicator_overlay.svg", overlay.as_bytes())?;
    out.notes.push(format!("{} regions", results.len()));
    out.finish("indicator", config)
}

fn load_geometry(config: &RunConfig) -> Result<GeoCollection> {
    let path = config.geometry_path()?;
    let text = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_geojson(&text, &config.id_property)
}

/// Binary contiguity, optional k-NN island links.
fn build_weights(geo: &GeoCollection, config: &RunConfig) -> Result<SpatialWeights> {
    let w = adjacency(&geo.regions, config.snap_tol, config.contiguity)?;
    if config.island_knn > 0 && !w.islands().is_empty() {
        let centroids: Vec<_> = geo.regions.iter().map(|g| g.centroid()).collect();
        return attach_islands_knn(&w, &centroids, config.island_knn);
    }
    Ok(w)
}

/// `weights`: contiguity weights in the text or JSON format.
pub fn cmd_weights(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let geo = load_geometry(config)?;
    let mut w = build_weights(&geo, config)?;
    if config.row_standardize {
        w = row_standardize(&w);
    }
    let mut out = Outputs::new(&config.out_dir);
    match config.weights_format {
        WeightsFormat::Text => out.write("weights.txt", w.to_text().as_bytes())?,
        WeightsFormat::Json => out.write("weights.json", w.to_json()?.as_bytes())?,
    }
    out.notes.push(format!(
        "{} regions, {} neighbor pairs, {} islands",
        w.n(),
        w.pair_count(),
        w.islands().len()
    ));
    out.finish("weights", config)
}

/// Maps each geometry id to a data region id. Geometry ids may be full
/// region ids, sub-region names or (national level) country codes.
fn match_regions(geo: &GeoCollection, table: &MobilityTable, level: Level) -> Result<Vec<String>, (Vec<String>, Vec<String>)> {
    let data_ids = select_level(table, level);
    let wanted: BTreeSet<&str> = data_ids.iter().map(String::as_str).collect();
    let mut keys: HashMap<String, BTreeSet<String>> = HashMap::new();
    for r in table.records().iter().filter(|r| wanted.contains(r.region_id.as_str())) {
        keys.entry(r.region_id.clone()).or_default().insert(r.region_id.clone());
        let alias = match level {
            Level::Subregion => r.sub_region.clone(),
            Level::National => Some(r.country_code.clone()),
        };
        if let Some(a) = alias {
            keys.entry(a).or_default().insert(r.region_id.clone());
        }
    }
    let mut matched = Vec::with_capacity(geo.regions.len());
    let mut only_in_geometry = Vec::new();
    let mut used = BTreeSet::new();
    for g in &geo.regions {
        match keys.get(&g.region_id) {
            Some(ids) if ids.len() == 1 => {
                let id = ids.iter().next().unwrap().clone();
                if !used.insert(id.clone()) {
                    only_in_geometry.push(g.region_id.clone());
                }
                matched.push(id);
            }
            _ => only_in_geometry.push(g.region_id.clone()),
        }
    }
    let only_in_data: Vec<String> = data_ids.into_iter().filter(|id| !used.contains(id)).collect();
    if only_in_geometry.is_empty() && only_in_data.is_empty() {
        Ok(matched)
    } else {
        Err((only_in_geometry, only_in_data))
    }
}

struct Bundle {
    key: String,
    files: Vec<(String, Vec<u8>)>,
    summary: serde_json::Value,
    zero_variance: bool,
}

fn moran_bundle(
    key: &str,
    label: &str,
    values: &[f64],
    data_ids: &[String],
    geo: &GeoCollection,
    w: &SpatialWeights,
    config: &RunConfig,
) -> Result<Bundle> {
    let dir = format!("moran/{key}");
    let field = standardize_values(values)?;
    let mut table = ResultTable::new(vec!["data_region".into(), "value".into(), "z".into()]);
    for (k, id) in w.ids().iter().enumerate() {
        table.push(
            id.clone(),
            vec![Cell::Text(data_ids[k].clone()), Cell::Num(values[k]), Cell::Num(field.z[k])],
        )?;
    }
    let mut files = vec![(format!("{dir}/values.csv"), table.to_csv_string()?.into_bytes())];
    if field.zero_variance {
        let summary = json!({ "variable": key, "zero_variance": true, "n": values.len() });
        files.push((format!("{dir}/global.json"), json_bytes(&summary)?));
        return Ok(Bundle {
            key: key.into(),
            files,
            summary,
            zero_variance: true,
        });
    }

    let sampling = Sampling::monte_carlo(config.permutations, config.seed);
    let global = moran_permutation(&field, w, sampling, config.sidedness)?;
    let scatter = moran_scatter(&field, w)?;
    let p = lisa_permutation(&field, w, sampling)?;
    let lisa = lisa_classify(&field, w, &p, config.alpha)?;

    let summary = json!({
        "variable": key,
        "label": label,
        "n": values.len(),
        "islands": w.islands().len(),
        "zero_variance": false,
        "alpha": config.alpha,
        "significant": global.pseudo_p <= config.alpha,
        "moran": global,
    });
    files.push((format!("{dir}/global.json"), json_bytes(&summary)?));
    let lisa_table = ResultTable::from(&lisa);
    files.push((format!("{dir}/lisa.csv"), lisa_table.to_csv_string()?.into_bytes()));
    files.push((format!("{dir}/lisa.geojson"), lisa_table.to_geojson(geo)?.into_bytes()));

    let scatter_svg = render_moran_scatter(
        &scatter.points,
        scatter.slope,
        &FigureSpec::titled(format!("Moran scatterplot: {label} (I = {:.4})", global.i)),
    )?;
    files.push((format!("{dir}/scatter.svg"), scatter_svg.into_bytes()));
    let maps = render_lisa_maps(&geo.regions, &lisa, &FigureSpec::titled(format!("LISA: {label}")))?;
    files.push((format!("{dir}/cluster.svg"), maps.cluster.into_bytes()));
    files.push((format!("{dir}/significance.svg"), maps.significance.into_bytes()));

    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let scale = ColorScale::sequential(lo, hi)?;
    let by_id: BTreeMap<String, Option<f64>> = w.ids().iter().cloned().zip(values.iter().map(|v| Some(*v))).collect();
    let spec = FigureSpec {
        legend_title: Some(label.to_string()),
        ..FigureSpec::titled(format!("Mean variation: {label}"))
    };
    files.push((
        format!("{dir}/choropleth.svg"),
        render_choropleth(&geo.regions, &by_id, &scale, &spec)?.into_bytes(),
    ));
    Ok(Bundle {
        key: key.into(),
        files,
        summary,
        zero_variance: false,
    })
}

/// `moran`: global Moran's I, scatterplot, LISA table and maps for each
/// regional variable.
pub fn cmd_moran(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let loaded = load_table(config)?;
    let geo = load_geometry(config)?;
    let level = config.level.unwrap_or(if select_level(&loaded.table, Level::Subregion).is_empty() {
        Level::National
    } else {
        Level::Subregion
    });
    let data_ids = match match_regions(&geo, &loaded.table, level) {
        Ok(ids) => ids,
        Err((only_in_geometry, only_in_data)) => {
            let mut out = Outputs::new(&config.out_dir);
            let mut t = ResultTable::new(vec!["side".into()]);
            for id in &only_in_geometry {
                t.push(id.clone(), vec![Cell::Text("geometry_only".into())])?;
            }
            for id in &only_in_data {
                t.push(id.clone(), vec![Cell::Text("data_only".into())])?;
            }
            out.write("id_reconciliation.csv", t.to_csv_string()?.as_bytes())?;
            return Err(Error::IdMismatch {
                only_in_geometry,
                only_in_data,
            });
        }
    };
    let binary = build_weights(&geo, config)?;
    let w = row_standardize(&binary);

    let mut variables: Vec<(String, String, Vec<f64>)> = Vec::new();
    match config.variable {
        Variable::Categories => {
            let windows: Vec<Vec<[f64; 6]>> = data_ids
                .par_iter()
                .map(|id| window_values(&loaded.table, id, &config.analysis).map(|(_, v)| v))
                .collect::<Result<_>>()?;
            for c in Category::ALL {
                let means = windows
                    .iter()
                    .map(|rows| rows.iter().map(|r| r[c.index()]).sum::<f64>() / rows.len() as f64)
                    .collect();
                variables.push((c.key().to_string(), c.label().to_string(), means));
            }
        }
        Variable::Indicator => {
            let radar = config.radar_config()?;
            let values = data_ids
                .par_iter()
                .map(|id| {
                    let (dates, v) = window_values(&loaded.table, id, &config.analysis)?;
                    Ok(indicator_from_values(id, dates, &v, &radar)?.period_indicator)
                })
                .collect::<Result<_>>()?;
            variables.push(("indicator".into(), "Circulation indicator".into(), values));
        }
    }

    let bundles: Vec<Bundle> = variables
        .par_iter()
        .map(|(key, label, values)| moran_bundle(key, label, values, &data_ids, &geo, &w, config))
        .collect::<Result<_>>()?;
    if bundles.iter().all(|b| b.zero_variance) {
        return Err(Error::data(format!(
            "zero variance: {} constant across all {} regions; Moran's I is undefined",
            if bundles.len() == 1 { "the variable is" } else { "every variable is" },
            data_ids.len()
        )));
    }

    let mut out = Outputs::new(&config.out_dir);
    out.write("weights.txt", binary.to_text().as_bytes())?;
    let mut summary = Vec::new();
    for b in bundles {
        for (rel, bytes) in &b.files {
            out.write(rel, bytes)?;
        }
        if b.zero_variance {
            out.notes.push(format!("{}: zero variance, skipped", b.key));
        } else {
            let m = &b.summary["moran"];
            out.notes.push(format!("{}: I = {:.4}, pseudo-p = {}", b.key, m["i"], m["pseudo_p"]));
        }
        summary.push(b.summary);
    }
    out.write("moran/summary.json", &json_bytes(&summary)?)?;
    if !binary.islands().is_empty() {
        out.notes.push(format!("{} islands (no neighbors)", binary.islands().len()));
    }
    out.finish("moran", config)
}

/// What `render` draws from previously exported results.
#[derive(Debug, Clone, PartialEq)]
pub enum RenderTarget {
    /// Choropleth of one numeric column of a results CSV.
    Choropleth { values: PathBuf, column: String },
    /// Cluster and significance maps from an exported LISA CSV.
    Lisa { lisa: PathBuf },
    /// Radar chart of six percent changes in category order.
    Radar { values: [f64; 6] },
}

fn read_table(path: &Path) -> Result<ResultTable> {
    let file = fs::File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    ResultTable::from_csv(file)
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Num(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn column(table: &ResultTable, name: &str) -> Result<usize> {
    table
        .columns
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| Error::Schema {
            missing: vec![name.to_string()],
        })
}

/// Rebuilds the map-relevant part of a LISA result from its CSV export.
fn lisa_from_table(table: &ResultTable, alpha: f64) -> Result<LisaResult> {
    let (ci, pi, qi, ti) = (column(table, "I_i")?, column(table, "p")?, column(table, "quadrant")?, column(table, "tier")?);
    let regions = table
        .rows
        .iter()
        .map(|row| {
            let q = cell_text(&row.cells[qi]);
            let cluster = ClusterLabel::ALL
                .into_iter()
                .find(|c| c.as_str() == q)
                .ok_or_else(|| Error::data(format!("region `{}`: unknown quadrant `{q}`", row.id)))?;
            let t = cell_text(&row.cells[ti]);
            let tier = Tier::parse(&t).ok_or_else(|| Error::data(format!("region `{}`: unknown tier `{t}`", row.id)))?;
            let num = |k: usize| match &row.cells[k] {
                Cell::Num(v) => *v,
                Cell::Text(s) => s.parse().unwrap_or(f64::NAN),
            };
            Ok(LisaRegion {
                region_id: row.id.clone(),
                z: f64::NAN,
                lag: f64::NAN,
                local_i: num(ci),
                p: num(pi),
                quadrant: match cluster {
                    ClusterLabel::Significant(q) => q,
                    ClusterLabel::NotSignificant => Quadrant::HH,
                },
                cluster,
                tier,
                island: false,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LisaResult { alpha, regions })
}

/// `render`: redraw figures from exported results.
pub fn cmd_render(config: &RunConfig, target: &RenderTarget) -> Result<RunReport> {
    config.validate()?;
    let mut out = Outputs::new(&config.out_dir);
    match target {
        RenderTarget::Choropleth { values, column: name } => {
            let geo = load_geometry(config)?;
            let table = read_table(values)?;
            let k = column(&table, name)?;
            let by_id: BTreeMap<String, Option<f64>> = table
                .rows
                .iter()
                .map(|r| {
                    let v = match &r.cells[k] {
                        Cell::Num(v) if v.is_finite() => Some(*v),
                        _ => None,
                    };
                    (r.id.clone(), v)
                })
                .collect();
            let present: Vec<f64> = by_id.values().flatten().copied().collect();
            if present.is_empty() {
                return Err(Error::data(format!("column `{name}` has no numeric values")));
            }
            let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let spec = FigureSpec {
                legend_title: Some(name.clone()),
                ..FigureSpec::titled(name.clone())
            };
            let svg = render_choropleth(&geo.regions, &by_id, &ColorScale::sequential(lo, hi)?, &spec)?;
            out.write("choropleth.svg", svg.as_bytes())?;
        }
        RenderTarget::Lisa { lisa } => {
            let geo = load_geometry(config)?;
            let result = lisa_from_table(&read_table(lisa)?, config.alpha)?;
            let maps = render_lisa_maps(&geo.regions, &result, &FigureSpec::titled("LISA"))?;
            out.write("cluster.svg", maps.cluster.as_bytes())?;
            out.write("significance.svg", maps.significance.as_bytes())?;
        }
        RenderTarget::Radar { values } => {
            let svg = render_radar(values, &config.radar_config()?, &FigureSpec::titled("Radar"))?;
            out.write("radar.svg", svg.as_bytes())?;
        }
    }
    out.finish("render", config)
}
