//! Radar-area circulation indicator.
//!
//! The six category values are drawn as radii of a hexagonal radar chart
//! whose centre sits at the percent value `C`. The chart area is the sum of
//! six triangles `½·r_k·r_{k+1}·sin 60°`; the indicator is that area divided
//! by the area of the chart with every category at 0% (the baseline level).

use std::str::FromStr;

use chrono::NaiveDate;
use serde::Serialize;

use crate::category::Category;
use crate::error::{Error, Result};
use crate::ingest::{DateWindow, MobilityTable};

const SIN_60: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadarConfig {
    /// Percent value at the chart centre; must not exceed -100.
    pub center: f64,
    /// Category drawn on each axis, clockwise from the top.
    pub axis_order: [Category; 6],
    /// Map residential `v -> -v` before drawing.
    pub invert_residential: bool,
}

impl Default for RadarConfig {
    fn default() -> Self {
        RadarConfig {
            center: -100.0,
            axis_order: Category::ALL,
            invert_residential: false,
        }
    }
}

impl RadarConfig {
    pub fn new(center: f64, axis_order: [Category; 6]) -> Result<Self> {
        let cfg = RadarConfig {
            center,
            axis_order,
            invert_residential: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center <= -100.0) {
            return Err(Error::param(format!(
                "radar centre must be <= -100, got {}",
                self.center
            )));
        }
        let mut seen = [false; 6];
        for c in self.axis_order {
            if std::mem::replace(&mut seen[c.index()], true) {
                return Err(Error::param(format!("axis order repeats `{c}`")));
            }
        }
        Ok(())
    }

    /// Radius of an axis sitting at 0% change.
    pub fn baseline_radius(&self) -> f64 {
        -self.center
    }
}

/// Parses a comma-separated list of six category keys.
pub fn parse_axis_order(s: &str) -> Result<[Category; 6]> {
    let cats = s
        .split(',')
        .map(|t| Category::from_str(t.trim()))
        .collect::<Result<Vec<_>>>()?;
    let order: [Category; 6] = cats
        .try_into()
        .map_err(|v: Vec<Category>| Error::param(format!("axis order needs 6 categories, got {}", v.len())))?;
    RadarConfig::new(-100.0, order)?;
    Ok(order)
}

/// Radii `value - C`, ordered by `config.axis_order`. `values` is indexed by
/// [`Category::index`].
pub fn radar_radii(values: &[f64; 6], config: &RadarConfig) -> Result<[f64; 6]> {
    let mut radii = [0.0; 6];
    for (k, cat) in config.axis_order.iter().enumerate() {
        let mut v = values[cat.index()];
        if config.invert_residential && *cat == Category::Residential {
            v = -v;
        }
        if !(v >= config.center) {
            return Err(Error::Domain(format!(
                "{cat} value {v} is below the radar centre {}",
                config.center
            )));
        }
        radii[k] = v - config.center;
    }
    Ok(radii)
}

pub fn radar_area(radii: &[f64; 6]) -> Result<f64> {
    if let Some(r) = radii.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::Domain(format!("negative radius {r}")));
    }
    Ok((0..6)
        .map(|k| 0.5 * radii[k] * radii[(k + 1) % 6] * SIN_60)
        .sum())
}

pub fn baseline_area(config: &RadarConfig) -> f64 {
    radar_area(&[config.baseline_radius(); 6]).expect("baseline radius is non-negative")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CirculationSeries {
    pub region_id: String,
    pub dates: Vec<NaiveDate>,
    pub areas: Vec<f64>,
    pub indicators: Vec<f64>,
    pub baseline_area: f64,
    /// `Σ area_t / (T · baseline_area)`.
    pub period_indicator: f64,
}

/// Indicator series from already-aligned daily values.
pub fn indicator_from_values(
    region_id: &str,
    dates: Vec<NaiveDate>,
    values: &[[f64; 6]],
    config: &RadarConfig,
) -> Result<CirculationSeries> {
    config.validate()?;
    if dates.len() != values.len() {
        return Err(Error::Dimension {
            expected: dates.len(),
            got: values.len(),
        });
    }
    if dates.is_empty() {
        return Err(Error::data(format!("region `{region_id}` has no dates in the window")));
    }
    let base = baseline_area(config);
    let areas = values
        .iter()
        .map(|v| radar_area(&radar_radii(v, config)?))
        .collect::<Result<Vec<_>>>()?;
    let indicators = areas.iter().map(|a| a / base).collect();
    let period_indicator = areas.iter().sum::<f64>() / (areas.len() as f64 * base);
    Ok(CirculationSeries {
        region_id: region_id.to_string(),
        dates,
        areas,
        indicators,
        baseline_area: base,
        period_indicator,
    })
}

/// Complete (imputed) daily values of one region over `window`.
pub fn window_values(
    table: &MobilityTable,
    region_id: &str,
    window: &DateWindow,
) -> Result<(Vec<NaiveDate>, Vec<[f64; 6]>)> {
    let series = table.series();
    let records = series.get(region_id).ok_or_else(|| Error::NotFound {
        what: format!("region `{region_id}`"),
        available: series.keys().map(|s| s.to_string()).collect(),
    })?;
    let mut dates = Vec::with_capacity(window.days());
    let mut values = Vec::with_capacity(window.days());
    let mut it = records.iter().filter(|r| window.contains(r.date)).peekable();
    for day in window.dates() {
        let rec = match it.peek() {
            Some(r) if r.date == day => it.next().unwrap(),
            _ => {
                return Err(Error::data(format!(
                    "region `{region_id}` has no data for {day} inside {}..{}",
                    window.start, window.end
                )))
            }
        };
        let mut row = [0.0; 6];
        for c in Category::ALL {
            row[c.index()] = rec.value(c).ok_or_else(|| {
                Error::data(format!(
                    "region `{region_id}` is missing {c} on {day}; impute first"
                ))
            })?;
        }
        dates.push(day);
        values.push(row);
    }
    Ok((dates, values))
}

/// Daily circulation indicator for one region over `window`.
pub fn circulation_indicator(
    table: &MobilityTable,
    region_id: &str,
    config: &RadarConfig,
    window: &DateWindow,
) -> Result<CirculationSeries> {
    let (dates, values) = window_values(table, region_id, window)?;
    indicator_from_values(region_id, dates, &values, config)
}
