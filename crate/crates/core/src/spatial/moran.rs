//! Global and local Moran's I.
//!
//! Global: `I = (n / S0) · Σ_i Σ_j w_ij (x_i - μ)(x_j - μ) / Σ_i (x_i - μ)²`.
//! Local:  `I_i = z_i · Σ_j w_ij z_j`, with `z` standardized by the
//! population standard deviation, so that under row-standardized weights
//! the mean of the local values over non-island regions equals the global I.

use serde::Serialize;

use super::weights::{SpatialWeights, WeightMode};
use crate::error::{Error, Result};

/// Per-region values with their standardized form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueField {
    pub x: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// `(x - mean) / std`; all zeros when `zero_variance` is set.
    pub z: Vec<f64>,
    pub zero_variance: bool,
}

impl ValueField {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub(crate) fn require_variance(&self) -> Result<()> {
        if self.zero_variance {
            Err(Error::ZeroVariance)
        } else {
            Ok(())
        }
    }
}

pub fn standardize_values(x: &[f64]) -> Result<ValueField> {
    if x.len() < 2 {
        return Err(Error::param(format!("need at least two values, got {}", x.len())));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::data(format!("non-finite value {v} in field")));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    // relative guard: deviations at rounding level of the mean are zero
    let zero_variance = !(std > 1e-12 * mean.abs().max(f64::MIN_POSITIVE));
    let z = if zero_variance {
        vec![0.0; x.len()]
    } else {
        x.iter().map(|v| (v - mean) / std).collect()
    };
    Ok(ValueField {
        x: x.to_vec(),
        mean,
        std,
        z,
        zero_variance,
    })
}

fn check_dims(w: &SpatialWeights, len: usize) -> Result<()> {
    if w.n() != len {
        return Err(Error::Dimension {
            expected: w.n(),
            got: len,
        });
    }
    Ok(())
}

fn require_row_standardized(w: &SpatialWeights) -> Result<()> {
    if w.mode() != WeightMode::RowStandardized {
        return Err(Error::param("row-standardized weights required"));
    }
    Ok(())
}

/// `lag_i = Σ_j w_ij z_j`; islands get 0.
pub fn spatial_lag(w: &SpatialWeights, z: &[f64]) -> Result<Vec<f64>> {
    check_dims(w, z.len())?;
    Ok(lag_unchecked(w, z))
}

pub(crate) fn lag_unchecked(w: &SpatialWeights, z: &[f64]) -> Vec<f64> {
    (0..w.n())
        .map(|i| {
            w.neighbors(i)
                .iter()
                .zip(w.weights(i))
                .map(|(&j, &wij)| wij * z[j])
                .sum()
        })
        .collect()
}

/// Global Moran's I for any non-negative weights.
pub fn moran_global(field: &ValueField, w: &SpatialWeights) -> Result<f64> {
    check_dims(w, field.len())?;
    field.require_variance()?;
    let s0 = w.s0();
    if !(s0 > 0.0) {
        return Err(Error::data("weights have no links (S0 = 0)"));
    }
    let dev: Vec<f64> = field.x.iter().map(|v| v - field.mean).collect();
    let cross: f64 = (0..w.n())
        .map(|i| {
            let row: f64 = w
                .neighbors(i)
                .iter()
                .zip(w.weights(i))
                .map(|(&j, &wij)| wij * dev[j])
                .sum();
            dev[i] * row
        })
        .sum();
    let ss: f64 = dev.iter().map(|d| d * d).sum();
    Ok(w.n() as f64 / s0 * cross / ss)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Quadrant {
    HH,
    LL,
    LH,
    HL,
}

impl Quadrant {
    /// High means strictly positive; zero counts as low.
    pub fn from_signs(z: f64, lag: f64) -> Quadrant {
        match (z > 0.0, lag > 0.0) {
            (true, true) => Quadrant::HH,
            (false, false) => Quadrant::LL,
            (false, true) => Quadrant::LH,
            (true, false) => Quadrant::HL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::HH => "HH",
            Quadrant::LL => "LL",
            Quadrant::LH => "LH",
            Quadrant::HL => "HL",
        }
    }

    /// Scatterplot quadrant number: Q1 HH, Q2 LL, Q3 LH, Q4 HL.
    pub fn number(self) -> u8 {
        match self {
            Quadrant::HH => 1,
            Quadrant::LL => 2,
            Quadrant::LH => 3,
            Quadrant::HL => 4,
        }
    }

    pub fn negated(self) -> Quadrant {
        match self {
            Quadrant::HH => Quadrant::LL,
            Quadrant::LL => Quadrant::HH,
            Quadrant::LH => Quadrant::HL,
            Quadrant::HL => Quadrant::LH,
        }
    }
}

impl std::fmt::Display for Quadrant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub region_id: String,
    pub z: f64,
    pub lag: f64,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoranScatter {
    pub points: Vec<ScatterPoint>,
    /// Least-squares slope of lag on z through the origin.
    pub slope: f64,
}

pub fn moran_scatter(field: &ValueField, w: &SpatialWeights) -> Result<MoranScatter> {
    check_dims(w, field.len())?;
    require_row_standardized(w)?;
    field.require_variance()?;
    let lag = lag_unchecked(w, &field.z);
    let sxy: f64 = field.z.iter().zip(&lag).map(|(z, l)| z * l).sum();
    let sxx: f64 = field.z.iter().map(|z| z * z).sum();
    let points = field
        .z
        .iter()
        .zip(&lag)
        .zip(w.ids())
        .map(|((&z, &l), id)| ScatterPoint {
            region_id: id.clone(),
            z,
            lag: l,
            quadrant: Quadrant::from_signs(z, l),
        })
        .collect();
    Ok(MoranScatter {
        points,
        slope: sxy / sxx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalMoran {
    pub values: Vec<f64>,
    pub lag: Vec<f64>,
    /// Regions without neighbors; their local value is 0.
    pub islands: Vec<usize>,
}

impl LocalMoran {
    /// Mean over non-island regions.
    pub fn mean(&self) -> f64 {
        let keep: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.islands.contains(i))
            .map(|(_, v)| *v)
            .collect();
        keep.iter().sum::<f64>() / keep.len() as f64
    }
}

pub fn moran_local(field: &ValueField, w: &SpatialWeights) -> Result<LocalMoran> {
    check_dims(w, field.len())?;
    require_row_standardized(w)?;
    field.require_variance()?;
    let lag = lag_unchecked(w, &field.z);
    let values = field.z.iter().zip(&lag).map(|(z, l)| z * l).collect();
    Ok(LocalMoran {
        values,
        lag,
        islands: w.islands(),
    })
}
