use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        self.to_string()
    }

    fn lerp(self, other: Rgb, t: f64) -> Rgb {
        let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round().clamp(0.0, 255.0) as u8;
        Rgb(mix(self.0, other.0), mix(self.1, other.1), mix(self.2, other.2))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let hex = s
            .strip_prefix('#')
            .filter(|h| h.len() == 6 && h.chars().all(|c| c.is_ascii_hexdigit()))
            .ok_or_else(|| Error::param(format!("`{s}` is not a #rrggbb color")))?;
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).unwrap();
        Ok(Rgb(byte(0), byte(2), byte(4)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleKind {
    Sequential,
    Diverging,
    Categorical,
}

/// Piecewise-linear color ramp over strictly increasing stop values.
/// Categorical scales do not interpolate: a value takes the color of the
/// last stop not above it.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorScale {
    pub kind: ScaleKind,
    stops: Vec<(f64, Rgb)>,
    pub missing_color: Rgb,
}

impl ColorScale {
    pub fn new(kind: ScaleKind, stops: Vec<(f64, Rgb)>, missing_color: Rgb) -> Result<Self> {
        if stops.is_empty() {
            return Err(Error::param("color scale needs at least one stop"));
        }
        if stops.iter().any(|s| !s.0.is_finite()) || stops.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::param("color stops must be finite and strictly increasing"));
        }
        Ok(ColorScale {
            kind,
            stops,
            missing_color,
        })
    }

    /// Light-to-dark blue ramp between `min` and `max`.
    pub fn sequential(min: f64, max: f64) -> Result<Self> {
        let max = if max > min { max } else { min + 1.0 };
        Self::new(
            ScaleKind::Sequential,
            vec![
                (min, Rgb(0xf7, 0xfb, 0xff)),
                (0.5 * (min + max), Rgb(0x6b, 0xae, 0xd6)),
                (max, Rgb(0x08, 0x30, 0x6b)),
            ],
            Rgb(0xcc, 0xcc, 0xcc),
        )
    }

    pub fn stops(&self) -> &[(f64, Rgb)] {
        &self.stops
    }

    pub fn min(&self) -> f64 {
        self.stops[0].0
    }

    pub fn max(&self) -> f64 {
        self.stops[self.stops.len() - 1].0
    }

    pub fn color(&self, value: Option<f64>) -> Rgb {
        let v = match value {
            Some(v) if v.is_finite() => v,
            _ => return self.missing_color,
        };
        let last = self.stops.len() - 1;
        if v <= self.stops[0].0 {
            return self.stops[0].1;
        }
        if v >= self.stops[last].0 {
            return self.stops[last].1;
        }
        let k = self.stops.partition_point(|s| s.0 <= v) - 1;
        let (a, b) = (self.stops[k], self.stops[k + 1]);
        match self.kind {
            ScaleKind::Categorical => a.1,
            _ => a.1.lerp(b.1, (v - a.0) / (b.0 - a.0)),
        }
    }
}
