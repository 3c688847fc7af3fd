//! Daily series and STL seasonal-trend decomposition.

mod loess;
mod stl;

use chrono::{Duration, NaiveDate};

use crate::error::{Error, Result};

pub use loess::loess_smooth;
pub use stl::{deseasonalize, stl_decompose, Decomposition, StlParams};

/// Contiguous daily series, one value per date starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

impl DailySeries {
    pub fn new(start: NaiveDate, values: Vec<f64>) -> Self {
        DailySeries { start, values }
    }

    /// Builds a series from explicit dates, which must step by exactly one day.
    pub fn from_dated(dates: &[NaiveDate], values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::Dimension {
                expected: dates.len(),
                got: values.len(),
            });
        }
        let start = *dates.first().ok_or_else(|| Error::data("empty series"))?;
        if let Some(pair) = dates.windows(2).find(|p| p[1] - p[0] != Duration::days(1)) {
            return Err(Error::data(format!(
                "series is not contiguous between {} and {}",
                pair[0], pair[1]
            )));
        }
        Ok(DailySeries { start, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.values.len() as i64).map(move |d| self.start + Duration::days(d))
    }

    pub fn range(&self) -> f64 {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}
