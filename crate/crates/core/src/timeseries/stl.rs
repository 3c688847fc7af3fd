use super::loess::fit_at;
use super::DailySeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StlParams {
    pub period: usize,
    /// Odd LOESS window for the cycle-subseries smoother.
    pub seasonal_window: usize,
    /// Defaults to the smallest odd integer >= 1.5 period / (1 - 1.5 / seasonal_window).
    pub trend_window: Option<usize>,
    /// Defaults to the smallest odd integer >= period.
    pub low_pass_window: Option<usize>,
    pub seasonal_degree: usize,
    pub trend_degree: usize,
    pub low_pass_degree: usize,
    pub inner_iters: usize,
    /// Robustness iterations; 0 disables robust reweighting.
    pub outer_iters: usize,
}

impl Default for StlParams {
    fn default() -> Self {
        StlParams {
            period: 7,
            seasonal_window: 7,
            trend_window: None,
            low_pass_window: None,
            seasonal_degree: 1,
            trend_degree: 1,
            low_pass_degree: 1,
            inner_iters: 2,
            outer_iters: 0,
        }
    }
}

impl StlParams {
    pub fn weekly() -> Self {
        Self::default()
    }

    /// Weekly defaults with 15 robustness iterations.
    pub fn robust() -> Self {
        StlParams {
            outer_iters: 15,
            ..Self::default()
        }
    }

    fn next_odd(x: usize) -> usize {
        if x.is_multiple_of(2) {
            x + 1
        } else {
            x
        }
    }

    pub fn effective_trend_window(&self) -> usize {
        self.trend_window.unwrap_or_else(|| {
            let raw = 1.5 * self.period as f64 / (1.0 - 1.5 / self.seasonal_window as f64);
            Self::next_odd(raw.ceil() as usize)
        })
    }

    pub fn effective_low_pass_window(&self) -> usize {
        self.low_pass_window
            .unwrap_or_else(|| Self::next_odd(self.period))
    }

    fn validate(&self, len: usize) -> Result<()> {
        if self.period < 2 {
            return Err(Error::param(format!("period must be >= 2, got {}", self.period)));
        }
        if len < 2 * self.period {
            return Err(Error::param(format!(
                "series of length {len} is shorter than two periods of {}",
                self.period
            )));
        }
        for (name, w) in [
            ("seasonal", self.seasonal_window),
            ("trend", self.effective_trend_window()),
            ("low-pass", self.effective_low_pass_window()),
        ] {
            if w < 3 || w % 2 == 0 {
                return Err(Error::param(format!("{name} window must be odd and >= 3, got {w}")));
            }
        }
        if self.seasonal_degree > 2 || self.trend_degree > 2 || self.low_pass_degree > 2 {
            return Err(Error::param("LOESS degrees must be 0, 1 or 2"));
        }
        if self.inner_iters == 0 {
            return Err(Error::param("inner_iters must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
    pub period: usize,
}

impl Decomposition {
    /// Trend plus residual, i.e. the input with the seasonal part removed.
    pub fn deseasonalized(&self) -> Vec<f64> {
        self.trend
            .iter()
            .zip(&self.residual)
            .map(|(t, r)| t + r)
            .collect()
    }
}

fn moving_average(xs: &[f64], len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len() + 1 - len);
    let mut sum: f64 = xs[..len].iter().sum();
    out.push(sum / len as f64);
    for i in len..xs.len() {
        sum += xs[i] - xs[i - len];
        out.push(sum / len as f64);
    }
    out
}

fn smooth(ys: &[f64], robustness: Option<&[f64]>, window: usize, degree: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
    xs.iter()
        .map(|&x| fit_at(&xs, ys, robustness, x, window, degree))
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn robustness_weights(residual: &[f64]) -> Vec<f64> {
    let h = 6.0 * median(residual.iter().map(|r| r.abs()).collect());
    residual
        .iter()
        .map(|r| {
            if h <= f64::MIN_POSITIVE {
                return 1.0;
            }
            let u = r.abs() / h;
            if u < 1.0 {
                let t = 1.0 - u * u;
                t * t
            } else {
                0.0
            }
        })
        .collect()
}

/// Cycle-subseries smoothing, extended by one period on both sides.
fn cycle_subseries(
    detrended: &[f64],
    robustness: Option<&[f64]>,
    p: &StlParams,
) -> Vec<f64> {
    let n = detrended.len();
    let period = p.period;
    let mut cycle = vec![0.0; n + 2 * period];
    for k in 0..period {
        let idx: Vec<usize> = (k..n).step_by(period).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| detrended[i]).collect();
        let rw: Option<Vec<f64>> = robustness.map(|r| idx.iter().map(|&i| r[i]).collect());
        let xs: Vec<f64> = (0..ys.len()).map(|j| j as f64).collect();
        for j in 0..ys.len() + 2 {
            let x0 = j as f64 - 1.0;
            cycle[k + j * period] =
                fit_at(&xs, &ys, rw.as_deref(), x0, p.seasonal_window, p.seasonal_degree);
        }
    }
    cycle
}

/// Additive STL decomposition (Cleveland et al.) with full LOESS evaluation.
pub fn stl_decompose(series: &DailySeries, params: &StlParams) -> Result<Decomposition> {
    let y = &series.values;
    let n = y.len();
    params.validate(n)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("series contains non-finite values; impute first"));
    }
    let period = params.period;
    let trend_window = params.effective_trend_window();
    let low_pass_window = params.effective_low_pass_window();

    let mut trend = vec![0.0; n];
    let mut seasonal = vec![0.0; n];
    let mut robustness: Option<Vec<f64>> = None;

    for outer in 0..=params.outer_iters {
        for _ in 0..params.inner_iters {
            let detrended: Vec<f64> = y.iter().zip(&trend).map(|(v, t)| v - t).collect();
            let cycle = cycle_subseries(&detrended, robustness.as_deref(), params);

            let ma = moving_average(&moving_average(&moving_average(&cycle, period), period), 3);
            let low_pass = smooth(&ma, None, low_pass_window, params.low_pass_degree);

            for i in 0..n {
                seasonal[i] = cycle[period + i] - low_pass[i];
            }
            let deseasoned: Vec<f64> = y.iter().zip(&seasonal).map(|(v, s)| v - s).collect();
            trend = smooth(&deseasoned, robustness.as_deref(), trend_window, params.trend_degree);
        }
        if outer < params.outer_iters {
            let residual: Vec<f64> = (0..n).map(|i| y[i] - trend[i] - seasonal[i]).collect();
            robustness = Some(robustness_weights(&residual));
        }
    }

    let residual = (0..n).map(|i| y[i] - trend[i] - seasonal[i]).collect();
    Ok(Decomposition {
        trend,
        seasonal,
        residual,
        period,
    })
}

/// Removes the seasonal component, keeping trend and residual.
pub fn deseasonalize(series: &DailySeries, params: &StlParams) -> Result<DailySeries> {
    let d = stl_decompose(series, params)?;
    Ok(DailySeries::new(
        series.start,
        series
            .values
            .iter()
            .zip(&d.seasonal)
            .map(|(v, s)| v - s)
            .collect(),
    ))
}
