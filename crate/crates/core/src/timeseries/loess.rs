//! Local polynomial regression with tricube weights.

use crate::error::{Error, Result};

fn tricube(u: f64) -> f64 {
    if u < 1.0 {
        let t = 1.0 - u * u * u;
        t * t * t
    } else {
        0.0
    }
}

/// Indices `[lo, hi)` of the `q` points nearest to `x0` in sorted `xs`.
fn nearest_window(xs: &[f64], x0: f64, q: usize) -> (usize, usize) {
    let n = xs.len();
    let q = q.min(n);
    let mut lo = xs.partition_point(|&x| x < x0);
    let mut hi = lo;
    while hi - lo < q {
        if lo == 0 {
            hi += 1;
        } else if hi == n || x0 - xs[lo - 1] <= xs[hi] - x0 {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    (lo, hi)
}

/// Solves the small dense system in place; `None` when it is singular.
fn solve(mut a: [[f64; 3]; 3], mut b: [f64; 3], dim: usize) -> Option<[f64; 3]> {
    let scale = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j].abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..dim {
            let f = a[row][col] / a[col][col];
            for k in col..dim {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..dim).rev() {
        let tail: f64 = (row + 1..dim).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Fitted value at `x0` of a local polynomial over the `window` nearest points.
///
/// `xs` must be sorted. When `window` exceeds the number of points the
/// bandwidth is widened by `(window - n) / 2`, which assumes unit spacing as
/// in STL cycle-subseries. A singular local system drops to a lower degree.
pub(crate) fn fit_at(
    xs: &[f64],
    ys: &[f64],
    robustness: Option<&[f64]>,
    x0: f64,
    window: usize,
    degree: usize,
) -> f64 {
    let n = xs.len();
    let (lo, hi) = nearest_window(xs, x0, window);
    let mut h = (x0 - xs[lo]).abs().max((xs[hi - 1] - x0).abs());
    if window > n {
        h += (window - n) as f64 / 2.0;
    }

    let mut weights: Vec<f64> = (lo..hi)
        .map(|j| {
            let base = if h > 0.0 { tricube((xs[j] - x0).abs() / h) } else { 1.0 };
            base * robustness.map_or(1.0, |r| r[j])
        })
        .collect();
    if weights.iter().all(|&w| w <= 0.0) {
        // every point was down-weighted to zero; fall back to the plain kernel
        weights = (lo..hi)
            .map(|j| if h > 0.0 { tricube((xs[j] - x0).abs() / h) } else { 1.0 })
            .collect();
        if weights.iter().all(|&w| w <= 0.0) {
            weights.iter_mut().for_each(|w| *w = 1.0);
        }
    }

    let scale = if h > 0.0 { h } else { 1.0 };
    let mut deg = degree.min(2);
    loop {
        let dim = deg + 1;
        let mut a = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for (k, j) in (lo..hi).enumerate() {
            let w = weights[k];
            if w == 0.0 {
                continue;
            }
            let s = (xs[j] - x0) / scale;
            let powers = [1.0, s, s * s];
            for r in 0..dim {
                b[r] += w * powers[r] * ys[j];
                for c in 0..dim {
                    a[r][c] += w * powers[r] * powers[c];
                }
            }
        }
        match solve(a, b, dim) {
            Some(beta) => return beta[0],
            None if deg > 0 => deg -= 1,
            None => {
                let total: f64 = weights.iter().sum();
                return (lo..hi).zip(&weights).map(|(j, w)| w * ys[j]).sum::<f64>() / total;
            }
        }
    }
}

/// LOESS smoother evaluated at every input abscissa.
///
/// Each output is the value at `xs[i]` of a degree-`degree` polynomial fitted
/// by weighted least squares to the `window` nearest points, weighted by the
/// tricube kernel of distance normalized by the farthest point in the window.
pub fn loess_smooth(xs: &[f64], ys: &[f64], window: usize, degree: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if degree > 2 {
        return Err(Error::param(format!("LOESS degree must be 0, 1 or 2, got {degree}")));
    }
    if window.is_multiple_of(2) {
        return Err(Error::param(format!("LOESS window must be odd, got {window}")));
    }
    if window < degree + 1 || window > xs.len() {
        return Err(Error::param(format!(
            "LOESS window {window} must lie in [{}, {}]",
            degree + 1,
            xs.len()
        )));
    }
    if xs.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::param("LOESS abscissae must be strictly increasing"));
    }
    Ok(xs
        .iter()
        .map(|&x0| fit_at(xs, ys, None, x0, window, degree))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_window_edges() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(nearest_window(&xs, 0.0, 3), (0, 3));
        assert_eq!(nearest_window(&xs, 9.0, 3), (7, 10));
        assert_eq!(nearest_window(&xs, 4.0, 5), (2, 7));
        assert_eq!(nearest_window(&xs, -1.0, 3), (0, 3));
        assert_eq!(nearest_window(&xs, 10.0, 3), (7, 10));
    }

    #[test]
    fn constants_are_reproduced() {
        let xs: Vec<f64> = (0..11).map(f64::from).collect();
        let ys = vec![-3.25; 11];
        for degree in 0..=2 {
            for window in [3, 5, 7, 11] {
                let out = loess_smooth(&xs, &ys, window, degree).unwrap();
                assert!(out.iter().all(|&v| (v + 3.25).abs() < 1e-12), "{degree} {window}");
            }
        }
    }

    #[test]
    fn lines_are_reproduced_by_degree_one() {
        let xs: Vec<f64> = (0..15).map(|i| 0.5 * i as f64 + 1.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x).collect();
        for window in [3, 5, 9, 15] {
            let out = loess_smooth(&xs, &ys, window, 1).unwrap();
            for (o, y) in out.iter().zip(&ys) {
                assert!((o - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn parameter_errors() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0; 4];
        assert!(matches!(loess_smooth(&xs, &ys, 2, 1), Err(Error::Param(_))));
        assert!(matches!(loess_smooth(&xs, &ys, 5, 1), Err(Error::Param(_))));
        assert!(matches!(loess_smooth(&xs, &ys, 1, 2), Err(Error::Param(_))));
        assert!(matches!(loess_smooth(&[0.0, 0.0, 1.0], &[0.0; 3], 3, 1), Err(Error::Param(_))));
        assert!(matches!(loess_smooth(&xs, &ys[..3], 3, 1), Err(Error::Dimension { .. })));
    }

    #[test]
    fn solve_detects_singular() {
        let a = [[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0; 3]];
        assert!(solve(a, [1.0, 2.0, 0.0], 2).is_none());
        let a = [[2.0, 1.0, 0.0], [1.0, 3.0, 0.0], [0.0; 3]];
        let x = solve(a, [3.0, 5.0, 0.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }
}
