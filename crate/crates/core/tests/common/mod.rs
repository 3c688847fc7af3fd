//! Helpers and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use esda_mobility::spatial::{row_standardize, RegionGeometry, SpatialWeights};
use sha2::{Digest, Sha256};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// Unit squares, row-major, ids `r{row}c{col}`.
pub fn grid(rows: usize, cols: usize) -> Vec<RegionGeometry> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = (c as f64, -(r as f64));
            out.push(
                RegionGeometry::from_corners(
                    format!("r{r}c{c}"),
                    &[[x, y], [x + 1.0, y], [x + 1.0, y - 1.0], [x, y - 1.0]],
                )
                .unwrap(),
            );
        }
    }
    out
}

/// Lattice neighbors written down from cell indices, not from polygons.
pub fn lattice_neighbors(rows: usize, cols: usize, queen: bool) -> Vec<Vec<usize>> {
    let mut nb = vec![Vec::new(); rows * cols];
    for r in 0..rows as i64 {
        for c in 0..cols as i64 {
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    if (dr, dc) == (0, 0) || (!queen && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (rr, cc) = (r + dr, c + dc);
                    if rr >= 0 && cc >= 0 && rr < rows as i64 && cc < cols as i64 {
                        nb[(r * cols as i64 + c) as usize].push((rr * cols as i64 + cc) as usize);
                    }
                }
            }
        }
    }
    nb
}

pub fn weights_from(nb: Vec<Vec<usize>>) -> SpatialWeights {
    let ids = (0..nb.len()).map(|i| format!("u{i}")).collect();
    row_standardize(&SpatialWeights::from_neighbors(ids, nb).unwrap())
}

pub fn lattice(rows: usize, cols: usize, queen: bool) -> SpatialWeights {
    weights_from(lattice_neighbors(rows, cols, queen))
}

/// Row-standardized dense matrix from neighbor lists.
pub fn dense_rowstd(nb: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = nb.len();
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in nb.iter().enumerate() {
        for &j in row {
            m[i][j] = 1.0 / row.len() as f64;
        }
    }
    m
}

/// `I = n / S0 · Σ w_ij d_i d_j / Σ d_i²` with `d = x − mean`.
pub fn dense_moran(x: &[f64], w: &[Vec<f64>]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let s0: f64 = w.iter().flatten().sum();
    let mut num = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            num += w[i][j] * d[i] * d[j];
        }
    }
    n / s0 * num / d.iter().map(|v| v * v).sum::<f64>()
}

/// `I_i = d_i / m2 · Σ_j w_ij d_j`, `m2 = Σ d² / n`.
pub fn dense_local(x: &[f64], w: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let m2 = d.iter().map(|v| v * v).sum::<f64>() / n;
    (0..x.len())
        .map(|i| d[i] / m2 * (0..x.len()).map(|j| w[i][j] * d[j]).sum::<f64>())
        .collect()
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..left.len() {
            let v = left.remove(k);
            prefix.push(v);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(k, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Extreme-count rule with the library's relative tie tolerance.
pub fn at_least_as_extreme(stat: f64, observed: f64, upper: bool) -> bool {
    let tol = 1e-10 * observed.abs().max(1.0);
    if upper {
        stat >= observed - tol
    } else {
        stat <= observed + tol
    }
}

/// Folded exhaustive pseudo-p of global Moran's I by brute force.
pub fn brute_force_global_p(x: &[f64], w: &[Vec<f64>]) -> f64 {
    let n = x.len();
    let observed = dense_moran(x, w);
    let upper = observed >= -1.0 / (n as f64 - 1.0);
    let perms = permutations(n);
    let hits = perms
        .iter()
        .filter(|p| {
            let xp: Vec<f64> = p.iter().map(|&k| x[k]).collect();
            at_least_as_extreme(dense_moran(&xp, w), observed, upper)
        })
        .count();
    hits as f64 / perms.len() as f64
}

/// Exhaustive pseudo-p counting `|I − E| ≥ |I_obs − E|` over all `n!` labelings.
pub fn brute_force_global_p_two_sided(x: &[f64], w: &[Vec<f64>]) -> f64 {
    let n = x.len();
    let expected = -1.0 / (n as f64 - 1.0);
    let observed = dense_moran(x, w);
    let tol = 1e-10 * observed.abs().max(1.0);
    let perms = permutations(n);
    let hits = perms
        .iter()
        .filter(|p| {
            let xp: Vec<f64> = p.iter().map(|&k| x[k]).collect();
            (dense_moran(&xp, w) - expected).abs() >= (observed - expected).abs() - tol
        })
        .count();
    hits as f64 / perms.len() as f64
}

/// Conditional exhaustive pseudo-p of local Moran's I by brute force:
/// `x_i` stays, the remaining values are permuted over the other sites.
pub fn brute_force_local_p(x: &[f64], w: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let observed = dense_local(x, w);
    (0..n)
        .map(|i| {
            let row_sum: f64 = w[i].iter().sum();
            if row_sum == 0.0 {
                return 1.0;
            }
            let mean = x.iter().sum::<f64>() / n as f64;
            let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let zi2 = (x[i] - mean).powi(2) / m2;
            let upper = observed[i] >= -zi2 * row_sum / (n as f64 - 1.0);
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let perms = permutations(n - 1);
            let hits = perms
                .iter()
                .filter(|p| {
                    let mut xp = x.to_vec();
                    for (slot, &k) in others.iter().zip(p.iter()) {
                        xp[*slot] = x[others[k]];
                    }
                    at_least_as_extreme(dense_local(&xp, w)[i], observed[i], upper)
                })
                .count();
            hits as f64 / perms.len() as f64
        })
        .collect()
}

/// SHA-256 of every file under `root`, keyed by relative path.
pub fn hash_tree(root: &Path) -> BTreeMap<String, String> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, String>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let digest = Sha256::digest(std::fs::read(&p).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), hex);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
