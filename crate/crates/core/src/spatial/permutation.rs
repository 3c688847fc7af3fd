//! Permutation inference for global and local Moran's I.
//!
//! Monte Carlo mode draws replicate `r` from a ChaCha stream keyed by
//! `(seed, r)` (global) or `(seed, region)` (local), so results do not depend
//! on thread scheduling. Exhaustive mode enumerates every relabeling and
//! reports the exact permutation p-value `M / R`, with the observed labeling
//! among the `R` enumerated ones.

use std::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moran::ValueField;
use super::weights::{SpatialWeights, WeightMode};
use crate::error::{Error, Result};

/// Statistics within this (relative) distance of the observed value count as ties.
const TIE_TOL: f64 = 1e-10;

const MAX_EXHAUSTIVE: u64 = 40_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    /// Count replicates at least as extreme on the observed side of the
    /// null expectation.
    #[default]
    Folded,
    Greater,
    Less,
    /// Count replicates whose distance from the null expectation is at
    /// least the observed distance.
    TwoSided,
}

impl FromStr for Sidedness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "folded" | "one_sided_folded" => Ok(Sidedness::Folded),
            "greater" => Ok(Sidedness::Greater),
            "less" => Ok(Sidedness::Less),
            "two_sided" | "two-sided" => Ok(Sidedness::TwoSided),
            other => Err(Error::param(format!("unknown sidedness `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    MonteCarlo { permutations: usize, seed: u64 },
    Exhaustive,
}

impl Sampling {
    pub fn monte_carlo(permutations: usize, seed: u64) -> Self {
        Sampling::MonteCarlo { permutations, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoranGlobalResult {
    pub i: f64,
    /// `-1 / (n - 1)`.
    pub expected: f64,
    pub sampling: Sampling,
    pub sidedness: Sidedness,
    /// Number of replicates evaluated (`n!` in exhaustive mode).
    pub replicates: u64,
    /// Replicates at least as extreme as the observed value.
    pub extreme_count: u64,
    pub sim_mean: f64,
    pub sim_sd: f64,
    pub pseudo_p: f64,
}

#[derive(Debug, Clone, Copy)]
enum Tail {
    Upper,
    Lower,
    Distance(f64),
}

fn is_extreme(stat: f64, observed: f64, tail: Tail) -> bool {
    let tol = TIE_TOL * observed.abs().max(1.0);
    match tail {
        Tail::Upper => stat >= observed - tol,
        Tail::Lower => stat <= observed + tol,
        Tail::Distance(center) => (stat - center).abs() >= (observed - center).abs() - tol,
    }
}

fn tail(sidedness: Sidedness, observed: f64, expected: f64) -> Tail {
    match sidedness {
        Sidedness::Greater => Tail::Upper,
        Sidedness::Less => Tail::Lower,
        Sidedness::Folded if observed >= expected => Tail::Upper,
        Sidedness::Folded => Tail::Lower,
        Sidedness::TwoSided => Tail::Distance(expected),
    }
}

/// `Σ_ij w_ij z_i z_j` with `z` read through `perm`.
fn cross_product(w: &SpatialWeights, z: &[f64], perm: &[usize]) -> f64 {
    (0..w.n())
        .map(|i| {
            let row: f64 = w
                .neighbors(i)
                .iter()
                .zip(w.weights(i))
                .map(|(&j, &wij)| wij * z[perm[j]])
                .sum();
            z[perm[i]] * row
        })
        .sum()
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Heap's algorithm; calls `visit` once per permutation of `0..n`.
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Global Moran's I with a permutation pseudo p-value.
///
/// Monte Carlo: `p = (M + 1) / (R + 1)`. Exhaustive: `p = M / n!`.
pub fn moran_permutation(
    field: &ValueField,
    w: &SpatialWeights,
    sampling: Sampling,
    sidedness: Sidedness,
) -> Result<MoranGlobalResult> {
    if w.n() != field.len() {
        return Err(Error::Dimension {
            expected: w.n(),
            got: field.len(),
        });
    }
    field.require_variance()?;
    let n = w.n();
    let s0 = w.s0();
    if !(s0 > 0.0) {
        return Err(Error::data("weights have no links (S0 = 0)"));
    }
    let z = &field.z;
    let scale = n as f64 / s0 / z.iter().map(|v| v * v).sum::<f64>();
    let identity: Vec<usize> = (0..n).collect();
    let observed = scale * cross_product(w, z, &identity);
    let expected = -1.0 / (n as f64 - 1.0);
    let tail = tail(sidedness, observed, expected);

    let sims: Vec<f64> = match sampling {
        Sampling::MonteCarlo { permutations, seed } => {
            if permutations == 0 {
                return Err(Error::param("permutations must be >= 1"));
            }
            (0..permutations as u64)
                .into_par_iter()
                .map(|r| {
                    let mut perm = identity.clone();
                    perm.shuffle(&mut replicate_rng(seed, r));
                    scale * cross_product(w, z, &perm)
                })
                .collect()
        }
        Sampling::Exhaustive => {
            if factorial(n.min(20)) > MAX_EXHAUSTIVE || n > 20 {
                return Err(Error::param(format!("exhaustive enumeration of {n}! labelings is too large")));
            }
            let mut out = Vec::with_capacity(factorial(n) as usize);
            for_each_permutation(n, |p| out.push(scale * cross_product(w, z, p)));
            out
        }
    };

    let extreme = sims.iter().filter(|&&s| is_extreme(s, observed, tail)).count() as u64;
    let replicates = sims.len() as u64;
    let pseudo_p = match sampling {
        Sampling::MonteCarlo { .. } => (extreme + 1) as f64 / (replicates + 1) as f64,
        Sampling::Exhaustive => extreme as f64 / replicates as f64,
    };
    let (sim_mean, sim_sd) = mean_sd(&sims);
    Ok(MoranGlobalResult {
        i: observed,
        expected,
        sampling,
        sidedness,
        replicates,
        extreme_count: extreme,
        sim_mean,
        sim_sd,
        pseudo_p,
    })
}

/// Conditional-permutation pseudo p-values for local Moran's I.
///
/// For region `i`, `z_i` stays fixed and its `|N(i)|` neighbor slots are
/// filled by drawing without replacement from the other `n - 1` values.
/// Folded sidedness around the conditional expectation
/// `-z_i² · Σ_j w_ij / (n - 1)`. Islands get `p = 1`.
pub fn lisa_permutation(field: &ValueField, w: &SpatialWeights, sampling: Sampling) -> Result<Vec<f64>> {
    if w.n() != field.len() {
        return Err(Error::Dimension {
            expected: w.n(),
            got: field.len(),
        });
    }
    if w.mode() != WeightMode::RowStandardized {
        return Err(Error::param("row-standardized weights required"));
    }
    field.require_variance()?;
    if let Sampling::MonteCarlo { permutations: 0, .. } = sampling {
        return Err(Error::param("permutations must be >= 1"));
    }
    let n = w.n();
    let z = &field.z;

    (0..n)
        .into_par_iter()
        .map(|i| {
            let k = w.neighbors(i).len();
            if k == 0 {
                return Ok(1.0);
            }
            let wi = w.weights(i);
            let zi = z[i];
            let lag: f64 = w.neighbors(i).iter().zip(wi).map(|(&j, &wij)| wij * z[j]).sum();
            let observed = zi * lag;
            let expected = -zi * zi * w.row_sum(i) / (n as f64 - 1.0);
            let tail = tail(Sidedness::Folded, observed, expected);
            let others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| z[j]).collect();
            let stat = |pick: &mut dyn Iterator<Item = usize>| -> f64 {
                zi * pick.zip(wi).map(|(m, &wij)| wij * others[m]).sum::<f64>()
            };

            match sampling {
                Sampling::MonteCarlo { permutations, seed } => {
                    let mut rng = replicate_rng(seed, i as u64);
                    let mut extreme = 0u64;
                    for _ in 0..permutations {
                        let s = stat(&mut sample(&mut rng, n - 1, k).into_iter());
                        if is_extreme(s, observed, tail) {
                            extreme += 1;
                        }
                    }
                    Ok((extreme + 1) as f64 / (permutations as u64 + 1) as f64)
                }
                Sampling::Exhaustive => {
                    let total: u64 = ((n - k)..n).map(|v| v as u64).product();
                    if total > MAX_EXHAUSTIVE {
                        return Err(Error::param(format!(
                            "exhaustive conditional enumeration for region {i} needs {total} draws"
                        )));
                    }
                    let mut extreme = 0u64;
                    let mut chosen = Vec::with_capacity(k);
                    let mut used = vec![false; n - 1];
                    for_each_arrangement(n - 1, k, &mut chosen, &mut used, &mut |pick| {
                        if is_extreme(stat(&mut pick.iter().copied()), observed, tail) {
                            extreme += 1;
                        }
                    });
                    Ok(extreme as f64 / total as f64)
                }
            }
        })
        .collect()
}

/// Every ordered selection of `k` distinct items from `0..m`.
fn for_each_arrangement(
    m: usize,
    k: usize,
    chosen: &mut Vec<usize>,
    used: &mut [bool],
    visit: &mut dyn FnMut(&[usize]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for j in 0..m {
        if !used[j] {
            used[j] = true;
            chosen.push(j);
            for_each_arrangement(m, k, chosen, used, visit);
            chosen.pop();
            used[j] = false;
        }
    }
}
