//! Contiguity weights built from polygon boundaries.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geometry::{Point, RegionGeometry};
use crate::error::{Error, Result};

/// Vertex snapping grid, in coordinate units (degrees for lon/lat input).
pub const DEFAULT_SNAP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Binary,
    RowStandardized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Contiguity {
    /// Shared edge or shared vertex.
    #[default]
    Queen,
    /// Shared edge of positive length.
    Rook,
}

impl FromStr for Contiguity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "queen" => Ok(Contiguity::Queen),
            "rook" => Ok(Contiguity::Rook),
            other => Err(Error::param(format!("unknown contiguity `{other}` (queen|rook)"))),
        }
    }
}

/// Sparse weights matrix over `n` regions.
///
/// The neighbor graph is always symmetric. Weights are symmetric only in
/// binary mode; row standardization divides each row by its cardinality.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    ids: Vec<String>,
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    mode: WeightMode,
}

impl SpatialWeights {
    /// Binary weights from neighbor lists; the lists must describe a
    /// symmetric graph without self-loops.
    pub fn from_neighbors(ids: Vec<String>, neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = ids.len();
        if neighbors.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: neighbors.len(),
            });
        }
        let mut unique = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !unique.insert(id.as_str())) {
            return Err(Error::data(format!("duplicate region id `{dup}`")));
        }
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, list) in neighbors.iter().enumerate() {
            for &j in list {
                if j >= n || j == i {
                    return Err(Error::data(format!(
                        "region `{}` has invalid neighbor index {j}",
                        ids[i]
                    )));
                }
                sets[i].insert(j);
            }
        }
        for i in 0..n {
            if let Some(&j) = sets[i].iter().find(|&&j| !sets[j].contains(&i)) {
                return Err(Error::data(format!(
                    "neighbor graph is not symmetric: `{}` lists `{}` but not vice versa",
                    ids[i], ids[j]
                )));
            }
        }
        let neighbors: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let weights = neighbors.iter().map(|l| vec![1.0; l.len()]).collect();
        Ok(SpatialWeights {
            ids,
            neighbors,
            weights,
            mode: WeightMode::Binary,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Weights aligned with [`Self::neighbors`].
    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.neighbors[i].binary_search(&j) {
            Ok(k) => self.weights[i][k],
            Err(_) => 0.0,
        }
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.weights[i].iter().sum()
    }

    /// Sum of all weights.
    pub fn s0(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }

    /// Regions without neighbors.
    pub fn islands(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.neighbors[i].is_empty()).collect()
    }

    pub fn is_island(&self, i: usize) -> bool {
        self.neighbors[i].is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Number of undirected neighbor pairs.
    pub fn pair_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Dense `n × n` copy; only sensible for small problems and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n()]; self.n()];
        for i in 0..self.n() {
            for (&j, &w) in self.neighbors[i].iter().zip(&self.weights[i]) {
                m[i][j] = w;
            }
        }
        m
    }

    /// Plain-text neighbor list, one `id: neighbor neighbor …` line per
    /// region. Spaces, colons and backslashes inside ids are backslash-escaped.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n() {
            out.push_str(&escape_id(&self.ids[i]));
            out.push(':');
            for &j in &self.neighbors[i] {
                out.push(' ');
                out.push_str(&escape_id(&self.ids[j]));
            }
            out.push('\n');
        }
        out
    }

    /// Reads the text form back as binary weights.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<(String, Vec<String>)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens = split_escaped(line).map_err(|m| Error::Row {
                line: lineno as u64 + 1,
                message: m,
            })?;
            let (head, rest) = tokens.split_first().ok_or_else(|| Error::Row {
                line: lineno as u64 + 1,
                message: "empty line".into(),
            })?;
            let id = head.strip_suffix(':').ok_or_else(|| Error::Row {
                line: lineno as u64 + 1,
                message: format!("expected `id:` but found `{head}`"),
            })?;
            rows.push((id.to_string(), rest.to_vec()));
        }
        Self::from_named(rows)
    }

    fn from_named(rows: Vec<(String, Vec<String>)>) -> Result<Self> {
        let index: HashMap<&str, usize> = rows
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (id.as_str(), i))
            .collect();
        let mut neighbors = Vec::with_capacity(rows.len());
        for (id, list) in &rows {
            let idx = list
                .iter()
                .map(|n| {
                    index.get(n.as_str()).copied().ok_or_else(|| {
                        Error::data(format!("region `{id}` lists unknown neighbor `{n}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            neighbors.push(idx);
        }
        Self::from_neighbors(rows.into_iter().map(|r| r.0).collect(), neighbors)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = WeightsDoc {
            mode: self.mode,
            regions: (0..self.n())
                .map(|i| RegionDoc {
                    id: self.ids[i].clone(),
                    neighbors: self.neighbors[i]
                        .iter()
                        .zip(&self.weights[i])
                        .map(|(&j, &w)| NeighborDoc {
                            id: self.ids[j].clone(),
                            weight: w,
                        })
                        .collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: WeightsDoc = serde_json::from_str(text)?;
        let rows = doc
            .regions
            .iter()
            .map(|r| (r.id.clone(), r.neighbors.iter().map(|n| n.id.clone()).collect()))
            .collect();
        let mut w = Self::from_named(rows)?;
        w.mode = doc.mode;
        for (i, r) in doc.regions.iter().enumerate() {
            for nb in &r.neighbors {
                if !(nb.weight >= 0.0) {
                    return Err(Error::data(format!("negative weight {} in row `{}`", nb.weight, r.id)));
                }
                let j = w.index_of(&nb.id).unwrap();
                let k = w.neighbors[i].binary_search(&j).unwrap();
                w.weights[i][k] = nb.weight;
            }
        }
        Ok(w)
    }
}

#[derive(Serialize, Deserialize)]
struct WeightsDoc {
    mode: WeightMode,
    regions: Vec<RegionDoc>,
}

#[derive(Serialize, Deserialize)]
struct RegionDoc {
    id: String,
    neighbors: Vec<NeighborDoc>,
}

#[derive(Serialize, Deserialize)]
struct NeighborDoc {
    id: String,
    weight: f64,
}

fn escape_id(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for c in id.chars() {
        if matches!(c, ' ' | ':' | '\\' | '\t') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

/// Splits on unescaped whitespace; an unescaped trailing `:` stays on its token.
fn split_escaped(line: &str) -> std::result::Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut escaped = false;
    for c in line.chars() {
        if escaped {
            cur.push(c);
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c.is_whitespace() {
            if !cur.is_empty() {
                tokens.push(std::mem::take(&mut cur));
            }
        } else if c == ':' {
            // id terminator, kept so the caller can recognise the head token
            cur.push(':');
            tokens.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    if escaped {
        return Err("dangling escape".into());
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    Ok(tokens)
}

type Snapped = (i64, i64);

fn snap(p: Point, tol: f64) -> Snapped {
    ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64)
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}

/// Length of the common part of two segments lying on the same line
/// (within `tol`); zero when they are not collinear.
fn collinear_overlap(a: (Point, Point), b: (Point, Point), tol: f64) -> f64 {
    let (dx, dy) = (a.1[0] - a.0[0], a.1[1] - a.0[1]);
    let len = (dx * dx + dy * dy).sqrt();
    if len <= tol {
        return 0.0;
    }
    let (ux, uy) = (dx / len, dy / len);
    let offset = |p: Point| ((p[0] - a.0[0]) * -uy + (p[1] - a.0[1]) * ux).abs();
    if offset(b.0) > tol || offset(b.1) > tol {
        return 0.0;
    }
    let along = |p: Point| (p[0] - a.0[0]) * ux + (p[1] - a.0[1]) * uy;
    let (t0, t1) = (along(b.0), along(b.1));
    let lo = t0.min(t1).max(0.0);
    let hi = t0.max(t1).min(len);
    (hi - lo).max(0.0)
}

fn boxes_touch(a: &[f64; 4], b: &[f64; 4], tol: f64) -> bool {
    a[0] <= b[2] + tol && b[0] <= a[2] + tol && a[1] <= b[3] + tol && b[1] <= a[3] + tol
}

fn in_box(p: Point, b: &[f64; 4], tol: f64) -> bool {
    p[0] >= b[0] - tol && p[0] <= b[2] + tol && p[1] >= b[1] - tol && p[1] <= b[3] + tol
}

fn segment_in_box(s: (Point, Point), b: &[f64; 4], tol: f64) -> bool {
    let sb = [
        s.0[0].min(s.1[0]),
        s.0[1].min(s.1[1]),
        s.0[0].max(s.1[0]),
        s.0[1].max(s.1[1]),
    ];
    boxes_touch(&sb, b, tol)
}

fn validate_geoms(geoms: &[RegionGeometry], snap_tol: f64) -> Result<()> {
    if geoms.len() < 2 {
        return Err(Error::param("contiguity needs at least two regions"));
    }
    if !(snap_tol > 0.0) {
        return Err(Error::param(format!("snap tolerance must be positive, got {snap_tol}")));
    }
    let mut seen = HashSet::new();
    for g in geoms {
        if !seen.insert(g.region_id.as_str()) {
            return Err(Error::data(format!("duplicate region id `{}`", g.region_id)));
        }
        g.validate()?;
    }
    Ok(())
}

fn contiguity(geoms: &[RegionGeometry], snap_tol: f64, kind: Contiguity) -> Result<SpatialWeights> {
    validate_geoms(geoms, snap_tol)?;
    let n = geoms.len();
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();

    // exact matches on the snapped grid
    let mut owners: HashMap<Snapped, Vec<usize>> = HashMap::new();
    for (i, g) in geoms.iter().enumerate() {
        let keys: HashSet<Snapped> = match kind {
            Contiguity::Queen => g.rings().flatten().map(|&p| snap(p, snap_tol)).collect(),
            Contiguity::Rook => HashSet::new(),
        };
        for k in keys {
            owners.entry(k).or_default().push(i);
        }
    }
    let mut edge_owners: HashMap<(Snapped, Snapped), Vec<usize>> = HashMap::new();
    for (i, g) in geoms.iter().enumerate() {
        let edges: HashSet<(Snapped, Snapped)> = g
            .segments()
            .map(|(a, b)| (snap(a, snap_tol), snap(b, snap_tol)))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        for e in edges {
            edge_owners.entry(e).or_default().push(i);
        }
    }
    for list in owners.values().chain(edge_owners.values()) {
        for (x, &a) in list.iter().enumerate() {
            for &b in &list[x + 1..] {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }

    // contacts that do not line up vertex-for-vertex (T-junctions, split edges)
    let boxes: Vec<[f64; 4]> = geoms.iter().map(RegionGeometry::bbox).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| boxes[a][0].total_cmp(&boxes[b][0]));
    for (x, &a) in order.iter().enumerate() {
        for &b in &order[x + 1..] {
            if boxes[b][0] > boxes[a][2] + snap_tol {
                break;
            }
            let key = (a.min(b), a.max(b));
            if pairs.contains(&key) || !boxes_touch(&boxes[a], &boxes[b], snap_tol) {
                continue;
            }
            let overlap = [
                boxes[a][0].max(boxes[b][0]),
                boxes[a][1].max(boxes[b][1]),
                boxes[a][2].min(boxes[b][2]),
                boxes[a][3].min(boxes[b][3]),
            ];
            let segs = |g: &RegionGeometry| -> Vec<(Point, Point)> {
                g.segments()
                    .filter(|s| segment_in_box(*s, &overlap, snap_tol))
                    .collect()
            };
            let (sa, sb) = (segs(&geoms[a]), segs(&geoms[b]));
            let touching = match kind {
                Contiguity::Queen => {
                    let vertex_on = |segs_p: &[(Point, Point)], segs_q: &[(Point, Point)]| {
                        segs_p.iter().flat_map(|s| [s.0, s.1]).any(|p| {
                            in_box(p, &overlap, snap_tol)
                                && segs_q
                                    .iter()
                                    .any(|q| point_segment_distance(p, q.0, q.1) <= snap_tol)
                        })
                    };
                    vertex_on(&sa, &sb) || vertex_on(&sb, &sa)
                }
                Contiguity::Rook => sa
                    .iter()
                    .any(|&s| sb.iter().any(|&q| collinear_overlap(s, q, snap_tol) > snap_tol)),
            };
            if touching {
                pairs.insert(key);
            }
        }
    }

    let mut neighbors = vec![Vec::new(); n];
    for (a, b) in pairs {
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    SpatialWeights::from_neighbors(geoms.iter().map(|g| g.region_id.clone()).collect(), neighbors)
}

/// Queen contiguity: regions sharing any boundary point are neighbors.
///
/// Vertices are snapped to a grid of `snap_tol`; a vertex lying within
/// `snap_tol` of another region's boundary segment also counts as contact.
pub fn queen_adjacency(geoms: &[RegionGeometry], snap_tol: f64) -> Result<SpatialWeights> {
    contiguity(geoms, snap_tol, Contiguity::Queen)
}

/// Rook contiguity: regions must share a boundary stretch longer than
/// `snap_tol`. Corner-only contact does not count.
pub fn rook_adjacency(geoms: &[RegionGeometry], snap_tol: f64) -> Result<SpatialWeights> {
    contiguity(geoms, snap_tol, Contiguity::Rook)
}

pub fn adjacency(geoms: &[RegionGeometry], snap_tol: f64, kind: Contiguity) -> Result<SpatialWeights> {
    contiguity(geoms, snap_tol, kind)
}

/// Divides every non-island row by its sum. Island rows stay zero; list them
/// with [`SpatialWeights::islands`].
pub fn row_standardize(w: &SpatialWeights) -> SpatialWeights {
    let mut out = w.clone();
    for row in out.weights.iter_mut() {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|x| *x /= sum);
        }
    }
    out.mode = WeightMode::RowStandardized;
    out
}

/// Links every island to its `k` nearest regions by centroid distance
/// (symmetrically, so the neighbor graph stays symmetric). Binary weights only.
pub fn attach_islands_knn(w: &SpatialWeights, centroids: &[Point], k: usize) -> Result<SpatialWeights> {
    if w.mode != WeightMode::Binary {
        return Err(Error::param("island linking expects binary weights"));
    }
    if centroids.len() != w.n() {
        return Err(Error::Dimension {
            expected: w.n(),
            got: centroids.len(),
        });
    }
    let mut neighbors = w.neighbors.clone();
    for i in w.islands() {
        let mut others: Vec<(f64, usize)> = (0..w.n())
            .filter(|&j| j != i)
            .map(|j| {
                let d = (centroids[i][0] - centroids[j][0]).hypot(centroids[i][1] - centroids[j][1]);
                (d, j)
            })
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(k) {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
    }
    SpatialWeights::from_neighbors(w.ids.clone(), neighbors)
}

impl std::fmt::Display for SpatialWeights {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} regions, {} pairs, {} islands",
            self.n(),
            self.pair_count(),
            self.islands().len()
        )
    }
}
