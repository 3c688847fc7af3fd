use std::collections::HashSet;

use serde_json::Value;

use crate::error::{Error, Result};

pub type Point = [f64; 2];
/// Closed ring: first point equals last point.
pub type Ring = Vec<Point>;

/// Boundary of one administrative unit: polygons, each an exterior ring
/// followed by its holes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGeometry {
    pub region_id: String,
    pub polygons: Vec<Vec<Ring>>,
}

impl RegionGeometry {
    pub fn new(region_id: impl Into<String>, polygons: Vec<Vec<Ring>>) -> Result<Self> {
        let g = RegionGeometry {
            region_id: region_id.into(),
            polygons,
        };
        g.validate()?;
        Ok(g)
    }

    /// Single-ring polygon from an open or closed list of corners.
    pub fn from_corners(region_id: impl Into<String>, corners: &[Point]) -> Result<Self> {
        let mut ring = corners.to_vec();
        if ring.first() != ring.last() {
            ring.push(ring[0]);
        }
        Self::new(region_id, vec![vec![ring]])
    }

    pub fn validate(&self) -> Result<()> {
        if self.polygons.is_empty() || self.polygons.iter().any(|p| p.is_empty()) {
            return Err(Error::Geometry(format!("region `{}` has an empty polygon", self.region_id)));
        }
        for ring in self.rings() {
            if ring.len() < 4 {
                return Err(Error::Geometry(format!(
                    "region `{}` has a ring with {} points (need >= 4)",
                    self.region_id,
                    ring.len()
                )));
            }
            if ring.first() != ring.last() {
                return Err(Error::Geometry(format!(
                    "region `{}` has an unclosed ring",
                    self.region_id
                )));
            }
            if ring.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return Err(Error::Geometry(format!(
                    "region `{}` has a non-finite coordinate",
                    self.region_id
                )));
            }
        }
        Ok(())
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.polygons.iter().flatten()
    }

    /// Boundary segments of every ring.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings()
            .flat_map(|r| r.windows(2).map(|w| (w[0], w[1])))
    }

    /// `[min_x, min_y, max_x, max_y]`.
    pub fn bbox(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in self.rings().flatten() {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
        b
    }

    /// Area-weighted centroid of the exterior rings (vertex mean if degenerate).
    pub fn centroid(&self) -> Point {
        let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for ring in self.polygons.iter().map(|p| &p[0]) {
            for w in ring.windows(2) {
                let cross = w[0][0] * w[1][1] - w[1][0] * w[0][1];
                a += cross;
                cx += (w[0][0] + w[1][0]) * cross;
                cy += (w[0][1] + w[1][1]) * cross;
            }
        }
        if a.abs() > 1e-300 {
            return [cx / (3.0 * a), cy / (3.0 * a)];
        }
        let pts: Vec<&Point> = self.rings().flatten().collect();
        let n = pts.len() as f64;
        [
            pts.iter().map(|p| p[0]).sum::<f64>() / n,
            pts.iter().map(|p| p[1]).sum::<f64>() / n,
        ]
    }
}

/// Parsed GeoJSON feature collection, keeping the source document for joins.
#[derive(Debug, Clone)]
pub struct GeoCollection {
    pub regions: Vec<RegionGeometry>,
    pub id_property: String,
    pub document: Value,
}

impl GeoCollection {
    pub fn ids(&self) -> Vec<&str> {
        self.regions.iter().map(|r| r.region_id.as_str()).collect()
    }
}

fn parse_ring(v: &Value) -> Result<Ring> {
    v.as_array()
        .ok_or_else(|| Error::Geometry("ring is not an array".into()))?
        .iter()
        .map(|p| {
            let xy = p.as_array().filter(|a| a.len() >= 2);
            match xy.map(|a| (a[0].as_f64(), a[1].as_f64())) {
                Some((Some(x), Some(y))) => Ok([x, y]),
                _ => Err(Error::Geometry(format!("bad position {p}"))),
            }
        })
        .collect()
}

fn parse_polygon(v: &Value) -> Result<Vec<Ring>> {
    v.as_array()
        .ok_or_else(|| Error::Geometry("polygon is not an array of rings".into()))?
        .iter()
        .map(parse_ring)
        .collect()
}

pub(crate) fn feature_id(feature: &Value, id_property: &str) -> Option<String> {
    let prop = feature
        .get("properties")
        .and_then(|p| p.get(id_property))
        .or_else(|| (id_property == "id").then(|| feature.get("id")).flatten())?;
    match prop {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Reads Polygon/MultiPolygon features; `id_property` names the property
/// holding each region id.
pub fn parse_geojson(text: &str, id_property: &str) -> Result<GeoCollection> {
    let document: Value = serde_json::from_str(text)?;
    if document.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::Geometry("expected a GeoJSON FeatureCollection".into()));
    }
    let features = document
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Geometry("FeatureCollection without features".into()))?;

    let mut regions = Vec::with_capacity(features.len());
    let mut seen = HashSet::new();
    for (idx, f) in features.iter().enumerate() {
        let id = feature_id(f, id_property).ok_or_else(|| {
            Error::Geometry(format!("feature {idx} has no `{id_property}` property"))
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::data(format!("duplicate region id `{id}`")));
        }
        let geom = f
            .get("geometry")
            .ok_or_else(|| Error::Geometry(format!("feature `{id}` has no geometry")))?;
        let coords = geom.get("coordinates").unwrap_or(&Value::Null);
        let polygons = match geom.get("type").and_then(Value::as_str) {
            Some("Polygon") => vec![parse_polygon(coords)?],
            Some("MultiPolygon") => coords
                .as_array()
                .ok_or_else(|| Error::Geometry(format!("feature `{id}`: bad MultiPolygon")))?
                .iter()
                .map(parse_polygon)
                .collect::<Result<_>>()?,
            other => {
                return Err(Error::Geometry(format!(
                    "feature `{id}` has unsupported geometry type {other:?}"
                )))
            }
        };
        regions.push(RegionGeometry::new(id, polygons)?);
    }
    Ok(GeoCollection {
        regions,
        id_property: id_property.to_string(),
        document,
    })
}
