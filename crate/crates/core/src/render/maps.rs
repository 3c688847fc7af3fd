use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::color::{ColorScale, Rgb};
use super::svg::{num, Svg};
use super::FigureSpec;
use crate::error::Result;
use crate::spatial::{ClusterLabel, LisaResult, Quadrant, RegionGeometry, Tier};

const LEGEND_WIDTH: f64 = 150.0;

pub fn cluster_color(label: ClusterLabel) -> Rgb {
    match label {
        ClusterLabel::Significant(Quadrant::HH) => Rgb(0xff, 0x00, 0x00),
        ClusterLabel::Significant(Quadrant::LL) => Rgb(0x00, 0x00, 0xff),
        ClusterLabel::Significant(Quadrant::LH) => Rgb(0xa7, 0xad, 0xf9),
        ClusterLabel::Significant(Quadrant::HL) => Rgb(0xf4, 0xad, 0xa8),
        ClusterLabel::NotSignificant => Rgb(0xee, 0xee, 0xee),
    }
}

pub fn tier_color(tier: Tier) -> Rgb {
    match tier {
        Tier::NotSignificant => Rgb(0xee, 0xee, 0xee),
        Tier::P05 => Rgb(0xa1, 0xd9, 0x9b),
        Tier::P01 => Rgb(0x41, 0xab, 0x5d),
        Tier::P001 => Rgb(0x00, 0x6d, 0x2c),
    }
}

/// Maps lon/lat into the drawing area, preserving aspect ratio.
struct Projection {
    scale: f64,
    offset_x: f64,
    offset_y: f64,
    min_x: f64,
    max_y: f64,
}

impl Projection {
    fn fit(geoms: &[RegionGeometry], area: [f64; 4]) -> Projection {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for g in geoms {
            let gb = g.bbox();
            b = [b[0].min(gb[0]), b[1].min(gb[1]), b[2].max(gb[2]), b[3].max(gb[3])];
        }
        if !b[0].is_finite() {
            b = [0.0, 0.0, 1.0, 1.0];
        }
        let dx = (b[2] - b[0]).max(1e-12);
        let dy = (b[3] - b[1]).max(1e-12);
        let (w, h) = (area[2] - area[0], area[3] - area[1]);
        let scale = (w / dx).min(h / dy);
        Projection {
            scale,
            offset_x: area[0] + (w - dx * scale) / 2.0,
            offset_y: area[1] + (h - dy * scale) / 2.0,
            min_x: b[0],
            max_y: b[3],
        }
    }

    fn apply(&self, p: [f64; 2]) -> (f64, f64) {
        (
            self.offset_x + (p[0] - self.min_x) * self.scale,
            self.offset_y + (self.max_y - p[1]) * self.scale,
        )
    }
}

fn polygon_path(proj: &Projection, rings: &[Vec<[f64; 2]>]) -> String {
    let mut d = String::new();
    for ring in rings {
        for (k, p) in ring[..ring.len() - 1].iter().enumerate() {
            let (x, y) = proj.apply(*p);
            d.push_str(if k == 0 { "M" } else { " L" });
            d.push_str(&format!("{} {}", num(x, 2), num(y, 2)));
        }
        d.push_str(" Z ");
    }
    d.trim_end().to_string()
}

struct MapLayer<'a> {
    geoms: &'a [RegionGeometry],
    fills: Vec<Rgb>,
    legend: Vec<(String, String)>,
    notes: Vec<String>,
    warnings: Vec<String>,
}

fn draw_map(spec: &FigureSpec, layer: MapLayer<'_>) -> Result<String> {
    spec.validate()?;
    let top = spec.margin + if spec.title.is_empty() { 0.0 } else { 12.0 };
    let area = [
        spec.margin,
        top,
        (spec.width - spec.margin - LEGEND_WIDTH).max(spec.margin + 1.0),
        spec.height - spec.margin,
    ];
    let proj = Projection::fit(layer.geoms, area);
    let mut svg = Svg::new(spec);
    svg.line("<g id=\"regions\" stroke=\"#333333\" stroke-width=\"0.5\" fill-rule=\"evenodd\">");
    for (g, fill) in layer.geoms.iter().zip(&layer.fills) {
        for poly in &g.polygons {
            svg.line(format!(
                "<path data-region=\"{}\" fill=\"{fill}\" d=\"{}\"/>",
                super::svg::escape(&g.region_id),
                polygon_path(&proj, poly)
            ));
        }
    }
    svg.line("</g>");
    let legend_x = spec.width - spec.margin - LEGEND_WIDTH + 10.0;
    svg.legend(legend_x, top + 10.0, spec.legend_title.as_deref(), &layer.legend);
    let mut y = top + 24.0 + 16.0 * layer.legend.len() as f64;
    for note in &layer.notes {
        svg.text(legend_x, y, 11.0, "start", note);
        y += 14.0;
    }
    if !layer.warnings.is_empty() {
        svg.line("<g id=\"warnings\">");
        for (k, w) in layer.warnings.iter().enumerate() {
            svg.text(spec.margin, spec.height - 6.0 - 12.0 * k as f64, 10.0, "start", w);
        }
        svg.line("</g>");
    }
    Ok(svg.finish())
}

fn unmatched_warnings<'a>(geoms: &[RegionGeometry], ids: impl Iterator<Item = &'a str>) -> Vec<String> {
    let have: BTreeSet<&str> = geoms.iter().map(|g| g.region_id.as_str()).collect();
    let orphans: BTreeSet<&str> = ids.filter(|id| !have.contains(id)).collect();
    orphans
        .into_iter()
        .map(|id| format!("no geometry for region {id}"))
        .collect()
}

/// Choropleth of `values` (region id -> value, `None` = missing).
pub fn render_choropleth(
    geoms: &[RegionGeometry],
    values: &BTreeMap<String, Option<f64>>,
    scale: &ColorScale,
    spec: &FigureSpec,
) -> Result<String> {
    let fills: Vec<Rgb> = geoms
        .iter()
        .map(|g| scale.color(values.get(&g.region_id).copied().flatten()))
        .collect();
    let mut legend: Vec<(String, String)> = scale
        .stops()
        .iter()
        .map(|(v, c)| (c.hex(), num(*v, 3)))
        .collect();
    let any_missing = geoms
        .iter()
        .any(|g| !matches!(values.get(&g.region_id), Some(Some(v)) if v.is_finite()));
    if any_missing {
        legend.push((scale.missing_color.hex(), "missing".into()));
    }
    let present: Vec<f64> = geoms
        .iter()
        .filter_map(|g| values.get(&g.region_id).copied().flatten())
        .filter(|v| v.is_finite())
        .collect();
    let mut notes = Vec::new();
    if !present.is_empty() {
        let min = present.iter().copied().fold(f64::INFINITY, f64::min);
        let max = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        notes.push(format!("min {}", num(min, 3)));
        notes.push(format!("max {}", num(max, 3)));
    }
    draw_map(
        spec,
        MapLayer {
            geoms,
            fills,
            legend,
            notes,
            warnings: unmatched_warnings(geoms, values.keys().map(String::as_str)),
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct LisaMaps {
    pub cluster: String,
    pub significance: String,
}

/// LISA cluster map and significance map.
pub fn render_lisa_maps(geoms: &[RegionGeometry], lisa: &LisaResult, spec: &FigureSpec) -> Result<LisaMaps> {
    let by_id: HashMap<&str, usize> = lisa
        .regions
        .iter()
        .enumerate()
        .map(|(i, r)| (r.region_id.as_str(), i))
        .collect();
    let lookup = |g: &RegionGeometry| by_id.get(g.region_id.as_str()).map(|&i| &lisa.regions[i]);
    let warnings = unmatched_warnings(geoms, lisa.regions.iter().map(|r| r.region_id.as_str()));
    let missing = geoms.iter().any(|g| lookup(g).is_none());

    let mut legend: Vec<(String, String)> = ClusterLabel::ALL
        .iter()
        .map(|c| {
            let label = match c {
                ClusterLabel::Significant(q) => format!("{} ({})", q.as_str(), q.number()),
                ClusterLabel::NotSignificant => "Not significant".into(),
            };
            (cluster_color(*c).hex(), label)
        })
        .collect();
    if missing {
        legend.push(("#ffffff".into(), "No data".into()));
    }
    let cluster = draw_map(
        &FigureSpec {
            legend_title: Some(spec.legend_title.clone().unwrap_or_else(|| "LISA cluster".into())),
            ..spec.clone()
        },
        MapLayer {
            geoms,
            fills: geoms
                .iter()
                .map(|g| lookup(g).map_or(Rgb(0xff, 0xff, 0xff), |r| cluster_color(r.cluster)))
                .collect(),
            legend,
            notes: Vec::new(),
            warnings: warnings.clone(),
        },
    )?;

    let mut legend: Vec<(String, String)> = [Tier::NotSignificant, Tier::P05, Tier::P01, Tier::P001]
        .iter()
        .map(|t| {
            let label = match t {
                Tier::NotSignificant => "Not significant".to_string(),
                t => format!("p <= {}", t.as_str()),
            };
            (tier_color(*t).hex(), label)
        })
        .collect();
    if missing {
        legend.push(("#ffffff".into(), "No data".into()));
    }
    let significance = draw_map(
        &FigureSpec {
            legend_title: Some("LISA significance".into()),
            ..spec.clone()
        },
        MapLayer {
            geoms,
            fills: geoms
                .iter()
                .map(|g| lookup(g).map_or(Rgb(0xff, 0xff, 0xff), |r| tier_color(r.tier)))
                .collect(),
            legend,
            notes: Vec::new(),
            warnings,
        },
    )?;
    Ok(LisaMaps {
        cluster,
        significance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::color::ScaleKind;

    fn squares() -> Vec<RegionGeometry> {
        vec![
            RegionGeometry::from_corners("L", &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap(),
            RegionGeometry::from_corners("R", &[[1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0]]).unwrap(),
        ]
    }

    fn fills(svg: &str) -> Vec<(String, String)> {
        svg.lines()
            .filter(|l| l.starts_with("<path data-region="))
            .map(|l| {
                let id = l.split('"').nth(1).unwrap().to_string();
                let fill = l.split("fill=\"").nth(1).unwrap()[..7].to_string();
                (id, fill)
            })
            .collect()
    }

    #[test]
    fn choropleth_endpoints() {
        let scale = ColorScale::new(
            ScaleKind::Sequential,
            vec![(0.0, Rgb(0, 0, 0)), (1.0, Rgb(255, 255, 255))],
            Rgb(0xcc, 0xcc, 0xcc),
        )
        .unwrap();
        let values = BTreeMap::from([("L".to_string(), Some(0.0)), ("R".to_string(), Some(1.0))]);
        let svg = render_choropleth(&squares(), &values, &scale, &FigureSpec::default()).unwrap();
        assert_eq!(
            fills(&svg),
            vec![("L".into(), "#000000".into()), ("R".into(), "#ffffff".into())]
        );
        assert!(svg.contains(">min 0<") && svg.contains(">max 1<"));

        let values = BTreeMap::from([("L".to_string(), Some(0.5)), ("Z".to_string(), Some(1.0))]);
        let svg = render_choropleth(&squares(), &values, &scale, &FigureSpec::default()).unwrap();
        assert_eq!(fills(&svg)[0].1, "#808080");
        assert_eq!(fills(&svg)[1].1, "#cccccc");
        assert!(svg.contains("<g id=\"warnings\">"));
        assert!(svg.contains("no geometry for region Z"));
    }

    #[test]
    fn projection_keeps_aspect() {
        let area = [0.0, 0.0, 200.0, 100.0];
        let p = Projection::fit(&squares(), area);
        assert_eq!(p.apply([0.0, 1.0]), (0.0, 0.0));
        assert_eq!(p.apply([2.0, 0.0]), (200.0, 100.0));
    }

    #[test]
    fn bad_spec() {
        let spec = FigureSpec {
            width: 50.0,
            margin: 30.0,
            ..Default::default()
        };
        let values = BTreeMap::new();
        assert!(render_choropleth(&squares(), &values, &ColorScale::sequential(0.0, 1.0).unwrap(), &spec).is_err());
    }
}
