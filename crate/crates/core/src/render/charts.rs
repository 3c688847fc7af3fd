use chrono::NaiveDate;

use super::svg::{escape, num, Svg};
use super::FigureSpec;
use crate::error::{Error, Result};
use crate::indicator::{radar_radii, RadarConfig};
use crate::spatial::ScatterPoint;

const SERIES_COLORS: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Moran scatterplot: standardized value on x, spatial lag on y.
pub fn render_moran_scatter(points: &[ScatterPoint], slope: f64, spec: &FigureSpec) -> Result<String> {
    spec.validate()?;
    if points.len() < 2 {
        return Err(Error::param("scatterplot needs at least two points"));
    }
    if !slope.is_finite() {
        return Err(Error::param("regression slope must be finite"));
    }
    let extent = points
        .iter()
        .flat_map(|p| [p.z.abs(), p.lag.abs()])
        .filter(|v| v.is_finite())
        .fold(1.0_f64, f64::max)
        * 1.1;
    let top = spec.margin + if spec.title.is_empty() { 0.0 } else { 12.0 };
    let side = (spec.width - 2.0 * spec.margin).min(spec.height - top - spec.margin);
    let cx = spec.width / 2.0;
    let cy = top + side / 2.0;
    let s = side / 2.0 / extent;
    let px = |x: f64| num(cx + x * s, 2);
    let py = |y: f64| num(cy - y * s, 2);

    let mut svg = Svg::new(spec);
    svg.line("<g id=\"axes\" stroke=\"#000000\" stroke-width=\"1\">");
    svg.line(format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
        px(-extent),
        py(0.0),
        px(extent),
        py(0.0)
    ));
    svg.line(format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
        px(0.0),
        py(-extent),
        px(0.0),
        py(extent)
    ));
    svg.line("</g>");
    svg.text(cx + side / 2.0, cy - 6.0, 11.0, "end", "z");
    svg.text(cx + 6.0, cy - side / 2.0 + 10.0, 11.0, "start", "Wz");

    let label_at = extent * 0.92;
    for (x, y, anchor, label) in [
        (label_at, label_at, "end", "Q1 HH"),
        (-label_at, -label_at, "start", "Q2 LL"),
        (-label_at, label_at, "start", "Q3 LH"),
        (label_at, -label_at, "end", "Q4 HL"),
    ] {
        svg.text(cx + x * s, cy - y * s, 12.0, anchor, label);
    }

    // Clip the line to the square plotting region.
    let x_end = extent / slope.abs().max(1.0);
    svg.line(format!(
        "<line id=\"regression\" data-slope=\"{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#d62728\" stroke-width=\"1.5\"/>",
        slope,
        px(-x_end),
        py(-x_end * slope),
        px(x_end),
        py(x_end * slope)
    ));
    svg.line("<g id=\"points\" fill=\"#1f77b4\" fill-opacity=\"0.8\">");
    for p in points.iter().filter(|p| p.z.is_finite() && p.lag.is_finite()) {
        svg.line(format!(
            "<circle data-region=\"{}\" data-quadrant=\"{}\" cx=\"{}\" cy=\"{}\" r=\"3\"/>",
            escape(&p.region_id),
            p.quadrant.as_str(),
            px(p.z),
            py(p.lag)
        ));
    }
    svg.line("</g>");
    Ok(svg.finish())
}

fn hexagon_points(radii: &[f64; 6]) -> String {
    (0..6)
        .map(|k| {
            let theta = (90.0 - 60.0 * k as f64).to_radians();
            format!("{},{}", num(radii[k] * theta.cos(), 6), num(radii[k] * theta.sin(), 6))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Radar chart of six percent changes (category index order). Vertices are
/// written in data coordinates inside a scaling group.
pub fn render_radar(values: &[f64; 6], config: &RadarConfig, spec: &FigureSpec) -> Result<String> {
    spec.validate()?;
    let radii = radar_radii(values, config)?;
    let base = config.baseline_radius();
    let top = spec.margin + if spec.title.is_empty() { 0.0 } else { 12.0 };
    let avail = ((spec.width - 2.0 * spec.margin).min(spec.height - top - spec.margin) / 2.0 - 24.0).max(1.0);
    let rmax = radii.iter().copied().fold(base, f64::max);
    let s = avail / rmax;
    let cx = spec.width / 2.0;
    let cy = top + (spec.height - top - spec.margin) / 2.0;

    let mut svg = Svg::new(spec);
    svg.line(format!(
        "<g id=\"radar\" transform=\"translate({} {}) scale({} {})\">",
        num(cx, 2),
        num(cy, 2),
        num(s, 6),
        num(-s, 6)
    ));
    for k in 0..6 {
        let theta = (90.0 - 60.0 * k as f64).to_radians();
        svg.line(format!(
            "<line class=\"axis\" x1=\"0\" y1=\"0\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" vector-effect=\"non-scaling-stroke\"/>",
            num(rmax * theta.cos(), 6),
            num(rmax * theta.sin(), 6)
        ));
    }
    svg.line(format!(
        "<polygon id=\"baseline\" points=\"{}\" fill=\"none\" stroke=\"#555555\" stroke-dasharray=\"4 3\" vector-effect=\"non-scaling-stroke\"/>",
        hexagon_points(&[base; 6])
    ));
    svg.line(format!(
        "<polygon id=\"values\" points=\"{}\" fill=\"#1f77b4\" fill-opacity=\"0.35\" stroke=\"#1f77b4\" vector-effect=\"non-scaling-stroke\"/>",
        hexagon_points(&radii)
    ));
    svg.line("</g>");
    svg.line("<g id=\"axis-labels\">");
    for (k, cat) in config.axis_order.iter().enumerate() {
        let theta = (90.0 - 60.0 * k as f64).to_radians();
        let (x, y) = (cx + (avail + 10.0) * theta.cos(), cy - (avail + 10.0) * theta.sin());
        let anchor = match theta.cos() {
            c if c > 0.1 => "start",
            c if c < -0.1 => "end",
            _ => "middle",
        };
        svg.text(x, y + 4.0, 11.0, anchor, &format!("{} ({})", cat.label(), num(values[cat.index()], 1)));
    }
    svg.line("</g>");
    Ok(svg.finish())
}

/// One named line of an indicator time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesLine {
    pub label: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

/// Overlay of indicator series with the y = 1 baseline reference.
pub fn render_indicator_series(lines: &[SeriesLine], spec: &FigureSpec) -> Result<String> {
    spec.validate()?;
    if lines.is_empty() {
        return Err(Error::param("no series to plot"));
    }
    for l in lines {
        if l.dates.len() != l.values.len() {
            return Err(Error::Dimension {
                expected: l.dates.len(),
                got: l.values.len(),
            });
        }
    }
    let first = lines.iter().filter_map(|l| l.dates.first()).min().copied();
    let last = lines.iter().filter_map(|l| l.dates.last()).max().copied();
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::param("series have no dates"));
    };
    let span = ((last - first).num_days() as f64).max(1.0);
    let finite = lines.iter().flat_map(|l| l.values.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((1.0_f64, 1.0_f64), |(a, b), v| (a.min(v), b.max(v)));
    lo = lo.min(0.0);
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let legend_w = 150.0;
    let top = spec.margin + if spec.title.is_empty() { 0.0 } else { 12.0 };
    let (x0, x1) = (spec.margin + 30.0, (spec.width - spec.margin - legend_w).max(spec.margin + 31.0));
    let (y0, y1) = (top, spec.height - spec.margin);
    let px = |d: NaiveDate| x0 + (d - first).num_days() as f64 / span * (x1 - x0);
    let py = |v: f64| y1 - (v - lo) / (hi - lo) * (y1 - y0);

    let mut svg = Svg::new(spec);
    svg.line(format!(
        "<g id=\"axes\" stroke=\"#000000\"><line x1=\"{a}\" y1=\"{b}\" x2=\"{c}\" y2=\"{b}\"/><line x1=\"{a}\" y1=\"{d}\" x2=\"{a}\" y2=\"{b}\"/></g>",
        a = num(x0, 2),
        b = num(y1, 2),
        c = num(x1, 2),
        d = num(y0, 2)
    ));
    for v in [lo, 1.0, hi] {
        svg.text(x0 - 4.0, py(v) + 4.0, 10.0, "end", &num(v, 2));
    }
    svg.text(x0, y1 + 14.0, 10.0, "start", &first.to_string());
    svg.text(x1, y1 + 14.0, 10.0, "end", &last.to_string());
    svg.line(format!(
        "<line id=\"reference\" x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>",
        num(x0, 2),
        num(x1, 2),
        y = num(py(1.0), 2)
    ));
    let mut legend = Vec::new();
    for (k, l) in lines.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (date, v) in l.dates.iter().zip(&l.values) {
            if !v.is_finite() {
                pen_down = false;
                continue;
            }
            d.push_str(if pen_down { " L" } else { " M" });
            d.push_str(&format!("{} {}", num(px(*date), 2), num(py(*v), 2)));
            pen_down = true;
        }
        svg.line(format!(
            "<path data-series=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            escape(&l.label),
            d.trim_start()
        ));
        legend.push((color.to_string(), l.label.clone()));
    }
    let room = ((y1 - top - 10.0) / 16.0).floor().max(2.0) as usize;
    if legend.len() > room {
        let hidden = legend.len() - (room - 1);
        legend.truncate(room - 1);
        legend.push(("#ffffff".into(), format!("+{hidden} more")));
    }
    svg.legend(x1 + 16.0, top + 10.0, spec.legend_title.as_deref(), &legend);
    Ok(svg.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::Quadrant;

    fn polygon(svg: &str, id: &str) -> Vec<(f64, f64)> {
        let tag = format!("<polygon id=\"{id}\" points=\"");
        let rest = svg.split(&tag).nth(1).unwrap();
        rest[..rest.find('"').unwrap()]
            .split(' ')
            .map(|xy| {
                let (x, y) = xy.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn radar_vertices() {
        let cfg = RadarConfig::default();
        let values = [10.0, -20.0, 35.0, -60.0, -45.0, 12.5];
        let svg = render_radar(&values, &cfg, &FigureSpec::default()).unwrap();
        let pts = polygon(&svg, "values");
        let radii = radar_radii(&values, &cfg).unwrap();
        for k in 0..6 {
            let theta = (90.0 - 60.0 * k as f64).to_radians();
            assert!((pts[k].0 - radii[k] * theta.cos()).abs() < 1e-6);
            assert!((pts[k].1 - radii[k] * theta.sin()).abs() < 1e-6);
        }
        let zero = render_radar(&[0.0; 6], &cfg, &FigureSpec::default()).unwrap();
        assert_eq!(polygon(&zero, "values"), polygon(&zero, "baseline"));
        let collapsed = render_radar(&[-100.0; 6], &cfg, &FigureSpec::default()).unwrap();
        assert!(polygon(&collapsed, "values").iter().all(|&(x, y)| x == 0.0 && y == 0.0));
        assert!(render_radar(&[-101.0; 6], &cfg, &FigureSpec::default()).is_err());
        assert_eq!(svg.matches("class=\"axis\"").count(), 6);
    }

    fn attr(line: &str, name: &str) -> f64 {
        let key = format!(" {name}=\"");
        let rest = line.split(&key).nth(1).unwrap();
        rest[..rest.find('"').unwrap()].parse().unwrap()
    }

    #[test]
    fn scatter_line_and_points() {
        let pts = vec![
            ScatterPoint { region_id: "a".into(), z: 1.0, lag: -1.0, quadrant: Quadrant::HL },
            ScatterPoint { region_id: "b".into(), z: -1.0, lag: 1.0, quadrant: Quadrant::LH },
        ];
        let spec = FigureSpec::default();
        let svg = render_moran_scatter(&pts, -1.0, &spec).unwrap();
        let reg = svg.lines().find(|l| l.contains("id=\"regression\"")).unwrap();
        // y = -x in screen coordinates: dy/dx = +1
        let (x1, y1, x2, y2) = (attr(reg, "x1"), attr(reg, "y1"), attr(reg, "x2"), attr(reg, "y2"));
        assert!(((y2 - y1) / (x2 - x1) - 1.0).abs() < 1e-9);
        let circles: Vec<&str> = svg.lines().filter(|l| l.starts_with("<circle")).collect();
        let cx = spec.width / 2.0;
        assert!(attr(circles[0], "cx") > cx && circles[0].contains("data-quadrant=\"HL\""));
        assert!(attr(circles[1], "cx") < cx && circles[1].contains("data-quadrant=\"LH\""));

        let flat = render_moran_scatter(&pts, 0.0, &spec).unwrap();
        let reg = flat.lines().find(|l| l.contains("id=\"regression\"")).unwrap();
        assert_eq!(attr(reg, "y1"), attr(reg, "y2"));
        assert!(render_moran_scatter(&pts[..1], 0.0, &spec).is_err());
        for q in ["Q1 HH", "Q2 LL", "Q3 LH", "Q4 HL"] {
            assert!(svg.contains(q));
        }
    }

    #[test]
    fn series_overlay() {
        let d0 = NaiveDate::from_ymd_opt(2020, 2, 15).unwrap();
        let dates: Vec<NaiveDate> = (0..5).map(|k| d0 + chrono::Days::new(k)).collect();
        let lines = vec![
            SeriesLine { label: "AR".into(), dates: dates.clone(), values: vec![1.0, 0.9, 0.8, f64::NAN, 0.6] },
            SeriesLine { label: "BR".into(), dates, values: vec![1.0; 5] },
        ];
        let svg = render_indicator_series(&lines, &FigureSpec::titled("Indicator")).unwrap();
        assert_eq!(svg.matches("data-series=").count(), 2);
        assert!(svg.contains("id=\"reference\""));
        let ar = svg.lines().find(|l| l.contains("data-series=\"AR\"")).unwrap();
        assert_eq!(ar.matches('M').count(), 2);
        assert_eq!(svg, render_indicator_series(&lines, &FigureSpec::titled("Indicator")).unwrap());
    }
}
