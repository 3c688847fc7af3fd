mod common;

use std::collections::BTreeMap;

use common::{grid, lattice, sha256_hex};
use esda_mobility::indicator::RadarConfig;
use esda_mobility::render::{
    cluster_color, render_choropleth, render_lisa_maps, render_moran_scatter, render_radar, tier_color, ColorScale,
    FigureSpec, ResultTable, Rgb, ScaleKind,
};
use esda_mobility::spatial::{
    lisa_classify, lisa_permutation, moran_scatter, parse_geojson, standardize_values, ClusterLabel, LisaRegion,
    LisaResult, Quadrant, Sampling, Tier,
};

fn path_fills(svg: &str) -> Vec<(String, String)> {
    svg.lines()
        .filter(|l| l.starts_with("<path data-region="))
        .map(|l| {
            let id = l.split('"').nth(1).unwrap().to_string();
            let fill = l.split("fill=\"").nth(1).unwrap()[..7].to_string();
            (id, fill)
        })
        .collect()
}

fn legend_colors(svg: &str) -> Vec<String> {
    let legend = svg.split("<g id=\"legend\">").nth(1).unwrap().split("</g>").next().unwrap();
    legend
        .lines()
        .filter(|l| l.starts_with("<rect"))
        .map(|l| l.split("fill=\"").nth(1).unwrap()[..7].to_string())
        .collect()
}

fn lisa_for(ids: &[String], cells: &[(ClusterLabel, Tier)]) -> LisaResult {
    LisaResult {
        alpha: 0.05,
        regions: ids
            .iter()
            .zip(cells)
            .map(|(id, &(cluster, tier))| LisaRegion {
                region_id: id.clone(),
                z: 0.0,
                lag: 0.0,
                local_i: 0.0,
                p: 1.0,
                quadrant: Quadrant::HH,
                cluster,
                tier,
                island: false,
            })
            .collect(),
    }
}

#[test]
fn choropleth_is_deterministic() {
    let g = grid(3, 3);
    let values: BTreeMap<String, Option<f64>> =
        g.iter().enumerate().map(|(k, r)| (r.region_id.clone(), Some(k as f64 * 1.5 - 4.0))).collect();
    let scale = ColorScale::sequential(-4.0, 8.0).unwrap();
    let a = render_choropleth(&g, &values, &scale, &FigureSpec::titled("grid")).unwrap();
    let b = render_choropleth(&g, &values, &scale, &FigureSpec::titled("grid")).unwrap();
    assert_eq!(sha256_hex(a.as_bytes()), sha256_hex(b.as_bytes()));
    assert_eq!(path_fills(&a).len(), 9);
    assert!(a.contains(">min -4<") && a.contains(">max 8<"));
}

#[test]
fn choropleth_scale_endpoints_and_midpoint() {
    let g = grid(1, 3);
    let scale = ColorScale::new(
        ScaleKind::Sequential,
        vec![(0.0, Rgb(0, 0, 0)), (1.0, Rgb(255, 255, 255))],
        Rgb(0xcc, 0xcc, 0xcc),
    )
    .unwrap();
    let values = BTreeMap::from([
        ("r0c0".to_string(), Some(0.0)),
        ("r0c1".to_string(), Some(1.0)),
        ("r0c2".to_string(), Some(0.5)),
    ]);
    let fills = path_fills(&render_choropleth(&g, &values, &scale, &FigureSpec::default()).unwrap());
    let got: Vec<&str> = fills.iter().map(|(_, f)| f.as_str()).collect();
    assert_eq!(got, vec!["#000000", "#ffffff", "#808080"]);
}

#[test]
fn lisa_maps_palettes_and_legends() {
    let g = grid(2, 2);
    let ids: Vec<String> = g.iter().map(|r| r.region_id.clone()).collect();
    let all_ns = lisa_for(&ids, &[(ClusterLabel::NotSignificant, Tier::NotSignificant); 4]);
    let maps = render_lisa_maps(&g, &all_ns, &FigureSpec::default()).unwrap();
    assert!(path_fills(&maps.cluster).iter().all(|(_, f)| *f == cluster_color(ClusterLabel::NotSignificant).hex()));

    let mixed = lisa_for(
        &ids,
        &[
            (ClusterLabel::Significant(Quadrant::HH), Tier::P05),
            (ClusterLabel::Significant(Quadrant::LL), Tier::P001),
            (ClusterLabel::Significant(Quadrant::LH), Tier::P01),
            (ClusterLabel::NotSignificant, Tier::NotSignificant),
        ],
    );
    let maps = render_lisa_maps(&g, &mixed, &FigureSpec::default()).unwrap();
    let fills = path_fills(&maps.significance);
    assert_ne!(fills[0].1, fills[1].1);
    assert_eq!(fills[0].1, tier_color(Tier::P05).hex());
    assert_eq!(fills[1].1, tier_color(Tier::P001).hex());
    for svg in [&maps.cluster, &maps.significance] {
        let legend = legend_colors(svg);
        for (_, f) in path_fills(svg) {
            assert!(legend.contains(&f), "fill {f} missing from legend");
        }
        // every region exactly once
        assert_eq!(path_fills(svg).len(), 4);
    }
    assert_eq!(cluster_color(ClusterLabel::Significant(Quadrant::HH)).hex(), "#ff0000");
    assert_eq!(cluster_color(ClusterLabel::Significant(Quadrant::LL)).hex(), "#0000ff");
}

#[test]
fn checkerboard_cluster_map_alternates() {
    let g = grid(2, 2);
    let ids: Vec<String> = g.iter().map(|r| r.region_id.clone()).collect();
    let cells = [
        (ClusterLabel::Significant(Quadrant::HL), Tier::P05),
        (ClusterLabel::Significant(Quadrant::LH), Tier::P05),
        (ClusterLabel::Significant(Quadrant::LH), Tier::P05),
        (ClusterLabel::Significant(Quadrant::HL), Tier::P05),
    ];
    let maps = render_lisa_maps(&g, &lisa_for(&ids, &cells), &FigureSpec::default()).unwrap();
    let fills: Vec<String> = path_fills(&maps.cluster).into_iter().map(|(_, f)| f).collect();
    assert_eq!(fills, vec!["#f4ada8", "#a7adf9", "#a7adf9", "#f4ada8"]);
}

#[test]
fn scatter_and_radar_are_deterministic() {
    let w = lattice(4, 4, true);
    let x: Vec<f64> = (0..16).map(|k| (k as f64).sin() * 10.0).collect();
    let f = standardize_values(&x).unwrap();
    let s = moran_scatter(&f, &w).unwrap();
    let a = render_moran_scatter(&s.points, s.slope, &FigureSpec::titled("s")).unwrap();
    let b = render_moran_scatter(&s.points, s.slope, &FigureSpec::titled("s")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.matches("<circle").count(), 16);

    let v = [-20.0, 5.0, 30.0, -75.5, -40.0, 12.0];
    let r1 = render_radar(&v, &RadarConfig::default(), &FigureSpec::default()).unwrap();
    assert_eq!(r1, render_radar(&v, &RadarConfig::default(), &FigureSpec::default()).unwrap());
}

#[test]
fn lisa_export_and_geojson_join() {
    let text = std::fs::read_to_string(common::fixture("checkerboard/regions.geojson")).unwrap();
    let geo = parse_geojson(&text, "name").unwrap();
    let n = geo.regions.len();
    let nb = common::lattice_neighbors(6, 6, false);
    let ids = geo.ids().iter().map(|s| s.to_string()).collect();
    let w = esda_mobility::spatial::row_standardize(
        &esda_mobility::spatial::SpatialWeights::from_neighbors(ids, nb).unwrap(),
    );
    let x: Vec<f64> = (0..n).map(|k| if (k / 6 + k % 6) % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let f = standardize_values(&x).unwrap();
    let p = lisa_permutation(&f, &w, Sampling::monte_carlo(99, 2)).unwrap();
    let lisa = lisa_classify(&f, &w, &p, 0.05).unwrap();
    let table = ResultTable::from(&lisa);
    let csv = table.to_csv_string().unwrap();
    assert!(csv.starts_with("region_id,I_i,p,quadrant,tier\r\n"));
    let back = ResultTable::from_csv(csv.as_bytes()).unwrap();
    assert_eq!(back.to_csv_string().unwrap(), csv);

    let gj = table.to_geojson(&geo).unwrap();
    let v: serde_json::Value = serde_json::from_str(&gj).unwrap();
    assert_eq!(v["features"].as_array().unwrap().len(), n);
    assert!(v["features"][0]["properties"]["I_i"].is_number());

    let mut short = table.clone();
    let dropped = short.rows.pop().unwrap().id;
    match short.to_geojson(&geo) {
        Err(esda_mobility::Error::IdMismatch { only_in_geometry, .. }) => assert_eq!(only_in_geometry, vec![dropped]),
        other => panic!("{other:?}"),
    }
}
