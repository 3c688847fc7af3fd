mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{fixture, hash_tree};
use tempfile::TempDir;

const HEADER: &str = "country_region_code,sub_region_1,date,retail_and_recreation_percent_change_from_baseline,grocery_and_pharmacy_percent_change_from_baseline,parks_percent_change_from_baseline,transit_stations_percent_change_from_baseline,workplaces_percent_change_from_baseline,residential_percent_change_from_baseline";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_esda-mobility"));
    c.env_remove("ESDA_MOBILITY_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Daily rows 2020-02-15.. for each region with the same six values.
fn write_mobility(dir: &Path, regions: &[&str], days: i64, values: impl Fn(usize, i64) -> [String; 6]) -> PathBuf {
    let start = chrono::NaiveDate::from_ymd_opt(2020, 2, 15).unwrap();
    let mut text = format!("{HEADER}\n");
    for (r, name) in regions.iter().enumerate() {
        for d in 0..days {
            let date = start + chrono::Duration::days(d);
            text.push_str(&format!("AA,{name},{date},{}\n", values(r, d).join(",")));
        }
    }
    let path = dir.join("mobility.csv");
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn same(v: &str) -> [String; 6] {
    std::array::from_fn(|_| v.to_string())
}

#[test]
fn ingest_success_and_failures() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("ok");
    let o = run(&["--out-dir", s(&out), "ingest", "--mobility", s(&fixture("colombia_shaped.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("mobility_normalized.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("imputation_report.json")).unwrap()).unwrap();
    let res = report["entries"].as_array().unwrap().iter().find(|e| e["category"] == "residential").unwrap();
    assert_eq!(res["missing_rate"].as_f64().unwrap(), 0.1828);

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "country_region_code,date,parks_percent_change_from_baseline\nAA,2020-02-15,1\n").unwrap();
    let o = run(&["--out-dir", s(&tmp.path().join("x")), "ingest", "--mobility", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("workplaces_percent_change_from_baseline"));

    let dir = tmp.path().join("blank");
    fs::create_dir(&dir).unwrap();
    let csv = write_mobility(&dir, &["A", "B"], 3, |_, _| {
        let mut v = same("-5");
        v[2] = String::new();
        v
    });
    let o = run(&["--out-dir", s(&dir.join("o")), "ingest", "--mobility", s(&csv)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let o = run(&["ingest", "--mobility", s(&tmp.path().join("nope.csv"))]);
    assert_eq!(code(&o), 1);
}

fn indicator_column(path: &Path) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect()
}

#[test]
fn indicator_closed_forms_and_overlay() {
    let tmp = TempDir::new().unwrap();
    for (v, want) in [("0", 1.0), ("-50", 0.25)] {
        let dir = tmp.path().join(format!("v{v}"));
        fs::create_dir(&dir).unwrap();
        let csv = write_mobility(&dir, &["One"], 20, |_, _| same(v));
        let out = dir.join("out");
        let o = run(&[
            "--out-dir", s(&out), "indicator", "--mobility", s(&csv),
            "--analysis-start", "2020-02-15", "--analysis-end", "2020-03-05",
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(indicator_column(&out.join("indicator/aa_one.csv")).iter().all(|x| *x == want));
    }

    let dir = tmp.path().join("ten");
    fs::create_dir(&dir).unwrap();
    let names: Vec<String> = (0..10).map(|k| format!("R{k}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let csv = write_mobility(&dir, &refs, 28, |r, d| same(&format!("{}", -(r as i64) * 5 - (d % 7))));
    let out = dir.join("out");
    let o = run(&[
        "--out-dir", s(&out), "indicator", "--mobility", s(&csv), "--deseasonalize",
        "--analysis-start", "2020-02-15", "--analysis-end", "2020-03-13",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_dir(out.join("indicator")).unwrap().count(), 10);
    assert_eq!(fs::read_dir(out.join("radar")).unwrap().count(), 10);
    assert!(out.join("indicator_overlay.svg").exists());
    let header = fs::read_to_string(out.join("indicator/aa_r3.csv")).unwrap();
    assert!(header.starts_with("date,area,indicator,indicator_deseasonalized\n"));

    // window past the data
    let o = run(&["--out-dir", s(&out), "indicator", "--mobility", s(&csv)]);
    assert_eq!(code(&o), 3);
}

fn checkerboard_args(out: &Path) -> Vec<String> {
    [
        "--out-dir", s(out), "--contiguity", "rook", "--seed", "7", "moran",
        "--mobility", s(&fixture("checkerboard/mobility.csv")),
        "--geometry", s(&fixture("checkerboard/regions.geojson")),
        "--id-property", "name",
    ]
    .iter()
    .map(|a| a.to_string())
    .collect()
}

#[test]
fn moran_checkerboard() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let o = bin().args(checkerboard_args(&out)).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for cat in ["retail_recreation", "residential"] {
        let g: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("moran/{cat}/global.json"))).unwrap()).unwrap();
        assert!((g["moran"]["i"].as_f64().unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(g["moran"]["pseudo_p"].as_f64().unwrap(), 1.0 / 1000.0);
        let mut rdr = csv::Reader::from_path(out.join(format!("moran/{cat}/lisa.csv"))).unwrap();
        for rec in rdr.records() {
            let rec = rec.unwrap();
            assert!(matches!(&rec[3], "HL" | "LH" | "ns"), "{:?}", rec);
            assert!(rec[1].parse::<f64>().unwrap() < 0.0);
        }
        let scatter = fs::read_to_string(out.join(format!("moran/{cat}/scatter.svg"))).unwrap();
        assert_eq!(scatter.matches("data-quadrant=\"HL\"").count() + scatter.matches("data-quadrant=\"LH\"").count(), 36);
    }
    for f in ["cluster.svg", "significance.svg", "choropleth.svg", "lisa.geojson", "values.csv"] {
        assert!(out.join("moran/parks").join(f).exists(), "{f}");
    }
    assert!(out.join("run-manifest.json").exists());
}

#[test]
fn moran_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let cfg = fixture("synthetic/run.toml");
    let args = ["--config", s(&cfg), "--out-dir", s(&out), "--permutations", "199", "moran"];
    assert_eq!(code(&run(&args)), 0);
    let first = hash_tree(&out);
    fs::remove_dir_all(&out).unwrap();
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(first, hash_tree(&out));
    assert!(first.keys().any(|k| k.ends_with("cluster.svg")));

    let other = tmp.path().join("seeded");
    let o = bin().env("ESDA_MOBILITY_SEED", "99").args(["--out-dir", s(&other), "--permutations", "199", "moran",
        "--mobility", s(&fixture("synthetic/mobility.csv")), "--geometry", s(&fixture("synthetic/regions.geojson")),
        "--id-property", "name"]).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(other.join("run-manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 99);
    assert_eq!(manifest["config"]["permutations"], 199);
}

#[test]
fn moran_error_exits() {
    let tmp = TempDir::new().unwrap();
    let geo = fixture("checkerboard/regions.geojson");

    let constant = write_mobility(tmp.path(), &(0..36).map(|k| format!("Cell {}{}", k / 6, k % 6)).collect::<Vec<_>>().iter().map(String::as_str).collect::<Vec<_>>(), 92, |_, _| same("-10"));
    let o = run(&["--out-dir", s(&tmp.path().join("c")), "moran", "--mobility", s(&constant), "--geometry", s(&geo), "--id-property", "name"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("zero variance"), "{}", stderr(&o));

    let dir = tmp.path().join("mismatch");
    fs::create_dir(&dir).unwrap();
    let mut names: Vec<String> = (0..35).map(|k| format!("Cell {}{}", k / 6, k % 6)).collect();
    names.push("Atlantis".into());
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let csv = write_mobility(&dir, &refs, 92, |r, _| same(&format!("{}", -(r as i64))));
    let out = dir.join("o");
    let o = run(&["--out-dir", s(&out), "moran", "--mobility", s(&csv), "--geometry", s(&geo), "--id-property", "name"]);
    assert_eq!(code(&o), 4);
    let err = stderr(&o);
    assert!(err.contains("Cell 55") && err.contains("AA/Atlantis"), "{err}");
    assert!(out.join("id_reconciliation.csv").exists());

    let o = run(&["--alpha", "1.5", "moran", "--mobility", s(&csv), "--geometry", s(&geo)]);
    assert_eq!(code(&o), 64);
}

#[test]
fn weights_and_render() {
    let tmp = TempDir::new().unwrap();
    let geo = fixture("synthetic/regions.geojson");
    let o = run(&["--out-dir", s(tmp.path()), "weights", "--geometry", s(&geo), "--id-property", "name"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("weights.txt")).unwrap();
    assert_eq!(text.lines().count(), 30);
    assert!(String::from_utf8_lossy(&o.stdout).contains("30 regions"));

    let o = run(&["--out-dir", s(tmp.path()), "--contiguity", "rook", "weights", "--geometry", s(&geo), "--id-property", "name", "--format", "json", "--row-standardize"]);
    assert_eq!(code(&o), 0);
    let w = esda_mobility::spatial::SpatialWeights::from_json(&fs::read_to_string(tmp.path().join("weights.json")).unwrap()).unwrap();
    assert_eq!(w.cardinalities().iter().max(), Some(&4));

    let out = tmp.path().join("m");
    assert_eq!(code(&run(&["--config", s(&fixture("synthetic/run.toml")), "--out-dir", s(&out), "--permutations", "99", "moran"])), 0);
    let r = tmp.path().join("r");
    let o = run(&["--out-dir", s(&r), "render", "lisa", "--geometry", s(&geo), "--id-property", "name", "--lisa", s(&out.join("moran/parks/lisa.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cluster = fs::read_to_string(r.join("cluster.svg")).unwrap();
    assert_eq!(cluster.matches("data-region=").count(), 30);
    assert!(r.join("significance.svg").exists());
    let o = run(&["--out-dir", s(&r), "render", "choropleth", "--geometry", s(&geo), "--id-property", "name", "--values", s(&out.join("moran/parks/values.csv")), "--column", "value"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&["--out-dir", s(&r), "render", "radar", "--values", "-10,5,-30,-60,-20,15"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(r.join("radar.svg")).unwrap().contains("id=\"values\""));
    let o = run(&["--out-dir", s(&r), "render", "radar", "--values", "-110,5,-30,-60,-20,15"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn json_config_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.json");
    let body = serde_json::json!({
        "mobility": fixture("synthetic/mobility.csv"),
        "regions": ["Province 01", "ZZ"],
        "out_dir": tmp.path().join("o"),
        "axis_order": "residential,parks,retail_recreation,grocery_pharmacy,transit_stations,workplaces",
        "trend_only": true,
    });
    fs::write(&cfg, body.to_string()).unwrap();
    let o = run(&["--config", s(&cfg), "indicator"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("o/indicator/zz_province_01.csv")).unwrap();
    assert!(csv.starts_with("date,area,indicator,indicator_trend\n"));
    assert!(tmp.path().join("o/indicator/zz.csv").exists());

    fs::write(&cfg, "{\"permutatons\": 5}").unwrap();
    assert_eq!(code(&run(&["--config", s(&cfg), "indicator"])), 64);
}
