use chrono::NaiveDate;
use esda_mobility::indicator::{
    baseline_area, circulation_indicator, indicator_from_values, radar_area, radar_radii, RadarConfig,
};
use esda_mobility::ingest::{region_key, DateWindow, MobilityRecord, MobilityTable};
use esda_mobility::{Category, Error};
use proptest::prelude::*;

/// Polygon area of the radar vertices by the shoelace formula.
fn shoelace(radii: &[f64; 6]) -> f64 {
    let pts: Vec<(f64, f64)> = (0..6)
        .map(|k| {
            let t = (90.0 - 60.0 * k as f64).to_radians();
            (radii[k] * t.cos(), radii[k] * t.sin())
        })
        .collect();
    let twice: f64 = (0..6)
        .map(|k| {
            let (a, b) = (pts[k], pts[(k + 1) % 6]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    twice.abs() / 2.0
}

fn rotate(order: [Category; 6], by: usize) -> [Category; 6] {
    std::array::from_fn(|k| order[(k + by) % 6])
}

#[test]
fn closed_forms() {
    let cfg = RadarConfig::default();
    let area = baseline_area(&cfg);
    assert!((area - 15000.0 * 3f64.sqrt()).abs() / area < 1e-12);
    assert!((area - 25980.762113533).abs() < 1e-6);
    let dates: Vec<NaiveDate> = (1..=3).map(|d| NaiveDate::from_ymd_opt(2020, 3, d).unwrap()).collect();
    for (v, want) in [(0.0, 1.0), (-100.0, 0.0), (-50.0, 0.25)] {
        let s = indicator_from_values("x", dates.clone(), &[[v; 6]; 3], &cfg).unwrap();
        assert!(s.indicators.iter().all(|i| (i - want).abs() < 1e-12), "{v}");
        assert!((s.period_indicator - want).abs() < 1e-12);
    }
    // hand check: radii 50 everywhere -> area 6 * 0.5 * 50 * 50 * sin 60
    let half = radar_area(&[50.0; 6]).unwrap();
    assert!((half - 3.0 * 2500.0 * 3f64.sqrt() / 2.0).abs() < 1e-9);
}

#[test]
fn below_center_is_a_domain_error() {
    let cfg = RadarConfig::default();
    let mut v = [0.0; 6];
    v[Category::Parks.index()] = -100.5;
    assert!(matches!(radar_radii(&v, &cfg), Err(Error::Domain(_))));
    let wider = RadarConfig { center: -150.0, ..cfg };
    assert!(radar_radii(&v, &wider).is_ok());
    assert!(RadarConfig { center: -90.0, ..cfg }.validate().is_err());
}

#[test]
fn residential_inversion() {
    let cfg = RadarConfig { invert_residential: true, ..Default::default() };
    let mut v = [0.0; 6];
    v[Category::Residential.index()] = 20.0;
    let r = radar_radii(&v, &cfg).unwrap();
    assert_eq!(r[Category::Residential.index()], 80.0);
}

#[test]
fn table_window_and_gaps() {
    let start = NaiveDate::from_ymd_opt(2020, 2, 15).unwrap();
    let mut records: Vec<MobilityRecord> = (0..10)
        .map(|d| MobilityRecord {
            region_id: region_key("AR", None),
            country_code: "AR".into(),
            sub_region: None,
            date: start + chrono::Duration::days(d),
            values: [Some(-50.0); 6],
        })
        .collect();
    let table = MobilityTable::new(records.clone(), DateWindow::default_baseline()).unwrap();
    let w = DateWindow::new(start, start + chrono::Duration::days(9)).unwrap();
    let s = circulation_indicator(&table, "AR/", &RadarConfig::default(), &w).unwrap();
    assert_eq!(s.indicators, vec![0.25; 10]);

    let longer = DateWindow::new(start, start + chrono::Duration::days(12)).unwrap();
    assert!(matches!(circulation_indicator(&table, "AR/", &RadarConfig::default(), &longer), Err(Error::Data(_))));

    records[3].values[0] = None;
    let holes = MobilityTable::new(records, DateWindow::default_baseline()).unwrap();
    let err = circulation_indicator(&holes, "AR/", &RadarConfig::default(), &w).unwrap_err();
    assert!(err.to_string().contains("impute"));
}

fn values() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-100.0f64..250.0)
}

proptest! {
    #[test]
    fn area_matches_shoelace(v in values()) {
        let cfg = RadarConfig::default();
        let r = radar_radii(&v, &cfg).unwrap();
        let a = radar_area(&r).unwrap();
        prop_assert!((a - shoelace(&r)).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn rotation_and_reflection_invariance(v in values(), by in 0usize..6) {
        let base = RadarConfig::default();
        let a0 = radar_area(&radar_radii(&v, &base).unwrap()).unwrap();
        let rotated = RadarConfig::new(-100.0, rotate(Category::ALL, by)).unwrap();
        let a1 = radar_area(&radar_radii(&v, &rotated).unwrap()).unwrap();
        let mut rev = Category::ALL;
        rev.reverse();
        let reflected = RadarConfig::new(-100.0, rev).unwrap();
        let a2 = radar_area(&radar_radii(&v, &reflected).unwrap()).unwrap();
        prop_assert!((a0 - a1).abs() <= 1e-9 * a0.max(1.0));
        prop_assert!((a0 - a2).abs() <= 1e-9 * a0.max(1.0));
    }

    #[test]
    fn monotone_in_each_value(v in values(), k in 0usize..6, bump in 0.0f64..50.0) {
        let cfg = RadarConfig::default();
        let a0 = radar_area(&radar_radii(&v, &cfg).unwrap()).unwrap();
        let mut w = v;
        w[k] += bump;
        let a1 = radar_area(&radar_radii(&w, &cfg).unwrap()).unwrap();
        prop_assert!(a1 >= a0 - 1e-9);
    }

    #[test]
    fn uniform_scaling_is_quadratic(r in 0.0f64..300.0, lambda in 0.0f64..4.0) {
        let a = radar_area(&[r; 6]).unwrap();
        let b = radar_area(&[lambda * r; 6]).unwrap();
        prop_assert!((b - lambda * lambda * a).abs() <= 1e-9 * b.max(1.0));
    }
}
