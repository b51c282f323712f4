use num_complex::Complex64 as C64;
use pkfield::genus1_spectral::figure3_data;
use pkfield::genus2_spectral::{period_lattice, HyperCurve};
use pkfield::io::{figure3_table, fmt17, trajectory_table, CsvTable, LatticeJson};
use pkfield::lax_flows::{Grid, Trajectory};
use pkfield::potentials::Potential;
use proptest::prelude::*;

#[test]
fn csv_layout() {
    let mut t = CsvTable::new(&["a", "b"])
        .with_config(&[("command".into(), "demo".into()), ("n".into(), "2".into())]);
    t.rows = vec![vec![0.1, -2.5e-300], vec![f64::MAX, 1.0]];
    let text = t.to_csv();
    assert!(text.starts_with("# command=demo\n# n=2\na,b\n1.0000000000000001e-1,"));
    assert!(!text.contains('\r'));
    let (h, rows) = CsvTable::parse(&text).unwrap();
    assert_eq!(h, ["a", "b"]);
    assert_eq!(rows, t.rows);
    assert!(CsvTable::parse("a\nnot-a-number\n")
        .unwrap_err()
        .is_domain());
}

#[test]
fn trajectory_rows_follow_grid_order() {
    let p0 = Potential::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), 2.0).unwrap();
    let t = Trajectory::compute(&p0, Grid::rect(0.0, 0.0, 0.25, 0.5, 3, 2), 1e-10).unwrap();
    let tab = trajectory_table(&t);
    assert_eq!(tab.rows.len(), 6);
    assert_eq!(&tab.rows[0][..2], &[0.0, 0.0]);
    assert_eq!(&tab.rows[1][..2], &[0.25, 0.0]);
    assert_eq!(&tab.rows[3][..2], &[0.0, 0.5]);
    assert_eq!(tab.rows[0][6], 2.0);
}

#[test]
fn figure3_table_matches_rows() {
    let rows = figure3_data(&[0.5], 5).unwrap();
    let tab = figure3_table(&rows);
    assert_eq!(tab.columns, ["r", "t", "re_tau_tilde", "im_tau_tilde"]);
    for (a, b) in tab.rows.iter().zip(&rows) {
        assert_eq!(a, &vec![b.r, b.t, b.tau_tilde.re, b.tau_tilde.im]);
    }
}

#[test]
fn lattice_json_shape() {
    let cv = HyperCurve::from_roots(&[
        C64::new(0.0, 0.5),
        C64::new(0.0, -0.5),
        C64::new(0.0, 2.0),
        C64::new(0.0, -2.0),
    ])
    .unwrap();
    let l = period_lattice(&cv).unwrap();
    let v = serde_json::to_value(LatticeJson::from(&l)).unwrap();
    assert_eq!(v["class"], "M2_1");
    assert_eq!(v["omega1"].as_array().unwrap().len(), 2);
    assert!(v["bperiod_residual"].as_f64().unwrap() < 1e-7);
}

proptest! {
    #[test]
    fn seventeen_digits_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn table_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 0..20)) {
        let mut t = CsvTable::new(&["x", "y", "z"]);
        t.rows = rows.clone();
        let (_, back) = CsvTable::parse(&t.to_csv()).unwrap();
        prop_assert_eq!(back, rows);
    }
}
