use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use pkfield::error::Error;
use pkfield::genus1_spectral::Genus1Data;
use pkfield::lax_flows::{
    commutativity_defect, default_lambda_samples, drift, flow, genus1_flow, genus1_orbit,
    genus1_period, integrate_flow, lax_vector_fields, monodromy, sinh_gordon_residual, u_matrix,
    v_matrix, FrameGrid, Genus1State, Grid, Trajectory,
};
use pkfield::ode::OdeOptions;
use pkfield::potentials::{
    classify, off_diagonal_points, Potential, Quartic, DEFAULT_CLASSIFY_TOL,
};
use proptest::prelude::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn m21() -> Potential {
    Potential::new(c(0.0), c(0.0), 2.0).unwrap()
}

fn clifford() -> Potential {
    Potential::new(c(0.0), c(0.0), 1.0).unwrap()
}

#[test]
fn fixed_point_trajectory_is_constant() {
    let path = [C64::new(1.0, 0.0), C64::new(1.0, 2.0), C64::new(-3.0, 0.5)];
    let t = integrate_flow(&clifford(), &path, 1e-10).unwrap();
    assert!(t.states.iter().all(|s| s.distance(&clifford()) < 1e-15));
}

#[test]
fn conservation_and_self_convergence() {
    let t = integrate_flow(&m21(), &[c(1.0)], 1e-10).unwrap();
    assert!(t.max_drift <= 1e-9, "{}", t.max_drift);
    assert!(t.states.iter().all(|s| s.gamma > 0.0));
    let fine = integrate_flow(&m21(), &[c(1.0)], 1e-12).unwrap();
    assert!(t.states[1].distance(&fine.states[1]) < 1e-8);
}

#[test]
fn flows_commute() {
    assert!(commutativity_defect(&m21(), 1.0, 1.0, 1e-10).unwrap() <= 1e-8);
    let p = Potential::new(C64::new(0.3, -0.1), C64::new(0.2, 0.5), 0.8).unwrap();
    assert!(commutativity_defect(&p, -0.7, 0.4, 1e-10).unwrap() <= 1e-8);
}

#[test]
fn vector_field_matches_difference_quotient() {
    let p = Potential::new(c(1.0), c(0.0), 1.0).unwrap();
    let (tx, ty) = lax_vector_fields(&p);
    assert!(tx.norm() > 0.1 && ty.norm() > 0.1);
    let opts = OdeOptions::with_tol(1e-13);
    let h = 1e-4;
    for (dir, t) in [(c(1.0), tx), (C64::new(0.0, 1.0), ty)] {
        let a = flow(&p, dir * h, &opts).unwrap();
        let b = flow(&p, -dir * h, &opts).unwrap();
        let da = (a.alpha - b.alpha) / (2.0 * h);
        let db = (a.beta - b.beta) / (2.0 * h);
        let dg = (a.gamma - b.gamma) / (2.0 * h);
        assert!((da - t.d_alpha).norm() + (db - t.d_beta).norm() + (dg - t.d_gamma).abs() < 1e-6);
    }
}

#[test]
fn step_collapse_is_reported() {
    let opts = OdeOptions {
        min_step: 1e-3,
        ..OdeOptions::with_tol(1e-30)
    };
    assert!(matches!(
        flow(&m21(), c(1.0), &opts),
        Err(Error::StepCollapse { .. })
    ));
}

#[test]
fn constant_frames_are_exponentials() {
    let p = clifford();
    let lambdas = default_lambda_samples();
    let grid = Grid::centered(1.0, 5);
    let fg = FrameGrid::compute(&p, grid, &lambdas, 1e-11).unwrap();
    for j in 0..5 {
        for i in 0..5 {
            let z = grid.node(i, j);
            for (k, &l) in lambdas.iter().enumerate() {
                let e = (u_matrix(&p, l) * c(z.re) + v_matrix(&p, l) * c(z.im)).exp();
                assert!((fg.at(i, j).frames[k] - e).norm() < 1e-8);
            }
        }
    }
    assert!((fg.at(2, 2).frames[3] - Matrix2::identity()).norm() < 1e-15);
}

#[test]
fn frames_conjugate_the_potential() {
    let p0 = m21();
    let lambdas = [C64::new(0.6, 0.8), c(-1.0), C64::new(0.3, -0.2)];
    let fg = FrameGrid::compute(&p0, Grid::centered(0.5, 5), &lambdas, 1e-11).unwrap();
    for s in &fg.states {
        for (k, &l) in lambdas.iter().enumerate() {
            let f = s.frames[k];
            assert!((f.determinant() - 1.0).norm() < 1e-10);
            let lhs = f.try_inverse().unwrap() * p0.zeta(l) * f;
            assert!((lhs - s.p.zeta(l)).norm() < 1e-8);
        }
    }
}

#[test]
fn monodromy_commutes_with_initial_potential() {
    let d = Genus1Data::new(0.5, 0.2).unwrap();
    let p0 = d.reference_potential();
    let lambdas = default_lambda_samples();
    let (w1, w2) = d.generators();
    for w in [w1, w2] {
        let m = monodromy(&p0, w, &lambdas, 1e-11).unwrap();
        assert!(m.p.distance(&p0) < 1e-7);
        for (k, &l) in lambdas.iter().enumerate() {
            let z = p0.zeta(l);
            let f = m.frames[k];
            assert!((f * z - z * f).norm() <= 1e-6 * (1.0 + f.norm() * z.norm()));
        }
    }
}

#[test]
fn sinh_gordon_on_fixed_point_and_refinement() {
    let t = Trajectory::compute(&clifford(), Grid::centered(0.2, 5), 1e-10).unwrap();
    assert_eq!(sinh_gordon_residual(&t).unwrap(), 0.0);
    let small = Trajectory::compute(&clifford(), Grid::centered(0.2, 2), 1e-10).unwrap();
    assert!(matches!(
        sinh_gordon_residual(&small),
        Err(Error::GridTooSmall { .. })
    ));

    let d = Genus1Data::new(0.6, 0.3).unwrap();
    for p0 in [m21(), d.reference_potential()] {
        let res = |n: usize| {
            let t = Trajectory::compute(&p0, Grid::centered(0.2, n), 1e-13).unwrap();
            sinh_gordon_residual(&t).unwrap()
        };
        let ratio = res(21) / res(41);
        assert!((3.8..=4.2).contains(&ratio), "{ratio}");
    }
}

#[test]
fn gamma_is_critical_at_off_diagonal_points() {
    let sq = classify(&Quartic::new(c(0.0), 4.25), DEFAULT_CLASSIFY_TOL).unwrap();
    for p in off_diagonal_points(&sq).unwrap() {
        let (tx, ty) = lax_vector_fields(&p);
        assert!(tx.d_gamma.abs() < 1e-15 && ty.d_gamma.abs() < 1e-15);
    }
}

#[test]
fn genus_one_reduced_flow() {
    let fixed = Genus1State::new(0.0, 1.0).unwrap();
    let s = genus1_flow(&fixed, 5.0, 1e-10).unwrap();
    assert!((s.alpha_hat - 0.0).abs() < 1e-15 && (s.beta_hat - 1.0).abs() < 1e-15);
    assert!(genus1_period(&fixed, 1e-10).unwrap_err().is_domain());

    let s0 = Genus1State::new(0.0, 2.0).unwrap();
    assert_eq!(s0.a1_hat(), 4.25);
    let orbit = genus1_orbit(&s0, 5.0, 50, 1e-10).unwrap();
    let tight = genus1_orbit(&s0, 5.0, 50, 1e-13).unwrap();
    for (a, b) in orbit.iter().zip(&tight) {
        assert!((a.a1_hat() - 4.25).abs() < 1e-9);
        assert!((a.alpha_hat - b.alpha_hat).abs() + (a.beta_hat - b.beta_hat).abs() < 1e-8);
    }
    let t = genus1_period(&s0, 1e-12).unwrap();
    let back = genus1_flow(&s0, t, 1e-12).unwrap();
    assert!((back.alpha_hat - s0.alpha_hat).abs() + (back.beta_hat - s0.beta_hat).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn isospectral(a in -0.5f64..0.5, b in -0.5f64..0.5, g in 0.5f64..2.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let p0 = Potential::new(C64::new(a, b), C64::new(b, a), g).unwrap();
        let t = integrate_flow(&p0, &[C64::new(x, 0.0), C64::new(x, y)], 1e-10).unwrap();
        prop_assert!(t.max_drift <= 1e-9, "{}", t.max_drift);
        prop_assert!(drift(&p0, &t.states[2]) <= t.max_drift);
    }
}
