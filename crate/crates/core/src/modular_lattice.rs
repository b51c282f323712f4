//! Conformal classes of lattices: reduction of τ = ω₂/ω₁ to the fundamental
//! domain, the index-two sublattice map and a distance between classes.
//!
//! ```text
//! F = { Im τ > 0, |Re τ| ≤ 1/2, |τ| ≥ 1 }
//! −1/2 + iy ∼ 1/2 + iy,   τ ∼ −1/τ on |τ| = 1
//! τ̂ = (τ̃ − 1)/(τ̃ + 1)  if Re τ̃ < 0,   τ̂ = (1 + τ̃)/(1 − τ̃)  otherwise
//! ```
//!
//! Canonical boundary representatives: Re τ = +1/2 on the vertical sides,
//! Re τ ≥ 0 on the arc.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

const BOUNDARY_TOL: f64 = 1e-12;
const MAX_ITER: usize = 10_000;

/// Reduced τ with the unimodular witness M: τ = (aτ₀ + b)/(cτ₀ + d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedTau {
    pub tau: C64,
    pub unimodular: [[i64; 2]; 2],
}

fn mul(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

const S: [[i64; 2]; 2] = [[0, -1], [1, 0]];

fn t(n: i64) -> [[i64; 2]; 2] {
    [[1, n], [0, 1]]
}

pub fn apply(m: [[i64; 2]; 2], tau: C64) -> C64 {
    (tau * m[0][0] as f64 + m[0][1] as f64) / (tau * m[1][0] as f64 + m[1][1] as f64)
}

/// Reduce a point of the upper half plane into the fundamental domain.
pub fn reduce_tau(tau: C64) -> Result<ReducedTau> {
    if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
        return Err(Error::Domain(format!(
            "tau must lie in the upper half plane, got {tau}"
        )));
    }
    let mut z = tau;
    let mut m = [[1, 0], [0, 1]];
    let mut it = 0;
    loop {
        it += 1;
        if it > MAX_ITER {
            return Err(Error::NoConvergence("lattice reduction".into()));
        }
        let n = z.re.round();
        z -= n;
        m = mul(t(-(n as i64)), m);
        if z.norm_sqr() < 1.0 - BOUNDARY_TOL {
            z = -1.0 / z;
            m = mul(S, m);
        } else {
            break;
        }
    }
    if z.re < -0.5 + BOUNDARY_TOL {
        z += 1.0;
        m = mul(t(1), m);
    }
    if z.norm_sqr() < 1.0 + BOUNDARY_TOL && z.re < 0.0 {
        z = -1.0 / z;
        m = mul(S, m);
    }
    Ok(ReducedTau {
        tau: z,
        unimodular: m,
    })
}

/// Reduce the lattice ℤω₁ + ℤω₂. The witness acts on ω₂/ω₁; when that
/// ratio lies in the lower half plane the generators are swapped and the
/// witness has determinant −1.
pub fn reduce(w1: C64, w2: C64) -> Result<ReducedTau> {
    if w1.norm() == 0.0 || w2.norm() == 0.0 {
        return Err(Error::DegenerateLattice);
    }
    let tau = w2 / w1;
    if tau.im.abs() < 1e-12 * tau.norm().max(1.0) {
        return Err(Error::DegenerateLattice);
    }
    if tau.im > 0.0 {
        reduce_tau(tau)
    } else {
        let r = reduce_tau(1.0 / tau)?;
        let m = r.unimodular;
        Ok(ReducedTau {
            tau: r.tau,
            unimodular: [[m[0][1], m[0][0]], [m[1][1], m[1][0]]],
        })
    }
}

/// Branch formula for the conformal class of the index-two sublattice
/// generated by ω₁ + ω₂ and ω₂ − ω₁, before reduction.
pub fn tau_hat_raw(tau_tilde: C64) -> Result<C64> {
    let den = if tau_tilde.re < 0.0 {
        tau_tilde + 1.0
    } else {
        1.0 - tau_tilde
    };
    if den.norm() < 1e-14 {
        return Err(Error::Pole { dist: den.norm() });
    }
    Ok(if tau_tilde.re < 0.0 {
        (tau_tilde - 1.0) / den
    } else {
        (1.0 + tau_tilde) / den
    })
}

pub fn tau_hat(tau_tilde: C64) -> Result<ReducedTau> {
    let raw = tau_hat_raw(tau_tilde)?;
    reduce(C64::new(1.0, 0.0), raw)
}

/// Distance between two reduced points, minimised over the boundary
/// identifications.
pub fn tau_distance(a: C64, b: C64) -> f64 {
    let inv = -1.0 / b;
    [b, b + 1.0, b - 1.0, inv, inv + 1.0, inv - 1.0]
        .iter()
        .map(|c| (a - c).norm())
        .fold(f64::INFINITY, f64::min)
}

pub fn lattice_distance(l1: (C64, C64), l2: (C64, C64)) -> Result<f64> {
    let a = reduce(l1.0, l1.1)?;
    let b = reduce(l2.0, l2.1)?;
    Ok(tau_distance(a.tau, b.tau))
}

/// Covolume |Im(ω̄₁ω₂)|.
pub fn covolume(w1: C64, w2: C64) -> f64 {
    (w1.conj() * w2).im.abs()
}
