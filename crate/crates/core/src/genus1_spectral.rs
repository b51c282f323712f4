//! Closed-form spectral data of quartics with one double root on the unit
//! circle (and the genus-zero limit r = 1).
//!
//! The quartic is a(λ) = (λ − r q̄)(λ − r⁻¹q̄)(λ − q)², q = e^{2iφ}. In the
//! variable λ̂ = −qλ its genus-one part is â(λ̂) = (λ̂ + r)(λ̂ + r⁻¹), which the
//! Weierstrass data of `r` uniformise:
//!
//! ```text
//! λ̂(z) = e₃ − ℘(z),   ν̂(z) = ℘′(z)/2,   z₊ = ω′/2 + t,   λ̂₊ = λ̂(z₊) = −e^{4iφ}
//! D(z) = ζ(z) − ζ(z − ω′) − η′ = ν̂/λ̂,   S(z) = ζ(z) + ζ(z − ω′) + η′
//! ln μ₁ = πi D(z)/D(z₊)
//! ln μ₂ = ω′S(z) − 2η′z − K ln μ₁,   K = (ω′S(z₊) − 2η′z₊)/(πi)
//! τ̃ = (2η′z₊ − 2ω′ζ(z₊))/(πi)
//! ```
//!
//! The flow lattice is spanned by ωₖ = i e^{−iφ} Rₖ with
//! R₁ = −πi/D(z₊) and R₂ = ω′ + (ω′S(z₊) − 2η′z₊)/D(z₊), so τ̃ = R₂/R₁.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lax_flows::{lift_genus1, Genus1State};
use crate::potentials::{
    classify, Potential, Quartic, SpectralQuartic, StratumClass, DEFAULT_CLASSIFY_TOL,
};
use crate::weierstrass::EllipticKernel;

const I: C64 = C64::new(0.0, 1.0);

/// a(λ) = (λ − r e^{−2iφ})(λ − r⁻¹e^{−2iφ})(λ − e^{2iφ})², classified.
pub fn quartic_from_rphi(r: f64, phi: f64) -> Result<SpectralQuartic> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("r must lie in (0, 1], got {r}")));
    }
    let q = C64::from_polar(1.0, 2.0 * phi);
    let qb = q.conj();
    let quartic = Quartic::from_roots(&[r * qb, qb / r, q, q])?;
    classify(&quartic, DEFAULT_CLASSIFY_TOL)
}

#[derive(Debug, Clone)]
pub struct Genus1Data {
    pub r: f64,
    pub t: f64,
    pub phi: f64,
    pub z_plus: C64,
    pub lambda_hat_plus: C64,
    pub nu_hat_plus: C64,
    pub kernel: EllipticKernel,
    d_plus: C64,
    s_plus: C64,
    zeta_plus: C64,
}

/// Entries of ∂(Re τ̃, Im τ̃)/∂(φ, r) and the closed-form determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianT {
    /// Rows (Re τ̃, Im τ̃), columns (φ, r).
    pub matrix: [[f64; 2]; 2],
    pub det_matrix: f64,
    /// 4((ω′e₃ + η′)² − ω′²) / (π²(1 − r²)).
    pub det_formula: f64,
}

impl JacobianT {
    /// Determinant with the columns ordered (r, φ).
    pub fn det_r_phi(&self) -> f64 {
        -self.det_matrix
    }
}

/// Polynomial fit b̂ᵢ(λ̂) = Σ cₖ λ̂ᵏ, k ≤ 3, of d ln μᵢ = b̂ᵢ/(2ν̂) d ln λ̂.
#[derive(Debug, Clone)]
pub struct BHatFit {
    pub b1: [C64; 4],
    pub b2: [C64; 4],
    pub residual: f64,
    pub condition: f64,
}

pub fn poly_eval(c: &[C64], x: C64) -> C64 {
    c.iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, k| acc * x + k)
}

impl Genus1Data {
    pub fn new(r: f64, t: f64) -> Result<Self> {
        let kernel = EllipticKernel::new(r)?;
        if !t.is_finite() {
            return Err(Error::Domain("t must be finite".into()));
        }
        if t.abs() > kernel.omega * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "t = {t} lies outside [-omega, omega] = [-{w}, {w}]",
                w = kernel.omega
            )));
        }
        let z_plus = kernel.omega_p / 2.0 + t;
        let lh = kernel.lambda_hat(z_plus)?;
        // continuous branch through φ(0) = π/4
        let phi = (PI + lh.arg()) / 4.0;
        Self::assemble(kernel, t, phi)
    }

    /// Data with λ̂₊ = −e^{4iφ}; φ ∈ [0, π).
    pub fn from_r_phi(r: f64, phi: f64) -> Result<Self> {
        let kernel = EllipticKernel::new(r)?;
        let target = 4.0 * phi - PI;
        let off = |t: f64| -> Result<f64> {
            let lh = kernel.lambda_hat(kernel.omega_p / 2.0 + t)?;
            Ok((lh * C64::from_polar(1.0, -target)).arg())
        };
        let half = if kernel.omega.is_finite() {
            kernel.omega
        } else {
            20.0
        };
        let n = 128;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=n {
            let t = -half + 2.0 * half * k as f64 / n as f64;
            let v = off(t)?.abs();
            if v < best.0 {
                best = (v, t);
            }
        }
        let mut t = best.1;
        for _ in 0..60 {
            let z = kernel.omega_p / 2.0 + t;
            let lh = kernel.lambda_hat(z)?;
            let dlog = -kernel.wp_prime(z)? / lh;
            let f = off(t)?;
            let step = f / dlog.im;
            t -= step;
            if step.abs() < 1e-15 * t.abs().max(1.0) {
                break;
            }
        }
        if off(t)?.abs() > 1e-10 {
            return Err(Error::NoConvergence(format!(
                "no point with lambda_hat = -exp(4i phi) for phi = {phi}"
            )));
        }
        Self::assemble(kernel, t, phi)
    }

    /// Recover (r, φ) from an M22 or M23 quartic; φ = arg(q)/2 ∈ [0, π).
    pub fn from_quartic(sq: &SpectralQuartic) -> Result<Self> {
        let (q, r) = match sq.class {
            StratumClass::M22 => {
                let q = sq.roots[0].value;
                let a = sq.roots[1].value.norm();
                (q, a.min(1.0 / a))
            }
            StratumClass::M23 => {
                // the two double roots are q and −q̄
                let q = sq
                    .roots
                    .iter()
                    .map(|x| x.value)
                    .find(|v| v.im > 0.0 || (v.im == 0.0 && v.re > 0.0));
                (
                    q.ok_or_else(|| {
                        Error::Domain("no double root in the upper half plane".into())
                    })?,
                    1.0,
                )
            }
            other => {
                return Err(Error::Class {
                    expected: "M2_2 or M2_3".into(),
                    found: other.label().into(),
                })
            }
        };
        let mut phi = q.arg() / 2.0;
        if phi < 0.0 {
            phi += PI;
        }
        Self::from_r_phi(r, phi)
    }

    fn assemble(kernel: EllipticKernel, t: f64, phi: f64) -> Result<Self> {
        let z_plus = kernel.omega_p / 2.0 + t;
        let (p, dp, zp) = kernel.eval_all(z_plus)?;
        let zm = kernel.zeta(z_plus - kernel.omega_p)?;
        let d_plus = zp - zm - kernel.eta_p;
        let s_plus = zp + zm + kernel.eta_p;
        Ok(Self {
            r: kernel.r,
            t,
            phi,
            z_plus,
            lambda_hat_plus: kernel.e3 - p,
            nu_hat_plus: dp / 2.0,
            kernel,
            d_plus,
            s_plus,
            zeta_plus: zp,
        })
    }

    /// q = e^{2iφ}, the double root of a.
    pub fn q(&self) -> C64 {
        C64::from_polar(1.0, 2.0 * self.phi)
    }

    pub fn spectral_quartic(&self) -> Result<SpectralQuartic> {
        quartic_from_rphi(self.r, self.phi)
    }

    /// λ of a point with coordinate λ̂.
    pub fn lambda_of(&self, lh: C64) -> C64 {
        -lh / self.q()
    }

    fn k_plus(&self) -> C64 {
        let k = &self.kernel;
        (k.omega_p * self.s_plus - 2.0 * k.eta_p * self.z_plus) / (I * PI)
    }

    fn d_s(&self, z: C64) -> Result<(C64, C64)> {
        let k = &self.kernel;
        let a = k.zeta(z)?;
        let b = k.zeta(z - k.omega_p)?;
        Ok((a - b - k.eta_p, a + b + k.eta_p))
    }

    pub fn log_mu1(&self, z: C64) -> Result<C64> {
        Ok(I * PI * self.d_s(z)?.0 / self.d_plus)
    }

    pub fn log_mu2(&self, z: C64) -> Result<C64> {
        let k = &self.kernel;
        let (d, s) = self.d_s(z)?;
        let l1 = I * PI * d / self.d_plus;
        Ok(k.omega_p * s - 2.0 * k.eta_p * z - self.k_plus() * l1)
    }

    /// (d ln μ₁/dz, d ln μ₂/dz) from ℘(z) and ℘(z − ω′).
    pub fn dlog_mu(&self, z: C64) -> Result<(C64, C64)> {
        let k = &self.kernel;
        let p0 = k.wp(z)?;
        let p1 = k.wp(z - k.omega_p)?;
        let d1 = I * PI * (p1 - p0) / self.d_plus;
        let d2 = -k.omega_p * (p0 + p1) - 2.0 * k.eta_p - self.k_plus() * d1;
        Ok((d1, d2))
    }

    pub fn tau_tilde(&self) -> C64 {
        let k = &self.kernel;
        (2.0 * k.eta_p * self.z_plus - 2.0 * k.omega_p * self.zeta_plus) / (I * PI)
    }

    /// The same expression with z₊ replaced by an arbitrary z; it tends to −1
    /// at the branch points z = ω and z = ω + ω′ (λ̂ = −r⁻¹, −r).
    pub fn tau_tilde_at(&self, z: C64) -> Result<C64> {
        let k = &self.kernel;
        Ok((2.0 * k.eta_p * z - 2.0 * k.omega_p * k.zeta(z)?) / (I * PI))
    }

    /// (Re τ̃, Im τ̃) from the separate closed forms
    /// (2η′z₊ − ω′S₊)/(πi) and ω′ν̂₊/(πλ̂₊).
    pub fn tau_tilde_split(&self) -> (C64, C64) {
        let k = &self.kernel;
        (
            (2.0 * k.eta_p * self.z_plus - k.omega_p * self.s_plus) / (I * PI),
            k.omega_p * self.nu_hat_plus / (PI * self.lambda_hat_plus),
        )
    }

    /// (R₁, R₂).
    pub fn residues(&self) -> (C64, C64) {
        let k = &self.kernel;
        let r1 = -I * PI / self.d_plus;
        let r2 = k.omega_p + (k.omega_p * self.s_plus - 2.0 * k.eta_p * self.z_plus) / self.d_plus;
        (r1, r2)
    }

    /// Generators (ω₁, ω₂) of the period lattice in flow coordinates.
    pub fn generators(&self) -> (C64, C64) {
        let (r1, r2) = self.residues();
        let c = I * C64::from_polar(1.0, -self.phi);
        (c * r1, c * r2)
    }

    /// Generators ω₁ + ω₂, ω₂ − ω₁ of the closing sublattice.
    pub fn hat_generators(&self) -> (C64, C64) {
        let (a, b) = self.generators();
        (a + b, b - a)
    }

    pub fn reference_state(&self) -> Genus1State {
        Genus1State {
            alpha_hat: 0.0,
            beta_hat: 1.0 / self.r.sqrt(),
        }
    }

    /// The lift of (α̂, β̂) = (0, r^{−1/2}); it lies in I(a) and sits at z = 0.
    pub fn reference_potential(&self) -> Potential {
        lift_genus1(&self.reference_state(), self.phi)
    }

    /// Explicit Willmore energy 8π(ω′e₃ + η′)/D(z₊).
    pub fn willmore_explicit(&self) -> C64 {
        let k = &self.kernel;
        8.0 * PI * (k.omega_p * k.e3 + k.eta_p) / self.d_plus
    }

    /// Same energy written as 16π(ω′e₃ + η′)(e₃ − ℘(z₊))/℘′(z₊).
    pub fn willmore_explicit_wp(&self) -> C64 {
        let k = &self.kernel;
        16.0 * PI * (k.omega_p * k.e3 + k.eta_p) * self.lambda_hat_plus / (2.0 * self.nu_hat_plus)
    }

    pub fn jacobian_t(&self) -> Result<JacobianT> {
        let k = &self.kernel;
        let dwp = k.domega_p_dr()?;
        let (l, n, r) = (self.lambda_hat_plus, self.nu_hat_plus, self.r);
        let c = k.omega_p * k.e3 + k.eta_p;
        let dre_dl = (k.omega_p * (l + 1.0 / l) - 2.0 * c) / (2.0 * PI * I * n);
        let dim_dl = k.omega_p * (1.0 / l - l) / (2.0 * PI * n);
        let dre_dr = 2.0 * dwp * (l * l - 1.0) / (2.0 * PI * I * n);
        let ahat = (l + r) * (l + 1.0 / r);
        let dim_dr = (k.omega_p * (1.0 / (r * r) - 1.0) * l - 2.0 * dwp * ahat) / (2.0 * PI * n);
        let dphi = 4.0 * I * l;
        let m = [
            [(dphi * dre_dl).re, dre_dr.re],
            [(dphi * dim_dl).re, dim_dr.re],
        ];
        let det_formula = (4.0 * (c * c - k.omega_p * k.omega_p) / (PI * PI * (1.0 - r * r))).re;
        Ok(JacobianT {
            matrix: m,
            det_matrix: m[0][0] * m[1][1] - m[0][1] * m[1][0],
            det_formula,
        })
    }

    /// Solve λ̂(z) = target by Newton iteration from `z0`.
    pub fn z_of_lambda_hat(&self, target: C64, z0: C64) -> Result<C64> {
        let k = &self.kernel;
        let mut z = z0;
        for _ in 0..80 {
            let (p, dp, _) = k.eval_all(z)?;
            let f = k.e3 - p - target;
            let step = f / (-dp);
            z -= step;
            if step.norm() < 1e-15 * z.norm().max(1.0) {
                return Ok(z);
            }
        }
        let res = (k.lambda_hat(z)? - target).norm();
        if res < 1e-12 * target.norm().max(1.0) {
            Ok(z)
        } else {
            Err(Error::NoConvergence(format!(
                "inverting lambda_hat at {target}"
            )))
        }
    }

    /// Fit b̂ᵢ(λ̂) from `n` samples on |λ̂| = 0.6 with b̂ᵢ = −λ̂ d ln μᵢ/dz.
    /// The derivative is even in z, so the sheet reached by Newton is
    /// irrelevant.
    pub fn recover_b_hats(&self, n: usize) -> Result<BHatFit> {
        if n < 6 {
            return Err(Error::Domain("need at least six samples".into()));
        }
        let rho = 0.6;
        let th0 = 0.37;
        let mut z = self.z_plus;
        let start = C64::from_polar(rho, th0);
        let steps = 32;
        for s in 1..=steps {
            let f = s as f64 / steps as f64;
            z = self.z_of_lambda_hat(self.lambda_hat_plus * (1.0 - f) + start * f, z)?;
        }
        let mut xs = Vec::with_capacity(n);
        let mut y1 = Vec::with_capacity(n);
        let mut y2 = Vec::with_capacity(n);
        let dth = std::f64::consts::TAU / n as f64;
        for j in 0..n {
            if j > 0 {
                for s in 1..=4 {
                    let th = th0 + dth * (j as f64 - 1.0 + s as f64 / 4.0);
                    z = self.z_of_lambda_hat(C64::from_polar(rho, th), z)?;
                }
            }
            let lh = C64::from_polar(rho, th0 + dth * j as f64);
            let (d1, d2) = self.dlog_mu(z)?;
            xs.push(lh);
            y1.push(-lh * d1);
            y2.push(-lh * d2);
        }
        let (b1, r1, cond) = lsq_poly(&xs, &y1, 4)?;
        let (b2, r2, _) = lsq_poly(&xs, &y2, 4)?;
        Ok(BHatFit {
            b1,
            b2,
            residual: r1.max(r2),
            condition: cond,
        })
    }

    /// Closed forms of b̂₁, b̂₂ (ascending coefficients).
    pub fn b_hats_closed(&self) -> ([C64; 4], [C64; 4]) {
        let k = &self.kernel;
        let a = I * PI / self.d_plus;
        let c = k.omega_p * k.e3 + k.eta_p;
        let kp = self.k_plus();
        let z = C64::new(0.0, 0.0);
        (
            [a, z, -a, z],
            [-k.omega_p - kp * a, 2.0 * c, -k.omega_p + kp * a, z],
        )
    }
}

/// `n` equally spaced t values, symmetric about 0: on [−0.95ω, 0.95ω] for
/// r < 1 and on [−2, 2] at r = 1. Odd `n` includes t = 0 exactly.
pub fn t_samples(r: f64, n: usize) -> Result<Vec<f64>> {
    let k = EllipticKernel::new(r)?;
    let half = if k.omega.is_finite() {
        0.95 * k.omega
    } else {
        2.0
    };
    if n <= 1 {
        return Ok(vec![0.0; n]);
    }
    let m = (n - 1) as f64;
    Ok((0..n).map(|i| half * (2.0 * i as f64 - m) / m).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Figure3Row {
    pub r: f64,
    pub t: f64,
    pub tau_tilde: C64,
}

pub fn figure3_data(r_list: &[f64], t_steps: usize) -> Result<Vec<Figure3Row>> {
    let mut rows = Vec::new();
    for &r in r_list {
        for t in t_samples(r, t_steps)? {
            rows.push(Figure3Row {
                r,
                t,
                tau_tilde: Genus1Data::new(r, t)?.tau_tilde(),
            });
        }
    }
    Ok(rows)
}

/// Least-squares polynomial fit of degree < m; returns coefficients,
/// relative residual and the Vandermonde condition number.
fn lsq_poly(xs: &[C64], ys: &[C64], m: usize) -> Result<([C64; 4], f64, f64)> {
    use nalgebra::{DMatrix, DVector};
    let n = xs.len();
    let v = DMatrix::from_fn(n, m, |i, j| xs[i].powu(j as u32));
    let svd = v.clone().svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    if cond > 1e12 {
        return Err(Error::IllConditioned { cond });
    }
    let y = DVector::from_column_slice(ys);
    let c = svd
        .solve(&y, 1e-14)
        .map_err(|e| Error::NoConvergence(e.to_string()))?;
    let res = (&v * &c - &y).norm() / y.norm().max(1e-300);
    let mut out = [C64::new(0.0, 0.0); 4];
    for (k, o) in out.iter_mut().enumerate().take(m) {
        *o = c[k];
    }
    Ok((out, res, cond))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clifford_anchor() {
        let d = Genus1Data::new(1.0, 0.0).unwrap();
        assert!((d.tau_tilde() - I).norm() < 1e-14);
        assert!((d.phi - PI / 4.0).abs() < 1e-14);
        assert!((d.willmore_explicit().re - 2.0 * PI * PI).abs() < 1e-12);
        assert!((d.log_mu1(d.z_plus).unwrap() - I * PI).norm() < 1e-13);
    }

    #[test]
    fn from_r_phi_round_trip() {
        let d = Genus1Data::new(0.5, 0.3).unwrap();
        let e = Genus1Data::from_r_phi(0.5, d.phi).unwrap();
        assert!((d.t - e.t).abs() < 1e-12, "{} {}", d.t, e.t);
        let s = d.spectral_quartic().unwrap();
        let f = Genus1Data::from_quartic(&s).unwrap();
        assert!((f.t - d.t).abs() < 1e-9 && (f.r - 0.5).abs() < 1e-12);
    }
}
