//! Closing points, the conformal torus fₐ and three routes to its Willmore
//! energy.
//!
//! ```text
//! (p₁, p₂, p₃, p₄) ↔ z ∈ (z₊, −z̄₊ + ω′, ω, ω + ω′)
//! ψₖ = F(λₖ)⁻¹ χₖ,   χ₂ = −j χ̄₁,   χ₄ = −j χ̄₃
//! fₐ = (ψ₁, ψ₂)⁻¹ (ψ₃, ψ₄),   closing lattice ω̂₁ = ω₁ + ω₂,  ω̂₂ = ω₂ − ω₁
//! N = Ψ⁻¹ K Ψ,  K = diag(i, −i),   Q_x = (N N_x − N_y)/4,  Q_y = (N N_y + N_x)/4
//! ```
//!
//! Willmore energy:
//!
//! ```text
//! W = ∫_{ℂ/Γ̂} 4γ² dx∧dy = ∫_{ℂ/Γ̃} 8γ² dx∧dy
//! W = 4i (W₂ω₁ − W₁ω₂),   ln μₖ = −ωₖ/ν + Wₖ ν + O(ν³) near λ = 0
//! W = 8π (ω′e₃ + η′) / (ζ(z₊) − ζ(z₊ − ω′) − η′) = 16π (ω′e₃ + η′)(e₃ − ℘(z₊)) / ℘′(z₊)
//! W = 2π² cosh 2t                                   (r = 1)
//! ```

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::genus1_spectral::{t_samples, Genus1Data};
use crate::lax_flows::{u_matrix, v_matrix, FrameGrid, Grid, Trajectory};
use crate::modular_lattice::tau_hat;
use crate::potentials::{Potential, SpectralPoint};
use crate::quaternion::{dot, eigvec, j_partner, norm_sq, structure_defect, to_r4, Mat2};

const I: C64 = C64::new(0.0, 1.0);
/// Stand-in for z → +∞ on the degenerate curve r = 1.
const FAR: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct ClosingData {
    pub points: [SpectralPoint; 4],
    /// Uniformising coordinates of the four points.
    pub z_points: [C64; 4],
    pub chi: [Vector2<C64>; 4],
    /// (ln μ₁, ln μ₂) at each point.
    pub log_mu: [[C64; 2]; 4],
    /// μ̂ for ω̂₁ and ω̂₂ at each point.
    pub mu_hat: [[C64; 2]; 4],
    /// Max residual of the reduced eigen equations for χ₁ and χ₃.
    pub eigen_residual: f64,
    /// Spectral parameters at which frames are needed: q, λ₃, λ₄.
    pub frame_lambdas: [C64; 3],
    pub p0: Potential,
    pub generators: (C64, C64),
    pub hat_generators: (C64, C64),
}

impl ClosingData {
    /// max |μ̂ + 1| over the four points and both generators.
    pub fn closing_defect(&self) -> f64 {
        self.mu_hat
            .iter()
            .flatten()
            .map(|m| (m + 1.0).norm())
            .fold(0.0, f64::max)
    }
}

/// Closing data of the genus-one (or genus-zero) family.
pub fn closing_points_g1(d: &Genus1Data) -> Result<ClosingData> {
    let k = &d.kernel;
    let (r, q, phi) = (d.r, d.q(), d.phi);
    let wp = k.omega_p;
    let w = if k.omega.is_finite() {
        C64::from(k.omega)
    } else {
        C64::from(FAR)
    };
    let z_points = [d.z_plus, -d.z_plus.conj() + wp, w, w + wp];

    let mut log_mu = [[C64::new(0.0, 0.0); 2]; 4];
    for (i, z) in z_points.iter().enumerate() {
        log_mu[i] = [d.log_mu1(*z)?, d.log_mu2(*z)?];
    }
    let expect = [[-1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, -1.0]];
    let mut mu_hat = [[C64::new(0.0, 0.0); 2]; 4];
    for i in 0..4 {
        for jj in 0..2 {
            let m = log_mu[i][jj].exp();
            if (m - expect[i][jj]).norm() > 1e-8 {
                return Err(Error::ClosingViolation(format!(
                    "mu_{} = {m} at p{}",
                    jj + 1,
                    i + 1
                )));
            }
        }
        mu_hat[i] = [
            (log_mu[i][0] + log_mu[i][1]).exp(),
            (log_mu[i][1] - log_mu[i][0]).exp(),
        ];
        if mu_hat[i].iter().any(|m| (m + 1.0).norm() > 1e-8) {
            return Err(Error::ClosingViolation(format!(
                "mu_hat at p{} is {:?}",
                i + 1,
                mu_hat[i]
            )));
        }
    }

    let state = d.reference_state();
    let dm = Matrix2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        -I * C64::from_polar(1.0, -phi),
    );
    let di = dm.try_inverse().unwrap();
    let lp = d.lambda_hat_plus;
    let (m1, e1, m3, e3, l3, l4) = if r < 1.0 {
        let m1 = dm * state.zeta_hat(lp) * di;
        let m3 = dm * state.zeta_hat(C64::from(-1.0 / r)) * di;
        (
            m1,
            d.nu_hat_plus,
            m3,
            C64::new(0.0, 0.0),
            q.conj() / r,
            q.conj() * r,
        )
    } else {
        // â has the double root −1; divide it out
        let s = lp + 1.0;
        let m1 = dm * state.zeta_hat(lp) * di / s;
        let m3 =
            dm * Matrix2::new(
                C64::from(0.0),
                C64::from(-1.0),
                C64::from(-1.0),
                C64::from(0.0),
            ) * di;
        (
            m1,
            d.nu_hat_plus / s,
            m3,
            C64::new(1.0, 0.0),
            q.conj(),
            q.conj(),
        )
    };
    let chi1 = eigvec(&m1, e1);
    let chi3 = eigvec(&m3, e3);
    let eigen_residual = (m1 * chi1 - chi1 * e1)
        .norm()
        .max((m3 * chi3 - chi3 * e3).norm());
    let chi = [chi1, j_partner(&chi1), chi3, j_partner(&chi3)];

    let zero = C64::new(0.0, 0.0);
    let points = [
        SpectralPoint {
            lambda: q,
            nu: zero,
        },
        SpectralPoint {
            lambda: q,
            nu: zero,
        },
        SpectralPoint {
            lambda: l3,
            nu: zero,
        },
        SpectralPoint {
            lambda: l4,
            nu: zero,
        },
    ];
    Ok(ClosingData {
        points,
        z_points,
        chi,
        log_mu,
        mu_hat,
        eigen_residual,
        frame_lambdas: [q, l3, l4],
        p0: d.reference_potential(),
        generators: d.generators(),
        hat_generators: d.hat_generators(),
    })
}

/// Grid with `n + 1` nodes per side spanning the parallelogram of (a, b).
pub fn period_grid(a: C64, b: C64, n: usize) -> Grid {
    Grid {
        origin: C64::new(0.0, 0.0),
        e1: a / n as f64,
        e2: b / n as f64,
        n1: n + 1,
        n2: n + 1,
    }
}

#[derive(Debug, Clone)]
pub struct ImmersionGrid {
    pub grid: Grid,
    pub f: Vec<Mat2>,
    pub normal: Vec<Mat2>,
    pub gamma: Vec<f64>,
    /// |Q|² = det Q_x per node.
    pub q_norm_sq: Vec<f64>,
    /// max over nodes of |jf − f̄j|.
    pub structure_defect: f64,
    /// max over nodes of ‖N² + 1‖.
    pub normal_defect: f64,
    /// max over nodes of |det Q_x − γ²| + |det Q_y − γ²|, relative to γ².
    pub hopf_defect: f64,
    /// Conformality defect from the exact derivatives ψ_x = −Uψ, ψ_y = −Vψ.
    pub analytic_conformality: f64,
}

impl ImmersionGrid {
    pub fn at(&self, i: usize, j: usize) -> &Mat2 {
        &self.f[self.grid.idx(i, j)]
    }

    /// ℝ⁴ coordinates of every node.
    pub fn points_r4(&self) -> Vec<[f64; 4]> {
        self.f.iter().map(to_r4).collect()
    }
}

fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

/// Sample fₐ, the left normal and the Hopf field on `grid`.
pub fn immersion(
    zeta0: &Potential,
    cd: &ClosingData,
    grid: Grid,
    tol: f64,
) -> Result<ImmersionGrid> {
    let fg = FrameGrid::compute(zeta0, grid, &cd.frame_lambdas, tol)?;
    let kk = Matrix2::new(I, C64::from(0.0), C64::from(0.0), -I);
    let q = cd.frame_lambdas[0];
    let n = grid.len();
    let mut out = ImmersionGrid {
        grid,
        f: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
        gamma: Vec::with_capacity(n),
        q_norm_sq: Vec::with_capacity(n),
        structure_defect: 0.0,
        normal_defect: 0.0,
        hopf_defect: 0.0,
        analytic_conformality: 0.0,
    };
    for s in &fg.states {
        let inv = |k: usize| {
            s.frames[k].try_inverse().ok_or(Error::DegenerateFrame {
                det: s.frames[k].determinant().norm(),
            })
        };
        let (f0, f1, f2) = (inv(0)?, inv(1)?, inv(2)?);
        let psi = [
            f0 * cd.chi[0],
            f0 * cd.chi[1],
            f1 * cd.chi[2],
            f2 * cd.chi[3],
        ];
        let p = Matrix2::from_columns(&[psi[0], psi[1]]);
        let det = p.determinant();
        if det.norm() < 1e-10 {
            return Err(Error::DegenerateFrame { det: det.norm() });
        }
        let pi = p.try_inverse().unwrap();
        let fm = pi * Matrix2::from_columns(&[psi[2], psi[3]]);
        let nm = pi * kk * p;
        let lam = [q, q, cd.frame_lambdas[1], cd.frame_lambdas[2]];
        let dpsi = |m: fn(&Potential, C64) -> Mat2| -> Mat2 {
            let c: Vec<Vector2<C64>> = (0..4).map(|k| -(m(&s.p, lam[k]) * psi[k])).collect();
            pi * (Matrix2::from_columns(&[c[2], c[3]]) - Matrix2::from_columns(&[c[0], c[1]]) * fm)
        };
        let (fx, fy) = (to_r4(&dpsi(u_matrix)), to_r4(&dpsi(v_matrix)));
        out.analytic_conformality = out
            .analytic_conformality
            .max(conformality_measure(&fx, &fy));
        let (u, v) = (u_matrix(&s.p, q), v_matrix(&s.p, q));
        let nx = pi * commutator(&u, &kk) * p;
        let ny = pi * commutator(&v, &kk) * p;
        let qx = (nm * nx - ny) / C64::from(4.0);
        let qy = (nm * ny + nx) / C64::from(4.0);
        let g2 = s.p.gamma * s.p.gamma;
        let (dx, dy) = (qx.determinant(), qy.determinant());
        out.hopf_defect = out
            .hopf_defect
            .max(((dx - g2).norm() + (dy - g2).norm()) / g2);
        out.structure_defect = out.structure_defect.max(structure_defect(&fm));
        out.normal_defect = out.normal_defect.max((nm * nm + Mat2::identity()).norm());
        out.f.push(fm);
        out.normal.push(nm);
        out.gamma.push(s.p.gamma);
        out.q_norm_sq.push(dx.re);
    }
    Ok(out)
}

/// (| |f_x| − |f_y| | + |⟨f_x, f_y⟩|) / |f_x|²
fn conformality_measure(fx: &[f64; 4], fy: &[f64; 4]) -> f64 {
    let (xx, yy) = (norm_sq(fx), norm_sq(fy));
    ((xx.sqrt() - yy.sqrt()).abs() + dot(fx, fy).abs()) / xx
}

/// Max over interior nodes of the conformality measure
/// with central differences along the grid directions.
pub fn conformality_defect(g: &ImmersionGrid) -> Result<f64> {
    let gr = &g.grid;
    if gr.n1 < 3 || gr.n2 < 3 {
        return Err(Error::GridTooSmall {
            n1: gr.n1,
            n2: gr.n2,
        });
    }
    // rows of the inverse of [[e1.re, e1.im], [e2.re, e2.im]]
    let (a, b, c, d) = (gr.e1.re, gr.e1.im, gr.e2.re, gr.e2.im);
    let det = a * d - b * c;
    if det.abs() < 1e-300 {
        return Err(Error::Domain("degenerate grid".into()));
    }
    let mut worst: f64 = 0.0;
    for j in 1..gr.n2 - 1 {
        for i in 1..gr.n1 - 1 {
            let r = |ii: usize, jj: usize| to_r4(g.at(ii, jj));
            let (p1, m1, p2, m2) = (r(i + 1, j), r(i - 1, j), r(i, j + 1), r(i, j - 1));
            let mut fx = [0.0; 4];
            let mut fy = [0.0; 4];
            for k in 0..4 {
                let d1 = (p1[k] - m1[k]) / 2.0;
                let d2 = (p2[k] - m2[k]) / 2.0;
                fx[k] = (d * d1 - b * d2) / det;
                fy[k] = (-c * d1 + a * d2) / det;
            }
            worst = worst.max(conformality_measure(&fx, &fy));
        }
    }
    Ok(worst)
}

/// Max |f| mismatch between opposite sides of a `period_grid`.
pub fn periodicity_defect(g: &ImmersionGrid) -> f64 {
    let gr = &g.grid;
    let mut worst: f64 = 0.0;
    for j in 0..gr.n2 {
        worst = worst.max((g.at(gr.n1 - 1, j) - g.at(0, j)).norm());
    }
    for i in 0..gr.n1 {
        worst = worst.max((g.at(i, gr.n2 - 1) - g.at(i, 0)).norm());
    }
    worst
}

pub fn willmore_genus0(t: f64) -> f64 {
    2.0 * PI * PI * (2.0 * t).cosh()
}

/// Explicit genus ≤ 1 energy.
pub fn willmore_explicit_g1(d: &Genus1Data) -> Result<f64> {
    let w = d.willmore_explicit();
    if w.im.abs() > 1e-8 * w.re.abs() || !(w.re > 0.0) {
        return Err(Error::NoConvergence(format!(
            "explicit Willmore value {w} is not real positive"
        )));
    }
    Ok(w.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidueFit {
    pub willmore: f64,
    pub w1: C64,
    pub w2: C64,
    pub residual: f64,
}

/// Fit ln μₖ + ωₖ/ν = Wₖ ν + W′ₖ ν³ + W″ₖ ν⁵ and return 4i(W₂ω₁ − W₁ω₂).
/// `samples` holds (ν, ln μ₁, ln μ₂).
pub fn willmore_residue(w1: C64, w2: C64, samples: &[(C64, C64, C64)]) -> Result<ResidueFit> {
    let n = samples.len();
    if n < 8 {
        return Err(Error::Domain("need at least eight samples".into()));
    }
    let a = DMatrix::from_fn(n, 3, |i, k| samples[i].0.powu(2 * k as u32 + 1));
    let svd = a.clone().svd(true, true);
    let fit = |col: &dyn Fn(&(C64, C64, C64)) -> C64| -> Result<(C64, f64)> {
        let y = DVector::from_iterator(n, samples.iter().map(col));
        let c = svd
            .solve(&y, 1e-300)
            .map_err(|e| Error::NoConvergence(e.to_string()))?;
        Ok((
            c[0],
            (&a * &c - &y).iter().map(|e| e.norm()).fold(0.0, f64::max),
        ))
    };
    let (c1, r1) = fit(&|s| s.1 + w1 / s.0)?;
    let (c2, r2) = fit(&|s| s.2 + w2 / s.0)?;
    let residual = r1.max(r2);
    if residual > 1e-8 {
        return Err(Error::FitResidual {
            residual,
            limit: 1e-8,
        });
    }
    let w = 4.0 * I * (c2 * w1 - c1 * w2);
    if w.im.abs() > 1e-8 * w.re.abs() {
        return Err(Error::FitResidual {
            residual: w.im.abs() / w.re.abs(),
            limit: 1e-8,
        });
    }
    Ok(ResidueFit {
        willmore: w.re,
        w1: c1,
        w2: c2,
        residual,
    })
}

/// (ν, ln μ₁, ln μ₂) at `n` points z = ω′ + ρ e^{iθ} around λ = 0.
pub fn residue_samples_g1(d: &Genus1Data, rho: f64, n: usize) -> Result<Vec<(C64, C64, C64)>> {
    let k = &d.kernel;
    let q = d.q();
    let c = I * C64::from_polar(1.0, -3.0 * d.phi);
    (0..n)
        .map(|m| {
            let z = k.omega_p
                + C64::from_polar(rho, std::f64::consts::TAU * (m as f64 + 0.3) / n as f64);
            let lh = k.lambda_hat(z)?;
            let nh = k.nu_hat(z)?;
            let l = -lh / q;
            Ok((c * (l - q) * nh, d.log_mu1(z)?, d.log_mu2(z)?))
        })
        .collect()
}

pub fn willmore_residue_g1(d: &Genus1Data) -> Result<ResidueFit> {
    let (w1, w2) = d.generators();
    willmore_residue(w1, w2, &residue_samples_g1(d, 0.005, 10)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectWillmore {
    /// ∫ 4γ² over ℂ/Γ̂.
    pub hat: f64,
    /// ∫ 8γ² over ℂ/Γ̃.
    pub tilde: f64,
}

/// Periodic trapezoid rule of `weight`·γ² over the cell spanned by (a, b)
/// with n × n nodes.
pub fn cell_integral(
    p0: &Potential,
    a: C64,
    b: C64,
    n: usize,
    weight: f64,
    tol: f64,
) -> Result<f64> {
    let grid = Grid {
        origin: C64::new(0.0, 0.0),
        e1: a / n as f64,
        e2: b / n as f64,
        n1: n,
        n2: n,
    };
    let t = Trajectory::compute(p0, grid, tol)?;
    let mean = t.states.iter().map(|s| s.gamma * s.gamma).sum::<f64>() / t.states.len() as f64;
    Ok(weight * mean * crate::modular_lattice::covolume(a, b))
}

/// Direct quadrature over both fundamental domains; the two values must
/// agree to 1e−6.
pub fn willmore_direct(
    p0: &Potential,
    tilde: (C64, C64),
    n: usize,
    tol: f64,
) -> Result<DirectWillmore> {
    let hat = (tilde.0 + tilde.1, tilde.1 - tilde.0);
    let h = cell_integral(p0, hat.0, hat.1, n, 4.0, tol)?;
    let t = cell_integral(p0, tilde.0, tilde.1, n, 8.0, tol)?;
    if (h - t).abs() > 1e-6 * h.abs() {
        return Err(Error::NoConvergence(format!(
            "direct Willmore mismatch: {h} over the closing cell, {t} over the period cell"
        )));
    }
    Ok(DirectWillmore { hat: h, tilde: t })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WillmoreReport {
    pub w_explicit: f64,
    pub w_residue: f64,
    pub w_direct: f64,
    pub residue_vs_explicit: f64,
    pub direct_vs_explicit: f64,
    pub direct_vs_residue: f64,
}

pub fn willmore_report(d: &Genus1Data, n: usize, tol: f64) -> Result<WillmoreReport> {
    let e = willmore_explicit_g1(d)?;
    let r = willmore_residue_g1(d)?.willmore;
    let w = willmore_direct(&d.reference_potential(), d.generators(), n, tol)?.hat;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    Ok(WillmoreReport {
        w_explicit: e,
        w_residue: r,
        w_direct: w,
        residue_vs_explicit: rel(r, e),
        direct_vs_explicit: rel(w, e),
        direct_vs_residue: rel(w, r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure4Row {
    pub r: f64,
    pub t: f64,
    pub tau_hat: C64,
    pub willmore: f64,
}

pub fn figure4_row(r: f64, t: f64) -> Result<Figure4Row> {
    let d = Genus1Data::new(r, t)?;
    Ok(Figure4Row {
        r,
        t,
        tau_hat: tau_hat(d.tau_tilde())?.tau,
        willmore: willmore_explicit_g1(&d)?,
    })
}

/// Rows over `t_samples(r, t_steps)` for each r.
pub fn figure4_data(r_list: &[f64], t_steps: usize) -> Result<Vec<Figure4Row>> {
    let mut rows = Vec::new();
    for &r in r_list {
        for t in t_samples(r, t_steps)? {
            rows.push(figure4_row(r, t)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_zero_energy() {
        let d = Genus1Data::new(1.0, 0.5).unwrap();
        assert!(
            (willmore_explicit_g1(&d).unwrap() - willmore_genus0(0.5)).abs()
                < 1e-10 * willmore_genus0(0.5)
        );
    }

    #[test]
    fn clifford_closing() {
        let d = Genus1Data::new(1.0, 0.0).unwrap();
        let cd = closing_points_g1(&d).unwrap();
        assert!(cd.closing_defect() < 1e-10);
        assert!(cd.eigen_residual < 1e-12);
    }
}
