//! The two commuting Lax flows on potentials, the frame equation and the
//! reduced one-dimensional flow of genus-one potentials.
//!
//! ```text
//! ∂ζ/∂x = [ζ, U(ζ)],   ∂ζ/∂y = [ζ, V(ζ)],   dF = F (U dx + V dy)
//!
//!        ( (α−ᾱ)/2        −γ⁻¹λ⁻¹ − γ )          ( (α+ᾱ)/2        −γ⁻¹λ⁻¹ + γ  )
//! U  =   (                             ),  V = i (                              )
//!        ( γ + γ⁻¹λ       (ᾱ−α)/2     )          ( γ − γ⁻¹λ       −(α+ᾱ)/2     )
//! ```
//!
//! In coordinates, with g = γ + γ⁻¹ and h = γ − γ⁻¹:
//!
//! ```text
//! α_x = i Im β g + Re β h + γ² − γ⁻²       α_y = −Im β g + i Re β h − i(γ² − γ⁻²)
//! β_x = −2i Im α (β + g) − 2 Re α h        β_y = −2i Re α (β − g) − 2 Im α h
//! γ_x = −2 Re α γ                          γ_y = 2 Im α γ
//! ```
//!
//! With these flows u = ln γ solves Δu + 8 sinh 2u = 0, which is
//! Δu + 2 sinh 2u = 0 in the doubled coordinates (2x, 2y).
//!
//! Genus-one potentials (α̂ real, β̂ > 0) evolve only in ŷ = cos φ x − sin φ y:
//!
//! ```text
//! α̂' = 2(β̂⁻² − β̂²),   β̂' = 2 α̂ β̂,   â₁ = α̂² + β̂² + β̂⁻²
//! α = −α̂ e^{iφ},   β = β̂ e^{2iφ} + β̂⁻¹ e^{−2iφ},   γ = β̂
//! ```

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::potentials::Potential;

const I: C64 = C64::new(0.0, 1.0);

/// Tangent vector (dα, dβ, dγ) to the potential space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub d_alpha: C64,
    pub d_beta: C64,
    pub d_gamma: f64,
}

impl Tangent {
    pub fn norm(&self) -> f64 {
        self.d_alpha.norm() + self.d_beta.norm() + self.d_gamma.abs()
    }
}

pub fn lax_vector_fields(p: &Potential) -> (Tangent, Tangent) {
    let (a, b, g) = (p.alpha, p.beta, p.gamma);
    let gp = g + 1.0 / g;
    let gm = g - 1.0 / g;
    let g2 = g * g - 1.0 / (g * g);
    let x = Tangent {
        d_alpha: I * b.im * gp + b.re * gm + g2,
        d_beta: -2.0 * I * a.im * (b + gp) - 2.0 * a.re * gm,
        d_gamma: -2.0 * a.re * g,
    };
    let y = Tangent {
        d_alpha: -b.im * gp + I * b.re * gm - I * g2,
        d_beta: -2.0 * I * a.re * (b - gp) - 2.0 * a.im * gm,
        d_gamma: 2.0 * a.im * g,
    };
    (x, y)
}

pub fn u_matrix(p: &Potential, l: C64) -> Matrix2<C64> {
    let (a, g) = (p.alpha, p.gamma);
    let d = (a - a.conj()) / 2.0;
    Matrix2::new(d, -1.0 / (g * l) - g, g + l / g, -d)
}

pub fn v_matrix(p: &Potential, l: C64) -> Matrix2<C64> {
    let (a, g) = (p.alpha, p.gamma);
    let d = (a + a.conj()) / 2.0;
    Matrix2::new(d, -1.0 / (g * l) + g, g - l / g, -d) * I
}

fn flow_rhs(dir: C64, y: &[f64], dy: &mut [f64]) {
    let p = Potential::from_slice(y);
    let (x, v) = lax_vector_fields(&p);
    let da = x.d_alpha * dir.re + v.d_alpha * dir.im;
    let db = x.d_beta * dir.re + v.d_beta * dir.im;
    dy[0] = da.re;
    dy[1] = da.im;
    dy[2] = db.re;
    dy[3] = db.im;
    dy[4] = x.d_gamma * dir.re + v.d_gamma * dir.im;
}

fn positive_gamma(y: &[f64]) -> bool {
    y[4] > 0.0
}

/// Flow by the complex displacement `dz` (x-flow by Re dz, y-flow by Im dz).
pub fn flow(p: &Potential, dz: C64, opts: &OdeOptions) -> Result<Potential> {
    let mut y = p.to_vec();
    integrate(
        |y, d| flow_rhs(dz, y, d),
        &mut y,
        1.0,
        opts,
        positive_gamma,
        |_| {},
    )?;
    Ok(Potential::from_slice(&y))
}

/// Sum of the coefficient drifts |Δa₁| + |Δa₂| between two potentials.
pub fn drift(p0: &Potential, p: &Potential) -> f64 {
    let (q0, q) = (p0.quartic(), p.quartic());
    (q.a1 - q0.a1).norm() + (q.a2 - q0.a2).abs()
}

/// States at the waypoints of a polygonal path starting at z = 0.
#[derive(Debug, Clone)]
pub struct PathTrajectory {
    pub points: Vec<C64>,
    pub states: Vec<Potential>,
    pub max_drift: f64,
}

pub fn integrate_flow(p0: &Potential, path: &[C64], tol: f64) -> Result<PathTrajectory> {
    let opts = OdeOptions::with_tol(tol);
    let mut points = vec![C64::new(0.0, 0.0)];
    let mut states = vec![*p0];
    let mut max_drift: f64 = 0.0;
    for &z in path {
        let prev = *points.last().unwrap();
        let s = flow(states.last().unwrap(), z - prev, &opts)?;
        max_drift = max_drift.max(drift(p0, &s));
        points.push(z);
        states.push(s);
    }
    Ok(PathTrajectory {
        points,
        states,
        max_drift,
    })
}

/// Parallelogram grid of nodes `origin + i e1 + j e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: C64,
    pub e1: C64,
    pub e2: C64,
    pub n1: usize,
    pub n2: usize,
}

impl Grid {
    pub fn rect(x0: f64, y0: f64, hx: f64, hy: f64, n1: usize, n2: usize) -> Self {
        Self {
            origin: C64::new(x0, y0),
            e1: C64::new(hx, 0.0),
            e2: C64::new(0.0, hy),
            n1,
            n2,
        }
    }

    /// Square grid centred at the origin with half-width `half` and `n` nodes per side.
    pub fn centered(half: f64, n: usize) -> Self {
        let h = 2.0 * half / (n - 1) as f64;
        Self::rect(-half, -half, h, h, n, n)
    }

    pub fn node(&self, i: usize, j: usize) -> C64 {
        self.origin + self.e1 * i as f64 + self.e2 * j as f64
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Visit every node starting from the node nearest to z = 0: first the
/// spine column through it, then each row outwards from the spine.
fn sweep<S: Clone>(
    grid: &Grid,
    s0: &S,
    mut step: impl FnMut(&S, C64) -> Result<S>,
) -> Result<Vec<S>> {
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let mut i0 = 0;
    let mut j0 = 0;
    let mut best = f64::INFINITY;
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let d = grid.node(i, j).norm();
            if d < best {
                best = d;
                i0 = i;
                j0 = j;
            }
        }
    }
    let mut out: Vec<Option<S>> = vec![None; grid.len()];
    out[grid.idx(i0, j0)] = Some(step(s0, grid.node(i0, j0))?);
    for j in j0 + 1..grid.n2 {
        let s = step(out[grid.idx(i0, j - 1)].as_ref().unwrap(), grid.e2)?;
        out[grid.idx(i0, j)] = Some(s);
    }
    for j in (0..j0).rev() {
        let s = step(out[grid.idx(i0, j + 1)].as_ref().unwrap(), -grid.e2)?;
        out[grid.idx(i0, j)] = Some(s);
    }
    for j in 0..grid.n2 {
        for i in i0 + 1..grid.n1 {
            let s = step(out[grid.idx(i - 1, j)].as_ref().unwrap(), grid.e1)?;
            out[grid.idx(i, j)] = Some(s);
        }
        for i in (0..i0).rev() {
            let s = step(out[grid.idx(i + 1, j)].as_ref().unwrap(), -grid.e1)?;
            out[grid.idx(i, j)] = Some(s);
        }
    }
    Ok(out.into_iter().map(|s| s.unwrap()).collect())
}

/// Potentials on a grid, flowed from `p0` sitting at z = 0.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub p0: Potential,
    pub states: Vec<Potential>,
    pub drift: Vec<f64>,
}

impl Trajectory {
    pub fn compute(p0: &Potential, grid: Grid, tol: f64) -> Result<Self> {
        let opts = OdeOptions::with_tol(tol);
        let states = sweep(&grid, p0, |s, dz| flow(s, dz, &opts))?;
        let drift = states.iter().map(|s| drift(p0, s)).collect();
        Ok(Self {
            grid,
            p0: *p0,
            states,
            drift,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> &Potential {
        &self.states[self.grid.idx(i, j)]
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.iter().copied().fold(0.0, f64::max)
    }
}

/// Max over interior nodes of |Δu + 2 sinh 2u| for u = ln γ in the doubled
/// coordinates (2x, 2y), i.e. |Δu + 8 sinh 2u| / 4 in the flow coordinates.
/// Needs an axis-aligned grid.
pub fn sinh_gordon_residual(t: &Trajectory) -> Result<f64> {
    let g = &t.grid;
    if g.n1 < 3 || g.n2 < 3 {
        return Err(Error::GridTooSmall { n1: g.n1, n2: g.n2 });
    }
    if g.e1.im != 0.0 || g.e2.re != 0.0 {
        return Err(Error::Domain(
            "sinh-Gordon residual needs an axis-aligned grid".into(),
        ));
    }
    let (hx, hy) = (g.e1.re, g.e2.im);
    let u = |i: usize, j: usize| t.at(i, j).gamma.ln();
    let mut worst: f64 = 0.0;
    for j in 1..g.n2 - 1 {
        for i in 1..g.n1 - 1 {
            let c = u(i, j);
            let lap = (u(i + 1, j) - 2.0 * c + u(i - 1, j)) / (hx * hx)
                + (u(i, j + 1) - 2.0 * c + u(i, j - 1)) / (hy * hy);
            worst = worst.max(((lap + 8.0 * (2.0 * c).sinh()) / 4.0).abs());
        }
    }
    Ok(worst)
}

/// |φ_x(a) φ_y(b) p − φ_y(b) φ_x(a) p| in the (α, β, γ) coordinates.
pub fn commutativity_defect(p: &Potential, a: f64, b: f64, tol: f64) -> Result<f64> {
    let opts = OdeOptions::with_tol(tol);
    let xy = flow(&flow(p, C64::new(a, 0.0), &opts)?, C64::new(0.0, b), &opts)?;
    let yx = flow(&flow(p, C64::new(0.0, b), &opts)?, C64::new(a, 0.0), &opts)?;
    Ok(xy.distance(&yx))
}

/// Potential together with frames at a list of spectral parameters.
#[derive(Debug, Clone)]
pub struct FrameState {
    pub p: Potential,
    pub frames: Vec<Matrix2<C64>>,
}

fn pack_frames(s: &FrameState) -> Vec<f64> {
    let mut y = s.p.to_vec().to_vec();
    for f in &s.frames {
        for e in f.iter() {
            y.push(e.re);
            y.push(e.im);
        }
    }
    y
}

fn frame_at(y: &[f64], k: usize) -> Matrix2<C64> {
    let o = 5 + 8 * k;
    let e = |m: usize| C64::new(y[o + 2 * m], y[o + 2 * m + 1]);
    // column-major storage
    Matrix2::new(e(0), e(2), e(1), e(3))
}

fn unpack_frames(y: &[f64], n: usize) -> FrameState {
    FrameState {
        p: Potential::from_slice(y),
        frames: (0..n).map(|k| frame_at(y, k)).collect(),
    }
}

fn write_frame(y: &mut [f64], k: usize, f: &Matrix2<C64>) {
    let o = 5 + 8 * k;
    for (m, e) in f.iter().enumerate() {
        y[o + 2 * m] = e.re;
        y[o + 2 * m + 1] = e.im;
    }
}

/// Flow potential and frames by the displacement `dz`.
pub fn flow_frames(
    s: &FrameState,
    lambdas: &[C64],
    dz: C64,
    opts: &OdeOptions,
) -> Result<FrameState> {
    let n = lambdas.len();
    let mut y = pack_frames(s);
    let rhs = |y: &[f64], dy: &mut [f64]| {
        flow_rhs(dz, y, dy);
        let p = Potential::from_slice(y);
        for (k, &l) in lambdas.iter().enumerate() {
            let om = u_matrix(&p, l) * C64::from(dz.re) + v_matrix(&p, l) * C64::from(dz.im);
            write_frame(dy, k, &(frame_at(y, k) * om));
        }
    };
    let renorm = |y: &mut [f64]| {
        for k in 0..n {
            let f = frame_at(y, k);
            let s = f.determinant().sqrt();
            write_frame(y, k, &(f / s));
        }
    };
    integrate(rhs, &mut y, 1.0, opts, positive_gamma, renorm)?;
    Ok(unpack_frames(&y, n))
}

/// Sixteen equally spaced points on the unit circle.
pub fn default_lambda_samples() -> Vec<C64> {
    (0..16)
        .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 16.0))
        .collect()
}

/// Frames on a grid, with F = identity at z = 0.
#[derive(Debug, Clone)]
pub struct FrameGrid {
    pub grid: Grid,
    pub lambdas: Vec<C64>,
    pub states: Vec<FrameState>,
}

impl FrameGrid {
    pub fn compute(p0: &Potential, grid: Grid, lambdas: &[C64], tol: f64) -> Result<Self> {
        let opts = OdeOptions::with_tol(tol);
        let s0 = FrameState {
            p: *p0,
            frames: vec![Matrix2::identity(); lambdas.len()],
        };
        let states = sweep(&grid, &s0, |s, dz| flow_frames(s, lambdas, dz, &opts))?;
        Ok(Self {
            grid,
            lambdas: lambdas.to_vec(),
            states,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> &FrameState {
        &self.states[self.grid.idx(i, j)]
    }
}

/// Frames at the end of the straight path 0 → ω; at a lattice vector these
/// are the monodromies.
pub fn monodromy(p0: &Potential, omega: C64, lambdas: &[C64], tol: f64) -> Result<FrameState> {
    let s0 = FrameState {
        p: *p0,
        frames: vec![Matrix2::identity(); lambdas.len()],
    };
    flow_frames(&s0, lambdas, omega, &OdeOptions::with_tol(tol))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Genus1State {
    pub alpha_hat: f64,
    pub beta_hat: f64,
}

impl Genus1State {
    pub fn new(alpha_hat: f64, beta_hat: f64) -> Result<Self> {
        if !(beta_hat > 0.0 && beta_hat.is_finite() && alpha_hat.is_finite()) {
            return Err(Error::Domain(format!(
                "beta_hat must be positive, got {beta_hat}"
            )));
        }
        Ok(Self {
            alpha_hat,
            beta_hat,
        })
    }

    pub fn a1_hat(&self) -> f64 {
        let b2 = self.beta_hat * self.beta_hat;
        self.alpha_hat * self.alpha_hat + b2 + 1.0 / b2
    }

    /// ζ̂(λ̂) of the genus-one potential.
    pub fn zeta_hat(&self, lh: C64) -> Matrix2<C64> {
        let (a, b) = (self.alpha_hat, self.beta_hat);
        Matrix2::new(
            I * a * lh,
            -1.0 / b - b * lh,
            b * lh + lh * lh / b,
            -I * a * lh,
        )
    }
}

fn genus1_rhs(y: &[f64], d: &mut [f64]) {
    let b2 = y[1] * y[1];
    d[0] = 2.0 * (1.0 / b2 - b2);
    d[1] = 2.0 * y[0] * y[1];
}

/// Flow the genus-one state by ŷ = `y`.
pub fn genus1_flow(s0: &Genus1State, y: f64, tol: f64) -> Result<Genus1State> {
    let mut v = [s0.alpha_hat, s0.beta_hat];
    integrate(
        genus1_rhs,
        &mut v,
        y,
        &OdeOptions::with_tol(tol),
        |v| v[1] > 0.0,
        |_| {},
    )?;
    Ok(Genus1State {
        alpha_hat: v[0],
        beta_hat: v[1],
    })
}

/// States at `n + 1` equally spaced ŷ ∈ [0, y_span].
pub fn genus1_orbit(s0: &Genus1State, y_span: f64, n: usize, tol: f64) -> Result<Vec<Genus1State>> {
    let h = y_span / n as f64;
    let mut out = vec![*s0];
    for _ in 0..n {
        out.push(genus1_flow(out.last().unwrap(), h, tol)?);
    }
    Ok(out)
}

/// Period of the closed genus-one orbit through `s0`: first return to the
/// section α̂ = α̂₀ crossed in the starting direction, refined by secant
/// steps on the re-integrated flow.
pub fn genus1_period(s0: &Genus1State, tol: f64) -> Result<f64> {
    let d0 = {
        let mut d = [0.0; 2];
        genus1_rhs(&[s0.alpha_hat, s0.beta_hat], &mut d);
        d
    };
    if d0[0].abs() + d0[1].abs() < 1e-14 {
        return Err(Error::Domain(
            "stationary genus-one state has no period".into(),
        ));
    }
    // section through s0 transverse to the flow
    let g =
        |s: &Genus1State| (s.alpha_hat - s0.alpha_hat) * d0[0] + (s.beta_hat - s0.beta_hat) * d0[1];
    let h = 0.01;
    let mut y = 0.0;
    let mut s = *s0;
    let mut prev = 0.0;
    let mut left_start = false;
    for _ in 0..200_000 {
        let next = genus1_flow(&s, h, tol)?;
        let gv = g(&next);
        if !left_start
            && gv.abs() > 0.0
            && (next.alpha_hat - s0.alpha_hat).hypot(next.beta_hat - s0.beta_hat) > 1e-3
        {
            left_start = true;
        }
        if left_start && prev < 0.0 && gv >= 0.0 {
            let (mut a, mut b) = (0.0, h);
            let (mut ga, mut gb) = (prev, gv);
            for _ in 0..60 {
                let m = a - ga * (b - a) / (gb - ga);
                let gm = g(&genus1_flow(&s, m, tol)?);
                if gm.abs() < 1e-15 || (b - a).abs() < 1e-15 {
                    return Ok(y + m);
                }
                if gm < 0.0 {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                    gb = gm;
                }
            }
            return Ok(y + a - ga * (b - a) / (gb - ga));
        }
        prev = gv;
        s = next;
        y += h;
    }
    Err(Error::NoConvergence(
        "genus-one orbit did not return".into(),
    ))
}

/// Embed a genus-one state into the potential space at angle φ.
pub fn lift_genus1(s: &Genus1State, phi: f64) -> Potential {
    let e1 = C64::from_polar(1.0, phi);
    let e2 = e1 * e1;
    Potential {
        alpha: -s.alpha_hat * e1,
        beta: s.beta_hat * e2 + e2.conj() / s.beta_hat,
        gamma: s.beta_hat,
    }
}

/// Potential at z = x + iy obtained by flowing the genus-one state by
/// ŷ = cos φ x − sin φ y and lifting.
pub fn lift_genus1_potential(
    s: &Genus1State,
    phi: f64,
    x: f64,
    y: f64,
    tol: f64,
) -> Result<Potential> {
    let yh = phi.cos() * x - phi.sin() * y;
    Ok(lift_genus1(&genus1_flow(s, yh, tol)?, phi))
}
