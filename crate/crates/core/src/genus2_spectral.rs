//! Period lattices of genus-two spectral curves.
//!
//! ```text
//! Σ:  ν² = −λ a(λ),   roots α₁, α₂ (|αᵢ| < 1) and 1/ᾱ₁, 1/ᾱ₂
//!
//! d ln μ_ω = b_ω(λ) / (2ν) · dλ/λ
//! b_ω(λ) = ω − ω̄λ³ + β₁(λ − λ²) + iβ₂(λ + λ²)
//!
//! ∮_{Aᵢ} d ln μ_ω = 0          fixes β₁, β₂ ∈ ℝ
//! ∮_{Bᵢ} d ln μ_ω ∈ 2πi ℤ      cuts out the lattice Γ̃
//! ```
//!
//! Contours live in the logarithmic plane `s = ln λ`, where they are
//! axis-parallel polygons. Each edge is split into Gauss–Legendre panels,
//! refined until every panel is short compared with its distance to the
//! nearest branch point, and ν is carried along by continuity.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::potentials::{SpectralQuartic, StratumClass};

const GL_ORDER: usize = 16;
const COLLISION_DIST: f64 = 1e-6;
const MIN_PANEL: f64 = 1e-13;
const MAX_PANEL: f64 = 0.5;
const A_RESIDUAL_TOL: f64 = 1e-9;
const REAL_TOL: f64 = 1e-9;
const SINGULAR_DET: f64 = 1e-12;

fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static T: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    T.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = [(0.0, 0.0); GL_ORDER];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out[n - 1 - i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

/// The curve ν² = −λa(λ) of a quartic with four simple roots off the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCurve {
    /// `[α₁, α₂, 1/ᾱ₁, 1/ᾱ₂]` with `|α₁| ≤ |α₂| < 1`.
    pub roots: [C64; 4],
    /// Monic coefficients of a, ascending.
    pub coeffs: [C64; 5],
}

impl HyperCurve {
    pub fn from_quartic(sq: &SpectralQuartic) -> Result<Self> {
        if sq.class != StratumClass::M21 {
            return Err(Error::Class {
                expected: "M2_1".into(),
                found: sq.class.label().into(),
            });
        }
        let r = sq.all_roots();
        Self::from_roots(&[r[0], r[1], r[2], r[3]])
    }

    /// Builds the curve straight from its roots, skipping classification.
    /// Nearly coalescing roots would be merged by a tolerance-based
    /// classifier, so limits are probed this way.
    pub fn from_roots(r: &[C64; 4]) -> Result<Self> {
        let mut inside: Vec<C64> = r.iter().copied().filter(|z| z.norm() < 1.0).collect();
        if inside.len() != 2
            || r.iter()
                .any(|z| (z.norm() - 1.0).abs() < 1e-12 || z.norm() == 0.0)
        {
            return Err(Error::Domain(
                "need two roots inside and two outside the unit circle".into(),
            ));
        }
        inside.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        for &a in &inside {
            let partner = 1.0 / a.conj();
            let d = r
                .iter()
                .map(|z| (z - partner).norm())
                .fold(f64::INFINITY, f64::min);
            if d > 1e-8 * partner.norm() {
                return Err(Error::Domain(format!("root {a} has no partner 1/conj")));
            }
        }
        if (inside[0] - inside[1]).norm() < 1e-14 {
            return Err(Error::Domain("roots are not simple".into()));
        }
        // on the circle λ⁻²a(λ) = |λ − α₁|²|λ − α₂|² / (ᾱ₁ᾱ₂)
        let p = inside[0] * inside[1];
        if p.re <= 0.0 || p.im.abs() > 1e-10 * p.norm() {
            return Err(Error::Membership { min: -p.norm() });
        }
        let roots = [
            inside[0],
            inside[1],
            1.0 / inside[0].conj(),
            1.0 / inside[1].conj(),
        ];
        let mut coeffs = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ];
        // expand ∏(λ − rₖ), then flip to ascending order
        let mut desc = vec![C64::new(1.0, 0.0)];
        for z in roots {
            let mut next = vec![C64::new(0.0, 0.0); desc.len() + 1];
            for (k, c) in desc.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c * z;
            }
            desc = next;
        }
        for k in 0..5 {
            coeffs[k] = desc[4 - k];
        }
        Ok(Self { roots, coeffs })
    }

    /// a(λ) in product form, which keeps its relative accuracy next to
    /// nearly coalescing roots.
    pub fn a(&self, l: C64) -> C64 {
        self.roots.iter().map(|r| l - r).product()
    }

    pub fn nu_sq(&self, l: C64) -> C64 {
        -l * self.a(l)
    }

    /// Branch points in the s-plane, with images one sheet of the
    /// logarithm up and down.
    pub fn log_branch_points(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(12);
        for z in self.roots {
            let s = z.ln();
            for k in -1..=1 {
                out.push(s + C64::new(0.0, 2.0 * PI * k as f64));
            }
        }
        out
    }

    /// Log-coordinates (ln|α|, arg α) of α₁, α₂.
    fn inner_log(&self) -> [(f64, f64); 2] {
        [
            (self.roots[0].norm().ln(), self.roots[0].arg()),
            (self.roots[1].norm().ln(), self.roots[1].arg()),
        ]
    }
}

/// Closed polygon in the s-plane. The closing edge returns to the first
/// vertex shifted by whole turns, so the λ-image is always closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub vertices: Vec<C64>,
}

impl Contour {
    fn edges(&self) -> Vec<(C64, C64)> {
        let n = self.vertices.len();
        (0..n)
            .map(|k| {
                let a = self.vertices[k];
                let mut b = self.vertices[(k + 1) % n];
                if k == n - 1 {
                    b += C64::new(0.0, 2.0 * PI * ((a - b).im / (2.0 * PI)).round());
                }
                (a, b)
            })
            .collect()
    }

    pub fn lambda_vertices(&self) -> Vec<C64> {
        self.vertices.iter().map(|s| s.exp()).collect()
    }
}

fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let t = if d.norm_sqr() == 0.0 {
        0.0
    } else {
        (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0)
    };
    (p - (a + d * t)).norm()
}

/// Gauss–Legendre nodes and weights on one segment, in order.
fn panel_nodes(a: C64, b: C64, sing: &[C64], refine: f64, out: &mut Vec<(C64, C64)>) {
    let mut stack = vec![(a, b)];
    let gl = gauss_legendre();
    while let Some((p, q)) = stack.pop() {
        let len = (q - p).norm();
        let mid = (p + q) * 0.5;
        let dist = sing
            .iter()
            .map(|z| (z - mid).norm())
            .fold(f64::INFINITY, f64::min)
            - len / 2.0;
        if (len > refine * dist.max(0.0) || len > MAX_PANEL * refine) && len > MIN_PANEL {
            stack.push((mid, q));
            stack.push((p, mid));
        } else {
            for &(x, w) in gl.iter() {
                out.push((p + (q - p) * ((x + 1.0) / 2.0), (q - p) * (w / 2.0)));
            }
        }
    }
}

/// ν sampled along a contour.
#[derive(Debug, Clone)]
pub struct ContourSamples {
    pub s: Vec<C64>,
    pub weights: Vec<C64>,
    pub lambda: Vec<C64>,
    pub nu: Vec<C64>,
    /// Largest |ν' − ν| / |ν' + ν| between neighbouring nodes; the sign
    /// choice is safe while this stays well below 1.
    pub max_step: f64,
    pub max_residual: f64,
    /// ν came back to its starting value rather than its negative.
    pub same_sheet: bool,
}

fn track(c: &HyperCurve, s: Vec<C64>, weights: Vec<C64>, nu0: Option<C64>) -> ContourSamples {
    let lambda: Vec<C64> = s.iter().map(|z| z.exp()).collect();
    let mut nu: Vec<C64> = lambda.iter().map(|&l| c.nu_sq(l).sqrt()).collect();
    if let (Some(n0), Some(first)) = (nu0, nu.first_mut()) {
        if (*first - n0).norm() > (*first + n0).norm() {
            *first = -*first;
        }
    }
    let mut max_step: f64 = 0.0;
    for k in 1..nu.len() {
        if (nu[k] - nu[k - 1]).norm() > (nu[k] + nu[k - 1]).norm() {
            nu[k] = -nu[k];
        }
        max_step = max_step.max((nu[k] - nu[k - 1]).norm() / (nu[k] + nu[k - 1]).norm());
    }
    let max_residual = lambda
        .iter()
        .zip(&nu)
        .map(|(&l, &v)| (v * v + l * c.a(l)).norm() / (l * c.a(l)).norm().max(1.0))
        .fold(0.0, f64::max);
    let same_sheet = match (nu.first(), nu.last()) {
        (Some(a), Some(b)) => (a - b).norm() < (a + b).norm(),
        _ => true,
    };
    ContourSamples {
        s,
        weights,
        lambda,
        nu,
        max_step,
        max_residual,
        same_sheet,
    }
}

fn check_clearance(sing: &[C64], edges: &[(C64, C64)]) -> Result<()> {
    let dist = edges
        .iter()
        .flat_map(|&(a, b)| sing.iter().map(move |&z| segment_distance(z, a, b)))
        .fold(f64::INFINITY, f64::min);
    if dist < COLLISION_DIST {
        return Err(Error::BranchCollision { dist });
    }
    Ok(())
}

/// Samples ν along a closed contour, with panels refined until each is
/// shorter than `refine` times its clearance from the branch points.
pub fn nu_on_contour(c: &HyperCurve, contour: &Contour, refine: f64) -> Result<ContourSamples> {
    let sing = c.log_branch_points();
    let edges = contour.edges();
    check_clearance(&sing, &edges)?;
    let mut nodes = Vec::new();
    for (a, b) in edges {
        panel_nodes(a, b, &sing, refine, &mut nodes);
    }
    let (s, w): (Vec<C64>, Vec<C64>) = nodes.into_iter().unzip();
    let out = track(c, s, w, None);
    if out.max_step > 0.5 {
        return Err(Error::PathIntegration(format!(
            "branch tracking step {:.3e} too large",
            out.max_step
        )));
    }
    Ok(out)
}

/// Integrals of φₖ/(2ν) ds for the real basis
/// φ = (1 − λ³, i(1 + λ³), λ − λ², i(λ + λ²)), so that
/// `b_ω = Re ω·φ₀ + Im ω·φ₁ + β₁φ₂ + β₂φ₃`.
pub fn basis_integrals(c: &HyperCurve, contour: &Contour, refine: f64) -> Result<[C64; 4]> {
    let smp = nu_on_contour(c, contour, refine)?;
    if !smp.same_sheet {
        return Err(Error::PathIntegration(
            "contour does not close on the curve".into(),
        ));
    }
    Ok(integrate_basis(&smp))
}

fn basis_values(l: C64) -> [C64; 4] {
    let i = C64::new(0.0, 1.0);
    let l3 = l * l * l;
    [1.0 - l3, i * (1.0 + l3), l - l * l, i * (l + l * l)]
}

fn integrate_basis(smp: &ContourSamples) -> [C64; 4] {
    let mut acc = [C64::new(0.0, 0.0); 4];
    for k in 0..smp.s.len() {
        let f = smp.weights[k] / (2.0 * smp.nu[k]);
        for (a, p) in acc.iter_mut().zip(basis_values(smp.lambda[k])) {
            *a += p * f;
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleLayout {
    /// α₁ and α₂ at clearly different arguments.
    Separated,
    /// α₁, α₂ nearly on one ray; the cycles nest radially.
    Aligned,
}

/// Homology basis: Aᵢ surrounds αᵢ and 1/ᾱᵢ; B₁ surrounds 0 and α₁. In the
/// separated layout B₂ surrounds 0 and α₂, in the aligned one it
/// surrounds α₁ and α₂ (homologous up to B₁ and the A-cycles).
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSet {
    pub a1: Contour,
    pub a2: Contour,
    pub b1: Contour,
    pub b2: Contour,
    pub layout: CycleLayout,
}

fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Contour {
    Contour {
        vertices: vec![
            C64::new(x0, y0),
            C64::new(x1, y0),
            C64::new(x1, y1),
            C64::new(x0, y1),
        ],
    }
}

/// Loop from a small circle around 0 out past the root at (x, y).
fn keyhole(cc: f64, x: f64, y: f64, h: f64) -> Contour {
    let tp = 2.0 * PI;
    Contour {
        vertices: vec![
            C64::new(cc, y + h),
            C64::new(cc, y - h + tp),
            C64::new(x, y - h + tp),
            C64::new(x, y + h + tp),
        ],
    }
}

impl CycleSet {
    pub fn standard(c: &HyperCurve) -> Self {
        Self::with_margin(c, 1.0)
    }

    /// Same homology classes, with clearances scaled by `m` (m in (0, 1]).
    /// Different m give homologous realizations.
    pub fn with_margin(c: &HyperCurve, m: f64) -> Self {
        let [(x1, y1), (x2, y2)] = c.inner_log();
        let dth = ((y1 - y2 + PI).rem_euclid(2.0 * PI) - PI).abs();
        let gap = x2 - x1;
        if dth > 0.3 || dth >= gap {
            let h = (dth / 3.0).min(0.5) * m;
            let a = |x: f64, y: f64| {
                let xx = x.abs() + x.abs().min(0.5) * 0.5 * m + 0.05 * m;
                rect(-xx, xx, y - h, y + h)
            };
            let cc = x1.min(x2) - 0.5 * m;
            let b = |x: f64, y: f64| keyhole(cc, x + (x.abs() * 0.5).min(0.5) * m, y, h);
            Self {
                a1: a(x1, y1),
                a2: a(x2, y2),
                b1: b(x1, y1),
                b2: b(x2, y2),
                layout: CycleLayout::Separated,
            }
        } else {
            let (xo, yo, xi, yi) = (x1, y1, x2, y2);
            let yc = 0.5 * (yo + yi);
            let hh = dth / 2.0 + 0.3 * m;
            let d2 = gap / 2.0 * m;
            let a2 = rect(-xi.abs() - d2, xi.abs() + d2, yi - hh, yi + hh);
            let xx = xo.abs() + 0.5 * m;
            let (ya, yb) = (yc + hh, yc + 2.0 * PI - hh);
            let eps = 0.15 * m;
            let a1 = Contour {
                vertices: vec![
                    C64::new(-xx, yb),
                    C64::new(-xx, yo - eps),
                    C64::new(-xo.abs() + d2, yo - eps),
                    C64::new(-xo.abs() + d2, ya),
                    C64::new(xo.abs() - d2, ya),
                    C64::new(xo.abs() - d2, yo - eps),
                    C64::new(xx, yo - eps),
                    C64::new(xx, yb),
                ],
            };
            let b1 = keyhole(xo - 0.5 * m, xo + d2, yo, hh);
            let xr = xi + (gap / 2.0).min(xi.abs() / 2.0) * m;
            let b2 = rect(xo - 0.3 * m, xr, yc - hh, yc + hh);
            Self {
                a1,
                a2,
                b1,
                b2,
                layout: CycleLayout::Aligned,
            }
        }
    }

    pub fn all(&self) -> [&Contour; 4] {
        [&self.a1, &self.a2, &self.b1, &self.b2]
    }
}

/// Basis integrals over the four cycles, rows ordered A₁, A₂, B₁, B₂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleIntegrals {
    pub rows: [[C64; 4]; 4],
    pub nodes: usize,
}

impl CycleIntegrals {
    pub fn compute(c: &HyperCurve, cycles: &CycleSet, refine: f64) -> Result<Self> {
        let mut rows = [[C64::new(0.0, 0.0); 4]; 4];
        let mut nodes = 0;
        for (row, contour) in rows.iter_mut().zip(cycles.all()) {
            let smp = nu_on_contour(c, contour, refine)?;
            if !smp.same_sheet {
                return Err(Error::PathIntegration(
                    "cycle does not close on the curve".into(),
                ));
            }
            nodes += smp.s.len();
            *row = integrate_basis(&smp);
        }
        Ok(Self { rows, nodes })
    }

    /// Largest |Im| / scale over the A-rows.
    pub fn a_imag(&self) -> f64 {
        let scale = self.rows[..2]
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(1e-300, f64::max);
        self.rows[..2]
            .iter()
            .flatten()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
            / scale
    }

    /// max|Iₖ| · max|cₖ|, the scale against which cancellation in a row
    /// is judged.
    fn magnitude(&self, row: usize, coef: &[f64; 4]) -> f64 {
        let i = self.rows[row].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let c = coef.iter().map(|x| x.abs()).fold(0.0, f64::max);
        (i * c).max(1e-300)
    }

    fn combine(&self, row: usize, coef: &[f64; 4]) -> C64 {
        self.rows[row].iter().zip(coef).map(|(z, c)| z * c).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BOmega {
    pub omega: C64,
    pub beta1: f64,
    pub beta2: f64,
    /// max over A-cycles of |∮ b_ω/(2ν) ds|, relative to the size of the
    /// basis integrals and of the coefficients.
    pub a_residual: f64,
    pub condition: f64,
}

impl BOmega {
    /// Ascending coefficients of b_ω.
    pub fn coeffs(&self) -> [C64; 4] {
        [
            self.omega,
            C64::new(self.beta1, self.beta2),
            C64::new(-self.beta1, self.beta2),
            -self.omega.conj(),
        ]
    }

    pub fn eval(&self, l: C64) -> C64 {
        self.coeffs()
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, c| acc * l + c)
    }

    fn real_coef(&self) -> [f64; 4] {
        [self.omega.re, self.omega.im, self.beta1, self.beta2]
    }
}

/// β₁, β₂ making both A-periods of b_ω vanish.
pub fn solve_b_omega(ints: &CycleIntegrals, omega: C64) -> Result<BOmega> {
    let im = ints.a_imag();
    if im > REAL_TOL {
        return Err(Error::PathIntegration(format!(
            "A-integrals are not real (relative imaginary part {im:.3e})"
        )));
    }
    let r = &ints.rows;
    let m = Matrix2::new(r[0][2].re, r[0][3].re, r[1][2].re, r[1][3].re);
    let det = m.determinant();
    if det.abs() < SINGULAR_DET {
        return Err(Error::SingularSystem { det });
    }
    let rhs = -Vector2::new(
        omega.re * r[0][0].re + omega.im * r[0][1].re,
        omega.re * r[1][0].re + omega.im * r[1][1].re,
    );
    let sol = m.lu().solve(&rhs).ok_or(Error::SingularSystem { det })?;
    let sv = m.singular_values();
    let condition = sv.max() / sv.min();
    let mut b = BOmega {
        omega,
        beta1: sol[0],
        beta2: sol[1],
        a_residual: 0.0,
        condition,
    };
    let coef = b.real_coef();
    b.a_residual = (0..2)
        .map(|row| ints.combine(row, &coef).norm() / ints.magnitude(row, &coef))
        .fold(0.0, f64::max);
    if b.a_residual > A_RESIDUAL_TOL {
        return Err(Error::FitResidual {
            residual: b.a_residual,
            limit: A_RESIDUAL_TOL,
        });
    }
    Ok(b)
}

/// B-periods of d ln μ_ω.
pub fn b_periods(ints: &CycleIntegrals, b: &BOmega) -> [C64; 2] {
    let coef = b.real_coef();
    [ints.combine(2, &coef), ints.combine(3, &coef)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BPeriodMap {
    /// Columns: B-periods divided by i for ω = 1 and ω = i.
    pub matrix: [[f64; 2]; 2],
    /// Largest |Re ∮_B| relative to the largest B-period.
    pub real_part: f64,
    pub b_omegas: [BOmega; 2],
}

impl BPeriodMap {
    pub fn apply(&self, omega: C64) -> [f64; 2] {
        let m = &self.matrix;
        [
            m[0][0] * omega.re + m[0][1] * omega.im,
            m[1][0] * omega.re + m[1][1] * omega.im,
        ]
    }
}

pub fn b_period_map(ints: &CycleIntegrals) -> Result<BPeriodMap> {
    let one = solve_b_omega(ints, C64::new(1.0, 0.0))?;
    let eye = solve_b_omega(ints, C64::new(0.0, 1.0))?;
    let p1 = b_periods(ints, &one);
    let pi = b_periods(ints, &eye);
    let scale = p1
        .iter()
        .chain(&pi)
        .map(|z| z.norm())
        .fold(1e-300, f64::max);
    let real_part = p1.iter().chain(&pi).map(|z| z.re.abs()).fold(0.0, f64::max) / scale;
    let matrix = [[p1[0].im, pi[0].im], [p1[1].im, pi[1].im]];
    let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    if det.abs() < SINGULAR_DET {
        return Err(Error::SingularSystem { det });
    }
    Ok(BPeriodMap {
        matrix,
        real_part,
        b_omegas: [one, eye],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodLatticeG2 {
    pub omega1: C64,
    pub omega2: C64,
    pub bperiod_matrix: [[f64; 2]; 2],
    /// Worst deviation of the generators' B-periods from 2πi·δ.
    pub bperiod_residual: f64,
    pub a_residual: f64,
    pub real_part: f64,
    /// Change of the generators when the panel size is halved, relative
    /// to the larger generator.
    pub self_convergence: f64,
    pub layout: CycleLayout,
    pub nodes: usize,
}

impl PeriodLatticeG2 {
    pub fn generators(&self) -> (C64, C64) {
        (self.omega1, self.omega2)
    }

    /// Distance of ω from the lattice in generator coordinates.
    pub fn membership_defect(&self, omega: C64) -> f64 {
        let (n1, n2) = self.coordinates(omega);
        (n1 - n1.round()).abs().max((n2 - n2.round()).abs())
    }

    pub fn coordinates(&self, omega: C64) -> (f64, f64) {
        let m = Matrix2::new(
            self.omega1.re,
            self.omega2.re,
            self.omega1.im,
            self.omega2.im,
        );
        let v = m
            .lu()
            .solve(&Vector2::new(omega.re, omega.im))
            .unwrap_or(Vector2::new(f64::NAN, f64::NAN));
        (v[0], v[1])
    }
}

fn lattice_from(c: &HyperCurve, cycles: &CycleSet, refine: f64) -> Result<PeriodLatticeG2> {
    let ints = CycleIntegrals::compute(c, cycles, refine)?;
    let map = b_period_map(&ints)?;
    let m = Matrix2::new(
        map.matrix[0][0],
        map.matrix[0][1],
        map.matrix[1][0],
        map.matrix[1][1],
    );
    let g = m.try_inverse().ok_or(Error::SingularSystem {
        det: m.determinant(),
    })? * (2.0 * PI);
    let omega1 = C64::new(g[(0, 0)], g[(1, 0)]);
    let omega2 = C64::new(g[(0, 1)], g[(1, 1)]);
    if (omega1.conj() * omega2).im.abs() < 1e-12 * omega1.norm() * omega2.norm() {
        return Err(Error::DegenerateLattice);
    }
    let mut bperiod_residual: f64 = 0.0;
    let mut a_residual: f64 = 0.0;
    for (k, w) in [omega1, omega2].into_iter().enumerate() {
        let b = solve_b_omega(&ints, w)?;
        a_residual = a_residual.max(b.a_residual);
        let p = b_periods(&ints, &b);
        for (j, z) in p.iter().enumerate() {
            let want = if j == k { 2.0 * PI } else { 0.0 };
            bperiod_residual = bperiod_residual.max((z - C64::new(0.0, want)).norm());
        }
    }
    Ok(PeriodLatticeG2 {
        omega1,
        omega2,
        bperiod_matrix: map.matrix,
        bperiod_residual,
        a_residual,
        real_part: map.real_part,
        self_convergence: f64::NAN,
        layout: cycles.layout,
        nodes: ints.nodes,
    })
}

/// Γ̃ for the standard cycles, with a self-convergence estimate from a
/// second pass at half the panel size.
pub fn period_lattice(c: &HyperCurve) -> Result<PeriodLatticeG2> {
    period_lattice_with(c, &CycleSet::standard(c), 1.0)
}

pub fn period_lattice_with(
    c: &HyperCurve,
    cycles: &CycleSet,
    refine: f64,
) -> Result<PeriodLatticeG2> {
    let coarse = lattice_from(c, cycles, refine)?;
    let mut fine = lattice_from(c, cycles, refine / 2.0)?;
    let scale = fine.omega1.norm().max(fine.omega2.norm());
    fine.self_convergence = (fine.omega1 - coarse.omega1)
        .norm()
        .max((fine.omega2 - coarse.omega2).norm())
        / scale;
    Ok(fine)
}

/// ln μ_ω at each root of a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuAtRoots {
    pub roots: [C64; 4],
    pub log_mu: [C64; 4],
    pub signs: [i8; 4],
    /// Largest |ln μ − iπk|.
    pub defect: f64,
}

fn integrate_path(
    c: &HyperCurve,
    b: &BOmega,
    sing: &[C64],
    segments: &[(C64, C64)],
    nu0: Option<C64>,
    refine: f64,
) -> (C64, C64) {
    let mut nodes = Vec::new();
    for &(a, bb) in segments {
        panel_nodes(a, bb, sing, refine, &mut nodes);
    }
    let (s, w): (Vec<C64>, Vec<C64>) = nodes.into_iter().unzip();
    let smp = track(c, s, w, nu0);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..smp.s.len() {
        acc += b.eval(smp.lambda[k]) / (2.0 * smp.nu[k]) * smp.weights[k];
    }
    (acc, *smp.nu.last().unwrap_or(&C64::new(0.0, 0.0)))
}

/// Integrates d ln μ_ω from the σ-partner of a point near λ = 0, once
/// around the origin (ln μ is odd under σ, so half of this is ln μ at the
/// end point), then out to each root. The last leg uses s = sₖ + Δ(1 − u)²
/// to absorb the square-root endpoint singularity.
pub fn mu_at_roots(c: &HyperCurve, lattice: &PeriodLatticeG2, omega: C64) -> Result<MuAtRoots> {
    let dm = lattice.membership_defect(omega);
    if !(dm <= 1e-6) {
        return Err(Error::Domain(format!(
            "omega is off the lattice by {dm:.3e} in generator coordinates"
        )));
    }
    let ints = CycleIntegrals::compute(c, &CycleSet::standard(c), 0.5)?;
    let b = solve_b_omega(&ints, omega)?;
    let sing = c.log_branch_points();
    let rho0 = c.roots[0].norm().ln() - 0.7;
    let mut log_mu = [C64::new(0.0, 0.0); 4];
    let mut signs = [0i8; 4];
    let mut defect: f64 = 0.0;
    for (k, &root) in c.roots.iter().enumerate() {
        let sk = root.ln();
        let others: Vec<C64> = sing
            .iter()
            .copied()
            .filter(|z| (z - sk).norm() > 1e-12)
            .collect();
        let h = path_offset(sk, rho0, &others)?;
        let start = C64::new(rho0, sk.im + h);
        let turn = C64::new(0.0, 2.0 * PI);
        let (circ, nu_end) = integrate_path(c, &b, &sing, &[(start, start + turn)], None, 0.5);
        let corner = C64::new(sk.re, sk.im + h) + turn;
        let (leg, nu_mid) =
            integrate_path(c, &b, &sing, &[(start + turn, corner)], Some(nu_end), 0.5);
        // last leg: s = sₖ + Δ(1 − u)², u ∈ [0, 1]
        let delta = corner - (sk + turn);
        let mut unodes = Vec::new();
        let clear = others
            .iter()
            .map(|z| segment_distance(*z, corner, sk + turn))
            .fold(f64::INFINITY, f64::min);
        let panels = ((delta.norm() / clear * 8.0).ceil() as usize).clamp(4, 256);
        for p in 0..panels {
            let (u0, u1) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
            panel_nodes(C64::new(u0, 0.0), C64::new(u1, 0.0), &[], 1.0, &mut unodes);
        }
        let s: Vec<C64> = unodes
            .iter()
            .map(|(u, _)| sk + turn + delta * (1.0 - u.re).powi(2))
            .collect();
        let w: Vec<C64> = unodes
            .iter()
            .map(|(u, wu)| -delta * 2.0 * (1.0 - u.re) * wu)
            .collect();
        let smp = track(c, s, w, Some(nu_mid));
        let mut tail = C64::new(0.0, 0.0);
        for j in 0..smp.s.len() {
            tail += b.eval(smp.lambda[j]) / (2.0 * smp.nu[j]) * smp.weights[j];
        }
        let l = 0.5 * circ + leg + tail;
        let kk = (l.im / PI).round();
        let d = (l - C64::new(0.0, PI * kk)).norm();
        defect = defect.max(d);
        if d > 1e-4 {
            return Err(Error::PathIntegration(format!(
                "ln mu at root {k} is {l}, not in i*pi*Z"
            )));
        }
        log_mu[k] = l;
        signs[k] = if (kk as i64).rem_euclid(2) == 0 {
            1
        } else {
            -1
        };
    }
    Ok(MuAtRoots {
        roots: c.roots,
        log_mu,
        signs,
        defect,
    })
}

/// Angular offset for the path to a root: the path runs along the circle
/// of radius e^ρ₀, out along arg = arg(root) + h, then back to the root.
fn path_offset(sk: C64, rho0: f64, others: &[C64]) -> Result<f64> {
    let mut best = (0.0, -1.0);
    for h in [0.3, -0.3, 0.15, -0.15, 0.6, -0.6, 0.05, -0.05, 1.0, -1.0] {
        let a = C64::new(rho0, sk.im + h);
        let b = C64::new(sk.re, sk.im + h);
        let clear = others
            .iter()
            .map(|&z| segment_distance(z, a, b).min(segment_distance(z, b, sk)))
            .fold(f64::INFINITY, f64::min);
        let score = clear.min(h.abs());
        if score > best.1 {
            best = (h, score);
        }
    }
    if best.1 < COLLISION_DIST {
        return Err(Error::PathIntegration("no clear path to the root".into()));
    }
    Ok(best.0)
}
