//! Potentials in the three-parameter space of polynomial Killing fields,
//! their spectral quartic and the five strata of quartics.
//!
//! ```text
//!          ( αλ − ᾱλ²              −γ⁻¹ + βλ − γλ² )
//! ζ(λ) =   (                                        )
//!          ( γλ − β̄λ² + γ⁻¹λ³       −αλ + ᾱλ²       )
//!
//! det ζ(λ) = λ a(λ),   a(λ) = λ⁴ + a₁λ³ + a₂λ² + ā₁λ + 1
//! a₁ = −ᾱ² − βγ⁻¹ − β̄γ,   a₂ = 2|α|² + |β|² + γ² + γ⁻²
//! ```
//!
//! A quartic belongs to the admissible set when `λ⁻² a(λ) ≥ 0` on the unit
//! circle. Its roots come in pairs `{λ, 1/λ̄}` and the strata are
//!
//! ```text
//! M21  four simple roots off the circle
//! M22  one double root on the circle, one simple pair
//! M23  two distinct double roots on the circle
//! M24  one quadruple root on the circle
//! M25  two double roots off the circle
//! ```

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-10;
const MEMBERSHIP_TOL: f64 = 1e-10;
const ON_CIRCLE_TOL: f64 = 1e-6;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: f64,
}

impl Potential {
    pub fn new(alpha: C64, beta: C64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !(alpha.re.is_finite()
            && alpha.im.is_finite()
            && beta.re.is_finite()
            && beta.im.is_finite())
        {
            return Err(Error::Domain("alpha and beta must be finite".into()));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn zeta(&self, l: C64) -> Matrix2<C64> {
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        let l2 = l * l;
        let aa = a * l - a.conj() * l2;
        Matrix2::new(
            aa,
            -1.0 / g + b * l - g * l2,
            g * l - b.conj() * l2 + l2 * l / g,
            -aa,
        )
    }

    pub fn quartic(&self) -> Quartic {
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        Quartic {
            a1: -a.conj() * a.conj() - b / g - b.conj() * g,
            a2: 2.0 * a.norm_sqr() + b.norm_sqr() + g * g + 1.0 / (g * g),
        }
    }

    /// Resultant of the off-diagonal polynomials B(λ) and C(λ) via the
    /// 5×5 Sylvester matrix.
    pub fn resultant_bc(&self) -> C64 {
        let (b, g) = (self.beta, self.gamma);
        // descending coefficients
        let pb = [c(-g), b, c(-1.0 / g)];
        let pc = [c(1.0 / g), -b.conj(), c(g), c(0.0)];
        let mut s = DMatrix::<C64>::zeros(5, 5);
        for row in 0..3 {
            for (k, v) in pb.iter().enumerate() {
                s[(row, row + k)] = *v;
            }
        }
        for row in 0..2 {
            for (k, v) in pc.iter().enumerate() {
                s[(3 + row, row + k)] = *v;
            }
        }
        s.determinant()
    }

    pub fn to_vec(&self) -> [f64; 5] {
        [
            self.alpha.re,
            self.alpha.im,
            self.beta.re,
            self.beta.im,
            self.gamma,
        ]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            alpha: C64::new(y[0], y[1]),
            beta: C64::new(y[2], y[3]),
            gamma: y[4],
        }
    }

    pub fn distance(&self, o: &Potential) -> f64 {
        (self.alpha - o.alpha).norm() + (self.beta - o.beta).norm() + (self.gamma - o.gamma).abs()
    }
}

/// Coefficients of a(λ) = λ⁴ + a₁λ³ + a₂λ² + ā₁λ + 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartic {
    pub a1: C64,
    pub a2: f64,
}

impl Quartic {
    pub fn new(a1: C64, a2: f64) -> Self {
        Self { a1, a2 }
    }

    /// Monic quartic with prescribed roots; the roots must be closed under
    /// λ ↦ 1/λ̄ so that the coefficients have the required symmetry.
    pub fn from_roots(r: &[C64; 4]) -> Result<Self> {
        let mut p = [c(1.0), c(0.0), c(0.0), c(0.0), c(0.0)];
        for (k, root) in r.iter().enumerate() {
            for j in (1..=k + 1).rev() {
                p[j] -= *root * p[j - 1];
            }
        }
        let scale = 1.0 + p.iter().map(|z| z.norm()).sum::<f64>();
        let defect = (p[4] - 1.0).norm() + (p[3] - p[1].conj()).norm() + p[2].im.abs();
        if defect > 1e-10 * scale {
            return Err(Error::Domain(format!(
                "roots are not closed under 1/conj (defect {defect:.2e})"
            )));
        }
        Ok(Self {
            a1: p[1],
            a2: p[2].re,
        })
    }

    /// Coefficients in ascending order of λ.
    pub fn coeffs(&self) -> [C64; 5] {
        [c(1.0), self.a1.conj(), c(self.a2), self.a1, c(1.0)]
    }

    pub fn eval(&self, l: C64) -> C64 {
        self.deriv(0, l)
    }

    /// k-th derivative at λ.
    pub fn deriv(&self, k: usize, l: C64) -> C64 {
        let cf = self.coeffs();
        let mut acc = c(0.0);
        for j in (k..5).rev() {
            acc = acc * l + cf[j] * falling(j, k);
        }
        acc
    }

    /// Size of the k-th Taylor coefficient under relative coefficient noise.
    fn deriv_scale(&self, k: usize, l: C64) -> f64 {
        let cf = self.coeffs();
        let r = l.norm();
        (k..5)
            .map(|j| cf[j].norm() * binom(j, k) * r.powi((j - k) as i32))
            .sum()
    }

    /// λ⁻² a(λ) at λ = e^{iθ}; real on the circle.
    pub fn circle_value(&self, theta: f64) -> f64 {
        let e = C64::from_polar(1.0, theta);
        2.0 * (2.0 * theta).cos() + 2.0 * (self.a1 * e).re + self.a2
    }

    /// Minimum of λ⁻² a(λ) over the unit circle: 256-point scan followed by
    /// golden-section refinement around the smallest samples.
    pub fn circle_min(&self) -> (f64, f64) {
        let n = 256;
        let h = std::f64::consts::TAU / n as f64;
        let vals: Vec<f64> = (0..n).map(|k| self.circle_value(k as f64 * h)).collect();
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..n {
            let (l, r) = (vals[(k + n - 1) % n], vals[(k + 1) % n]);
            if vals[k] <= l && vals[k] <= r {
                let (th, v) = golden_min(
                    |t| self.circle_value(t),
                    (k as f64 - 1.0) * h,
                    (k as f64 + 1.0) * h,
                );
                if v < best.0 {
                    best = (v, th);
                }
            }
        }
        best
    }

    pub fn check_membership(&self) -> Result<()> {
        let (m, _) = self.circle_min();
        let scale = 4.0 + 2.0 * self.a1.norm() + self.a2.abs();
        if m < -MEMBERSHIP_TOL * scale {
            return Err(Error::Membership { min: m });
        }
        Ok(())
    }

    /// Companion-matrix eigenvalues, each followed by Newton polishing.
    pub fn raw_roots(&self) -> [C64; 4] {
        let cf = self.coeffs();
        let z = c(0.0);
        let o = c(1.0);
        let m = Matrix4::new(
            -cf[3], -cf[2], -cf[1], -cf[0], o, z, z, z, z, o, z, z, z, z, o, z,
        );
        let ev = m
            .schur()
            .eigenvalues()
            .expect("complex Schur form is triangular");
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        for r in out.iter_mut() {
            *r = newton_polish(|x| self.deriv(0, x), |x| self.deriv(1, x), *r);
        }
        out
    }
}

fn falling(j: usize, k: usize) -> f64 {
    (0..k).map(|i| (j - i) as f64).product()
}

fn binom(j: usize, k: usize) -> f64 {
    falling(j, k) / falling(k, k)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn newton_polish<F: Fn(C64) -> C64, D: Fn(C64) -> C64>(f: F, df: D, mut x: C64) -> C64 {
    let mut fx = f(x).norm();
    for _ in 0..60 {
        let d = df(x);
        if d.norm() == 0.0 {
            break;
        }
        let y = x - f(x) / d;
        let fy = f(y).norm();
        if !(fy < fx) {
            break;
        }
        let step = (y - x).norm();
        x = y;
        fx = fy;
        if step <= 1e-16 * x.norm().max(1.0) {
            break;
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StratumClass {
    #[serde(rename = "M2_1")]
    M21,
    #[serde(rename = "M2_2")]
    M22,
    #[serde(rename = "M2_3")]
    M23,
    #[serde(rename = "M2_4")]
    M24,
    #[serde(rename = "M2_5")]
    M25,
}

impl StratumClass {
    pub fn label(&self) -> &'static str {
        match self {
            StratumClass::M21 => "M2_1",
            StratumClass::M22 => "M2_2",
            StratumClass::M23 => "M2_3",
            StratumClass::M24 => "M2_4",
            StratumClass::M25 => "M2_5",
        }
    }

    /// Genus of the desingularized spectral curve (none for M24, M25).
    pub fn genus(&self) -> Option<usize> {
        match self {
            StratumClass::M21 => Some(2),
            StratumClass::M22 => Some(1),
            StratumClass::M23 => Some(0),
            _ => None,
        }
    }
}

impl std::fmt::Display for StratumClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: C64,
    pub mult: usize,
}

/// A classified quartic with its paired roots.
///
/// Root order: M21 `[α₁, 1/ᾱ₁, α₂, 1/ᾱ₂]` with `|α₁| ≤ |α₂| < 1`;
/// M22 `[double, α, 1/ᾱ]`; M23 two doubles by argument; M24 one root;
/// M25 `[inner double, outer double]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralQuartic {
    pub a1: C64,
    pub a2: f64,
    pub class: StratumClass,
    pub roots: Vec<Root>,
}

impl SpectralQuartic {
    pub fn quartic(&self) -> Quartic {
        Quartic {
            a1: self.a1,
            a2: self.a2,
        }
    }

    /// Roots listed with multiplicity.
    pub fn all_roots(&self) -> Vec<C64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.value, r.mult))
            .collect()
    }
}

/// Backward error of an m-fold root at `x`: the smallest relative
/// coefficient perturbation that makes `x` an exact m-fold root, estimated
/// term by term.
pub fn multiple_root_backward_error(q: &Quartic, x: C64, m: usize) -> f64 {
    (0..m)
        .map(|k| q.deriv(k, x).norm() / (falling(k, k) * q.deriv_scale(k, x)))
        .fold(0.0, f64::max)
}

struct Cluster {
    members: Vec<C64>,
    center: C64,
}

fn cluster_center(q: &Quartic, members: &[C64]) -> C64 {
    let m = members.len();
    let mean = members.iter().sum::<C64>() / m as f64;
    newton_polish(|x| q.deriv(m - 1, x), |x| q.deriv(m, x), mean)
}

/// Find roots with multiplicities and assign the stratum.
///
/// `tol` bounds the relative backward error accepted for merging nearby
/// roots into a multiple root; merges whose backward error falls within a
/// factor ten above `tol` are reported as ambiguous.
pub fn classify(q: &Quartic, tol: f64) -> Result<SpectralQuartic> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    q.check_membership()?;
    let mut cl: Vec<Cluster> = q
        .raw_roots()
        .iter()
        .map(|&r| Cluster {
            members: vec![r],
            center: r,
        })
        .collect();

    'merge: loop {
        let mut pairs = Vec::new();
        for i in 0..cl.len() {
            for j in i + 1..cl.len() {
                let d = (cl[i].center - cl[j].center).norm() / cl[i].center.norm().max(1.0);
                pairs.push((d, i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, i, j) in pairs {
            let mut members = cl[i].members.clone();
            members.extend_from_slice(&cl[j].members);
            let center = cluster_center(q, &members);
            // Newton on a derivative can run off to a critical point that
            // belongs to another cluster
            let own = members
                .iter()
                .map(|z| (z - center).norm())
                .fold(0.0, f64::max);
            let other = (0..cl.len())
                .filter(|&k| k != i && k != j)
                .flat_map(|k| cl[k].members.iter())
                .map(|z| (z - center).norm())
                .fold(f64::INFINITY, f64::min);
            if own >= other {
                continue;
            }
            let err = multiple_root_backward_error(q, center, members.len());
            if err <= tol {
                cl.remove(j);
                cl[i] = Cluster { members, center };
                continue 'merge;
            }
            if err <= 10.0 * tol {
                return Err(Error::AmbiguousRoot { tol, err });
            }
        }
        break;
    }

    let on = |z: C64| (z.norm() - 1.0).abs() <= ON_CIRCLE_TOL;
    let unit = |z: C64| z / z.norm();
    let partner = |z: C64| 1.0 / z.conj();
    let mut mults: Vec<usize> = cl.iter().map(|k| k.members.len()).collect();
    mults.sort_unstable();

    let not_admissible =
        |what: &str| Error::Domain(format!("root configuration is not admissible: {what}"));
    // pair an inside root with the nearest image of an outside root and
    // average so that the pairing holds exactly
    let pair_up = |inside: &[C64], outside: &[C64]| -> Vec<(C64, C64)> {
        let mut used = vec![false; outside.len()];
        let mut out = Vec::new();
        for &z in inside {
            let (k, _) = outside
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, w)| (k, (partner(*w) - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            used[k] = true;
            let avg = (z + partner(outside[k])) / 2.0;
            out.push((avg, partner(avg)));
        }
        out
    };
    let split = |sel: &[C64]| -> (Vec<C64>, Vec<C64>) {
        let inside: Vec<C64> = sel.iter().copied().filter(|z| z.norm() < 1.0).collect();
        let outside: Vec<C64> = sel.iter().copied().filter(|z| z.norm() >= 1.0).collect();
        (inside, outside)
    };

    let (class, roots) = match mults.as_slice() {
        [1, 1, 1, 1] => {
            let sel: Vec<C64> = cl.iter().map(|k| k.center).collect();
            if sel.iter().any(|z| on(*z)) {
                return Err(not_admissible("simple root on the unit circle"));
            }
            let (inside, outside) = split(&sel);
            if inside.len() != 2 {
                return Err(not_admissible("simple roots are not paired"));
            }
            let mut pr = pair_up(&inside, &outside);
            pr.sort_by(|a, b| {
                a.0.norm()
                    .total_cmp(&b.0.norm())
                    .then(a.0.arg().total_cmp(&b.0.arg()))
            });
            let roots = pr
                .iter()
                .flat_map(|(a, b)| [Root { value: *a, mult: 1 }, Root { value: *b, mult: 1 }])
                .collect();
            (StratumClass::M21, roots)
        }
        [1, 1, 2] => {
            let d = cl.iter().find(|k| k.members.len() == 2).unwrap().center;
            if !on(d) {
                return Err(not_admissible(
                    "double root off the circle next to simple roots",
                ));
            }
            let sel: Vec<C64> = cl
                .iter()
                .filter(|k| k.members.len() == 1)
                .map(|k| k.center)
                .collect();
            let (inside, outside) = split(&sel);
            if inside.len() != 1 || on(sel[0]) {
                return Err(not_admissible("simple roots are not paired"));
            }
            let pr = pair_up(&inside, &outside);
            (
                StratumClass::M22,
                vec![
                    Root {
                        value: unit(d),
                        mult: 2,
                    },
                    Root {
                        value: pr[0].0,
                        mult: 1,
                    },
                    Root {
                        value: pr[0].1,
                        mult: 1,
                    },
                ],
            )
        }
        [2, 2] => {
            let sel: Vec<C64> = cl.iter().map(|k| k.center).collect();
            if sel.iter().all(|z| on(*z)) {
                let mut v: Vec<C64> = sel.iter().map(|z| unit(*z)).collect();
                v.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
                (
                    StratumClass::M23,
                    v.iter().map(|z| Root { value: *z, mult: 2 }).collect(),
                )
            } else if sel.iter().all(|z| !on(*z)) {
                let (inside, outside) = split(&sel);
                if inside.len() != 1 {
                    return Err(not_admissible("double roots are not paired"));
                }
                let pr = pair_up(&inside, &outside);
                (
                    StratumClass::M25,
                    vec![
                        Root {
                            value: pr[0].0,
                            mult: 2,
                        },
                        Root {
                            value: pr[0].1,
                            mult: 2,
                        },
                    ],
                )
            } else {
                return Err(not_admissible("mixed double roots"));
            }
        }
        [4] => {
            let z = cl[0].center;
            if !on(z) {
                return Err(not_admissible("quadruple root off the circle"));
            }
            (
                StratumClass::M24,
                vec![Root {
                    value: unit(z),
                    mult: 4,
                }],
            )
        }
        _ => return Err(not_admissible("odd multiplicity pattern")),
    };
    Ok(SpectralQuartic {
        a1: q.a1,
        a2: q.a2,
        class,
        roots,
    })
}

/// The unique potential of an M23/M24 quartic fixed by both flows.
pub fn fixed_point_potential(sq: &SpectralQuartic) -> Result<Potential> {
    let l1 = match sq.class {
        StratumClass::M23 | StratumClass::M24 => sq.roots[0].value,
        other => {
            return Err(Error::Class {
                expected: "M2_3 or M2_4".into(),
                found: other.label().into(),
            })
        }
    };
    Potential::new(c(0.0), c(2.0 * l1.re), 1.0)
}

/// The four potentials of an M21 quartic with α = 0.
///
/// ```text
/// B(λ) = −γ(λ − b₁)(λ − b₂),   b₁b₂ = γ⁻²,   β = γ(b₁ + b₂)
/// ```
/// with one root of each pair {αᵢ, 1/ᾱᵢ} placed in B.
pub fn off_diagonal_points(sq: &SpectralQuartic) -> Result<Vec<Potential>> {
    if sq.class != StratumClass::M21 {
        return Err(Error::Class {
            expected: "M2_1".into(),
            found: sq.class.label().into(),
        });
    }
    let r: Vec<C64> = sq.roots.iter().map(|x| x.value).collect();
    let mut out = Vec::with_capacity(4);
    for b1 in [r[0], r[1]] {
        for b2 in [r[2], r[3]] {
            let p = b1 * b2;
            if p.re <= 0.0 || p.im.abs() > 1e-8 * p.norm() {
                return Err(Error::Domain(format!("root product {p} is not positive")));
            }
            let g = 1.0 / p.re.sqrt();
            out.push(Potential::new(c(0.0), g * (b1 + b2), g)?);
        }
    }
    Ok(out)
}

/// A point (λ, ν) on the spectral curve ν² + λ a(λ) = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub lambda: C64,
    pub nu: C64,
}

impl SpectralPoint {
    pub fn residual(&self, q: &Quartic) -> f64 {
        (self.nu * self.nu + self.lambda * q.eval(self.lambda)).norm()
    }

    pub fn sigma(&self) -> Self {
        Self {
            lambda: self.lambda,
            nu: -self.nu,
        }
    }

    pub fn rho(&self) -> Self {
        let lb = self.lambda.conj();
        Self {
            lambda: 1.0 / lb,
            nu: -self.nu.conj() / (lb * lb * lb),
        }
    }
}

/// Anti-hermitian defect of λ^(−3/2) ζ(λ) on the unit circle, written
/// without square roots as ‖ζ + λ³ ζ*‖.
pub fn reality_defect(p: &Potential, l: C64) -> f64 {
    let z = p.zeta(l);
    let zh = z.adjoint();
    (z + zh * (l * l * l)).norm()
}
