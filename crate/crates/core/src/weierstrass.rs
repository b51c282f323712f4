//! Weierstrass ℘, ℘′ and ζ for the one-parameter family of real
//! rectangular lattices attached to r ∈ (0, 1].
//!
//! ```text
//! e₁ = (2r⁻¹ − r)/3,   e₂ = (2r − r⁻¹)/3,   e₃ = −(r + r⁻¹)/3
//! g₂ = 4/3 (r + r⁻¹)² − 4,   g₃ = 8/27 (r + r⁻¹)³ − 4/3 (r + r⁻¹)
//! ω  = π / (2 AGM(√(e₁−e₃), √(e₁−e₂))),   ω′ = iπ / (2 AGM(√(e₁−e₃), √(e₂−e₃)))
//! ```
//!
//! Evaluation uses the Fourier expansion along whichever half-period P has
//! the smaller nome q (P = ω′ with q = e^{−πω/|ω′|}, or P = ω with
//! q = e^{−π|ω′|/ω}); with k = π/(2P), u = kz, cₙ = q²ⁿ/(1 − q²ⁿ):
//!
//! ```text
//! ℘(z)  = −η_P/P + k² [ csc² u − 8 Σ n cₙ cos 2nu ]
//! ℘′(z) = k³ [ −2 csc² u cot u + 16 Σ n² cₙ sin 2nu ]
//! ζ(z)  = η_P z/P + k [ cot u + 4 Σ cₙ sin 2nu ]
//! η_P   = π²/(12P) (1 − 24 Σ n cₙ)
//! ```
//!
//! At r = 1 the real period is infinite, q = 0 and the sums vanish, giving
//! ℘ = 1/3 + 1/sinh² z and ζ = −z/3 + coth z.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);
const POLE_DIST: f64 = 1e-8;

pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let (an, bn) = ((a + b) / 2.0, (a * b).sqrt());
        a = an;
        b = bn;
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
    }
    (a + b) / 2.0
}

#[derive(Debug, Clone)]
pub struct EllipticKernel {
    pub r: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub g2: f64,
    pub g3: f64,
    /// Real half-period; infinite at r = 1.
    pub omega: f64,
    /// Imaginary half-period.
    pub omega_p: C64,
    /// ζ(ω); absent at r = 1.
    pub eta: Option<C64>,
    /// ζ(ω′).
    pub eta_p: C64,
    period: C64,
    eta_period: C64,
    coef: Vec<f64>,
}

impl EllipticKernel {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Domain(format!("r must lie in (0, 1], got {r}")));
        }
        let s = r + 1.0 / r;
        let (e1, e2, e3) = ((2.0 / r - r) / 3.0, (2.0 * r - 1.0 / r) / 3.0, -s / 3.0);
        let g2 = 4.0 / 3.0 * s * s - 4.0;
        let g3 = 8.0 / 27.0 * s * s * s - 4.0 / 3.0 * s;
        let wp = PI / (2.0 * agm((e1 - e3).sqrt(), (e2 - e3).sqrt()));
        let omega_p = I * wp;
        let omega = if r == 1.0 {
            f64::INFINITY
        } else {
            PI / (2.0 * agm((e1 - e3).sqrt(), (e1 - e2).max(0.0).sqrt()))
        };

        let q_imag = if omega.is_finite() {
            (-PI * omega / wp).exp()
        } else {
            0.0
        };
        let q_real = if omega.is_finite() {
            (-PI * wp / omega).exp()
        } else {
            1.0
        };
        let imaginary = q_imag <= q_real;
        let (period, q) = if imaginary {
            (omega_p, q_imag)
        } else {
            (C64::from(omega), q_real)
        };
        let mut coef = Vec::new();
        if q > 0.0 {
            let q2 = q * q;
            let mut qn = q2;
            // terms at the cell boundary decay only like qⁿ
            while qn > 1e-36 {
                coef.push(qn / (1.0 - qn));
                qn *= q2;
            }
        }
        let sum: f64 = coef
            .iter()
            .enumerate()
            .map(|(k, c)| (k + 1) as f64 * c)
            .sum();
        let eta_period = PI * PI / (12.0 * period) * (1.0 - 24.0 * sum);
        let mut k = Self {
            r,
            e1,
            e2,
            e3,
            g2,
            g3,
            omega,
            omega_p,
            eta: None,
            eta_p: C64::new(0.0, 0.0),
            period,
            eta_period,
            coef,
        };
        if imaginary {
            k.eta_p = eta_period;
            if omega.is_finite() {
                k.eta = Some(k.series_zeta(C64::from(omega)));
            }
        } else {
            k.eta = Some(eta_period);
            k.eta_p = k.series_zeta(omega_p);
        }
        Ok(k)
    }

    fn series_parts(&self, z: C64) -> (C64, C64, C64) {
        let k = PI / (2.0 * self.period);
        let u = k * z;
        let (s, c) = (u.sin(), u.cos());
        let mut sp = C64::new(0.0, 0.0);
        let mut sd = C64::new(0.0, 0.0);
        let mut sz = C64::new(0.0, 0.0);
        for (j, cn) in self.coef.iter().enumerate() {
            let n = (j + 1) as f64;
            let a = 2.0 * n * u;
            let (sa, ca) = (a.sin(), a.cos());
            sp += n * cn * ca;
            sd += n * n * cn * sa;
            sz += cn * sa;
        }
        let p = -self.eta_period / self.period + k * k * (1.0 / (s * s) - 8.0 * sp);
        let dp = k * k * k * (-2.0 * c / (s * s * s) + 16.0 * sd);
        let zz = self.eta_period * z / self.period + k * (c / s + 4.0 * sz);
        (p, dp, zz)
    }

    fn series_zeta(&self, z: C64) -> C64 {
        self.series_parts(z).2
    }

    /// Reduce z into the period cell centred at 0; returns the reduced
    /// point and the lattice shift counts (m, n) with z = z₀ + 2mω + 2nω′.
    fn reduce(&self, z: C64) -> (C64, f64, f64) {
        let wp = self.omega_p.im;
        let n = (z.im / (2.0 * wp)).round();
        let mut z0 = z - 2.0 * n * self.omega_p;
        let mut m = 0.0;
        if self.omega.is_finite() {
            m = (z0.re / (2.0 * self.omega)).round();
            z0 -= 2.0 * m * self.omega;
        }
        (z0, m, n)
    }

    fn checked(&self, z: C64) -> Result<(C64, f64, f64)> {
        let (z0, m, n) = self.reduce(z);
        if z0.norm() < POLE_DIST {
            return Err(Error::Pole { dist: z0.norm() });
        }
        Ok((z0, m, n))
    }

    pub fn wp(&self, z: C64) -> Result<C64> {
        Ok(self.series_parts(self.checked(z)?.0).0)
    }

    pub fn wp_prime(&self, z: C64) -> Result<C64> {
        Ok(self.series_parts(self.checked(z)?.0).1)
    }

    pub fn zeta(&self, z: C64) -> Result<C64> {
        let (z0, m, n) = self.checked(z)?;
        let mut v = self.series_parts(z0).2 + 2.0 * n * self.eta_p;
        if m != 0.0 {
            v += 2.0 * m * self.eta.unwrap_or_default();
        }
        Ok(v)
    }

    /// (℘, ℘′, ζ) in one pass.
    pub fn eval_all(&self, z: C64) -> Result<(C64, C64, C64)> {
        let (z0, m, n) = self.checked(z)?;
        let (p, dp, mut zz) = self.series_parts(z0);
        zz += 2.0 * n * self.eta_p;
        if m != 0.0 {
            zz += 2.0 * m * self.eta.unwrap_or_default();
        }
        Ok((p, dp, zz))
    }

    /// λ̂(z) = e₃ − ℘(z).
    pub fn lambda_hat(&self, z: C64) -> Result<C64> {
        Ok(self.e3 - self.wp(z)?)
    }

    /// ν̂(z) = ℘′(z)/2.
    pub fn nu_hat(&self, z: C64) -> Result<C64> {
        Ok(self.wp_prime(z)? / 2.0)
    }

    /// ηω′ − η′ω − πi/2; zero up to rounding for r < 1.
    pub fn legendre_defect(&self) -> Option<f64> {
        self.eta
            .map(|eta| (eta * self.omega_p - self.eta_p * self.omega - I * PI / 2.0).norm())
    }

    /// ∂ω′/∂r = (2η′ − ω′e₃) / (2(1 − r²)).
    pub fn domega_p_dr(&self) -> Result<C64> {
        if self.r >= 1.0 {
            return Err(Error::Domain(
                "the derivative of the half-period is singular at r = 1".into(),
            ));
        }
        Ok((2.0 * self.eta_p - self.omega_p * self.e3) / (2.0 * (1.0 - self.r * self.r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_one_closed_forms() {
        let k = EllipticKernel::new(1.0).unwrap();
        let z = C64::new(0.7, 0.3);
        let s = z.sinh();
        assert!((k.wp(z).unwrap() - (1.0 / 3.0 + 1.0 / (s * s))).norm() < 1e-14);
        assert!((k.zeta(z).unwrap() - (-z / 3.0 + z.cosh() / s)).norm() < 1e-14);
        assert!((k.eta_p - C64::new(0.0, -PI / 6.0)).norm() < 1e-15);
        assert!((k.omega_p - C64::new(0.0, PI / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn both_series_agree_near_crossover() {
        // the square lattice sits at r = 1/√2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for r in [0.69, s - 1e-4, s + 1e-4, 0.72] {
            let k = EllipticKernel::new(r).unwrap();
            let z = C64::new(0.31, 0.17);
            let p = k.wp(z).unwrap();
            let dp = k.wp_prime(z).unwrap();
            assert!(
                (dp * dp - (4.0 * p * p * p - k.g2 * p - k.g3)).norm()
                    < 1e-10 * dp.norm_sqr().max(1.0)
            );
            assert!((k.wp(C64::from(k.omega)).unwrap() - k.e1).norm() < 1e-12);
            assert!((k.wp(k.omega_p).unwrap() - k.e3).norm() < 1e-12);
            assert!(k.legendre_defect().unwrap() < 1e-12);
        }
    }

    #[test]
    fn pole_is_reported() {
        let k = EllipticKernel::new(0.5).unwrap();
        let w = 2.0 * k.omega + 2.0 * k.omega_p;
        assert!(matches!(k.wp(w), Err(Error::Pole { .. })));
    }
}
