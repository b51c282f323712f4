//! Adaptive Dormand–Prince 5(4) integration of autonomous systems on flat
//! `f64` state vectors.
//!
//! ```text
//! y' = f(y),   err_n = max_i |y5 - y4|_i / (atol + rtol * max(|y_n|, |y_{n+1}|)_i)
//! h_new = h * clamp(0.9 * err^(-1/5), 0.2, 5)
//! ```
//!
//! A step is rejected when the error norm exceeds one or when the caller's
//! admissibility predicate fails (used to keep gamma positive).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
            min_step: 1e-14,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-2,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y' = f(y)` from parameter 0 to `t_end` (sign allowed).
///
/// `admissible` vetoes a trial state; `on_accept` may renormalize the state
/// after each accepted step.
pub fn integrate<F, A, P>(
    f: F,
    y: &mut [f64],
    t_end: f64,
    opts: &OdeOptions,
    admissible: A,
    mut on_accept: P,
) -> Result<OdeStats>
where
    F: Fn(&[f64], &mut [f64]),
    A: Fn(&[f64]) -> bool,
    P: FnMut(&mut [f64]),
{
    let n = y.len();
    let mut stats = OdeStats::default();
    if t_end == 0.0 {
        return Ok(stats);
    }
    let dir = t_end.signum();
    let span = t_end.abs();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    f(y, &mut k[0]);
    let mut h = initial_step(y, &k[0], opts).min(span);
    let mut t = 0.0;

    while t < span {
        if stats.accepted + stats.rejected > opts.max_steps {
            return Err(Error::StepCollapse { h, at: dir * t });
        }
        let last = t + h >= span;
        if last {
            h = span - t;
        }
        let hs = dir * h;
        for i in 0..n {
            tmp[i] = y[i] + hs * A21 * k[0][i];
        }
        f(&tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(&tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(&tmp, &mut k[3]);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(&tmp, &mut k[4]);
        for i in 0..n {
            tmp[i] = y[i]
                + hs * (A61 * k[0][i]
                    + A62 * k[1][i]
                    + A63 * k[2][i]
                    + A64 * k[3][i]
                    + A65 * k[4][i]);
        }
        f(&tmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = y[i]
                + hs * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        f(&ynew, &mut k[6]);

        let mut err = 0.0;
        for i in 0..n {
            let e = hs
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err = f64::max(err, (e / sc).abs());
        }
        let ok = err <= 1.0 && err.is_finite() && admissible(&ynew);

        if ok {
            t = if last { span } else { t + h };
            y.copy_from_slice(&ynew);
            on_accept(y);
            stats.accepted += 1;
            // FSAL unless the hook changed the state
            f(y, &mut k[0]);
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() && err > 1.0 {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.5
            };
            h *= fac;
        }
        if h < opts.min_step && t < span {
            return Err(Error::StepCollapse { h, at: dir * t });
        }
    }
    Ok(stats)
}

fn initial_step(y: &[f64], f0: &[f64], opts: &OdeOptions) -> f64 {
    let n = y.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = opts.atol + opts.rtol * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (fi / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0.clamp(1e-6, 0.1)
}
