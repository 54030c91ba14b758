//! Dormand–Prince 5(4) with embedded error control for autonomous systems.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Why an integration stopped before reaching the end of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeReason {
    LeftBox,
    StepFloor,
    NonFinite,
    MaxSteps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step, relative to the horizon.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rtol: 1e-10, atol: 1e-12, h_min: 1e-12, max_steps: 200_000 }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus the embedded fourth-order ones
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Integrates `y' = f(y)` over `[0, t_end]`. `inside` is checked on every
/// accepted state; `record` sees every accepted `(t, y)`.
pub(crate) fn dopri5<F, I, R>(
    y0: &[f64],
    t_end: f64,
    opts: &IntegratorOptions,
    mut f: F,
    mut inside: I,
    mut record: R,
) -> Result<Vec<f64>, EscapeReason>
where
    F: FnMut(&[f64], &mut [f64]),
    I: FnMut(&[f64]) -> bool,
    R: FnMut(f64, &[f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if t_end == 0.0 {
        return Ok(y);
    }
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    f(&y, &mut k[0]);
    if k[0].iter().any(|v| !v.is_finite()) {
        return Err(EscapeReason::NonFinite);
    }

    let scale = |y: &[f64], i: usize, yn: f64| opts.atol + opts.rtol * y[i].abs().max(yn.abs());
    let d0 = rms((0..n).map(|i| y[i] / scale(&y, i, y[i])));
    let d1 = rms((0..n).map(|i| k[0][i] / scale(&y, i, y[i])));
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-3 } else { 0.01 * d0 / d1 };
    h = h.min(t_end).max(opts.h_min * t_end);

    let mut t = 0.0;
    let mut steps = 0usize;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(EscapeReason::MaxSteps);
        }
        steps += 1;
        let last = t + h >= t_end * (1.0 - 1e-14);
        if last {
            h = t_end - t;
        }
        for s in 1..7 {
            let (done, rest) = k.split_at_mut(s);
            for i in 0..n {
                let acc: f64 = done.iter().zip(&A[s]).map(|(kr, a)| a * kr[i]).sum();
                stage[i] = y[i] + h * acc;
            }
            f(&stage, &mut rest[0]);
        }
        // stage 7 holds the fifth-order solution (FSAL)
        y_new.copy_from_slice(&stage);
        let mut err = 0.0;
        let mut finite = true;
        for i in 0..n {
            if !y_new[i].is_finite() {
                finite = false;
                break;
            }
            let mut e = 0.0;
            for (r, kr) in k.iter().enumerate() {
                e += E[r] * kr[i];
            }
            let sc = scale(&y, i, y_new[i]);
            err += (h * e / sc) * (h * e / sc);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !finite || !err.is_finite() {
            h *= 0.2;
            if h < opts.h_min * t_end {
                return Err(EscapeReason::NonFinite);
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            core::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            if !inside(&y) {
                return Err(EscapeReason::LeftBox);
            }
            record(t, &y);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            if h < opts.h_min * t_end {
                return Err(EscapeReason::StepFloor);
            }
        }
    }
    Ok(y)
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut n = 0usize;
    for v in it {
        s += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}
