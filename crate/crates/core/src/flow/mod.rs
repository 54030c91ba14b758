//! Flows of field systems: exponential maps with Jacobian transport, Taylor
//! coefficients of `Φ(t) = exp(t·X_{J0}) x0`, numeric charts and pullbacks,
//! Nelson-type norms, and sampled Carnot–Carathéodory balls.

mod ball;
mod chart;
mod compiled;
mod ode;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fields::FieldSystem;
use crate::linalg::Mat;
use crate::{Error, Result};

pub use ball::{
    dilation_factors, estimate_distance, reachable_set, BallEstimate, BallOptions, BallSampler, Binning, ControlPath,
    Occupancy,
};
pub use chart::{analytic_norms, phi_taylor, pullback_numeric, AnalyticNorms, NumericChart, CHART_COND_LIMIT};
pub use compiled::CompiledSystem;
pub use ode::{EscapeReason, IntegratorOptions};

/// Axis-aligned working box; trajectories leaving it fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn around(center: &[f64], half_width: f64) -> Self {
        Bounds {
            lo: center.iter().map(|c| c - half_width).collect(),
            hi: center.iter().map(|c| c + half_width).collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((v, l), h)| *v >= *l && *v <= *h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    pub integrator: IntegratorOptions,
    /// Transport `∂E(1)/∂x0`.
    pub jacobian: bool,
    /// Transport `∂E(1)/∂a`.
    pub param_jacobian: bool,
    pub bounds: Option<Bounds>,
    pub record_trajectory: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            integrator: IntegratorOptions::default(),
            jacobian: false,
            param_jacobian: false,
            bounds: None,
            record_trajectory: false,
        }
    }
}

/// Outcome of one flow. Failures are reported, not raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub endpoint: Vec<f64>,
    /// `N × N`, derivative of the endpoint in the initial point.
    pub jacobian: Option<Mat>,
    /// `N × q`, derivative of the endpoint in the coefficients `a`.
    pub param_jacobian: Option<Mat>,
    pub trajectory: Vec<Vec<f64>>,
    pub success: bool,
    pub escape_reason: Option<EscapeReason>,
}

/// A compiled system ready for repeated flows.
#[derive(Debug, Clone)]
pub struct Flow {
    compiled: CompiledSystem,
}

impl Flow {
    pub fn new(system: &FieldSystem) -> Self {
        Flow { compiled: CompiledSystem::new(system) }
    }

    pub fn compiled(&self) -> &CompiledSystem {
        &self.compiled
    }

    /// Solves `E' = Σ a_j X_j(E)`, `E(0) = x0` on `[0, 1]`.
    pub fn exp(&self, a: &[f64], x0: &[f64], opts: &FlowOptions) -> Result<FlowResult> {
        let (n, q) = (self.compiled.dim(), self.compiled.q());
        if a.len() != q || x0.len() != n {
            return Err(Error::Structure(alloc::format!("flow needs {q} coefficients and a point of dimension {n}")));
        }
        if a.iter().chain(x0).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite flow input".into()));
        }
        let (jac, par) = (opts.jacobian, opts.param_jacobian);
        let off_j = n;
        let off_p = n + if jac { n * n } else { 0 };
        let total = off_p + if par { n * q } else { 0 };
        let mut y0 = vec![0.0; total];
        y0[..n].copy_from_slice(x0);
        if jac {
            for i in 0..n {
                y0[off_j + i * n + i] = 1.0;
            }
        }
        let mut pw = Vec::new();
        let mut dv = vec![0.0; n * n];
        let mut fv = vec![0.0; n * q];
        let c = &self.compiled;
        let rhs = |y: &[f64], dy: &mut [f64]| {
            let (x, _) = y.split_at(n);
            c.vector(a, x, &mut dy[..n], &mut pw);
            if !(jac || par) {
                return;
            }
            c.jacobian_cached(a, &mut dv, &pw);
            if jac {
                mat_mul_into(&dv, &y[off_j..off_j + n * n], &mut dy[off_j..off_j + n * n], n, n);
            }
            if par {
                c.fields_at(x, &mut fv, &mut pw);
                let s = &y[off_p..off_p + n * q];
                let out = &mut dy[off_p..off_p + n * q];
                mat_mul_into(&dv, s, out, n, q);
                for j in 0..q {
                    for i in 0..n {
                        out[i * q + j] += fv[j * n + i];
                    }
                }
            }
        };
        let inside = |y: &[f64]| opts.bounds.as_ref().map_or(true, |b| b.contains(&y[..n]));
        let mut trajectory = Vec::new();
        let record = |_t: f64, y: &[f64]| {
            if opts.record_trajectory {
                trajectory.push(y[..n].to_vec());
            }
        };
        match ode::dopri5(&y0, 1.0, &opts.integrator, rhs, inside, record) {
            Ok(y) => {
                let jacobian = jac.then(|| Mat { rows: n, cols: n, data: y[off_j..off_j + n * n].to_vec() });
                let param_jacobian = par.then(|| Mat { rows: n, cols: q, data: y[off_p..off_p + n * q].to_vec() });
                Ok(FlowResult {
                    endpoint: y[..n].to_vec(),
                    jacobian,
                    param_jacobian,
                    trajectory,
                    success: true,
                    escape_reason: None,
                })
            }
            Err(reason) => Ok(FlowResult {
                endpoint: x0.to_vec(),
                jacobian: None,
                param_jacobian: None,
                trajectory,
                success: false,
                escape_reason: Some(reason),
            }),
        }
    }
}

// out (n×m) = a (n×n) · b (n×m), row-major
fn mat_mul_into(a: &[f64], b: &[f64], out: &mut [f64], n: usize, m: usize) {
    for i in 0..n {
        for j in 0..m {
            let mut acc = 0.0;
            for k in 0..n {
                acc += a[i * n + k] * b[k * m + j];
            }
            out[i * m + j] = acc;
        }
    }
}

/// `exp(Σ a_j X_j) x0` on a freshly compiled system.
pub fn exp_map(system: &FieldSystem, a: &[f64], x0: &[f64], opts: &FlowOptions) -> Result<FlowResult> {
    Flow::new(system).exp(a, x0, opts)
}

#[cfg(test)]
mod tests;
