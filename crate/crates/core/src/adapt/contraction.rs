//! The matrix series `A` with `Φ^* X_{J0} = (I + A) ∇`, as the fixed point of
//! `𝒯(A) = −∫₀¹ (A² + CA + C)(s·) ds`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fields::CramerData;
use crate::series::{SeriesMatrix, TruncatedSeries};
use crate::{Error, Result};

/// Stop once the largest coefficient change is below this (relative to `max(1, |A|)`).
pub const FIXED_POINT_TOL: f64 = 1e-14;
pub const MAX_ITERATIONS: usize = 100;

/// `C(t) = Σ_l t_l C_l(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    pub c: SeriesMatrix,
    pub slices: Vec<SeriesMatrix>,
}

impl CMatrix {
    /// From the slices `C_l`, all `n × n` series in `n` variables.
    pub fn from_slices(slices: Vec<SeriesMatrix>) -> Result<Self> {
        let first = slices.first().ok_or_else(|| Error::Structure("C needs at least one slice".into()))?;
        let n = first.rows();
        if slices.len() != n || first.cols() != n || first.dim() != n {
            return Err(Error::Structure("C slices must be n×n series in n variables, n of them".into()));
        }
        let mut c = SeriesMatrix::zeros(n, n, n, first.max_degree(), first.radius());
        for (l, s) in slices.iter().enumerate() {
            c = c.add(&s.map(|e| e.multiply_by_variable(l)))?;
        }
        Ok(CMatrix { c, slices })
    }

    pub fn n(&self) -> usize {
        self.c.rows()
    }

    /// `D = Σ_l ‖C_l‖` at radius `r`.
    pub fn bound(&self, r: f64) -> f64 {
        self.slices.iter().map(|s| s.a_norm_at(r)).sum()
    }

    pub fn with_radius(&self, r: f64) -> Self {
        CMatrix { c: self.c.with_radius(r), slices: self.slices.iter().map(|s| s.with_radius(r)).collect() }
    }
}

/// `C` with `(C_l)_{a,c} = ĉ_{j_a, j_l}^{c} ∘ Φ` from composed reduction data.
pub fn assemble_c(data: &CramerData) -> Result<CMatrix> {
    if !data.composed {
        return Err(Error::Structure("assemble_c needs reduction data composed with the chart map".into()));
    }
    let n = data.n();
    let slices = (0..n)
        .map(|l| {
            let mut entries = Vec::with_capacity(n * n);
            for a in 0..n {
                for c in 0..n {
                    entries.push(data.chat(data.j0[a], data.j0[l], c).clone());
                }
            }
            SeriesMatrix::new(n, n, entries)
        })
        .collect::<Result<Vec<_>>>()?;
    CMatrix::from_slices(slices)
}

fn quadratic(a: &SeriesMatrix, c: &SeriesMatrix) -> Result<SeriesMatrix> {
    a.mul(a)?.add(&c.mul(a)?)?.add(c)
}

/// `𝒯(A) = −ray_average(A² + CA + C)`.
pub fn contraction_map(a: &SeriesMatrix, c: &SeriesMatrix) -> Result<SeriesMatrix> {
    Ok(quadratic(a, c)?.map(|e| e.ray_average().neg()))
}

/// `max_α |(|α| + 1) A_α + (A² + CA + C)_α|` over plain coefficients.
pub fn ode_residual(a: &SeriesMatrix, c: &SeriesMatrix) -> Result<f64> {
    let lhs = a.map(|e| {
        let mut s = e.euler();
        s.axpy(1.0, e).expect("same shape");
        s
    });
    Ok(lhs.add(&quadratic(a, c)?)?.max_abs_coeff())
}

/// Output of [`solve_a_contraction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSolution {
    pub a: SeriesMatrix,
    pub eta1: f64,
    /// `Σ_l ‖C_l‖` at `η̂`.
    pub d: f64,
    pub iterations: usize,
    /// `max |𝒯(A) − A|` over coefficients.
    pub fixed_point_residual: f64,
    pub ode_residual: f64,
    /// `‖A‖` at `η₁`.
    pub a_norm: f64,
}

/// Iterates `𝒯` from zero. `η₁ = min(η̂, 5/(8D))` with `D` computed here.
pub fn solve_a_contraction(c: &CMatrix, eta_hat: f64) -> Result<ContractionSolution> {
    let n = c.n();
    let zero = SeriesMatrix::zeros(n, n, n, c.c.max_degree(), c.c.radius());
    solve_a_contraction_from(c, eta_hat, zero)
}

/// As [`solve_a_contraction`], from a given starting matrix.
pub fn solve_a_contraction_from(c: &CMatrix, eta_hat: f64, start: SeriesMatrix) -> Result<ContractionSolution> {
    if !(eta_hat > 0.0 && eta_hat.is_finite()) {
        return Err(Error::Domain(alloc::format!("η̂ must be positive, got {eta_hat}")));
    }
    let d = c.bound(eta_hat);
    let eta1 = if d > 0.0 { eta_hat.min(5.0 / (8.0 * d)) } else { eta_hat };
    let cm = c.c.with_radius(eta1);
    let mut a = start.with_radius(eta1);
    let mut last_change = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let next = contraction_map(&a, &cm)?;
        last_change = next.max_abs_diff(&a);
        let scale = next.max_abs_coeff().max(1.0);
        a = next;
        if last_change <= FIXED_POINT_TOL * scale {
            let fixed = contraction_map(&a, &cm)?.max_abs_diff(&a);
            return Ok(ContractionSolution {
                fixed_point_residual: fixed,
                ode_residual: ode_residual(&a, &cm)?,
                a_norm: a.a_norm_at(eta1),
                a,
                eta1,
                d,
                iterations: it,
            });
        }
    }
    Err(Error::ContractionViolated { iterations: MAX_ITERATIONS, last_change })
}

/// `Y_{j_i} = ∂_i + Σ_k A_{ik} ∂_k`, components of the rows of `I + A`.
pub(crate) fn identity_plus(a: &SeriesMatrix) -> Vec<Vec<TruncatedSeries>> {
    let n = a.rows();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    let mut e = a.get(i, k).clone();
                    if i == k {
                        e.dense_mut()[0] += 1.0;
                    }
                    e
                })
                .collect()
        })
        .collect()
}
