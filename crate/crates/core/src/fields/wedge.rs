use alloc::string::ToString;
use alloc::vec::Vec;

use super::{AnalyticVectorField, FieldSystem, StructureCoefficients};
use crate::linalg::{self, Mat};
use crate::math::{k_subsets, sort_with_sign};
use crate::series::TruncatedSeries;
use crate::{Error, Result};

/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-8;

const TIE_RTOL: f64 = 1e-12;

/// Numerical rank of the `N × q` matrix of field values at `x`.
pub fn numerical_rank(system: &FieldSystem, x: &[f64]) -> usize {
    let m = system.matrix_at(x);
    let scale = system.fields().iter().map(|f| f.field.max_abs_coeff()).fold(0.0, f64::max).max(1e-300);
    linalg::numerical_rank(&m, RANK_TOL, 1e-13 * scale)
}

/// All `n × n` minors of `(X_{j_1}(x) | … | X_{j_n}(x))`, rows in lexicographic order.
pub fn wedge_minors(fields: &[&AnalyticVectorField], x: &[f64]) -> Vec<f64> {
    let cols: Vec<Vec<f64>> = fields.iter().map(|f| f.evaluate(x)).collect();
    linalg::maximal_minors(&Mat::from_columns(&cols))
}

fn tuple_minors(system: &FieldSystem, tuple: &[usize], x: &[f64]) -> Vec<f64> {
    let fs: Vec<&AnalyticVectorField> = tuple.iter().map(|&j| system.field(j)).collect();
    wedge_minors(&fs, x)
}

/// Result of [`select_j0`].
#[derive(Debug, Clone, PartialEq)]
pub struct J0Selection {
    /// Chosen tuple (0-based, increasing).
    pub j0: Vec<usize>,
    /// Numerical rank at the point.
    pub n: usize,
    /// Row subset `K*` holding the largest minor of `X_{J0}`.
    pub pivot_rows: Vec<usize>,
    /// Minors of `X_{J0}` at the point.
    pub minors: Vec<f64>,
    /// `|∧X_{J0}(x)|_∞`.
    pub minor_norm: f64,
}

/// The increasing `n`-tuple maximising `|∧X_J(x)|_∞`, with `n` the numerical
/// rank. Ties within a relative `1e-12` go to the lexicographically smallest tuple.
/// `zeta` is only validated here; the exact maximiser satisfies every `ζ ≤ 1`.
pub fn select_j0(system: &FieldSystem, x: &[f64], zeta: f64) -> Result<J0Selection> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::Domain(alloc::format!("zeta must lie in (0, 1], got {zeta}")));
    }
    let n = numerical_rank(system, x);
    if n == 0 {
        return Err(Error::DegeneratePoint);
    }
    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
    for tuple in k_subsets(system.q(), n) {
        let minors = tuple_minors(system, &tuple, x);
        let norm = linalg::norm_inf(&minors);
        let better = match &best {
            None => true,
            Some((_, _, b)) => norm > *b * (1.0 + TIE_RTOL),
        };
        if better {
            best = Some((tuple, minors, norm));
        }
    }
    let (j0, minors, minor_norm) = best.expect("at least one tuple");
    let pivot = argmax_abs(&minors);
    Ok(J0Selection { j0, n, pivot_rows: k_subsets(system.ambient_dim(), n).swap_remove(pivot), minors, minor_norm })
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + TIE_RTOL) {
            best = i;
        }
    }
    best
}

/// `∧X_J(x) / ∧X_{J0}(x)` with its proportionality residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeRatio {
    pub ratio: f64,
    /// `max_K |minor_K(X_J) − ratio · minor_K(X_{J0})| / |pivot|`.
    pub residual: f64,
}

/// Ratio of wedges through the pivot minor `K* = argmax |minor_K(X_{J0})|`.
pub fn wedge_ratio(system: &FieldSystem, j: &[usize], j0: &[usize], x: &[f64], tol: f64) -> Result<WedgeRatio> {
    if j.len() != j0.len() {
        return Err(Error::Structure("tuples of different lengths".to_string()));
    }
    let m0 = tuple_minors(system, j0, x);
    let mj = tuple_minors(system, j, x);
    let k = argmax_abs(&m0);
    let pivot = m0[k];
    let hadamard: f64 = j0.iter().map(|&i| linalg::norm2(&system.field(i).evaluate(x))).product();
    if pivot.abs() <= RANK_TOL * hadamard || pivot == 0.0 {
        return Err(Error::Rank(alloc::format!("reference tuple {j0:?} has vanishing wedge at the point")));
    }
    let ratio = mj[k] / pivot;
    let residual = m0.iter().zip(&mj).fold(0.0f64, |acc, (a, b)| acc.max((b - ratio * a).abs())) / pivot.abs();
    if residual > tol {
        return Err(Error::Tangency { residual, tol });
    }
    Ok(WedgeRatio { ratio, residual })
}

/// For a user-forced `J0`: `max_J |∧X_J/∧X_{J0}|` over increasing tuples,
/// rejected when it exceeds `1/ζ`.
pub fn check_zeta(system: &FieldSystem, j0: &[usize], x: &[f64], zeta: f64, tol: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for tuple in k_subsets(system.q(), j0.len()) {
        worst = worst.max(wedge_ratio(system, &tuple, j0, x, tol)?.ratio.abs());
    }
    if worst > (1.0 + 1e-10) / zeta {
        return Err(Error::Domain(alloc::format!(
            "forced J0 violates the zeta condition: max ratio {worst} > 1/{zeta}"
        )));
    }
    Ok(worst)
}

/// `Lie_{X_j}(X_{J_1} ∧ … ∧ X_{J_n}) = Σ_K g_{j,J}^K X_K` over increasing `K`,
/// read off from the structure coefficients. Returns `(K, g_{j,J}^K)` pairs.
pub fn lie_derivative_of_wedge(
    s: &StructureCoefficients,
    j: usize,
    tuple: &[usize],
) -> Vec<(Vec<usize>, TruncatedSeries)> {
    let mut out: Vec<(Vec<usize>, TruncatedSeries)> = Vec::new();
    for slot in 0..tuple.len() {
        for k in 0..s.q() {
            let c = s.get(j, tuple[slot], k);
            if c.is_zero() {
                continue;
            }
            let mut replaced = tuple.to_vec();
            replaced[slot] = k;
            let Some((sign, sorted)) = sort_with_sign(&replaced) else { continue };
            match out.iter_mut().find(|(key, _)| *key == sorted) {
                Some((_, acc)) => acc.axpy(sign, c).expect("same shape"),
                None => out.push((sorted, c.scale(sign))),
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
