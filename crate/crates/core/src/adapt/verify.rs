use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::density::{density_series, euclidean_density_data};
use super::{contraction_map, ode_residual, pullback_error, AdaptedChart};
use crate::series::SeriesMatrix;
use crate::Result;

/// Points of the cube `[−radius, radius]^n` with `per_axis` points per axis
/// that lie in the closed Euclidean ball of that radius.
pub fn chart_grid(n: usize, radius: f64, per_axis: usize) -> Vec<Vec<f64>> {
    if per_axis < 2 {
        return alloc::vec![alloc::vec![0.0; n]];
    }
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    radius * (2.0 * k as f64 / (per_axis - 1) as f64 - 1.0)
                })
                .collect::<Vec<f64>>()
        })
        .filter(|t| t.iter().map(|v| v * v).sum::<f64>() <= radius * radius * (1.0 + 1e-12))
        .collect()
}

/// Recomputed chart checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// `max |𝒯(A) − A|`.
    pub fixed_point_residual: f64,
    /// `max |(|α|+1) A_α + (A² + CA + C)_α|`.
    pub ode_residual: f64,
    /// `max |Y_series − Φ^* X|` on the grid.
    pub pullback_max_err: f64,
    pub a_norm: f64,
    pub a_norm_ok: bool,
    /// `max |(h₀ det(I + A))_α − δ_{α0}|`.
    pub h0_det_residual: f64,
    /// `max_i |Y_{j_i}(0) − e_i|`.
    pub basis_residual: f64,
    /// When `n = N`: coefficient gap between `h` and `|det dΦ|` through degree `M − 1`.
    pub det_dphi_vs_h: Option<f64>,
    /// When `n = N`: gap between `f_j` and `div X_j ∘ Φ`.
    pub divergence_residual: Option<f64>,
}

/// Recomputes the chart invariants on the given grid of chart points.
pub fn verify_chart(chart: &AdaptedChart, grid: &[Vec<f64>]) -> Result<VerifyReport> {
    let (n, m, r) = (chart.n, chart.max_degree, chart.eta1);
    let c = &chart.c.c;
    let fixed_point_residual = contraction_map(&chart.a, c)?.max_abs_diff(&chart.a);
    let ode = ode_residual(&chart.a, c)?;
    let pullback_max_err = pullback_error(chart, grid)?;
    let a_norm = chart.a.a_norm_at(r);
    let det = SeriesMatrix::identity(n, n, m, r).add(&chart.a)?.det()?;
    let mut prod = chart.h0.mul(&det)?;
    prod.dense_mut()[0] -= 1.0;
    let zero = alloc::vec![0.0; n];
    let mut basis_residual = 0.0f64;
    for (i, &j) in chart.j0.iter().enumerate() {
        let y = chart.eval_y(j, &zero)?;
        for (k, v) in y.iter().enumerate() {
            basis_residual = basis_residual.max((v - if k == i { 1.0 } else { 0.0 }).abs());
        }
    }
    let (det_dphi_vs_h, divergence_residual) = if n == chart.phi.len() {
        let dd = density_series(chart, &euclidean_density_data(chart)?)?;
        let h = dd.h.expect("density_series fills h");
        let entries =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| chart.phi[i].differentiate(j)).collect();
        let jac = SeriesMatrix::new(n, n, entries)?.det()?;
        let jac = if jac.constant_term() < 0.0 { jac.neg() } else { jac };
        let top = m.saturating_sub(1);
        (Some(h.truncate(top).max_abs_diff(&jac.truncate(top))), dd.divergence_residual)
    } else {
        (None, None)
    };
    Ok(VerifyReport {
        fixed_point_residual,
        ode_residual: ode,
        pullback_max_err,
        a_norm,
        a_norm_ok: a_norm <= 0.5 + 1e-12,
        h0_det_residual: prod.max_abs_coeff(),
        basis_residual,
        det_dphi_vs_h,
        divergence_residual,
    })
}
