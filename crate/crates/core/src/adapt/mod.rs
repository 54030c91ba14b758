//! The adapted chart: `C(t)`, the contraction solve for `A`, the rescaled
//! fields `Y = Φ^* X` in chart coordinates, and the density series.
//!
//! Everything here is computed at a single base point `x0`. The pipeline
//! expects the fields as series around some center; it re-expands them
//! around `x0` first and fits structure coefficients when none are attached.

mod contraction;
mod density;
mod ode;
mod verify;


use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use contraction::{
    assemble_c, contraction_map, ode_residual, solve_a_contraction, solve_a_contraction_from, CMatrix,
    ContractionSolution, FIXED_POINT_TOL, MAX_ITERATIONS,
};
pub use density::{density_series, euclidean_density_data, DensityData, GTildeEntry};
pub use ode::{solve_series_ode, OdeTerm, SeriesOdeProblem, SeriesOdeSolution};
pub use verify::{chart_grid, verify_chart, VerifyReport};

use crate::fields::{
    check_zeta, cramer_reduce, fit_structure_coeffs, lie_derivative_of_wedge, select_j0, wedge_minors, wedge_ratio,
    AnalyticVectorField, FieldSystem, FitOptions,
};
use crate::flow::{phi_taylor, pullback_numeric, FlowOptions, NumericChart};
use crate::linalg;
use crate::math::k_subsets;
use crate::series::{SeriesMatrix, TruncatedSeries};
use crate::{Error, Result};

/// Tangency tolerance for wedge ratios at the base point.
pub const TANGENCY_TOL: f64 = 1e-8;

/// Settings for [`build_adapted_chart`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartConfig {
    pub zeta: f64,
    /// Truncation `M` of every chart series.
    pub max_degree: usize,
    /// `η̂`; when absent, `min(system radius, Picard–Lindelöf estimate)`.
    pub eta_hat: Option<f64>,
    /// Use this tuple instead of the maximiser of `|∧X_J(x0)|`.
    pub forced_j0: Option<Vec<usize>>,
    /// Half-width of the working box around `x0`; defaults to the system radius.
    pub box_half_width: Option<f64>,
    /// Polynomial degree for fitted structure coefficients.
    pub fit_poly_degree: usize,
    /// Points per axis of the `|t| ≤ η₁/2` grid used for the pullback check;
    /// zero skips the check.
    pub verify_points: usize,
}

impl Default for ChartConfig {
    fn default() -> Self {
        ChartConfig {
            zeta: 1.0,
            max_degree: 8,
            eta_hat: None,
            forced_j0: None,
            box_half_width: None,
            fit_poly_degree: 4,
            verify_points: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDiagnostics {
    /// `Σ_l ‖C_l‖` at `η̂`.
    pub d: f64,
    pub contraction_iters: usize,
    pub fixed_point_residual: f64,
    pub ode_residual: f64,
    /// `max |Y_series − Φ^* X|` on the `|t| ≤ η₁/2` grid.
    pub pullback_max_err: Option<f64>,
    pub zeta: f64,
    /// `max_J |∧X_J / ∧X_{J0}|` at `x0`.
    pub max_wedge_ratio: f64,
    /// `‖A‖` at `η₁`.
    pub a_norm: f64,
    /// `max_i ‖Y_{j,i}‖` at `η₁`, one entry per field.
    pub y_norms: Vec<f64>,
    /// `"user"`, `"radius"` or `"picard_lindelof"`.
    pub eta_hat_source: String,
    pub structure_fitted: bool,
    /// Residual of `[X_j, X_k] = Σ c X_l` on the fitting grid.
    pub structure_residual: f64,
    /// `max |(h₀ · det(I + A))_α − δ_{α0}|`.
    pub h0_det_residual: f64,
}

/// An adapted chart at `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedChart {
    pub base_point: Vec<f64>,
    pub j0: Vec<usize>,
    pub n: usize,
    pub pivot_rows: Vec<usize>,
    pub max_degree: usize,
    pub eta_hat: f64,
    pub eta1: f64,
    pub a: SeriesMatrix,
    pub c: CMatrix,
    /// `Φ_i` for each ambient coordinate.
    pub phi: Vec<TruncatedSeries>,
    /// `Y_j = Φ^* X_j`, `n` components each, for all `q` fields.
    pub y: Vec<Vec<TruncatedSeries>>,
    pub h0: TruncatedSeries,
    pub diagnostics: ChartDiagnostics,
    /// Fields around `x0` with structure coefficients.
    #[serde(skip)]
    pub(crate) prepared: Option<FieldSystem>,
}

impl AdaptedChart {
    /// The system the chart was built from, re-expanded around `x0`.
    pub fn prepared_system(&self) -> Option<&FieldSystem> {
        self.prepared.as_ref()
    }

    /// `Y_j(t)` (components in chart coordinates).
    pub fn eval_y(&self, j: usize, t: &[f64]) -> Result<Vec<f64>> {
        self.y[j].iter().map(|c| c.evaluate(t)).collect()
    }
}

/// Re-expands around `x0` and fits structure coefficients if none are attached.
/// Returns the system, whether a fit happened and the fit residual.
pub fn prepare_system(system: &FieldSystem, x0: &[f64], cfg: &ChartConfig) -> Result<(FieldSystem, bool, f64)> {
    if x0.len() != system.ambient_dim() {
        return Err(Error::Structure("base point has the wrong dimension".to_string()));
    }
    let mut sys = if x0 == system.center() { system.clone() } else { system.recentered(x0)? };
    match sys.structure() {
        Some(s) => {
            let res = s.max_residual;
            Ok((sys, false, res))
        }
        None => {
            let hw = cfg.box_half_width.unwrap_or(sys.radius());
            let s = fit_structure_coeffs(&sys, &FitOptions::around(x0, hw, cfg.fit_poly_degree))?;
            let res = s.max_residual.max(s.verify_residual);
            sys = sys.with_structure(s)?;
            Ok((sys, true, res))
        }
    }
}

/// `bw / sup |X_{J0}|` over a grid of the box `x0 ± bw`, with
/// `|X_{J0}|² = Σ_{j ∈ J0} |X_j|²`; a flow of `t·X_{J0}` with `|t|` below
/// this stays in the box for unit time.
pub fn picard_lindelof_eta(system: &FieldSystem, j0: &[usize], x0: &[f64], half_width: f64) -> f64 {
    let dim = x0.len();
    let per_axis: usize = if dim <= 3 { 5 } else { 3 };
    let total = per_axis.pow(dim as u32);
    let mut sup = 0.0f64;
    for mut idx in 0..total {
        let x: Vec<f64> = (0..dim)
            .map(|i| {
                let k = idx % per_axis;
                idx /= per_axis;
                x0[i] + half_width * (2.0 * k as f64 / (per_axis - 1) as f64 - 1.0)
            })
            .collect();
        let s: f64 = j0.iter().map(|&j| linalg::norm2(&system.field(j).evaluate(&x)).powi(2)).sum();
        sup = sup.max(s.sqrt());
    }
    if sup > 0.0 {
        half_width / sup
    } else {
        f64::INFINITY
    }
}

struct Basis {
    j0: Vec<usize>,
    pivot_rows: Vec<usize>,
    max_ratio: f64,
}

fn choose_basis(sys: &FieldSystem, x0: &[f64], cfg: &ChartConfig) -> Result<Basis> {
    match &cfg.forced_j0 {
        None => {
            let sel = select_j0(sys, x0, cfg.zeta)?;
            let max_ratio = check_zeta(sys, &sel.j0, x0, cfg.zeta, TANGENCY_TOL)?;
            Ok(Basis { j0: sel.j0, pivot_rows: sel.pivot_rows, max_ratio })
        }
        Some(j0) => {
            if !(cfg.zeta > 0.0 && cfg.zeta <= 1.0) {
                return Err(Error::Domain(alloc::format!("zeta must lie in (0, 1], got {}", cfg.zeta)));
            }
            if j0.is_empty() || j0.iter().any(|&j| j >= sys.q()) || j0.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Structure(alloc::format!(
                    "forced J0 {j0:?} is not an increasing tuple of field indices"
                )));
            }
            let rank = crate::fields::numerical_rank(sys, x0);
            if rank == 0 {
                return Err(Error::DegeneratePoint);
            }
            if rank != j0.len() {
                return Err(Error::Rank(alloc::format!(
                    "forced J0 has {} fields but the rank at x0 is {rank}",
                    j0.len()
                )));
            }
            let max_ratio = check_zeta(sys, j0, x0, cfg.zeta, TANGENCY_TOL)?;
            let fs: Vec<&AnalyticVectorField> = j0.iter().map(|&j| sys.field(j)).collect();
            let minors = wedge_minors(&fs, x0);
            let mut best = 0;
            for (i, m) in minors.iter().enumerate() {
                if m.abs() > minors[best].abs() {
                    best = i;
                }
            }
            Ok(Basis {
                j0: j0.clone(),
                pivot_rows: k_subsets(sys.ambient_dim(), j0.len()).swap_remove(best),
                max_ratio,
            })
        }
    }
}

/// Builds the adapted chart at `x0`.
///
/// Fails with [`Error::DegeneratePoint`] when every field vanishes at `x0`
/// (the orbit is a point and the chart is zero-dimensional).
pub fn build_adapted_chart(system: &FieldSystem, x0: &[f64], cfg: &ChartConfig) -> Result<AdaptedChart> {
    let m = cfg.max_degree;
    if m == 0 {
        return Err(Error::Domain("chart truncation must be at least 1".to_string()));
    }
    let (sys, fitted, structure_residual) = prepare_system(system, x0, cfg)?;
    let basis = choose_basis(&sys, x0, cfg)?;
    let (j0, n) = (basis.j0.clone(), basis.j0.len());

    let (eta_hat, source) = match cfg.eta_hat {
        Some(e) => {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Domain(alloc::format!("η̂ must be positive, got {e}")));
            }
            (e, "user")
        }
        None => {
            let hw = cfg.box_half_width.unwrap_or(sys.radius());
            let pl = picard_lindelof_eta(&sys, &j0, x0, hw);
            if pl < sys.radius() {
                (pl, "picard_lindelof")
            } else {
                (sys.radius(), "radius")
            }
        }
    };

    let phi = phi_taylor(&sys, &j0, x0, m, eta_hat)?;
    let data = cramer_reduce(&sys, &j0, &basis.pivot_rows, Some(&phi))?;
    let c = assemble_c(&data)?;
    let sol = solve_a_contraction(&c, eta_hat)?;
    let eta1 = sol.eta1;

    let rows = contraction::identity_plus(&sol.a);
    let mut y = Vec::with_capacity(sys.q());
    for k in 0..sys.q() {
        if let Some(i) = j0.iter().position(|&j| j == k) {
            y.push(rows[i].clone());
            continue;
        }
        let mut comps = vec![TruncatedSeries::zero(n, m, eta1); n];
        for (l, row) in rows.iter().enumerate() {
            let b = data.btilde(k, l).with_radius(eta1);
            for (comp, r) in comps.iter_mut().zip(row) {
                comp.axpy(1.0, &b.mul(r)?)?;
            }
        }
        y.push(comps);
    }

    let i_plus_a = SeriesMatrix::identity(n, n, m, eta1).add(&sol.a)?;
    let det = i_plus_a.det()?;
    let h0 = det.reciprocal()?;
    let mut check = h0.mul(&det)?;
    check.dense_mut()[0] -= 1.0;
    let h0_det_residual = check.max_abs_coeff();

    let y_norms = y.iter().map(|comps| comps.iter().map(|s| s.a_norm_at(eta1)).fold(0.0, f64::max)).collect();
    let mut chart = AdaptedChart {
        base_point: x0.to_vec(),
        j0,
        n,
        pivot_rows: basis.pivot_rows,
        max_degree: m,
        eta_hat,
        eta1,
        a: sol.a,
        c: c.with_radius(eta1),
        phi: phi.iter().map(|p| p.with_radius(eta1)).collect(),
        y,
        h0,
        diagnostics: ChartDiagnostics {
            d: sol.d,
            contraction_iters: sol.iterations,
            fixed_point_residual: sol.fixed_point_residual,
            ode_residual: sol.ode_residual,
            pullback_max_err: None,
            zeta: cfg.zeta,
            max_wedge_ratio: basis.max_ratio,
            a_norm: sol.a_norm,
            y_norms,
            eta_hat_source: source.to_string(),
            structure_fitted: fitted,
            structure_residual,
            h0_det_residual,
        },
        prepared: Some(sys),
    };
    if cfg.verify_points > 0 {
        chart.diagnostics.pullback_max_err =
            Some(pullback_error(&chart, &chart_grid(n, eta1 / 2.0, cfg.verify_points))?);
    }
    Ok(chart)
}

/// `max |Y_j(t) − (Φ^* X_j)(t)|` over the grid, with the pullback taken
/// through the integrated flow.
pub fn pullback_error(chart: &AdaptedChart, grid: &[Vec<f64>]) -> Result<f64> {
    let sys = chart.prepared.as_ref().ok_or_else(|| Error::Structure("chart carries no field system".to_string()))?;
    let numeric = NumericChart::new(sys, &chart.j0, &chart.base_point, FlowOptions::default())?;
    let mut worst = 0.0f64;
    for j in 0..sys.q() {
        let exact = pullback_numeric(&numeric, sys.field(j), grid)?;
        for (t, e) in grid.iter().zip(&exact) {
            let series = chart.eval_y(j, t)?;
            for (a, b) in series.iter().zip(e) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

/// Ratios `G_J = ∧X_J / ∧X_{J0}` composed with the chart map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeRatioSeries {
    /// All increasing `n`-tuples of field indices.
    pub tuples: Vec<Vec<usize>>,
    /// `G_J ∘ Φ`, at the radius of `Φ`.
    pub ratios: Vec<TruncatedSeries>,
    pub solution: SeriesOdeSolution,
}

impl WedgeRatioSeries {
    pub fn get(&self, tuple: &[usize]) -> Option<&TruncatedSeries> {
        self.tuples.iter().position(|t| t == tuple).map(|i| &self.ratios[i])
    }
}

/// Solves the quadratic ray ODE
/// `X_j G_J = Σ_K g_{j,J}^K G_K − (Σ_K g_{j,J0}^K G_K) G_J`, `j ∈ J0`,
/// with `G_J(x0)` from the wedge minors at `x0`.
pub fn wedge_ratio_series(
    system: &FieldSystem,
    x0: &[f64],
    j0: &[usize],
    max_degree: usize,
    radius: f64,
) -> Result<WedgeRatioSeries> {
    if system.structure().is_none() {
        return Err(Error::Structure("structure coefficients are required".to_string()));
    }
    let sys = if x0 == system.center() { system.clone() } else { system.recentered(x0)? };
    let phi = phi_taylor(&sys, j0, x0, max_degree, radius)?;
    wedge_ratio_series_on(&sys, j0, &phi)
}

pub(crate) fn wedge_ratio_series_on(
    sys: &FieldSystem,
    j0: &[usize],
    phi: &[TruncatedSeries],
) -> Result<WedgeRatioSeries> {
    let s = sys.structure().ok_or_else(|| Error::Structure("structure coefficients are required".to_string()))?;
    let x0 = sys.center();
    let n = j0.len();
    let (m, r) = (phi[0].max_degree(), phi[0].radius());
    let tuples = k_subsets(sys.q(), n);
    let idx = |t: &[usize]| tuples.iter().position(|u| u == t).expect("increasing tuple");
    let big_n = tuples.len();
    let unit = |k: usize| {
        let mut a = vec![0u32; big_n];
        a[k] += 1;
        a
    };
    let j0_idx = idx(j0);
    let mut terms = Vec::new();
    for (i, &ji) in j0.iter().enumerate() {
        let g0: Vec<(usize, TruncatedSeries)> = lie_derivative_of_wedge(s, ji, j0)
            .into_iter()
            .map(|(k, g)| Ok((idx(&k), g.compose_at(x0, phi)?)))
            .collect::<Result<_>>()?;
        for (l, tuple) in tuples.iter().enumerate() {
            for (k, g) in lie_derivative_of_wedge(s, ji, tuple) {
                terms.push(OdeTerm { alpha: unit(idx(&k)), j: i, l, coeff: g.compose_at(x0, phi)? });
            }
            for (k, g) in &g0 {
                let mut alpha = unit(*k);
                alpha[l] += 1;
                terms.push(OdeTerm { alpha, j: i, l, coeff: g.neg() });
            }
        }
    }
    let initial = tuples
        .iter()
        .enumerate()
        .map(|(l, t)| if l == j0_idx { Ok(1.0) } else { wedge_ratio(sys, t, j0, x0, TANGENCY_TOL).map(|w| w.ratio) })
        .collect::<Result<Vec<_>>>()?;
    let problem =
        SeriesOdeProblem { n_vars: n, n_unknowns: big_n, degree_bound: 2, terms, initial, radius: r, max_degree: m };
    let solution = solve_series_ode(&problem)?;
    let ratios = solution.f.iter().map(|f| f.with_radius(r)).collect();
    Ok(WedgeRatioSeries { tuples, ratios, solution })
}
