//! Densities in chart coordinates: the `f_j` with `Lie_{X_j} ν = f_j ν` for the
//! Lebesgue-induced density `ν` on the orbit of `x0`, and the pulled-back density
//! `h = (g∘Φ) h₀`.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ode::{solve_series_ode, OdeTerm, SeriesOdeProblem};
use super::verify::chart_grid;
use super::{wedge_ratio_series_on, AdaptedChart};
use crate::fields::{cramer_reduce, wedge_minors, AnalyticVectorField, FieldSystem};
use crate::linalg;
use crate::math::{k_subsets, sort_with_sign};
use crate::series::TruncatedSeries;
use crate::{Error, Result};

/// `g̃_{j,K}^L ∘ Φ` for chart variable `j` and row subsets `K`, `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GTildeEntry {
    pub j: usize,
    pub k: Vec<usize>,
    pub l: Vec<usize>,
    pub series: TruncatedSeries,
}

/// Density data; every series is in chart coordinates (composed with `Φ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityData {
    /// Row subsets `K` indexing the minors.
    pub row_subsets: Vec<Vec<usize>>,
    /// `det X_{K,J0} / |det_{n×n} X_{J0}|`, one per row subset.
    pub ratios: Vec<TruncatedSeries>,
    /// `f_j⁰ = −Σ_J g_{j,J0}^J ∧X_J/∧X_{J0}`.
    pub f0: Vec<TruncatedSeries>,
    /// Largest coefficient gap between `f_j⁰` and `−Σ_s ĉ_{j,j_s}^s`.
    pub f0_trace_mismatch: f64,
    pub h_j: Vec<TruncatedSeries>,
    /// `f_j = f_j⁰ + h_j`.
    pub f: Vec<TruncatedSeries>,
    pub gtilde: Vec<GTildeEntry>,
    /// `ν(X_{j_1}, …, X_{j_n})(x0)`: the 2-norm of the minors.
    pub nu_at_x0: f64,
    /// For `n = N`: largest coefficient gap between `f_j` and `div X_j ∘ Φ`
    /// through degree `M − 1`.
    pub divergence_residual: Option<f64>,
    /// Residual and radius of the minor-ratio ODE.
    pub ratio_ode_residual: f64,
    pub ratio_ode_r_prime: f64,
    /// `g∘Φ`, filled by [`density_series`].
    pub g: Option<TruncatedSeries>,
    /// `h = (g∘Φ) h₀`, filled by [`density_series`].
    pub h: Option<TruncatedSeries>,
    /// `h` has the sign of `h(0)` on the sampled grid.
    pub sign_constant: Option<bool>,
    /// `max(h/h(0), h(0)/h)` over the sampled grid.
    pub ratio_bound: Option<f64>,
}

fn chart_system(chart: &AdaptedChart) -> Result<&FieldSystem> {
    chart.prepared.as_ref().ok_or_else(|| Error::Structure("chart carries no field system".to_string()))
}

/// `f_j⁰`, `h_j`, `f_j` and the `g̃` coefficients for the Lebesgue-induced
/// density on the orbit.
pub fn euclidean_density_data(chart: &AdaptedChart) -> Result<DensityData> {
    let sys = chart_system(chart)?;
    let x0 = sys.center();
    let (n, big_n) = (chart.n, sys.ambient_dim());
    let (m, r) = (chart.max_degree, chart.eta1);
    let phi = &chart.phi;
    let data = cramer_reduce(sys, &chart.j0, &chart.pivot_rows, Some(phi))?;

    // −f_j⁰ through the trace of the reduced structure
    let trace: Vec<TruncatedSeries> = (0..n)
        .map(|j| {
            let mut acc = TruncatedSeries::zero(n, m, r);
            for s in 0..n {
                acc.axpy(1.0, &data.chat(chart.j0[j], chart.j0[s], s).with_radius(r))?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let wedge = wedge_ratio_series_on(sys, &chart.j0, phi)?;
    let s = sys.structure().expect("prepared systems carry structure");
    let f0: Vec<TruncatedSeries> = (0..n)
        .map(|j| {
            let mut acc = TruncatedSeries::zero(n, m, r);
            for (k, g) in crate::fields::lie_derivative_of_wedge(s, chart.j0[j], &chart.j0) {
                let ratio = wedge.get(&k).expect("tuple present");
                acc.axpy(-1.0, &g.compose_at(x0, phi)?.mul(ratio)?)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let f0_trace_mismatch = f0
        .iter()
        .zip(&trace)
        .map(|(a, t)| a.add(t).map(|d| d.max_abs_coeff()))
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))?;

    let subsets = k_subsets(big_n, n);
    let idx = |k: &[usize]| subsets.iter().position(|u| u == k).expect("increasing subset");
    let ns = subsets.len();

    // ∂_l a_{J0[j]}^i ∘ Φ
    let mut dcomp: BTreeMap<(usize, usize, usize), TruncatedSeries> = BTreeMap::new();
    let mut partial = |j: usize, i: usize, l: usize| -> Result<TruncatedSeries> {
        if let Some(v) = dcomp.get(&(j, i, l)) {
            return Ok(v.clone());
        }
        let d = sys.field(chart.j0[j]).components()[i].differentiate(l).compose_at(x0, phi)?;
        dcomp.insert((j, i, l), d.clone());
        Ok(d)
    };

    let mut gtilde = Vec::new();
    let mut table = vec![TruncatedSeries::zero(n, m, r); n * ns * ns];
    for j in 0..n {
        for (ki, k) in subsets.iter().enumerate() {
            for slot in 0..n {
                for l in 0..big_n {
                    let mut replaced = k.clone();
                    replaced[slot] = l;
                    let Some((sign, sorted)) = sort_with_sign(&replaced) else { continue };
                    let d = partial(j, k[slot], l)?;
                    if d.is_zero() {
                        continue;
                    }
                    table[(j * ns + ki) * ns + idx(&sorted)].axpy(sign, &d)?;
                }
            }
            table[(j * ns + ki) * ns + ki].axpy(1.0, &trace[j])?;
        }
    }
    for j in 0..n {
        for ki in 0..ns {
            for li in 0..ns {
                let g = &table[(j * ns + ki) * ns + li];
                if !g.is_zero() {
                    gtilde.push(GTildeEntry { j, k: subsets[ki].clone(), l: subsets[li].clone(), series: g.clone() });
                }
            }
        }
    }

    // X_j G_K = Σ_L g̃_{j,K}^L G_L − (Σ_{L1,L2} g̃_{j,L1}^{L2} G_{L1} G_{L2}) G_K
    let mut terms = Vec::new();
    for e in &gtilde {
        let (ki, li) = (idx(&e.k), idx(&e.l));
        let mut alpha = vec![0u32; ns];
        alpha[li] = 1;
        terms.push(OdeTerm { alpha, j: e.j, l: ki, coeff: e.series.clone() });
        for target in 0..ns {
            let mut alpha = vec![0u32; ns];
            alpha[ki] += 1;
            alpha[li] += 1;
            alpha[target] += 1;
            terms.push(OdeTerm { alpha, j: e.j, l: target, coeff: e.series.neg() });
        }
    }
    let fields: Vec<&AnalyticVectorField> = chart.j0.iter().map(|&j| sys.field(j)).collect();
    let minors = wedge_minors(&fields, x0);
    let nu_at_x0 = linalg::norm2(&minors);
    if !(nu_at_x0 > 0.0) {
        return Err(Error::Rank("reference wedge vanishes at the base point".to_string()));
    }
    let problem = SeriesOdeProblem {
        n_vars: n,
        n_unknowns: ns,
        degree_bound: 3,
        terms,
        initial: minors.iter().map(|v| v / nu_at_x0).collect(),
        radius: r,
        max_degree: m,
    };
    let sol = solve_series_ode(&problem)?;
    let ratios: Vec<TruncatedSeries> = sol.f.iter().map(|s| s.with_radius(r)).collect();

    let mut h_j = vec![TruncatedSeries::zero(n, m, r); n];
    for e in &gtilde {
        let term = e.series.mul(&ratios[idx(&e.k)])?.mul(&ratios[idx(&e.l)])?;
        h_j[e.j].axpy(1.0, &term)?;
    }
    let f: Vec<TruncatedSeries> = f0.iter().zip(&h_j).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;

    let divergence_residual = if n == big_n {
        let mut worst = 0.0f64;
        for (j, fj) in f.iter().enumerate() {
            let div = sys.field(chart.j0[j]).divergence().compose_at(x0, phi)?;
            let top = m.saturating_sub(1);
            worst = worst.max(fj.truncate(top).max_abs_diff(&div.truncate(top)));
        }
        Some(worst)
    } else {
        None
    };

    Ok(DensityData {
        row_subsets: subsets,
        ratios,
        f0,
        f0_trace_mismatch,
        h_j,
        f,
        gtilde,
        nu_at_x0,
        divergence_residual,
        ratio_ode_residual: sol.residual,
        ratio_ode_r_prime: sol.r_prime,
        g: None,
        h: None,
        sign_constant: None,
        ratio_bound: None,
    })
}

/// Points per axis of the grid used for the sign and two-sided bound of `h`.
pub const DENSITY_GRID_POINTS: usize = 9;

/// `g∘Φ = ν(X_{J0})(x0) · exp(∫₀¹ Σ_j t_j h_j(εt) dε/ε)` and `h = (g∘Φ) h₀`,
/// with the sign and two-sided bound of `h/h(0)` sampled on `|t| ≤ η₁/2`.
pub fn density_series(chart: &AdaptedChart, dd: &DensityData) -> Result<DensityData> {
    let n = chart.n;
    let (m, r) = (chart.max_degree, chart.eta1);
    let mut linear = TruncatedSeries::zero(n, m, r);
    for (j, hj) in dd.h_j.iter().enumerate() {
        linear.axpy(1.0, &hj.multiply_by_variable(j))?;
    }
    let g = linear.radial_antiderivative()?.exp()?.scale(dd.nu_at_x0);
    let h = g.mul(&chart.h0)?;
    let h_at_0 = h.constant_term();
    let mut sign_constant = true;
    let mut bound = 1.0f64;
    for t in chart_grid(n, r / 2.0, DENSITY_GRID_POINTS) {
        let v = h.evaluate(&t)?;
        if v * h_at_0 <= 0.0 {
            sign_constant = false;
            continue;
        }
        let q = v / h_at_0;
        bound = bound.max(q).max(1.0 / q);
    }
    let mut out = dd.clone();
    out.g = Some(g);
    out.h = Some(h);
    out.sign_constant = Some(sign_constant);
    out.ratio_bound = if sign_constant { Some(bound) } else { None };
    Ok(out)
}
