use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{degree_add, degree_le, FieldSystem};
use crate::linalg::{self, Mat};
use crate::series::{len_upto, monomials, SeriesMatrix, TruncatedSeries};
use crate::{Error, Result};

/// Coefficients `c_{j,k}^l` with `[X_j, X_k] = Σ_l c_{j,k}^l X_l`, as series
/// around the system center.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureCoefficients {
    q: usize,
    coeffs: Vec<TruncatedSeries>,
    /// Largest relative residual of the relation on the fitting grid.
    pub max_residual: f64,
    /// Largest relative residual on a disjoint verification grid.
    pub verify_residual: f64,
    /// Whether the sum was restricted to `d_l ≤ d_j + d_k`.
    pub degree_filtered: bool,
}

impl StructureCoefficients {
    /// From a dense `q³` list indexed `(j·q + k)·q + l`.
    pub fn new(q: usize, coeffs: Vec<TruncatedSeries>) -> Result<Self> {
        if coeffs.len() != q * q * q {
            return Err(Error::Structure(alloc::format!("{} structure coefficients for q = {q}", coeffs.len())));
        }
        Ok(StructureCoefficients { q, coeffs, max_residual: 0.0, verify_residual: 0.0, degree_filtered: false })
    }

    /// Constant coefficients given as `(j, k, l, value)`; antisymmetry is filled in.
    pub fn from_constants(
        q: usize,
        dim: usize,
        max_degree: usize,
        radius: f64,
        entries: &[(usize, usize, usize, f64)],
    ) -> Self {
        let mut coeffs = vec![TruncatedSeries::zero(dim, max_degree, radius); q * q * q];
        for &(j, k, l, v) in entries {
            coeffs[(j * q + k) * q + l] = TruncatedSeries::constant(dim, max_degree, radius, v);
            coeffs[(k * q + j) * q + l] = TruncatedSeries::constant(dim, max_degree, radius, -v);
        }
        StructureCoefficients { q, coeffs, max_residual: 0.0, verify_residual: 0.0, degree_filtered: false }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, j: usize, k: usize, l: usize) -> &TruncatedSeries {
        &self.coeffs[(j * self.q + k) * self.q + l]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.max_abs_coeff()))
    }

    pub(crate) fn recentered(&self, shift: &[f64]) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|c| c.recenter(shift)).collect::<Result<Vec<_>>>()?;
        Ok(StructureCoefficients { coeffs, ..self.clone() })
    }

    pub(crate) fn rescaled(&self, factors: &[f64]) -> Self {
        let q = self.q;
        let mut coeffs = self.coeffs.clone();
        for j in 0..q {
            for k in 0..q {
                for l in 0..q {
                    let idx = (j * q + k) * q + l;
                    coeffs[idx] = coeffs[idx].scale(factors[j] * factors[k] / factors[l]);
                }
            }
        }
        StructureCoefficients { coeffs, ..self.clone() }
    }

    pub(crate) fn truncate(&self, m: usize) -> Self {
        StructureCoefficients { coeffs: self.coeffs.iter().map(|c| c.truncate(m)).collect(), ..self.clone() }
    }

    /// `max |[X_j,X_k](x) − Σ_l c_{j,k}^l(x) X_l(x)|` over the points, relative
    /// to `max(1, |[X_j,X_k](x)|)`.
    pub fn relation_residual(&self, system: &FieldSystem, points: &[Vec<f64>]) -> Result<f64> {
        let q = self.q;
        let mut brackets = Vec::new();
        for j in 0..q {
            for k in 0..q {
                brackets.push(system.field(j).lie_bracket(system.field(k))?);
            }
        }
        let center = system.center();
        let mut worst = 0.0f64;
        for x in points {
            let u: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
            let vals: Vec<Vec<f64>> = (0..q).map(|l| system.field(l).evaluate(x)).collect();
            for j in 0..q {
                for k in 0..q {
                    let b = brackets[j * q + k].evaluate(x);
                    let mut r = b.clone();
                    for l in 0..q {
                        let c = self.get(j, k, l).eval_unchecked(&u);
                        for (ri, vi) in r.iter_mut().zip(&vals[l]) {
                            *ri -= c * vi;
                        }
                    }
                    worst = worst.max(linalg::norm_inf(&r) / linalg::norm_inf(&b).max(1.0));
                }
            }
        }
        Ok(worst)
    }
}

/// Options for [`fit_structure_coeffs`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Lower corner of the sampling box (absolute coordinates).
    pub box_lo: Vec<f64>,
    /// Upper corner of the sampling box.
    pub box_hi: Vec<f64>,
    pub poly_degree: usize,
    /// Restrict `Σ_l` to `d_l ≤ d_j + d_k`.
    pub degree_filter: bool,
    /// Acceptance threshold for the relative residual.
    pub tol: f64,
    pub ridge: f64,
}

impl FitOptions {
    /// Box `center ± half_width` in every coordinate.
    pub fn around(center: &[f64], half_width: f64, poly_degree: usize) -> Self {
        FitOptions {
            box_lo: center.iter().map(|c| c - half_width).collect(),
            box_hi: center.iter().map(|c| c + half_width).collect(),
            poly_degree,
            degree_filter: false,
            tol: 1e-6,
            ridge: 1e-12,
        }
    }
}

const MAX_GRID_POINTS: usize = 10_000;

fn tensor_grid(lo: &[f64], hi: &[f64], per_axis: usize, midpoints: bool) -> Vec<Vec<f64>> {
    let n = lo.len();
    let count = if midpoints { per_axis - 1 } else { per_axis };
    let coord = |i: usize, k: usize| {
        let s = if midpoints { (k as f64 + 0.5) / (per_axis - 1) as f64 } else { k as f64 / (per_axis - 1) as f64 };
        lo[i] + (hi[i] - lo[i]) * s
    };
    let total = count.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|i| {
                    let k = idx % count;
                    idx /= count;
                    coord(i, k)
                })
                .collect()
        })
        .collect()
}

/// Least-squares polynomial structure coefficients on a tensor grid.
///
/// For every pair `(j, k)` the coefficients `c_{j,k}^l` are polynomials of
/// degree `≤ poly_degree` in the offset from the system center, fitted so that
/// `[X_j, X_k] ≈ Σ_l c_{j,k}^l X_l` at `(poly_degree + 2)^N` grid points
/// (capped at `10⁴`). The relation is then re-checked on the midpoints grid.
pub fn fit_structure_coeffs(system: &FieldSystem, opts: &FitOptions) -> Result<StructureCoefficients> {
    let q = system.q();
    let n_amb = system.ambient_dim();
    if opts.box_lo.len() != n_amb || opts.box_hi.len() != n_amb {
        return Err(Error::Structure("sampling box has the wrong dimension".to_string()));
    }
    if opts.box_lo.iter().zip(&opts.box_hi).any(|(a, b)| !(b > a)) {
        return Err(Error::Domain("sampling box is empty".to_string()));
    }
    let cap = (MAX_GRID_POINTS as f64).powf(1.0 / n_amb as f64).floor() as usize;
    let per_axis = (opts.poly_degree + 2).min(cap).max(2);
    let points = tensor_grid(&opts.box_lo, &opts.box_hi, per_axis, false);
    let check_points = tensor_grid(&opts.box_lo, &opts.box_hi, per_axis, true);

    let center = system.center().to_vec();
    let h: Vec<f64> = (0..n_amb)
        .map(|i| (opts.box_hi[i] - center[i]).abs().max((opts.box_lo[i] - center[i]).abs()).max(1e-300))
        .collect();
    let p = opts.poly_degree;
    let mons = monomials(n_amb, p);
    let n_mon = len_upto(n_amb, p);

    // scaled monomial values at every point
    let mono_vals: Vec<Vec<f64>> = points
        .iter()
        .map(|x| {
            let u: Vec<f64> = (0..n_amb).map(|i| (x[i] - center[i]) / h[i]).collect();
            (0..n_mon).map(|m| (0..n_amb).map(|i| u[i].powi(mons[m * n_amb + i] as i32)).product()).collect()
        })
        .collect();
    let field_vals: Vec<Vec<Vec<f64>>> =
        points.iter().map(|x| (0..q).map(|l| system.field(l).evaluate(x)).collect()).collect();

    let mut brackets = Vec::with_capacity(q * q);
    for j in 0..q {
        for k in 0..q {
            brackets.push(if j < k { Some(system.field(j).lie_bracket(system.field(k))?) } else { None });
        }
    }

    let (dim, m, r) = (n_amb, system.max_degree(), system.radius());
    let mut coeffs = vec![TruncatedSeries::zero(dim, m, r); q * q * q];

    // pairs sharing an allowed set share one design matrix
    let mut groups: Vec<(Vec<usize>, Vec<(usize, usize)>)> = Vec::new();
    for j in 0..q {
        for k in j + 1..q {
            let allowed: Vec<usize> = (0..q)
                .filter(|&l| {
                    !opts.degree_filter || degree_le(system.degree(l), &degree_add(system.degree(j), system.degree(k)))
                })
                .collect();
            match groups.iter_mut().find(|(a, _)| *a == allowed) {
                Some((_, pairs)) => pairs.push((j, k)),
                None => groups.push((allowed, vec![(j, k)])),
            }
        }
    }

    for (allowed, pairs) in &groups {
        if allowed.is_empty() {
            continue;
        }
        let rows = points.len() * n_amb;
        let cols = allowed.len() * n_mon;
        let mut design = Mat::zeros(rows, cols);
        for (pi, _) in points.iter().enumerate() {
            for comp in 0..n_amb {
                let row = pi * n_amb + comp;
                for (a, &l) in allowed.iter().enumerate() {
                    let xl = field_vals[pi][l][comp];
                    if xl == 0.0 {
                        continue;
                    }
                    for mi in 0..n_mon {
                        design.set(row, a * n_mon + mi, mono_vals[pi][mi] * xl);
                    }
                }
            }
        }
        let mut rhs = Mat::zeros(rows, pairs.len());
        for (c, &(j, k)) in pairs.iter().enumerate() {
            let b = brackets[j * q + k].as_ref().expect("j < k");
            for (pi, x) in points.iter().enumerate() {
                for (comp, v) in b.evaluate(x).into_iter().enumerate() {
                    rhs.set(pi * n_amb + comp, c, v);
                }
            }
        }
        let sol = linalg::least_squares(&design, &rhs, opts.ridge)
            .ok_or_else(|| Error::FiniteGeneration { residual: f64::INFINITY, tol: opts.tol })?;
        for (c, &(j, k)) in pairs.iter().enumerate() {
            for (a, &l) in allowed.iter().enumerate() {
                let mut dense = vec![0.0; len_upto(dim, m)];
                let mut any = false;
                for mi in 0..n_mon {
                    let alpha = &mons[mi * n_amb..(mi + 1) * n_amb];
                    let deg: u32 = alpha.iter().sum();
                    if deg as usize > m {
                        continue;
                    }
                    let scale: f64 = (0..n_amb).map(|i| h[i].powi(alpha[i] as i32)).product();
                    let v = sol.get(a * n_mon + mi, c) / scale;
                    if v != 0.0 {
                        any = true;
                    }
                    dense[crate::series::rank(alpha)] = v;
                }
                if any {
                    let s = TruncatedSeries::from_dense(dim, m, r, dense);
                    coeffs[(k * q + j) * q + l] = s.neg();
                    coeffs[(j * q + k) * q + l] = s;
                }
            }
        }
    }

    let mut out = StructureCoefficients::new(q, coeffs)?;
    out.degree_filtered = opts.degree_filter;
    out.max_residual = out.relation_residual(system, &points)?;
    out.verify_residual = out.relation_residual(system, &check_points)?;
    let worst = out.max_residual.max(out.verify_residual);
    if !(worst <= opts.tol) {
        return Err(Error::FiniteGeneration { residual: worst, tol: opts.tol });
    }
    Ok(out)
}

/// Coefficients of the reduction to a reference basis `X_{J0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CramerData {
    pub j0: Vec<usize>,
    pub pivot_rows: Vec<usize>,
    q: usize,
    /// `b̃_k^l`, index `k·n + l`.
    btilde: Vec<TruncatedSeries>,
    /// `ĉ_{i,j}^l = Σ_k c_{i,j}^k b̃_k^l`, index `(i·q + j)·n + l`.
    chat: Vec<TruncatedSeries>,
    /// True when the series were composed with a chart map.
    pub composed: bool,
}

impl CramerData {
    pub fn n(&self) -> usize {
        self.j0.len()
    }

    pub fn btilde(&self, k: usize, l: usize) -> &TruncatedSeries {
        &self.btilde[k * self.n() + l]
    }

    pub fn chat(&self, i: usize, j: usize, l: usize) -> &TruncatedSeries {
        &self.chat[(i * self.q + j) * self.n() + l]
    }
}

/// Minor series `det(X_{tuple})` on the rows `rows`, as a series around the center.
pub(crate) fn minor_series(system: &FieldSystem, tuple: &[usize], rows: &[usize]) -> Result<TruncatedSeries> {
    let n = tuple.len();
    let mut entries = Vec::with_capacity(n * n);
    for &row in rows {
        for &j in tuple {
            entries.push(system.field(j).components()[row].clone());
        }
    }
    SeriesMatrix::new(n, n, entries)?.det()
}

/// `b̃_k^l = ∧X_{J(l,k)} / ∧X_{J0}` through the pivot minor, and
/// `ĉ_{i,j}^l = Σ_k c_{i,j}^k b̃_k^l`; optionally composed with `Φ`
/// (`phi` holds `Φ_i`, each with constant term equal to the center).
pub fn cramer_reduce(
    system: &FieldSystem,
    j0: &[usize],
    pivot_rows: &[usize],
    phi: Option<&[TruncatedSeries]>,
) -> Result<CramerData> {
    let s = system.structure().ok_or_else(|| Error::Structure("structure coefficients are required".to_string()))?;
    let q = system.q();
    let n = j0.len();
    let pivot = minor_series(system, j0, pivot_rows)?;
    if pivot.constant_term().abs() <= 1e-14 * pivot.max_abs_coeff().max(1e-300) || pivot.constant_term() == 0.0 {
        return Err(Error::Rank(alloc::format!("reference tuple {j0:?} is degenerate at the center")));
    }
    let inv = pivot.reciprocal()?;
    let (dim, m, r) = (system.ambient_dim(), system.max_degree(), system.radius());
    let mut btilde = Vec::with_capacity(q * n);
    for k in 0..q {
        for l in 0..n {
            if let Some(pos) = j0.iter().position(|&x| x == k) {
                btilde.push(TruncatedSeries::constant(dim, m, r, if pos == l { 1.0 } else { 0.0 }));
                continue;
            }
            let mut tuple = j0.to_vec();
            tuple[l] = k;
            btilde.push(minor_series(system, &tuple, pivot_rows)?.mul(&inv)?);
        }
    }
    let mut chat = Vec::with_capacity(q * q * n);
    for i in 0..q {
        for j in 0..q {
            for l in 0..n {
                let mut acc = TruncatedSeries::zero(dim, m, r);
                for k in 0..q {
                    let c = s.get(i, j, k);
                    if !c.is_zero() {
                        acc.axpy(1.0, &c.mul(&btilde[k * n + l])?)?;
                    }
                }
                chat.push(acc);
            }
        }
    }
    let mut data = CramerData { j0: j0.to_vec(), pivot_rows: pivot_rows.to_vec(), q, btilde, chat, composed: false };
    if let Some(phi) = phi {
        let center = system.center();
        data.btilde = data.btilde.iter().map(|b| b.compose_at(center, phi)).collect::<Result<_>>()?;
        data.chat = data.chat.iter().map(|c| c.compose_at(center, phi)).collect::<Result<_>>()?;
        data.composed = true;
    }
    Ok(data)
}

/// `max |Σ_l b̃_k^l(x) X_{J0[l]}(x) − X_k(x)|` over the points, for ambient (uncomposed) data.
pub fn verify_cramer(system: &FieldSystem, data: &CramerData, points: &[Vec<f64>]) -> f64 {
    let n = data.n();
    let center = system.center();
    let mut worst = 0.0f64;
    for x in points {
        let u: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
        let basis: Vec<Vec<f64>> = data.j0.iter().map(|&j| system.field(j).evaluate(x)).collect();
        for k in 0..system.q() {
            let mut v = system.field(k).evaluate(x);
            for l in 0..n {
                let b = data.btilde(k, l).eval_unchecked(&u);
                for (vi, bi) in v.iter_mut().zip(&basis[l]) {
                    *vi -= b * bi;
                }
            }
            worst = worst.max(linalg::norm_inf(&v));
        }
    }
    worst
}
