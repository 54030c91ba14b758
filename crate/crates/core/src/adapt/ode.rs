//! Fixed-point solver for polynomial ODEs along rays,
//! `d/dε F_l(εt) = Σ_j Σ_α t_j a_{α,j,l}(εt) F(εt)^α`, `F_l(0) = F_{l,0}`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::series::TruncatedSeries;
use crate::{Error, Result};

/// One coefficient `a_{α,j,l}`; repeated keys are summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTerm {
    /// Exponent over the unknowns.
    pub alpha: Vec<u32>,
    /// Ray variable `t_j`.
    pub j: usize,
    /// Unknown receiving the term.
    pub l: usize,
    pub coeff: TruncatedSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesOdeProblem {
    pub n_vars: usize,
    pub n_unknowns: usize,
    /// `L`: largest allowed `|α|`.
    pub degree_bound: u32,
    pub terms: Vec<OdeTerm>,
    pub initial: Vec<f64>,
    /// Radius `r` of the coefficient series.
    pub radius: f64,
    pub max_degree: usize,
}

/// Output of [`solve_series_ode`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesOdeSolution {
    /// `F_l`, stored at radius `r'`.
    pub f: Vec<TruncatedSeries>,
    pub r_prime: f64,
    /// `max(|F_{l,0}|, ‖a_{α,j,l}‖_r)`.
    pub d: f64,
    pub iterations: usize,
    /// Largest coefficient of `Σ t_j ∂_j F − Σ t_j a F^α`.
    pub residual: f64,
    /// `max_l ‖F_l‖_{r'}`.
    pub max_norm: f64,
    /// `max_l ‖F_l‖_{r'} ≤ 2D`.
    pub bound_holds: bool,
}

const MAX_EXTRA_ITERATIONS: usize = 100;

impl SeriesOdeProblem {
    /// Summed coefficients per key `(α, j, l)`.
    fn merged(&self) -> Result<BTreeMap<(Vec<u32>, usize, usize), TruncatedSeries>> {
        let mut out: BTreeMap<(Vec<u32>, usize, usize), TruncatedSeries> = BTreeMap::new();
        for t in &self.terms {
            if t.alpha.len() != self.n_unknowns || t.j >= self.n_vars || t.l >= self.n_unknowns {
                return Err(Error::Structure(alloc::format!(
                    "ODE term (α = {:?}, j = {}, l = {}) is out of range",
                    t.alpha,
                    t.j,
                    t.l
                )));
            }
            if t.alpha.iter().sum::<u32>() > self.degree_bound {
                return Err(Error::Domain(alloc::format!("|α| exceeds the degree bound {}", self.degree_bound)));
            }
            if t.coeff.dim() != self.n_vars {
                return Err(Error::Structure("ODE coefficient lives in the wrong number of variables".into()));
            }
            let c = t.coeff.with_radius(self.radius).extend(self.max_degree).truncate(self.max_degree);
            match out.get_mut(&(t.alpha.clone(), t.j, t.l)) {
                Some(acc) => acc.axpy(1.0, &c)?,
                None => {
                    out.insert((t.alpha.clone(), t.j, t.l), c);
                }
            }
        }
        Ok(out)
    }

    /// The smallest admissible `D`.
    pub fn bound(&self) -> Result<f64> {
        let a = self.merged()?.values().map(|c| c.a_norm_at(self.radius)).fold(0.0, f64::max);
        Ok(self.initial.iter().map(|v| v.abs()).fold(a, f64::max))
    }

    /// `r' = min{r, D/(n 2^L (L+1)^N max(1,D)^{L+1}), 1/(n (L+1)^{N+1} max(1,D)^L 2^L)}`.
    pub fn r_prime(&self, d: f64) -> f64 {
        if d == 0.0 {
            return self.radius;
        }
        let n = self.n_vars as f64;
        let l = self.degree_bound as i32;
        let big_n = self.n_unknowns as i32;
        let m = d.max(1.0);
        let two_l = 2f64.powi(l);
        let lp1 = (l + 1) as f64;
        let a = d / (n * two_l * lp1.powi(big_n) * m.powi(l + 1));
        let b = 1.0 / (n * lp1.powi(big_n + 1) * m.powi(l) * two_l);
        self.radius.min(a).min(b)
    }
}

/// `Σ_j t_j Σ_α a_{α,j,l} F^α` for every `l`.
fn rhs(
    merged: &BTreeMap<(Vec<u32>, usize, usize), TruncatedSeries>,
    f: &[TruncatedSeries],
    n_vars: usize,
) -> Vec<TruncatedSeries> {
    let (m, r) = (f[0].max_degree(), f[0].radius());
    let mut powers: BTreeMap<Vec<u32>, TruncatedSeries> = BTreeMap::new();
    let mut out = vec![TruncatedSeries::zero(n_vars, m, r); f.len()];
    for ((alpha, j, l), a) in merged {
        if !powers.contains_key(alpha) {
            let mut p = TruncatedSeries::constant(n_vars, m, r, 1.0);
            for (u, &e) in alpha.iter().enumerate() {
                if e > 0 {
                    p = p.mul(&f[u].powi(e)).expect("same shape");
                }
            }
            powers.insert(alpha.clone(), p);
        }
        let term = a.mul(&powers[alpha]).expect("same shape").multiply_by_variable(*j);
        out[*l].axpy(1.0, &term).expect("same shape");
    }
    out
}

/// Picard iteration `F ← F₀ + ∫₀¹ (Σ t_j a F^α)(εt) dε/ε` in the series algebra.
///
/// Degree `k` of the right-hand side only depends on degrees `< k` of `F`, so
/// the iteration is exact after `M + 1` steps; the loop stops once the
/// coefficients no longer move.
pub fn solve_series_ode(p: &SeriesOdeProblem) -> Result<SeriesOdeSolution> {
    if p.initial.len() != p.n_unknowns || p.n_unknowns == 0 || p.n_vars == 0 {
        return Err(Error::Structure("ODE problem needs one initial value per unknown".into()));
    }
    if !(p.radius > 0.0 && p.radius.is_finite()) {
        return Err(Error::Domain(alloc::format!("radius must be positive, got {}", p.radius)));
    }
    let merged = p.merged()?;
    let d = p.bound()?;
    let (m, r) = (p.max_degree, p.radius);
    let f0: Vec<TruncatedSeries> = p.initial.iter().map(|&v| TruncatedSeries::constant(p.n_vars, m, r, v)).collect();
    let mut f = f0.clone();
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=m + 1 + MAX_EXTRA_ITERATIONS {
        let g = rhs(&merged, &f, p.n_vars);
        let next: Vec<TruncatedSeries> = g
            .iter()
            .zip(&f0)
            .map(|(gl, c)| gl.radial_antiderivative().and_then(|s| s.add(c)))
            .collect::<Result<_>>()?;
        let change = next.iter().zip(&f).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max);
        let scale = next.iter().map(|s| s.max_abs_coeff()).fold(1.0, f64::max);
        f = next;
        iterations = it;
        if !change.is_finite() {
            break;
        }
        if change <= 1e-15 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ContractionViolated { iterations, last_change: f64::NAN });
    }
    let g = rhs(&merged, &f, p.n_vars);
    let residual = f.iter().zip(&g).map(|(fl, gl)| fl.euler().max_abs_diff(gl)).fold(0.0, f64::max);
    let r_prime = p.r_prime(d);
    let f: Vec<TruncatedSeries> = f.into_iter().map(|s| s.with_radius(r_prime)).collect();
    let max_norm = f.iter().map(|s| s.a_norm()).fold(0.0, f64::max);
    Ok(SeriesOdeSolution {
        bound_holds: max_norm <= 2.0 * d * (1.0 + 1e-12),
        f,
        r_prime,
        d,
        iterations,
        residual,
        max_norm,
    })
}
