//! Taylor and numeric versions of the chart map `Φ(t) = exp(Σ t_i X_{J0[i]}) x0`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Flow, FlowOptions};
use crate::fields::{AnalyticVectorField, FieldSystem};
use crate::linalg::{self, Mat};
use crate::math::factorial;
use crate::series::{len_upto, monomials, rank, TruncatedSeries};
use crate::{Error, Result};

/// Charts whose Jacobian condition number exceeds this are rejected.
pub const CHART_COND_LIMIT: f64 = 1e10;

fn at_point(system: &FieldSystem, x0: &[f64]) -> Result<FieldSystem> {
    if x0.len() != system.ambient_dim() {
        return Err(Error::Structure("base point has the wrong dimension".into()));
    }
    if x0 == system.center() {
        Ok(system.clone())
    } else {
        system.recentered(x0)
    }
}

/// Degree-`max_degree` Taylor expansion of `Φ(t) = exp(Σ t_i X_{j0[i]}) x0`,
/// one series per ambient coordinate, in the variables `t ∈ ℝ^n`.
///
/// The coefficient of `t^β` with `|β| = m` is read off from
/// `(t·X)^m x_i` at `x0`, divided by `m!`. Exact through the requested degree
/// when the fields are polynomials of degree at most their truncation.
pub fn phi_taylor(
    system: &FieldSystem,
    j0: &[usize],
    x0: &[f64],
    max_degree: usize,
    radius: f64,
) -> Result<Vec<TruncatedSeries>> {
    let sys = at_point(system, x0)?;
    let n = j0.len();
    if n == 0 || j0.iter().any(|&j| j >= sys.q()) {
        return Err(Error::Structure(alloc::format!("invalid chart tuple {j0:?}")));
    }
    let dim = sys.ambient_dim();
    let size = len_upto(n, max_degree);
    let mons = monomials(n, max_degree);
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut coeffs = vec![0.0; size];
        coeffs[0] = x0[i];
        // current[rank(β)] = coefficient function of t^β in (t·X)^m x_i
        let mut current: Vec<Option<TruncatedSeries>> = vec![None; size];
        current[0] = Some(TruncatedSeries::variable(dim, max_degree, sys.radius(), i));
        let mut beta = vec![0u32; n];
        for m in 0..max_degree {
            let mut next: Vec<Option<TruncatedSeries>> = vec![None; size];
            for (k, slot) in current.iter().enumerate() {
                let Some(g) = slot else { continue };
                if g.max_degree() == 0 {
                    continue;
                }
                for (s, &j) in j0.iter().enumerate() {
                    let xg = sys.field(j).apply(g)?;
                    if xg.is_zero() {
                        continue;
                    }
                    beta.copy_from_slice(&mons[k * n..(k + 1) * n]);
                    beta[s] += 1;
                    let r = rank(&beta);
                    match &mut next[r] {
                        Some(acc) => acc.axpy(1.0, &xg)?,
                        e @ None => *e = Some(xg),
                    }
                }
            }
            let fact = factorial(m as u32 + 1);
            for (r, slot) in next.iter().enumerate() {
                if let Some(g) = slot {
                    coeffs[r] = g.constant_term() / fact;
                }
            }
            current = next;
        }
        out.push(TruncatedSeries::from_dense(n, max_degree, radius, coeffs));
    }
    Ok(out)
}

/// `Φ` evaluated by integrating the flow, with `dΦ(t)` from the variational equation.
#[derive(Debug, Clone)]
pub struct NumericChart {
    flow: Flow,
    j0: Vec<usize>,
    x0: Vec<f64>,
    q: usize,
    opts: FlowOptions,
}

impl NumericChart {
    pub fn new(system: &FieldSystem, j0: &[usize], x0: &[f64], opts: FlowOptions) -> Result<Self> {
        if x0.len() != system.ambient_dim() || j0.is_empty() || j0.iter().any(|&j| j >= system.q()) {
            return Err(Error::Structure("invalid chart data".into()));
        }
        let mut opts = opts;
        opts.param_jacobian = true;
        opts.jacobian = false;
        opts.record_trajectory = false;
        Ok(NumericChart { flow: Flow::new(system), j0: j0.to_vec(), x0: x0.to_vec(), q: system.q(), opts })
    }

    pub fn n(&self) -> usize {
        self.j0.len()
    }

    pub fn base_point(&self) -> &[f64] {
        &self.x0
    }

    /// `(Φ(t), dΦ(t))` with `dΦ` of shape `N × n`.
    pub fn eval(&self, t: &[f64]) -> Result<(Vec<f64>, Mat)> {
        if t.len() != self.n() {
            return Err(Error::Structure("chart point has the wrong dimension".into()));
        }
        let mut a = vec![0.0; self.q];
        for (&j, &ti) in self.j0.iter().zip(t) {
            a[j] += ti;
        }
        let res = self.flow.exp(&a, &self.x0, &self.opts)?;
        if !res.success {
            return Err(Error::Flow(alloc::format!("chart flow failed at t = {t:?}: {:?}", res.escape_reason)));
        }
        let s = res.param_jacobian.expect("requested");
        Ok((res.endpoint, s.select(&(0..s.rows).collect::<Vec<_>>(), &self.j0)))
    }

    /// Newton iteration for `Φ(t) = y` from `guess`.
    pub fn invert(&self, y: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let mut t = guess.to_vec();
        let scale = linalg::norm_inf(y).max(1.0);
        for _ in 0..30 {
            let (p, d) = self.eval(&t)?;
            let r: Vec<f64> = y.iter().zip(&p).map(|(a, b)| a - b).collect();
            let step = solve_tall(&d, &r).ok_or(Error::ChartDegeneracy(f64::INFINITY))?;
            for (ti, si) in t.iter_mut().zip(&step) {
                *ti += si;
            }
            if linalg::norm_inf(&step) <= 1e-12 * linalg::norm_inf(&t).max(1.0) && linalg::norm_inf(&r) <= 1e-9 * scale
            {
                return Ok(t);
            }
        }
        let (p, _) = self.eval(&t)?;
        let res = y.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if res <= 1e-8 * scale {
            Ok(t)
        } else {
            Err(Error::Convergence(alloc::format!("chart inversion residual {res}")))
        }
    }
}

// least-squares solve of a tall full-column-rank system
fn solve_tall(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    if a.rows == a.cols {
        return linalg::solve(a, b);
    }
    let at = a.transpose();
    linalg::solve(&at.matmul(a), &at.matvec(b))
}

/// `Y(t) = dΦ(t)^{-1} X(Φ(t))` at every grid point (a left inverse when the
/// chart is lower-dimensional).
pub fn pullback_numeric(chart: &NumericChart, field: &AnalyticVectorField, grid: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    grid.iter()
        .map(|t| {
            let (p, d) = chart.eval(t)?;
            let cond = linalg::condition_number(&d);
            if !(cond <= CHART_COND_LIMIT) {
                return Err(Error::ChartDegeneracy(cond));
            }
            solve_tall(&d, &field.evaluate(&p)).ok_or(Error::ChartDegeneracy(cond))
        })
        .collect()
}

/// Output of [`analytic_norms`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticNorms {
    /// `Σ_{m ≤ M} r^m/m! Σ_{|w| = m} max_samples |X^w f|` over ordered words `w`.
    pub nelson_partial: f64,
    /// `𝒜^{q,r}` norm of the degree-`M` Taylor expansion of `f ∘ exp(t·X) x0`.
    pub ax_norm: f64,
}

/// Partial Nelson norm over sampled points and the `𝒜_{X,x0,r}` norm of `f`,
/// a series in the ambient variables around the system center.
pub fn analytic_norms(
    f: &TruncatedSeries,
    system: &FieldSystem,
    x0: &[f64],
    r: f64,
    max_degree: usize,
    samples: &[Vec<f64>],
) -> Result<AnalyticNorms> {
    if f.dim() != system.ambient_dim() {
        return Err(Error::Structure("function and fields live in different dimensions".into()));
    }
    let center = system.center().to_vec();
    let sup = |g: &TruncatedSeries| {
        samples
            .iter()
            .map(|x| {
                let u: Vec<f64> = x.iter().zip(&center).map(|(a, c)| a - c).collect();
                g.eval_unchecked(&u).abs()
            })
            .fold(0.0, f64::max)
    };
    let mut level = vec![f.clone()];
    let mut nelson = sup(f);
    let mut rm = 1.0;
    for m in 1..=max_degree {
        let mut next = Vec::with_capacity(level.len() * system.q());
        for g in &level {
            for j in 0..system.q() {
                next.push(system.field(j).apply(g)?);
            }
        }
        rm *= r;
        nelson += rm / factorial(m as u32) * next.iter().map(&sup).sum::<f64>();
        level = next;
        if level.iter().all(TruncatedSeries::is_zero) {
            break;
        }
    }

    let all: Vec<usize> = (0..system.q()).collect();
    let phi = phi_taylor(system, &all, x0, max_degree, r)?;
    let shift: Vec<f64> = x0.iter().zip(&center).map(|(a, c)| a - c).collect();
    let f_at = f.recenter(&shift)?.extend(max_degree);
    let ax_norm = f_at.compose_at(x0, &phi)?.a_norm_at(r);
    Ok(AnalyticNorms { nelson_partial: nelson, ax_norm })
}
