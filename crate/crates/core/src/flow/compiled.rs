//! Field systems flattened into monomial term lists for fast pointwise evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::fields::FieldSystem;
use crate::series::TruncatedSeries;

/// Sparse polynomial in `u = x − center` with plain coefficients.
#[derive(Debug, Clone)]
struct Poly {
    coeffs: Vec<f64>,
    exps: Vec<u32>,
}

impl Poly {
    fn from_series(s: &TruncatedSeries) -> Self {
        let mut coeffs = Vec::new();
        let mut exps = Vec::new();
        for (alpha, p) in s.iter_taylor() {
            if p != 0.0 {
                coeffs.push(p);
                exps.extend_from_slice(&alpha);
            }
        }
        Poly { coeffs, exps }
    }

    fn eval(&self, n: usize, stride: usize, pw: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (t, &c) in self.coeffs.iter().enumerate() {
            let e = &self.exps[t * n..(t + 1) * n];
            let mut v = c;
            for (k, &ek) in e.iter().enumerate() {
                if ek > 0 {
                    v *= pw[k * stride + ek as usize];
                }
            }
            acc += v;
        }
        acc
    }
}

/// Pointwise evaluator for `Σ_j a_j X_j` and its Jacobian.
#[derive(Debug, Clone)]
pub struct CompiledSystem {
    dim: usize,
    q: usize,
    center: Vec<f64>,
    stride: usize,
    /// `[field][component]`
    comps: Vec<Vec<Poly>>,
    /// `[field][component * dim + var]`
    derivs: Vec<Vec<Poly>>,
}

impl CompiledSystem {
    pub fn new(system: &FieldSystem) -> Self {
        let dim = system.ambient_dim();
        let mut comps = Vec::with_capacity(system.q());
        let mut derivs = Vec::with_capacity(system.q());
        for wf in system.fields() {
            let c = wf.field.components();
            comps.push(c.iter().map(Poly::from_series).collect());
            let mut d = Vec::with_capacity(dim * dim);
            for comp in c {
                for k in 0..dim {
                    d.push(Poly::from_series(&comp.differentiate(k)));
                }
            }
            derivs.push(d);
        }
        CompiledSystem {
            dim,
            q: system.q(),
            center: system.center().to_vec(),
            stride: system.max_degree() + 1,
            comps,
            derivs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> usize {
        self.q
    }

    fn powers(&self, x: &[f64], pw: &mut Vec<f64>) {
        pw.clear();
        pw.resize(self.dim * self.stride, 1.0);
        for k in 0..self.dim {
            let u = x[k] - self.center[k];
            for e in 1..self.stride {
                pw[k * self.stride + e] = pw[k * self.stride + e - 1] * u;
            }
        }
    }

    /// `out = Σ_j a_j X_j(x)`.
    pub fn vector(&self, a: &[f64], x: &[f64], out: &mut [f64], pw: &mut Vec<f64>) {
        self.powers(x, pw);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            for (i, p) in self.comps[j].iter().enumerate() {
                out[i] += aj * p.eval(self.dim, self.stride, pw);
            }
        }
    }

    /// All field values at `x`, `out[j * dim + i] = X_j^i(x)`.
    pub fn fields_at(&self, x: &[f64], out: &mut [f64], pw: &mut Vec<f64>) {
        self.powers(x, pw);
        for j in 0..self.q {
            for (i, p) in self.comps[j].iter().enumerate() {
                out[j * self.dim + i] = p.eval(self.dim, self.stride, pw);
            }
        }
    }

    /// Row-major Jacobian of `Σ_j a_j X_j` at `x`; assumes [`Self::vector`]
    /// or [`Self::fields_at`] filled `pw` for the same `x`.
    pub fn jacobian_cached(&self, a: &[f64], out: &mut [f64], pw: &[f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            for (slot, p) in self.derivs[j].iter().enumerate() {
                out[slot] += aj * p.eval(self.dim, self.stride, pw);
            }
        }
    }

    pub fn vector_alloc(&self, a: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut pw = Vec::new();
        self.vector(a, x, &mut out, &mut pw);
        out
    }
}
