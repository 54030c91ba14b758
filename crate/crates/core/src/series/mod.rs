//! Truncated multivariate power series.
//!
//! A [`TruncatedSeries`] represents `f(t) = Σ_{|α| ≤ M} c_α/α! · t^α` in `n`
//! variables together with a radius `r`. The weighted norm
//! `‖f‖ = Σ |c_α|/α! · r^{|α|}` makes the space a Banach algebra.
//!
//! Storage is dense in graded order and holds the plain Taylor coefficients
//! `p_α = c_α/α!`; [`TruncatedSeries::coeff`] converts back to `c_α`.

mod index;
mod matrix;

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use index::MultiIndex;
pub use matrix::SeriesMatrix;

pub(crate) use index::{alpha_factorial, len_upto, monomials, offset, rank};

use crate::{Error, Result};

/// Default truncation degree.
pub const DEFAULT_MAX_DEGREE: usize = 8;

const RADIUS_RTOL: f64 = 1e-12;

/// Multivariate power series truncated at total degree `max_degree`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SeriesRepr", try_from = "SeriesRepr")]
pub struct TruncatedSeries {
    dim: usize,
    max_degree: usize,
    radius: f64,
    coeffs: Vec<f64>,
}

/// One stored term, `c_α` in the α!-normalised convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesRepr {
    dim: usize,
    max_degree: usize,
    radius: f64,
    terms: Vec<Term>,
}

impl From<TruncatedSeries> for SeriesRepr {
    fn from(s: TruncatedSeries) -> Self {
        SeriesRepr { dim: s.dim, max_degree: s.max_degree, radius: s.radius, terms: s.terms() }
    }
}

impl TryFrom<SeriesRepr> for TruncatedSeries {
    type Error = Error;
    fn try_from(r: SeriesRepr) -> Result<Self> {
        TruncatedSeries::from_terms(
            r.dim,
            r.max_degree,
            r.radius,
            r.terms.iter().map(|t| (t.exponents.as_slice(), t.coeff)),
        )
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedSeries(n={}, M={}, r={}; ", self.dim, self.max_degree, self.radius)?;
        let mut first = true;
        for (alpha, p) in self.iter_taylor() {
            if p == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{p}·t^{alpha:?}")?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(alloc::format!("radius must be positive and finite, got {r}")))
    }
}

impl TruncatedSeries {
    /// The zero series.
    pub fn zero(dim: usize, max_degree: usize, radius: f64) -> Self {
        assert!(dim >= 1, "series need at least one variable");
        assert!(radius > 0.0 && radius.is_finite(), "radius must be positive");
        TruncatedSeries { dim, max_degree, radius, coeffs: vec![0.0; len_upto(dim, max_degree)] }
    }

    pub fn constant(dim: usize, max_degree: usize, radius: f64, value: f64) -> Self {
        let mut s = Self::zero(dim, max_degree, radius);
        s.coeffs[0] = value;
        s
    }

    /// The coordinate function `t_j` (0-based `j`).
    pub fn variable(dim: usize, max_degree: usize, radius: f64, j: usize) -> Self {
        assert!(j < dim);
        let mut s = Self::zero(dim, max_degree, radius);
        if max_degree >= 1 {
            s.coeffs[1 + j] = 1.0;
        }
        s
    }

    /// Build from `(α, c_α)` pairs in the α!-normalised convention. Terms of
    /// degree above `max_degree` are dropped; repeated keys add up.
    pub fn from_terms<'a, I>(dim: usize, max_degree: usize, radius: f64, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [u32], f64)>,
    {
        Self::build(dim, max_degree, radius, terms, true)
    }

    /// Build from `(α, p_α)` pairs of plain Taylor coefficients.
    pub fn from_taylor_terms<'a, I>(dim: usize, max_degree: usize, radius: f64, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [u32], f64)>,
    {
        Self::build(dim, max_degree, radius, terms, false)
    }

    fn build<'a, I>(dim: usize, max_degree: usize, radius: f64, terms: I, normalised: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [u32], f64)>,
    {
        if dim == 0 {
            return Err(Error::Structure("series need at least one variable".to_string()));
        }
        check_radius(radius)?;
        let mut s = Self::zero(dim, max_degree, radius);
        for (alpha, c) in terms {
            if alpha.len() != dim {
                return Err(Error::Structure(alloc::format!(
                    "exponent vector of length {} in a {}-variable series",
                    alpha.len(),
                    dim
                )));
            }
            if !c.is_finite() {
                return Err(Error::Domain("non-finite coefficient".to_string()));
            }
            let d: u32 = alpha.iter().sum();
            if d as usize > max_degree {
                continue;
            }
            let p = if normalised { c / alpha_factorial(alpha) } else { c };
            s.coeffs[rank(alpha)] += p;
        }
        Ok(s)
    }

    /// Build directly from dense plain coefficients in graded order.
    pub(crate) fn from_dense(dim: usize, max_degree: usize, radius: f64, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), len_upto(dim, max_degree));
        TruncatedSeries { dim, max_degree, radius, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Same coefficients, new radius.
    pub fn with_radius(&self, radius: f64) -> Self {
        assert!(radius > 0.0 && radius.is_finite(), "radius must be positive");
        TruncatedSeries { radius, ..self.clone() }
    }

    pub(crate) fn dense(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn dense_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// `c_α` in the α!-normalised convention.
    pub fn coeff(&self, alpha: &[u32]) -> f64 {
        self.taylor_coeff(alpha) * alpha_factorial(alpha)
    }

    /// Plain Taylor coefficient `p_α = c_α/α!`.
    pub fn taylor_coeff(&self, alpha: &[u32]) -> f64 {
        assert_eq!(alpha.len(), self.dim);
        let d: u32 = alpha.iter().sum();
        if d as usize > self.max_degree {
            return 0.0;
        }
        self.coeffs[rank(alpha)]
    }

    pub fn set_taylor_coeff(&mut self, alpha: &[u32], value: f64) {
        let d: u32 = alpha.iter().sum();
        if d as usize <= self.max_degree {
            let k = rank(alpha);
            self.coeffs[k] = value;
        }
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    /// Iterate `(α, p_α)` over every stored slot in graded order.
    pub fn iter_taylor(&self) -> impl Iterator<Item = (Vec<u32>, f64)> + '_ {
        let mons = monomials(self.dim, self.max_degree);
        let n = self.dim;
        (0..self.coeffs.len()).map(move |k| (mons[k * n..(k + 1) * n].to_vec(), self.coeffs[k]))
    }

    /// Nonzero terms as `(α, c_α)`.
    pub fn terms(&self) -> Vec<Term> {
        let n = self.dim;
        let mons = monomials(n, self.max_degree);
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(k, &p)| {
                let alpha = mons[k * n..(k + 1) * n].to_vec();
                let coeff = p * alpha_factorial(&alpha);
                Term { exponents: alpha, coeff }
            })
            .collect()
    }

    /// Weighted norm `Σ |c_α|/α! r^{|α|}` at the stored radius.
    pub fn a_norm(&self) -> f64 {
        self.a_norm_at(self.radius)
    }

    /// Weighted norm at radius `r`.
    pub fn a_norm_at(&self, r: f64) -> f64 {
        let n = self.dim;
        let mut total = 0.0;
        let mut rk = 1.0;
        for d in 0..=self.max_degree {
            let lo = offset(n, d);
            let hi = offset(n, d + 1);
            let s: f64 = self.coeffs[lo..hi].iter().map(|p| p.abs()).sum();
            total += s * rk;
            rk *= r;
        }
        total
    }

    /// Norm of the homogeneous part of degree `d` (without the `r^d` weight).
    pub fn degree_abs_sum(&self, d: usize) -> f64 {
        if d > self.max_degree {
            return 0.0;
        }
        self.coeffs[offset(self.dim, d)..offset(self.dim, d + 1)].iter().map(|p| p.abs()).sum()
    }

    /// Largest coefficient difference in the plain Taylor convention, over the
    /// common truncation.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        let m = self.max_degree.min(other.max_degree);
        let len = len_upto(self.dim, m);
        self.coeffs[..len].iter().zip(&other.coeffs[..len]).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, p| m.max(p.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&p| p == 0.0)
    }

    /// Drop terms above degree `m`.
    pub fn truncate(&self, m: usize) -> Self {
        let m = m.min(self.max_degree);
        let len = len_upto(self.dim, m);
        TruncatedSeries { dim: self.dim, max_degree: m, radius: self.radius, coeffs: self.coeffs[..len].to_vec() }
    }

    /// Pad with zeros up to degree `m ≥ max_degree`.
    pub fn extend(&self, m: usize) -> Self {
        if m <= self.max_degree {
            return self.truncate(m);
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len_upto(self.dim, m), 0.0);
        TruncatedSeries { dim: self.dim, max_degree: m, radius: self.radius, coeffs }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Structure(alloc::format!("dimension mismatch: {} vs {}", self.dim, other.dim)));
        }
        let scale = self.radius.max(other.radius);
        if (self.radius - other.radius).abs() > RADIUS_RTOL * scale {
            return Err(Error::Structure(alloc::format!("radius mismatch: {} vs {}", self.radius, other.radius)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let m = self.max_degree.min(other.max_degree);
        let len = len_upto(self.dim, m);
        let coeffs = self.coeffs[..len].iter().zip(&other.coeffs[..len]).map(|(a, b)| a + b).collect();
        Ok(Self::from_dense(self.dim, m, self.radius, coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let m = self.max_degree.min(other.max_degree);
        let len = len_upto(self.dim, m);
        let coeffs = self.coeffs[..len].iter().zip(&other.coeffs[..len]).map(|(a, b)| a - b).collect();
        Ok(Self::from_dense(self.dim, m, self.radius, coeffs))
    }

    /// `self += k · other` in place (same truncation required).
    pub fn axpy(&mut self, k: f64, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        let len = len_upto(self.dim, self.max_degree.min(other.max_degree));
        for (a, b) in self.coeffs[..len].iter_mut().zip(&other.coeffs[..len]) {
            *a += k * b;
        }
        Ok(())
    }

    pub fn scale(&self, k: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|p| p * k).collect();
        Self::from_dense(self.dim, self.max_degree, self.radius, coeffs)
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.dim;
        let m = self.max_degree.min(other.max_degree);
        let len = len_upto(n, m);
        let mut out = vec![0.0; len];
        let mons = monomials(n, m);
        let mut sum = vec![0u32; n];
        for da in 0..=m {
            for ia in offset(n, da)..offset(n, da + 1) {
                let pa = self.coeffs[ia];
                if pa == 0.0 {
                    continue;
                }
                let a = &mons[ia * n..(ia + 1) * n];
                for ib in 0..len_upto(n, m - da) {
                    let pb = other.coeffs[ib];
                    if pb == 0.0 {
                        continue;
                    }
                    let b = &mons[ib * n..(ib + 1) * n];
                    for i in 0..n {
                        sum[i] = a[i] + b[i];
                    }
                    out[rank(&sum)] += pa * pb;
                }
            }
        }
        Self::from_dense(n, m, self.radius, out)
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.dim, self.max_degree, self.radius, 1.0);
        for _ in 0..k {
            acc = acc.mul_unchecked(self);
        }
        acc
    }

    /// `f(s t)`: coefficient at `α` multiplied by `s^{|α|}`.
    pub fn scale_argument(&self, s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(alloc::format!("argument scale {s} outside [0, 1]")));
        }
        Ok(self.scale_argument_unchecked(s))
    }

    pub(crate) fn scale_argument_unchecked(&self, s: f64) -> Self {
        let mut out = self.clone();
        let mut sk = 1.0;
        for d in 0..=self.max_degree {
            for p in &mut out.coeffs[offset(self.dim, d)..offset(self.dim, d + 1)] {
                *p *= sk;
            }
            sk *= s;
        }
        out
    }

    /// `∫₀¹ f(s t) ds`: degree-`k` part divided by `k + 1`.
    pub fn ray_average(&self) -> Self {
        self.map_by_degree(|d, p| p / (d as f64 + 1.0))
    }

    /// Inverse of the Euler operator on series without constant term: the
    /// degree-`k` part is divided by `k`. This is `∫₀¹ f(s t) ds / s`.
    pub fn radial_antiderivative(&self) -> Result<Self> {
        if self.coeffs[0] != 0.0 {
            return Err(Error::Domain("radial antiderivative needs a zero constant term".to_string()));
        }
        Ok(self.map_by_degree(|d, p| if d == 0 { 0.0 } else { p / d as f64 }))
    }

    /// Euler operator `Σ t_j ∂_j`: degree-`k` part multiplied by `k`.
    pub fn euler(&self) -> Self {
        self.map_by_degree(|d, p| p * d as f64)
    }

    fn map_by_degree(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for d in 0..=self.max_degree {
            for p in &mut out.coeffs[offset(self.dim, d)..offset(self.dim, d + 1)] {
                *p = f(d, *p);
            }
        }
        out
    }

    /// Homogeneous part of degree `d`.
    pub fn homogeneous_part(&self, d: usize) -> Self {
        let mut out = Self::zero(self.dim, self.max_degree, self.radius);
        if d <= self.max_degree {
            let (lo, hi) = (offset(self.dim, d), offset(self.dim, d + 1));
            out.coeffs[lo..hi].copy_from_slice(&self.coeffs[lo..hi]);
        }
        out
    }

    /// `∂f/∂t_j` (0-based), truncated at `M − 1`.
    pub fn differentiate(&self, j: usize) -> Self {
        assert!(j < self.dim, "variable index out of range");
        let n = self.dim;
        let m_out = self.max_degree.saturating_sub(1);
        let mut out = Self::zero(n, m_out, self.radius);
        if self.max_degree == 0 {
            return out;
        }
        let mons = monomials(n, self.max_degree);
        let mut beta = vec![0u32; n];
        for k in offset(n, 1)..self.coeffs.len() {
            let p = self.coeffs[k];
            let alpha = &mons[k * n..(k + 1) * n];
            if p == 0.0 || alpha[j] == 0 {
                continue;
            }
            beta.copy_from_slice(alpha);
            beta[j] -= 1;
            out.coeffs[rank(&beta)] += alpha[j] as f64 * p;
        }
        out
    }

    /// `t_j · f` (0-based), truncated at `M`.
    pub fn multiply_by_variable(&self, j: usize) -> Self {
        assert!(j < self.dim, "variable index out of range");
        let n = self.dim;
        let mut out = Self::zero(n, self.max_degree, self.radius);
        if self.max_degree == 0 {
            return out;
        }
        let mons = monomials(n, self.max_degree - 1);
        let mut beta = vec![0u32; n];
        for k in 0..len_upto(n, self.max_degree - 1) {
            let p = self.coeffs[k];
            if p == 0.0 {
                continue;
            }
            beta.copy_from_slice(&mons[k * n..(k + 1) * n]);
            beta[j] += 1;
            out.coeffs[rank(&beta)] += p;
        }
        out
    }

    /// Evaluate the truncated polynomial at `t`.
    pub fn evaluate(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.dim {
            return Err(Error::Structure(alloc::format!(
                "point of length {} for a {}-variable series",
                t.len(),
                self.dim
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    /// Evaluate and report whether `t` lies outside the polydisc of radius `r`.
    pub fn evaluate_flagged(&self, t: &[f64]) -> Result<(f64, bool)> {
        let v = self.evaluate(t)?;
        let outside = t.iter().any(|x| x.abs() >= self.radius);
        Ok((v, outside))
    }

    pub(crate) fn eval_unchecked(&self, t: &[f64]) -> f64 {
        let n = self.dim;
        let m = self.max_degree;
        // powers[i][k] = t_i^k
        let mut powers = vec![1.0; n * (m + 1)];
        for i in 0..n {
            for k in 1..=m {
                powers[i * (m + 1) + k] = powers[i * (m + 1) + k - 1] * t[i];
            }
        }
        let mons = monomials(n, m);
        let mut total = 0.0;
        for (k, &p) in self.coeffs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let alpha = &mons[k * n..(k + 1) * n];
            let mut v = p;
            for i in 0..n {
                v *= powers[i * (m + 1) + alpha[i] as usize];
            }
            total += v;
        }
        total
    }

    /// Gradient at `t`.
    pub fn gradient(&self, t: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|j| self.differentiate(j).eval_unchecked(t)).collect()
    }

    /// Composition `f ∘ Φ` where every `Φ_i` has zero constant term (the
    /// expansion point of `f` is hit exactly). The result lives in the
    /// variables of `Φ`, truncated at the smaller of the degrees.
    pub fn compose(&self, inner: &[TruncatedSeries]) -> Result<Self> {
        self.compose_checked(inner, None)
    }

    /// Composition where `Φ_i(0)` must equal `center_i`, the expansion point of
    /// `f` in ambient coordinates.
    pub fn compose_at(&self, center: &[f64], inner: &[TruncatedSeries]) -> Result<Self> {
        self.compose_checked(inner, Some(center))
    }

    fn compose_checked(&self, inner: &[TruncatedSeries], center: Option<&[f64]>) -> Result<Self> {
        if inner.len() != self.dim {
            return Err(Error::Structure(alloc::format!(
                "composition needs {} inner series, got {}",
                self.dim,
                inner.len()
            )));
        }
        let first = &inner[0];
        for s in inner {
            first.check_compatible(s)?;
        }
        let mut shifted = Vec::with_capacity(inner.len());
        for (i, s) in inner.iter().enumerate() {
            let c = center.map_or(0.0, |c| c[i]);
            let c0 = s.coeffs[0] - c;
            let scale = 1.0f64.max(c.abs()).max(s.coeffs[0].abs());
            if c0.abs() > 1e-12 * scale {
                return Err(Error::Domain(alloc::format!(
                    "inner series {i} has constant term {} but the outer expansion point is {c}",
                    s.coeffs[0]
                )));
            }
            let mut z = s.clone();
            z.coeffs[0] = 0.0;
            shifted.push(z);
        }
        Ok(self.substitute_unchecked(&shifted))
    }

    /// General substitution `f(Φ_1, …, Φ_n)` of the truncated polynomial, with
    /// no restriction on the constant terms of `Φ`. Exact for polynomial `f`
    /// when the `Φ_i` are affine; otherwise truncated products are formed.
    pub fn substitute(&self, inner: &[TruncatedSeries]) -> Result<Self> {
        if inner.len() != self.dim {
            return Err(Error::Structure(alloc::format!(
                "substitution needs {} inner series, got {}",
                self.dim,
                inner.len()
            )));
        }
        let first = &inner[0];
        for s in inner {
            first.check_compatible(s)?;
        }
        Ok(self.substitute_unchecked(inner))
    }

    fn substitute_unchecked(&self, inner: &[TruncatedSeries]) -> Self {
        let n = self.dim;
        let m_in = inner.iter().map(|s| s.max_degree).min().unwrap_or(0);
        let (dim_out, radius_out) = (inner[0].dim, inner[0].radius);
        let mut out = Self::zero(dim_out, m_in, radius_out);
        let mons = monomials(n, self.max_degree);
        // products[k] = Π inner_i^{α_i} for the k-th monomial, built from a
        // predecessor obtained by removing one factor
        let mut products: Vec<Option<TruncatedSeries>> = vec![None; self.coeffs.len()];
        products[0] = Some(Self::constant(dim_out, m_in, radius_out, 1.0));
        let zero_const = inner.iter().all(|s| s.coeffs[0] == 0.0);
        let mut beta = vec![0u32; n];
        for k in 1..self.coeffs.len() {
            let alpha = &mons[k * n..(k + 1) * n];
            let d: u32 = alpha.iter().sum();
            if zero_const && d as usize > m_in {
                break;
            }
            let i = alpha.iter().position(|&a| a > 0).unwrap();
            beta.copy_from_slice(alpha);
            beta[i] -= 1;
            let prev = products[rank(&beta)].as_ref().unwrap();
            products[k] = Some(prev.mul_unchecked(&inner[i].truncate(m_in)));
        }
        for (k, &p) in self.coeffs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if let Some(prod) = &products[k] {
                for (o, v) in out.coeffs.iter_mut().zip(&prod.coeffs) {
                    *o += p * v;
                }
            }
        }
        out
    }

    /// Re-expand around `t = shift`: returns `g(u) = f(shift + u)`.
    pub fn recenter(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::Structure("shift has the wrong length".to_string()));
        }
        let inner: Vec<TruncatedSeries> = (0..self.dim)
            .map(|i| {
                let mut v = Self::variable(self.dim, self.max_degree, self.radius, i);
                v.coeffs[0] = shift[i];
                v
            })
            .collect();
        Ok(self.substitute_unchecked(&inner))
    }

    /// `exp(f)` for `f` with zero constant term; the Taylor sum terminates at
    /// degree `M`.
    pub fn exp(&self) -> Result<Self> {
        if self.coeffs[0] != 0.0 {
            return Err(Error::Domain("series exponential needs a zero constant term".to_string()));
        }
        let mut acc = Self::constant(self.dim, self.max_degree, self.radius, 1.0);
        let mut term = acc.clone();
        for k in 1..=self.max_degree {
            term = term.mul_unchecked(self).scale(1.0 / k as f64);
            acc.axpy(1.0, &term)?;
        }
        Ok(acc)
    }

    /// `1/f` for `f` with nonzero constant term.
    pub fn reciprocal(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 || !c0.is_finite() {
            return Err(Error::Domain("reciprocal needs a nonzero constant term".to_string()));
        }
        let mut g = self.scale(-1.0 / c0);
        g.coeffs[0] = 0.0;
        // 1/f = (1/c0) Σ_k g^k with g = 1 − f/c0
        let mut acc = Self::constant(self.dim, self.max_degree, self.radius, 1.0);
        let mut term = acc.clone();
        for _ in 1..=self.max_degree {
            term = term.mul_unchecked(&g);
            acc.axpy(1.0, &term)?;
        }
        Ok(acc.scale(1.0 / c0))
    }
}

impl TruncatedSeries {
    /// Partial `C^{ω,r}` norm `Σ_{|β| ≤ M} r^{|β|}/β! · sup |∂^β f|`, with the
    /// supremum taken over the given sample points (a lower bound of the true sup).
    pub fn comega_norm_sampled(&self, r: f64, points: &[Vec<f64>]) -> f64 {
        let n = self.dim;
        let mons = monomials(n, self.max_degree);
        let mut total = 0.0;
        for k in 0..self.coeffs.len() {
            let beta = &mons[k * n..(k + 1) * n];
            let mut d = self.clone();
            for (j, &b) in beta.iter().enumerate() {
                for _ in 0..b {
                    d = d.differentiate(j);
                }
            }
            if d.is_zero() {
                continue;
            }
            let sup = points.iter().fold(0.0f64, |m, p| m.max(d.eval_unchecked(p).abs()));
            let deg: u32 = beta.iter().sum();
            total += r.powi(deg as i32) / alpha_factorial(beta) * sup;
        }
        total
    }

    /// The partial sums `Σ_{k ≤ M} t^k/k!` in one variable.
    pub fn exp_1d(max_degree: usize, radius: f64) -> Self {
        let terms: Vec<(Vec<u32>, f64)> = (0..=max_degree as u32).map(|k| (vec![k], 1.0)).collect();
        Self::from_terms(1, max_degree, radius, terms.iter().map(|(a, c)| (a.as_slice(), *c))).expect("valid terms")
    }
}

#[cfg(test)]
mod tests;
