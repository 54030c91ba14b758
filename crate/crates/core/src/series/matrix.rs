use alloc::string::ToString;
use alloc::vec::Vec;

use hashbrown::HashMap;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{len_upto, offset, TruncatedSeries};
use crate::linalg::{self, Mat};
use crate::math::{permutation_sign, permutations};
use crate::{Error, Result};

/// Matrix whose entries are truncated series sharing `(dim, max_degree, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<TruncatedSeries>,
}

impl SeriesMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<TruncatedSeries>) -> Result<Self> {
        if entries.len() != rows * cols || entries.is_empty() {
            return Err(Error::Structure(alloc::format!("{} entries for a {rows}×{cols} matrix", entries.len())));
        }
        let first = &entries[0];
        for e in &entries {
            if e.dim() != first.dim() || e.max_degree() != first.max_degree() {
                return Err(Error::Structure("matrix entries disagree on dimension or truncation".to_string()));
            }
            first.check_compatible(e)?;
        }
        Ok(SeriesMatrix { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize, dim: usize, max_degree: usize, radius: f64) -> Self {
        let z = TruncatedSeries::zero(dim, max_degree, radius);
        SeriesMatrix { rows, cols, entries: alloc::vec![z; rows * cols] }
    }

    pub fn identity(n: usize, dim: usize, max_degree: usize, radius: f64) -> Self {
        let mut m = Self::zeros(n, n, dim, max_degree, radius);
        for i in 0..n {
            m.entries[i * n + i] = TruncatedSeries::constant(dim, max_degree, radius, 1.0);
        }
        m
    }

    /// Constant matrix.
    pub fn from_mat(a: &Mat, dim: usize, max_degree: usize, radius: f64) -> Self {
        let entries = a.data.iter().map(|&v| TruncatedSeries::constant(dim, max_degree, radius, v)).collect();
        SeriesMatrix { rows: a.rows, cols: a.cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.entries[0].dim()
    }

    pub fn max_degree(&self) -> usize {
        self.entries[0].max_degree()
    }

    pub fn radius(&self) -> f64 {
        self.entries[0].radius()
    }

    pub fn entries(&self) -> &[TruncatedSeries] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &TruncatedSeries {
        &self.entries[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut TruncatedSeries {
        &mut self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: TruncatedSeries) {
        self.entries[i * self.cols + j] = s;
    }

    pub fn row(&self, i: usize) -> &[TruncatedSeries] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn with_radius(&self, r: f64) -> Self {
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.with_radius(r)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&TruncatedSeries) -> TruncatedSeries) -> Self {
        SeriesMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn try_map(&self, f: impl Fn(&TruncatedSeries) -> Result<TruncatedSeries>) -> Result<Self> {
        let entries = self.entries.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Structure(alloc::format!(
                "shape mismatch: {}×{} vs {}×{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            )));
        }
        self.entries[0].check_compatible(&other.entries[0])
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        Ok(SeriesMatrix { rows: self.rows, cols: self.cols, entries })
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|e| e.scale(k))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Structure(alloc::format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            )));
        }
        self.entries[0].check_compatible(&other.entries[0])?;
        let m = self.max_degree().min(other.max_degree());
        let (dim, r) = (self.dim(), self.radius());
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = TruncatedSeries::zero(dim, m, r);
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    let p = a.mul_unchecked(b);
                    acc.axpy(1.0, &p)?;
                }
                entries.push(acc);
            }
        }
        Ok(SeriesMatrix { rows: self.rows, cols: other.cols, entries })
    }

    /// Matrix times a column of series.
    pub fn apply(&self, v: &[TruncatedSeries]) -> Result<Vec<TruncatedSeries>> {
        if v.len() != self.cols {
            return Err(Error::Structure("vector length does not match the matrix".to_string()));
        }
        let (dim, r) = (self.dim(), self.radius());
        let m = v.iter().map(|s| s.max_degree()).min().unwrap_or(0).min(self.max_degree());
        (0..self.rows)
            .map(|i| {
                let mut acc = TruncatedSeries::zero(dim, m, r);
                for k in 0..self.cols {
                    let p = self.get(i, k).mul(&v[k])?;
                    acc.axpy(1.0, &p)?;
                }
                Ok(acc)
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        SeriesMatrix { rows: self.cols, cols: self.rows, entries }
    }

    /// Coefficient matrix at plain-coefficient slot `k` (graded order).
    pub(crate) fn slot_matrix(&self, k: usize) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.entries.iter().map(|e| e.dense().get(k).copied().unwrap_or(0.0)).collect(),
        }
    }

    /// Constant term as a real matrix.
    pub fn constant_matrix(&self) -> Mat {
        self.slot_matrix(0)
    }

    /// `Σ_α ‖p_α‖_op r^{|α|}` with the spectral norm on coefficient matrices.
    pub fn a_norm(&self) -> f64 {
        self.a_norm_at(self.radius())
    }

    pub fn a_norm_at(&self, r: f64) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        let mut rk = 1.0;
        for d in 0..=self.max_degree() {
            for k in offset(n, d)..offset(n, d + 1) {
                let m = self.slot_matrix(k);
                if m.max_abs() > 0.0 {
                    total += linalg::spectral_norm(&m) * rk;
                }
            }
            rk *= r;
        }
        total
    }

    /// Largest entry-wise plain-coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.max_abs_coeff()))
    }

    /// Evaluate at a point.
    pub fn evaluate(&self, t: &[f64]) -> Result<Mat> {
        let data = self.entries.iter().map(|e| e.evaluate(t)).collect::<Result<Vec<_>>>()?;
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    /// Determinant: Leibniz expansion up to size 4, memoised cofactor
    /// expansion along the first row beyond.
    pub fn det(&self) -> Result<TruncatedSeries> {
        if self.rows != self.cols {
            return Err(Error::Structure("determinant of a non-square matrix".to_string()));
        }
        let n = self.rows;
        let (dim, m, r) = (self.dim(), self.max_degree(), self.radius());
        if n <= 4 {
            let mut acc = TruncatedSeries::zero(dim, m, r);
            for perm in permutations(n) {
                let sign = permutation_sign(&perm);
                let mut term = TruncatedSeries::constant(dim, m, r, sign);
                let mut zero = false;
                for (i, &j) in perm.iter().enumerate() {
                    let e = self.get(i, j);
                    if e.is_zero() {
                        zero = true;
                        break;
                    }
                    term = term.mul_unchecked(e);
                }
                if !zero {
                    acc.axpy(1.0, &term)?;
                }
            }
            return Ok(acc);
        }
        let mut memo: HashMap<u64, TruncatedSeries> = HashMap::new();
        Ok(self.minor_det(0, (1u64 << n) - 1, &mut memo))
    }

    // determinant of rows start.. and the column set `mask`
    fn minor_det(&self, start: usize, mask: u64, memo: &mut HashMap<u64, TruncatedSeries>) -> TruncatedSeries {
        let (dim, m, r) = (self.dim(), self.max_degree(), self.radius());
        if mask == 0 {
            return TruncatedSeries::constant(dim, m, r, 1.0);
        }
        if let Some(v) = memo.get(&mask) {
            return v.clone();
        }
        let mut acc = TruncatedSeries::zero(dim, m, r);
        let mut sign = 1.0;
        for j in 0..self.cols {
            if mask & (1 << j) == 0 {
                continue;
            }
            let e = self.get(start, j);
            if !e.is_zero() {
                let sub = self.minor_det(start + 1, mask & !(1 << j), memo);
                let term = e.mul_unchecked(&sub);
                let _ = acc.axpy(sign, &term);
            }
            sign = -sign;
        }
        memo.insert(mask, acc.clone());
        acc
    }

    /// `(I + A)⁻¹`, exact through degree `M`.
    ///
    /// The constant part is inverted numerically, `B₀ = (I + A₀)⁻¹`; then
    /// `(I + A)⁻¹ = Σ_k (−B₀A₁)^k B₀` where `A₁ = A − A₀` has no constant term,
    /// so the sum stops at `k = M`. Requires `‖A‖ < 1` or a nilpotent `A₀`.
    pub fn neumann_inverse_of_i_plus(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Structure("inverse of a non-square matrix".to_string()));
        }
        let n = self.rows;
        let a0 = self.constant_matrix();
        let norm = self.a_norm();
        if norm >= 1.0 && !is_nilpotent(&a0) {
            return Err(Error::Convergence(alloc::format!(
                "Neumann series for (I + A)⁻¹ diverges: ‖A‖ = {norm} and A(0) is not nilpotent"
            )));
        }
        let mut i_plus = a0.clone();
        for i in 0..n {
            i_plus.data[i * n + i] += 1.0;
        }
        let b0 = linalg::inverse(&i_plus).ok_or_else(|| Error::Convergence("I + A(0) is singular".to_string()))?;
        let (dim, m, r) = (self.dim(), self.max_degree(), self.radius());
        let b0s = SeriesMatrix::from_mat(&b0, dim, m, r);
        let a1 = self.map(|e| {
            let mut z = e.clone();
            z.dense_mut()[0] = 0.0;
            z
        });
        let step = b0s.mul(&a1)?.scale(-1.0);
        let mut acc = SeriesMatrix::identity(n, dim, m, r);
        let mut term = acc.clone();
        for _ in 1..=m {
            term = term.mul(&step)?;
            if term.max_abs_coeff() == 0.0 {
                break;
            }
            acc = acc.add(&term)?;
        }
        acc.mul(&b0s)
    }

    /// Exact-length check helper for tests: number of stored slots per entry.
    pub fn slots(&self) -> usize {
        len_upto(self.dim(), self.max_degree())
    }
}

fn is_nilpotent(a: &Mat) -> bool {
    let n = a.rows;
    let mut p = a.clone();
    for _ in 1..n {
        p = p.matmul(a);
    }
    p.max_abs() <= 1e-12 * a.max_abs().max(1.0).powi(n as i32)
}
