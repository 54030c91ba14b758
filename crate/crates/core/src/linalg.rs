//! Small dense linear algebra on row-major `f64` matrices.
//!
//! Sizes here are tiny (ambient dimension and field counts below ten), so the
//! routines favour clarity over blocking.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::math::k_subsets;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        let mut m = Mat::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            for i in 0..rows {
                m.data[i * cols + j] = c[i];
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Square submatrix on the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Mat {
        let mut m = Mat::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m.set(a, b, self.get(i, j));
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// LU factorisation with partial pivoting; returns `(lu, perm, sign)` or `None`
/// if a pivot is exactly zero.
fn lu(a: &Mat) -> Option<(Mat, Vec<usize>, f64)> {
    let n = a.rows;
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let mut p = k;
        let mut best = m.get(k, k).abs();
        for i in k + 1..n {
            let v = m.get(i, k).abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = m.get(k, k);
        for i in k + 1..n {
            let f = m.get(i, k) / pivot;
            m.set(i, k, f);
            for j in k + 1..n {
                let v = m.get(i, j) - f * m.get(k, j);
                m.set(i, j, v);
            }
        }
    }
    Some((m, perm, sign))
}

/// Determinant of a square matrix.
pub fn det(a: &Mat) -> f64 {
    assert_eq!(a.rows, a.cols, "det needs a square matrix");
    match a.rows {
        0 => 1.0,
        1 => a.data[0],
        2 => a.data[0] * a.data[3] - a.data[1] * a.data[2],
        _ => match lu(a) {
            None => 0.0,
            Some((m, _, sign)) => (0..a.rows).fold(sign, |acc, i| acc * m.get(i, i)),
        },
    }
}

/// Solve `a x = b`; `None` for a singular matrix.
pub fn solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    let (m, perm, _) = lu(a)?;
    let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for k in 0..i {
            y[i] -= m.get(i, k) * y[k];
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= m.get(i, k) * y[k];
        }
        y[i] /= m.get(i, i);
    }
    Some(y)
}

/// Inverse of a square matrix.
pub fn inverse(a: &Mat) -> Option<Mat> {
    let n = a.rows;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve(a, &e)?);
    }
    Some(Mat::from_columns(&cols))
}

/// Singular values (descending) via one-sided Jacobi rotations.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    // work on the orientation with fewer columns
    let work = if a.cols > a.rows { a.transpose() } else { a.clone() };
    let (m, n) = (work.rows, work.cols);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| work.column(j)).collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|v| v * v).sum();
                let beta: f64 = cols[q].iter().map(|v| v * v).sum();
                let gamma: f64 = (0..m).map(|i| cols[p][i] * cols[q][i]).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let sgn = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sgn / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = cols[p][i];
                    let y = cols[q][i];
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    sv
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(a: &Mat) -> f64 {
    if a.rows == 0 || a.cols == 0 {
        return 0.0;
    }
    if a.rows == 1 || a.cols == 1 {
        return a.data.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    singular_values(a)[0]
}

/// Numerical rank: singular values above `rel_tol * σ_max` (and above `abs_floor`).
pub fn numerical_rank(a: &Mat, rel_tol: f64, abs_floor: f64) -> usize {
    let sv = singular_values(a);
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= abs_floor {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Condition number `σ_max / σ_min` of a square or tall matrix.
pub fn condition_number(a: &Mat) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// All `n×n` minors of the `N×n` matrix `a`, indexed by row subsets in
/// lexicographic order.
pub fn maximal_minors(a: &Mat) -> Vec<f64> {
    let n = a.cols;
    let cols: Vec<usize> = (0..n).collect();
    k_subsets(a.rows, n).iter().map(|rows| det(&a.select(rows, &cols))).collect()
}

const REFINE_STEPS: usize = 4;

/// Ridge-regularised least squares `min |a x − b|² + ridge |x|²` after scaling
/// every column to unit norm, then refined with the same factorisation to remove
/// the ridge bias. Multiple right-hand sides are given as columns of `b`.
pub fn least_squares(a: &Mat, b: &Mat, ridge: f64) -> Option<Mat> {
    let (m, n) = (a.rows, a.cols);
    debug_assert_eq!(b.rows, m);
    let scale: Vec<f64> = (0..n)
        .map(|j| {
            let s = (0..m).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt();
            if s > 0.0 {
                1.0 / s
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = a.clone();
    for i in 0..m {
        for j in 0..n {
            scaled.data[i * n + j] *= scale[j];
        }
    }
    let at = scaled.transpose();
    let mut normal = at.matmul(&scaled);
    for j in 0..n {
        normal.data[j * n + j] += ridge;
    }
    let l = cholesky(&normal)?;
    let mut out = Mat::zeros(n, b.cols);
    for c in 0..b.cols {
        let target = b.column(c);
        let mut x = vec![0.0; n];
        // iterated refinement removes the ridge bias outside the null space
        for _ in 0..REFINE_STEPS {
            let ax = scaled.matvec(&x);
            let resid: Vec<f64> = target.iter().zip(&ax).map(|(t, a)| t - a).collect();
            let step = cholesky_solve(&l, &at.matvec(&resid));
            for (xi, si) in x.iter_mut().zip(&step) {
                *xi += si;
            }
        }
        for j in 0..n {
            out.set(j, c, x[j] * scale[j]);
        }
    }
    Some(out)
}

fn cholesky(a: &Mat) -> Option<Mat> {
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l.set(i, i, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.get(i, k) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l.get(k, i) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    y
}

/// Moore–Penrose style left inverse `(aᵀa)⁻¹aᵀ` of a full-column-rank matrix.
pub fn left_inverse(a: &Mat) -> Option<Mat> {
    let at = a.transpose();
    let g = inverse(&at.matmul(a))?;
    Some(g.matmul(&at))
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Max norm.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_and_solve() {
        let a = Mat::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]]);
        assert!((det(&a) - 18.0).abs() < 1e-12);
        let x = solve(&a, &[3.0, 5.0, 5.0]).unwrap();
        for (xi, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - e).abs() < 1e-12);
        }
        let inv = inverse(&a).unwrap();
        let id = a.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id.get(i, j) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_of_diagonal_and_rank() {
        let a = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, -4.0], vec![0.0, 0.0]]);
        let sv = singular_values(&a);
        assert!((sv[0] - 4.0).abs() < 1e-12 && (sv[1] - 3.0).abs() < 1e-12);
        let r = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(numerical_rank(&r, 1e-8, 0.0), 1);
        assert!((spectral_norm(&r) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn minors_of_rotation_field() {
        // (−b, a) column at (a, b) = (2, 3)
        let a = Mat::from_columns(&[vec![-3.0, 2.0]]);
        assert_eq!(maximal_minors(&a), vec![-3.0, 2.0]);
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let a = Mat::from_rows(&xs.iter().map(|&x| vec![1.0, x]).collect::<Vec<_>>());
        let b = Mat::from_columns(&[xs.iter().map(|&x| 2.0 - 0.5 * x).collect()]);
        let sol = least_squares(&a, &b, 1e-14).unwrap();
        assert!((sol.get(0, 0) - 2.0).abs() < 1e-9);
        assert!((sol.get(1, 0) + 0.5).abs() < 1e-9);
    }
}
