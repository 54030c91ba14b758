use alloc::vec::Vec;

use crate::math::binomial;

/// Multi-index `α ∈ ℕⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(alloc::vec![0; n])
    }

    /// `e_j`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = alloc::vec![0; n];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α! = Π α_i!`.
    pub fn factorial(&self) -> f64 {
        alpha_factorial(&self.0)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

pub(crate) fn alpha_factorial(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&a| crate::math::factorial(a)).product()
}

/// Number of monomials in `n` variables of degree `≤ m`.
#[inline]
pub(crate) fn len_upto(n: usize, m: usize) -> usize {
    binomial(m + n, n)
}

/// Number of monomials in `n` variables of degree `< d`.
#[inline]
pub(crate) fn offset(n: usize, d: usize) -> usize {
    if d == 0 {
        0
    } else {
        binomial(d - 1 + n, n)
    }
}

/// Position of `α` in graded order: degree ascending, and within a degree the
/// exponent vectors in descending lexicographic order.
pub(crate) fn rank(alpha: &[u32]) -> usize {
    let n = alpha.len();
    let d: u32 = alpha.iter().sum();
    let mut r = offset(n, d as usize);
    let mut rem = d;
    for (i, &a) in alpha.iter().enumerate() {
        let m = n - 1 - i;
        if m > 0 && rem > a {
            r += binomial((rem - a - 1) as usize + m, m);
        }
        rem -= a;
    }
    r
}

/// All monomials of degree `≤ m` in graded order, flattened (`n` entries each).
pub(crate) fn monomials(n: usize, m: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(len_upto(n, m) * n);
    let mut buf = alloc::vec![0u32; n];
    for d in 0..=m {
        push_degree(&mut out, &mut buf, 0, d as u32);
    }
    out
}

fn push_degree(out: &mut Vec<u32>, buf: &mut [u32], i: usize, rem: u32) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    if i == n - 1 {
        buf[i] = rem;
        out.extend_from_slice(buf);
        return;
    }
    for v in (0..=rem).rev() {
        buf[i] = v;
        push_degree(out, buf, i + 1, rem - v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_matches_enumeration() {
        for n in 1..5 {
            let m = 6;
            let all = monomials(n, m);
            assert_eq!(all.len(), len_upto(n, m) * n);
            for (k, alpha) in all.chunks(n).enumerate() {
                assert_eq!(rank(alpha), k, "n={n} alpha={alpha:?}");
            }
        }
    }

    #[test]
    fn graded_order_small() {
        let all = monomials(2, 2);
        assert_eq!(all, alloc::vec![0, 0, 1, 0, 0, 1, 2, 0, 1, 1, 0, 2]);
        assert_eq!(MultiIndex(alloc::vec![2, 3]).factorial(), 12.0);
    }
}
