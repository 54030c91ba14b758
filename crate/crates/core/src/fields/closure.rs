use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::{degree_add, degree_le, numerical_rank, FieldSystem, WeightedField};
use crate::{Error, Result};

/// Tuning for [`bracket_closure`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureOptions {
    /// Fields whose largest coefficient is at most `zero_tol × generator scale` are dropped.
    pub zero_tol: f64,
    /// Final common truncation; `None` keeps the smallest truncation reached.
    pub max_degree: Option<usize>,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions { zero_tol: 1e-12, max_degree: None }
    }
}

/// Iterated brackets of the generators with formal degree `d_j + d_Z`, kept
/// while `|d|_∞ ≤ m`. Brackets are formed as `[Z, V_j]`, which differs from
/// `[V_j, Z]` only by sign, so that `[V_1, V_2]` appears with its usual sign.
///
/// Identically zero fields are pruned, and a bracket equal to `±` an earlier
/// field of no larger degree is dropped. The output is ordered by `|d|_1`,
/// then by construction order. Generators should carry `m` degrees of
/// truncation headroom, since every bracket costs one degree.
pub fn bracket_closure(generators: &[WeightedField], m: u32, opts: ClosureOptions) -> Result<FieldSystem> {
    let first = generators.first().ok_or_else(|| Error::Structure("no generators".into()))?;
    let max_gen = generators.iter().map(|g| g.degree_max()).max().unwrap_or(0);
    if max_gen > m {
        return Err(Error::Domain(alloc::format!("closure depth {m} is below the generator degree {max_gen}")));
    }
    let scale = generators.iter().map(|g| g.field.max_abs_coeff()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = opts.zero_tol * scale;

    let mut out: Vec<WeightedField> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    for g in generators {
        if accept(&out, g, tol) {
            out.push(g.clone());
            queue.push_back(out.len() - 1);
        }
    }
    while let Some(zi) = queue.pop_front() {
        for v in generators {
            let degree = degree_add(&v.degree, &out[zi].degree);
            if degree.iter().copied().max().unwrap_or(0) > m {
                continue;
            }
            let field = out[zi].field.lie_bracket(&v.field)?;
            let cand = WeightedField { field, degree };
            if accept(&out, &cand, tol) {
                out.push(cand);
                queue.push_back(out.len() - 1);
            }
        }
    }
    // stable sort by total degree keeps construction order within a degree
    out.sort_by_key(|f| f.degree_sum());
    let common = out.iter().map(|f| f.field.max_degree()).min().unwrap_or(first.field.max_degree());
    let target = opts.max_degree.map_or(common, |d| d.min(common));
    let out = out.into_iter().map(|f| WeightedField { field: f.field.truncate(target), degree: f.degree }).collect();
    FieldSystem::new(out)
}

fn accept(existing: &[WeightedField], cand: &WeightedField, tol: f64) -> bool {
    if cand.field.max_abs_coeff() <= tol {
        return false;
    }
    !existing.iter().any(|e| {
        if !degree_le(&e.degree, &cand.degree) {
            return false;
        }
        let m = e.field.max_degree().min(cand.field.max_degree());
        let a = e.field.truncate(m);
        let b = cand.field.truncate(m);
        a.max_abs_diff(&b) <= tol || a.scale(-1.0).max_abs_diff(&b) <= tol
    })
}

/// Ranks of the closures at depth `m` and `m + 1` at `x`; an error when they differ.
pub fn closure_rank_check(
    generators: &[WeightedField],
    m: u32,
    x: &[f64],
    opts: ClosureOptions,
) -> Result<(FieldSystem, usize)> {
    let sys = bracket_closure(generators, m, opts)?;
    let next = bracket_closure(generators, m + 1, opts)?;
    let rank_m = numerical_rank(&sys, x);
    let rank_next = numerical_rank(&next, x);
    if rank_m != rank_next {
        return Err(Error::DepthTooSmall { rank_m, rank_next });
    }
    Ok((sys, rank_m))
}
