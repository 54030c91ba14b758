//! Small polynomial field systems used throughout the examples and tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::fields::{AnalyticVectorField, FieldSystem, WeightedField};
use crate::Result;

type Poly = Vec<(f64, Vec<u32>)>;

fn weighted(center: &[f64], max_degree: usize, radius: f64, fields: &[(&str, Vec<Poly>, u32)]) -> Result<FieldSystem> {
    let out = fields
        .iter()
        .map(|(name, comps, d)| {
            let f = AnalyticVectorField::from_polynomial(*name, center, max_degree, radius, comps)?;
            WeightedField::new(f, vec![*d])
        })
        .collect::<Result<Vec<_>>>()?;
    FieldSystem::new(out)
}

fn unit(dim: usize, i: usize) -> Vec<Poly> {
    let mut comps = vec![Vec::new(); dim];
    comps[i] = vec![(1.0, vec![0; dim])];
    comps
}

/// `∂_1, …, ∂_N`, all of degree 1.
pub fn coordinate(center: &[f64], max_degree: usize, radius: f64) -> Result<FieldSystem> {
    let dim = center.len();
    let names = ["d1", "d2", "d3", "d4", "d5", "d6", "d7", "d8"];
    let fields: Vec<(&str, Vec<Poly>, u32)> = (0..dim).map(|i| (names[i % 8], unit(dim, i), 1)).collect();
    weighted(center, max_degree, radius, &fields)
}

/// `∂x − (y/2)∂t`, `∂y + (x/2)∂t`, `∂t` with degrees 1, 1, 2.
pub fn heisenberg(center: &[f64], max_degree: usize, radius: f64) -> Result<FieldSystem> {
    weighted(
        center,
        max_degree,
        radius,
        &[
            ("X1", vec![vec![(1.0, vec![0, 0, 0])], vec![], vec![(-0.5, vec![0, 1, 0])]], 1),
            ("X2", vec![vec![], vec![(1.0, vec![0, 0, 0])], vec![(0.5, vec![1, 0, 0])]], 1),
            ("X3", unit(3, 2), 2),
        ],
    )
}

/// `∂x`, `x∂y` with degrees 1, 1.
pub fn grushin_pair(center: &[f64], max_degree: usize, radius: f64) -> Result<FieldSystem> {
    weighted(center, max_degree, radius, &[("X1", unit(2, 0), 1), ("X2", vec![vec![], vec![(1.0, vec![1, 0])]], 1)])
}

/// `∂x`, `x∂y`, `∂y` with degrees 1, 1, 2.
pub fn grushin_triple(center: &[f64], max_degree: usize, radius: f64) -> Result<FieldSystem> {
    weighted(
        center,
        max_degree,
        radius,
        &[("X1", unit(2, 0), 1), ("X2", vec![vec![], vec![(1.0, vec![1, 0])]], 1), ("X3", unit(2, 1), 2)],
    )
}

/// `−y∂x + x∂y`, degree 1.
pub fn rotation(center: &[f64], max_degree: usize, radius: f64) -> Result<FieldSystem> {
    weighted(center, max_degree, radius, &[("R", vec![vec![(-1.0, vec![0, 1])], vec![(1.0, vec![1, 0])]], 1)])
}

/// `x∂x` on the line, degree 1.
pub fn euler_line(center: f64, max_degree: usize, radius: f64) -> Result<FieldSystem> {
    weighted(&[center], max_degree, radius, &[("E", vec![vec![(1.0, vec![1])]], 1)])
}
