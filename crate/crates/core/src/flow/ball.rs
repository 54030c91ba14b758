//! Sampled Carnot–Carathéodory balls `B_{δ^d X}(x0, 1)`.
//!
//! Controls are piecewise constant with `K` pieces. A path first draws a block
//! count `b` among the divisors of `K`, then one vector uniform in the open unit
//! ball of `ℝ^q` per block of `K/b` consecutive pieces. Straight paths (`b = 1`)
//! fill the first-order directions, switching paths reach the bracket ones.
//! Endpoints and piece boundaries are binned into a grid.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use hashbrown::HashSet;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chart::NumericChart;
use super::{Bounds, Flow, FlowOptions, IntegratorOptions};
use crate::fields::{select_j0, FieldSystem};
use crate::linalg::{self, Mat};
use crate::{Error, Result};

/// Coordinates in which reachable points are binned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Ambient coordinates; cell volume `h^N`.
    Ambient,
    /// `u = S⁺(x − x0)` with `S` the dilated reference fields at `x0`; cell
    /// volume `h^n |∧S|`.
    Linear,
    /// `t = Φ^{-1}(x)` for the numeric chart of the dilated reference fields;
    /// cell volume `h^n |∧dΦ(t_cell)|`.
    Chart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallOptions {
    pub n_paths: usize,
    pub pieces: usize,
    pub seed: u64,
    pub cell_size: f64,
    /// `None`: linear when the fields span at `x0`, chart otherwise.
    pub binning: Option<Binning>,
    pub integrator: IntegratorOptions,
    /// Defaults to the cube of half-width `radius` around `x0`.
    pub bounds: Option<Bounds>,
    pub max_failure_fraction: f64,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions {
            n_paths: 20_000,
            pieces: 8,
            seed: 7,
            cell_size: 1.0 / 32.0,
            binning: None,
            integrator: IntegratorOptions { rtol: 1e-8, atol: 1e-10, ..IntegratorOptions::default() },
            bounds: None,
            max_failure_fraction: 0.5,
        }
    }
}

/// A piecewise-constant control on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPath {
    pub pieces: Vec<Vec<f64>>,
}

impl ControlPath {
    /// The sampling law described in the module docs.
    pub fn sample<R: Rng>(rng: &mut R, q: usize, pieces: usize) -> Self {
        let divisors: Vec<usize> = (1..=pieces).filter(|b| pieces % b == 0).collect();
        let blocks = divisors[rng.gen_range(0..divisors.len())];
        let per = pieces / blocks;
        let mut out = Vec::with_capacity(pieces);
        for _ in 0..blocks {
            let a = uniform_in_ball(rng, q);
            for _ in 0..per {
                out.push(a.clone());
            }
        }
        ControlPath { pieces: out }
    }

    /// `Σ_j a_j² < 1` on every piece.
    pub fn is_admissible(&self) -> bool {
        self.pieces.iter().all(|a| a.iter().map(|v| v * v).sum::<f64>() < 1.0)
    }
}

fn uniform_in_ball<R: Rng>(rng: &mut R, q: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() < 1.0 {
            return v;
        }
    }
}

/// `δ^{d_j} = Π_μ δ_μ^{d_{j,μ}}` per field; a single `δ` is broadcast over the parameters.
pub fn dilation_factors(system: &FieldSystem, delta: &[f64]) -> Result<Vec<f64>> {
    let nu = system.nu();
    let delta: Vec<f64> = match delta.len() {
        1 => vec![delta[0]; nu],
        l if l == nu => delta.to_vec(),
        l => return Err(Error::Structure(alloc::format!("{l} scales for {nu} parameters"))),
    };
    if delta.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::Domain("scales must be positive and finite".into()));
    }
    Ok((0..system.q())
        .map(|j| system.degree(j).iter().zip(&delta).map(|(&d, &s)| s.powi(d as i32)).product())
        .collect())
}

/// Mergeable accumulator of binned samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Occupancy {
    pub cells: HashSet<Vec<i64>>,
    /// `(path index, endpoint)` of successful paths.
    pub endpoints: Vec<(u64, Vec<f64>)>,
    pub failed: u64,
    pub total: u64,
}

impl Occupancy {
    /// Set union of cells, concatenation of endpoints.
    pub fn merge(mut self, other: Occupancy) -> Occupancy {
        self.cells.extend(other.cells);
        self.endpoints.extend(other.endpoints);
        self.failed += other.failed;
        self.total += other.total;
        self
    }
}

/// Occupancy-based bounds for the volume of a sampled ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallEstimate {
    pub center: Vec<f64>,
    pub delta: Vec<f64>,
    pub binning: Binning,
    /// Dimension of the binning coordinates (`0` at a degenerate point).
    pub dim: usize,
    /// Reference tuple of the linear or chart binning.
    pub j0: Vec<usize>,
    pub cell_size: f64,
    pub endpoints: Vec<Vec<f64>>,
    pub occupied_cells: usize,
    pub dilated_cells: usize,
    pub volume_lower: f64,
    pub volume_upper: f64,
    pub n_paths: u64,
    pub n_failed: u64,
    #[serde(skip)]
    cells: Vec<Vec<i64>>,
}

impl BallEstimate {
    /// Occupied cells in sorted order.
    pub fn cells(&self) -> &[Vec<i64>] {
        &self.cells
    }
}

#[derive(Debug, Clone)]
enum Transform {
    Degenerate,
    Ambient,
    Linear { pinv: Mat, weight: f64 },
    Chart(NumericChart),
}

/// Prepared sampler; [`BallSampler::sample`] can run on disjoint path ranges
/// in parallel, and the merged [`Occupancy`] is independent of the split.
#[derive(Debug, Clone)]
pub struct BallSampler {
    flow: Flow,
    factors: Vec<f64>,
    x0: Vec<f64>,
    delta: Vec<f64>,
    opts: BallOptions,
    flow_opts: FlowOptions,
    binning: Binning,
    j0: Vec<usize>,
    transform: Transform,
}

impl BallSampler {
    pub fn new(system: &FieldSystem, x0: &[f64], delta: &[f64], opts: &BallOptions) -> Result<Self> {
        if x0.len() != system.ambient_dim() {
            return Err(Error::Structure("base point has the wrong dimension".into()));
        }
        if !(opts.cell_size > 0.0) || opts.pieces == 0 || opts.n_paths == 0 {
            return Err(Error::Domain("cell size, pieces and path count must be positive".into()));
        }
        let factors = dilation_factors(system, delta)?;
        let dilated = system.scaled(&factors)?;
        let bounds = opts.bounds.clone().unwrap_or_else(|| Bounds::around(x0, system.radius()));
        let flow_opts = FlowOptions { integrator: opts.integrator, bounds: Some(bounds), ..FlowOptions::default() };
        let selection = match select_j0(&dilated, x0, 1.0) {
            Ok(s) => Some(s),
            Err(Error::DegeneratePoint) => None,
            Err(e) => return Err(e),
        };
        let full = selection.as_ref().is_some_and(|s| s.n == system.ambient_dim());
        let binning = opts.binning.unwrap_or(if full { Binning::Linear } else { Binning::Chart });
        let j0 = selection.as_ref().map(|s| s.j0.clone()).unwrap_or_default();
        let transform = match (binning, &selection) {
            (Binning::Ambient, _) => Transform::Ambient,
            (_, None) => Transform::Degenerate,
            (Binning::Linear, Some(s)) => {
                let cols: Vec<Vec<f64>> = s.j0.iter().map(|&j| dilated.field(j).evaluate(x0)).collect();
                let sm = Mat::from_columns(&cols);
                let pinv = linalg::left_inverse(&sm).ok_or(Error::ChartDegeneracy(f64::INFINITY))?;
                Transform::Linear { pinv, weight: linalg::norm2(&linalg::maximal_minors(&sm)) }
            }
            (Binning::Chart, Some(s)) => Transform::Chart(NumericChart::new(&dilated, &s.j0, x0, flow_opts.clone())?),
        };
        Ok(BallSampler {
            flow: Flow::new(&dilated),
            factors,
            x0: x0.to_vec(),
            delta: delta.to_vec(),
            opts: opts.clone(),
            flow_opts,
            binning,
            j0,
            transform,
        })
    }

    pub fn binning(&self) -> Binning {
        self.binning
    }

    /// Dilation factors `δ^{d_j}` in use.
    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    fn bin_dim(&self) -> usize {
        match &self.transform {
            Transform::Degenerate => 0,
            Transform::Ambient => self.x0.len(),
            Transform::Linear { pinv, .. } => pinv.rows,
            Transform::Chart(c) => c.n(),
        }
    }

    /// Binning coordinates of `y`; `guess` seeds the chart inversion.
    fn coords(&self, y: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        match &self.transform {
            Transform::Degenerate => Ok(Vec::new()),
            Transform::Ambient => Ok(y.to_vec()),
            Transform::Linear { pinv, .. } => {
                let d: Vec<f64> = y.iter().zip(&self.x0).map(|(a, b)| a - b).collect();
                Ok(pinv.matvec(&d))
            }
            Transform::Chart(c) => {
                let zero = vec![0.0; c.n()];
                c.invert(y, guess.unwrap_or(&zero))
            }
        }
    }

    fn cell_of(&self, u: &[f64]) -> Vec<i64> {
        u.iter().map(|v| (v / self.opts.cell_size).floor() as i64).collect()
    }

    /// Flows paths `range` (indices into the seeded path stream) and bins them.
    pub fn sample(&self, range: Range<u64>) -> Occupancy {
        let mut occ = Occupancy::default();
        let q = self.factors.len();
        let k = self.opts.pieces;
        for i in range {
            occ.total += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
            rng.set_stream(i);
            let path = ControlPath::sample(&mut rng, q, k);
            match self.run_path(&path) {
                Some(points) => {
                    let mut guess: Option<Vec<f64>> = None;
                    let mut ok = true;
                    let mut cells = Vec::with_capacity(points.len());
                    for p in &points {
                        match self.coords(p, guess.as_deref()) {
                            Ok(u) => {
                                cells.push(self.cell_of(&u));
                                guess = Some(u);
                            }
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        occ.cells.extend(cells);
                        occ.endpoints.push((i, points.last().cloned().unwrap_or_default()));
                    } else {
                        occ.failed += 1;
                    }
                }
                None => occ.failed += 1,
            }
        }
        occ
    }

    // piece boundaries x0, E(1/K), …, E(1); None when a piece fails
    fn run_path(&self, path: &ControlPath) -> Option<Vec<Vec<f64>>> {
        let k = path.pieces.len() as f64;
        let mut x = self.x0.clone();
        let mut points = vec![x.clone()];
        for a in &path.pieces {
            let scaled: Vec<f64> = a.iter().map(|v| v / k).collect();
            let res = self.flow.exp(&scaled, &x, &self.flow_opts).ok()?;
            if !res.success {
                return None;
            }
            x = res.endpoint;
            points.push(x.clone());
        }
        Some(points)
    }

    fn cell_weight(&self, cell: &[i64]) -> Result<f64> {
        let h = self.opts.cell_size;
        let n = self.bin_dim();
        let base = h.powi(n as i32);
        match &self.transform {
            Transform::Degenerate => Ok(1.0),
            Transform::Ambient => Ok(base),
            Transform::Linear { weight, .. } => Ok(base * weight),
            Transform::Chart(c) => {
                let t: Vec<f64> = cell.iter().map(|&i| (i as f64 + 0.5) * h).collect();
                let (_, d) = c.eval(&t)?;
                Ok(base * linalg::norm2(&linalg::maximal_minors(&d)))
            }
        }
    }

    /// Volume bounds from a merged occupancy.
    pub fn finish(&self, occ: Occupancy) -> Result<BallEstimate> {
        let total = occ.total.max(1);
        if occ.failed as f64 > self.opts.max_failure_fraction * total as f64 {
            return Err(Error::DomainTooSmall { failed: occ.failed as usize, total: total as usize });
        }
        let mut endpoints = occ.endpoints;
        endpoints.sort_by_key(|(i, _)| *i);
        let endpoints: Vec<Vec<f64>> = endpoints.into_iter().map(|(_, p)| p).collect();
        let mut cells: Vec<Vec<i64>> = occ.cells.into_iter().collect();
        cells.sort();
        let (volume_lower, volume_upper, dilated_cells) = if let Transform::Degenerate = self.transform {
            (1.0, 1.0, 1)
        } else {
            let dilated = dilate_cells(&cells);
            let lower = cells.iter().map(|c| self.cell_weight(c)).sum::<Result<f64>>()?;
            let upper = dilated.iter().map(|c| self.cell_weight(c)).sum::<Result<f64>>()?;
            (lower, upper, dilated.len())
        };
        Ok(BallEstimate {
            center: self.x0.clone(),
            delta: self.delta.clone(),
            binning: self.binning,
            dim: self.bin_dim(),
            j0: self.j0.clone(),
            cell_size: self.opts.cell_size,
            endpoints,
            occupied_cells: cells.len(),
            dilated_cells,
            volume_lower,
            volume_upper,
            n_paths: occ.total,
            n_failed: occ.failed,
            cells,
        })
    }

    /// `y` lies in the one-cell dilation of the occupied set.
    pub fn contains(&self, estimate: &BallEstimate, y: &[f64]) -> bool {
        if let Transform::Degenerate = self.transform {
            return y.iter().zip(&self.x0).all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let Ok(u) = self.coords(y, None) else { return false };
        let c = self.cell_of(&u);
        neighbours(&c).iter().any(|nb| estimate.cells.binary_search(nb).is_ok())
    }
}

fn neighbours(c: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![c.to_vec()];
    for i in 0..c.len() {
        let mut next = Vec::with_capacity(out.len() * 3);
        for v in &out {
            for d in [-1i64, 0, 1] {
                let mut w = v.clone();
                w[i] += d;
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn dilate_cells(cells: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut set: HashSet<Vec<i64>> = HashSet::new();
    for c in cells {
        set.extend(neighbours(c));
    }
    let mut out: Vec<Vec<i64>> = set.into_iter().collect();
    out.sort();
    out
}

/// Sampled `B_{δ^d X}(x0, 1)` with occupancy volume bounds.
pub fn reachable_set(system: &FieldSystem, x0: &[f64], delta: &[f64], opts: &BallOptions) -> Result<BallEstimate> {
    let sampler = BallSampler::new(system, x0, delta, opts)?;
    let occ = sampler.sample(0..opts.n_paths as u64);
    sampler.finish(occ)
}

/// Bisection estimate of `ρ(x, y)` on `(0, delta_max]` with membership
/// "`y` within one dilated cell of the sampled ball". `None` when `y` is not
/// reached at `delta_max`. Single-parameter systems only.
pub fn estimate_distance(
    system: &FieldSystem,
    x: &[f64],
    y: &[f64],
    delta_max: f64,
    opts: &BallOptions,
    iterations: usize,
) -> Result<Option<f64>> {
    let member = |d: f64| -> Result<bool> {
        let s = BallSampler::new(system, x, &[d], opts)?;
        let est = s.finish(s.sample(0..opts.n_paths as u64))?;
        Ok(s.contains(&est, y))
    };
    if !member(delta_max)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, delta_max);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if member(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
