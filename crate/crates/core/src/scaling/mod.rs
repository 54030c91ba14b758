//! Dilations `δ^d X`, the determinant maximiser `Λ(x, δ)`, charts at scale
//! `δ`, ball-volume tables and the leaf construction for families that do
//! not span.


use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::adapt::{
    build_adapted_chart, chart_grid, density_series, euclidean_density_data, prepare_system, AdaptedChart, ChartConfig,
    DensityData,
};
use crate::fields::{closure_rank_check, numerical_rank, select_j0, ClosureOptions, FieldSystem, WeightedField};
use crate::flow::{dilation_factors, reachable_set, BallEstimate, BallOptions, Binning};
use crate::linalg::{self, Mat};
use crate::math::k_subsets;
use crate::{Error, Result};

fn check_delta(delta: &[f64]) -> Result<()> {
    if delta.is_empty() || delta.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
        return Err(Error::Domain(alloc::format!("every scale must lie in (0, 1], got {delta:?}")));
    }
    Ok(())
}

/// `δ^d X`: field `j` multiplied by `Π_μ δ_μ^{d_{j,μ}}`. A single `δ` is used
/// for every parameter. Structure coefficients are rescaled along.
pub fn dilate(system: &FieldSystem, delta: &[f64]) -> Result<FieldSystem> {
    check_delta(delta)?;
    system.scaled(&dilation_factors(system, delta)?)
}

/// `Λ(x, δ)` and the maximising tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaValue {
    pub value: f64,
    pub argmax: Vec<usize>,
    /// Rank of the family at `x`.
    pub n0: usize,
}

/// `Λ(x, δ) = max_J |det_{n0×n0} (δ^d X)_J(x)|_∞` over increasing `n0`-tuples,
/// `n0` the rank at `x`; ties go to the lexicographically smallest tuple.
/// At a point where every field vanishes, `Λ = 1` with an empty tuple.
pub fn lambda(system: &FieldSystem, x: &[f64], delta: &[f64]) -> Result<LambdaValue> {
    let dilated = dilate(system, delta)?;
    match select_j0(&dilated, x, 1.0) {
        Ok(sel) => Ok(LambdaValue { value: sel.minor_norm, argmax: sel.j0, n0: sel.n }),
        Err(Error::DegeneratePoint) => Ok(LambdaValue { value: 1.0, argmax: Vec::new(), n0: 0 }),
        Err(e) => Err(e),
    }
}

/// Chart of `δ^d X` at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingChart {
    pub delta: Vec<f64>,
    /// `δ^{d_j}` per field.
    pub factors: Vec<f64>,
    pub lambda: LambdaValue,
    pub chart: AdaptedChart,
    /// `min_t max_K |det(Y_{k_1}(t) | … | Y_{k_n}(t))|` over the `|t| ≤ η₁/2` grid.
    pub span_min: f64,
}

/// Points per axis of the grid used for the span quantity.
pub const SPAN_GRID_POINTS: usize = 5;

/// Adapted chart for `δ^d X` at `x`, with `J0` the maximiser of `Λ(x, δ)`.
/// Structure coefficients are obtained for `X` (fitted if needed) and then
/// rescaled, `c^{l,δ}_{j,k} = δ^{d_j + d_k − d_l} c^l_{j,k}`.
pub fn scaling_chart(system: &FieldSystem, x: &[f64], delta: &[f64], cfg: &ChartConfig) -> Result<ScalingChart> {
    check_delta(delta)?;
    let (prepared, _, _) = prepare_system(system, x, cfg)?;
    let factors = dilation_factors(&prepared, delta)?;
    let dilated = prepared.scaled(&factors)?;
    let lam = lambda(&prepared, x, delta)?;
    if lam.n0 == 0 {
        return Err(Error::DegeneratePoint);
    }
    let cfg = ChartConfig { forced_j0: Some(lam.argmax.clone()), ..cfg.clone() };
    let chart = build_adapted_chart(&dilated, x, &cfg)?;
    let span_min = span_quantity(&chart, SPAN_GRID_POINTS)?;
    Ok(ScalingChart { delta: delta.to_vec(), factors, lambda: lam, chart, span_min })
}

/// `min_t max_K |det(Y_{k_1}(t) | … | Y_{k_n}(t))|` over the `|t| ≤ η₁/2` grid.
pub fn span_quantity(chart: &AdaptedChart, per_axis: usize) -> Result<f64> {
    let n = chart.n;
    let tuples = k_subsets(chart.y.len(), n);
    let mut worst = f64::INFINITY;
    for t in chart_grid(n, chart.eta1 / 2.0, per_axis) {
        let vals: Vec<Vec<f64>> = (0..chart.y.len()).map(|j| chart.eval_y(j, &t)).collect::<Result<_>>()?;
        let best = tuples
            .iter()
            .map(|k| {
                let cols: Vec<Vec<f64>> = k.iter().map(|&j| vals[j].clone()).collect();
                linalg::det(&Mat::from_columns(&cols)).abs()
            })
            .fold(0.0, f64::max);
        worst = worst.min(best);
    }
    Ok(worst)
}

/// Settings for [`volume_and_doubling`].
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeOptions {
    pub ball: BallOptions,
    /// Acceptable `vol/Λ` range; rows outside are flagged.
    pub ratio_band: Option<(f64, f64)>,
    /// Acceptable `vol(2δ)/vol(δ)` range.
    pub doubling_band: Option<(f64, f64)>,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions { ball: BallOptions::default(), ratio_band: None, doubling_band: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeRow {
    pub delta: Vec<f64>,
    pub lambda: f64,
    pub argmax: Vec<usize>,
    pub vol_lower: f64,
    pub vol_upper: f64,
    /// `vol_lower / Λ`.
    pub ratio: f64,
    /// `vol(2δ)/vol(δ)` when `2δ` is also on the grid.
    pub doubling: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeTable {
    pub x: Vec<f64>,
    pub rows: Vec<VolumeRow>,
    /// Least-squares slope of `log vol` against `log δ` (single-parameter grids).
    pub log_slope: Option<f64>,
    /// `max ratio / min ratio` over the rows.
    pub ratio_spread: f64,
}

/// Volume table with the sequential sampler.
pub fn volume_and_doubling(
    system: &FieldSystem,
    x: &[f64],
    grid: &[Vec<f64>],
    opts: &VolumeOptions,
) -> Result<VolumeTable> {
    volume_and_doubling_with(system, x, grid, opts, |s, x, d, o| reachable_set(s, x, d, o))
}

/// Volume table with a caller-supplied ball estimator (e.g. a parallel one).
pub fn volume_and_doubling_with<F>(
    system: &FieldSystem,
    x: &[f64],
    grid: &[Vec<f64>],
    opts: &VolumeOptions,
    mut estimate: F,
) -> Result<VolumeTable>
where
    F: FnMut(&FieldSystem, &[f64], &[f64], &BallOptions) -> Result<BallEstimate>,
{
    if grid.is_empty() {
        return Err(Error::Domain("empty scale grid".to_string()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for delta in grid {
        check_delta(delta)?;
        let lam = lambda(system, x, delta)?;
        let ball = estimate(system, x, delta, &opts.ball)?;
        let ratio = ball.volume_lower / lam.value;
        let mut flags = Vec::new();
        if let Some((lo, hi)) = opts.ratio_band {
            if !(ratio >= lo && ratio <= hi) {
                flags.push(alloc::format!("vol/Λ = {ratio:.4e} outside [{lo}, {hi}]"));
            }
        }
        rows.push(VolumeRow {
            delta: delta.clone(),
            lambda: lam.value,
            argmax: lam.argmax,
            vol_lower: ball.volume_lower,
            vol_upper: ball.volume_upper,
            ratio,
            doubling: None,
            flags,
        });
    }
    for i in 0..rows.len() {
        let twice: Vec<f64> = rows[i].delta.iter().map(|d| 2.0 * d).collect();
        let partner = rows.iter().position(|r| {
            r.delta.len() == twice.len() && r.delta.iter().zip(&twice).all(|(a, b)| (a - b).abs() <= 1e-9 * b)
        });
        if let Some(p) = partner {
            let dbl = rows[p].vol_lower / rows[i].vol_lower;
            rows[i].doubling = Some(dbl);
            if let Some((lo, hi)) = opts.doubling_band {
                if !(dbl >= lo && dbl <= hi) {
                    rows[i].flags.push(alloc::format!("doubling {dbl:.4} outside [{lo}, {hi}]"));
                }
            }
        }
    }
    let log_slope = if rows.len() >= 2 && rows.iter().all(|r| r.delta.len() == 1) {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta[0].ln(), r.vol_lower.ln())).collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            Some(sxy / sxx)
        } else {
            None
        }
    } else {
        None
    };
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(VolumeTable { x: x.to_vec(), rows, log_slope, ratio_spread: hi / lo })
}

/// A point together with its leaf data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafPoint {
    pub x: Vec<f64>,
    /// Leaf dimension `n0(x)`.
    pub n0: usize,
    pub leaf_chart: Option<AdaptedChart>,
}

/// Output of [`leaf_scaling`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafScaling {
    pub point: LeafPoint,
    pub delta: Vec<f64>,
    /// Number of fields in the bracket closure.
    pub closure_size: usize,
    pub lambda: LambdaValue,
    /// `ν_x(B_{(X,d)}(x, δ))`, from chart-coordinate binning.
    pub vol_lower: f64,
    pub vol_upper: f64,
    /// `vol_lower / Λ`.
    pub ratio: f64,
    /// Induced-Lebesgue density data of the chart at scale `δ`.
    pub density: Option<DensityData>,
    pub span_min: Option<f64>,
}

/// Settings for [`leaf_scaling`].
#[derive(Debug, Clone, PartialEq)]
pub struct LeafOptions {
    pub closure: ClosureOptions,
    pub chart: ChartConfig,
    pub ball: BallOptions,
}

impl Default for LeafOptions {
    fn default() -> Self {
        LeafOptions {
            closure: ClosureOptions::default(),
            chart: ChartConfig::default(),
            ball: BallOptions { binning: Some(Binning::Chart), ..BallOptions::default() },
        }
    }
}

/// Leaf data at `x` for generators that need not span: bracket closure to
/// depth `m` (checked against `m + 1`), leaf dimension, chart of the dilated
/// closure, and the induced-measure volume of the ball compared with `Λ`.
///
/// At a point where every field vanishes the leaf is `{x}`: `n0 = 0`,
/// `Λ = 1`, volume `1` (counting measure) and no chart.
pub fn leaf_scaling(
    generators: &[WeightedField],
    x: &[f64],
    delta: &[f64],
    m: u32,
    opts: &LeafOptions,
) -> Result<LeafScaling> {
    leaf_scaling_with(generators, x, delta, m, opts, |s, x, d, o| reachable_set(s, x, d, o))
}

/// [`leaf_scaling`] with a caller-supplied ball estimator.
pub fn leaf_scaling_with<F>(
    generators: &[WeightedField],
    x: &[f64],
    delta: &[f64],
    m: u32,
    opts: &LeafOptions,
    mut estimate: F,
) -> Result<LeafScaling>
where
    F: FnMut(&FieldSystem, &[f64], &[f64], &BallOptions) -> Result<BallEstimate>,
{
    check_delta(delta)?;
    let (closure, n0) = closure_rank_check(generators, m, x, opts.closure)?;
    debug_assert_eq!(n0, numerical_rank(&closure, x));
    if n0 == 0 {
        return Ok(LeafScaling {
            point: LeafPoint { x: x.to_vec(), n0: 0, leaf_chart: None },
            delta: delta.to_vec(),
            closure_size: closure.q(),
            lambda: LambdaValue { value: 1.0, argmax: Vec::new(), n0: 0 },
            vol_lower: 1.0,
            vol_upper: 1.0,
            ratio: 1.0,
            density: None,
            span_min: None,
        });
    }
    let sc = scaling_chart(&closure, x, delta, &opts.chart)?;
    let density = density_series(&sc.chart, &euclidean_density_data(&sc.chart)?)?;
    let ball_opts = BallOptions { binning: Some(opts.ball.binning.unwrap_or(Binning::Chart)), ..opts.ball.clone() };
    let ball = estimate(&closure, x, delta, &ball_opts)?;
    let ratio = ball.volume_lower / sc.lambda.value;
    Ok(LeafScaling {
        point: LeafPoint { x: x.to_vec(), n0, leaf_chart: Some(sc.chart) },
        delta: delta.to_vec(),
        closure_size: closure.q(),
        lambda: sc.lambda,
        vol_lower: ball.volume_lower,
        vol_upper: ball.volume_upper,
        ratio,
        density: Some(density),
        span_min: Some(sc.span_min),
    })
}

/// `vec![δ]` for each scale, the single-parameter grid.
pub fn single_parameter_grid(deltas: &[f64]) -> Vec<Vec<f64>> {
    deltas.iter().map(|&d| vec![d]).collect()
}
