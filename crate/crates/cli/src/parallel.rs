//! Ball sampling on a rayon pool. Paths are split into fixed ranges, so the
//! merged occupancy (and the estimate) does not depend on the thread count.

use std::ops::Range;

use adchart_core::fields::FieldSystem;
use adchart_core::flow::{BallEstimate, BallOptions, BallSampler, Occupancy};
use rayon::prelude::*;

use crate::error::{CliError, Result};

const CHUNK: u64 = 1024;

/// A pool with `jobs` threads; `0` uses rayon's default.
pub fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Arguments(format!("cannot start {jobs} worker threads: {e}")))
}

pub fn par_reachable_set(
    pool: &rayon::ThreadPool,
    system: &FieldSystem,
    x0: &[f64],
    delta: &[f64],
    opts: &BallOptions,
) -> adchart_core::Result<BallEstimate> {
    let sampler = BallSampler::new(system, x0, delta, opts)?;
    let total = opts.n_paths as u64;
    let ranges: Vec<Range<u64>> = (0..total.div_ceil(CHUNK)).map(|k| k * CHUNK..((k + 1) * CHUNK).min(total)).collect();
    let occ =
        pool.install(|| ranges.into_par_iter().map(|r| sampler.sample(r)).reduce(Occupancy::default, Occupancy::merge));
    sampler.finish(occ)
}
