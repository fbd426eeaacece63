//! Configuration averaging over percolation realizations.
//!
//! Each seed identifies one lattice realization; realizations run in parallel
//! (each walk itself is single-threaded) and their MSD rows are reduced in
//! ascending-seed order, so results are bit-identical regardless of thread
//! count or completion order.

use crate::diffusion::{MsdSeries, SampleSchedule};
use crate::error::{Error, Result};
use crate::protocol::ProtocolSpec;
use crate::walk::{GrowthPolicy, Walk};
use rayon::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

/// Everything needed to run and average one disorder ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleParams {
    /// Site occupation probability.
    pub p: f64,
    pub spec: ProtocolSpec,
    /// Realization seeds; must be distinct. Reduction always happens in
    /// ascending order no matter how they are listed.
    pub seeds: Vec<u64>,
    pub t_max: u64,
    pub schedule: SampleSchedule,
    pub policy: GrowthPolicy,
}

impl EnsembleParams {
    pub fn new(p: f64, spec: ProtocolSpec, seeds: Vec<u64>, t_max: u64) -> EnsembleParams {
        EnsembleParams {
            p,
            spec,
            seeds,
            t_max,
            schedule: SampleSchedule::default(),
            policy: GrowthPolicy::default(),
        }
    }
}

/// Run one realization and record its MSD at the given (ascending) times.
pub fn run_single_msd(
    p: f64,
    seed: u64,
    spec: &ProtocolSpec,
    policy: &GrowthPolicy,
    times: &[u64],
) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sample times must be strictly increasing"));
    }
    let mut walk = Walk::new(p, seed, spec.clone(), policy.clone())?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        walk.run_to(t)?;
        out.push(walk.msd());
    }
    let norm = walk.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        log::warn!("seed {seed}: norm drifted to {norm:.2e} after {} steps", walk.step_count());
    }
    Ok(out)
}

/// Run the full ensemble and average.
///
/// Fails fast if any realization fails (e.g. runs out of memory), reporting
/// how many configurations had already completed.
pub fn ensemble_msd(params: &EnsembleParams) -> Result<MsdSeries> {
    if params.seeds.is_empty() {
        return Err(Error::invalid("at least one seed required"));
    }
    let mut seeds = params.seeds.clone();
    seeds.sort_unstable();
    if seeds.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("seeds must be distinct"));
    }
    let times = params.schedule.times(params.t_max);
    let total = seeds.len();
    let done = AtomicUsize::new(0);
    let started = Instant::now();
    let log_every = (total / 20).max(1);

    let rows: std::result::Result<Vec<Vec<f64>>, Error> = seeds
        .par_iter()
        .map(|&seed| {
            let row = run_single_msd(params.p, seed, &params.spec, &params.policy, &times)
                .map_err(|e| {
                    let finished = done.load(Ordering::Relaxed);
                    Error::resource(format!(
                        "realization with seed {seed} failed after {finished}/{total} \
                         configurations completed: {e}"
                    ))
                })?;
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            if n % log_every == 0 || n == total {
                let rate = n as f64 / started.elapsed().as_secs_f64().max(1e-9);
                log::info!("completed {n}/{total} configurations ({rate:.2} configs/s)");
            }
            Ok(row)
        })
        .collect();

    Ok(MsdSeries::from_rows(times, rows?))
}
