//! Rayon drivers. Work is split into fixed chunks and reassembled in
//! order, so results never depend on the thread count.

use dergm_core::enumeration::{check_cap, graph_count, EnumerationTable};
use dergm_core::mcmc::{ChainRunner, SampleBatch};
use dergm_core::samplers::{sample_range, SamplerConfig};
use dergm_core::{Graph, Result};
use rayon::prelude::*;

/// Runs chain jobs on the current rayon pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl ChainRunner for Rayon {
    fn run(&self, jobs: usize, job: &(dyn Fn(usize) -> Result<SampleBatch> + Sync)) -> Result<Vec<SampleBatch>> {
        (0..jobs).into_par_iter().map(job).collect()
    }
}

const ENUMERATION_CHUNK: u64 = 1 << 16;
const SAMPLE_CHUNK: u64 = 256;

/// Statistic table over all graphs on `n` vertices.
pub fn enumerate(n: usize, allow_n8: bool) -> Result<EnumerationTable> {
    check_cap(n, allow_n8)?;
    let total = graph_count(n);
    let chunks = total.div_ceil(ENUMERATION_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * ENUMERATION_CHUNK;
            EnumerationTable::accumulate(n, lo..(lo + ENUMERATION_CHUNK).min(total), allow_n8)
        })
        .try_reduce(
            || EnumerationTable::zeros(n),
            |mut a, b| {
                a.merge(&b);
                Ok(a)
            },
        )
}

/// `count` support draws; draw `i` is seeded by `(cfg.seed, i)`.
pub fn sample_graphs(cfg: &SamplerConfig, count: usize) -> Result<Vec<Graph>> {
    let count = count as u64;
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<Vec<Graph>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * SAMPLE_CHUNK;
            sample_range(cfg, lo..(lo + SAMPLE_CHUNK).min(count))
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}
