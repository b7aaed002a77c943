//! Metropolis chains targeting a DERGM at fixed θ.
//!
//! Two proposals: independent draws from a support sampler, and tie-no-tie
//! toggles (delete a uniform edge or add a uniform non-edge with equal
//! probability). Adds that push the degeneracy above `k` are rejected.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::degeneracy::{count_degenerate_orderings, degeneracy, is_within_degeneracy_with, PeelScratch};
use crate::error::{Error, Result};
use crate::graph::{change_stats_into, compute_stats, dot, Graph, StatisticSet};
use crate::samplers::{draw_rng, SamplerConfig, Strategy, SupportSampler};

/// Natural parameter vector aligned with a statistic set.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta(Vec<f64>);

impl Theta {
    pub fn new(values: Vec<f64>, stats: &StatisticSet) -> Result<Self> {
        if values.len() != stats.dim() {
            return Err(Error::DimensionMismatch { expected: stats.dim(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(Theta(values))
    }

    pub fn zeros(stats: &StatisticSet) -> Self {
        Theta(vec![0.0; stats.dim()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proposal {
    /// Fresh support draws under the given strategy.
    Independent(Strategy),
    TieNoTie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub steps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub proposal: Proposal,
    /// Starting state; the empty graph when `None`.
    pub initial: Option<Graph>,
    /// Retain full graphs alongside their statistics.
    pub keep_graphs: bool,
}

impl ChainConfig {
    /// Tie-no-tie chain with burn-in `10·C(n,2)` and thinning `C(n,2)`
    /// retaining `samples` states.
    pub fn tnt(n: usize, samples: u64, seed: u64) -> Self {
        let dyads = (n * n.saturating_sub(1) / 2).max(1) as u64;
        ChainConfig {
            steps: 10 * dyads + samples * dyads,
            burn_in: 10 * dyads,
            thin: dyads,
            seed,
            proposal: Proposal::TieNoTie,
            initial: None,
            keep_graphs: false,
        }
    }

    pub fn independent(strategy: Strategy, steps: u64, burn_in: u64, thin: u64, seed: u64) -> Self {
        ChainConfig {
            steps,
            burn_in,
            thin,
            seed,
            proposal: Proposal::Independent(strategy),
            initial: None,
            keep_graphs: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps <= self.burn_in {
            return Err(Error::InvalidArgument("steps must exceed burn_in".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of states a run retains.
    pub fn retained(&self) -> u64 {
        (self.steps - self.burn_in) / self.thin
    }
}

/// Retained chain states: their statistics (and optionally the graphs).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    dim: usize,
    stats: Vec<f64>,
    pub graphs: Option<Vec<Graph>>,
    /// `(chain, step)` of each retained state.
    pub indices: Vec<(u32, u64)>,
    pub accepted: u64,
    pub proposed: u64,
    pub configs: Vec<ChainConfig>,
}

impl SampleBatch {
    pub fn new(dim: usize) -> Self {
        SampleBatch {
            dim,
            stats: Vec::new(),
            graphs: None,
            indices: Vec::new(),
            accepted: 0,
            proposed: 0,
            configs: Vec::new(),
        }
    }

    /// Batch of statistic vectors only (e.g. from independent support draws).
    pub fn from_rows(dim: usize, stats: Vec<f64>) -> Result<Self> {
        if dim == 0 || !stats.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: stats.len() });
        }
        let len = stats.len() / dim;
        let mut b = SampleBatch::new(dim);
        b.stats = stats;
        b.indices = (0..len as u64).map(|i| (0, i)).collect();
        Ok(b)
    }

    pub fn push(&mut self, t: &[f64], index: (u32, u64)) {
        debug_assert_eq!(t.len(), self.dim);
        self.stats.extend_from_slice(t);
        self.indices.push(index);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.stats[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.stats.chunks_exact(self.dim)
    }

    /// Flat statistics, row length [`dim`](Self::dim).
    pub fn flat(&self) -> &[f64] {
        &self.stats
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposed as f64
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, x) in m.iter_mut().zip(r) {
                *a += x;
            }
        }
        let len = self.len().max(1) as f64;
        m.iter_mut().for_each(|a| *a /= len);
        m
    }

    /// Sample covariance (divisor `len − 1`), row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim;
        let mean = self.mean();
        let mut c = vec![0.0; d * d];
        for r in self.rows() {
            for i in 0..d {
                for j in 0..d {
                    c[i * d + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
                }
            }
        }
        let denom = (self.len().max(2) - 1) as f64;
        c.iter_mut().for_each(|x| *x /= denom);
        c
    }

    /// Concatenates batches in order, keeping per-chain indices and configs.
    pub fn merge(batches: Vec<SampleBatch>) -> Result<SampleBatch> {
        let mut iter = batches.into_iter();
        let mut out = iter.next().ok_or(Error::Empty)?;
        for b in iter {
            if b.dim != out.dim {
                return Err(Error::DimensionMismatch { expected: out.dim, got: b.dim });
            }
            out.stats.extend(b.stats);
            out.indices.extend(b.indices);
            out.accepted += b.accepted;
            out.proposed += b.proposed;
            out.configs.extend(b.configs);
            out.graphs = match (out.graphs.take(), b.graphs) {
                (Some(mut a), Some(g)) => {
                    a.extend(g);
                    Some(a)
                }
                _ => None,
            };
        }
        Ok(out)
    }
}

/// Tie-no-tie Metropolis–Hastings state with O(1) edge and non-edge draws.
#[derive(Debug, Clone)]
pub struct TntChain {
    g: Graph,
    k: usize,
    stats: StatisticSet,
    theta: Vec<f64>,
    t: Vec<f64>,
    edges: Vec<(u32, u32)>,
    non_edges: Vec<(u32, u32)>,
    /// Position of dyad `u·n + v` in whichever list holds it.
    pos: Vec<u32>,
    delta: Vec<f64>,
    scratch: PeelScratch,
    steps: u64,
    accepted: u64,
}

impl TntChain {
    pub fn new(initial: Graph, k: usize, stats: &StatisticSet, theta: &[f64]) -> Result<Self> {
        if theta.len() != stats.dim() {
            return Err(Error::DimensionMismatch { expected: stats.dim(), got: theta.len() });
        }
        let deg = degeneracy(&initial).k;
        if deg > k {
            return Err(Error::OutsideSupport { degeneracy: deg, k });
        }
        let n = initial.n();
        let mut edges = Vec::new();
        let mut non_edges = Vec::new();
        let mut pos = vec![0u32; n * n];
        for u in 0..n {
            for v in u + 1..n {
                let list = if initial.has_edge(u, v) { &mut edges } else { &mut non_edges };
                pos[u * n + v] = list.len() as u32;
                list.push((u as u32, v as u32));
            }
        }
        Ok(TntChain {
            t: compute_stats(&initial, stats).0,
            g: initial,
            k,
            stats: stats.clone(),
            theta: theta.to_vec(),
            edges,
            non_edges,
            pos,
            delta: vec![0.0; stats.dim()],
            scratch: PeelScratch::default(),
            steps: 0,
            accepted: 0,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.g
    }

    pub fn stats(&self) -> &[f64] {
        &self.t
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    fn move_dyad(from: &mut Vec<(u32, u32)>, to: &mut Vec<(u32, u32)>, pos: &mut [u32], n: usize, slot: usize) {
        let d = from.swap_remove(slot);
        if slot < from.len() {
            let moved = from[slot];
            pos[moved.0 as usize * n + moved.1 as usize] = slot as u32;
        }
        pos[d.0 as usize * n + d.1 as usize] = to.len() as u32;
        to.push(d);
    }

    /// One proposal; returns whether the state changed.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        self.steps += 1;
        let n = self.g.n();
        let dyads = (self.edges.len() + self.non_edges.len()) as f64;
        let m = self.edges.len() as f64;
        let delete = rng.gen::<bool>();
        let (pool_len, hastings) = if delete {
            (self.edges.len(), m / (dyads - m + 1.0))
        } else {
            (self.non_edges.len(), (dyads - m) / (m + 1.0))
        };
        if pool_len == 0 {
            return false;
        }
        let slot = rng.gen_range(0..pool_len);
        let (u, v) = if delete { self.edges[slot] } else { self.non_edges[slot] };
        let (u, v) = (u as usize, v as usize);
        change_stats_into(&self.g, u, v, &self.stats, &mut self.delta);
        let ratio = hastings * libm::exp(dot(&self.theta, &self.delta));
        if ratio < 1.0 && rng.gen::<f64>() >= ratio {
            return false;
        }
        if delete {
            self.g.remove_edge(u, v).expect("valid pair");
            Self::move_dyad(&mut self.edges, &mut self.non_edges, &mut self.pos, n, slot);
        } else {
            self.g.add_edge(u, v).expect("valid pair");
            if !is_within_degeneracy_with(&self.g, self.k, &mut self.scratch) {
                self.g.remove_edge(u, v).expect("valid pair");
                return false;
            }
            Self::move_dyad(&mut self.non_edges, &mut self.edges, &mut self.pos, n, slot);
        }
        for (t, d) in self.t.iter_mut().zip(&self.delta) {
            *t += d;
        }
        self.accepted += 1;
        #[cfg(debug_assertions)]
        if self.steps.is_multiple_of(1000) {
            assert_eq!(self.t, compute_stats(&self.g, &self.stats).0, "incremental statistics drifted");
        }
        true
    }
}

/// Independent Metropolis state. Proposals from the permuted well-ordered
/// sampler have density proportional to the number of degeneracy orderings
/// `W(g)`, and the acceptance ratio carries `W(g)/W(g')` when `n` is small
/// enough to count them.
#[derive(Debug, Clone)]
pub struct IndependentChain {
    g: Graph,
    k: usize,
    stats: StatisticSet,
    theta: Vec<f64>,
    t: Vec<f64>,
    log_w: f64,
    sampler: SupportSampler,
    corrected: bool,
    steps: u64,
    accepted: u64,
}

/// Largest `n` for which permuted proposals are density-corrected.
pub const ORDERING_CORRECTION_MAX_N: usize = 12;

fn log_orderings(g: &Graph, k: usize) -> f64 {
    let w = count_degenerate_orderings(g, k).expect("n within ordering-count limit");
    libm::log(w as f64)
}

impl IndependentChain {
    pub fn new(initial: Graph, k: usize, stats: &StatisticSet, theta: &[f64], strategy: Strategy) -> Result<Self> {
        if theta.len() != stats.dim() {
            return Err(Error::DimensionMismatch { expected: stats.dim(), got: theta.len() });
        }
        let deg = degeneracy(&initial).k;
        if deg > k {
            return Err(Error::OutsideSupport { degeneracy: deg, k });
        }
        let n = initial.n();
        let sampler = SupportSampler::new(&SamplerConfig::new(n, k, 0, strategy)?)?;
        let corrected = strategy == Strategy::WellOrderedPermuted && n <= ORDERING_CORRECTION_MAX_N;
        let log_w = if corrected { log_orderings(&initial, k) } else { 0.0 };
        Ok(IndependentChain {
            t: compute_stats(&initial, stats).0,
            g: initial,
            k,
            stats: stats.clone(),
            theta: theta.to_vec(),
            log_w,
            sampler,
            corrected,
            steps: 0,
            accepted: 0,
        })
    }

    /// Whether the stationary law is exactly the DERGM on `G_{n,k}`.
    pub fn is_exact(&self) -> bool {
        match self.sampler.config().strategy {
            Strategy::Rejection => true,
            Strategy::WellOrderedPermuted => self.corrected,
            Strategy::WellOrdered => self.k + 1 >= self.g.n(),
            _ => false,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.g
    }

    pub fn stats(&self) -> &[f64] {
        &self.t
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        self.steps += 1;
        let proposal = self.sampler.sample(rng)?;
        let t = compute_stats(&proposal, &self.stats).0;
        let mut log_ratio: f64 = self.theta.iter().zip(t.iter().zip(&self.t)).map(|(th, (a, b))| th * (a - b)).sum();
        let log_w = if self.corrected { log_orderings(&proposal, self.k) } else { 0.0 };
        log_ratio += self.log_w - log_w;
        if log_ratio < 0.0 && libm::log(rng.gen::<f64>()) >= log_ratio {
            return Ok(false);
        }
        self.g = proposal;
        self.t = t;
        self.log_w = log_w;
        self.accepted += 1;
        Ok(true)
    }
}

fn collect<F>(cfg: &ChainConfig, dim: usize, chain_id: u32, mut step: F) -> Result<SampleBatch>
where
    F: FnMut() -> Result<(bool, Option<Graph>, Vec<f64>)>,
{
    cfg.validate()?;
    let mut batch = SampleBatch::new(dim);
    if cfg.keep_graphs {
        batch.graphs = Some(Vec::new());
    }
    for s in 1..=cfg.steps {
        let (acc, g, t) = step()?;
        batch.proposed += 1;
        batch.accepted += acc as u64;
        if s > cfg.burn_in && (s - cfg.burn_in).is_multiple_of(cfg.thin) {
            batch.push(&t, (chain_id, s));
            if let (Some(gs), Some(g)) = (batch.graphs.as_mut(), g) {
                gs.push(g);
            }
        }
    }
    batch.configs.push(cfg.clone());
    Ok(batch)
}

fn start(cfg: &ChainConfig, n: usize) -> Result<Graph> {
    match &cfg.initial {
        Some(g) if g.n() != n => Err(Error::InvalidArgument("initial graph has the wrong order".into())),
        Some(g) => Ok(g.clone()),
        None => Ok(Graph::empty(n)),
    }
}

/// Tie-no-tie chain at `theta`.
pub fn mh_tnt<R: Rng + ?Sized>(
    theta: &Theta,
    n: usize,
    k: usize,
    stats: &StatisticSet,
    cfg: &ChainConfig,
    rng: &mut R,
) -> Result<SampleBatch> {
    run_tnt(theta.as_slice(), n, k, stats, cfg, 0, rng)
}

fn run_tnt<R: Rng + ?Sized>(
    theta: &[f64],
    n: usize,
    k: usize,
    stats: &StatisticSet,
    cfg: &ChainConfig,
    chain_id: u32,
    rng: &mut R,
) -> Result<SampleBatch> {
    if cfg.proposal != Proposal::TieNoTie {
        return Err(Error::InvalidArgument("mh_tnt needs the tie-no-tie proposal".into()));
    }
    let mut chain = TntChain::new(start(cfg, n)?, k, stats, theta)?;
    let keep = cfg.keep_graphs;
    collect(cfg, stats.dim(), chain_id, || {
        let acc = chain.step(rng);
        Ok((acc, keep.then(|| chain.graph().clone()), chain.stats().to_vec()))
    })
}

/// Independent-proposal Metropolis chain at `theta`.
pub fn mh_independent<R: Rng + ?Sized>(
    theta: &Theta,
    n: usize,
    k: usize,
    stats: &StatisticSet,
    cfg: &ChainConfig,
    rng: &mut R,
) -> Result<SampleBatch> {
    run_independent(theta.as_slice(), n, k, stats, cfg, 0, rng)
}

fn run_independent<R: Rng + ?Sized>(
    theta: &[f64],
    n: usize,
    k: usize,
    stats: &StatisticSet,
    cfg: &ChainConfig,
    chain_id: u32,
    rng: &mut R,
) -> Result<SampleBatch> {
    let Proposal::Independent(strategy) = cfg.proposal else {
        return Err(Error::InvalidArgument("mh_independent needs an independent proposal".into()));
    };
    let mut chain = IndependentChain::new(start(cfg, n)?, k, stats, theta, strategy)?;
    let keep = cfg.keep_graphs;
    collect(cfg, stats.dim(), chain_id, || {
        let acc = chain.step(rng)?;
        Ok((acc, keep.then(|| chain.graph().clone()), chain.stats().to_vec()))
    })
}

/// Runs a fixed number of independent jobs, possibly in parallel. Results
/// must come back in job order.
pub trait ChainRunner {
    fn run(&self, jobs: usize, job: &(dyn Fn(usize) -> Result<SampleBatch> + Sync)) -> Result<Vec<SampleBatch>>;
}

/// Runs jobs one after another.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ChainRunner for Sequential {
    fn run(&self, jobs: usize, job: &(dyn Fn(usize) -> Result<SampleBatch> + Sync)) -> Result<Vec<SampleBatch>> {
        (0..jobs).map(job).collect()
    }
}

/// `chains` chains of `cfg`, chain `c` driven by `draw_rng(cfg.seed, c)`,
/// merged in chain order. The result does not depend on the runner.
pub fn run_chains(
    theta: &[f64],
    n: usize,
    k: usize,
    stats: &StatisticSet,
    cfg: &ChainConfig,
    chains: usize,
    runner: &dyn ChainRunner,
) -> Result<SampleBatch> {
    if chains == 0 {
        return Err(Error::InvalidArgument("need at least one chain".into()));
    }
    let job = |c: usize| -> Result<SampleBatch> {
        let mut rng = draw_rng(cfg.seed, c as u64);
        let mut chain_cfg = cfg.clone();
        chain_cfg.seed = cfg.seed.wrapping_add(c as u64);
        match cfg.proposal {
            Proposal::TieNoTie => run_tnt(theta, n, k, stats, &chain_cfg, c as u32, &mut rng),
            Proposal::Independent(_) => run_independent(theta, n, k, stats, &chain_cfg, c as u32, &mut rng),
        }
    };
    SampleBatch::merge(runner.run(chains, &job)?)
}

/// Draws per job in [`support_batch`].
const SUPPORT_CHUNK: usize = 1024;

/// Statistics of `count` independent support draws, draw `i` using
/// `draw_rng(cfg.seed, i)`. The result does not depend on the runner.
pub fn support_batch(
    cfg: &SamplerConfig,
    stats: &StatisticSet,
    count: usize,
    runner: &dyn ChainRunner,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::Empty);
    }
    let jobs = count.div_ceil(SUPPORT_CHUNK);
    let job = |c: usize| -> Result<SampleBatch> {
        let lo = c * SUPPORT_CHUNK;
        let hi = (lo + SUPPORT_CHUNK).min(count);
        let mut sampler = SupportSampler::new(cfg)?;
        let mut batch = SampleBatch::new(stats.dim());
        for i in lo..hi {
            let g = sampler.sample(&mut draw_rng(cfg.seed, i as u64))?;
            batch.push(&compute_stats(&g, stats).0, (0, i as u64));
        }
        Ok(batch)
    };
    SampleBatch::merge(runner.run(jobs, &job)?)
}
