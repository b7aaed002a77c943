//! Random graphs from the support `G_{n,k}`.
//!
//! The workhorse draws uniformly from the well-ordered graphs: vertex `i`
//! first draws its number of larger-labelled neighbours from a binomial
//! restricted to `0..=min(n−1−i, k)`, then picks that many of them without
//! replacement. Also here: a fixed-edge-count variant (not uniform), a
//! generator for graphs that are not well-ordered, the threshold that says
//! how much of the support those make up, and an exact rejection sampler
//! for small `n`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counting::{
    ln_partial_binomial_sum, ln_well_ordered_table, log_add_exp, log_sub_exp, lse_nonempty, well_ordered_count_any_k,
    LogFactorials,
};
use crate::degeneracy::{is_within_degeneracy_with, PeelScratch};
use crate::error::{Error, Result};
use crate::graph::{max_edges, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Uniform over well-ordered graphs.
    WellOrdered,
    /// Uniform well-ordered draw with uniformly permuted labels.
    WellOrderedPermuted,
    /// Mixture of well-ordered and non-well-ordered strata.
    Stratified,
    /// Fixed edge count, non-uniform.
    FixedM,
    /// `G(n, 1/2)` conditioned on degeneracy at most `k`; exact, small `n` only.
    Rejection,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::WellOrdered,
        Strategy::WellOrderedPermuted,
        Strategy::Stratified,
        Strategy::FixedM,
        Strategy::Rejection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::WellOrdered => "well_ordered",
            Strategy::WellOrderedPermuted => "well_ordered_permuted",
            Strategy::Stratified => "stratified",
            Strategy::FixedM => "fixed_m",
            Strategy::Rejection => "rejection",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown strategy '{s}'")))
    }
}

/// Default number of attempts before a rejection loop gives up.
pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerConfig {
    pub n: usize,
    pub k: usize,
    pub m: Option<usize>,
    pub seed: u64,
    pub strategy: Strategy,
    pub rejection_budget: u64,
}

impl SamplerConfig {
    pub fn new(n: usize, k: usize, seed: u64, strategy: Strategy) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain { n, k, reason: "n must be positive" });
        }
        if k > n - 1 {
            return Err(Error::Domain { n, k, reason: "k must not exceed n - 1" });
        }
        if strategy == Strategy::FixedM {
            return Err(Error::InvalidArgument("fixed_m needs an edge count; use with_m".into()));
        }
        Ok(SamplerConfig { n, k, m: None, seed, strategy, rejection_budget: DEFAULT_REJECTION_BUDGET })
    }

    /// Configuration for the fixed-edge-count sampler.
    pub fn with_m(n: usize, k: usize, m: usize, seed: u64) -> Result<Self> {
        let mut cfg = SamplerConfig::new(n, k, seed, Strategy::WellOrdered)?;
        let max = max_edges(n, k)?;
        if m as u64 > max {
            return Err(Error::InfeasibleEdgeCount { n, k, m, max });
        }
        cfg.m = Some(m);
        cfg.strategy = Strategy::FixedM;
        Ok(cfg)
    }
}

/// Independent RNG for draw `index` of a run seeded with `seed`. Batches
/// built from these are identical however the draws are distributed.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Distribution on `0..=c` with `P(d) ∝ C(m, d)`.
#[derive(Debug, Clone)]
pub struct RestrictedBinomial {
    pdf: Vec<f64>,
}

impl RestrictedBinomial {
    pub fn new(m: usize, c: usize) -> Result<Self> {
        if c > m {
            return Err(Error::InvalidArgument(alloc::format!("restricted binomial cap {c} exceeds {m}")));
        }
        let mut ln = Vec::with_capacity(c + 1);
        let mut acc = 0.0;
        ln.push(0.0);
        for d in 1..=c {
            acc += libm::log((m - d + 1) as f64) - libm::log(d as f64);
            ln.push(acc);
        }
        let z = lse_nonempty(ln.iter().copied());
        Ok(RestrictedBinomial { pdf: ln.into_iter().map(|l| libm::exp(l - z)).collect() })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.pdf
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u: f64 = rng.gen();
        for (d, &p) in self.pdf.iter().enumerate() {
            u -= p;
            if u < 0.0 {
                return d;
            }
        }
        self.pdf.len() - 1
    }
}

/// One draw of `d ∈ 0..=c` with `P(d) ∝ C(m, d)`.
pub fn restricted_binomial<R: Rng + ?Sized>(m: usize, c: usize, rng: &mut R) -> Result<usize> {
    Ok(RestrictedBinomial::new(m, c)?.sample(rng))
}

/// `ln n1`, the bound on `ln n2`, and the resulting
/// `t_estimated = ln(n1 / (n1 + n2_bound))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    pub n: usize,
    pub k: usize,
    pub log_n1: f64,
    pub log_upper_n2: f64,
    pub t_estimated: f64,
    pub negligible: bool,
}

/// Cut-off on `t_estimated` below which the non-well-ordered stratum counts.
pub const THRESHOLD_EPSILON: f64 = 1e-3;

/// Upper bound on the number of non-well-ordered graphs in `G_{n,k}`,
///
/// `Σ_c Σ_i C(n−i, k+c) · B_c · D_k(i) · i · Σ_{p=1..k} C(n−i, p)`
///
/// with `c = 1..n−k−1`, `i = 1..n−k−c`, evaluated in log space. The bracket
/// `B_c = 2^C(k+c,2) − (D_{k+c−1}(k+c) − D_k(k+c))` equals `D_k(k+c)`
/// because every graph on `k+c` vertices is `(k+c−1)`-well-ordered.
pub fn stratified_threshold(n: usize, k: usize) -> Result<ThresholdReport> {
    stratified_threshold_eps(n, k, THRESHOLD_EPSILON)
}

pub fn stratified_threshold_eps(n: usize, k: usize, eps: f64) -> Result<ThresholdReport> {
    if n < 2 || k + 2 > n {
        return Err(Error::Domain { n, k, reason: "needs k <= n - 2" });
    }
    let lf = LogFactorials::new(n);
    let ln_d = ln_well_ordered_table(n, k);
    // ln Σ_{p=1..k} C(r, p) for r = n − i ≥ k + 1
    let ln_small_sets: Vec<f64> = (0..=n)
        .map(|r| if r == 0 { f64::NEG_INFINITY } else { log_sub_exp(ln_partial_binomial_sum(r, k), 0.0) })
        .collect();
    let mut terms = Vec::new();
    for c in 1..=n - k - 1 {
        let ln_bracket = ln_d[k + c];
        for i in 1..=n - k - c {
            let r = n - i;
            terms.push(lf.ln_binom(r, k + c) + ln_bracket + ln_d[i] + libm::log(i as f64) + ln_small_sets[r]);
        }
    }
    let log_upper_n2 = lse_nonempty(terms.into_iter());
    let log_n1 = ln_d[n];
    let t_estimated = (log_n1 - log_add_exp(log_n1, log_upper_n2)).min(0.0);
    Ok(ThresholdReport { n, k, log_n1, log_upper_n2, t_estimated, negligible: t_estimated > -eps })
}

/// Reusable state for drawing from the support: restricted-binomial tables
/// for every forward-pool size, a label pool for without-replacement choice,
/// and the threshold when stratifying.
#[derive(Debug, Clone)]
pub struct SupportSampler {
    cfg: SamplerConfig,
    tables: Vec<RestrictedBinomial>,
    pool: Vec<usize>,
    threshold: Option<ThresholdReport>,
    scratch: PeelScratch,
}

impl SupportSampler {
    pub fn new(cfg: &SamplerConfig) -> Result<Self> {
        let (n, k) = (cfg.n, cfg.k);
        let tables = (0..n).map(|m| RestrictedBinomial::new(m, m.min(k))).collect::<Result<Vec<_>>>()?;
        let threshold = match cfg.strategy {
            Strategy::Stratified if k + 2 <= n => Some(stratified_threshold(n, k)?),
            _ => None,
        };
        if cfg.strategy == Strategy::FixedM && cfg.m.is_none() {
            return Err(Error::InvalidArgument("fixed_m needs an edge count".into()));
        }
        Ok(SupportSampler {
            cfg: cfg.clone(),
            tables,
            pool: (0..n).collect(),
            threshold,
            scratch: PeelScratch::default(),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn threshold(&self) -> Option<&ThresholdReport> {
        self.threshold.as_ref()
    }

    /// One draw under the configured strategy.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Graph> {
        match self.cfg.strategy {
            Strategy::WellOrdered => Ok(self.well_ordered(rng)),
            Strategy::WellOrderedPermuted => {
                let g = self.well_ordered(rng);
                let mut perm: Vec<usize> = (0..self.cfg.n).collect();
                perm.shuffle(rng);
                g.relabeled(&perm)
            }
            Strategy::Stratified => match self.threshold {
                Some(t) if !t.negligible => {
                    let u: f64 = rng.gen();
                    if libm::log(u) < t.t_estimated {
                        Ok(self.well_ordered(rng))
                    } else {
                        self.non_well_ordered(rng)
                    }
                }
                _ => Ok(self.well_ordered(rng)),
            },
            Strategy::FixedM => self.fixed_m(self.cfg.m.expect("checked in new"), rng),
            Strategy::Rejection => self.rejection(rng),
        }
    }

    /// Chooses `d` distinct labels from `pool[lo..]`, calling `f` on each, and
    /// restores the pool.
    fn choose_forward<R: Rng + ?Sized>(pool: &mut [usize], lo: usize, d: usize, rng: &mut R, mut f: impl FnMut(usize)) {
        let len = pool.len();
        let mut swaps = [0usize; 64];
        let mut swaps_heap = Vec::new();
        for t in 0..d {
            let j = rng.gen_range(lo + t..len);
            pool.swap(lo + t, j);
            if d <= swaps.len() {
                swaps[t] = j;
            } else {
                swaps_heap.push(j);
            }
            f(pool[lo + t]);
        }
        for t in (0..d).rev() {
            let j = if d <= swaps.len() { swaps[t] } else { swaps_heap[t] };
            pool.swap(lo + t, j);
        }
    }

    /// Uniform well-ordered graph on `0..n`.
    fn well_ordered<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Graph {
        let n = self.cfg.n;
        let mut g = Graph::empty(n);
        self.well_ordered_into(&mut g, n, rng);
        g
    }

    /// Uniform well-ordered graph on the vertices `0..len` of `g`.
    fn well_ordered_into<R: Rng + ?Sized>(&mut self, g: &mut Graph, len: usize, rng: &mut R) {
        let degrees: Vec<usize> = (0..len).map(|i| self.tables[len - 1 - i].sample(rng)).collect();
        let pool = &mut self.pool[..len];
        for i in (0..len).rev() {
            Self::choose_forward(pool, i + 1, degrees[i], rng, |w| {
                g.add_edge(i, w).expect("distinct labels");
            });
        }
    }

    /// Uniform `k`-well-ordered graph on `len` vertices with shuffled labels.
    fn permuted_well_ordered<R: Rng + ?Sized>(&mut self, len: usize, k: usize, rng: &mut R) -> Graph {
        let mut g = Graph::empty(len);
        let degrees: Vec<usize> = (0..len)
            .map(|i| {
                let m = len - 1 - i;
                RestrictedBinomial::new(m, m.min(k)).expect("cap within range").sample(rng)
            })
            .collect();
        let pool = &mut self.pool[..len];
        for i in (0..len).rev() {
            Self::choose_forward(pool, i + 1, degrees[i], rng, |w| {
                g.add_edge(i, w).expect("distinct labels");
            });
        }
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(rng);
        g.relabeled(&perm).expect("valid permutation")
    }

    fn fixed_m<R: Rng + ?Sized>(&mut self, m: usize, rng: &mut R) -> Result<Graph> {
        let (n, k) = (self.cfg.n, self.cfg.k);
        let cap: Vec<usize> = (0..n).map(|i| (n - 1 - i).min(k)).collect();
        let mut open: Vec<usize> = (0..n).filter(|&i| cap[i] > 0).collect();
        let mut deg = vec![0usize; n];
        for _ in 0..m {
            if open.is_empty() {
                let max = max_edges(n, k)?;
                return Err(Error::InfeasibleEdgeCount { n, k, m, max });
            }
            let slot = rng.gen_range(0..open.len());
            let v = open[slot];
            deg[v] += 1;
            if deg[v] == cap[v] {
                open.swap_remove(slot);
            }
        }
        let mut g = Graph::empty(n);
        for i in (0..n).rev() {
            Self::choose_forward(&mut self.pool, i + 1, deg[i], rng, |w| {
                g.add_edge(i, w).expect("distinct labels");
            });
        }
        Ok(g)
    }

    fn rejection<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Graph> {
        let (n, k) = (self.cfg.n, self.cfg.k);
        for _ in 0..self.cfg.rejection_budget {
            let g = bernoulli_half(n, rng);
            if is_within_degeneracy_with(&g, k, &mut self.scratch) {
                return Ok(g);
            }
        }
        Err(Error::RejectionBudget { attempts: self.cfg.rejection_budget })
    }

    /// A graph in `G_{n,k}` in which some vertex has more than `k`
    /// larger-labelled neighbours: a suspension over a small graph, with the
    /// lower labels wired in well-ordered fashion, kept only if its
    /// degeneracy is at most `k`. Not uniform within that stratum.
    fn non_well_ordered<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Graph> {
        let (n, k) = (self.cfg.n, self.cfg.k);
        if k + 2 > n {
            return Err(Error::Domain { n, k, reason: "no graph has a vertex with more than k larger neighbours" });
        }
        if k == 0 {
            return Err(Error::Domain { n, k, reason: "edgeless graphs are all well-ordered" });
        }
        let budget = self.cfg.rejection_budget;
        let mut attempts = 0u64;
        while attempts < budget {
            attempts += 1;
            let c = rng.gen_range(1..=n - k - 1);
            let size = k + c;
            // p has exactly `size` larger neighbours
            let p = rng.gen_range(0..=n - 1 - size);
            // the suspension raises degeneracy by one, so h must be (k−1)-degenerate
            let h = self.permuted_well_ordered(size, k - 1, rng);
            // increasing relabelling onto a uniform size-subset of p+1..n
            let mut labels: Vec<usize> =
                rand::seq::index::sample(rng, n - 1 - p, size).into_iter().map(|x| x + p + 1).collect();
            labels.sort_unstable();
            let mut g = Graph::empty(n);
            for (a, b) in h.edges() {
                g.add_edge(labels[a], labels[b])?;
            }
            for &x in &labels {
                g.add_edge(p, x)?;
            }
            self.well_ordered_into(&mut g, p + 1, rng);
            let above = n - 1 - p;
            for j in 0..p {
                let room = k - g.forward_degree(j);
                if room == 0 || above == 0 {
                    continue;
                }
                let extra = RestrictedBinomial::new(above, room.min(above))?.sample(rng);
                Self::choose_forward(&mut self.pool, p + 1, extra, rng, |w| {
                    g.add_edge(j, w).expect("distinct labels");
                });
            }
            if is_within_degeneracy_with(&g, k, &mut self.scratch) {
                return Ok(g);
            }
        }
        Err(Error::RejectionBudget { attempts })
    }
}

fn bernoulli_half<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Graph {
    let mut g = Graph::empty(n);
    let mut word = 0u64;
    let mut left = 0;
    for u in 0..n {
        for v in u + 1..n {
            if left == 0 {
                word = rng.gen();
                left = 64;
            }
            if word & 1 == 1 {
                g.add_edge(u, v).expect("valid pair");
            }
            word >>= 1;
            left -= 1;
        }
    }
    g
}

/// Uniform draw from the well-ordered graphs in `G_{n,k}`.
pub fn sample_well_ordered<R: Rng + ?Sized>(cfg: &SamplerConfig, rng: &mut R) -> Result<Graph> {
    let mut s = SupportSampler::new(&SamplerConfig { strategy: Strategy::WellOrdered, ..cfg.clone() })?;
    s.sample(rng)
}

/// Well-ordered graph with exactly `cfg.m` edges. Not uniform.
pub fn sample_fixed_m<R: Rng + ?Sized>(cfg: &SamplerConfig, rng: &mut R) -> Result<Graph> {
    let m = cfg.m.ok_or_else(|| Error::InvalidArgument("fixed_m needs an edge count".into()))?;
    let max = max_edges(cfg.n, cfg.k)?;
    if m as u64 > max {
        return Err(Error::InfeasibleEdgeCount { n: cfg.n, k: cfg.k, m, max });
    }
    SupportSampler::new(&SamplerConfig { strategy: Strategy::FixedM, ..cfg.clone() })?.fixed_m(m, rng)
}

/// Graph of degeneracy at most `k` that is not well-ordered.
pub fn sample_non_well_ordered<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Graph> {
    let cfg = SamplerConfig::new(n, k, 0, Strategy::WellOrdered)?;
    SupportSampler::new(&cfg)?.non_well_ordered(rng)
}

/// One draw under `cfg.strategy`.
pub fn sample_support<R: Rng + ?Sized>(cfg: &SamplerConfig, rng: &mut R) -> Result<Graph> {
    SupportSampler::new(cfg)?.sample(rng)
}

/// `count` draws, draw `i` using [`draw_rng`]`(cfg.seed, i)`.
pub fn sample_batch(cfg: &SamplerConfig, count: usize) -> Result<Vec<Graph>> {
    sample_range(cfg, 0..count as u64)
}

/// Draws with indices in `range`; concatenating ranges gives the same
/// result as one batch.
pub fn sample_range(cfg: &SamplerConfig, range: core::ops::Range<u64>) -> Result<Vec<Graph>> {
    let mut s = SupportSampler::new(cfg)?;
    range.map(|i| s.sample(&mut draw_rng(cfg.seed, i))).collect()
}

/// `ln |{well-ordered graphs}|` for any `k` (all graphs when `k ≥ n−1`).
pub fn ln_well_ordered(n: usize, k: usize) -> f64 {
    well_ordered_count_any_k(n, k).ln
}
