//! Exhaustive enumeration of labelled graphs on at most eight vertices, and
//! the exact DERGM quantities it yields: degeneracy histograms, partition
//! functions, mean-value maps and maximum likelihood estimates.
//!
//! Graphs are edge bitmasks over the pairs `(0,1), (0,2), …, (n−2,n−1)`.
//! Every reduction goes through [`EnumerationTable`], a dense histogram of
//! `(degeneracy, edges, triangles, two-stars)` that merges associatively, so
//! callers may split the mask range across workers.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::counting::lse_nonempty;
use crate::error::{Error, Result};
use crate::geometry::{convex_hull_2d, point_location, Location};
use crate::graph::{Graph, Statistic, StatisticSet};
use crate::linalg::{cholesky, cholesky_solve, weighted_moments, Moments};

/// Default enumeration cap; 2^21 graphs.
pub const DEFAULT_MAX_N: usize = 7;
/// Enumeration cap with the explicit override; 2^28 graphs.
pub const OVERRIDE_MAX_N: usize = 8;

pub fn check_cap(n: usize, allow_n8: bool) -> Result<()> {
    let cap = if allow_n8 { OVERRIDE_MAX_N } else { DEFAULT_MAX_N };
    if n > cap || n == 0 {
        return Err(Error::EnumerationCap { n, cap });
    }
    Ok(())
}

/// Vertex pairs in edge-bit order.
pub fn pair_list(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            pairs.push((u, v));
        }
    }
    pairs
}

/// Number of labelled graphs on `n` vertices, `2^C(n,2)`.
pub fn graph_count(n: usize) -> u64 {
    1u64 << (n * n.saturating_sub(1) / 2)
}

/// Edge bitmask of a graph on at most eight vertices.
pub fn graph_mask(g: &Graph) -> u64 {
    assert!(g.n() <= OVERRIDE_MAX_N, "graph too large for a bitmask");
    pair_list(g.n()).iter().enumerate().filter(|(_, &(u, v))| g.has_edge(u, v)).fold(0u64, |m, (b, _)| m | 1 << b)
}

pub fn graph_from_mask(n: usize, mask: u64) -> Graph {
    let pairs = pair_list(n);
    Graph::from_edges(n, pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p))
        .expect("pairs are valid")
}

/// Yields each of the `2^C(n,2)` labelled graphs once, in mask order.
pub fn enumerate_all(n: usize) -> Result<impl Iterator<Item = Graph>> {
    enumerate_all_with(n, false)
}

pub fn enumerate_all_with(n: usize, allow_n8: bool) -> Result<impl Iterator<Item = Graph>> {
    check_cap(n, allow_n8)?;
    Ok((0..graph_count(n)).map(move |mask| graph_from_mask(n, mask)))
}

/// Adjacency bitmasks of a graph on at most eight vertices.
#[derive(Debug, Clone, Copy)]
struct SmallGraph {
    n: usize,
    adj: [u8; 8],
}

impl SmallGraph {
    #[inline]
    fn from_mask(n: usize, mask: u64, pairs: &[(usize, usize)]) -> Self {
        let mut adj = [0u8; 8];
        let mut rest = mask;
        while rest != 0 {
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let (u, v) = pairs[b];
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        SmallGraph { n, adj }
    }

    #[inline]
    fn degeneracy(&self) -> usize {
        let mut alive: u8 = if self.n == 8 { 0xff } else { (1u8 << self.n) - 1 };
        let mut k = 0;
        while alive != 0 {
            let mut best = usize::MAX;
            let mut best_v = 0;
            let mut rest = alive;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let d = (self.adj[v] & alive).count_ones() as usize;
                if d < best {
                    best = d;
                    best_v = v;
                }
            }
            k = k.max(best);
            alive &= !(1 << best_v);
        }
        k
    }

    #[inline]
    fn triangles(&self) -> usize {
        let mut t = 0;
        for u in 0..self.n {
            let mut higher = self.adj[u] & !((2u16 << u) - 1) as u8;
            while higher != 0 {
                let v = higher.trailing_zeros() as usize;
                higher &= higher - 1;
                let above_v = !((2u16 << v) - 1) as u8;
                t += (self.adj[u] & self.adj[v] & above_v).count_ones() as usize;
            }
        }
        t
    }

    #[inline]
    fn two_stars(&self) -> usize {
        self.adj[..self.n]
            .iter()
            .map(|a| {
                let d = a.count_ones() as usize;
                d * d.saturating_sub(1) / 2
            })
            .sum()
    }
}

/// Dense histogram of `(degeneracy, edges, triangles, two-stars)` over a set
/// of enumerated graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationTable {
    n: usize,
    dims: [usize; 4],
    counts: Vec<u64>,
}

impl EnumerationTable {
    pub fn zeros(n: usize) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        let tri = if n >= 3 { n * (n - 1) * (n - 2) / 6 } else { 0 };
        let stars = n * if n >= 3 { (n - 1) * (n - 2) / 2 } else { 0 };
        let dims = [n.max(1), pairs + 1, tri + 1, stars + 1];
        EnumerationTable { n, dims, counts: vec![0; dims.iter().product()] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(&self, k: usize, e: usize, t: usize, s: usize) -> usize {
        ((k * self.dims[1] + e) * self.dims[2] + t) * self.dims[3] + s
    }

    /// Enumerates the masks in `range` (clamped to `0..2^C(n,2)`).
    pub fn accumulate(n: usize, range: Range<u64>, allow_n8: bool) -> Result<Self> {
        check_cap(n, allow_n8)?;
        let mut table = EnumerationTable::zeros(n);
        let pairs = pair_list(n);
        let end = range.end.min(graph_count(n));
        for mask in range.start..end {
            let g = SmallGraph::from_mask(n, mask, &pairs);
            let idx = table.index(g.degeneracy(), mask.count_ones() as usize, g.triangles(), g.two_stars());
            table.counts[idx] += 1;
        }
        Ok(table)
    }

    pub fn full(n: usize, allow_n8: bool) -> Result<Self> {
        Self::accumulate(n, 0..graph_count(n), allow_n8)
    }

    pub fn merge(&mut self, other: &EnumerationTable) {
        assert_eq!(self.n, other.n, "tables for different n");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Non-zero cells as `(degeneracy, edges, triangles, two_stars, count)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, usize, u64)> + '_ {
        let [_, de, dt, ds] = self.dims;
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(i, &c)| {
            let s = i % ds;
            let t = (i / ds) % dt;
            let e = (i / (ds * dt)) % de;
            let k = i / (ds * dt * de);
            (k, e, t, s, c)
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn report(&self) -> EnumerationReport {
        let mut histogram = vec![0u64; self.n.max(1)];
        for (k, _, _, _, c) in self.entries() {
            histogram[k] += c;
        }
        EnumerationReport { n: self.n, histogram, total: self.total() }
    }
}

/// Number of labelled graphs of each exact degeneracy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationReport {
    pub n: usize,
    /// `histogram[k]` = number of graphs with degeneracy exactly `k`.
    pub histogram: Vec<u64>,
    pub total: u64,
}

impl EnumerationReport {
    /// Number of graphs with degeneracy at most `k`.
    pub fn at_most(&self, k: usize) -> u64 {
        self.histogram.iter().take(k + 1).sum()
    }
}

pub fn degeneracy_histogram(n: usize) -> Result<EnumerationReport> {
    Ok(EnumerationTable::full(n, false)?.report())
}

/// The exact DERGM on `G_{n,k}` for one statistic set: the distinct
/// statistic vectors of the support with their multiplicities.
#[derive(Debug, Clone)]
pub struct ExactEnsemble {
    n: usize,
    k: usize,
    stats: StatisticSet,
    points: Vec<f64>,
    ln_counts: Vec<f64>,
    support_size: u64,
}

impl ExactEnsemble {
    pub fn new(n: usize, k: usize, stats: &StatisticSet) -> Result<Self> {
        Self::from_table(&EnumerationTable::full(n, false)?, k, stats)
    }

    pub fn from_table(table: &EnumerationTable, k: usize, stats: &StatisticSet) -> Result<Self> {
        let n = table.n();
        if k > n.saturating_sub(1) {
            return Err(Error::Domain { n, k, reason: "k must not exceed n - 1" });
        }
        let d = stats.dim();
        // collapse cells that agree on the selected statistics
        let mut merged: alloc::collections::BTreeMap<[usize; 3], u64> = Default::default();
        for (deg, e, t, s, c) in table.entries() {
            if deg > k {
                continue;
            }
            let mut key = [0usize; 3];
            for (slot, &stat) in key.iter_mut().zip(stats.as_slice()) {
                *slot = match stat {
                    Statistic::Edges => e,
                    Statistic::Triangles => t,
                    Statistic::TwoStars => s,
                };
            }
            *merged.entry(key).or_default() += c;
        }
        let mut points = Vec::with_capacity(merged.len() * d);
        let mut ln_counts = Vec::with_capacity(merged.len());
        let mut support_size = 0;
        for (key, c) in merged {
            points.extend(key[..d].iter().map(|&x| x as f64));
            ln_counts.push(libm::log(c as f64));
            support_size += c;
        }
        Ok(ExactEnsemble { n, k, stats: stats.clone(), points, ln_counts, support_size })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn statistics(&self) -> &StatisticSet {
        &self.stats
    }

    pub fn dim(&self) -> usize {
        self.stats.dim()
    }

    /// `|G_{n,k}|`.
    pub fn support_size(&self) -> u64 {
        self.support_size
    }

    /// Distinct statistic vectors (flat, row length `dim`).
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of graphs attaining each distinct statistic vector.
    pub fn multiplicities(&self) -> impl Iterator<Item = f64> + '_ {
        self.ln_counts.iter().map(|&l| libm::round(libm::exp(l)))
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: theta.len() });
        }
        Ok(())
    }

    fn log_weights(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.dim();
        self.points.chunks_exact(d).zip(&self.ln_counts).map(|(p, lc)| lc + crate::graph::dot(p, theta)).collect()
    }

    /// `log c_k(θ) = log Σ_{g ∈ G_{n,k}} exp(θᵀ t(g))`.
    pub fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(lse_nonempty(self.log_weights(theta).into_iter()))
    }

    /// Log partition function with the model mean and covariance of `t`.
    pub fn moments(&self, theta: &[f64]) -> Result<Moments> {
        self.check_theta(theta)?;
        Ok(weighted_moments(&self.points, self.dim(), &self.log_weights(theta)))
    }

    /// Per-coordinate maximum of each statistic over the support.
    pub fn maxima(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| self.points.chunks_exact(d).map(|p| p[i]).fold(0.0, f64::max)).collect()
    }

    /// `E[t_i] / max_{G_{n,k}} t_i`, each in `[0, 1]`.
    pub fn normalized_mean(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let m = self.moments(theta)?;
        Ok(m.mean.iter().zip(self.maxima()).map(|(mu, max)| if max > 0.0 { mu / max } else { 0.0 }).collect())
    }

    /// `θᵀ t_obs − log c_k(θ)`.
    pub fn log_likelihood(&self, theta: &[f64], t_obs: &[f64]) -> Result<f64> {
        Ok(crate::graph::dot(theta, t_obs) - self.log_partition(theta)?)
    }

    /// Distribution of the statistic vector under `θ`: `(point, probability)`.
    pub fn statistic_distribution(&self, theta: &[f64]) -> Result<Vec<(Vec<f64>, f64)>> {
        self.check_theta(theta)?;
        let lw = self.log_weights(theta);
        let z = lse_nonempty(lw.iter().copied());
        Ok(self.points.chunks_exact(self.dim()).zip(lw).map(|(p, w)| (p.to_vec(), libm::exp(w - z))).collect())
    }

    /// Whether `t_obs` lies in the relative interior of the marginal polytope
    /// (exact for one and two statistics).
    pub fn mle_exists(&self, t_obs: &[f64]) -> Option<bool> {
        let d = self.dim();
        match d {
            1 => {
                let (lo, hi) =
                    self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
                Some(lo < t_obs[0] && t_obs[0] < hi)
            }
            2 => {
                let pts: Vec<(f64, f64)> = self.points.chunks_exact(2).map(|p| (p[0], p[1])).collect();
                let hull = convex_hull_2d(&pts).ok()?;
                Some(point_location((t_obs[0], t_obs[1]), &hull) == Location::Interior)
            }
            _ => None,
        }
    }

    /// Newton iteration on the exact log-likelihood.
    pub fn mle(&self, t_obs: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(t_obs)?;
        if self.mle_exists(t_obs) == Some(false) {
            return Err(Error::MleDoesNotExist);
        }
        let d = self.dim();
        let mut theta = vec![0.0; d];
        let mut ll = self.log_likelihood(&theta, t_obs)?;
        for _ in 0..500 {
            let m = self.moments(&theta)?;
            let grad: Vec<f64> = t_obs.iter().zip(&m.mean).map(|(t, mu)| t - mu).collect();
            if grad.iter().all(|g| g.abs() < 1e-10) {
                return Ok(theta);
            }
            let l = cholesky(&m.cov, d).map_err(|_| Error::MleDoesNotExist)?;
            let step = cholesky_solve(&l, d, &grad);
            let mut scale = 1.0;
            loop {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
                let cll = self.log_likelihood(&cand, t_obs)?;
                if cll >= ll - 1e-12 || scale < 1e-6 {
                    theta = cand;
                    ll = cll;
                    break;
                }
                scale *= 0.5;
            }
            if theta.iter().map(|t| t * t).sum::<f64>() > 50.0 * 50.0 {
                return Err(Error::MleDoesNotExist);
            }
        }
        Err(Error::NonConvergence { iterations: 500 })
    }
}

/// `log c_k(θ)` by enumeration.
pub fn exact_log_partition(n: usize, k: usize, theta: &[f64], stats: &StatisticSet) -> Result<f64> {
    ExactEnsemble::new(n, k, stats)?.log_partition(theta)
}

/// Mean-value parameters normalised by the support maxima.
pub fn exact_mean_value(n: usize, k: usize, theta: &[f64], stats: &StatisticSet) -> Result<Vec<f64>> {
    ExactEnsemble::new(n, k, stats)?.normalized_mean(theta)
}

/// Exact MLE of the DERGM on `G_{n,k}` for an observed graph (`n ≤ 7`).
pub fn exact_mle(g_obs: &Graph, k: usize, stats: &StatisticSet) -> Result<Vec<f64>> {
    let deg = crate::degeneracy::degeneracy(g_obs).k;
    if deg > k {
        return Err(Error::OutsideSupport { degeneracy: deg, k });
    }
    let t_obs = crate::graph::compute_stats(g_obs, stats);
    ExactEnsemble::new(g_obs.n(), k, stats)?.mle(&t_obs.0)
}
