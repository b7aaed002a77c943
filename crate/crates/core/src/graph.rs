//! Simple undirected graphs on dense vertex labels, sufficient statistics and
//! their change scores, and the closed-form statistic maxima of k-degenerate
//! graphs.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Simple undirected graph on vertices `0..n`.
///
/// Edges live both in a bit matrix (constant-time membership) and in per-vertex
/// adjacency lists (common neighbours in `O(min(deg u, deg v))`).
#[derive(Clone)]
pub struct Graph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
    adj: Vec<Vec<u32>>,
    m: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Graph { n, words, bits: vec![0; words * n], adj: vec![Vec::new(); n], m: 0 }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.insert_unchecked(u, v);
            }
        }
        g
    }

    /// Builds a graph from an edge list. Duplicate pairs collapse; self-loops
    /// and out-of-range endpoints are errors.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.m
    }

    /// Number of vertex pairs, `C(n, 2)`.
    #[inline]
    pub fn dyad_count(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().map(|&w| w as usize)
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.bit(u, v)
    }

    #[inline]
    fn bit(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    #[inline]
    fn flip_bits(&mut self, u: usize, v: usize) {
        self.bits[u * self.words + v / 64] ^= 1 << (v % 64);
        self.bits[v * self.words + u / 64] ^= 1 << (u % 64);
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        for x in [u, v] {
            if x >= self.n {
                return Err(Error::VertexOutOfRange { vertex: x, n: self.n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        Ok(())
    }

    fn insert_unchecked(&mut self, u: usize, v: usize) {
        self.flip_bits(u, v);
        self.adj[u].push(v as u32);
        self.adj[v].push(u as u32);
        self.m += 1;
    }

    fn remove_unchecked(&mut self, u: usize, v: usize) {
        self.flip_bits(u, v);
        let pu = self.adj[u].iter().position(|&w| w as usize == v).unwrap();
        self.adj[u].swap_remove(pu);
        let pv = self.adj[v].iter().position(|&w| w as usize == u).unwrap();
        self.adj[v].swap_remove(pv);
        self.m -= 1;
    }

    /// Adds `{u, v}`; returns `false` if it was already present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check_pair(u, v)?;
        if self.bit(u, v) {
            return Ok(false);
        }
        self.insert_unchecked(u, v);
        Ok(true)
    }

    /// Removes `{u, v}`; returns `false` if it was absent.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check_pair(u, v)?;
        if !self.bit(u, v) {
            return Ok(false);
        }
        self.remove_unchecked(u, v);
        Ok(true)
    }

    /// Toggles `{u, v}` and returns whether the edge is present afterwards.
    pub fn toggle_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check_pair(u, v)?;
        if self.bit(u, v) {
            self.remove_unchecked(u, v);
            Ok(false)
        } else {
            self.insert_unchecked(u, v);
            Ok(true)
        }
    }

    /// Number of vertices adjacent to both `u` and `v`.
    pub fn common_neighbors(&self, u: usize, v: usize) -> usize {
        let (small, other) = if self.adj[u].len() <= self.adj[v].len() { (u, v) } else { (v, u) };
        self.adj[small].iter().filter(|&&w| self.bit(other, w as usize)).count()
    }

    /// Edges as `(u, v)` with `u < v`, in increasing lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n {
            let mut row: Vec<usize> = self.adj[u].iter().map(|&w| w as usize).filter(|&w| w > u).collect();
            row.sort_unstable();
            out.extend(row.into_iter().map(|w| (u, w)));
        }
        out
    }

    /// Returns the graph with vertex `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidArgument(alloc::format!(
                "permutation of length {} for {} vertices",
                perm.len(),
                self.n
            )));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || core::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        let mut g = Graph::empty(self.n);
        for (u, v) in self.edges() {
            g.insert_unchecked(perm[u], perm[v]);
        }
        Ok(g)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Number of vertices `w > v` adjacent to `v`.
    pub fn forward_degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&w| w as usize > v).count()
    }

    /// True when every vertex has at most `k` neighbours with a larger label.
    pub fn is_well_ordered(&self, k: usize) -> bool {
        (0..self.n).all(|v| self.forward_degree(v) <= k)
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.bits == other.bits
    }
}

impl Eq for Graph {}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph").field("n", &self.n).field("edges", &self.edges()).finish()
    }
}

/// A graph statistic usable as a sufficient statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Statistic {
    Edges,
    Triangles,
    TwoStars,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Edges => "edges",
            Statistic::Triangles => "triangles",
            Statistic::TwoStars => "two_stars",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "edges" | "edge" => Ok(Statistic::Edges),
            "triangles" | "triangle" => Ok(Statistic::Triangles),
            "two_stars" | "twostars" | "two-stars" | "kstar2" => Ok(Statistic::TwoStars),
            other => Err(Error::InvalidArgument(alloc::format!("unknown statistic `{other}`"))),
        }
    }
}

/// Ordered, duplicate-free list of statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatisticSet(Vec<Statistic>);

impl StatisticSet {
    pub fn new(stats: Vec<Statistic>) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::Empty);
        }
        for (i, s) in stats.iter().enumerate() {
            if stats[..i].contains(s) {
                return Err(Error::InvalidArgument(alloc::format!("duplicate statistic `{}`", s.name())));
            }
        }
        Ok(StatisticSet(stats))
    }

    pub fn edge_triangle() -> Self {
        StatisticSet(vec![Statistic::Edges, Statistic::Triangles])
    }

    pub fn edges_only() -> Self {
        StatisticSet(vec![Statistic::Edges])
    }

    /// Parses a comma-separated list such as `edges,triangles`.
    pub fn parse(s: &str) -> Result<Self> {
        let stats = s.split(',').filter(|t| !t.trim().is_empty()).map(Statistic::parse).collect::<Result<Vec<_>>>()?;
        StatisticSet::new(stats)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Statistic] {
        &self.0
    }

    pub fn position(&self, s: Statistic) -> Option<usize> {
        self.0.iter().position(|&x| x == s)
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|s| String::from(s.name())).collect()
    }
}

/// Values of a statistic set on one graph. Counts are stored as `f64` so they
/// combine directly with parameter vectors; they are exact below 2^53.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats(pub Vec<f64>);

impl SuffStats {
    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, theta: &[f64]) -> f64 {
        dot(&self.0, theta)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest count that `f64` represents exactly.
pub const EXACT_COUNT_LIMIT: f64 = 9_007_199_254_740_992.0;

pub fn triangle_count(g: &Graph) -> u64 {
    let mut t = 0u64;
    for u in 0..g.n() {
        for w in g.neighbors(u) {
            if w > u {
                t += g.common_neighbors(u, w) as u64;
            }
        }
    }
    t / 3
}

pub fn two_star_count(g: &Graph) -> u64 {
    (0..g.n())
        .map(|v| {
            let d = g.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum()
}

fn stat_value(g: &Graph, s: Statistic) -> u64 {
    match s {
        Statistic::Edges => g.edge_count() as u64,
        Statistic::Triangles => triangle_count(g),
        Statistic::TwoStars => two_star_count(g),
    }
}

pub fn compute_stats(g: &Graph, set: &StatisticSet) -> SuffStats {
    SuffStats(
        set.as_slice()
            .iter()
            .map(|&s| {
                let v = stat_value(g, s) as f64;
                assert!(v < EXACT_COUNT_LIMIT, "statistic count exceeds 2^53");
                v
            })
            .collect(),
    )
}

/// `t(g ⊕ {u,v}) − t(g)` where `⊕` toggles the pair.
pub fn change_stats(g: &Graph, u: usize, v: usize, set: &StatisticSet) -> Result<Vec<f64>> {
    g.check_pair(u, v)?;
    let mut out = vec![0.0; set.dim()];
    change_stats_into(g, u, v, set, &mut out);
    Ok(out)
}

/// Allocation-free variant of [`change_stats`] for hot loops; `u != v` is
/// the caller's responsibility.
pub fn change_stats_into(g: &Graph, u: usize, v: usize, set: &StatisticSet, out: &mut [f64]) {
    let present = g.has_edge(u, v);
    let sign = if present { -1.0 } else { 1.0 };
    for (slot, &s) in out.iter_mut().zip(set.as_slice()) {
        *slot = match s {
            Statistic::Edges => sign,
            Statistic::Triangles => sign * g.common_neighbors(u, v) as f64,
            Statistic::TwoStars => {
                // degrees excluding the toggled pair itself
                let p = present as usize;
                sign * ((g.degree(u) - p) + (g.degree(v) - p)) as f64
            }
        };
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain { n, k, reason: "n must be positive" });
    }
    if k > n - 1 {
        return Err(Error::Domain { n, k, reason: "k must not exceed n - 1" });
    }
    Ok(())
}

/// Maximum edge count of a k-degenerate graph on `n` vertices:
/// `k·n − C(k+1, 2)`.
pub fn max_edges(n: usize, k: usize) -> Result<u64> {
    check_nk(n, k)?;
    let (n, k) = (n as u64, k as u64);
    Ok(k * n - k * (k + 1) / 2)
}

/// Maximum triangle count of a k-degenerate graph on `n` vertices:
/// `C(k, 3) + C(k, 2)·(n − k)`.
pub fn max_triangles(n: usize, k: usize) -> Result<u64> {
    check_nk(n, k)?;
    let (n, k) = (n as u64, k as u64);
    let c3 = if k >= 3 { k * (k - 1) * (k - 2) / 6 } else { 0 };
    let c2 = if k >= 2 { k * (k - 1) / 2 } else { 0 };
    Ok(c3 + c2 * (n - k))
}
