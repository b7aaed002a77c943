//! Core peeling: graph degeneracy, shell indices, degeneracy orderings and the
//! early-exit support test used inside Markov chains.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegeneracyResult {
    pub k: usize,
    /// Removal order; every vertex has at most `k` neighbours after it.
    pub ordering: Vec<usize>,
    /// Shell index (core number) of each vertex.
    pub core_numbers: Vec<usize>,
}

/// Min-degree peeling. Among vertices of equal residual degree the smallest
/// label is removed first, so orderings are deterministic.
pub fn degeneracy(g: &Graph) -> DegeneracyResult {
    let n = g.n();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut removed = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|v| Reverse((deg[v], v))).collect();
    let mut ordering = Vec::with_capacity(n);
    let mut core_numbers = vec![0; n];
    let mut k = 0;
    while let Some(Reverse((d, v))) = heap.pop() {
        if removed[v] || d != deg[v] {
            continue;
        }
        removed[v] = true;
        k = k.max(d);
        core_numbers[v] = k;
        ordering.push(v);
        for w in g.neighbors(v) {
            if !removed[w] {
                deg[w] -= 1;
                heap.push(Reverse((deg[w], w)));
            }
        }
    }
    DegeneracyResult { k, ordering, core_numbers }
}

/// Reusable buffers for [`is_within_degeneracy_with`].
#[derive(Debug, Default, Clone)]
pub struct PeelScratch {
    deg: Vec<usize>,
    stack: Vec<usize>,
}

/// True iff the degeneracy of `g` is at most `k`.
pub fn is_within_degeneracy(g: &Graph, k: usize) -> bool {
    is_within_degeneracy_with(g, k, &mut PeelScratch::default())
}

/// Linear-time test that stops as soon as every remaining vertex has residual
/// degree above `k`.
pub fn is_within_degeneracy_with(g: &Graph, k: usize, scratch: &mut PeelScratch) -> bool {
    let n = g.n();
    if g.max_degree() <= k {
        return true;
    }
    let deg = &mut scratch.deg;
    let stack = &mut scratch.stack;
    deg.clear();
    stack.clear();
    deg.extend((0..n).map(|v| g.degree(v)));
    for v in 0..n {
        if deg[v] <= k {
            stack.push(v);
        }
    }
    let mut peeled = 0;
    while let Some(v) = stack.pop() {
        peeled += 1;
        for w in g.neighbors(v) {
            // a vertex enters the stack exactly when its degree drops to k
            if deg[w] > k {
                deg[w] -= 1;
                if deg[w] == k {
                    stack.push(w);
                }
            }
        }
        deg[v] = 0;
    }
    peeled == n
}

/// Largest vertex count for which [`count_degenerate_orderings`] runs
/// (the dynamic program has `2^n` states).
pub const ORDERING_COUNT_MAX_N: usize = 20;

/// Number of vertex orderings in which every vertex has at most `k`
/// neighbours later in the order. `None` when `n` exceeds
/// [`ORDERING_COUNT_MAX_N`].
///
/// Dynamic program over the set of already-placed vertices: `v` may come next
/// after `S` iff at most `k` of its neighbours lie outside `S`.
pub fn count_degenerate_orderings(g: &Graph, k: usize) -> Option<u64> {
    let n = g.n();
    if n > ORDERING_COUNT_MAX_N {
        return None;
    }
    let masks: Vec<u32> = (0..n).map(|v| g.neighbors(v).fold(0u32, |m, w| m | 1 << w)).collect();
    let mut ways = vec![0u64; 1 << n];
    ways[0] = 1;
    for s in 0..(1usize << n) {
        let w = ways[s];
        if w == 0 {
            continue;
        }
        let placed = s as u32;
        for (v, &mask) in masks.iter().enumerate() {
            if placed >> v & 1 == 0 && (mask & !placed).count_ones() as usize <= k {
                ways[s | 1 << v] += w;
            }
        }
    }
    Some(ways[(1 << n) - 1])
}
