//! Log-space combinatorics: log-sum-exp, binomials, and counts of
//! well-ordered k-degenerate graphs.

use alloc::vec::Vec;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// `log Σ exp(v_i)`, shifted by the maximum. Exact for a single element.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    match values {
        [] => Err(Error::Empty),
        [x] => Ok(*x),
        _ => Ok(lse_nonempty(values.iter().copied())),
    }
}

pub(crate) fn lse_nonempty<I: Iterator<Item = f64> + Clone>(values: I) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + libm::log(values.map(|v| libm::exp(v - max)).sum::<f64>())
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(libm::exp(lo - hi))
}

/// `log(exp(a) − exp(b))` for `a ≥ b`; `-inf` when they are equal.
#[inline]
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b, "log_sub_exp of a negative quantity");
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + libm::log(-libm::expm1(b - a))
}

/// Table of `ln j!` for `j = 0..=max`.
#[derive(Debug, Clone)]
pub struct LogFactorials(Vec<f64>);

impl LogFactorials {
    pub fn new(max: usize) -> Self {
        let mut t = Vec::with_capacity(max + 1);
        let mut acc = 0.0;
        t.push(0.0);
        for j in 1..=max {
            acc += libm::log(j as f64);
            t.push(acc);
        }
        LogFactorials(t)
    }

    #[inline]
    pub fn ln_fact(&self, j: usize) -> f64 {
        self.0[j]
    }

    /// `ln C(m, d)`; `-inf` when `d > m`.
    #[inline]
    pub fn ln_binom(&self, m: usize, d: usize) -> f64 {
        if d > m {
            return f64::NEG_INFINITY;
        }
        self.0[m] - self.0[d] - self.0[m - d]
    }
}

/// `ln Σ_{i=0}^{min(r, c)} C(r, i)`, computed with incremental binomial logs.
pub fn ln_partial_binomial_sum(r: usize, c: usize) -> f64 {
    if c >= r {
        return r as f64 * core::f64::consts::LN_2;
    }
    // terms increase up to r/2, so shift by the largest included term
    let mut ln_term = 0.0;
    let mut terms = Vec::with_capacity(c + 1);
    terms.push(0.0);
    for i in 1..=c {
        ln_term += libm::log((r - i + 1) as f64) - libm::log(i as f64);
        terms.push(ln_term);
    }
    lse_nonempty(terms.into_iter())
}

/// A count kept in natural-log space, with the exact integer alongside when it
/// fits in [`LogCount::EXACT_BITS`] bits.
#[derive(Debug, Clone, PartialEq)]
pub struct LogCount {
    pub ln: f64,
    pub exact: Option<BigUint>,
}

impl LogCount {
    pub const EXACT_BITS: u64 = 512;
}

fn exact_partial_binomial_sum(r: usize, c: usize) -> BigUint {
    let mut term = BigUint::from(1u32);
    let mut sum = term.clone();
    for i in 1..=c.min(r) {
        term = term * BigUint::from((r - i + 1) as u64) / BigUint::from(i as u64);
        sum += &term;
    }
    sum
}

/// Number of labelled graphs on `n` vertices in which every vertex has at
/// most `k` neighbours with a larger label:
/// `D_k(n) = D_k(n−1) · Σ_{i=0}^{min(n−1,k)} C(n−1, i)`, `D_k(1) = 1`.
pub fn count_well_ordered(n: usize, k: usize) -> Result<LogCount> {
    if n == 0 {
        return Err(Error::Domain { n, k, reason: "n must be positive" });
    }
    if k > n - 1 {
        return Err(Error::Domain { n, k, reason: "k must not exceed n - 1" });
    }
    Ok(well_ordered_count_any_k(n, k))
}

/// As [`count_well_ordered`] but accepting `k ≥ n` (then every graph is
/// well-ordered).
pub(crate) fn well_ordered_count_any_k(n: usize, k: usize) -> LogCount {
    let mut exact = Some(BigUint::from(1u32));
    let mut ln = 0.0;
    for r in 1..n {
        ln += ln_partial_binomial_sum(r, k);
        if let Some(acc) = exact.take() {
            let next = acc * exact_partial_binomial_sum(r, k);
            if next.bits() <= LogCount::EXACT_BITS {
                exact = Some(next);
            }
        }
    }
    LogCount { ln, exact }
}

/// `ln D_k(j)` for `j = 0..=n` (entry 0 is unused and set to 0).
pub(crate) fn ln_well_ordered_table(n: usize, k: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(0.0);
    let mut acc = 0.0;
    for j in 1..=n {
        if j > 1 {
            acc += ln_partial_binomial_sum(j - 1, k);
        }
        table.push(acc);
    }
    table
}

/// `Σ_{r=k+1}^{n−1} ln C(r, k)`, a lower bound on `ln D_k(n)` that grows like
/// `n log n` for fixed `k`.
pub fn ln_well_ordered_lower_bound(n: usize, k: usize) -> f64 {
    let lf = LogFactorials::new(n.max(1));
    (k + 1..n).map(|r| lf.ln_binom(r, k)).sum()
}
