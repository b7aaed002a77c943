//! Maximum likelihood for DERGMs.
//!
//! [`mcmc_mle`] starts from the pseudo-likelihood estimate and repeatedly
//! maximises the importance-sampled log-likelihood ratio built from chains
//! run at the current parameter. The observed statistic is pulled towards
//! the sample mean until it sits inside the sampled hull (step-length
//! damping). Absolute log-likelihoods need `log c_k(θ)`: exact for small
//! `n`, otherwise an Erdős–Rényi reference point plus path sampling.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::degeneracy::{degeneracy, is_within_degeneracy_with, PeelScratch};
use crate::enumeration::{ExactEnsemble, DEFAULT_MAX_N};
use crate::error::{Error, Result};
use crate::geometry::{convex_hull_2d, point_location, Location};
use crate::graph::{change_stats_into, compute_stats, Graph, Statistic, StatisticSet};
use crate::linalg::{cholesky, cholesky_solve, spd_inverse, weighted_moments};
use crate::mcmc::{run_chains, ChainConfig, ChainRunner, SampleBatch};
use crate::samplers::draw_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KPolicy {
    /// The degeneracy of the observed graph.
    Observed,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub stats: StatisticSet,
    pub k: KPolicy,
    /// Retained samples per iteration, across all chains.
    pub samples: usize,
    pub chains: usize,
    pub max_iterations: usize,
    /// Sup-norm tolerance on successive iterates.
    pub tol: f64,
    /// Fraction by which the sampled hull is shrunk before damping.
    pub gamma_margin: f64,
    pub seed: u64,
    pub loglik: LoglikConfig,
}

impl FitConfig {
    pub fn new(stats: StatisticSet, k: KPolicy, seed: u64) -> Self {
        FitConfig {
            stats,
            k,
            samples: 20_000,
            chains: 4,
            max_iterations: 30,
            tol: 0.02,
            gamma_margin: 0.05,
            seed,
            loglik: LoglikConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 100 {
            return Err(Error::InvalidArgument("need at least 100 samples per iteration".into()));
        }
        if self.chains == 0 || self.chains > self.samples {
            return Err(Error::InvalidArgument("chain count must be in 1..=samples".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if !(self.gamma_margin > 0.0 && self.gamma_margin <= 1.0) {
            return Err(Error::InvalidArgument("gamma margin must lie in (0, 1]".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("need at least one iteration".into()));
        }
        Ok(())
    }
}

/// Settings for the Monte Carlo estimate of `log c_k(θ)` (used when `n`
/// exceeds the enumeration cap).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoglikConfig {
    /// Simpson intervals along the path (even).
    pub intervals: usize,
    /// Retained chain states per path node.
    pub samples_per_node: usize,
    /// Erdős–Rényi draws for the reference probability.
    pub reference_draws: usize,
}

impl Default for LoglikConfig {
    fn default() -> Self {
        LoglikConfig { intervals: 10, samples_per_node: 4_000, reference_draws: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoglikMethod {
    Exact,
    Importance,
}

impl LoglikMethod {
    pub fn name(self) -> &'static str {
        match self {
            LoglikMethod::Exact => "exact",
            LoglikMethod::Importance => "importance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub theta: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Wald statistics `θ̂ / SE`.
    pub z_scores: Vec<f64>,
    pub log_likelihood: f64,
    pub loglik_method: LoglikMethod,
    pub aic: f64,
    pub bic: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_gamma: f64,
    pub gamma_trace: Vec<f64>,
    pub theta_trace: Vec<Vec<f64>>,
    pub amle_exists: bool,
    /// Some iteration met a sample hull with no interior.
    pub degenerate_hull: bool,
    pub k: usize,
    pub n: usize,
    pub t_obs: Vec<f64>,
    pub mple: Vec<f64>,
}

/// `(aic, bic)` with `C(n,2)` as the sample size.
pub fn information_criteria(loglik: f64, d: usize, n: usize) -> (f64, f64) {
    let dyads = (n * n.saturating_sub(1) / 2).max(1) as f64;
    let aic = -2.0 * loglik + 2.0 * d as f64;
    let bic = -2.0 * loglik + d as f64 * libm::log(dyads);
    (aic, bic)
}

/// Dyad-level design for the pseudo-likelihood: change statistics for
/// switching each pair on, and whether the edge is present. Pairs whose
/// addition would leave `G_{n,k}` are dropped.
fn pseudo_design(g: &Graph, k: usize, stats: &StatisticSet) -> (Vec<f64>, Vec<bool>) {
    let d = stats.dim();
    let n = g.n();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut row = vec![0.0; d];
    let mut work = g.clone();
    let mut scratch = PeelScratch::default();
    for u in 0..n {
        for v in u + 1..n {
            let present = g.has_edge(u, v);
            change_stats_into(g, u, v, stats, &mut row);
            if present {
                row.iter_mut().for_each(|r| *r = -*r);
            } else {
                work.add_edge(u, v).expect("valid pair");
                let ok = is_within_degeneracy_with(&work, k, &mut scratch);
                work.remove_edge(u, v).expect("valid pair");
                if !ok {
                    continue;
                }
            }
            x.extend_from_slice(&row);
            y.push(present);
        }
    }
    (x, y)
}

fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

/// Coefficients beyond this mark a quasi-separated pseudo-likelihood; a chain
/// started there collapses onto a single graph.
pub const MPLE_MAX_COEFFICIENT: f64 = 10.0;

/// Maximum pseudo-likelihood estimate: logistic regression, without
/// intercept, of edge indicators on change statistics.
pub fn mple(g_obs: &Graph, k: usize, stats: &StatisticSet) -> Result<Vec<f64>> {
    let deg = degeneracy(g_obs).k;
    if deg > k {
        return Err(Error::OutsideSupport { degeneracy: deg, k });
    }
    let d = stats.dim();
    let (x, y) = pseudo_design(g_obs, k, stats);
    if y.iter().all(|&b| b) || y.iter().all(|&b| !b) {
        return Err(Error::Separation);
    }
    let objective = |theta: &[f64]| -> f64 {
        x.chunks_exact(d)
            .zip(&y)
            .map(|(r, &yy)| {
                let z = crate::graph::dot(r, theta);
                if yy {
                    z - log1pexp(z)
                } else {
                    -log1pexp(z)
                }
            })
            .sum()
    };
    let mut theta = vec![0.0; d];
    let mut value = objective(&theta);
    'newton: for _ in 0..100 {
        let mut grad = vec![0.0; d];
        let mut info = vec![0.0; d * d];
        for (r, &yy) in x.chunks_exact(d).zip(&y) {
            let p = 1.0 / (1.0 + libm::exp(-crate::graph::dot(r, &theta)));
            let resid = yy as u8 as f64 - p;
            let w = p * (1.0 - p);
            for i in 0..d {
                grad[i] += resid * r[i];
                for j in 0..d {
                    info[i * d + j] += w * r[i] * r[j];
                }
            }
        }
        if grad.iter().all(|g| g.abs() < 1e-8) {
            break;
        }
        let l = cholesky(&info, d).map_err(|_| Error::Separation)?;
        let step = cholesky_solve(&l, d, &grad);
        let mut scale = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
            let v = objective(&cand);
            if v >= value - 1e-12 {
                theta = cand;
                value = v;
                break;
            }
            scale *= 0.5;
            if scale < 1e-10 {
                break 'newton;
            }
        }
    }
    if theta.iter().any(|t| !(t.abs() <= MPLE_MAX_COEFFICIENT)) {
        return Err(Error::Separation);
    }
    Ok(theta)
}

/// Solves `(−H + λI) s = ∇`, raising `λ` from zero until `−H + λI` factors.
/// Weights piling onto one sampled point leave `−H` singular.
fn ridge_newton_step(e: &LoglikEval, d: usize) -> Result<Vec<f64>> {
    let scale = (0..d).map(|i| e.hessian[i * d + i].abs()).fold(0.0, f64::max).max(1e-12);
    let mut lambda = 0.0;
    for _ in 0..30 {
        let mut a: Vec<f64> = e.hessian.iter().map(|x| -x).collect();
        for i in 0..d {
            a[i * d + i] += lambda;
        }
        if let Ok(l) = cholesky(&a, d) {
            return Ok(cholesky_solve(&l, d, &e.gradient));
        }
        lambda = if lambda == 0.0 { 1e-10 * scale } else { lambda * 10.0 };
    }
    Err(Error::SingularCovariance(Vec::new()))
}

/// The log-likelihood ratio `ℓ(θ) − ℓ(θ0)` estimated from a batch drawn at
/// `θ0`, as a function of `θ`, with its gradient and Hessian.
#[derive(Debug, Clone)]
pub struct ImportanceLoglik {
    dim: usize,
    theta0: Vec<f64>,
    /// `t(G_b) − t_obs`, flat.
    deltas: Vec<f64>,
    ln_b: f64,
}

/// Value, gradient and row-major Hessian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LoglikEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl ImportanceLoglik {
    pub fn new(theta0: &[f64], sampled: &[f64], t_obs: &[f64]) -> Result<Self> {
        let d = t_obs.len();
        if theta0.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: theta0.len() });
        }
        if d == 0 || sampled.is_empty() || !sampled.len().is_multiple_of(d) {
            return Err(Error::Empty);
        }
        let deltas: Vec<f64> = sampled.chunks_exact(d).flat_map(|r| r.iter().zip(t_obs).map(|(a, b)| a - b)).collect();
        let b = (sampled.len() / d) as f64;
        Ok(ImportanceLoglik { dim: d, theta0: theta0.to_vec(), deltas, ln_b: libm::log(b) })
    }

    pub fn from_batch(theta0: &[f64], batch: &SampleBatch, t_obs: &[f64]) -> Result<Self> {
        if batch.dim() != t_obs.len() {
            return Err(Error::DimensionMismatch { expected: batch.dim(), got: t_obs.len() });
        }
        Self::new(theta0, batch.flat(), t_obs)
    }

    fn log_weights(&self, theta: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = theta.iter().zip(&self.theta0).map(|(a, b)| a - b).collect();
        self.deltas.chunks_exact(self.dim).map(|r| crate::graph::dot(r, &diff)).collect()
    }

    /// `−log Σ_b exp((θ−θ0)ᵀΔ_b) + log B`; zero at `θ = θ0`.
    pub fn value(&self, theta: &[f64]) -> f64 {
        -(crate::counting::lse_nonempty(self.log_weights(theta).into_iter()) - self.ln_b)
    }

    pub fn eval(&self, theta: &[f64]) -> LoglikEval {
        let m = weighted_moments(&self.deltas, self.dim, &self.log_weights(theta));
        LoglikEval {
            value: -(m.log_total - self.ln_b),
            gradient: m.mean.iter().map(|x| -x).collect(),
            hessian: m.cov.iter().map(|x| -x).collect(),
        }
    }

    /// Newton ascent from `start`, halving steps that lose ground.
    pub fn maximize(&self, start: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim;
        let mut theta = start.to_vec();
        let mut cur = self.eval(&theta);
        for _ in 0..100 {
            if cur.gradient.iter().all(|g| g.abs() < 1e-9) {
                return Ok(theta);
            }
            let step = ridge_newton_step(&cur, d)?;
            let mut scale = 1.0;
            let mut moved = false;
            for _ in 0..50 {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
                let v = self.value(&cand);
                if v.is_finite() && v >= cur.value - 1e-12 {
                    theta = cand;
                    moved = true;
                    break;
                }
                scale *= 0.5;
            }
            if !moved {
                return Ok(theta);
            }
            cur = self.eval(&theta);
            if theta.iter().any(|t| !t.is_finite() || t.abs() > 1e6) {
                return Err(Error::MleDoesNotExist);
            }
        }
        Ok(theta)
    }
}

/// `ℓ(θ) − ℓ(θ0)` from a batch at `θ0` (see [`ImportanceLoglik`]).
pub fn estimated_loglik(theta: &[f64], theta0: &[f64], batch: &SampleBatch, t_obs: &[f64]) -> Result<f64> {
    Ok(ImportanceLoglik::from_batch(theta0, batch, t_obs)?.value(theta))
}

/// Distinct rows of a flat point set.
fn dedup_rows(points: &[f64], d: usize) -> Vec<f64> {
    let mut rows: Vec<&[f64]> = points.chunks_exact(d).collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    rows.dedup();
    rows.concat()
}

/// Whether `q` lies in the convex hull of `points` (closed). Exact for
/// `d ≤ 2`; for larger `d` a Frank–Wolfe distance minimisation decides,
/// with `tol` the distance counted as contact.
pub fn hull_contains(points: &[f64], d: usize, q: &[f64], tol: f64) -> bool {
    match d {
        1 => {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            lo - tol <= q[0] && q[0] <= hi + tol
        }
        2 => {
            let pts: Vec<(f64, f64)> = points.chunks_exact(2).map(|p| (p[0], p[1])).collect();
            match convex_hull_2d(&pts) {
                Ok(h) => point_location((q[0], q[1]), &h) != Location::Exterior,
                Err(_) => false,
            }
        }
        _ => frank_wolfe_contains(points, d, q, tol),
    }
}

fn frank_wolfe_contains(points: &[f64], d: usize, q: &[f64], tol: f64) -> bool {
    let rows: Vec<&[f64]> = points.chunks_exact(d).collect();
    if rows.is_empty() {
        return false;
    }
    let mut x = rows[0].to_vec();
    for _ in 0..20_000 {
        let g: Vec<f64> = x.iter().zip(q).map(|(a, b)| a - b).collect();
        let dist2: f64 = g.iter().map(|v| v * v).sum();
        if dist2 <= tol * tol {
            return true;
        }
        // vertex minimising ⟨g, p⟩; if every point lies on the far side of q
        // the hyperplane through q separates
        let (s, best) = rows
            .iter()
            .map(|p| (p, crate::graph::dot(&g, p)))
            .fold((rows[0], f64::INFINITY), |acc, (p, v)| if v < acc.1 { (p, v) } else { acc });
        if best - crate::graph::dot(&g, q) > 0.0 {
            return false;
        }
        let dir: Vec<f64> = s.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dd: f64 = dir.iter().map(|v| v * v).sum();
        if dd == 0.0 {
            return false;
        }
        let step = (-crate::graph::dot(&g, &dir) / dd).clamp(0.0, 1.0);
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += step * di;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaResult {
    pub gamma: f64,
    /// The sampled statistics span less than the full dimension.
    pub degenerate_hull: bool,
}

/// Smallest step-length returned.
pub const GAMMA_FLOOR: f64 = 1e-3;

/// Largest `γ ∈ (0, 1]` for which `γ·t_obs + (1−γ)·t̄` lies in the hull of
/// the sampled statistics shrunk by `margin` towards their mean `t̄`;
/// bisection to `1e−3`.
pub fn hummel_gamma(t_obs: &[f64], sampled: &[f64], margin: f64) -> Result<GammaResult> {
    let d = t_obs.len();
    if d == 0 || !sampled.len().is_multiple_of(d) || sampled.len() / d < d + 1 {
        return Err(Error::InvalidArgument("need at least d + 1 sampled points".into()));
    }
    let b = (sampled.len() / d) as f64;
    let mean: Vec<f64> = (0..d).map(|i| sampled.chunks_exact(d).map(|r| r[i]).sum::<f64>() / b).collect();
    let pts = dedup_rows(sampled, d);
    if is_degenerate(&pts, d) {
        return Ok(GammaResult { gamma: GAMMA_FLOOR, degenerate_hull: true });
    }
    let scale = pts.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let inside = |gamma: f64| {
        // q in the shrunk hull ⇔ mean + (q − mean)/(1 − margin) in the hull
        let q: Vec<f64> = (0..d)
            .map(|i| {
                let qi = gamma * t_obs[i] + (1.0 - gamma) * mean[i];
                mean[i] + (qi - mean[i]) / (1.0 - margin).max(1e-12)
            })
            .collect();
        hull_contains(&pts, d, &q, 1e-9 * scale)
    };
    if inside(1.0) {
        return Ok(GammaResult { gamma: 1.0, degenerate_hull: false });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammaResult { gamma: lo.max(GAMMA_FLOOR), degenerate_hull: false })
}

fn is_degenerate(pts: &[f64], d: usize) -> bool {
    let n = pts.len() / d;
    if n <= d {
        return true;
    }
    match d {
        1 => false,
        2 => {
            let p: Vec<(f64, f64)> = pts.chunks_exact(2).map(|r| (r[0], r[1])).collect();
            convex_hull_2d(&p).map_or(true, |h| h.degenerate)
        }
        _ => {
            let b = SampleBatch::from_rows(d, pts.to_vec()).expect("rows of length d");
            cholesky(&b.covariance(), d).is_err()
        }
    }
}

/// Result of the approximate-MLE existence check.
#[derive(Debug, Clone, PartialEq)]
pub struct AmleCheck {
    /// The observed statistic lies strictly inside the sampled hull.
    pub exists: bool,
    /// Per coordinate: some sample lies strictly below and some strictly
    /// above the observed value (a necessary condition).
    pub straddle: Vec<bool>,
}

pub fn amle_exists(t_obs: &[f64], sampled: &[f64]) -> Result<AmleCheck> {
    let d = t_obs.len();
    if d == 0 || sampled.is_empty() || !sampled.len().is_multiple_of(d) {
        return Err(Error::Empty);
    }
    let straddle: Vec<bool> = (0..d)
        .map(|i| {
            let below = sampled.chunks_exact(d).any(|r| r[i] < t_obs[i]);
            let above = sampled.chunks_exact(d).any(|r| r[i] > t_obs[i]);
            below && above
        })
        .collect();
    let pts = dedup_rows(sampled, d);
    let exists = straddle.iter().all(|&s| s)
        && match d {
            1 => true,
            2 => {
                let p: Vec<(f64, f64)> = pts.chunks_exact(2).map(|r| (r[0], r[1])).collect();
                let h = convex_hull_2d(&p)?;
                point_location((t_obs[0], t_obs[1]), &h) == Location::Interior
            }
            _ => {
                // strictly inside ⇔ inside after pushing t_obs slightly away from the mean
                let b = (pts.len() / d) as f64;
                let mean: Vec<f64> = (0..d).map(|i| pts.chunks_exact(d).map(|r| r[i]).sum::<f64>() / b).collect();
                let q: Vec<f64> = (0..d).map(|i| t_obs[i] + 1e-6 * (t_obs[i] - mean[i])).collect();
                !is_degenerate(&pts, d) && hull_contains(&pts, d, &q, 1e-9)
            }
        };
    Ok(AmleCheck { exists, straddle })
}

/// Square roots of the diagonal of the inverse covariance of `batch`.
pub fn standard_errors(batch: &SampleBatch, stats: &StatisticSet) -> Result<Vec<f64>> {
    let d = batch.dim();
    let cov = batch.covariance();
    match spd_inverse(&cov, d) {
        Ok(inv) => Ok((0..d).map(|i| libm::sqrt(inv[i * d + i].max(0.0))).collect()),
        Err(pivot) => {
            let names = stats.names();
            let flat: Vec<String> = (0..d).filter(|&i| cov[i * d + i] <= 0.0).map(|i| names[i].clone()).collect();
            Err(Error::SingularCovariance(if flat.is_empty() { names[..=pivot].to_vec() } else { flat }))
        }
    }
}

/// Estimate of `log c_k(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPartition {
    pub value: f64,
    pub method: LoglikMethod,
}

/// Erdős–Rényi graph with edge probability `p`, by geometric skips.
pub fn sample_bernoulli_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut g = Graph::empty(n);
    if p <= 0.0 || n < 2 {
        return g;
    }
    let total = (n * (n - 1) / 2) as u64;
    let ln_q = libm::log1p(-p.min(1.0 - 1e-16));
    let mut idx: u64 = 0;
    let (mut u, mut row_start, mut row_len) = (0usize, 0u64, (n - 1) as u64);
    loop {
        let r: f64 = rng.gen();
        let skip = if p >= 1.0 { 0 } else { (libm::log(1.0 - r) / ln_q) as u64 };
        idx = idx.saturating_add(skip);
        if idx >= total {
            return g;
        }
        while idx >= row_start + row_len {
            row_start += row_len;
            u += 1;
            row_len -= 1;
        }
        let v = u + 1 + (idx - row_start) as usize;
        g.add_edge(u, v).expect("valid pair");
        idx += 1;
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// `log c_k(θ)`: exact by enumeration for `n ≤ 7`; otherwise
///
/// `log c_k(θ_r) = C(n,2)·log(1 + e^{a}) + log P_{ER(σ(a))}(degen ≤ k)`
///
/// at a reference `θ_r` with edge coefficient `a` and all other
/// coefficients zero, plus `∫_0^1 (θ − θ_r)ᵀ E_{θ(s)}[t] ds` along the
/// straight path `θ(s) = θ_r + s(θ − θ_r)` (composite Simpson, tie-no-tie
/// chains at the nodes).
pub fn log_partition(
    theta: &[f64],
    n: usize,
    k: usize,
    stats: &StatisticSet,
    cfg: &LoglikConfig,
    seed: u64,
    chains: usize,
    runner: &dyn ChainRunner,
) -> Result<LogPartition> {
    if theta.len() != stats.dim() {
        return Err(Error::DimensionMismatch { expected: stats.dim(), got: theta.len() });
    }
    if n <= DEFAULT_MAX_N {
        let value = ExactEnsemble::new(n, k, stats)?.log_partition(theta)?;
        return Ok(LogPartition { value, method: LoglikMethod::Exact });
    }
    // work with edges as the first coordinate
    let (aug, theta_aug) = match stats.position(Statistic::Edges) {
        Some(_) => (stats.clone(), theta.to_vec()),
        None => {
            let mut v = vec![Statistic::Edges];
            v.extend_from_slice(stats.as_slice());
            let mut th = vec![0.0];
            th.extend_from_slice(theta);
            (StatisticSet::new(v)?, th)
        }
    };
    let e_pos = aug.position(Statistic::Edges).expect("edges present");
    let dyads = (n * (n - 1) / 2) as f64;

    let mut scratch = PeelScratch::default();
    let mut estimate_p = |a: f64, draws: usize, salt: u64| -> f64 {
        let p = logistic(a);
        let hits = (0..draws)
            .filter(|&i| {
                let mut rng = draw_rng(seed ^ salt, i as u64);
                is_within_degeneracy_with(&sample_bernoulli_graph(n, p, &mut rng), k, &mut scratch)
            })
            .count();
        hits as f64 / draws as f64
    };
    // lower the reference edge coefficient until the support is not rare
    let mut a = theta_aug[e_pos].min(0.0);
    for step in 0..40u64 {
        if estimate_p(a, 1_000, 0x5eed_0000 + step) >= 0.2 {
            break;
        }
        a -= 0.5;
    }
    let prob = estimate_p(a, cfg.reference_draws, 0x5eed_1000);
    if prob == 0.0 {
        return Err(Error::NonConvergence { iterations: 40 });
    }
    let ref_value = dyads * log1pexp(a) + libm::log(prob);

    let mut theta_ref = vec![0.0; aug.dim()];
    theta_ref[e_pos] = a;
    let dir: Vec<f64> = theta_aug.iter().zip(&theta_ref).map(|(x, r)| x - r).collect();
    if dir.iter().all(|v| *v == 0.0) {
        return Ok(LogPartition { value: ref_value, method: LoglikMethod::Importance });
    }
    let intervals = cfg.intervals.max(2) & !1;
    let per_chain = (cfg.samples_per_node / chains.max(1)).max(1) as u64;
    let mut chain_cfg = ChainConfig::tnt(n, per_chain, seed);
    let dyads_u = dyads as u64;
    chain_cfg.thin = dyads_u.min(MAX_THIN);
    chain_cfg.burn_in = 10 * dyads_u;
    chain_cfg.steps = chain_cfg.burn_in + per_chain * chain_cfg.thin;
    let mut integral = 0.0;
    for node in 0..=intervals {
        let s = node as f64 / intervals as f64;
        let th: Vec<f64> = theta_ref.iter().zip(&dir).map(|(r, d)| r + s * d).collect();
        chain_cfg.seed = seed.wrapping_add(0x7100 + node as u64);
        let batch = run_chains(&th, n, k, &aug, &chain_cfg, chains.max(1), runner)?;
        let f = crate::graph::dot(&dir, &batch.mean());
        let w = if node == 0 || node == intervals {
            1.0
        } else if node % 2 == 1 {
            4.0
        } else {
            2.0
        };
        integral += w * f;
    }
    integral /= 3.0 * intervals as f64;
    Ok(LogPartition { value: ref_value + integral, method: LoglikMethod::Importance })
}

/// Independent per-iteration seed.
fn iteration_seed(seed: u64, it: usize) -> u64 {
    seed ^ (it as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Largest thinning interval used by the fitting chains.
pub const MAX_THIN: u64 = 2_000;

fn chain_config(n: usize, samples: usize, chains: usize, seed: u64, g_obs: &Graph) -> ChainConfig {
    let per_chain = samples.div_ceil(chains) as u64;
    let mut cfg = ChainConfig::tnt(n, per_chain, seed);
    cfg.thin = cfg.thin.min(MAX_THIN);
    cfg.steps = cfg.burn_in + per_chain * cfg.thin;
    cfg.initial = Some(g_obs.clone());
    cfg
}

/// MCMC maximum likelihood with step-length damping.
pub fn mcmc_mle(g_obs: &Graph, cfg: &FitConfig, runner: &dyn ChainRunner) -> Result<FitResult> {
    cfg.validate()?;
    let n = g_obs.n();
    let stats = &cfg.stats;
    let d = stats.dim();
    let obs_k = degeneracy(g_obs).k;
    let k = match cfg.k {
        KPolicy::Observed => obs_k,
        KPolicy::Fixed(k) => k,
    };
    if k + 1 > n.max(1) {
        return Err(Error::Domain { n, k, reason: "k must not exceed n - 1" });
    }
    if obs_k > k {
        return Err(Error::OutsideSupport { degeneracy: obs_k, k });
    }
    let t_obs = compute_stats(g_obs, stats).0;
    let theta0 = match mple(g_obs, k, stats) {
        Ok(t) => t,
        Err(Error::Separation) => {
            // edges-only fallback
            let mut t = vec![0.0; d];
            if let Some(i) = stats.position(Statistic::Edges) {
                let dyads = g_obs.dyad_count() as f64;
                let m = g_obs.edge_count() as f64;
                let frac = ((m + 0.5) / (dyads + 1.0)).clamp(1e-6, 1.0 - 1e-6);
                t[i] = libm::log(frac / (1.0 - frac));
            }
            t
        }
        Err(e) => return Err(e),
    };

    let mut theta = theta0.clone();
    let mut gamma_trace = Vec::new();
    let mut theta_trace = vec![theta.clone()];
    let mut degenerate_hull = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut final_gamma = 0.0;
    for it in 0..cfg.max_iterations {
        iterations = it + 1;
        let ccfg = chain_config(n, cfg.samples, cfg.chains, iteration_seed(cfg.seed, it), g_obs);
        let batch = run_chains(&theta, n, k, stats, &ccfg, cfg.chains, runner)?;
        let g = hummel_gamma(&t_obs, batch.flat(), cfg.gamma_margin)?;
        degenerate_hull |= g.degenerate_hull;
        final_gamma = g.gamma;
        gamma_trace.push(g.gamma);
        let mean = batch.mean();
        let xi: Vec<f64> = t_obs.iter().zip(&mean).map(|(t, m)| g.gamma * t + (1.0 - g.gamma) * m).collect();
        let next = if g.degenerate_hull {
            // no curvature to speak of; take a small moment-matching step
            let dir: Vec<f64> = xi.iter().zip(&mean).map(|(x, m)| x - m).collect();
            theta.iter().zip(&dir).map(|(t, s)| t + 0.1 * s.signum()).collect()
        } else {
            ImportanceLoglik::from_batch(&theta, &batch, &xi)?.maximize(&theta)?
        };
        let change = next.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        theta = next;
        theta_trace.push(theta.clone());
        if g.gamma >= 1.0 && change < cfg.tol {
            converged = true;
            break;
        }
    }

    let fcfg = chain_config(n, cfg.samples, cfg.chains, iteration_seed(cfg.seed, usize::MAX / 2), g_obs);
    let final_batch = run_chains(&theta, n, k, stats, &fcfg, cfg.chains, runner)?;
    let std_errors = standard_errors(&final_batch, stats)?;
    let z_scores = theta.iter().zip(&std_errors).map(|(t, s)| t / s).collect();
    let amle = amle_exists(&t_obs, final_batch.flat())?;
    let lp = log_partition(&theta, n, k, stats, &cfg.loglik, iteration_seed(cfg.seed, usize::MAX), cfg.chains, runner)?;
    let log_likelihood = crate::graph::dot(&theta, &t_obs) - lp.value;
    let (aic, bic) = information_criteria(log_likelihood, d, n);
    Ok(FitResult {
        names: stats.names(),
        theta,
        std_errors,
        z_scores,
        log_likelihood,
        loglik_method: lp.method,
        aic,
        bic,
        iterations,
        converged,
        final_gamma,
        gamma_trace,
        theta_trace,
        amle_exists: amle.exists,
        degenerate_hull,
        k,
        n,
        t_obs,
        mple: theta0,
    })
}
