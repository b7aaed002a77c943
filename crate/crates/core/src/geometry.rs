//! Planar convex hulls, point location, gridded surfaces and the diagnostics
//! built on them: statistic-cloud polytopes, entropy maps and likelihood
//! surfaces.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use alloc::collections::BTreeMap;

use crate::degeneracy::degeneracy;
use crate::error::{Error, Result};
use crate::estimation::ImportanceLoglik;
use crate::graph::{compute_stats, max_edges, max_triangles, Graph, Statistic, StatisticSet};
use crate::mcmc::{run_chains, support_batch, ChainConfig, ChainRunner, SampleBatch, Sequential};
use crate::samplers::SamplerConfig;

/// Absolute tolerance separating boundary from interior or exterior.
pub const LOCATION_TOL: f64 = 1e-9;

/// Convex polygon with vertices in counter-clockwise order and no three
/// consecutive vertices collinear. A degenerate hull is a point or a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull2D {
    pub vertices: Vec<(f64, f64)>,
    pub area: f64,
    pub degenerate: bool,
}

#[inline]
fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain.
pub fn convex_hull_2d(points: &[(f64, f64)]) -> Result<Hull2D> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidArgument("non-finite point".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    if pts.len() < 3 {
        return Ok(Hull2D { vertices: pts, area: 0.0, degenerate: true });
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        // collinear input: keep the two extreme points
        let ends = vec![pts[0], pts[pts.len() - 1]];
        return Ok(Hull2D { vertices: ends, area: 0.0, degenerate: true });
    }
    let area = 0.5
        * (0..hull.len())
            .map(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                a.0 * b.1 - a.1 * b.0
            })
            .sum::<f64>();
    Ok(Hull2D { vertices: hull, area, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Interior,
    Boundary,
    Exterior,
}

impl Location {
    pub fn name(self) -> &'static str {
        match self {
            Location::Interior => "interior",
            Location::Boundary => "boundary",
            Location::Exterior => "exterior",
        }
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    libm::hypot(p.0 - a.0 - t * dx, p.1 - a.1 - t * dy)
}

pub fn point_location(p: (f64, f64), hull: &Hull2D) -> Location {
    let v = &hull.vertices;
    if hull.degenerate {
        let d = match v.len() {
            0 => f64::INFINITY,
            1 => libm::hypot(p.0 - v[0].0, p.1 - v[0].1),
            _ => segment_distance(p, v[0], v[v.len() - 1]),
        };
        return if d <= LOCATION_TOL { Location::Boundary } else { Location::Exterior };
    }
    let mut min_dist = f64::INFINITY;
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        let len = libm::hypot(b.0 - a.0, b.1 - a.1);
        let signed = cross(a, b, p) / len;
        if signed < -LOCATION_TOL {
            return Location::Exterior;
        }
        min_dist = min_dist.min(signed);
    }
    if min_dist <= LOCATION_TOL {
        Location::Boundary
    } else {
        Location::Interior
    }
}

impl Hull2D {
    /// Hull scaled by `1 − margin` about `center`.
    pub fn shrunk(&self, center: (f64, f64), margin: f64) -> Hull2D {
        let s = 1.0 - margin;
        Hull2D {
            vertices: self
                .vertices
                .iter()
                .map(|&(x, y)| (center.0 + s * (x - center.0), center.1 + s * (y - center.1)))
                .collect(),
            area: self.area * s * s,
            degenerate: self.degenerate,
        }
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        point_location(p, self) != Location::Exterior
    }
}

/// One axis of a regular grid: `steps` points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !min.is_finite() || !max.is_finite() || max < min || (steps > 1 && max == min) {
            return Err(Error::InvalidArgument(alloc::format!("bad axis ({min}, {max}, {steps})")));
        }
        Ok(AxisSpec { min, max, steps })
    }

    pub fn spacing(&self) -> f64 {
        if self.steps > 1 {
            (self.max - self.min) / (self.steps - 1) as f64
        } else {
            0.0
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    /// Index of the grid point closest to `x`, if `x` lies within half a cell
    /// of the axis range.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        if self.steps == 1 {
            return (x == self.min).then_some(0);
        }
        let h = self.spacing();
        let r = libm::round((x - self.min) / h);
        (r >= 0.0 && r < self.steps as f64 && x.is_finite()).then_some(r as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateSystem {
    /// Natural parameters θ.
    Natural,
    /// Normalised mean-value parameters μ.
    MeanValue,
    /// Raw sufficient statistics.
    Statistic,
}

impl CoordinateSystem {
    pub fn name(self) -> &'static str {
        match self {
            CoordinateSystem::Natural => "natural",
            CoordinateSystem::MeanValue => "mean_value",
            CoordinateSystem::Statistic => "statistic",
        }
    }
}

/// Values on a regular 2D grid, `None` marking cells with no value.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSurface {
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub coordinates: CoordinateSystem,
    /// What the cell values are: "count", "entropy", "loglik".
    pub quantity: String,
    values: Vec<Option<f64>>,
}

impl GridSurface {
    pub fn new(x: AxisSpec, y: AxisSpec, coordinates: CoordinateSystem, quantity: &str) -> Self {
        GridSurface { x, y, coordinates, quantity: quantity.into(), values: vec![None; x.steps * y.steps] }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.y.steps + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Option<f64>) {
        self.values[i * self.y.steps + j] = v;
    }

    /// Cells as `(i, j, x, y, value)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64, f64, Option<f64>)> + '_ {
        (0..self.x.steps)
            .flat_map(move |i| (0..self.y.steps).map(move |j| (i, j, self.x.value(i), self.y.value(j), self.get(i, j))))
    }

    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().flatten().sum()
    }

    pub fn argmax(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, j, _, _, v) in self.cells() {
            if let Some(v) = v {
                if best.is_none_or(|b| v > b.2) {
                    best = Some((i, j, v));
                }
            }
        }
        best
    }

    /// Adds `c` to every present value.
    pub fn shift(&mut self, c: f64) {
        for v in self.values.iter_mut().flatten() {
            *v += c;
        }
    }
}

/// `−Σ p log p` of a histogram.
pub fn plug_in_entropy<I: IntoIterator<Item = u64>>(counts: I) -> f64 {
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let h = -counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * libm::log(p)
        })
        .sum::<f64>();
    h.max(0.0)
}

/// Local quadratic fit around a surface cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    /// Hessian of the fitted quadratic, `[h_xx, h_xy, h_yy]`.
    pub hessian: [f64; 3],
    /// Eigenvalues, ascending.
    pub eigenvalues: [f64; 2],
}

impl Curvature {
    /// Magnitude of the eigenvalue closest to zero: the flattest direction.
    pub fn flattest(&self) -> f64 {
        self.eigenvalues[0].abs().min(self.eigenvalues[1].abs())
    }
}

/// Least-squares quadratic through the 3×3 block of cells nearest
/// `(i, j)`, in physical axis units. Needs at least three steps per axis.
pub fn curvature_at(surface: &GridSurface, i: usize, j: usize) -> Result<Curvature> {
    let (nx, ny) = (surface.x.steps, surface.y.steps);
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidArgument("curvature needs a grid of at least 3 x 3".into()));
    }
    let ci = i.clamp(1, nx - 2);
    let cj = j.clamp(1, ny - 2);
    let (x0, y0) = (surface.x.value(ci), surface.y.value(cj));
    // normal equations for f = a + b x + c y + d x² + e xy + f y²
    let mut ata = [0.0; 36];
    let mut atb = [0.0; 6];
    let mut used = 0;
    for a in ci - 1..=ci + 1 {
        for b in cj - 1..=cj + 1 {
            let Some(v) = surface.get(a, b) else { continue };
            let (x, y) = (surface.x.value(a) - x0, surface.y.value(b) - y0);
            let row = [1.0, x, y, x * x, x * y, y * y];
            for r in 0..6 {
                atb[r] += row[r] * v;
                for c in 0..6 {
                    ata[r * 6 + c] += row[r] * row[c];
                }
            }
            used += 1;
        }
    }
    if used < 6 {
        return Err(Error::InvalidArgument("too many missing cells for a quadratic fit".into()));
    }
    let l = crate::linalg::cholesky(&ata, 6).map_err(|_| Error::InvalidArgument("ill-posed quadratic fit".into()))?;
    let coef = crate::linalg::cholesky_solve(&l, 6, &atb);
    let hessian = [2.0 * coef[3], coef[4], 2.0 * coef[5]];
    let eigenvalues = crate::linalg::sym2_eigenvalues(hessian[0], hessian[1], hessian[2]);
    Ok(Curvature { hessian, eigenvalues })
}

/// Curvature of the fitted quadratic at the surface maximum, with the
/// maximising cell.
pub fn curvature_at_max(surface: &GridSurface) -> Result<(usize, usize, Curvature)> {
    let (i, j, _) = surface.argmax().ok_or(Error::Empty)?;
    Ok((i, j, curvature_at(surface, i, j)?))
}

/// Fewest draws accepted by [`polytope_estimate`].
pub const POLYTOPE_MIN_SAMPLES: usize = 1000;

/// Sampled edge-triangle polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeEstimate {
    pub hull: Hull2D,
    /// Draw counts per integer `(edges, triangles)` cell; sums to `samples`.
    pub density: GridSurface,
    pub probe: Option<Location>,
    pub samples: usize,
}

fn integer_axis(values: impl Iterator<Item = f64>) -> Result<AxisSpec> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    AxisSpec::new(lo, hi, (hi - lo) as usize + 1)
}

/// Hull and density of `(edges, triangles)` over `samples` support draws,
/// and the location of `probe` relative to the hull.
pub fn polytope_estimate(
    cfg: &SamplerConfig,
    samples: usize,
    probe: Option<(f64, f64)>,
    runner: &dyn ChainRunner,
) -> Result<PolytopeEstimate> {
    if samples < POLYTOPE_MIN_SAMPLES {
        return Err(Error::InvalidArgument(alloc::format!("polytope needs at least {POLYTOPE_MIN_SAMPLES} draws")));
    }
    let batch = support_batch(cfg, &StatisticSet::edge_triangle(), samples, runner)?;
    let points: Vec<(f64, f64)> = batch.rows().map(|r| (r[0], r[1])).collect();
    let hull = convex_hull_2d(&points)?;
    let x = integer_axis(points.iter().map(|p| p.0))?;
    let y = integer_axis(points.iter().map(|p| p.1))?;
    let mut counts = vec![0u64; x.steps * y.steps];
    for &(e, t) in &points {
        counts[(e - x.min) as usize * y.steps + (t - y.min) as usize] += 1;
    }
    let mut density = GridSurface::new(x, y, CoordinateSystem::Statistic, "count");
    for i in 0..x.steps {
        for j in 0..y.steps {
            density.set(i, j, Some(counts[i * y.steps + j] as f64));
        }
    }
    let probe = probe.map(|p| point_location(p, &hull));
    Ok(PolytopeEstimate { hull, density, probe, samples })
}

/// Largest value of a statistic over `G_{n,k}`, or a crude bound for
/// two-stars.
fn statistic_scale(stat: Statistic, n: usize, k: usize) -> Result<f64> {
    Ok(match stat {
        Statistic::Edges => max_edges(n, k)? as f64,
        Statistic::Triangles => max_triangles(n, k)? as f64,
        Statistic::TwoStars => (n * (n - 1) * n.saturating_sub(2) / 2) as f64,
    })
}

/// One grid parameter of an entropy map.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyPoint {
    pub theta: [f64; 2],
    /// Mean statistics divided by their maxima over the support.
    pub mean_value: [f64; 2],
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyMap {
    /// Entropy on the unit square of normalised mean values. A cell holds
    /// the average over the grid parameters whose mean value is nearest to
    /// it; cells nothing maps to are missing.
    pub surface: GridSurface,
    pub points: Vec<EntropyPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyConfig {
    pub n: usize,
    pub k: usize,
    pub stats: StatisticSet,
    pub theta_x: AxisSpec,
    pub theta_y: AxisSpec,
    /// Retained states per grid parameter.
    pub samples: u64,
    /// Cells per axis of the output grid.
    pub bins: usize,
    pub seed: u64,
}

/// Plug-in entropy of the joint statistic distribution under the model,
/// over a grid of natural parameters, displayed in mean-value coordinates.
pub fn entropy_map(cfg: &EntropyConfig, runner: &dyn ChainRunner) -> Result<EntropyMap> {
    if cfg.stats.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: cfg.stats.dim() });
    }
    if cfg.bins < 2 {
        return Err(Error::InvalidArgument("need at least 2 bins per axis".into()));
    }
    let scale = [
        statistic_scale(cfg.stats.as_slice()[0], cfg.n, cfg.k)?.max(1.0),
        statistic_scale(cfg.stats.as_slice()[1], cfg.n, cfg.k)?.max(1.0),
    ];
    let ny = cfg.theta_y.steps;
    let grid = cfg.theta_x.steps * ny;
    let job = |p: usize| -> Result<SampleBatch> {
        let theta = [cfg.theta_x.value(p / ny), cfg.theta_y.value(p % ny)];
        let seed = cfg.seed ^ (p as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let chain = ChainConfig::tnt(cfg.n, cfg.samples, seed);
        run_chains(&theta, cfg.n, cfg.k, &cfg.stats, &chain, 1, &Sequential)
    };
    let batches = runner.run(grid, &job)?;
    let mut points = Vec::with_capacity(grid);
    for (p, b) in batches.iter().enumerate() {
        let mut hist: BTreeMap<(i64, i64), u64> = BTreeMap::new();
        for r in b.rows() {
            *hist.entry((r[0] as i64, r[1] as i64)).or_insert(0) += 1;
        }
        let mean = b.mean();
        points.push(EntropyPoint {
            theta: [cfg.theta_x.value(p / ny), cfg.theta_y.value(p % ny)],
            mean_value: [mean[0] / scale[0], mean[1] / scale[1]],
            entropy: plug_in_entropy(hist.into_values()),
        });
    }
    let axis = AxisSpec::new(0.0, 1.0, cfg.bins)?;
    let mut sums = vec![(0.0, 0u32); cfg.bins * cfg.bins];
    for pt in &points {
        if let (Some(i), Some(j)) = (axis.nearest(pt.mean_value[0]), axis.nearest(pt.mean_value[1])) {
            let c = &mut sums[i * cfg.bins + j];
            c.0 += pt.entropy;
            c.1 += 1;
        }
    }
    let mut surface = GridSurface::new(axis, axis, CoordinateSystem::MeanValue, "entropy");
    for i in 0..cfg.bins {
        for j in 0..cfg.bins {
            let (s, c) = sums[i * cfg.bins + j];
            surface.set(i, j, (c > 0).then(|| s / c as f64));
        }
    }
    Ok(EntropyMap { surface, points })
}

/// Estimated log-likelihood ratio against the uniform model (`θ = 0`) on a
/// grid of natural parameters, from one shared batch of `samples` support
/// draws.
pub fn likelihood_surface(
    g_obs: &Graph,
    sampler: &SamplerConfig,
    stats: &StatisticSet,
    x: AxisSpec,
    y: AxisSpec,
    samples: usize,
    runner: &dyn ChainRunner,
) -> Result<GridSurface> {
    if stats.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: stats.dim() });
    }
    if g_obs.n() != sampler.n {
        return Err(Error::InvalidArgument("observed graph and sampler disagree on n".into()));
    }
    let obs_k = degeneracy(g_obs).k;
    if obs_k > sampler.k {
        return Err(Error::OutsideSupport { degeneracy: obs_k, k: sampler.k });
    }
    let t_obs = compute_stats(g_obs, stats).0;
    let batch = support_batch(sampler, stats, samples, runner)?;
    let f = ImportanceLoglik::from_batch(&[0.0, 0.0], &batch, &t_obs)?;
    let mut surface = GridSurface::new(x, y, CoordinateSystem::Natural, "loglik");
    for i in 0..x.steps {
        for j in 0..y.steps {
            let v = f.value(&[x.value(i), y.value(j)]);
            surface.set(i, j, v.is_finite().then_some(v));
        }
    }
    Ok(surface)
}
