//! The work behind each subcommand, returning serialisable reports.

use std::path::Path;

use dergm_core::degeneracy::degeneracy;
use dergm_core::estimation::{mcmc_mle, FitConfig, FitResult, KPolicy};
use dergm_core::geometry::{
    curvature_at_max, entropy_map, likelihood_surface, polytope_estimate, AxisSpec, EntropyConfig,
};
use dergm_core::graph::{compute_stats, Statistic, StatisticSet};
use dergm_core::samplers::{stratified_threshold, SamplerConfig, Strategy};
use dergm_core::Graph;
use serde::Serialize;

use crate::edgelist::{self, EdgeList, EdgeListError, ParseOptions};
use crate::fixtures;
use crate::parallel::{self, Rayon};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Input(#[from] EdgeListError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Model(#[from] dergm_core::Error),
    #[error("observed graph outside support: degeneracy {degeneracy} > k = {k}")]
    ObservedOutsideSupport { degeneracy: usize, k: usize },
    #[error("fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
}

impl CommandError {
    /// 2: input or output; 3: domain or support; 4: non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Input(_) | CommandError::Io(_) => 2,
            CommandError::Model(dergm_core::Error::NonConvergence { .. })
            | CommandError::Model(dergm_core::Error::MleDoesNotExist)
            | CommandError::NotConverged { .. } => 4,
            CommandError::Model(_) | CommandError::ObservedOutsideSupport { .. } => 3,
        }
    }
}

pub type CommandResult<T> = Result<T, CommandError>;

/// Where an observed graph comes from.
#[derive(Debug, Clone)]
pub enum GraphSource {
    File { path: std::path::PathBuf, options: ParseOptions },
    Fixture(String),
}

pub fn load(source: &GraphSource) -> CommandResult<EdgeList> {
    match source {
        GraphSource::File { path, options } => Ok(edgelist::read(path, *options)?),
        GraphSource::Fixture(name) => match name.as_str() {
            "florentine" => Ok(fixtures::florentine()),
            "sampson" => Ok(fixtures::sampson()),
            "synthetic200" => Ok(fixtures::synthetic_200()),
            other => Err(CommandError::Io(format!("unknown fixture `{other}` (florentine, sampson, synthetic200)"))),
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Vertex labels in peeling order.
    pub ordering: Vec<String>,
    /// Core number of each vertex, in label order.
    pub core_numbers: Vec<usize>,
    pub labels: Vec<String>,
    pub duplicates: usize,
}

pub fn cmd_degeneracy(source: &GraphSource) -> CommandResult<DegeneracyReport> {
    let el = load(source)?;
    let d = degeneracy(&el.graph);
    Ok(DegeneracyReport {
        n: el.graph.n(),
        m: el.graph.edge_count(),
        k: d.k,
        ordering: d.ordering.iter().map(|&v| el.labels[v].clone()).collect(),
        core_numbers: d.core_numbers,
        labels: el.labels,
        duplicates: el.duplicates,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerateRow {
    pub k: usize,
    pub count: u64,
    pub at_most: u64,
    /// Largest edge count over graphs of degeneracy at most `k`.
    pub max_edges: u64,
    pub max_triangles: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerateReport {
    pub n: usize,
    pub total: u64,
    pub rows: Vec<EnumerateRow>,
}

pub fn cmd_enumerate(n: usize, allow_n8: bool) -> CommandResult<EnumerateReport> {
    let table = parallel::enumerate(n, allow_n8)?;
    let report = table.report();
    let mut max_e = vec![0u64; n.max(1)];
    let mut max_t = vec![0u64; n.max(1)];
    for (k, e, t, _, count) in table.entries() {
        if count > 0 {
            for j in k..n.max(1) {
                max_e[j] = max_e[j].max(e as u64);
                max_t[j] = max_t[j].max(t as u64);
            }
        }
    }
    let rows = report
        .histogram
        .iter()
        .enumerate()
        .map(|(k, &count)| EnumerateRow {
            k,
            count,
            at_most: report.at_most(k),
            max_edges: max_e[k],
            max_triangles: max_t[k],
        })
        .collect();
    Ok(EnumerateReport { n, total: report.total, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub draw: usize,
    pub edges: u64,
    pub triangles: u64,
    pub two_stars: u64,
}

pub struct SampleOutput {
    pub rows: Vec<SampleRow>,
    pub graphs: Vec<Graph>,
}

pub fn cmd_sample(cfg: &SamplerConfig, count: usize) -> CommandResult<SampleOutput> {
    let graphs = parallel::sample_graphs(cfg, count)?;
    let set = StatisticSet::new(vec![Statistic::Edges, Statistic::Triangles, Statistic::TwoStars])?;
    let rows = graphs
        .iter()
        .enumerate()
        .map(|(draw, g)| {
            let t = compute_stats(g, &set).0;
            SampleRow { draw, edges: t[0] as u64, triangles: t[1] as u64, two_stars: t[2] as u64 }
        })
        .collect();
    Ok(SampleOutput { rows, graphs })
}

/// Draws as edge-list blocks headed by `# draw i`.
pub fn graphs_text(graphs: &[Graph]) -> String {
    let mut out = String::new();
    for (i, g) in graphs.iter().enumerate() {
        out.push_str(&format!("# draw {i}\n"));
        out.push_str(&edgelist::write(g));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub statistics: Vec<String>,
    pub theta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub log_likelihood: f64,
    pub loglik_method: &'static str,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_gamma: f64,
    pub gamma_trace: Vec<f64>,
    pub theta_trace: Vec<Vec<f64>>,
    pub amle_exists: bool,
    pub degenerate_hull: bool,
    pub k: usize,
    pub n: usize,
    pub observed: Vec<f64>,
    pub mple: Vec<f64>,
}

impl From<FitResult> for FitReport {
    fn from(r: FitResult) -> Self {
        FitReport {
            statistics: r.names,
            theta: r.theta,
            std_errors: r.std_errors,
            z_scores: r.z_scores,
            log_likelihood: r.log_likelihood,
            loglik_method: r.loglik_method.name(),
            aic: r.aic,
            bic: r.bic,
            converged: r.converged,
            iterations: r.iterations,
            final_gamma: r.final_gamma,
            gamma_trace: r.gamma_trace,
            theta_trace: r.theta_trace,
            amle_exists: r.amle_exists,
            degenerate_hull: r.degenerate_hull,
            k: r.k,
            n: r.n,
            observed: r.t_obs,
            mple: r.mple,
        }
    }
}

pub fn fit_graph(g: &Graph, cfg: &FitConfig) -> CommandResult<FitResult> {
    if let KPolicy::Fixed(k) = cfg.k {
        let d = degeneracy(g).k;
        if d > k {
            return Err(CommandError::ObservedOutsideSupport { degeneracy: d, k });
        }
    }
    Ok(mcmc_mle(g, cfg, &Rayon)?)
}

/// Fits and reports; a finished fit that did not converge is returned
/// alongside the error so it can still be written out.
pub fn cmd_fit(source: &GraphSource, cfg: &FitConfig) -> CommandResult<(FitReport, Option<CommandError>)> {
    let el = load(source)?;
    let r = fit_graph(&el.graph, cfg)?;
    let warn = (!r.converged).then_some(CommandError::NotConverged { iterations: r.iterations });
    Ok((r.into(), warn))
}

#[derive(Debug, Clone, Serialize)]
pub struct HullReport {
    /// Counter-clockwise.
    pub vertices: Vec<[f64; 2]>,
    pub area: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub edges: f64,
    pub triangles: f64,
    pub location: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityCell {
    pub edges: u64,
    pub triangles: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolytopeReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub strategy: &'static str,
    pub hull: HullReport,
    pub probe: Option<ProbeReport>,
    /// Non-empty cells only.
    pub density: Vec<DensityCell>,
}

pub fn cmd_polytope(cfg: &SamplerConfig, samples: usize, probe: Option<(f64, f64)>) -> CommandResult<PolytopeReport> {
    let p = polytope_estimate(cfg, samples, probe, &Rayon)?;
    let density = p
        .density
        .cells()
        .filter_map(|(_, _, e, t, v)| {
            v.filter(|&c| c > 0.0).map(|c| DensityCell { edges: e as u64, triangles: t as u64, count: c as u64 })
        })
        .collect();
    Ok(PolytopeReport {
        n: cfg.n,
        k: cfg.k,
        samples,
        strategy: cfg.strategy.name(),
        hull: HullReport {
            vertices: p.hull.vertices.iter().map(|&(x, y)| [x, y]).collect(),
            area: p.hull.area,
            degenerate: p.hull.degenerate,
        },
        probe: probe.zip(p.probe).map(|((e, t), loc)| ProbeReport { edges: e, triangles: t, location: loc.name() }),
        density,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub x: f64,
    pub y: f64,
    /// Missing cells are `null` in JSON and empty in CSV.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyPointReport {
    pub theta_x: f64,
    pub theta_y: f64,
    pub mu_x: f64,
    pub mu_y: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub n: usize,
    pub k: usize,
    pub statistics: Vec<String>,
    pub coordinates: &'static str,
    pub cells: Vec<GridCell>,
    pub points: Vec<EntropyPointReport>,
}

pub fn cmd_entropy(cfg: &EntropyConfig) -> CommandResult<EntropyReport> {
    let m = entropy_map(cfg, &Rayon)?;
    Ok(EntropyReport {
        n: cfg.n,
        k: cfg.k,
        statistics: cfg.stats.names(),
        coordinates: m.surface.coordinates.name(),
        cells: m.surface.cells().map(|(_, _, x, y, value)| GridCell { x, y, value }).collect(),
        points: m
            .points
            .iter()
            .map(|p| EntropyPointReport {
                theta_x: p.theta[0],
                theta_y: p.theta[1],
                mu_x: p.mean_value[0],
                mu_y: p.mean_value[1],
                entropy: p.entropy,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub theta_x: f64,
    pub theta_y: f64,
    pub loglik: f64,
    /// `[h_xx, h_xy, h_yy]` of the local quadratic fit.
    pub hessian: [f64; 3],
    pub eigenvalues: [f64; 2],
    pub flattest: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub strategy: &'static str,
    pub coordinates: &'static str,
    pub cells: Vec<GridCell>,
    pub maximum: Option<CurvatureReport>,
}

pub fn cmd_surface(
    source: &GraphSource,
    k: usize,
    strategy: Strategy,
    seed: u64,
    x: AxisSpec,
    y: AxisSpec,
    samples: usize,
) -> CommandResult<SurfaceReport> {
    let el = load(source)?;
    let g = &el.graph;
    let d = degeneracy(g).k;
    if d > k {
        return Err(CommandError::ObservedOutsideSupport { degeneracy: d, k });
    }
    let cfg = SamplerConfig::new(g.n(), k, seed, strategy)?;
    let s = likelihood_surface(g, &cfg, &StatisticSet::edge_triangle(), x, y, samples, &Rayon)?;
    let maximum = curvature_at_max(&s).ok().map(|(i, j, c)| CurvatureReport {
        theta_x: x.value(i),
        theta_y: y.value(j),
        loglik: s.get(i, j).unwrap_or(f64::NAN),
        hessian: c.hessian,
        eigenvalues: c.eigenvalues,
        flattest: c.flattest(),
    });
    Ok(SurfaceReport {
        n: g.n(),
        k,
        samples,
        strategy: strategy.name(),
        coordinates: s.coordinates.name(),
        cells: s.cells().map(|(_, _, x, y, value)| GridCell { x, y, value }).collect(),
        maximum,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdJson {
    pub n: usize,
    pub k: usize,
    pub log_n1: f64,
    pub log_upper_n2: f64,
    pub t_estimated: f64,
    pub negligible: bool,
}

pub fn cmd_threshold(n: usize, k: usize) -> CommandResult<ThresholdJson> {
    let r = stratified_threshold(n, k)?;
    Ok(ThresholdJson {
        n: r.n,
        k: r.k,
        log_n1: r.log_n1,
        log_upper_n2: r.log_upper_n2,
        t_estimated: r.t_estimated,
        negligible: r.negligible,
    })
}

/// Rows as comma-separated text with a header row.
pub fn to_csv<T: Serialize>(rows: &[T]) -> CommandResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CommandError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CommandError::Io(e.to_string()))
}

pub fn write_file(path: &Path, data: &[u8]) -> CommandResult<()> {
    std::fs::write(path, data).map_err(|e| CommandError::Io(format!("cannot write {}: {e}", path.display())))
}
