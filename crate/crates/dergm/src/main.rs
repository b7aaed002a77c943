use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dergm::commands::{self, CommandError, CommandResult, GraphSource};
use dergm::edgelist::{LabelMode, ParseOptions};
use dergm::manifest::RunManifest;
use dergm_core::estimation::{FitConfig, KPolicy};
use dergm_core::geometry::{AxisSpec, EntropyConfig};
use dergm_core::graph::{compute_stats, StatisticSet};
use dergm_core::samplers::{SamplerConfig, Strategy};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "dergm", version, about = "Degeneracy-restricted exponential random graph models")]
struct Cli {
    /// Master seed; every Monte Carlo command is reproducible from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the run manifest here instead of stderr.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Input {
    /// Edge-list file.
    #[arg(required_unless_present = "fixture")]
    input: Option<PathBuf>,
    /// Use a bundled dataset instead: florentine, sampson or synthetic200.
    #[arg(long, conflicts_with = "input")]
    fixture: Option<String>,
    /// Vertex numbers in the file start at 1.
    #[arg(long)]
    one_indexed: bool,
    /// Treat every token as a label, even if numeric.
    #[arg(long)]
    labels: bool,
}

impl Input {
    fn source(&self) -> GraphSource {
        match (&self.input, &self.fixture) {
            (_, Some(name)) => GraphSource::Fixture(name.clone()),
            (Some(path), None) => GraphSource::File {
                path: path.clone(),
                options: ParseOptions {
                    one_indexed: self.one_indexed,
                    labels: if self.labels { LabelMode::Names } else { LabelMode::Auto },
                },
            },
            (None, None) => unreachable!("clap requires one of them"),
        }
    }
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Degeneracy, peeling order and core numbers of a graph.
    Degeneracy(Input),
    /// Histogram of degeneracy over all graphs on n vertices.
    Enumerate {
        n: usize,
        /// Permit n = 8 (about 2.7e8 graphs).
        #[arg(long)]
        allow_n8: bool,
    },
    /// Draw graphs from the support.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value = "well_ordered")]
        strategy: String,
        /// Edge count, with `--strategy fixed_m`.
        #[arg(long)]
        m: Option<usize>,
        /// Emit edge lists instead of statistics.
        #[arg(long)]
        graphs: bool,
    },
    /// MCMC maximum likelihood fit.
    Fit {
        #[command(flatten)]
        input: Input,
        /// Comma-separated: edges, triangles, two_stars.
        #[arg(long, default_value = "edges,triangles")]
        stats: String,
        /// Degeneracy bound, or `observed`.
        #[arg(long, default_value = "observed")]
        k: String,
        /// Retained samples per iteration.
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        chains: usize,
        #[arg(long, default_value_t = 30)]
        max_iter: usize,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
    /// Sampled edge-triangle polytope with an optional probe point.
    Polytope {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value = "well_ordered")]
        strategy: String,
        /// Probe statistic as `edges,triangles`.
        #[arg(long, value_parser = parse_pair, conflicts_with = "probe_fixture")]
        probe: Option<(f64, f64)>,
        /// Probe with the statistic of a bundled dataset.
        #[arg(long)]
        probe_fixture: Option<String>,
        /// Also write hull vertices as CSV here.
        #[arg(long)]
        hull_csv: Option<PathBuf>,
    },
    /// Entropy of the statistic distribution over a parameter grid.
    Entropy {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "edges,triangles")]
        stats: String,
        /// `min:max:steps`
        #[arg(long, value_parser = parse_axis, default_value = "-3:1:21")]
        #[serde(serialize_with = "axis_json")]
        theta_x: AxisSpec,
        #[arg(long, value_parser = parse_axis, default_value = "-1:2:16")]
        #[serde(serialize_with = "axis_json")]
        theta_y: AxisSpec,
        /// Retained chain states per grid point.
        #[arg(long, default_value_t = 2_000)]
        samples: u64,
        /// Cells per axis of the mean-value grid.
        #[arg(long, default_value_t = 25)]
        bins: usize,
    },
    /// Estimated log-likelihood surface from one uniform batch.
    Surface {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 25_000)]
        samples: usize,
        #[arg(long, default_value = "well_ordered")]
        strategy: String,
        #[arg(long, value_parser = parse_axis, default_value = "-4:1:51")]
        #[serde(serialize_with = "axis_json")]
        theta_x: AxisSpec,
        #[arg(long, value_parser = parse_axis, default_value = "-1.5:2.5:41")]
        #[serde(serialize_with = "axis_json")]
        theta_y: AxisSpec,
    },
    /// Stratification threshold between well-ordered and other graphs.
    Threshold {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `x,y`")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn axis_json<S: serde::Serializer>(a: &AxisSpec, s: S) -> Result<S::Ok, S::Error> {
    (a.min, a.max, a.steps).serialize(s)
}

fn parse_axis(s: &str) -> Result<AxisSpec, String> {
    let p: Vec<&str> = s.split(':').collect();
    let [a, b, c] = p[..] else { return Err("expected `min:max:steps`".into()) };
    let f = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{e}"));
    AxisSpec::new(f(a)?, f(b)?, c.trim().parse().map_err(|e| format!("{e}"))?).map_err(|e| e.to_string())
}

/// One finished command: the main output plus any side files.
struct Rendered {
    main: Vec<u8>,
    side: Vec<(PathBuf, Vec<u8>)>,
    /// Exit with this error after writing the output.
    warning: Option<CommandError>,
}

impl Rendered {
    fn main(main: Vec<u8>) -> Self {
        Rendered { main, side: Vec::new(), warning: None }
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serialisable");
    s.push(b'\n');
    s
}

fn strategy(name: &str) -> CommandResult<Strategy> {
    Ok(Strategy::parse(name)?)
}

fn run(cli: &Cli) -> CommandResult<Rendered> {
    let fmt = cli.format;
    match &cli.command {
        Command::Degeneracy(input) => {
            let r = commands::cmd_degeneracy(&input.source())?;
            Ok(Rendered::main(match fmt {
                Format::Json => json(&r),
                Format::Text => format!("n = {}, m = {}, degeneracy = {}\n", r.n, r.m, r.k).into_bytes(),
                Format::Csv => {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        vertex: usize,
                        label: &'a str,
                        core_number: usize,
                    }
                    let rows: Vec<Row> = r
                        .labels
                        .iter()
                        .enumerate()
                        .map(|(v, l)| Row { vertex: v, label: l, core_number: r.core_numbers[v] })
                        .collect();
                    commands::to_csv(&rows)?
                }
            }))
        }
        Command::Enumerate { n, allow_n8 } => {
            let r = commands::cmd_enumerate(*n, *allow_n8)?;
            Ok(Rendered::main(match fmt {
                Format::Json => json(&r),
                Format::Csv => commands::to_csv(&r.rows)?,
                Format::Text => {
                    let mut s = format!("n = {}, {} graphs\n", r.n, r.total);
                    for row in &r.rows {
                        s.push_str(&format!("k = {}: {}\n", row.k, row.count));
                    }
                    s.into_bytes()
                }
            }))
        }
        Command::Sample { n, k, count, strategy: name, m, graphs } => {
            let cfg = match (strategy(name)?, m) {
                (Strategy::FixedM, Some(m)) => SamplerConfig::with_m(*n, *k, *m, cli.seed)?,
                (Strategy::FixedM, None) => {
                    return Err(dergm_core::Error::InvalidArgument("fixed_m needs --m".into()).into())
                }
                (s, _) => SamplerConfig::new(*n, *k, cli.seed, s)?,
            };
            let out = commands::cmd_sample(&cfg, *count)?;
            Ok(Rendered::main(if *graphs {
                commands::graphs_text(&out.graphs).into_bytes()
            } else {
                match fmt {
                    Format::Json => json(&out.rows),
                    _ => commands::to_csv(&out.rows)?,
                }
            }))
        }
        Command::Fit { input, stats, k, samples, chains, max_iter, tol } => {
            let k = match k.as_str() {
                "observed" => KPolicy::Observed,
                v => KPolicy::Fixed(v.parse().map_err(|_| {
                    dergm_core::Error::InvalidArgument(format!("k must be an integer or `observed`, got `{v}`"))
                })?),
            };
            let mut cfg = FitConfig::new(StatisticSet::parse(stats)?, k, cli.seed);
            cfg.samples = *samples;
            cfg.chains = *chains;
            cfg.max_iterations = *max_iter;
            cfg.tol = *tol;
            let (r, warning) = commands::cmd_fit(&input.source(), &cfg)?;
            let main = match fmt {
                Format::Json => json(&r),
                Format::Csv => {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        statistic: &'a str,
                        estimate: f64,
                        std_error: f64,
                        z: f64,
                    }
                    let rows: Vec<Row> = (0..r.theta.len())
                        .map(|i| Row {
                            statistic: &r.statistics[i],
                            estimate: r.theta[i],
                            std_error: r.std_errors[i],
                            z: r.z_scores[i],
                        })
                        .collect();
                    commands::to_csv(&rows)?
                }
                Format::Text => {
                    let mut s = String::new();
                    for i in 0..r.theta.len() {
                        s.push_str(&format!("{:<10} {:>9.4} ({:.4})\n", r.statistics[i], r.theta[i], r.std_errors[i]));
                    }
                    s.push_str(&format!(
                        "loglik {:.3} ({})  AIC {:.3}  BIC {:.3}  k = {}  converged = {}\n",
                        r.log_likelihood, r.loglik_method, r.aic, r.bic, r.k, r.converged
                    ));
                    s.into_bytes()
                }
            };
            Ok(Rendered { main, side: Vec::new(), warning })
        }
        Command::Polytope { n, k, samples, strategy: name, probe, probe_fixture, hull_csv } => {
            let probe = match probe_fixture {
                Some(f) => {
                    let g = commands::load(&GraphSource::Fixture(f.clone()))?.graph;
                    let t = compute_stats(&g, &StatisticSet::edge_triangle()).0;
                    Some((t[0], t[1]))
                }
                None => *probe,
            };
            let cfg = SamplerConfig::new(*n, *k, cli.seed, strategy(name)?)?;
            let r = commands::cmd_polytope(&cfg, *samples, probe)?;
            #[derive(Serialize)]
            struct HullRow {
                vertex: usize,
                edges: f64,
                triangles: f64,
            }
            let hull_rows: Vec<HullRow> = r
                .hull
                .vertices
                .iter()
                .enumerate()
                .map(|(i, v)| HullRow { vertex: i, edges: v[0], triangles: v[1] })
                .collect();
            let mut side = Vec::new();
            if let Some(p) = hull_csv {
                side.push((p.clone(), commands::to_csv(&hull_rows)?));
            }
            let main = match fmt {
                Format::Json => json(&r),
                Format::Csv => commands::to_csv(&r.density)?,
                Format::Text => format!(
                    "hull: {} vertices, area {:.1}; probe: {}\n",
                    r.hull.vertices.len(),
                    r.hull.area,
                    r.probe.as_ref().map_or("none", |p| p.location)
                )
                .into_bytes(),
            };
            Ok(Rendered { main, side, warning: None })
        }
        Command::Entropy { n, k, stats, theta_x, theta_y, samples, bins } => {
            let cfg = EntropyConfig {
                n: *n,
                k: *k,
                stats: StatisticSet::parse(stats)?,
                theta_x: *theta_x,
                theta_y: *theta_y,
                samples: *samples,
                bins: *bins,
                seed: cli.seed,
            };
            let r = commands::cmd_entropy(&cfg)?;
            Ok(Rendered::main(match fmt {
                Format::Json | Format::Text => json(&r),
                Format::Csv => commands::to_csv(&r.cells)?,
            }))
        }
        Command::Surface { input, k, samples, strategy: name, theta_x, theta_y } => {
            let r =
                commands::cmd_surface(&input.source(), *k, strategy(name)?, cli.seed, *theta_x, *theta_y, *samples)?;
            Ok(Rendered::main(match fmt {
                Format::Json | Format::Text => json(&r),
                Format::Csv => commands::to_csv(&r.cells)?,
            }))
        }
        Command::Threshold { n, k } => {
            let r = commands::cmd_threshold(*n, *k)?;
            Ok(Rendered::main(match fmt {
                Format::Csv => commands::to_csv(&[r])?,
                _ => json(&r),
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let command_name = serde_json::to_value(&cli.command)
        .ok()
        .and_then(|v| match v {
            serde_json::Value::Object(m) => m.keys().next().cloned(),
            serde_json::Value::String(s) => Some(s),
            _ => None,
        })
        .unwrap_or_default()
        .to_lowercase();
    let config = serde_json::json!({ "command": &cli.command, "format": cli.format });
    let mut manifest = RunManifest::new(&command_name, config, Some(cli.seed), threads);

    let start = Instant::now();
    let result = pool.install(|| run(&cli));
    manifest.wall_time_secs = start.elapsed().as_secs_f64();

    let rendered = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    manifest.record("main", &rendered.main);
    let written = match &cli.out {
        Some(p) => commands::write_file(p, &rendered.main),
        None => std::io::stdout().write_all(&rendered.main).map_err(|e| CommandError::Io(e.to_string())),
    };
    let written = written.and_then(|_| {
        for (p, data) in &rendered.side {
            commands::write_file(p, data)?;
            manifest.record(&p.display().to_string(), data);
        }
        let m = serde_json::to_vec_pretty(&manifest).expect("serialisable");
        match &cli.manifest {
            Some(p) => commands::write_file(p, &m),
            None => {
                eprintln!("{}", String::from_utf8_lossy(&m));
                Ok(())
            }
        }
    });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    match rendered.warning {
        Some(w) => {
            eprintln!("error: {w}");
            ExitCode::from(w.exit_code() as u8)
        }
        None => ExitCode::SUCCESS,
    }
}
