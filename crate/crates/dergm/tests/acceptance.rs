//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed. Exits non-zero
//! when a criterion fails that is not listed in `KNOWN_FAILURES`.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use dergm::commands::cmd_enumerate;
use dergm::fixtures;
use dergm::parallel::Rayon;
use dergm_core::enumeration::{enumerate_all, graph_mask, ExactEnsemble};
use dergm_core::estimation::{mcmc_mle, FitConfig, ImportanceLoglik, KPolicy};
use dergm_core::geometry::{curvature_at_max, likelihood_surface, polytope_estimate, AxisSpec, Location};
use dergm_core::graph::{max_edges, max_triangles};
use dergm_core::mcmc::{mh_independent, mh_tnt, run_chains, ChainConfig, Theta};
use dergm_core::samplers::{
    draw_rng, sample_batch, sample_non_well_ordered, sample_well_ordered, stratified_threshold, SamplerConfig,
    Strategy, SupportSampler,
};
use dergm_core::*;
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Criteria whose failure is documented rather than fixed.
const KNOWN_FAILURES: &[u32] = &[7];

struct Line {
    id: u32,
    pass: bool,
    detail: String,
}

fn line(id: u32, pass: bool, detail: String) -> Line {
    let tag = match (pass, KNOWN_FAILURES.contains(&id)) {
        (true, _) => "PASS",
        (false, true) => "FAIL (known)",
        (false, false) => "FAIL",
    };
    println!("criterion {id:>2}: {tag}  {detail}");
    Line { id, pass, detail }
}

fn c1_enumeration() -> Line {
    let t = Instant::now();
    let r = cmd_enumerate(7, false).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let counts: Vec<u64> = r.rows.iter().map(|row| row.count).collect();
    let want = [1, 36960, 1095461, 900298, 63801, 630, 1];
    let pass = counts == want && r.total == 2_097_152 && secs < 600.0;
    line(1, pass, format!("n=7 counts {counts:?}, total {}, {secs:.2}s", r.total))
}

fn c2_bounds() -> Line {
    let r = cmd_enumerate(7, false).unwrap();
    let mut bad = Vec::new();
    for row in r.rows.iter().filter(|row| row.k >= 1) {
        let (e, t) = (max_edges(7, row.k).unwrap(), max_triangles(7, row.k).unwrap());
        if (row.max_edges, row.max_triangles) != (e, t) {
            bad.push((row.k, row.max_edges, e, row.max_triangles, t));
        }
    }
    let maxima: Vec<(u64, u64)> = r.rows.iter().skip(1).map(|row| (row.max_edges, row.max_triangles)).collect();
    line(2, bad.is_empty(), format!("n=7 (edges, triangles) maxima for k=1..6 {maxima:?}, mismatches {bad:?}"))
}

fn chi_square(n: usize, k: usize, seed: u64, per_cell: usize) -> (usize, u64, f64, f64) {
    let cells: Vec<u64> = enumerate_all(n).unwrap().filter(|g| g.is_well_ordered(k)).map(|g| graph_mask(&g)).collect();
    let index: HashMap<u64, usize> = cells.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let exact = count_well_ordered(n, k).unwrap().exact.unwrap();
    let cfg = SamplerConfig::new(n, k, seed, Strategy::WellOrdered).unwrap();
    let draws = per_cell * cells.len();
    let mut counts = vec![0u64; cells.len()];
    let mut rng = draw_rng(seed, 0);
    for _ in 0..draws {
        counts[index[&graph_mask(&sample_well_ordered(&cfg, &mut rng).unwrap())]] += 1;
    }
    let e = per_cell as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let crit = ChiSquared::new((cells.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    (cells.len(), exact.try_into().unwrap(), stat, crit)
}

fn c3_uniformity() -> Line {
    let a = chi_square(4, 2, 31, 1000);
    let b = chi_square(5, 2, 32, 200);
    let pass = a.0 == 56 && a.1 == 56 && a.2 < a.3 && b.0 == 616 && b.1 == 616 && b.2 < b.3;
    line(
        3,
        pass,
        format!("(4,2) cells {} chi2 {:.1} < {:.1}; (5,2) cells {} chi2 {:.1} < {:.1}", a.0, a.2, a.3, b.0, b.2, b.3),
    )
}

fn total_variation(visits: &HashMap<u64, u64>, exact: &HashMap<u64, f64>, steps: f64) -> f64 {
    let mut tv: f64 = exact.iter().map(|(m, p)| (visits.get(m).copied().unwrap_or(0) as f64 / steps - p).abs()).sum();
    tv += visits.iter().filter(|(m, _)| !exact.contains_key(m)).map(|(_, &c)| c as f64 / steps).sum::<f64>();
    tv / 2.0
}

fn c4_model_sampler() -> Line {
    let s = StatisticSet::edge_triangle();
    let theta = [0.5, -0.3];
    let support: Vec<Graph> = enumerate_all(5).unwrap().filter(|g| degeneracy(g).k <= 2).collect();
    let w: Vec<f64> = support
        .iter()
        .map(|g| {
            let t = compute_stats(g, &s).0;
            (theta[0] * t[0] + theta[1] * t[1]).exp()
        })
        .collect();
    let z: f64 = w.iter().sum();
    let exact: HashMap<u64, f64> = support.iter().zip(&w).map(|(g, wi)| (graph_mask(g), wi / z)).collect();

    let steps = 1_000_000u64;
    let burn = 10_000u64;
    let th = Theta::new(theta.to_vec(), &s).unwrap();
    let tv_of = |cfg: &ChainConfig, tnt: bool| {
        let mut rng = draw_rng(cfg.seed, 0);
        let batch = if tnt {
            mh_tnt(&th, 5, 2, &s, cfg, &mut rng).unwrap()
        } else {
            mh_independent(&th, 5, 2, &s, cfg, &mut rng).unwrap()
        };
        let mut visits = HashMap::new();
        for g in batch.graphs.as_ref().unwrap() {
            *visits.entry(graph_mask(g)).or_insert(0u64) += 1;
        }
        total_variation(&visits, &exact, batch.len() as f64)
    };
    let mut tnt = ChainConfig::tnt(5, 0, 41);
    tnt.steps = steps + burn;
    tnt.burn_in = burn;
    tnt.thin = 1;
    tnt.keep_graphs = true;
    let mut ind = ChainConfig::independent(Strategy::Rejection, steps + burn, burn, 1, 42);
    ind.keep_graphs = true;
    let (a, b) = (tv_of(&tnt, true), tv_of(&ind, false));
    line(4, a <= 0.02 && b <= 0.02, format!("(5,2) 10^6 steps: TV tie-no-tie {a:.4}, independent {b:.4} (<= 0.02)"))
}

fn c5_oracle() -> Line {
    let s = StatisticSet::edge_triangle();
    let ens = ExactEnsemble::new(6, 2, &s).unwrap();
    let cfg = SamplerConfig::new(6, 2, 55, Strategy::Rejection).unwrap();
    let mut sampler = SupportSampler::new(&cfg).unwrap();
    let mut rng = draw_rng(55, 0);
    let (mut worst_theta, mut worst_ll, mut graphs, mut all_converged) = (0.0f64, 0.0f64, 0, true);
    while graphs < 10 {
        let g = sampler.sample(&mut rng).unwrap();
        let t_obs = compute_stats(&g, &s).0;
        if ens.mle_exists(&t_obs) != Some(true) {
            continue;
        }
        let exact = ens.mle(&t_obs).unwrap();
        let mut fc = FitConfig::new(s.clone(), KPolicy::Fixed(2), 100 + graphs);
        fc.samples = 50_000;
        let fit = mcmc_mle(&g, &fc, &Rayon).unwrap_or_else(|e| panic!("{e:?} {:?} {t_obs:?} {exact:?}", g.edges()));
        all_converged &= fit.converged;
        let d = fit.theta.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_theta = worst_theta.max(d);

        // ℓ(θ̂) − ℓ(θ0) by importance sampling at the MPLE, against enumeration
        let theta0 = fit.mple.clone();
        let chain = ChainConfig::tnt(6, 50_000 / 4, 200 + graphs);
        let batch = run_chains(&theta0, 6, 2, &s, &chain, 4, &Rayon).unwrap();
        let est = ImportanceLoglik::from_batch(&theta0, &batch, &t_obs).unwrap().value(&exact);
        let truth = ens.log_likelihood(&exact, &t_obs).unwrap() - ens.log_likelihood(&theta0, &t_obs).unwrap();
        worst_ll = worst_ll.max((est - truth).abs());
        graphs += 1;
    }
    let pass = all_converged && worst_theta <= 0.05 && worst_ll <= 0.05;
    line(
        5,
        pass,
        format!("10 graphs (6,2) B=50000: max |θ−θ_exact| {worst_theta:.4}, max loglik error {worst_ll:.4}, converged {all_converged}"),
    )
}

fn fit_fixture(g: &Graph, k: usize, samples: usize, seed: u64) -> dergm_core::estimation::FitResult {
    let mut fc = FitConfig::new(StatisticSet::edge_triangle(), KPolicy::Fixed(k), seed);
    fc.samples = samples;
    mcmc_mle(g, &fc, &Rayon).unwrap()
}

fn c6_florentine() -> Line {
    let g = fixtures::florentine().graph;
    let mut ok = 0;
    let mut parts = Vec::new();
    for seed in 1..=5 {
        let f = fit_fixture(&g, 2, 100_000, seed);
        let pass = f.converged
            && f.k == 2
            && (f.theta[0] + 1.672).abs() <= 0.15
            && (f.theta[1] - 0.410).abs() <= 0.5
            && (f.log_likelihood + 53.893).abs() <= 0.5
            && (f.aic - 111.786).abs() <= 1.0;
        ok += pass as usize;
        parts.push(format!("({:.3}, {:.3}) ll {:.2} aic {:.2}", f.theta[0], f.theta[1], f.log_likelihood, f.aic));
    }
    line(6, ok == 5, format!("{ok}/5 seeds within tolerance: {}", parts.join("; ")))
}

fn c7_sampson() -> Line {
    let g = fixtures::sampson().graph;
    let f = fit_fixture(&g, 3, 50_000, 7);
    let edges_ok = (f.theta[0] + 1.62).abs() <= 0.2;
    let tri_ok = (f.theta[1] - 0.36).abs() <= 0.3;
    line(
        7,
        f.converged && edges_ok && tri_ok,
        format!(
            "k=3 fit ({:.3}, {:.3}), converged {}; edges within 0.2 of -1.62: {edges_ok}, triangle within 0.3 of 0.36: {tri_ok}",
            f.theta[0], f.theta[1], f.converged
        ),
    )
}

fn c8_polytope() -> Line {
    let tri = compute_stats(&fixtures::sampson().graph, &StatisticSet::edge_triangle()).0[1];
    let mut hits = [0; 2];
    for seed in 1..=5 {
        for (slot, k, want) in [(0, 3, Location::Interior), (1, 6, Location::Exterior)] {
            let cfg = SamplerConfig::new(18, k, seed, Strategy::WellOrdered).unwrap();
            let p = polytope_estimate(&cfg, 100_000, Some((41.0, tri)), &Rayon).unwrap();
            hits[slot] += (p.probe == Some(want)) as usize;
        }
    }
    line(
        8,
        hits == [5, 5],
        format!("Sampson (41, {tri}) interior at k=3 in {}/5 seeds, exterior at k=6 in {}/5", hits[0], hits[1]),
    )
}

fn c9_flatness() -> Line {
    let g = fixtures::sampson().graph;
    let s = StatisticSet::edge_triangle();
    let flat = |k: usize| {
        let cfg = SamplerConfig::new(18, k, 9, Strategy::WellOrdered).unwrap();
        let (x, y) = (AxisSpec::new(-3.0, 0.0, 31).unwrap(), AxisSpec::new(-1.0, 2.0, 31).unwrap());
        let surf = likelihood_surface(&g, &cfg, &s, x, y, 25_000, &Rayon).unwrap();
        curvature_at_max(&surf).unwrap().2.flattest()
    };
    let (a, b) = (flat(3), flat(17));
    line(9, a > b, format!("smallest curvature magnitude at the maximum: k=3 {a:.4e}, k=17 {b:.4e}"))
}

fn c10_threshold() -> Line {
    let mut bad = Vec::new();
    let mut slowest = 0.0f64;
    for n in [50, 100, 500] {
        for k in [2, 5, 10] {
            let t = Instant::now();
            let r = stratified_threshold(n, k);
            slowest = slowest.max(t.elapsed().as_secs_f64());
            match r {
                Ok(r) if r.t_estimated.is_finite() && r.t_estimated <= 0.0 => {}
                other => bad.push(format!("({n},{k}): {other:?}")),
            }
        }
    }
    line(10, bad.is_empty() && slowest < 5.0, format!("9 cells finite and <= 0, slowest {slowest:.3}s {bad:?}"))
}

fn c11_performance() -> Line {
    let cfg = SamplerConfig::new(3000, 2, 11, Strategy::WellOrdered).unwrap();
    let t = Instant::now();
    let g = sample_well_ordered(&cfg, &mut draw_rng(11, 0)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    line(11, secs < 4.0 && g.is_well_ordered(2), format!("(3000,2) single draw {secs:.4}s, {} edges", g.edge_count()))
}

fn random_graph<R: Rng>(rng: &mut R, max_n: usize) -> Graph {
    let n = rng.gen_range(2..=max_n);
    let p: f64 = rng.gen();
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

fn c12_properties() -> Line {
    let per_family = 2_500;
    let mut rng = draw_rng(12, 0);
    let all = StatisticSet::parse("edges,triangles,twostars").unwrap();
    let mut failures = [0usize; 4];

    for _ in 0..per_family {
        let g = random_graph(&mut rng, 12);
        let (u, v) = {
            let u = rng.gen_range(0..g.n());
            let mut v = rng.gen_range(0..g.n() - 1);
            v += (v >= u) as usize;
            (u, v)
        };
        let before = compute_stats(&g, &all).0;
        let delta = change_stats(&g, u, v, &all).unwrap();
        let mut h = g.clone();
        h.toggle_edge(u, v).unwrap();
        let after = compute_stats(&h, &all).0;
        if before.iter().zip(&delta).zip(&after).any(|((b, d), a)| b + d != *a) {
            failures[0] += 1;
        }
    }

    for _ in 0..per_family {
        let g = random_graph(&mut rng, 14);
        let mut perm: Vec<usize> = (0..g.n()).collect();
        perm.shuffle(&mut rng);
        let (a, b) = (degeneracy(&g), degeneracy(&g.relabeled(&perm).unwrap()));
        let mut ca = a.core_numbers.clone();
        let mut cb: Vec<usize> = perm.iter().map(|&p| b.core_numbers[p]).collect();
        ca.sort_unstable();
        cb.sort_unstable();
        if a.k != b.k || ca != cb {
            failures[1] += 1;
        }
    }

    for _ in 0..per_family {
        let d = 2;
        let b = rng.gen_range(5..60);
        let sampled: Vec<f64> = (0..b * d).map(|_| rng.gen_range(0..30) as f64).collect();
        let t_obs = [rng.gen_range(0..30) as f64, rng.gen_range(0..30) as f64];
        let theta0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let f = ImportanceLoglik::new(&theta0, &sampled, &t_obs).unwrap();
        let th = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let e = f.eval(&th);
        let h = 1e-5;
        let mut bad = false;
        for i in 0..d {
            let (mut p, mut m) = (th, th);
            p[i] += h;
            m[i] -= h;
            let fd = (f.value(&p) - f.value(&m)) / (2.0 * h);
            bad |= (fd - e.gradient[i]).abs() > 1e-4 * (1.0 + fd.abs());
        }
        // negative semidefinite Hessian
        let (a, c, bb) = (e.hessian[0], e.hessian[3], e.hessian[1]);
        let tol = 1e-9 * (1.0 + a.abs() + c.abs());
        bad |= a > tol || c > tol || a * c - bb * bb < -tol * (1.0 + a.abs() + c.abs());
        // midpoint concavity
        let th2 = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let mid = [(th[0] + th2[0]) / 2.0, (th[1] + th2[1]) / 2.0];
        bad |= f.value(&mid) + 1e-9 < (f.value(&th) + f.value(&th2)) / 2.0;
        failures[2] += bad as usize;
    }

    let strategies = [Strategy::WellOrdered, Strategy::WellOrderedPermuted, Strategy::Stratified];
    for i in 0..per_family {
        let n = rng.gen_range(4..40);
        let k = rng.gen_range(1..6.min(n - 1));
        let g = if i % 4 == 3 {
            sample_non_well_ordered(n, k, &mut rng).unwrap()
        } else {
            let cfg = SamplerConfig::new(n, k, i as u64, strategies[i % 4]).unwrap();
            sample_batch(&cfg, 1).unwrap().remove(0)
        };
        if g.n() != n || degeneracy(&g).k > k {
            failures[3] += 1;
        }
    }

    let total = 4 * per_family;
    line(
        12,
        failures == [0; 4],
        format!(
            "{total} randomized cases; failures: change stats {}, relabeling {}, loglik concavity/gradient {}, support {}",
            failures[0], failures[1], failures[2], failures[3]
        ),
    )
}

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, fn() -> Line); 12] = [
        (1, c1_enumeration),
        (2, c2_bounds),
        (3, c3_uniformity),
        (4, c4_model_sampler),
        (5, c5_oracle),
        (6, c6_florentine),
        (7, c7_sampson),
        (8, c8_polytope),
        (9, c9_flatness),
        (10, c10_threshold),
        (11, c11_performance),
        (12, c12_properties),
    ];
    let lines: Vec<Line> =
        criteria.iter().filter(|(id, _)| only.is_empty() || only.contains(id)).map(|(_, f)| f()).collect();
    let passed = lines.iter().filter(|l| l.pass).count();
    let unexpected: Vec<&Line> = lines.iter().filter(|l| !l.pass && !KNOWN_FAILURES.contains(&l.id)).collect();
    println!("acceptance: {passed}/{} criteria pass", lines.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        for l in unexpected {
            eprintln!("unexpected failure, criterion {}: {}", l.id, l.detail);
        }
        ExitCode::FAILURE
    }
}
