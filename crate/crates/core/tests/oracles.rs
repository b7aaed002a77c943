use std::collections::HashMap;

use dergm_core::enumeration::{enumerate_all, graph_mask, ExactEnsemble};
use dergm_core::estimation::{mcmc_mle, FitConfig, KPolicy};
use dergm_core::geometry::*;
use dergm_core::mcmc::{Sequential, TntChain};
use dergm_core::samplers::*;
use dergm_core::*;
use num_bigint::BigUint;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_uniform(cfg: &SamplerConfig, targets: &[u64], draws: usize) -> (f64, f64) {
    let index: HashMap<u64, usize> = targets.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut counts = vec![0u64; targets.len()];
    for g in sample_batch(cfg, draws).unwrap() {
        counts[*index.get(&graph_mask(&g)).expect("draw outside target set")] += 1;
    }
    let e = draws as f64 / targets.len() as f64;
    let stat = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let crit = ChiSquared::new((targets.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    (stat, crit)
}

fn well_ordered_masks(n: usize, k: usize) -> Vec<u64> {
    enumerate_all(n).unwrap().filter(|g| g.is_well_ordered(k)).map(|g| graph_mask(&g)).collect()
}

#[test]
fn well_ordered_sampler_is_uniform() {
    for (n, k, cells) in [(4, 1, 24), (4, 2, 56), (5, 2, 616)] {
        let targets = well_ordered_masks(n, k);
        assert_eq!(targets.len(), cells);
        assert_eq!(count_well_ordered(n, k).unwrap().exact.unwrap(), BigUint::from(cells as u32));
        let cfg = SamplerConfig::new(n, k, 40 + n as u64, Strategy::WellOrdered).unwrap();
        let (stat, crit) = chi_square_uniform(&cfg, &targets, 200 * cells);
        assert!(stat < crit, "({n},{k}): {stat} >= {crit}");
    }
}

#[test]
fn rejection_sampler_is_uniform_on_support() {
    let targets: Vec<u64> =
        enumerate_all(5).unwrap().filter(|g| degeneracy(g).k <= 2).map(|g| graph_mask(&g)).collect();
    assert_eq!(targets.len(), 943);
    let cfg = SamplerConfig::new(5, 2, 9, Strategy::Rejection).unwrap();
    let (stat, crit) = chi_square_uniform(&cfg, &targets, 100 * 943);
    assert!(stat < crit, "{stat} >= {crit}");
}

#[test]
fn tnt_balances_pair_flows() {
    // n = 3, k = 1: every graph but the triangle
    let s = StatisticSet::edge_triangle();
    let theta = [0.7, 0.0];
    let mut chain = TntChain::new(Graph::empty(3), 1, &s, &theta).unwrap();
    let mut rng = draw_rng(5, 0);
    let steps = 2_000_000u64;
    let mut visits = HashMap::new();
    let mut flows: HashMap<(u64, u64), u64> = HashMap::new();
    let mut prev = graph_mask(chain.graph());
    for _ in 0..steps {
        chain.step(&mut rng);
        let cur = graph_mask(chain.graph());
        *visits.entry(cur).or_insert(0u64) += 1;
        if cur != prev {
            *flows.entry((prev, cur)).or_insert(0) += 1;
        }
        prev = cur;
    }
    assert!(!visits.contains_key(&0b111));
    let z: f64 = enumerate_all(3)
        .unwrap()
        .filter(|g| g.edge_count() < 3)
        .map(|g| (theta[0] * g.edge_count() as f64).exp())
        .sum();
    for (&m, &c) in &visits {
        let p = (theta[0] * m.count_ones() as f64).exp() / z;
        assert!((c as f64 / steps as f64 - p).abs() < 0.005, "{m:b}");
    }
    for (&(a, b), &f) in &flows {
        let back = flows.get(&(b, a)).copied().unwrap_or(0) as f64;
        assert!((f as f64 - back).abs() < 6.0 * (f as f64).sqrt() + 10.0, "{a:b} <-> {b:b}");
    }
}

#[test]
fn exact_partition_matches_brute_force_and_closed_form() {
    let s = StatisticSet::edge_triangle();
    let mut rng = draw_rng(1, 0);
    for _ in 0..5 {
        let theta = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let ens = ExactEnsemble::new(5, 2, &s).unwrap();
        let naive = enumerate_all(5)
            .unwrap()
            .filter(|g| degeneracy(g).k <= 2)
            .map(|g| compute_stats(&g, &s).dot(&theta).exp())
            .sum::<f64>()
            .ln();
        assert!((ens.log_partition(&theta).unwrap() - naive).abs() < 1e-10);
    }
    // no restriction at k = n - 1: an Erdős–Rényi normaliser
    let ens = ExactEnsemble::new(6, 5, &StatisticSet::edges_only()).unwrap();
    for a in [-2.0, -0.3, 0.0, 1.1] {
        let closed = 15.0 * (1.0 + f64::exp(a)).ln();
        assert!((ens.log_partition(&[a]).unwrap() - closed).abs() < 1e-10);
    }
}

fn big_d(n: usize, k: usize) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for r in 1..n {
        let mut row = BigUint::from(0u32);
        let mut binom = BigUint::from(1u32);
        for i in 0..=r.min(k) {
            if i > 0 {
                binom = binom * BigUint::from((r - i + 1) as u64) / BigUint::from(i as u64);
            }
            row += &binom;
        }
        acc *= row;
    }
    acc
}

fn big_binom(n: usize, r: usize) -> BigUint {
    if r > n {
        return BigUint::from(0u32);
    }
    (0..r).fold(BigUint::from(1u32), |a, i| a * BigUint::from((n - i) as u64) / BigUint::from((i + 1) as u64))
}

/// The bound with its bracket written out literally.
fn literal_bound(n: usize, k: usize) -> BigUint {
    let mut total = BigUint::from(0u32);
    for c in 1..=n - k - 1 {
        let m = k + c;
        let bracket = (BigUint::from(1u32) << (m * (m - 1) / 2)) - (big_d(m, m - 1) - big_d(m, k));
        for i in 1..=n - k - c {
            let small: BigUint = (1..=k).map(|p| big_binom(n - i, p)).sum();
            total += big_binom(n - i, m) * &bracket * big_d(i, k) * BigUint::from(i as u64) * small;
        }
    }
    total
}

#[test]
fn threshold_matches_literal_evaluation() {
    for n in 4..=12 {
        for k in 1..=n - 2 {
            let r = stratified_threshold(n, k).unwrap();
            let lit = literal_bound(n, k).to_string().parse::<f64>().unwrap().ln();
            assert!((r.log_upper_n2 - lit).abs() < 1e-9 * lit.abs().max(1.0), "({n},{k})");
            assert!((r.log_n1 - big_d(n, k).to_string().parse::<f64>().unwrap().ln()).abs() < 1e-9);
            assert!(r.t_estimated <= 0.0);
        }
    }
    assert_eq!(literal_bound(6, 4), BigUint::from(30720u32));
}

// The sum is not an upper bound on the non-well-ordered count everywhere:
// at n = 7 it falls short for k = 1 and k = 2.
#[test]
fn threshold_against_true_non_well_ordered_count() {
    let mut short = Vec::new();
    for n in 4..=7 {
        for k in 1..=n - 2 {
            let n2 = enumerate_all(n).unwrap().filter(|g| degeneracy(g).k <= k && !g.is_well_ordered(k)).count();
            if (n, k) == (6, 4) {
                assert_eq!(n2, 1023);
            }
            if literal_bound(n, k) < BigUint::from(n2) {
                short.push((n, k));
            }
        }
    }
    assert_eq!(short, vec![(7, 1), (7, 2)]);
}

#[test]
fn small_mcmc_mle_agrees_with_enumeration() {
    let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (1, 4)]).unwrap();
    let s = StatisticSet::edge_triangle();
    let exact = dergm_core::enumeration::exact_mle(&g, 2, &s).unwrap();
    let mut cfg = FitConfig::new(s, KPolicy::Fixed(2), 3);
    cfg.samples = 20_000;
    let fit = mcmc_mle(&g, &cfg, &Sequential).unwrap();
    assert!(fit.converged);
    for (a, b) in fit.theta.iter().zip(&exact) {
        assert!((a - b).abs() < 0.1, "{:?} vs {:?}", fit.theta, exact);
    }
    let ll = ExactEnsemble::new(6, 2, &StatisticSet::edge_triangle()).unwrap();
    let exact_ll = ll.log_likelihood(&fit.theta, &fit.t_obs).unwrap();
    assert!((fit.log_likelihood - exact_ll).abs() < 1e-9);
}

fn gift_wrap(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let d2 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    let start = *points.iter().min_by(|a, b| a.partial_cmp(b).unwrap()).unwrap();
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut next = points[0];
        for &p in points {
            if next == cur {
                next = p;
                continue;
            }
            let c = cross(cur, next, p);
            if c < 0.0 || (c == 0.0 && d2(cur, p) > d2(cur, next)) {
                next = p;
            }
        }
        if next == start {
            return hull;
        }
        hull.push(next);
        cur = next;
    }
}

fn winding_inside(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
    let mut wn = 0i32;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let side = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
        if a.1 <= p.1 {
            if b.1 > p.1 && side > 0.0 {
                wn += 1;
            }
        } else if b.1 <= p.1 && side < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}

#[test]
fn hull_and_location_match_reference() {
    let mut rng = draw_rng(12, 0);
    let pts: Vec<(f64, f64)> = (0..10_000).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let h = convex_hull_2d(&pts).unwrap();
    let mut reference = gift_wrap(&pts);
    let lowest = reference.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
    reference.rotate_left(lowest);
    assert_eq!(h.vertices, reference);
    for _ in 0..10_000 {
        let q = (rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2));
        match point_location(q, &h) {
            Location::Interior => assert!(winding_inside(q, &h.vertices)),
            Location::Exterior => assert!(!winding_inside(q, &h.vertices)),
            Location::Boundary => {}
        }
    }
}

#[test]
fn polytope_density_and_bounds() {
    let cfg = SamplerConfig::new(12, 3, 4, Strategy::WellOrdered).unwrap();
    let p = polytope_estimate(&cfg, 5_000, Some((-1.0, 0.0)), &Sequential).unwrap();
    assert_eq!(p.density.sum(), 5_000.0);
    assert_eq!(p.probe, Some(Location::Exterior));
    for &(e, t) in &p.hull.vertices {
        assert!(e <= dergm_core::graph::max_edges(12, 3).unwrap() as f64);
        assert!(t <= dergm_core::graph::max_triangles(12, 3).unwrap() as f64);
    }
    assert!(polytope_estimate(&cfg, 999, None, &Sequential).is_err());
}

#[test]
fn entropy_limits() {
    let base = EntropyConfig {
        n: 7,
        k: 6,
        stats: StatisticSet::edge_triangle(),
        theta_x: AxisSpec::new(-10.0, -10.0, 1).unwrap(),
        theta_y: AxisSpec::new(-10.0, -10.0, 1).unwrap(),
        samples: 2_000,
        bins: 10,
        seed: 8,
    };
    let cold = entropy_map(&base, &Sequential).unwrap();
    assert!(cold.points[0].entropy < 0.01);

    let flat = EntropyConfig {
        theta_x: AxisSpec::new(0.0, 0.0, 1).unwrap(),
        theta_y: AxisSpec::new(0.0, 0.0, 1).unwrap(),
        samples: 40_000,
        ..base
    };
    let m = entropy_map(&flat, &Sequential).unwrap();
    let mut hist: HashMap<(usize, u64), f64> = HashMap::new();
    for g in enumerate_all(7).unwrap() {
        let t = compute_stats(&g, &StatisticSet::edge_triangle()).0;
        *hist.entry((t[0] as usize, t[1] as u64)).or_insert(0.0) += 1.0;
    }
    let exact: f64 = hist.values().map(|c| c / 2_097_152.0).map(|p| -p * p.ln()).sum();
    assert!((m.points[0].entropy - exact).abs() < 0.05, "{} vs {exact}", m.points[0].entropy);
    assert_eq!(m.surface.missing(), 99);
    for (.., v) in m.surface.cells() {
        if let Some(v) = v {
            assert!(v >= 0.0 && v <= (hist.len() as f64).ln());
        }
    }
}

#[test]
fn likelihood_surface_peaks_near_exact_mle() {
    let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (1, 4)]).unwrap();
    let s = StatisticSet::edge_triangle();
    let exact = dergm_core::enumeration::exact_mle(&g, 2, &s).unwrap();
    let cfg = SamplerConfig::new(6, 2, 6, Strategy::Rejection).unwrap();
    let (x, y) = (AxisSpec::new(-2.0, 1.0, 31).unwrap(), AxisSpec::new(-1.5, 2.5, 41).unwrap());
    let mut surf = likelihood_surface(&g, &cfg, &s, x, y, 50_000, &Sequential).unwrap();
    let (i, j, _) = surf.argmax().unwrap();
    assert!((x.value(i) - exact[0]).abs() <= x.spacing() + 1e-9, "{} vs {}", x.value(i), exact[0]);
    assert!((y.value(j) - exact[1]).abs() <= y.spacing() + 1e-9, "{} vs {}", y.value(j), exact[1]);
    surf.shift(17.0);
    assert_eq!(surf.argmax().map(|a| (a.0, a.1)), Some((i, j)));
    // zero at the uniform reference
    let at_zero = likelihood_surface(
        &g,
        &cfg,
        &s,
        AxisSpec::new(0.0, 0.0, 1).unwrap(),
        AxisSpec::new(0.0, 0.0, 1).unwrap(),
        1_000,
        &Sequential,
    )
    .unwrap();
    assert_eq!(at_zero.get(0, 0), Some(0.0));
}
