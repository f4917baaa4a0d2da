use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng as _;
use std::collections::BTreeMap;
use std::sync::Arc;
use umtp::canon::individualized_form;
use umtp::forest::{edge_inclusion_oracle, random_connected, wilson_ust};
use umtp::gen::*;
use umtp::mark::Mark;
use umtp::mtp::{mtp_monte_carlo_test, stab_root_check, NeighborSplit};
use umtp::orbits::automorphism_orbits;
use umtp::perc::{cluster_sampler, pc_estimate};
use umtp::rng::{derive_seed, stream, Rng};
use umtp::stats::Estimate;
use umtp::walk::{canonical_environment, heat_kernel, speed_estimate, tree_speed_formula, WeightedOperator};
use umtp::{Network, RootedNetwork};

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn random_multigraph(n: usize, m: usize, rng: &mut Rng) -> Network {
    let mut g = Network::new(n);
    for _ in 0..m {
        g.add_edge(rng.random_range(0..n), rng.random_range(0..n));
    }
    g
}

/// Simple graphs with vertex marks from `0..colors`, one per isomorphism
/// class, grown by adding a vertex joined to every subset of the others.
fn catalog(max_n: usize, colors: i64) -> Vec<Vec<Network>> {
    let mut levels: Vec<Vec<Network>> = vec![vec![Network::new(0)]];
    for n in 1..=max_n {
        let mut seen = BTreeMap::new();
        for g in &levels[n - 1] {
            for c in 0..colors {
                for mask in 0u32..1 << (n - 1) {
                    let mut h = g.clone();
                    let v = h.add_vertex(Mark::int(c));
                    for u in 0..n - 1 {
                        if mask >> u & 1 == 1 {
                            h.add_edge(u, v);
                        }
                    }
                    let (key, _) = individualized_form(&h, &[]);
                    seen.entry(key).or_insert(h);
                }
            }
        }
        levels.push(seen.into_values().collect());
    }
    levels
}

#[test]
fn graph_catalog_has_known_sizes() {
    let sizes: Vec<usize> = catalog(6, 1).iter().map(Vec::len).collect();
    // unlabeled graphs on 0..=6 vertices
    assert_eq!(sizes, vec![1, 1, 2, 4, 11, 34, 156]);
}

#[test]
fn stabilizer_root_law_on_catalogs() {
    let plain = catalog(8, 1);
    assert_eq!(plain[7].len(), 1044);
    assert_eq!(plain[8].len(), 12346);
    let marked = catalog(5, 2);
    for g in plain.iter().chain(&marked).flatten().filter(|g| g.vertex_count() > 0) {
        let rep = stab_root_check(g).unwrap();
        assert!(rep.holds, "{g:?}");
        let orbits = automorphism_orbits(g).unwrap();
        for (o, s) in orbits.orbits.iter().zip(&orbits.stabilizer_order) {
            assert_eq!(o.len() as u128 * s, orbits.automorphism_count);
        }
    }
}

#[test]
fn samplers_are_deterministic() {
    let p = OffspringDistribution::new(vec![q(1, 5), q(3, 10), q(1, 2)]).unwrap();
    let samplers: Vec<Box<dyn RootedSampler>> = vec![
        Box::new(ugw_sampler(&p, 3).unwrap()),
        Box::new(agw_sampler(&p, 3).unwrap()),
        Box::new(canopy_sampler(3).unwrap()),
        Box::new(ConfigModelSampler { n: 40, offspring: p.clone() }),
        Box::new(uniform_root(Network::cycle(5)).unwrap()),
    ];
    for s in &samplers {
        for i in 0..20 {
            let a = serde_json::to_string(&s.draw(7, i).unwrap().to_json()).unwrap();
            let b = serde_json::to_string(&s.draw(7, i).unwrap().to_json()).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn ugw_degree_laws() {
    let laws =
        [vec![q(1, 5), q(3, 10), q(1, 2)], vec![q(1, 2), q(0, 1), q(1, 2)], vec![q(0, 1), q(1, 3), q(1, 3), q(1, 3)]];
    for (j, probs) in laws.into_iter().enumerate() {
        let p = OffspringDistribution::new(probs).unwrap();
        let exact = p.ugw_expected_degree().to_f64().unwrap();
        let s = ugw_sampler(&p, 1).unwrap();
        let degs: Vec<f64> = (0..100_000).map(|i| s.draw(j as u64, i).unwrap().root_degree() as f64).collect();
        let e = Estimate::from_samples(&degs);
        assert!(e.within(exact, 3.0), "law {j}: {e:?} vs {exact}");
    }
}

#[test]
fn config_degree_histogram() {
    let p = OffspringDistribution::new(vec![q(1, 5), q(3, 10), q(1, 2)]).unwrap();
    let r: Vec<f64> = p.config_ball_law().iter().map(|x| x.to_f64().unwrap()).collect();
    let mut counts = vec![0u64; r.len()];
    let mut total = 0u64;
    // independent graphs so the counts are close to multinomial
    for i in 0..400 {
        let g = config_model(250, &p, &mut stream(11, i)).unwrap();
        counts[g.degree(0)] += 1;
        total += 1;
    }
    for (k, &rk) in r.iter().enumerate() {
        let f = counts[k] as f64 / total as f64;
        let sd = (rk * (1.0 - rk) / total as f64).sqrt();
        assert!((f - rk).abs() <= 3.0 * sd.max(1e-12), "k = {k}: {f} vs {rk}");
    }
}

#[test]
fn canopy_levels() {
    let s = canopy_sampler(1).unwrap();
    let n = 100_000u64;
    let mut counts = [0u64; 6];
    for i in 0..n {
        let level = s.explore(12, i).unwrap().state(0) as usize;
        if level < 6 {
            counts[level] += 1;
        }
    }
    for (k, &c) in counts.iter().enumerate() {
        let p = 0.5f64.powi(k as i32 + 1);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c as f64 / n as f64 - p).abs() <= 3.0 * sd, "level {k}");
    }
}

#[test]
fn cover_keeps_root_degree() {
    let mut rng = stream(13, 0);
    for _ in 0..100 {
        let n = rng.random_range(1..=7);
        let g = random_multigraph(n, rng.random_range(0..=2 * n), &mut rng);
        let g = RootedNetwork::new(g, 0).unwrap();
        let cover = universal_cover(&g, 3).unwrap();
        assert_eq!(cover.root_degree(), g.root_degree());
    }
}

#[test]
fn environment_detailed_balance() {
    let mut rng = stream(14, 0);
    for _ in 0..100 {
        let n = rng.random_range(2..=10);
        let g = random_connected(n, rng.random_range(0..=n), &mut rng);
        let env = canonical_environment(&RootedNetwork::new(g, 0).unwrap()).unwrap();
        assert!(env.rows_stochastic && env.reversible);
        assert_eq!(env.nu.iter().cloned().sum::<BigRational>(), q(1, 1));
    }
}

#[test]
fn heat_kernel_semigroup() {
    let mut rng = stream(15, 0);
    for _ in 0..30 {
        let n = rng.random_range(2..=30);
        let g = random_multigraph(n, rng.random_range(0..=2 * n), &mut rng);
        let w: Vec<f64> = (0..g.edge_count()).map(|_| rng.random_range(0.1..3.0)).collect();
        let op = WeightedOperator::new(&g, &w).unwrap();
        let (s, t) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        let ps = heat_kernel(&op, s).unwrap();
        let pt = heat_kernel(&op, t).unwrap();
        let pst = heat_kernel(&op, s + t).unwrap();
        assert!((&pt - pt.transpose()).amax() <= 1e-12);
        assert!((&ps * &pt - &pst).amax() <= 1e-8);
    }
}

#[test]
fn regular_tree_speeds() {
    for k in [2usize, 3, 4] {
        let steps = 10_000;
        let s = ugw_sampler(&OffspringDistribution::delta(k), steps as u32).unwrap();
        let rep = speed_estimate(&s, steps, 400, 16 + k as u64).unwrap();
        let v = tree_speed_formula((k + 1) as f64).unwrap();
        assert!(rep.estimate.within(v, 3.0), "k = {k}: {:?} vs {v}", rep.estimate);
    }
}

#[test]
fn wilson_matches_kirchhoff_on_weighted_graphs() {
    let draws = 10_000u64;
    let mut comparisons = 0;
    let mut beyond = 0;
    let mut max_z = 0.0f64;
    for gi in 0..20u64 {
        let mut rng = stream(17, gi);
        let n = rng.random_range(2..=40);
        let g = random_connected(n, rng.random_range(0..=n), &mut rng);
        let w: Vec<f64> = (0..g.edge_count()).map(|_| rng.random_range(0.2..5.0)).collect();
        let oracle = edge_inclusion_oracle(&g, &w).unwrap();
        assert!((oracle.iter().sum::<f64>() - (n - 1) as f64).abs() < 1e-8);
        let mut counts = vec![0u64; g.edge_count()];
        let seed = derive_seed(18, gi);
        for i in 0..draws {
            let t = wilson_ust(&g, &w, &mut stream(seed, i)).unwrap();
            assert!(t.is_spanning_tree(&g));
            for &e in &t.edges {
                counts[e] += 1;
            }
        }
        for (e, &p) in oracle.iter().enumerate() {
            let f = counts[e] as f64 / draws as f64;
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            comparisons += 1;
            if sd < 1e-9 {
                assert!((f - p).abs() < 1e-9);
                continue;
            }
            let z = (f - p).abs() / sd;
            max_z = max_z.max(z);
            if z > 3.0 {
                beyond += 1;
            }
        }
    }
    // 3σ per edge: about 0.27% of comparisons may exceed by chance
    let allowed = 3 + (comparisons as f64 * 0.0027 * 2.0).ceil() as usize;
    assert!(beyond <= allowed && max_z < 5.0, "{beyond} of {comparisons} beyond 3σ, max z {max_z}");
}

#[test]
fn cluster_sampler_is_unimodular() {
    for p in [0.3, 0.6, 0.9] {
        let s = cluster_sampler(Arc::new(ugw_sampler(&OffspringDistribution::delta(2), 2).unwrap()), p).unwrap();
        let rep = mtp_monte_carlo_test(&s, &NeighborSplit, 10_000, 19, 5000).unwrap();
        assert!(!rep.rejects(0.01), "p = {p}: {rep:?}");
    }
}

#[test]
fn survival_curves_are_monotone() {
    let s = ugw_sampler(&OffspringDistribution::new(vec![q(1, 4), q(1, 4), q(1, 2)]).unwrap(), 6).unwrap();
    let grid = [0.2, 0.4, 0.5, 0.6, 0.8, 1.0];
    let est = pc_estimate(&s, 6, &grid, 2000, 20, 0.5).unwrap();
    for j in 0..grid.len() {
        for r in 1..=6 {
            if j > 0 {
                assert!(est.survival(j, r) >= est.survival(j - 1, r));
            }
            if r > 1 {
                assert!(est.survival(j, r) <= est.survival(j, r - 1));
            }
        }
    }
    assert!(est.to_csv().starts_with("p,R,survivals,draws\n"));
}
