use proptest::prelude::*;
use std::collections::BTreeSet;
use umtp::canon::canonical_key;
use umtp::forest::{fmsf_rule, invasion, kruskal, wmsf_rule, LabeledNetwork, SpanningSubgraph};
use umtp::mark::Mark;
use umtp::metric::rooted_distance;
use umtp::mtp::{verify_mtp_finite, AdjacentIndicator, KeyHashed, NeighborSplit};
use umtp::perc::{couple, monotonicity_check};
use umtp::walk::{degree_pair_matrix, is_symmetric};
use umtp::{Network, RootedNetwork};

/// Marked multigraphs on `1..=max_n` vertices, loops and parallel edges
/// allowed, marks from `{0, 1}`.
fn networks(max_n: usize, max_m: usize) -> impl Strategy<Value = Network> {
    (1..=max_n).prop_flat_map(move |n| {
        (prop::collection::vec(0i64..2, n), prop::collection::vec((0..n, 0..n, 0i64..2, 0i64..2), 0..=max_m)).prop_map(
            move |(marks, edges)| {
                let mut g = Network::with_marks(marks.into_iter().map(Mark::int).collect());
                for (u, v, a, b) in edges {
                    g.add_marked_edge(u, v, Mark::int(a), Mark::int(b));
                }
                g
            },
        )
    })
}

fn connected(max_n: usize, max_extra: usize) -> impl Strategy<Value = Network> {
    (1..=max_n).prop_flat_map(move |n| {
        (prop::collection::vec(any::<prop::sample::Index>(), n - 1), prop::collection::vec((0..n, 0..n), 0..=max_extra))
            .prop_map(move |(parents, extra)| {
                let mut g = Network::new(n);
                for (i, p) in parents.iter().enumerate() {
                    g.add_edge(i + 1, p.index(i + 1));
                }
                for (u, v) in extra {
                    g.add_edge(u, v);
                }
                g
            })
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// Brute-force rooted isomorphism of marked multigraphs.
fn isomorphic(a: &RootedNetwork, b: &RootedNetwork) -> bool {
    let (ga, gb) = (a.network(), b.network());
    let n = ga.vertex_count();
    if n != gb.vertex_count() || ga.edge_count() != gb.edge_count() {
        return false;
    }
    let edge_set = |g: &Network, map: &dyn Fn(usize) -> usize| {
        let mut es: Vec<_> = g
            .edges()
            .iter()
            .map(|e| {
                let x = (map(e.u), e.mu.clone());
                let y = (map(e.v), e.mv.clone());
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        es.sort();
        es
    };
    let target = edge_set(gb, &|v| v);
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| {
        p[a.root()] == b.root() && (0..n).all(|v| ga.mark(v) == gb.mark(p[v])) && edge_set(ga, &|v| p[v]) == target
    })
}

fn permutations(p: &mut Vec<usize>, k: usize, found: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if k == p.len() {
        return found(p);
    }
    for i in k..p.len() {
        p.swap(k, i);
        if permutations(p, k + 1, found) {
            p.swap(k, i);
            return true;
        }
        p.swap(k, i);
    }
    false
}

fn labeled(g: Network, labels: Vec<u64>) -> LabeledNetwork {
    // make labels distinct by their position, keeping the random order
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| (labels[i], i));
    let mut distinct = vec![0u64; labels.len()];
    for (rank, &i) in order.iter().enumerate() {
        distinct[i] = rank as u64 * 7 + 3;
    }
    LabeledNetwork::new(g, distinct).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn keys_ignore_vertex_order(g in networks(9, 14), seed in any::<u64>()) {
        let n = g.vertex_count();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let h = g.relabel(&perm);
        for root in 0..n {
            let a = canonical_key(&RootedNetwork::new(g.clone(), root).unwrap());
            let b = canonical_key(&RootedNetwork::new(h.clone(), perm[root]).unwrap());
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn keys_match_brute_force_isomorphism(a in networks(5, 6), b in networks(5, 6), ra in 0usize..5, rb in 0usize..5) {
        let a = RootedNetwork::new(a.clone(), ra % a.vertex_count()).unwrap();
        let b = RootedNetwork::new(b.clone(), rb % b.vertex_count()).unwrap();
        prop_assert_eq!(canonical_key(&a) == canonical_key(&b), isomorphic(&a, &b));
    }

    #[test]
    fn keys_of_relabeled_copies_match_brute_force(g in networks(6, 8), root in 0usize..6, perm in permutation(6)) {
        let n = g.vertex_count();
        let p: Vec<usize> = perm.iter().copied().filter(|&v| v < n).collect();
        let a = RootedNetwork::new(g.clone(), root % n).unwrap();
        let b = RootedNetwork::new(g.relabel(&p), p[root % n]).unwrap();
        prop_assert!(isomorphic(&a, &b));
        prop_assert_eq!(canonical_key(&a), canonical_key(&b));
    }

    #[test]
    fn nested_balls_agree(g in networks(10, 16), root in 0usize..10, big in 0u32..5, small in 0u32..5) {
        let (small, big) = (small.min(big), small.max(big));
        let g = RootedNetwork::new(g.clone(), root % g.vertex_count()).unwrap();
        let outer = g.ball(big).unwrap();
        prop_assert_eq!(canonical_key(&outer.ball(small).unwrap()), canonical_key(&g.ball(small).unwrap()));
    }

    #[test]
    fn distance_is_an_ultrametric(a in networks(6, 8), b in networks(6, 8), c in networks(6, 8)) {
        let a = RootedNetwork::new(a, 0).unwrap();
        let b = RootedNetwork::new(b, 0).unwrap();
        let c = RootedNetwork::new(c, 0).unwrap();
        let ab = rooted_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, rooted_distance(&b, &a).unwrap());
        prop_assert_eq!(rooted_distance(&a, &a).unwrap(), num_rational::Ratio::new(0, 1));
        prop_assert_eq!(ab == num_rational::Ratio::new(0, 1), canonical_key(&a) == canonical_key(&b));
        let bc = rooted_distance(&b, &c).unwrap();
        let ac = rooted_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab.max(bc));
    }

    #[test]
    fn exact_transport_balances(g in networks(8, 12), salt in any::<u64>(), radius in 1u32..3) {
        prop_assert!(verify_mtp_finite(&g, &NeighborSplit).unwrap().holds());
        prop_assert!(verify_mtp_finite(&g, &AdjacentIndicator).unwrap().holds());
        let f = KeyHashed { radius, salt, levels: 3 };
        prop_assert!(verify_mtp_finite(&g, &f).unwrap().holds());
    }

    #[test]
    fn msf_rules_agree(g in connected(20, 25), labels in prop::collection::vec(any::<u64>(), 45), start in any::<prop::sample::Index>()) {
        let m = g.edge_count();
        let n = g.vertex_count();
        let l = labeled(g, labels[..m].to_vec());
        let k = kruskal(&l);
        prop_assert!(k.is_spanning_tree(&l.network));
        prop_assert_eq!(&fmsf_rule(&l), &k);
        let inv = invasion(&l, start.index(n), None).unwrap();
        prop_assert_eq!(&SpanningSubgraph::new(n, inv.edges), &k);
        prop_assert_eq!(inv.vertices.len(), n);
    }

    #[test]
    fn wired_rule_only_deletes(g in connected(15, 15), labels in prop::collection::vec(any::<u64>(), 30), boundary in prop::collection::btree_set(0usize..15, 0..5)) {
        let m = g.edge_count();
        let n = g.vertex_count();
        let l = labeled(g, labels[..m].to_vec());
        let b: BTreeSet<usize> = boundary.into_iter().filter(|&v| v < n).collect();
        let w = wmsf_rule(&l, &b);
        let f = fmsf_rule(&l);
        prop_assert!(w.edges.iter().all(|e| f.contains(*e)));
        prop_assert!(w.is_acyclic(&l.network));
        if b.len() <= 1 {
            prop_assert_eq!(w, f);
        }
    }

    #[test]
    fn coupled_clusters_nest(g in networks(15, 25), seed in any::<u64>(), mut ps in prop::collection::vec(0.0f64..=1.0, 1..6), root in 0usize..15) {
        ps.sort_by(f64::total_cmp);
        let c = couple(&g, seed);
        prop_assert!(monotonicity_check(&c, root % g.vertex_count(), &ps).unwrap().nested());
    }

    #[test]
    fn degree_pair_matrix_is_symmetric(g in networks(10, 20)) {
        prop_assume!(g.edge_count() > 0);
        prop_assert!(is_symmetric(&degree_pair_matrix(&g).unwrap()));
    }
}
