//! Uniform and minimal spanning trees and forests.
//!
//! Labels are 63-bit integers read as `label / 2^63`, the same encoding as
//! the percolation labels, so one label vector drives both.

use crate::error::{Error, Result};
use crate::gen::{fork, require_radius, RootedSampler};
use crate::mtp::EmpiricalBallDistribution;
use crate::network::{Network, RootedNetwork};
use crate::perc::random_label;
use crate::rng::{derive_seed, stream, Rng};
use crate::stats::Estimate;
use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet, VecDeque};

/// A set of edges of a parent network, stored as sorted edge indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanningSubgraph {
    pub vertex_count: usize,
    pub edges: Vec<usize>,
}

impl SpanningSubgraph {
    pub fn new(vertex_count: usize, mut edges: Vec<usize>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        SpanningSubgraph { vertex_count, edges }
    }

    pub fn contains(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    pub fn degree(&self, g: &Network, v: usize) -> usize {
        g.halves(v).iter().filter(|h| self.contains(h.edge)).count()
    }

    pub fn subnetwork(&self, g: &Network) -> Network {
        g.edge_subgraph(|e| self.contains(e))
    }

    pub fn is_acyclic(&self, g: &Network) -> bool {
        let mut uf = UnionFind::new(g.vertex_count());
        self.edges.iter().all(|&e| uf.union(g.edge(e).u, g.edge(e).v))
    }

    pub fn is_spanning_tree(&self, g: &Network) -> bool {
        self.edges.len() + 1 == g.vertex_count() && self.is_acyclic(g)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"vertex_count": self.vertex_count, "edges": self.edges})
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; false when they were already one.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// A network with pairwise distinct 63-bit edge labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledNetwork {
    pub network: Network,
    pub labels: Vec<u64>,
}

impl LabeledNetwork {
    pub fn new(network: Network, labels: Vec<u64>) -> Result<Self> {
        if labels.len() != network.edge_count() {
            return Err(Error::param("labels", "one label per edge"));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for &l in &labels {
            if l >> 63 != 0 {
                return Err(Error::param("labels", format!("{l} exceeds 63 bits")));
            }
            if !seen.insert(l) {
                return Err(Error::DuplicateLabel { label: l });
            }
        }
        Ok(LabeledNetwork { network, labels })
    }

    /// Independent uniform labels, redrawing any that collide.
    pub fn random(network: Network, rng: &mut Rng) -> Self {
        let mut seen = HashSet::with_capacity(network.edge_count());
        let labels = (0..network.edge_count())
            .map(|_| loop {
                let l = random_label(rng);
                if seen.insert(l) {
                    break l;
                }
            })
            .collect();
        LabeledNetwork { network, labels }
    }

    pub fn label_fraction(&self, e: usize) -> f64 {
        self.labels[e] as f64 / (1u64 << 63) as f64
    }

    /// CSV with header `edge,label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge,label\n");
        for (e, l) in self.labels.iter().enumerate() {
            out.push_str(&format!("{e},{l}\n"));
        }
        out
    }

    fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.labels.len()).collect();
        idx.sort_unstable_by_key(|&e| self.labels[e]);
        idx
    }
}

/// Uniform spanning tree weighted by `Π c(e)`, by loop-erased random walks
/// toward a tree grown from vertex 0. Loops never enter a tree and are
/// skipped by the walk.
pub fn wilson_ust(g: &Network, weights: &[f64], rng: &mut Rng) -> Result<SpanningSubgraph> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::EmptyNetwork);
    }
    if weights.len() != g.edge_count() {
        return Err(Error::param("weights", "one weight per edge"));
    }
    for (e, &c) in weights.iter().enumerate() {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidWeight { edge: e, reason: format!("{c} is not positive") });
        }
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    // cumulative weights per vertex over non-loop halves
    let choices: Vec<Vec<(f64, usize, usize)>> = (0..n)
        .map(|x| {
            let mut acc = 0.0;
            g.halves(x)
                .iter()
                .filter(|h| h.to != x)
                .map(|h| {
                    acc += weights[h.edge];
                    (acc, h.edge, h.to)
                })
                .collect()
        })
        .collect();
    let mut in_tree = vec![false; n];
    let mut next_edge = vec![usize::MAX; n];
    let mut next = vec![usize::MAX; n];
    in_tree[0] = true;
    let mut edges = Vec::with_capacity(n - 1);
    for start in 0..n {
        let mut x = start;
        while !in_tree[x] {
            let row = &choices[x];
            let u = rng.random::<f64>() * row.last().unwrap().0;
            let i = row.partition_point(|c| c.0 <= u).min(row.len() - 1);
            next_edge[x] = row[i].1;
            next[x] = row[i].2;
            x = next[x];
        }
        // the last exit from each vertex is the loop erasure
        let mut x = start;
        while !in_tree[x] {
            in_tree[x] = true;
            edges.push(next_edge[x]);
            x = next[x];
        }
    }
    Ok(SpanningSubgraph::new(n, edges))
}

pub fn wilson_unit(g: &Network, rng: &mut Rng) -> Result<SpanningSubgraph> {
    wilson_ust(g, &vec![1.0; g.edge_count()], rng)
}

/// `P[e ∈ UST] = c(e) R_eff(e)`, with effective resistances from
/// `L⁺ = (L + J/n)⁻¹ − J/n`. Loops get probability 0.
pub fn edge_inclusion_oracle(g: &Network, weights: &[f64]) -> Result<Vec<f64>> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::EmptyNetwork);
    }
    if weights.len() != g.edge_count() {
        return Err(Error::param("weights", "one weight per edge"));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let j = 1.0 / n as f64;
    let mut l = DMatrix::from_element(n, n, j);
    for (i, e) in g.edges().iter().enumerate() {
        if e.is_loop() {
            continue;
        }
        let c = weights[i];
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidWeight { edge: i, reason: format!("{c} is not positive") });
        }
        l[(e.u, e.u)] += c;
        l[(e.v, e.v)] += c;
        l[(e.u, e.v)] -= c;
        l[(e.v, e.u)] -= c;
    }
    let inv = l.try_inverse().ok_or(Error::Disconnected)?;
    Ok(g.edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if e.is_loop() {
                0.0
            } else {
                // the J/n correction cancels in the quadratic form
                weights[i] * (inv[(e.u, e.u)] + inv[(e.v, e.v)] - inv[(e.u, e.v)] - inv[(e.v, e.u)])
            }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct UstGraphStats {
    pub vertices: usize,
    pub draws: usize,
    pub degree: Estimate,
    pub exact_mean_degree: f64,
    pub balls: EmpiricalBallDistribution,
    /// Total variation of `balls` to the last graph's histogram.
    pub tv_to_last: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UstDegreeReport {
    pub radius: u32,
    pub graphs: Vec<UstGraphStats>,
}

/// For each graph, `m` Wilson draws with one uniform root per draw: the
/// root's tree degree against `2 − 2/n` and the root's radius-`r` ball in
/// the tree.
pub fn ust_degree_stats(graphs: &[Network], m: usize, r: u32, seed: u64) -> Result<UstDegreeReport> {
    let mut out = Vec::with_capacity(graphs.len());
    for (gi, g) in graphs.iter().enumerate() {
        let n = g.vertex_count();
        let s = derive_seed(seed, gi as u64);
        let draws: Vec<(f64, crate::canon::CanonicalKey)> = (0..m as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(s, i);
                let t = wilson_unit(g, &mut rng)?;
                let root = rng.random_range(0..n);
                let tree = t.subnetwork(g);
                let key = crate::canon::canonical_key(&tree.local_ball(root, r).0);
                Ok((t.degree(g, root) as f64, key))
            })
            .collect::<Result<_>>()?;
        let degrees: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let mut balls = EmpiricalBallDistribution::new(r);
        for (_, k) in draws {
            balls.add(k);
        }
        out.push(UstGraphStats {
            vertices: n,
            draws: m,
            degree: Estimate::from_samples(&degrees),
            exact_mean_degree: 2.0 - 2.0 / n as f64,
            balls,
            tv_to_last: 0.0,
        });
    }
    if let Some(last) = out.last().map(|g| g.balls.clone()) {
        for g in &mut out {
            g.tv_to_last = crate::mtp::tv_distance(&g.balls, &last)?;
        }
    }
    Ok(UstDegreeReport { radius: r, graphs: out })
}

/// Free rule: delete every edge whose label is the largest on some cycle,
/// i.e. whose endpoints are joined by a path of smaller labels.
pub fn fmsf_rule(l: &LabeledNetwork) -> SpanningSubgraph {
    let g = &l.network;
    let kept = (0..g.edge_count())
        .filter(|&e| {
            let edge = g.edge(e);
            !edge.is_loop() && !joined_below(l, edge.u, edge.v, l.labels[e])
        })
        .collect();
    SpanningSubgraph::new(g.vertex_count(), kept)
}

fn joined_below(l: &LabeledNetwork, u: usize, v: usize, bound: u64) -> bool {
    let g = &l.network;
    let mut seen = vec![false; g.vertex_count()];
    let mut queue = VecDeque::from([u]);
    seen[u] = true;
    while let Some(x) = queue.pop_front() {
        if x == v {
            return true;
        }
        for h in g.halves(x) {
            if l.labels[h.edge] < bound && !seen[h.to] {
                seen[h.to] = true;
                queue.push_back(h.to);
            }
        }
    }
    false
}

/// Kruskal's minimum spanning forest.
pub fn kruskal(l: &LabeledNetwork) -> SpanningSubgraph {
    let g = &l.network;
    let mut uf = UnionFind::new(g.vertex_count());
    let kept = l.order().into_iter().filter(|&e| uf.union(g.edge(e).u, g.edge(e).v)).collect();
    SpanningSubgraph::new(g.vertex_count(), kept)
}

/// Wired rule on a truncation: the free rule, then also delete each edge
/// whose two endpoints both reach `boundary` through smaller labels.
pub fn wmsf_rule(l: &LabeledNetwork, boundary: &BTreeSet<usize>) -> SpanningSubgraph {
    let g = &l.network;
    let mut uf = UnionFind::new(g.vertex_count());
    let mut wired = vec![false; g.vertex_count()];
    for &b in boundary {
        wired[b] = true;
    }
    let mut kept = Vec::new();
    for e in l.order() {
        let edge = g.edge(e);
        let (a, b) = (uf.find(edge.u), uf.find(edge.v));
        if a == b {
            continue;
        }
        let both = wired[a] && wired[b];
        uf.union(a, b);
        let c = uf.find(a);
        wired[c] = wired[a] || wired[b];
        if !both {
            kept.push(e);
        }
    }
    SpanningSubgraph::new(g.vertex_count(), kept)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InvasionTrace {
    /// Vertices in order of invasion, starting with the start vertex.
    pub vertices: Vec<usize>,
    /// Accepted edges in order.
    pub edges: Vec<usize>,
}

/// Invasion from `start`: repeatedly accept the smallest-label edge leaving
/// the invaded set. Stops after `steps` edges or when nothing is left.
pub fn invasion(l: &LabeledNetwork, start: usize, steps: Option<usize>) -> Result<InvasionTrace> {
    let g = &l.network;
    if start >= g.vertex_count() {
        return Err(Error::VertexOutOfRange(start));
    }
    let mut inside = vec![false; g.vertex_count()];
    let mut heap = BinaryHeap::new();
    let mut trace = InvasionTrace::default();
    let enter = |v: usize, inside: &mut Vec<bool>, heap: &mut BinaryHeap<_>, trace: &mut InvasionTrace| {
        inside[v] = true;
        trace.vertices.push(v);
        for h in g.halves(v) {
            if !inside[h.to] {
                heap.push(Reverse((l.labels[h.edge], h.edge, h.to)));
            }
        }
    };
    enter(start, &mut inside, &mut heap, &mut trace);
    let limit = steps.unwrap_or(usize::MAX);
    while trace.edges.len() < limit {
        let Some(Reverse((_, e, to))) = heap.pop() else { break };
        if inside[to] {
            continue;
        }
        trace.edges.push(e);
        enter(to, &mut inside, &mut heap, &mut trace);
    }
    Ok(trace)
}

#[derive(Clone, Debug, Serialize)]
pub struct MsfDegreeReport {
    pub radius: u32,
    pub draws: usize,
    pub degree: Estimate,
    pub balls: EmpiricalBallDistribution,
}

/// Wired rule on the radius-`radius` ball of each draw with the sphere as
/// boundary: mean root degree and the root's radius-`ball_radius` ball in
/// the forest.
pub fn msf_degree_stats(
    s: &dyn RootedSampler,
    radius: u32,
    ball_radius: u32,
    m: usize,
    seed: u64,
) -> Result<MsfDegreeReport> {
    require_radius(s, radius + 1)?;
    let draws: Vec<(f64, crate::canon::CanonicalKey)> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let g = s.draw_rng(fork(&mut rng))?;
            let ball = g.ball(radius)?;
            let root = ball.root();
            let dist = ball.distances();
            let boundary: BTreeSet<usize> = (0..ball.vertex_count()).filter(|&v| dist[v] == radius).collect();
            let net = ball.into_network();
            let l = LabeledNetwork::random(net, &mut rng);
            let f = wmsf_rule(&l, &boundary);
            let forest = f.subnetwork(&l.network);
            let key = crate::canon::canonical_key(&forest.local_ball(root, ball_radius).0);
            Ok((f.degree(&l.network, root) as f64, key))
        })
        .collect::<Result<_>>()?;
    let degrees: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut balls = EmpiricalBallDistribution::new(ball_radius);
    for (_, k) in draws {
        balls.add(k);
    }
    Ok(MsfDegreeReport { radius, draws: m, degree: Estimate::from_samples(&degrees), balls })
}

/// A connected multigraph on `n` vertices: a random tree (each vertex
/// attached to a uniform earlier one, then relabeled) plus `extra` uniform
/// edges, loops excluded.
pub fn random_connected(n: usize, extra: usize, rng: &mut Rng) -> Network {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut g = Network::new(n);
    for i in 1..n {
        let j = rng.random_range(0..i);
        g.add_edge(perm[i], perm[j]);
    }
    if n >= 2 {
        for _ in 0..extra {
            let u = rng.random_range(0..n);
            let mut v = rng.random_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            g.add_edge(u, v);
        }
    }
    g
}

/// Helper for rooted truncations: the sphere at the truncation radius.
pub fn truncation_sphere(g: &RootedNetwork) -> BTreeSet<usize> {
    match g.radius() {
        None => BTreeSet::new(),
        Some(r) => {
            let d = g.distances();
            (0..g.vertex_count()).filter(|&v| d[v] == r).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(n: usize, edges: &[(usize, usize)], labels: &[u64]) -> LabeledNetwork {
        LabeledNetwork::new(Network::from_edges(n, edges), labels.to_vec()).unwrap()
    }

    #[test]
    fn wilson_on_trees_and_paths() {
        let mut rng = stream(1, 0);
        let g = Network::regular_tree(3, 2);
        let t = wilson_unit(&g, &mut rng).unwrap();
        assert_eq!(t.edges, (0..g.edge_count()).collect::<Vec<_>>());
        let p = Network::path(6);
        assert_eq!(wilson_unit(&p, &mut rng).unwrap().edges.len(), 5);
        assert!(matches!(wilson_unit(&Network::new(2), &mut rng), Err(Error::Disconnected)));
    }

    #[test]
    fn wilson_triangle_is_uniform() {
        let g = Network::complete(3);
        let n = 10_000;
        let mut counts = [0usize; 3];
        for i in 0..n {
            let t = wilson_unit(&g, &mut stream(2, i)).unwrap();
            assert!(t.is_spanning_tree(&g));
            let missing = (0..3).find(|e| !t.contains(*e)).unwrap();
            counts[missing] += 1;
        }
        let se = (2.0 / 9.0 / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 3.0 * se, "{counts:?}");
        }
    }

    #[test]
    fn weighted_wilson_follows_products() {
        // triangle with weights (1, 1, 4): trees {0,1} w=1, {0,2} w=4, {1,2} w=4
        let g = Network::complete(3);
        let w = [1.0, 1.0, 4.0];
        let n = 20_000;
        let without2 = (0..n).filter(|&i| !wilson_ust(&g, &w, &mut stream(3, i)).unwrap().contains(2)).count();
        let p = 1.0 / 9.0;
        assert!((without2 as f64 / n as f64 - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        let o = edge_inclusion_oracle(&g, &w).unwrap();
        assert!((o[2] - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_examples() {
        let o = edge_inclusion_oracle(&Network::complete(3), &[1.0; 3]).unwrap();
        assert!(o.iter().all(|p| (p - 2.0 / 3.0).abs() < 1e-12));
        // two triangles joined by a bridge
        let g = Network::from_edges(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]);
        let o = edge_inclusion_oracle(&g, &[1.0; 7]).unwrap();
        assert!((o[3] - 1.0).abs() < 1e-12);
        assert!((o.iter().sum::<f64>() - 5.0).abs() < 1e-10);
        assert!(matches!(edge_inclusion_oracle(&Network::new(3), &[]), Err(Error::Disconnected)));
        let mut lp = Network::path(2);
        lp.add_edge(1, 1);
        assert_eq!(edge_inclusion_oracle(&lp, &[1.0, 1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn degree_stats_small() {
        let rep = ust_degree_stats(&[Network::path(2)], 50, 1, 4).unwrap();
        assert_eq!(rep.graphs[0].degree.mean, 1.0);
        assert_eq!(rep.graphs[0].degree.std_err, 0.0);
        assert_eq!(rep.graphs[0].tv_to_last, 0.0);
    }

    #[test]
    fn msf_rules() {
        let half = 1u64 << 62;
        let tri = labeled(3, &[(0, 1), (1, 2), (2, 0)], &[half / 5, half, half / 5 * 9]);
        assert_eq!(fmsf_rule(&tri).edges, vec![0, 1]);
        assert_eq!(kruskal(&tri).edges, vec![0, 1]);
        assert_eq!(wmsf_rule(&tri, &BTreeSet::new()), fmsf_rule(&tri));
        let tree = labeled(4, &[(0, 1), (1, 2), (1, 3)], &[3, 1, 2]);
        assert_eq!(fmsf_rule(&tree).edges, vec![0, 1, 2]);
        assert!(matches!(LabeledNetwork::new(Network::path(3), vec![5, 5]), Err(Error::DuplicateLabel { label: 5 })));
    }

    #[test]
    fn wired_rule_on_a_segment() {
        // 0-1-2-3-4 with the middle edge (1,2) labeled highest, boundary {0, 4}
        let l = labeled(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], &[1, 10, 2, 3]);
        let b: BTreeSet<usize> = [0, 4].into();
        assert_eq!(wmsf_rule(&l, &b).edges, vec![0, 2, 3]);
        // boundary only on one side: nothing removed
        let b: BTreeSet<usize> = [0].into();
        assert_eq!(wmsf_rule(&l, &b).edges, vec![0, 1, 2, 3]);
    }

    #[test]
    fn invasion_examples() {
        let l = labeled(4, &[(0, 1), (0, 2), (2, 3), (1, 3)], &[4, 2, 3, 1]);
        let one = invasion(&l, 0, Some(1)).unwrap();
        assert_eq!(one.edges, vec![1]);
        let a = invasion(&l, 0, None).unwrap();
        let b = invasion(&l, 3, None).unwrap();
        let sa = SpanningSubgraph::new(4, a.edges);
        assert_eq!(sa, SpanningSubgraph::new(4, b.edges));
        assert_eq!(sa, kruskal(&l));
    }

    fn line_wmsf_edges(r: usize) -> usize {
        let mut rng = stream(10, 0);
        let l = LabeledNetwork::random(Network::path(2 * r + 1), &mut rng);
        wmsf_rule(&l, &[0, 2 * r].into()).edges.len()
    }

    #[test]
    fn msf_on_the_line() {
        let s = crate::gen::line_sampler(8).unwrap();
        // the segment of 12 edges loses exactly its top edge, which is at
        // the root with probability 2/12
        let rep = msf_degree_stats(&s, 6, 1, 4000, 9).unwrap();
        assert!(rep.degree.within(2.0 - 1.0 / 6.0, 4.0), "{:?}", rep.degree);
        let full = line_wmsf_edges(6);
        assert_eq!(full, 11);
    }

    #[test]
    fn random_connected_is_connected() {
        let mut rng = stream(5, 0);
        for n in 1..20 {
            let g = random_connected(n, 2 * n, &mut rng);
            assert!(g.is_connected());
            assert_eq!(g.edge_count(), n - 1 + if n >= 2 { 2 * n } else { 0 });
        }
    }
}
