//! Bernoulli bond percolation in the standard coupling.
//!
//! Every edge carries a 63-bit label `L`, uniform on `[0, 2^63)`. The edge
//! is open at parameter `p` iff `L < p · 2^63`, so `p = 0` opens nothing,
//! `p = 1` opens everything and open sets grow with `p` on fixed labels.

use crate::error::{Error, Result};
use crate::gen::{fork, require_radius, RootedSampler};
use crate::network::{Network, Radius, RootedNetwork};
use crate::rng::{stream, Rng};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub const LABEL_BITS: u32 = 63;

/// Threshold below which labels are open at `p`.
pub fn threshold(p: f64) -> u64 {
    if p >= 1.0 {
        1 << LABEL_BITS
    } else if p <= 0.0 {
        0
    } else {
        (p * (1u64 << LABEL_BITS) as f64) as u64
    }
}

pub fn random_label(rng: &mut Rng) -> u64 {
    rng.random::<u64>() >> (64 - LABEL_BITS)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledPercolation {
    pub network: Network,
    pub labels: Vec<u64>,
}

/// Labels every edge of `g` from `stream(seed, 0)`, in edge order.
pub fn couple(g: &Network, seed: u64) -> CoupledPercolation {
    couple_rng(g, &mut stream(seed, 0))
}

pub fn couple_rng(g: &Network, rng: &mut Rng) -> CoupledPercolation {
    let labels = (0..g.edge_count()).map(|_| random_label(rng)).collect();
    CoupledPercolation { network: g.clone(), labels }
}

impl CoupledPercolation {
    pub fn with_labels(network: Network, labels: Vec<u64>) -> Result<Self> {
        if labels.len() != network.edge_count() {
            return Err(Error::param("labels", "one label per edge"));
        }
        if let Some(e) = labels.iter().position(|&l| l >> LABEL_BITS != 0) {
            return Err(Error::InvalidWeight { edge: e, reason: "label exceeds 63 bits".into() });
        }
        Ok(CoupledPercolation { network, labels })
    }

    pub fn is_open(&self, e: usize, p: f64) -> bool {
        self.labels[e] < threshold(p)
    }

    /// Vertices of the open cluster of `root`, sorted.
    pub fn cluster(&self, root: usize, p: f64) -> Vec<usize> {
        let t = threshold(p);
        let mut seen = vec![false; self.network.vertex_count()];
        seen[root] = true;
        let mut stack = vec![root];
        let mut out = vec![root];
        while let Some(x) = stack.pop() {
            for h in self.network.halves(x) {
                if self.labels[h.edge] < t && !seen[h.to] {
                    seen[h.to] = true;
                    stack.push(h.to);
                    out.push(h.to);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Distinct neighbors of `x` joined to it by a closed edge.
    pub fn closed_neighbors(&self, x: usize, p: f64) -> usize {
        let t = threshold(p);
        let mut ys: Vec<usize> =
            self.network.halves(x).iter().filter(|h| self.labels[h.edge] >= t).map(|h| h.to).collect();
        ys.sort_unstable();
        ys.dedup();
        ys.len()
    }

    /// `b(v)`: the least, over paths from `root` to `v`, of the largest label
    /// on the path (`u64::MAX` if unreachable, 0 at the root). `v` is in the
    /// open cluster at `p` iff `b(v) < threshold(p)`.
    pub fn bottleneck(&self, root: usize) -> Vec<u64> {
        let n = self.network.vertex_count();
        let mut best = vec![u64::MAX; n];
        let mut done = vec![false; n];
        best[root] = 0;
        let mut heap = BinaryHeap::from([Reverse((0u64, root))]);
        while let Some(Reverse((b, x))) = heap.pop() {
            if done[x] {
                continue;
            }
            done[x] = true;
            for h in self.network.halves(x) {
                let nb = b.max(self.labels[h.edge]);
                if nb < best[h.to] {
                    best[h.to] = nb;
                    heap.push(Reverse((nb, h.to)));
                }
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterReport {
    pub p: f64,
    pub vertices: Vec<usize>,
    /// Largest graph distance from the root within the cluster.
    pub reach: u32,
    /// True when the cluster meets the truncation boundary, so its true
    /// extent is unknown.
    pub touches_boundary: bool,
}

impl ClusterReport {
    pub fn survives(&self, r: u32) -> bool {
        self.reach >= r
    }
}

pub fn cluster_of_root(c: &CoupledPercolation, g: &RootedNetwork, p: f64) -> ClusterReport {
    cluster_report(c, g.root(), g.radius(), p)
}

pub fn cluster_report(c: &CoupledPercolation, root: usize, radius: Radius, p: f64) -> ClusterReport {
    let vertices = c.cluster(root, p);
    let dist = c.network.distances_from(root);
    let reach = vertices.iter().map(|&v| dist[v].unwrap()).max().unwrap_or(0);
    let touches_boundary = radius.is_some_and(|r| reach >= r);
    ClusterReport { p, vertices, reach, touches_boundary }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub p_list: Vec<f64>,
    pub sizes: Vec<usize>,
    /// Index pairs `(i, i+1)` whose clusters fail to nest.
    pub violations: Vec<(usize, usize)>,
}

impl MonotonicityReport {
    pub fn nested(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `cluster(p_i) ⊆ cluster(p_{i+1})` along a sorted list.
pub fn monotonicity_check(c: &CoupledPercolation, root: usize, p_list: &[f64]) -> Result<MonotonicityReport> {
    if p_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("p_list", "must be sorted"));
    }
    let clusters: Vec<Vec<usize>> = p_list.iter().map(|&p| c.cluster(root, p)).collect();
    let violations = (1..clusters.len())
        .filter(|&i| !clusters[i - 1].iter().all(|v| clusters[i].binary_search(v).is_ok()))
        .map(|i| (i - 1, i))
        .collect();
    Ok(MonotonicityReport { p_list: p_list.to_vec(), sizes: clusters.iter().map(Vec::len).collect(), violations })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalRow {
    pub p: f64,
    pub radius: u32,
    pub survivals: u64,
    pub draws: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PcEstimate {
    pub radius: u32,
    pub draws: u64,
    /// Rows for every `p` in the grid and every radius `1..=radius`.
    pub rows: Vec<SurvivalRow>,
    /// Survival level at which the crossing is read: `level_fraction` times
    /// the survival at the largest grid point.
    pub level: f64,
    pub crossing: Option<f64>,
}

impl PcEstimate {
    pub fn survival(&self, p_index: usize, r: u32) -> f64 {
        let row = &self.rows[p_index * self.radius as usize + (r as usize - 1)];
        row.survivals as f64 / row.draws as f64
    }

    /// CSV with header `p,R,survivals,draws`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,R,survivals,draws\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.p, r.radius, r.survivals, r.draws));
        }
        out
    }
}

/// Least bottleneck over vertices at distance exactly `r`, for `r = 1..=R`.
/// The root cluster at `p` reaches distance `r` iff entry `r-1` is below
/// `threshold(p)`.
fn reach_thresholds(g: &RootedNetwork, radius: u32, c: &CoupledPercolation) -> Vec<u64> {
    let b = c.bottleneck(g.root());
    let dist = g.distances();
    let mut best = vec![u64::MAX; radius as usize];
    for v in 0..g.vertex_count() {
        let d = dist[v];
        if d >= 1 && d <= radius {
            best[d as usize - 1] = best[d as usize - 1].min(b[v]);
        }
    }
    best
}

/// Survival curves `P[root cluster reaches distance r]` with common labels
/// across the grid, and the grid crossing of `level_fraction · S(p_max, R)`.
pub fn pc_estimate(
    s: &dyn RootedSampler,
    radius: u32,
    p_grid: &[f64],
    m: usize,
    seed: u64,
    level_fraction: f64,
) -> Result<PcEstimate> {
    require_radius(s, radius)?;
    if radius == 0 || p_grid.is_empty() || p_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("p_grid", "need a nonempty increasing grid and radius >= 1"));
    }
    let per_draw: Vec<Vec<u64>> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let g = s.draw_rng(fork(&mut rng))?.ball(radius)?;
            let c = couple_rng(g.network(), &mut rng);
            Ok(reach_thresholds(&g, radius, &c))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &p in p_grid {
        let t = threshold(p);
        for r in 1..=radius {
            let survivals = per_draw.iter().filter(|b| b[r as usize - 1] < t).count() as u64;
            rows.push(SurvivalRow { p, radius: r, survivals, draws: m as u64 });
        }
    }
    let mut est = PcEstimate { radius, draws: m as u64, rows, level: 0.0, crossing: None };
    let curve: Vec<f64> = (0..p_grid.len()).map(|j| est.survival(j, radius)).collect();
    est.level = level_fraction * curve[curve.len() - 1];
    est.crossing = crossing(p_grid, &curve, est.level);
    Ok(est)
}

/// First upward crossing of `level` by a nondecreasing curve, linearly
/// interpolated.
pub fn crossing(p: &[f64], curve: &[f64], level: f64) -> Option<f64> {
    if curve.first().is_some_and(|&c| c >= level) {
        return p.first().copied();
    }
    (1..curve.len()).find(|&j| curve[j] >= level).map(|j| {
        let (a, b) = (curve[j - 1], curve[j]);
        if b == a {
            p[j]
        } else {
            p[j - 1] + (level - a) / (b - a) * (p[j] - p[j - 1])
        }
    })
}

/// The law of the open cluster of the root at parameter `p`.
pub struct ClusterSampler {
    inner: std::sync::Arc<dyn RootedSampler>,
    p: f64,
}

pub fn cluster_sampler(inner: std::sync::Arc<dyn RootedSampler>, p: f64) -> Result<ClusterSampler> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", "must lie in [0, 1]"));
    }
    Ok(ClusterSampler { inner, p })
}

impl RootedSampler for ClusterSampler {
    fn descriptor(&self) -> serde_json::Value {
        json!({"kind": "cluster", "p": self.p, "inner": self.inner.descriptor()})
    }

    /// Cluster distances dominate graph distances, so the inner radius
    /// carries over.
    fn truncation_radius(&self) -> Option<u32> {
        self.inner.truncation_radius()
    }

    fn draw_rng(&self, mut rng: Rng) -> Result<RootedNetwork> {
        let g = self.inner.draw_rng(fork(&mut rng))?;
        let c = couple_rng(g.network(), &mut rng);
        let open = g.network().edge_subgraph(|e| c.is_open(e, self.p));
        let cl = RootedNetwork::new(open, g.root())?;
        match g.radius() {
            None => Ok(cl),
            Some(r) => cl.ball(r),
        }
    }

    fn max_root_degree(&self) -> Option<usize> {
        self.inner.max_root_degree()
    }
}

/// Survival `1 − q_R` of a Binomial(`d`, `p`) branching process after `R`
/// generations, where the root has `root_children` children: the oracle for
/// trees whose vertices have `d` children below the root.
pub fn branching_survival(root_children: u32, d: u32, p: f64, generations: u32) -> f64 {
    // q_k: extinction within k generations of a subtree hanging below an open edge
    let mut q = 0.0f64;
    for _ in 1..generations {
        q = (1.0 - p + p * q).powi(d as i32);
    }
    1.0 - (1.0 - p + p * q).powi(root_children as i32)
}
