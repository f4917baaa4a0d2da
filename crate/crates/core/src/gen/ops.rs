//! Operations producing new measures from old ones: Cartesian products,
//! edge replacement and universal covers.

use super::{fork, RootedSampler};
use crate::error::{Error, Result};
use crate::mark::Mark;
use crate::network::{Half, Network, RootedNetwork};
use crate::rng::Rng;
use rand::Rng as _;
use serde_json::json;
use std::sync::Arc;

fn product_vertex_mark(a: &Mark, b: &Mark) -> Mark {
    let mut v = Vec::with_capacity(1 + a.0.len() + b.0.len());
    v.push(a.0.len() as i64);
    v.extend_from_slice(&a.0);
    v.extend_from_slice(&b.0);
    Mark(v)
}

fn tagged(tag: i64, m: &Mark) -> Mark {
    let mut v = Vec::with_capacity(1 + m.0.len());
    v.push(tag);
    v.extend_from_slice(&m.0);
    Mark(v)
}

/// Cartesian product of two networks. Vertex `(x, y)` has index
/// `x * |V(b)| + y`; edges from the first factor carry mark prefix 0, from the
/// second prefix 1.
pub fn product_network(a: &Network, b: &Network) -> Network {
    let nb = b.vertex_count();
    let mut marks = Vec::with_capacity(a.vertex_count() * nb);
    for x in 0..a.vertex_count() {
        for y in 0..nb {
            marks.push(product_vertex_mark(a.mark(x), b.mark(y)));
        }
    }
    let mut g = Network::with_marks(marks);
    for e in a.edges() {
        for y in 0..nb {
            g.add_marked_edge(e.u * nb + y, e.v * nb + y, tagged(0, &e.mu), tagged(0, &e.mv));
        }
    }
    for x in 0..a.vertex_count() {
        for e in b.edges() {
            g.add_marked_edge(x * nb + e.u, x * nb + e.v, tagged(1, &e.mu), tagged(1, &e.mv));
        }
    }
    g
}

/// Product of two rooted networks, valid to the smaller of the two radii.
pub fn product_rooted(a: &RootedNetwork, b: &RootedNetwork) -> Result<RootedNetwork> {
    let g = product_network(a.network(), b.network());
    let root = a.root() * b.vertex_count() + b.root();
    match (a.radius(), b.radius()) {
        (None, None) => RootedNetwork::new(g, root),
        (ra, rb) => {
            let r = ra.unwrap_or(u32::MAX).min(rb.unwrap_or(u32::MAX));
            let full = RootedNetwork::from_parts_unchecked(g, root, None);
            full.ball(r)
        }
    }
}

/// Independent product `(G × H, (o, o'))` of two samplers.
pub struct CartesianProduct {
    a: Arc<dyn RootedSampler>,
    b: Arc<dyn RootedSampler>,
}

pub fn cartesian_product(a: Arc<dyn RootedSampler>, b: Arc<dyn RootedSampler>) -> CartesianProduct {
    CartesianProduct { a, b }
}

impl RootedSampler for CartesianProduct {
    fn descriptor(&self) -> serde_json::Value {
        json!({"kind": "product", "factors": [self.a.descriptor(), self.b.descriptor()]})
    }

    fn truncation_radius(&self) -> Option<u32> {
        match (self.a.truncation_radius(), self.b.truncation_radius()) {
            (None, None) => None,
            (ra, rb) => Some(ra.unwrap_or(u32::MAX).min(rb.unwrap_or(u32::MAX))),
        }
    }

    fn draw_rng(&self, mut rng: Rng) -> Result<RootedNetwork> {
        let ga = self.a.draw_rng(fork(&mut rng))?;
        let gb = self.b.draw_rng(fork(&mut rng))?;
        product_rooted(&ga, &gb)
    }

    fn max_root_degree(&self) -> Option<usize> {
        Some(self.a.max_root_degree()? + self.b.max_root_degree()?)
    }
}

/// A finite graph with an ordered pair of distinct distinguished vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPointed {
    pub network: Network,
    pub first: usize,
    pub second: usize,
}

impl TwoPointed {
    /// A path with `internal` vertices between the two ends.
    pub fn path(internal: usize) -> Self {
        let n = internal + 2;
        TwoPointed { network: Network::path(n), first: 0, second: n - 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.network.vertex_count();
        if self.first >= n || self.second >= n || self.first == self.second {
            return Err(Error::param("replacement", "distinguished vertices must be distinct and valid"));
        }
        Ok(())
    }

    pub fn internal_count(&self) -> usize {
        self.network.vertex_count() - 2
    }
}

/// Replacement rule keyed by the ordered pair of half-edge marks.
pub type Replacement = dyn Fn(&Mark, &Mark) -> TwoPointed + Send + Sync;

/// `H` with every edge `e = (u, v)` replaced by `L(mu, mv)`, tail `u` glued
/// to the first point. Original vertices keep their indices in `H`; also
/// returns, for every edge, the `H` indices of its internal vertices.
pub fn replace_edges(g: &Network, rule: &Replacement) -> Result<(Network, Vec<Vec<usize>>)> {
    let mut h = Network::with_marks(g.marks().to_vec());
    let mut internals = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        let piece = rule(&e.mu, &e.mv);
        piece.validate()?;
        let mut map = vec![usize::MAX; piece.network.vertex_count()];
        map[piece.first] = e.u;
        map[piece.second] = e.v;
        let mut inner = Vec::new();
        for (i, slot) in map.iter_mut().enumerate() {
            if *slot == usize::MAX {
                *slot = h.add_vertex(piece.network.mark(i).clone());
                inner.push(*slot);
            }
        }
        for pe in piece.network.edges() {
            h.add_marked_edge(map[pe.u], map[pe.v], pe.mu.clone(), pe.mv.clone());
        }
        internals.push(inner);
    }
    Ok((h, internals))
}

/// The slot list `z_1..z_A` at `o`: internal vertices of the pieces on the
/// half-edges at `o`, then `o` twice.
pub fn replacement_slots(g: &Network, o: usize, internals: &[Vec<usize>]) -> Vec<usize> {
    let mut z: Vec<usize> = g.halves(o).iter().flat_map(|h: &Half| internals[h.edge].iter().copied()).collect();
    z.push(o);
    z.push(o);
    z
}

/// Edge replacement: draws biased by `A(G, o)`, substitute each edge, re-root
/// at a uniform slot. Bias is realized by rejection against `max_bias`.
pub struct EdgeReplace {
    inner: Arc<dyn RootedSampler>,
    rule: Arc<Replacement>,
    max_bias: usize,
    label: String,
}

pub fn edge_replace(
    inner: Arc<dyn RootedSampler>,
    rule: Arc<Replacement>,
    max_bias: usize,
    label: impl Into<String>,
) -> Result<EdgeReplace> {
    if max_bias < 2 {
        return Err(Error::param("max_bias", "A(G, o) is at least 2"));
    }
    if inner.truncation_radius() == Some(0) {
        return Err(Error::TruncationTooSmall { have: 0, need: 1 });
    }
    Ok(EdgeReplace { inner, rule, max_bias, label: label.into() })
}

impl EdgeReplace {
    /// `A(G, o) = 2 + Σ_{e ∼ o} (|V(L(e))| − 2)`.
    pub fn bias(&self, g: &RootedNetwork) -> usize {
        let net = g.network();
        2 + net
            .halves(g.root())
            .iter()
            .map(|h| {
                let e = net.edge(h.edge);
                (self.rule)(&e.mu, &e.mv).internal_count()
            })
            .sum::<usize>()
    }
}

impl RootedSampler for EdgeReplace {
    fn descriptor(&self) -> serde_json::Value {
        json!({"kind": "edge-replace", "inner": self.inner.descriptor(), "rule": self.label, "max_bias": self.max_bias})
    }

    /// Pieces have distinct distinguished points, so distances only grow and
    /// the inner validity radius carries over.
    fn truncation_radius(&self) -> Option<u32> {
        self.inner.truncation_radius()
    }

    fn draw_rng(&self, mut rng: Rng) -> Result<RootedNetwork> {
        let g = loop {
            let g = self.inner.draw_rng(fork(&mut rng))?;
            let a = self.bias(&g);
            if a > self.max_bias {
                return Err(Error::BiasOverflow { value: a as u64, bound: self.max_bias as u64 });
            }
            if rng.random_range(0..self.max_bias) < a {
                break g;
            }
        };
        let (h, internals) = replace_edges(g.network(), &*self.rule)?;
        let slots = replacement_slots(g.network(), g.root(), &internals);
        let z = slots[rng.random_range(0..slots.len())];
        let full = RootedNetwork::from_parts_unchecked(h, z, None);
        match g.radius() {
            None => RootedNetwork::new(full.into_network(), z),
            Some(r) => full.ball(r),
        }
    }
}

/// Tree of non-backtracking paths from the root, to depth `r`. Vertex and
/// half-edge marks are lifted through the covering map.
pub fn universal_cover(g: &RootedNetwork, r: u32) -> Result<RootedNetwork> {
    if let Some(valid) = g.radius() {
        if r > valid {
            return Err(Error::RadiusExceedsValidity { requested: r, valid });
        }
    }
    let net = g.network();
    let mut t = Network::with_marks(vec![net.mark(g.root()).clone()]);
    // (base vertex, half-edge used to arrive, depth)
    let mut frontier: Vec<(usize, Option<Half>, usize)> = vec![(g.root(), None, 0)];
    for _ in 0..r {
        let mut next = Vec::new();
        for &(x, arrived, tx) in &frontier {
            for h in net.halves(x) {
                if let Some(a) = arrived {
                    // the half at `x` that undoes the arrival step
                    if h.edge == a.edge && h.at_u != a.at_u {
                        continue;
                    }
                }
                let ty = t.add_vertex(net.mark(h.to).clone());
                t.add_marked_edge(tx, ty, net.mark_here(h).clone(), net.mark_there(h).clone());
                next.push((h.to, Some(*h), ty));
            }
        }
        frontier = next;
    }
    RootedNetwork::truncated(t, 0, r)
}
