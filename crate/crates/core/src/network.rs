//! Finite marked multigraphs and rooted truncations of them.

use crate::error::{Error, Result};
use crate::mark::Mark;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

/// Validity radius of a rooted network: `None` means the stored network is
/// the whole (finite) component, `Some(r)` that it is the radius-`r` ball of
/// a possibly larger object.
pub type Radius = Option<u32>;

/// An undirected edge with one mark at each endpoint. `(u, v, mu, mv)` and
/// `(v, u, mv, mu)` describe the same edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    #[serde(default)]
    pub mu: Mark,
    #[serde(default)]
    pub mv: Mark,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }

    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }
}

/// One end of an edge as seen from the vertex it is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Half {
    pub to: usize,
    pub edge: usize,
    /// True when the owning vertex is the edge's `u` end.
    pub at_u: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Network {
    marks: Vec<Mark>,
    edges: Vec<Edge>,
    adj: Vec<Vec<Half>>,
}

impl Network {
    /// `n` vertices with empty marks and no edges.
    pub fn new(n: usize) -> Self {
        Network { marks: vec![Mark::empty(); n], edges: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn with_marks(marks: Vec<Mark>) -> Self {
        let n = marks.len();
        Network { marks, edges: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Network::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn add_vertex(&mut self, mark: Mark) -> usize {
        self.marks.push(mark);
        self.adj.push(Vec::new());
        self.marks.len() - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> usize {
        self.add_marked_edge(u, v, Mark::empty(), Mark::empty())
    }

    /// Adds an edge and returns its index. Panics on an invalid endpoint.
    pub fn add_marked_edge(&mut self, u: usize, v: usize, mu: Mark, mv: Mark) -> usize {
        assert!(u < self.marks.len() && v < self.marks.len(), "edge endpoint out of range");
        let e = self.edges.len();
        self.edges.push(Edge { u, v, mu, mv });
        self.adj[u].push(Half { to: v, edge: e, at_u: true });
        self.adj[v].push(Half { to: u, edge: e, at_u: false });
        e
    }

    pub fn vertex_count(&self) -> usize {
        self.marks.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn mark(&self, v: usize) -> &Mark {
        &self.marks[v]
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn set_mark(&mut self, v: usize, mark: Mark) {
        self.marks[v] = mark;
    }

    /// Half-edges at `v`; a loop appears twice.
    pub fn halves(&self, v: usize) -> &[Half] {
        &self.adj[v]
    }

    /// Degree with loops counted twice.
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mark_here(&self, h: &Half) -> &Mark {
        let e = &self.edges[h.edge];
        if h.at_u {
            &e.mu
        } else {
            &e.mv
        }
    }

    pub fn mark_there(&self, h: &Half) -> &Mark {
        let e = &self.edges[h.edge];
        if h.at_u {
            &e.mv
        } else {
            &e.mu
        }
    }

    /// Number of edges joining `x` and `y` (a loop at `x` counts once).
    pub fn multiplicity(&self, x: usize, y: usize) -> usize {
        let n = self.adj[x].iter().filter(|h| h.to == y).count();
        if x == y {
            n / 2
        } else {
            n
        }
    }

    pub fn distances_from(&self, src: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap();
            for h in &self.adj[x] {
                if dist[h.to].is_none() {
                    dist[h.to] = Some(d + 1);
                    queue.push_back(h.to);
                }
            }
        }
        dist
    }

    /// Component index per vertex, numbered in order of first vertex.
    pub fn components(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for h in &self.adj[x] {
                    if comp[h.to] == usize::MAX {
                        comp[h.to] = next;
                        stack.push(h.to);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() > 0 && self.components().iter().all(|&c| c == 0)
    }

    /// Induced subnetwork on `vertices` (in the given order). Returns the
    /// subnetwork and, per old vertex, its new index if kept.
    pub fn induced(&self, vertices: &[usize]) -> (Network, Vec<Option<usize>>) {
        let mut map = vec![None; self.vertex_count()];
        let mut sub = Network::with_marks(vertices.iter().map(|&v| self.marks[v].clone()).collect());
        for (i, &v) in vertices.iter().enumerate() {
            map[v] = Some(i);
        }
        for e in &self.edges {
            if let (Some(a), Some(b)) = (map[e.u], map[e.v]) {
                sub.add_marked_edge(a, b, e.mu.clone(), e.mv.clone());
            }
        }
        (sub, map)
    }

    /// The radius-`r` ball around `v`, found by a local search so the cost
    /// does not depend on the size of the whole network. Also returns the
    /// old index of every ball vertex.
    pub fn local_ball(&self, v: usize, r: u32) -> (RootedNetwork, Vec<usize>) {
        let mut order = vec![v];
        let mut depth = HashMap::new();
        depth.insert(v, 0u32);
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            i += 1;
            let d = depth[&x];
            if d == r {
                continue;
            }
            for h in &self.adj[x] {
                if let Entry::Vacant(e) = depth.entry(h.to) {
                    e.insert(d + 1);
                    order.push(h.to);
                }
            }
        }
        let index: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut edges: Vec<usize> = order
            .iter()
            .flat_map(|&x| self.adj[x].iter().filter(|h| index.contains_key(&h.to)).map(|h| h.edge))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut sub = Network::with_marks(order.iter().map(|&x| self.marks[x].clone()).collect());
        for e in edges {
            let e = &self.edges[e];
            sub.add_marked_edge(index[&e.u], index[&e.v], e.mu.clone(), e.mv.clone());
        }
        (RootedNetwork { network: sub, root: 0, radius: Some(r) }, order)
    }

    /// Sub-network keeping every vertex and the selected edges.
    pub fn edge_subgraph(&self, keep: impl Fn(usize) -> bool) -> Network {
        let mut sub = Network::with_marks(self.marks.clone());
        for (i, e) in self.edges.iter().enumerate() {
            if keep(i) {
                sub.add_marked_edge(e.u, e.v, e.mu.clone(), e.mv.clone());
            }
        }
        sub
    }

    /// Relabels vertex `v` as `perm[v]`; `perm` must be a permutation.
    pub fn relabel(&self, perm: &[usize]) -> Network {
        let n = self.vertex_count();
        let mut marks = vec![Mark::empty(); n];
        for v in 0..n {
            marks[perm[v]] = self.marks[v].clone();
        }
        let mut g = Network::with_marks(marks);
        for e in &self.edges {
            g.add_marked_edge(perm[e.u], perm[e.v], e.mu.clone(), e.mv.clone());
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Network::from_edges(n, &edges)
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((n - 1, 0));
        Network::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Network::from_edges(n, &edges)
    }

    /// Star `K_{1,k}` with the center at vertex 0.
    pub fn star(k: usize) -> Self {
        let edges: Vec<_> = (1..=k).map(|i| (0, i)).collect();
        Network::from_edges(k + 1, &edges)
    }

    /// The `d`-regular tree truncated at `depth`, root 0, in BFS order.
    pub fn regular_tree(d: usize, depth: u32) -> Self {
        let mut g = Network::new(1);
        let mut frontier = vec![0];
        for level in 0..depth {
            let mut next = Vec::new();
            for &x in &frontier {
                let kids = if level == 0 { d } else { d - 1 };
                for _ in 0..kids {
                    let y = g.add_vertex(Mark::empty());
                    g.add_edge(x, y);
                    next.push(y);
                }
            }
            frontier = next;
        }
        g
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(NetworkJson::from_parts(self, None, None)).expect("serializable")
    }
}

/// A network together with a root and a validity radius. The stored network
/// is always the connected component of the root, and with `radius = Some(r)`
/// every vertex lies within distance `r` of the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedNetwork {
    network: Network,
    root: usize,
    radius: Radius,
}

impl RootedNetwork {
    /// Roots `network` at `root`, keeping only the root's component.
    pub fn new(network: Network, root: usize) -> Result<Self> {
        if root >= network.vertex_count() {
            return Err(Error::VertexOutOfRange(root));
        }
        let dist = network.distances_from(root);
        if dist.iter().all(Option::is_some) {
            return Ok(RootedNetwork { network, root, radius: None });
        }
        let keep: Vec<usize> = (0..network.vertex_count()).filter(|&v| dist[v].is_some()).collect();
        let (sub, map) = network.induced(&keep);
        Ok(RootedNetwork { network: sub, root: map[root].unwrap(), radius: None })
    }

    /// Wraps a radius-`radius` ball. Fails when a vertex lies farther out or
    /// the network is not connected.
    pub fn truncated(network: Network, root: usize, radius: u32) -> Result<Self> {
        if root >= network.vertex_count() {
            return Err(Error::VertexOutOfRange(root));
        }
        let dist = network.distances_from(root);
        for d in &dist {
            match d {
                None => return Err(Error::Disconnected),
                Some(d) if *d > radius => {
                    return Err(Error::param("radius", format!("vertex at distance {d} > {radius}")))
                }
                _ => {}
            }
        }
        Ok(RootedNetwork { network, root, radius: Some(radius) })
    }

    pub(crate) fn from_parts_unchecked(network: Network, root: usize, radius: Radius) -> Self {
        RootedNetwork { network, root, radius }
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn into_network(self) -> Network {
        self.network
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn radius(&self) -> Radius {
        self.radius
    }

    pub fn vertex_count(&self) -> usize {
        self.network.vertex_count()
    }

    pub fn root_degree(&self) -> usize {
        self.network.degree(self.root)
    }

    pub fn distances(&self) -> Vec<u32> {
        self.network.distances_from(self.root).into_iter().map(|d| d.unwrap()).collect()
    }

    /// True when every neighbor of `v` is stored, i.e. `v` is strictly inside
    /// the validity radius.
    pub fn is_interior(&self, v: usize, dist: &[u32]) -> bool {
        self.radius.is_none_or(|r| dist[v] < r)
    }

    /// Induced subnetwork on vertices within distance `r` of the root, with
    /// validity radius `r`.
    pub fn ball(&self, r: u32) -> Result<RootedNetwork> {
        if let Some(valid) = self.radius {
            if r > valid {
                return Err(Error::RadiusExceedsValidity { requested: r, valid });
            }
        }
        let dist = self.network.distances_from(self.root);
        let keep: Vec<usize> = (0..self.vertex_count()).filter(|&v| dist[v].is_some_and(|d| d <= r)).collect();
        let (sub, map) = self.network.induced(&keep);
        Ok(RootedNetwork { network: sub, root: map[self.root].unwrap(), radius: Some(r) })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(NetworkJson::from_parts(&self.network, Some(self.root), Some(self.radius)))
            .expect("serializable")
    }
}

/// Wire format: `{"vertices":[{"mark":[..]}],"edges":[{"u","v","mu","mv"}],"root":i,"radius":R|null}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkJson {
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<usize>,
    #[serde(default)]
    pub radius: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexJson {
    #[serde(default)]
    pub mark: Mark,
}

impl NetworkJson {
    fn from_parts(g: &Network, root: Option<usize>, radius: Option<Radius>) -> Self {
        NetworkJson {
            vertices: g.marks.iter().map(|m| VertexJson { mark: m.clone() }).collect(),
            edges: g.edges.clone(),
            root,
            radius: radius.flatten(),
        }
    }

    pub fn to_network(&self) -> Result<Network> {
        let mut g = Network::with_marks(self.vertices.iter().map(|v| v.mark.clone()).collect());
        for (i, e) in self.edges.iter().enumerate() {
            if e.u >= g.vertex_count() || e.v >= g.vertex_count() {
                return Err(Error::Parse(format!("edges[{i}]: endpoint out of range")));
            }
            g.add_marked_edge(e.u, e.v, e.mu.clone(), e.mv.clone());
        }
        Ok(g)
    }

    pub fn to_rooted(&self) -> Result<RootedNetwork> {
        let g = self.to_network()?;
        let root = self.root.ok_or_else(|| Error::Parse("missing field `root`".into()))?;
        match self.radius {
            None => RootedNetwork::new(g, root),
            Some(r) => RootedNetwork::truncated(g, root, r),
        }
    }
}

impl Network {
    pub fn from_json_str(s: &str) -> Result<Network> {
        let j: NetworkJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        j.to_network()
    }
}
