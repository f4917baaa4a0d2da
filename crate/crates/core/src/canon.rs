//! Canonical keys for rooted-isomorphism classes of finite networks.
//!
//! Two routes produce keys, selected by an isomorphism invariant so they
//! never mix within one class:
//!
//! * simple trees rooted at a single vertex use a recursive sorted encoding
//!   of the subtrees (linear-ish, no search);
//! * everything else uses colour refinement seeded with the individualized
//!   vertices, followed by a backtracking search over individualizations of
//!   the first non-singleton cell. The key is the minimum leaf certificate;
//!   automorphisms found along the way prune equivalent branches.
//!
//! Vertex and half-edge marks are replaced by their rank in the sorted table
//! of distinct marks. The table itself is part of the key, so equal keys
//! mean equal marks.

use crate::mark::Mark;
use crate::network::{Network, RootedNetwork};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        hex::decode(s).ok().map(CanonicalKey)
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", self.to_hex())
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for CanonicalKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CanonicalKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CanonicalKey::from_hex(&s).ok_or_else(|| serde::de::Error::custom("invalid hex key"))
    }
}

#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub key: CanonicalKey,
    /// The input relabeled canonically, rooted at 0.
    pub network: RootedNetwork,
    /// `labeling[v]` is the canonical index of input vertex `v`.
    pub labeling: Vec<usize>,
}

pub fn canonical_form(g: &RootedNetwork) -> CanonicalForm {
    let (key, labeling) = individualized_form(g.network(), &[g.root()]);
    let relabeled = g.network().relabel(&labeling);
    CanonicalForm { key, network: RootedNetwork::from_parts_unchecked(relabeled, 0, g.radius()), labeling }
}

pub fn canonical_key(g: &RootedNetwork) -> CanonicalKey {
    individualized_form(g.network(), &[g.root()]).0
}

/// Key of `g` with the vertices of `seq` individualized in order (so
/// `[x, y]` gives a doubly rooted key). `g` need not be connected.
/// Returns the key and the canonical labeling, which sends `seq[0]` to 0.
pub fn individualized_form(g: &Network, seq: &[usize]) -> (CanonicalKey, Vec<usize>) {
    let table = MarkTable::new(g);
    if seq.len() == 1 && is_simple_tree(g) {
        return tree_form(g, seq[0], &table);
    }
    general_form(g, seq, &table)
}

struct MarkTable {
    marks: Vec<Mark>,
    vertex: Vec<u32>,
    // (rank at u, rank at v) per edge
    edge: Vec<(u32, u32)>,
}

impl MarkTable {
    fn new(g: &Network) -> Self {
        let mut set: BTreeSet<&Mark> = g.marks().iter().collect();
        for e in g.edges() {
            set.insert(&e.mu);
            set.insert(&e.mv);
        }
        let marks: Vec<Mark> = set.into_iter().cloned().collect();
        let rank = |m: &Mark| marks.binary_search(m).unwrap() as u32;
        let vertex = g.marks().iter().map(rank).collect();
        let edge = g.edges().iter().map(|e| (rank(&e.mu), rank(&e.mv))).collect();
        MarkTable { marks, vertex, edge }
    }

    fn write(&self, out: &mut Vec<u8>) {
        put(out, self.marks.len() as u64);
        for m in &self.marks {
            put(out, m.0.len() as u64);
            for &x in &m.0 {
                put(out, ((x << 1) ^ (x >> 63)) as u64);
            }
        }
    }

    fn halves(&self, g: &Network, v: usize) -> impl Iterator<Item = (usize, u32, u32)> + '_ {
        let here: Vec<_> = g
            .halves(v)
            .iter()
            .map(|h| {
                let (a, b) = self.edge[h.edge];
                if h.at_u {
                    (h.to, a, b)
                } else {
                    (h.to, b, a)
                }
            })
            .collect();
        here.into_iter()
    }
}

fn put(out: &mut Vec<u8>, mut x: u64) {
    loop {
        let byte = (x & 0x7f) as u8;
        x >>= 7;
        if x == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn is_simple_tree(g: &Network) -> bool {
    g.vertex_count() > 0 && g.edge_count() + 1 == g.vertex_count() && g.is_connected()
}

const TREE_TAG: u64 = 1;
const GENERAL_TAG: u64 = 2;

fn tree_form(g: &Network, root: usize, table: &MarkTable) -> (CanonicalKey, Vec<usize>) {
    let n = g.vertex_count();
    // BFS order and parents, then encode bottom-up.
    let mut order = vec![root];
    let mut parent = vec![usize::MAX; n];
    let mut parent_marks = vec![(0u32, 0u32); n];
    parent[root] = root;
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        i += 1;
        for (y, mx, my) in table.halves(g, x) {
            if parent[y] == usize::MAX {
                parent[y] = x;
                parent_marks[y] = (mx, my);
                order.push(y);
            }
        }
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &v in order.iter().skip(1) {
        children[parent[v]].push(v);
    }
    let mut code: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &v in order.iter().rev() {
        let mut kids = std::mem::take(&mut children[v]);
        kids.sort_by(|&a, &b| child_item(a, &parent_marks, &code).cmp(&child_item(b, &parent_marks, &code)));
        let mut c = vec![table.vertex[v], kids.len() as u32];
        for &k in &kids {
            let (pm, cm) = parent_marks[k];
            c.push(pm);
            c.push(cm);
            c.push(code[k].len() as u32);
            c.extend_from_slice(&code[k]);
        }
        children[v] = kids;
        code[v] = c;
    }
    let mut labeling = vec![0; n];
    let mut bfs = vec![root];
    let mut j = 0;
    while j < bfs.len() {
        let x = bfs[j];
        labeling[x] = j;
        j += 1;
        bfs.extend_from_slice(&children[x]);
    }
    let mut out = Vec::new();
    put(&mut out, TREE_TAG);
    table.write(&mut out);
    put(&mut out, code[root].len() as u64);
    for &t in &code[root] {
        put(&mut out, t as u64);
    }
    (CanonicalKey(out), labeling)
}

fn child_item<'a>(k: usize, pm: &[(u32, u32)], code: &'a [Vec<u32>]) -> (u32, u32, &'a [u32]) {
    (pm[k].0, pm[k].1, &code[k])
}

struct Search<'a> {
    g: &'a Network,
    table: &'a MarkTable,
    best: Option<(Vec<u32>, Vec<usize>)>,
    automorphisms: Vec<Vec<usize>>,
}

fn general_form(g: &Network, seq: &[usize], table: &MarkTable) -> (CanonicalKey, Vec<usize>) {
    let n = g.vertex_count();
    let mut first = vec![u32::MAX; n];
    for (i, &v) in seq.iter().enumerate() {
        if first[v] == u32::MAX {
            first[v] = i as u32;
        }
    }
    let init: Vec<(u32, u32)> = (0..n).map(|v| (first[v], table.vertex[v])).collect();
    let colors = rank(&init);
    let mut search = Search { g, table, best: None, automorphisms: Vec::new() };
    search.explore(colors, &mut Vec::new());
    let (cert, labeling) = search.best.expect("search visits at least one leaf");
    let mut out = Vec::new();
    put(&mut out, GENERAL_TAG);
    table.write(&mut out);
    put(&mut out, seq.len() as u64);
    for &v in seq {
        put(&mut out, labeling[v] as u64);
    }
    for &t in &cert {
        put(&mut out, t as u64);
    }
    (CanonicalKey(out), labeling)
}

/// Dense ranks of the values in sorted order.
fn rank<T: Ord + Clone>(values: &[T]) -> Vec<u32> {
    let mut sorted: Vec<T> = values.to_vec();
    sorted.sort();
    sorted.dedup();
    values.iter().map(|v| sorted.binary_search(v).unwrap() as u32).collect()
}

fn cell_count(colors: &[u32]) -> usize {
    colors.iter().copied().max().map_or(0, |m| m as usize + 1)
}

impl Search<'_> {
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let n = colors.len();
        loop {
            let before = cell_count(&colors);
            let sigs: Vec<(u32, Vec<(u32, u32, u32)>)> = (0..n)
                .map(|v| {
                    let mut s: Vec<_> = self.table.halves(self.g, v).map(|(y, a, b)| (colors[y], a, b)).collect();
                    s.sort_unstable();
                    (colors[v], s)
                })
                .collect();
            colors = rank(&sigs);
            if cell_count(&colors) == before {
                return colors;
            }
        }
    }

    fn certificate(&self, labeling: &[usize]) -> Vec<u32> {
        let n = labeling.len();
        let mut inv = vec![0; n];
        for (v, &l) in labeling.iter().enumerate() {
            inv[l] = v;
        }
        let mut cert = Vec::with_capacity(1 + n + 4 * self.g.edge_count());
        cert.push(n as u32);
        cert.extend(inv.iter().map(|&v| self.table.vertex[v]));
        let mut edges: Vec<(u32, u32, u32, u32)> = self
            .g
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let (mu, mv) = self.table.edge[i];
                let a = (labeling[e.u] as u32, labeling[e.v] as u32, mu, mv);
                let b = (labeling[e.v] as u32, labeling[e.u] as u32, mv, mu);
                a.min(b)
            })
            .collect();
        edges.sort_unstable();
        cert.push(edges.len() as u32);
        for (a, b, c, d) in edges {
            cert.extend([a, b, c, d]);
        }
        cert
    }

    fn explore(&mut self, colors: Vec<u32>, path: &mut Vec<usize>) {
        let colors = self.refine(colors);
        let n = colors.len();
        if cell_count(&colors) == n {
            let labeling: Vec<usize> = colors.iter().map(|&c| c as usize).collect();
            let cert = self.certificate(&labeling);
            match &self.best {
                None => self.best = Some((cert, labeling)),
                Some((best, best_lab)) => match cert.cmp(best) {
                    std::cmp::Ordering::Less => self.best = Some((cert, labeling)),
                    std::cmp::Ordering::Equal => {
                        let mut inv = vec![0; n];
                        for (v, &l) in best_lab.iter().enumerate() {
                            inv[l] = v;
                        }
                        let gamma: Vec<usize> = (0..n).map(|v| inv[labeling[v]]).collect();
                        if gamma.iter().enumerate().any(|(i, &j)| i != j) {
                            self.automorphisms.push(gamma);
                        }
                    }
                    std::cmp::Ordering::Greater => {}
                },
            }
            return;
        }
        // First non-singleton cell.
        let mut size = vec![0usize; n];
        for &c in &colors {
            size[c as usize] += 1;
        }
        let target = (0..n).find(|&c| size[c] > 1).unwrap() as u32;
        let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == target).collect();
        let mut explored: Vec<usize> = Vec::new();
        for &v in &cell {
            if !explored.is_empty() && self.same_orbit(v, &explored, path) {
                continue;
            }
            explored.push(v);
            let split: Vec<(u32, bool)> = (0..n).map(|u| (colors[u], u != v)).collect();
            path.push(v);
            self.explore(rank(&split), path);
            path.pop();
        }
    }

    /// Whether `v` is in the orbit of an explored vertex under the group
    /// generated by known automorphisms fixing `path` pointwise.
    fn same_orbit(&self, v: usize, explored: &[usize], path: &[usize]) -> bool {
        let gens: Vec<&Vec<usize>> = self.automorphisms.iter().filter(|g| path.iter().all(|&p| g[p] == p)).collect();
        if gens.is_empty() {
            return false;
        }
        let n = self.g.vertex_count();
        let mut seen = vec![false; n];
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(x) = stack.pop() {
            if explored.contains(&x) {
                return true;
            }
            for g in &gens {
                let y = g[x];
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }
}
