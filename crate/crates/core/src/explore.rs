//! Incremental views of rooted networks.
//!
//! An [`Explorer`] is what walks and ball extraction run on. It either wraps
//! a materialized truncation (and refuses to step off it) or grows a random
//! tree on demand from a [`TreeLaw`], so a walk of `10^4` steps on an
//! infinite tree only reveals the vertices it touches.

use crate::error::{Error, Result};
use crate::mark::Mark;
use crate::network::{Half, Network, RootedNetwork};
use crate::rng::Rng;
use std::sync::Arc;

/// Per-vertex data carried by a lazily grown tree.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Node {
    pub state: i64,
    pub mark: Mark,
}

impl Node {
    pub fn new(state: i64) -> Self {
        Node { state, mark: Mark::empty() }
    }
}

#[derive(Clone, Debug)]
pub struct Child {
    pub node: Node,
    /// Mark of the joining edge at the already-known vertex.
    pub mark_near: Mark,
    /// Mark of the joining edge at the new vertex.
    pub mark_far: Mark,
}

impl Child {
    pub fn plain(node: Node) -> Self {
        Child { node, mark_near: Mark::empty(), mark_far: Mark::empty() }
    }
}

/// A random rooted tree described by how each vertex reveals its remaining
/// neighbors the first time it is visited.
pub trait TreeLaw: Send + Sync {
    fn root(&self, rng: &mut Rng) -> Node;
    fn root_children(&self, root: &Node, rng: &mut Rng) -> Vec<Child>;
    /// Neighbors of `node` other than `parent`, the vertex it was reached from.
    fn children(&self, node: &Node, parent: &Node, rng: &mut Rng) -> Vec<Child>;
    /// Bound on every degree, when one exists.
    fn max_degree(&self) -> Option<usize>;
}

enum Source {
    Fixed,
    Lazy { law: Arc<dyn TreeLaw>, rng: Rng, nodes: Vec<Node>, parent: Vec<usize> },
}

pub struct Explorer {
    net: Network,
    dist: Vec<u32>,
    expanded: Vec<bool>,
    root: usize,
    source: Source,
}

impl Explorer {
    pub fn from_rooted(g: RootedNetwork) -> Self {
        let dist = g.distances();
        let radius = g.radius();
        let expanded = dist.iter().map(|&d| radius.is_none_or(|r| d < r)).collect();
        let root = g.root();
        Explorer { net: g.into_network(), dist, expanded, root, source: Source::Fixed }
    }

    /// Starts a lazily grown tree; `rng` drives all later growth.
    pub fn lazy(law: Arc<dyn TreeLaw>, mut rng: Rng) -> Self {
        let root_node = law.root(&mut rng);
        let mut net = Network::new(0);
        net.add_vertex(root_node.mark.clone());
        Explorer {
            net,
            dist: vec![0],
            expanded: vec![false],
            root: 0,
            source: Source::Lazy { law, rng, nodes: vec![root_node], parent: vec![usize::MAX] },
        }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn dist(&self, v: usize) -> u32 {
        self.dist[v]
    }

    pub fn is_lazy(&self) -> bool {
        matches!(self.source, Source::Lazy { .. })
    }

    /// State of a lazily grown vertex (0 for materialized networks).
    pub fn state(&self, v: usize) -> i64 {
        match &self.source {
            Source::Lazy { nodes, .. } => nodes[v].state,
            Source::Fixed => 0,
        }
    }

    /// Tree parent of `v` in a lazy tree.
    pub fn parent(&self, v: usize) -> Option<usize> {
        match &self.source {
            Source::Lazy { parent, .. } => Some(parent[v]).filter(|&p| p != usize::MAX),
            Source::Fixed => None,
        }
    }

    /// All half-edges at `v`. Fails at the truncation boundary.
    pub fn neighbors(&mut self, v: usize) -> Result<&[Half]> {
        self.expand(v)?;
        Ok(self.net.halves(v))
    }

    pub fn degree(&mut self, v: usize) -> Result<usize> {
        Ok(self.neighbors(v)?.len())
    }

    /// Half-edges revealed so far; complete unless `v` is on the boundary.
    pub fn known(&self, v: usize) -> &[Half] {
        self.net.halves(v)
    }

    fn expand(&mut self, v: usize) -> Result<()> {
        if self.expanded[v] {
            return Ok(());
        }
        match &mut self.source {
            Source::Fixed => Err(Error::TruncationEscape { vertex: v }),
            Source::Lazy { law, rng, nodes, parent } => {
                let kids = if v == self.root {
                    law.root_children(&nodes[v], rng)
                } else {
                    law.children(&nodes[v], &nodes[parent[v]], rng)
                };
                for c in kids {
                    let w = self.net.add_vertex(c.node.mark.clone());
                    self.net.add_marked_edge(v, w, c.mark_near, c.mark_far);
                    nodes.push(c.node);
                    parent.push(v);
                    self.dist.push(self.dist[v] + 1);
                    self.expanded.push(false);
                }
                self.expanded[v] = true;
                Ok(())
            }
        }
    }

    /// The radius-`r` ball around `center`, rooted there. Vertices strictly
    /// inside the ball must be fully revealed; the outer shell may sit on
    /// the truncation boundary because the stored network is induced.
    pub fn ball(&mut self, center: usize, r: u32) -> Result<RootedNetwork> {
        let mut order = vec![center];
        let mut depth = std::collections::HashMap::new();
        depth.insert(center, 0u32);
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            i += 1;
            let d = depth[&x];
            if d == r {
                continue;
            }
            let next: Vec<usize> = self.neighbors(x)?.iter().map(|h| h.to).collect();
            for y in next {
                if let std::collections::hash_map::Entry::Vacant(e) = depth.entry(y) {
                    e.insert(d + 1);
                    order.push(y);
                }
            }
        }
        Ok(self.net.local_ball(center, r).0)
    }

    /// Reveals everything within `r` of the root and returns that ball.
    pub fn materialize(&mut self, r: u32) -> Result<RootedNetwork> {
        let root = self.root;
        self.ball(root, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Binary;
    impl TreeLaw for Binary {
        fn root(&self, _: &mut Rng) -> Node {
            Node::new(0)
        }
        fn root_children(&self, _: &Node, _: &mut Rng) -> Vec<Child> {
            vec![Child::plain(Node::new(1)); 3]
        }
        fn children(&self, _: &Node, _: &Node, _: &mut Rng) -> Vec<Child> {
            vec![Child::plain(Node::new(1)); 2]
        }
        fn max_degree(&self) -> Option<usize> {
            Some(3)
        }
    }

    #[test]
    fn lazy_growth_matches_regular_tree() {
        let mut ex = Explorer::lazy(Arc::new(Binary), crate::rng::stream(1, 0));
        let ball = ex.materialize(4).unwrap();
        assert_eq!(ball.vertex_count(), 1 + 3 + 6 + 12 + 24);
        // the outer shell is never expanded
        assert_eq!(ex.dist(ex.network().vertex_count() - 1), 4);
    }

    #[test]
    fn fixed_explorer_refuses_the_boundary() {
        let g = RootedNetwork::truncated(Network::regular_tree(3, 2), 0, 2).unwrap();
        let mut ex = Explorer::from_rooted(g);
        assert_eq!(ex.degree(0).unwrap(), 3);
        assert_eq!(ex.degree(1).unwrap(), 3);
        assert!(matches!(ex.neighbors(4), Err(Error::TruncationEscape { .. })));
        // ball of radius 1 around a depth-1 vertex only touches its shell
        assert_eq!(ex.ball(1, 1).unwrap().vertex_count(), 4);
        assert!(ex.ball(1, 2).is_err());
    }
}
