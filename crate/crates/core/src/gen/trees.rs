//! Random trees grown vertex by vertex: Galton-Watson families, the canopy
//! tree, the PWIT and the rate ray used by explosion tests.

use super::{OffspringDistribution, RootedSampler};
use crate::error::{Error, Result};
use crate::explore::{Child, Explorer, Node, TreeLaw};
use crate::mark::Mark;
use crate::network::RootedNetwork;
use crate::rng::Rng;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde_json::json;
use std::sync::Arc;

/// Augmented Galton-Watson tree, optionally biased by `1/deg(root)`.
///
/// The root joins two independent trees, so its degree is `1 + X` with
/// `X ~ p`; every other vertex has `Y ~ p` children. Under the unimodular
/// bias the root degree is drawn by rejection with acceptance
/// `min_degree / deg(root)`.
#[derive(Clone, Debug)]
pub struct GaltonWatson {
    pub offspring: OffspringDistribution,
    pub unimodular: bool,
}

impl TreeLaw for GaltonWatson {
    fn root(&self, rng: &mut Rng) -> Node {
        let min_deg = 1 + self.offspring.min_support();
        loop {
            let d = 1 + self.offspring.sample(rng);
            if !self.unimodular || d == min_deg || rng.random_range(0..d) < min_deg {
                return Node::new(d as i64);
            }
        }
    }

    fn root_children(&self, root: &Node, _: &mut Rng) -> Vec<Child> {
        vec![Child::plain(Node::new(0)); root.state as usize]
    }

    fn children(&self, _: &Node, _: &Node, rng: &mut Rng) -> Vec<Child> {
        vec![Child::plain(Node::new(0)); self.offspring.sample(rng)]
    }

    fn max_degree(&self) -> Option<usize> {
        Some(1 + self.offspring.max_support())
    }
}

/// The canopy tree: vertices carry a level, level-0 vertices are leaves,
/// each vertex of level `n >= 1` has two children of level `n - 1` and every
/// vertex has a parent one level up. The root level is `n` with probability
/// `2^{-(n+1)}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Canopy;

impl TreeLaw for Canopy {
    fn root(&self, rng: &mut Rng) -> Node {
        let bits: u64 = rng.random();
        Node::new(bits.trailing_ones() as i64)
    }

    fn root_children(&self, root: &Node, _: &mut Rng) -> Vec<Child> {
        let mut out = vec![Child::plain(Node::new(root.state + 1))];
        if root.state >= 1 {
            out.extend(vec![Child::plain(Node::new(root.state - 1)); 2]);
        }
        out
    }

    fn children(&self, node: &Node, parent: &Node, _: &mut Rng) -> Vec<Child> {
        if parent.state > node.state {
            // reached from above: two children, if any
            if node.state >= 1 {
                vec![Child::plain(Node::new(node.state - 1)); 2]
            } else {
                Vec::new()
            }
        } else {
            // reached from one child: the parent and the other child
            vec![Child::plain(Node::new(node.state + 1)), Child::plain(Node::new(node.state - 1))]
        }
    }

    fn max_degree(&self) -> Option<usize> {
        Some(3)
    }
}

/// Piecewise-linear mean function through `(0, 0)` and the given knots,
/// extended past the last knot with the last slope.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct PwitConfig {
    /// Knots `(t, Lambda(t))`, strictly increasing in both coordinates.
    pub knots: Vec<(f64, f64)>,
    /// Children per vertex.
    pub cutoff: usize,
    pub radius: u32,
}

impl PwitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::param("radius", "must be at least 1"));
        }
        let mut prev = (0.0, 0.0);
        for &(t, l) in &self.knots {
            if !(t > prev.0 && l > prev.1) {
                return Err(Error::param("knots", "mean function must be strictly increasing from (0,0)"));
            }
            prev = (t, l);
        }
        if self.knots.is_empty() {
            return Err(Error::param("knots", "need at least one knot"));
        }
        Ok(())
    }

    /// `Lambda^{-1}(s)`.
    pub fn inverse(&self, s: f64) -> f64 {
        let mut prev = (0.0, 0.0);
        for &(t, l) in &self.knots {
            if s <= l {
                return prev.0 + (s - prev.1) * (t - prev.0) / (l - prev.1);
            }
            prev = (t, l);
        }
        let n = self.knots.len();
        let before = if n >= 2 { self.knots[n - 2] } else { (0.0, 0.0) };
        let slope = (prev.1 - before.1) / (prev.0 - before.0);
        prev.0 + (s - prev.1) / slope
    }

    pub fn mean(&self, t: f64) -> f64 {
        let mut prev = (0.0, 0.0);
        for &(kt, kl) in &self.knots {
            if t <= kt {
                return prev.1 + (t - prev.0) * (kl - prev.1) / (kt - prev.0);
            }
            prev = (kt, kl);
        }
        let n = self.knots.len();
        let before = if n >= 2 { self.knots[n - 2] } else { (0.0, 0.0) };
        prev.1 + (t - prev.0) * (prev.1 - before.1) / (prev.0 - before.0)
    }
}

#[derive(Clone, Debug)]
pub struct PwitLaw(pub PwitConfig);

impl PwitLaw {
    fn points(&self, rng: &mut Rng) -> Vec<Child> {
        let mut s = 0.0;
        (0..self.0.cutoff)
            .map(|_| {
                let e: f64 = Exp1.sample(rng);
                s += e;
                let len = Mark::real(self.0.inverse(s));
                Child { node: Node::new(0), mark_near: len.clone(), mark_far: len }
            })
            .collect()
    }
}

impl TreeLaw for PwitLaw {
    fn root(&self, _: &mut Rng) -> Node {
        Node::new(0)
    }
    fn root_children(&self, _: &Node, rng: &mut Rng) -> Vec<Child> {
        self.points(rng)
    }
    fn children(&self, _: &Node, _: &Node, rng: &mut Rng) -> Vec<Child> {
        self.points(rng)
    }
    fn max_degree(&self) -> Option<usize> {
        Some(self.0.cutoff + 1)
    }
}

/// A one-sided ray whose vertex at depth `n` jumps outward at rate
/// `(n + 1)^exponent` and never back (the return half-edge carries rate 0).
#[derive(Clone, Copy, Debug)]
pub struct RateRay {
    pub exponent: f64,
}

impl RateRay {
    fn child(&self, depth: i64) -> Vec<Child> {
        let rate = ((depth + 1) as f64).powf(self.exponent);
        vec![Child { node: Node::new(depth + 1), mark_near: Mark::real(rate), mark_far: Mark::real(0.0) }]
    }
}

impl TreeLaw for RateRay {
    fn root(&self, _: &mut Rng) -> Node {
        Node::new(0)
    }
    fn root_children(&self, root: &Node, _: &mut Rng) -> Vec<Child> {
        self.child(root.state)
    }
    fn children(&self, node: &Node, _: &Node, _: &mut Rng) -> Vec<Child> {
        self.child(node.state)
    }
    fn max_degree(&self) -> Option<usize> {
        Some(2)
    }
}

/// Sampler backed by a [`TreeLaw`]; draws are materialized to `radius`,
/// explorers grow without bound.
#[derive(Clone)]
pub struct LazySampler {
    law: Arc<dyn TreeLaw>,
    radius: u32,
    descriptor: serde_json::Value,
}

impl LazySampler {
    pub fn new(law: Arc<dyn TreeLaw>, radius: u32, descriptor: serde_json::Value) -> Self {
        LazySampler { law, radius, descriptor }
    }

    pub fn law(&self) -> &Arc<dyn TreeLaw> {
        &self.law
    }
}

impl RootedSampler for LazySampler {
    fn descriptor(&self) -> serde_json::Value {
        self.descriptor.clone()
    }

    fn truncation_radius(&self) -> Option<u32> {
        Some(self.radius)
    }

    fn draw_rng(&self, rng: Rng) -> Result<RootedNetwork> {
        Explorer::lazy(self.law.clone(), rng).materialize(self.radius)
    }

    fn explore_rng(&self, rng: Rng) -> Result<Explorer> {
        Ok(Explorer::lazy(self.law.clone(), rng))
    }

    fn max_root_degree(&self) -> Option<usize> {
        self.law.max_degree()
    }
}

fn check_radius(radius: u32) -> Result<()> {
    if radius < 1 {
        return Err(Error::param("radius", "must be at least 1"));
    }
    Ok(())
}

pub fn agw_sampler(p: &OffspringDistribution, radius: u32) -> Result<LazySampler> {
    check_radius(radius)?;
    let law = GaltonWatson { offspring: p.clone(), unimodular: false };
    Ok(LazySampler::new(Arc::new(law), radius, json!({"kind": "agw", "p": p.to_string(), "radius": radius})))
}

/// Unimodular Galton-Watson. Offspring laws here always have finite
/// support, which bounds the rejection step.
pub fn ugw_sampler(p: &OffspringDistribution, radius: u32) -> Result<LazySampler> {
    check_radius(radius)?;
    let law = GaltonWatson { offspring: p.clone(), unimodular: true };
    Ok(LazySampler::new(Arc::new(law), radius, json!({"kind": "ugw", "p": p.to_string(), "radius": radius})))
}

/// The two-sided line `Z`, i.e. UGW with one child per vertex.
pub fn line_sampler(radius: u32) -> Result<LazySampler> {
    let mut s = ugw_sampler(&OffspringDistribution::delta(1), radius)?;
    s.descriptor = json!({"kind": "line", "radius": radius});
    Ok(s)
}

pub fn canopy_sampler(radius: u32) -> Result<LazySampler> {
    check_radius(radius)?;
    Ok(LazySampler::new(Arc::new(Canopy), radius, json!({"kind": "canopy", "radius": radius})))
}

pub fn pwit_sampler(cfg: PwitConfig) -> Result<LazySampler> {
    cfg.validate()?;
    let descriptor = json!({"kind": "pwit", "config": serde_json::to_value(&cfg).unwrap()});
    let radius = cfg.radius;
    Ok(LazySampler::new(Arc::new(PwitLaw(cfg)), radius, descriptor))
}

/// One-sided ray with outward rates `(n+1)^exponent`; not unimodular, used
/// as a fixture for explosion detection.
pub fn rate_ray(exponent: f64, radius: u32) -> LazySampler {
    LazySampler::new(
        Arc::new(RateRay { exponent }),
        radius,
        json!({"kind": "rate-ray", "exponent": exponent, "radius": radius}),
    )
}
