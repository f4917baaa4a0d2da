//! Rootings of finite networks and the configuration model.

use super::{OffspringDistribution, RootedSampler};
use crate::canon::{canonical_key, CanonicalKey};
use crate::error::{Error, Result};
use crate::network::{Network, RootedNetwork};
use crate::rng::Rng;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;
use serde_json::json;
use std::collections::BTreeMap;

/// `U(g)`: root at a uniformly random vertex.
#[derive(Clone, Debug)]
pub struct UniformRoot {
    network: Network,
}

pub fn uniform_root(g: Network) -> Result<UniformRoot> {
    if g.vertex_count() == 0 {
        return Err(Error::EmptyNetwork);
    }
    Ok(UniformRoot { network: g })
}

impl UniformRoot {
    pub fn network(&self) -> &Network {
        &self.network
    }
}

impl RootedSampler for UniformRoot {
    fn descriptor(&self) -> serde_json::Value {
        json!({"kind": "uniform-root", "network": self.network.to_json()})
    }

    fn truncation_radius(&self) -> Option<u32> {
        None
    }

    fn draw_rng(&self, mut rng: Rng) -> Result<RootedNetwork> {
        let v = rng.random_range(0..self.network.vertex_count());
        RootedNetwork::new(self.network.clone(), v)
    }

    fn max_root_degree(&self) -> Option<usize> {
        Some(self.network.max_degree())
    }
}

/// One rooted-isomorphism class of `U(g)` with its exact probability.
#[derive(Clone, Debug)]
pub struct RootClass {
    pub key: CanonicalKey,
    pub probability: BigRational,
    pub representative: usize,
    pub size: usize,
}

/// The exact law of `U(g)` on rooted-isomorphism classes, by enumeration.
pub fn uniform_root_law(g: &Network) -> Result<Vec<RootClass>> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::EmptyNetwork);
    }
    let mut classes: BTreeMap<CanonicalKey, (usize, usize)> = BTreeMap::new();
    for v in 0..n {
        let key = canonical_key(&RootedNetwork::new(g.clone(), v)?);
        classes.entry(key).or_insert((v, 0)).1 += 1;
    }
    Ok(classes
        .into_iter()
        .map(|(key, (rep, size))| RootClass {
            key,
            probability: BigRational::new(size.into(), n.into()),
            representative: rep,
            size,
        })
        .collect())
}

/// Roots at vertex `x` with probability proportional to `weights[x]`.
#[derive(Clone, Debug)]
pub struct BiasedRoot {
    network: Network,
    weights: Vec<f64>,
    index: WeightedIndex<f64>,
}

pub fn biased_root(g: Network, weights: Vec<f64>) -> Result<BiasedRoot> {
    if g.vertex_count() == 0 {
        return Err(Error::EmptyNetwork);
    }
    if weights.len() != g.vertex_count() {
        return Err(Error::param("weights", format!("need {} weights, got {}", g.vertex_count(), weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::param("weights", "weights must be finite and nonnegative"));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::AllZeroWeights);
    }
    let index = WeightedIndex::new(&weights).map_err(|e| Error::param("weights", e.to_string()))?;
    Ok(BiasedRoot { network: g, weights, index })
}

impl RootedSampler for BiasedRoot {
    fn descriptor(&self) -> serde_json::Value {
        json!({"kind": "biased-root", "network": self.network.to_json(), "weights": self.weights})
    }

    fn truncation_radius(&self) -> Option<u32> {
        None
    }

    fn draw_rng(&self, mut rng: Rng) -> Result<RootedNetwork> {
        let v = self.index.sample(&mut rng);
        RootedNetwork::new(self.network.clone(), v)
    }

    fn max_root_degree(&self) -> Option<usize> {
        Some(self.network.max_degree())
    }
}

/// Configuration model with ball law `r_k = c^{-1} p_{k-1}/k`: every vertex
/// gets `k` balls with probability `r_k`, the balls are paired uniformly at
/// random, and a leftover ball is dropped. Loops and multi-edges stay.
pub fn config_model(n: usize, p: &OffspringDistribution, rng: &mut Rng) -> Result<Network> {
    if n < 2 {
        return Err(Error::param("n", "configuration model needs n >= 2"));
    }
    let law = p.config_ball_law();
    let cum = super::cumulative(&law);
    let mut balls = Vec::new();
    for v in 0..n {
        let u: f64 = rng.random();
        let k = cum.iter().position(|&c| u < c).unwrap_or(law.len() - 1);
        balls.extend(std::iter::repeat_n(v, k));
    }
    balls.shuffle(rng);
    let mut g = Network::new(n);
    for pair in balls.chunks_exact(2) {
        g.add_edge(pair[0], pair[1]);
    }
    Ok(g)
}

/// `U(G_n)` for a fresh configuration-model graph per draw.
#[derive(Clone, Debug)]
pub struct ConfigModelSampler {
    pub n: usize,
    pub offspring: OffspringDistribution,
}

impl RootedSampler for ConfigModelSampler {
    fn descriptor(&self) -> serde_json::Value {
        json!({"kind": "config", "n": self.n, "p": self.offspring.to_string()})
    }

    fn truncation_radius(&self) -> Option<u32> {
        None
    }

    fn draw_rng(&self, mut rng: Rng) -> Result<RootedNetwork> {
        let g = config_model(self.n, &self.offspring, &mut rng)?;
        let v = rng.random_range(0..self.n);
        RootedNetwork::new(g, v)
    }

    fn max_root_degree(&self) -> Option<usize> {
        Some(1 + self.offspring.max_support())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn path_three_law() {
        let law = uniform_root_law(&Network::path(3)).unwrap();
        let mut probs: Vec<_> = law.iter().map(|c| c.probability.clone()).collect();
        probs.sort();
        assert_eq!(probs, vec![q(1, 3), q(2, 3)]);
        let center = law.iter().find(|c| c.representative == 1).unwrap();
        assert_eq!(center.probability, q(1, 3));
    }

    #[test]
    fn trivial_laws() {
        assert_eq!(uniform_root_law(&Network::new(1)).unwrap().len(), 1);
        let tri = uniform_root_law(&Network::complete(3)).unwrap();
        assert_eq!(tri.len(), 1);
        assert_eq!(tri[0].probability, q(1, 1));
        assert!(uniform_root(Network::new(0)).is_err());
    }

    #[test]
    fn biased_root_errors_and_control() {
        assert!(matches!(biased_root(Network::path(3), vec![0.0; 3]), Err(Error::AllZeroWeights)));
        let s = biased_root(Network::path(3), vec![0.0, 1.0, 0.0]).unwrap();
        for i in 0..20 {
            assert_eq!(s.draw(4, i).unwrap().root_degree(), 2);
        }
    }

    #[test]
    fn config_model_cases() {
        let mut rng = stream(1, 0);
        let g = config_model(50, &OffspringDistribution::delta(2), &mut rng).unwrap();
        assert!((0..50).all(|v| g.degree(v) == 3));
        assert_eq!(g.edge_count(), 75); // 150 balls, even
        let m = config_model(7, &OffspringDistribution::delta(0), &mut rng).unwrap();
        assert_eq!(m.edge_count(), 3); // one ball left over
        let e = config_model(2, &OffspringDistribution::delta(0), &mut rng).unwrap();
        assert_eq!(e.edges().len(), 1);
        assert_ne!(e.edge(0).u, e.edge(0).v);
    }
}
