//! Seeded generators of probability measures on rooted networks.
//!
//! A [`RootedSampler`] turns a random stream into one rooted network. Draw
//! `i` under seed `s` always uses `rng::stream(s, i)`, so samplers are pure
//! functions of `(seed, index)`.

mod finite;
mod offspring;
mod ops;
mod trees;

pub use finite::{
    biased_root, config_model, uniform_root, uniform_root_law, BiasedRoot, ConfigModelSampler, RootClass, UniformRoot,
};
pub use offspring::OffspringDistribution;
pub use ops::{
    cartesian_product, edge_replace, product_network, product_rooted, replace_edges, replacement_slots,
    universal_cover, CartesianProduct, EdgeReplace, Replacement, TwoPointed,
};
pub use trees::{
    agw_sampler, canopy_sampler, line_sampler, pwit_sampler, rate_ray, ugw_sampler, Canopy, GaltonWatson, LazySampler,
    PwitConfig, PwitLaw, RateRay,
};

pub(crate) use offspring::cumulative;

use crate::error::Result;
use crate::explore::Explorer;
use crate::network::RootedNetwork;
use crate::rng::{stream, Rng};
use std::sync::Arc;

pub trait RootedSampler: Send + Sync {
    /// Structured parameters identifying the measure.
    fn descriptor(&self) -> serde_json::Value;

    /// Radius up to which draws are exact; `None` when draws are whole
    /// finite networks.
    fn truncation_radius(&self) -> Option<u32>;

    fn draw_rng(&self, rng: Rng) -> Result<RootedNetwork>;

    /// A walkable view of one draw. Tree laws override this to grow lazily
    /// past the truncation radius.
    fn explore_rng(&self, rng: Rng) -> Result<Explorer> {
        Ok(Explorer::from_rooted(self.draw_rng(rng)?))
    }

    /// Upper bound on the root degree over the support, when known.
    fn max_root_degree(&self) -> Option<usize> {
        None
    }

    fn draw(&self, seed: u64, index: u64) -> Result<RootedNetwork> {
        self.draw_rng(stream(seed, index))
    }

    fn explore(&self, seed: u64, index: u64) -> Result<Explorer> {
        self.explore_rng(stream(seed, index))
    }
}

pub type SharedSampler = Arc<dyn RootedSampler>;

impl<S: RootedSampler + ?Sized> RootedSampler for Arc<S> {
    fn descriptor(&self) -> serde_json::Value {
        (**self).descriptor()
    }
    fn truncation_radius(&self) -> Option<u32> {
        (**self).truncation_radius()
    }
    fn draw_rng(&self, rng: Rng) -> Result<RootedNetwork> {
        (**self).draw_rng(rng)
    }
    fn explore_rng(&self, rng: Rng) -> Result<Explorer> {
        (**self).explore_rng(rng)
    }
    fn max_root_degree(&self) -> Option<usize> {
        (**self).max_root_degree()
    }
}

/// Checks that draws are exact to at least `need`.
pub(crate) fn require_radius(s: &dyn RootedSampler, need: u32) -> Result<()> {
    match s.truncation_radius() {
        Some(have) if have < need => Err(crate::Error::TruncationTooSmall { have, need }),
        _ => Ok(()),
    }
}

/// Splits off an independent child stream.
pub(crate) fn fork(rng: &mut Rng) -> Rng {
    use rand::SeedableRng;
    Rng::from_rng(rng)
}
