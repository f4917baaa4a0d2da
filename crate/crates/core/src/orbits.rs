//! Vertex orbits and stabilizer orders of the mark-preserving automorphism
//! group, acting on vertices.
//!
//! Orbits are classes of equal individualized keys. The group order comes
//! from a stabilizer chain: individualize an orbit representative, count its
//! orbit under the current pointwise stabilizer, repeat until the refined
//! colouring is discrete.

use crate::canon::individualized_form;
use crate::error::{Error, Result};
use crate::network::Network;
use serde::Serialize;
use std::collections::BTreeMap;

pub const DEFAULT_SIZE_CAP: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitReport {
    /// Orbits as sorted vertex lists, ordered by smallest member.
    pub orbits: Vec<Vec<usize>>,
    /// `|Stab(x)|` for the first vertex of each orbit.
    pub stabilizer_order: Vec<u128>,
    pub automorphism_count: u128,
}

impl OrbitReport {
    pub fn orbit_of(&self, v: usize) -> usize {
        self.orbits.iter().position(|o| o.contains(&v)).expect("every vertex lies in an orbit")
    }
}

/// Orbits of the vertices under automorphisms fixing `fixed` pointwise.
fn orbits_fixing(g: &Network, fixed: &[usize]) -> Vec<Vec<usize>> {
    let mut classes: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
    let mut seq = fixed.to_vec();
    for v in 0..g.vertex_count() {
        seq.push(v);
        let (key, _) = individualized_form(g, &seq);
        seq.pop();
        classes.entry(key.as_bytes().to_vec()).or_default().push(v);
    }
    let mut orbits: Vec<Vec<usize>> = classes.into_values().collect();
    orbits.sort();
    orbits
}

fn group_order(g: &Network, fixed: &mut Vec<usize>) -> u128 {
    let orbits = orbits_fixing(g, fixed);
    // Vertices already fixed are singleton orbits; find a moved one.
    match orbits.iter().find(|o| o.len() > 1) {
        None => 1,
        Some(orbit) => {
            let size = orbit.len() as u128;
            fixed.push(orbit[0]);
            let rest = group_order(g, fixed);
            fixed.pop();
            size * rest
        }
    }
}

pub fn automorphism_orbits(g: &Network) -> Result<OrbitReport> {
    automorphism_orbits_capped(g, DEFAULT_SIZE_CAP)
}

pub fn automorphism_orbits_capped(g: &Network, cap: usize) -> Result<OrbitReport> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::EmptyNetwork);
    }
    if n > cap {
        return Err(Error::SizeCapExceeded { size: n, cap });
    }
    let orbits = orbits_fixing(g, &[]);
    let automorphism_count = group_order(g, &mut Vec::new());
    let stabilizer_order = orbits
        .iter()
        .map(|o| {
            let s = automorphism_count / o.len() as u128;
            debug_assert_eq!(s * o.len() as u128, automorphism_count);
            s
        })
        .collect();
    Ok(OrbitReport { orbits, stabilizer_order, automorphism_count })
}
