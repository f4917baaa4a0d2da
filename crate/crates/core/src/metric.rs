//! The local metric on rooted networks.
//!
//! `d = 1/(1 + alpha)` where `alpha` is the supremum of `r > 0` such that
//! the radius-`floor(r)` balls are rooted-isomorphic with corresponding marks
//! at Baire distance `< 1/r`. For `r` in `[k, k+1)` the mark condition is
//! "common prefix of length at least `k`" (or equal marks), so the test at
//! level `k` compares canonical keys of the `k`-balls with every mark cut to
//! its first `k` entries. The tests are monotone in `k`, hence `alpha` is the
//! first failing level.

use crate::canon::canonical_key;
use crate::error::{Error, Result};
use crate::mark::Mark;
use crate::network::RootedNetwork;
use num_rational::Ratio;

fn truncated_ball_key(g: &RootedNetwork, k: u32) -> Result<crate::canon::CanonicalKey> {
    let ball = g.ball(k)?;
    let src = ball.network();
    let len = k as usize;
    let mut t = crate::network::Network::with_marks(src.marks().iter().map(|m| m.truncated(len)).collect());
    for e in src.edges() {
        t.add_marked_edge(e.u, e.v, e.mu.truncated(len), e.mv.truncated(len));
    }
    Ok(canonical_key(&RootedNetwork::from_parts_unchecked(t, ball.root(), Some(k))))
}

fn agrees_at(a: &RootedNetwork, b: &RootedNetwork, k: u32) -> Result<bool> {
    if k == 0 {
        // Radius-0 balls are single vertices and no mark condition applies for r < 1.
        return Ok(true);
    }
    Ok(truncated_ball_key(a, k)? == truncated_ball_key(b, k)?)
}

fn settle_level(g: &RootedNetwork) -> u32 {
    let ecc = g.distances().into_iter().max().unwrap_or(0);
    let net = g.network();
    let longest_mark = net
        .marks()
        .iter()
        .chain(net.edges().iter().flat_map(|e| [&e.mu, &e.mv]))
        .map(|m: &Mark| m.0.len() as u32)
        .max()
        .unwrap_or(0);
    ecc.max(longest_mark) + 1
}

/// Exact distance as a rational. Fails with [`Error::Indeterminate`] when the
/// truncations agree as far as they are valid; the error carries the
/// certified lower bound on `alpha`.
pub fn rooted_distance(a: &RootedNetwork, b: &RootedNetwork) -> Result<Ratio<u64>> {
    let testable = match (a.radius(), b.radius()) {
        (None, None) => None,
        (Some(r), None) | (None, Some(r)) => Some(r),
        (Some(r), Some(s)) => Some(r.min(s)),
    };
    // Once both are complete and k exceeds every eccentricity and mark
    // length, agreement at k means the networks are equal.
    let last = testable.unwrap_or_else(|| settle_level(a).max(settle_level(b)));
    for k in 0..=last {
        if !agrees_at(a, b, k)? {
            return Ok(Ratio::new(1, 1 + k as u64));
        }
    }
    match testable {
        None => Ok(Ratio::new(0, 1)),
        Some(t) => Err(Error::Indeterminate { alpha_lower_bound: t + 1 }),
    }
}

/// Upper bound on the distance: exact when resolvable, otherwise
/// `1/(1 + alpha_lower_bound)`.
pub fn rooted_distance_bound(a: &RootedNetwork, b: &RootedNetwork) -> Result<Ratio<u64>> {
    match rooted_distance(a, b) {
        Err(Error::Indeterminate { alpha_lower_bound }) => Ok(Ratio::new(1, 1 + alpha_lower_bound as u64)),
        other => other,
    }
}
