//! Marks: finite integer sequences standing in for points of Baire space.
//!
//! Real-valued marks (edge weights, lengths) are stored as a one-element
//! sequence holding a fixed-point integer with [`REAL_SCALE`] units per 1.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Fixed-point units per 1.0 for real-valued marks.
pub const REAL_SCALE: i64 = 1 << 20;

#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mark(pub Vec<i64>);

impl Mark {
    pub fn empty() -> Self {
        Mark(Vec::new())
    }

    pub fn int(v: i64) -> Self {
        Mark(vec![v])
    }

    /// Fixed-point encoding of a real number, rounded to the nearest unit.
    pub fn real(x: f64) -> Self {
        Mark(vec![(x * REAL_SCALE as f64).round() as i64])
    }

    pub fn as_real(&self) -> Option<f64> {
        self.0.first().map(|&v| v as f64 / REAL_SCALE as f64)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn common_prefix(&self, other: &Mark) -> usize {
        self.0.iter().zip(&other.0).take_while(|(a, b)| a == b).count()
    }

    /// Prefix metric on Baire space: `1 / (1 + common prefix length)`.
    pub fn baire_distance(&self, other: &Mark) -> f64 {
        if self == other {
            0.0
        } else {
            1.0 / (1.0 + self.common_prefix(other) as f64)
        }
    }

    /// `|a - b|` on the fixed-point payloads; empty marks read as 0.
    pub fn real_distance(&self, other: &Mark) -> f64 {
        (self.as_real().unwrap_or(0.0) - other.as_real().unwrap_or(0.0)).abs()
    }

    /// The first `len` entries. Two marks truncate to the same value iff
    /// they are equal or share a prefix of length at least `len`.
    pub fn truncated(&self, len: usize) -> Mark {
        Mark(self.0.iter().take(len).copied().collect())
    }
}

impl fmt::Debug for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i64>> for Mark {
    fn from(v: Vec<i64>) -> Self {
        Mark(v)
    }
}
