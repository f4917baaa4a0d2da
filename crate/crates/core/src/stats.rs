//! Small statistical toolkit: means with standard errors and paired
//! permutation tests.
//!
//! Both permutation tests flip pairs independently. Pairs that are
//! interchangeable under the flip are grouped, and the number of flipped
//! pairs in a group of size `m` is drawn as `Binomial(m, 1/2)`, so one
//! permutation costs time linear in the number of groups.

use crate::rng::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use std::collections::BTreeMap;

pub const DEFAULT_PERMUTATIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, std_err: f64::NAN, samples: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, std_err, samples: n }
    }

    /// `mean ± z·se`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_err, self.mean + z * self.std_err)
    }

    /// True when `target` lies within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err
    }
}

fn flips(m: u64, rng: &mut Rng) -> u64 {
    Binomial::new(m, 0.5).expect("valid binomial").sample(rng)
}

fn p_value(exceed: usize, permutations: usize) -> f64 {
    (1 + exceed) as f64 / (1 + permutations) as f64
}

/// Two-sided sign-flip test of `E[d] = 0` for paired differences `d`.
/// Returns the p-value of `|Σ d|`.
pub fn sign_flip_test(diffs: &[f64], permutations: usize, rng: &mut Rng) -> f64 {
    let observed: f64 = diffs.iter().sum::<f64>().abs();
    let mut groups: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    for &d in diffs {
        if d != 0.0 {
            groups.entry(d.abs().to_bits()).or_insert((d.abs(), 0)).1 += 1;
        }
    }
    if groups.is_empty() {
        return 1.0;
    }
    let scale: f64 = groups.values().map(|(v, m)| v * *m as f64).sum();
    let tol = 1e-12 * scale;
    let mut exceed = 0;
    for _ in 0..permutations {
        let t: f64 = groups.values().map(|&(v, m)| v * (2.0 * flips(m, rng) as f64 - m as f64)).sum();
        if t.abs() >= observed - tol {
            exceed += 1;
        }
    }
    p_value(exceed, permutations)
}

/// Counts of ordered category pairs `(a, b)`.
#[derive(Clone, Debug, Default)]
pub struct PairCounts {
    counts: BTreeMap<(u32, u32), u64>,
    total: u64,
}

impl PairCounts {
    pub fn add(&mut self, a: u32, b: u32) {
        *self.counts.entry((a, b)).or_default() += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, a: u32, b: u32) -> u64 {
        self.counts.get(&(a, b)).copied().unwrap_or(0)
    }

    /// Unordered off-diagonal groups `(k, l, n_kl, n_lk)` with `k < l`.
    fn groups(&self) -> Vec<(u32, u32, u64, u64)> {
        let mut out = Vec::new();
        for (&(a, b), &n) in &self.counts {
            if a < b {
                out.push((a, b, n, self.get(b, a)));
            } else if a > b && self.get(b, a) == 0 {
                out.push((b, a, 0, n));
            }
        }
        out
    }

    /// Total variation between the law of the first and the second
    /// coordinate.
    pub fn marginal_tv(&self) -> f64 {
        let mut diff: BTreeMap<u32, i64> = BTreeMap::new();
        for (k, l, nkl, nlk) in self.groups() {
            let d = nkl as i64 - nlk as i64;
            *diff.entry(k).or_default() += d;
            *diff.entry(l).or_default() -= d;
        }
        diff.values().map(|d| d.unsigned_abs()).sum::<u64>() as f64 / (2 * self.total.max(1)) as f64
    }

    /// Total variation between the law of `(a, b)` and of `(b, a)`.
    pub fn swap_tv(&self) -> f64 {
        self.groups().iter().map(|&(_, _, x, y)| x.abs_diff(y)).sum::<u64>() as f64 / self.total.max(1) as f64
    }

    /// Permutation p-value for `marginal_tv` under exchangeability of pairs.
    pub fn marginal_test(&self, permutations: usize, rng: &mut Rng) -> f64 {
        let groups = self.groups();
        let observed = self.marginal_tv();
        let mut exceed = 0;
        let mut diff: BTreeMap<u32, i64> = BTreeMap::new();
        for _ in 0..permutations {
            diff.clear();
            for &(k, l, x, y) in &groups {
                let m = x + y;
                let d = 2 * flips(m, rng) as i64 - m as i64;
                *diff.entry(k).or_default() += d;
                *diff.entry(l).or_default() -= d;
            }
            let tv = diff.values().map(|d| d.unsigned_abs()).sum::<u64>() as f64 / (2 * self.total.max(1)) as f64;
            if tv >= observed - 1e-12 {
                exceed += 1;
            }
        }
        p_value(exceed, permutations)
    }

    /// Permutation p-value for `swap_tv` under exchangeability of pairs.
    pub fn swap_test(&self, permutations: usize, rng: &mut Rng) -> f64 {
        let groups = self.groups();
        let observed = self.swap_tv();
        let mut exceed = 0;
        for _ in 0..permutations {
            let s: u64 = groups
                .iter()
                .map(|&(_, _, x, y)| {
                    let m = x + y;
                    let f = flips(m, rng);
                    f.abs_diff(m - f)
                })
                .sum();
            if s as f64 / self.total.max(1) as f64 >= observed - 1e-12 {
                exceed += 1;
            }
        }
        p_value(exceed, permutations)
    }
}
