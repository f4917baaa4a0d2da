//! Offspring laws with exact rational weights.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng as _;
use std::fmt;

#[derive(Clone, PartialEq)]
pub struct OffspringDistribution {
    probs: Vec<BigRational>,
    cumulative: Vec<f64>,
}

impl fmt::Debug for OffspringDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OffspringDistribution({})", self)
    }
}

impl fmt::Display for OffspringDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.probs.iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(k, p)| format!("{k}:{p}")).collect();
        f.write_str(&parts.join(","))
    }
}

fn parse_decimal(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| Error::Parse(format!("bad numerator `{num}`")))?;
        let d: BigInt = den.trim().parse().map_err(|_| Error::Parse(format!("bad denominator `{den}`")))?;
        if d.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        return Ok(BigRational::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("bad probability `{s}`")));
    }
    let digits = format!("{}{}", if int.is_empty() { "0" } else { int }, frac);
    let n: BigInt = digits.parse().map_err(|_| Error::Parse(format!("bad probability `{s}`")))?;
    let d = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(n, d))
}

impl OffspringDistribution {
    /// `probs[k]` is the probability of `k` children; must sum to exactly 1.
    pub fn new(probs: Vec<BigRational>) -> Result<Self> {
        if probs.iter().any(|p| p < &BigRational::zero()) {
            return Err(Error::InvalidDistribution("negative probability".into()));
        }
        let total: BigRational = probs.iter().sum();
        if total != BigRational::one() {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let mut probs = probs;
        while probs.last().is_some_and(|p| p.is_zero()) {
            probs.pop();
        }
        let mut acc = BigRational::zero();
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc.to_f64().unwrap()
            })
            .collect();
        Ok(OffspringDistribution { probs, cumulative })
    }

    /// Point mass at `k`.
    pub fn delta(k: usize) -> Self {
        let mut probs = vec![BigRational::zero(); k + 1];
        probs[k] = BigRational::one();
        Self::new(probs).unwrap()
    }

    /// Parses `"k:p,k:p,..."` with decimal or `a/b` probabilities, e.g.
    /// `"0:0.2,1:0.3,2:0.5"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut probs: Vec<BigRational> = Vec::new();
        for item in s.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, p) = item.split_once(':').ok_or_else(|| Error::Parse(format!("expected k:p, got `{item}`")))?;
            let k: usize = k.trim().parse().map_err(|_| Error::Parse(format!("bad count `{k}`")))?;
            if probs.len() <= k {
                probs.resize(k + 1, BigRational::zero());
            }
            probs[k] += parse_decimal(p)?;
        }
        Self::new(probs)
    }

    pub fn prob(&self, k: usize) -> BigRational {
        self.probs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn max_support(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn min_support(&self) -> usize {
        self.probs.iter().position(|p| !p.is_zero()).unwrap()
    }

    pub fn sample(&self, rng: &mut crate::rng::Rng) -> usize {
        if self.probs.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.probs.len() - 1)
    }

    /// `c = sum_k p_k / (k + 1)`.
    pub fn degree_normalizer(&self) -> BigRational {
        self.probs.iter().enumerate().map(|(k, p)| p / BigRational::from_integer(BigInt::from(k + 1))).sum()
    }

    /// Expected root degree of the unimodular Galton-Watson measure,
    /// `(sum_k p_k/(k+1))^{-1}`.
    pub fn ugw_expected_degree(&self) -> BigRational {
        self.degree_normalizer().recip()
    }

    /// Ball-count law of the configuration model whose local limit is UGW
    /// with these offspring: `r_0 = 0`, `r_k = c^{-1} p_{k-1} / k`. It is also
    /// the root-degree law of UGW.
    pub fn config_ball_law(&self) -> Vec<BigRational> {
        let c = self.degree_normalizer();
        let mut r = vec![BigRational::zero()];
        for (j, p) in self.probs.iter().enumerate() {
            let k = j + 1;
            r.push(p / (&c * BigRational::from_integer(BigInt::from(k))));
        }
        r
    }
}

/// Samples from a finite law given as exact rationals.
pub(crate) fn cumulative(law: &[BigRational]) -> Vec<f64> {
    let mut acc = BigRational::zero();
    law.iter()
        .map(|p| {
            acc += p;
            acc.to_f64().unwrap()
        })
        .collect()
}
