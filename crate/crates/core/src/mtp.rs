//! Mass transport: exact and Monte Carlo checks of unimodularity, root-law
//! checks, ball histograms and the isoperimetric identity.

use crate::canon::{canonical_form, canonical_key, individualized_form, CanonicalForm, CanonicalKey};
use crate::error::{Error, Result};
use crate::gen::{require_radius, RootedSampler};
use crate::mark::Mark;
use crate::network::{Network, RootedNetwork};
use crate::orbits::automorphism_orbits;
use crate::rng::{derive_seed, stream};
use crate::stats::{sign_flip_test, Estimate};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;

pub(crate) fn ser_rational<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

pub(crate) fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn ratio(a: usize, b: usize) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// An equivariant function `f(G, x, y) >= 0` vanishing when
/// `dist(x, y) > radius`. Implementations may only look at the
/// radius-`radius` ball around `x`.
pub trait MassTransport: Send + Sync {
    fn radius(&self) -> u32;
    fn mass(&self, g: &Network, x: usize, y: usize) -> BigRational;
    fn name(&self) -> String;
}

/// `x` splits one unit of mass equally over its half-edges:
/// `f(x, y) = mult(x, y) / deg(x)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeighborSplit;

impl MassTransport for NeighborSplit {
    fn radius(&self) -> u32 {
        1
    }
    fn mass(&self, g: &Network, x: usize, y: usize) -> BigRational {
        let d = g.degree(x);
        if d == 0 {
            return BigRational::zero();
        }
        let halves = g.halves(x).iter().filter(|h| h.to == y).count();
        ratio(halves, d)
    }
    fn name(&self) -> String {
        "neighbor-split".into()
    }
}

/// `f(x, y) = 1` when `x ≠ y` are adjacent.
#[derive(Clone, Copy, Debug, Default)]
pub struct AdjacentIndicator;

impl MassTransport for AdjacentIndicator {
    fn radius(&self) -> u32 {
        1
    }
    fn mass(&self, g: &Network, x: usize, y: usize) -> BigRational {
        let adjacent = x != y && g.halves(x).iter().any(|h| h.to == y);
        BigRational::from_integer(BigInt::from(adjacent as u8))
    }
    fn name(&self) -> String {
        "adjacent".into()
    }
}

fn fnv1a(salt: u64, bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in salt.to_le_bytes().iter().chain(bytes) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A pseudo-random equivariant function: the doubly rooted radius-`radius`
/// ball around `x` (with `y` individualized second) is hashed with `salt`,
/// and the hash picks a value in `{0, 1/levels, ..., 1}`.
#[derive(Clone, Copy, Debug)]
pub struct KeyHashed {
    pub radius: u32,
    pub salt: u64,
    pub levels: u32,
}

impl MassTransport for KeyHashed {
    fn radius(&self) -> u32 {
        self.radius
    }
    fn mass(&self, g: &Network, x: usize, y: usize) -> BigRational {
        let (ball, order) = g.local_ball(x, self.radius);
        let Some(iy) = order.iter().position(|&v| v == y) else {
            return BigRational::zero();
        };
        let (key, _) = individualized_form(ball.network(), &[0, iy]);
        let k = fnv1a(self.salt, key.as_bytes()) % (self.levels as u64 + 1);
        BigRational::new(BigInt::from(k), BigInt::from(self.levels.max(1)))
    }
    fn name(&self) -> String {
        format!("key-hashed(radius={}, salt={}, levels={})", self.radius, self.salt, self.levels)
    }
}

/// Both sides of the mass-transport identity under uniform rooting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MtpExact {
    #[serde(serialize_with = "ser_rational")]
    pub lhs: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub rhs: BigRational,
}

impl MtpExact {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Canonical forms of `(G, o)` for every `o`, with a global-index labeling.
pub struct RootedForms {
    forms: Vec<CanonicalForm>,
    /// `label[o][v]`: canonical index of `v` in the form rooted at `o`, if
    /// `v` lies in the component of `o`.
    label: Vec<Vec<Option<usize>>>,
    members: Vec<Vec<usize>>,
}

impl RootedForms {
    pub fn new(g: &Network) -> Result<Self> {
        let n = g.vertex_count();
        if n == 0 {
            return Err(Error::EmptyNetwork);
        }
        let comp = g.components();
        let mut by_comp: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            by_comp.entry(comp[v]).or_default().push(v);
        }
        let mut forms = Vec::with_capacity(n);
        let mut label = Vec::with_capacity(n);
        let mut members = Vec::with_capacity(n);
        for o in 0..n {
            // RootedNetwork::new keeps the component in increasing index order
            let cf = canonical_form(&RootedNetwork::new(g.clone(), o)?);
            let vs = by_comp[&comp[o]].clone();
            let mut l = vec![None; n];
            for (i, &v) in vs.iter().enumerate() {
                l[v] = Some(cf.labeling[i]);
            }
            forms.push(cf);
            label.push(l);
            members.push(vs);
        }
        Ok(RootedForms { forms, label, members })
    }

    /// Sides of the identity for `f`, each evaluated on canonical forms:
    /// the mass sent from `o` on the form rooted at `o`, the mass received at
    /// `o` from `x` on the form rooted at `x`.
    pub fn transport(&self, f: &dyn MassTransport) -> MtpExact {
        let n = self.forms.len();
        let mut lhs = BigRational::zero();
        let mut rhs = BigRational::zero();
        for o in 0..n {
            let go = self.forms[o].network.network();
            for &x in &self.members[o] {
                lhs += f.mass(go, 0, self.label[o][x].unwrap());
                let gx = self.forms[x].network.network();
                rhs += f.mass(gx, self.label[x][o].unwrap(), 0);
            }
        }
        let n = BigRational::from_integer(BigInt::from(n));
        MtpExact { lhs: lhs / n.clone(), rhs: rhs / n }
    }
}

/// Exact `E[Σ_x f(G, o, x)]` and `E[Σ_x f(G, x, o)]` for a uniform root of
/// `g`, by enumeration.
pub fn verify_mtp_finite(g: &Network, f: &dyn MassTransport) -> Result<MtpExact> {
    Ok(RootedForms::new(g)?.transport(f))
}

/// Mass sent from and received at the root of one draw.
pub fn root_transport(g: &RootedNetwork, f: &dyn MassTransport) -> (BigRational, BigRational) {
    let net = g.network();
    let (_, near) = net.local_ball(g.root(), f.radius());
    let mut sent = BigRational::zero();
    let mut received = BigRational::zero();
    for &x in &near {
        sent += f.mass(net, g.root(), x);
        received += f.mass(net, x, g.root());
    }
    (sent, received)
}

/// Radius a sampler must be exact to for Monte Carlo transport: the sums
/// reach `radius` out and `f` looks `radius` further.
pub fn transport_radius(f: &dyn MassTransport) -> u32 {
    (2 * f.radius()).max(f.radius() + 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct MtpTestReport {
    pub function: String,
    pub samples: usize,
    pub lhs_mean: f64,
    pub rhs_mean: f64,
    pub mean_difference: f64,
    pub std_err: f64,
    pub p_value: f64,
    pub permutations: usize,
}

impl MtpTestReport {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Paired Monte Carlo test of `E[sent] = E[received]` with a sign-flip
/// permutation p-value.
pub fn mtp_monte_carlo_test(
    s: &dyn RootedSampler,
    f: &dyn MassTransport,
    n: usize,
    seed: u64,
    permutations: usize,
) -> Result<MtpTestReport> {
    require_radius(s, transport_radius(f))?;
    if n == 0 {
        return Err(Error::param("n", "need at least one sample"));
    }
    let pairs: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let g = s.draw(seed, i)?;
            let (a, b) = root_transport(&g, f);
            Ok((to_f64(&a), to_f64(&b)))
        })
        .collect::<Result<_>>()?;
    let sent: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let received: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diffs: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let d = Estimate::from_samples(&diffs);
    let mut rng = stream(derive_seed(seed, 0x006d_7470), 0);
    Ok(MtpTestReport {
        function: f.name(),
        samples: n,
        lhs_mean: Estimate::from_samples(&sent).mean,
        rhs_mean: Estimate::from_samples(&received).mean,
        mean_difference: d.mean,
        std_err: d.std_err,
        p_value: sign_flip_test(&diffs, permutations, &mut rng),
        permutations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabRootClass {
    pub orbit: Vec<usize>,
    #[serde(serialize_with = "ser_rational")]
    pub orbit_mass: BigRational,
    pub stabilizer_order: u128,
    #[serde(serialize_with = "ser_rational")]
    pub predicted: BigRational,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabRootReport {
    pub automorphism_count: u128,
    #[serde(serialize_with = "ser_rational")]
    pub normalizer: BigRational,
    pub classes: Vec<StabRootClass>,
    pub holds: bool,
}

/// Checks that the uniform-root mass `|orbit(x)|/n` of each orbit equals
/// `c^{-1} |Stab(x)|^{-1}` with `c = Σ_i |Stab(o_i)|^{-1}`.
pub fn stab_root_check(g: &Network) -> Result<StabRootReport> {
    let rep = automorphism_orbits(g)?;
    let n = g.vertex_count();
    let inv = |s: u128| BigRational::new(BigInt::from(1), BigInt::from(s));
    let c: BigRational = rep.stabilizer_order.iter().map(|&s| inv(s)).sum();
    let classes: Vec<StabRootClass> = rep
        .orbits
        .iter()
        .zip(&rep.stabilizer_order)
        .map(|(o, &s)| StabRootClass {
            orbit: o.clone(),
            orbit_mass: ratio(o.len(), n),
            stabilizer_order: s,
            predicted: inv(s) / c.clone(),
        })
        .collect();
    let holds = classes.iter().all(|k| k.orbit_mass == k.predicted);
    Ok(StabRootReport { automorphism_count: rep.automorphism_count, normalizer: c, classes, holds })
}

/// Histogram of canonical keys of radius-`radius` balls.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EmpiricalBallDistribution {
    pub radius: u32,
    pub counts: BTreeMap<CanonicalKey, u64>,
    pub total: u64,
}

impl EmpiricalBallDistribution {
    pub fn new(radius: u32) -> Self {
        EmpiricalBallDistribution { radius, counts: BTreeMap::new(), total: 0 }
    }

    pub fn add(&mut self, key: CanonicalKey) {
        *self.counts.entry(key).or_default() += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.radius != self.radius {
            return Err(Error::RadiusMismatch(self.radius, other.radius));
        }
        for (k, c) in &other.counts {
            *self.counts.entry(k.clone()).or_default() += c;
        }
        self.total += other.total;
        Ok(())
    }

    /// Adds the ball around every vertex of a finite network.
    pub fn add_all_roots(&mut self, g: &Network) {
        for v in 0..g.vertex_count() {
            self.add(canonical_key(&g.local_ball(v, self.radius).0));
        }
    }

    pub fn probability(&self, key: &CanonicalKey) -> f64 {
        self.counts.get(key).copied().unwrap_or(0) as f64 / self.total.max(1) as f64
    }

    /// Total variation distance to a law given as key probabilities.
    pub fn tv_to_law(&self, law: &BTreeMap<CanonicalKey, f64>) -> f64 {
        let mut s = 0.0;
        for (k, &p) in law {
            s += (self.probability(k) - p).abs();
        }
        for k in self.counts.keys() {
            if !law.contains_key(k) {
                s += self.probability(k);
            }
        }
        s / 2.0
    }

    /// CSV with header `key,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,count\n");
        for (k, c) in &self.counts {
            out.push_str(&format!("{k},{c}\n"));
        }
        out
    }
}

/// `½ Σ_k |a(k)/|a| − b(k)/|b||`.
pub fn tv_distance(a: &EmpiricalBallDistribution, b: &EmpiricalBallDistribution) -> Result<f64> {
    if a.radius != b.radius {
        return Err(Error::RadiusMismatch(a.radius, b.radius));
    }
    let mut s = 0.0;
    for k in a.counts.keys() {
        s += (a.probability(k) - b.probability(k)).abs();
    }
    for k in b.counts.keys() {
        if !a.counts.contains_key(k) {
            s += b.probability(k);
        }
    }
    Ok(s / 2.0)
}

/// Histogram of radius-`r` balls over draws `0..n`.
pub fn ball_distribution(s: &dyn RootedSampler, r: u32, n: usize, seed: u64) -> Result<EmpiricalBallDistribution> {
    require_radius(s, r)?;
    let keys: Vec<CanonicalKey> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let g = s.draw(seed, i)?;
            Ok(canonical_key(&g.network().local_ball(g.root(), r).0))
        })
        .collect::<Result<_>>()?;
    let mut h = EmpiricalBallDistribution::new(r);
    for k in keys {
        h.add(k);
    }
    Ok(h)
}

/// Predicate on the two half-edge marks of an edge: true when the edge is
/// open, i.e. both marks lie in `Ξ₀`.
pub type OpenRule = dyn Fn(&Mark, &Mark) -> bool + Sync;

#[derive(Clone, Debug, Serialize)]
pub struct IsoperimetryReport {
    /// `E[n(K(o))/|K(o)|]`.
    #[serde(serialize_with = "ser_rational")]
    pub boundary_per_cluster: BigRational,
    /// `E[n(o)]`.
    #[serde(serialize_with = "ser_rational")]
    pub boundary_at_root: BigRational,
    /// `E[deg(o) − n(o)]`.
    #[serde(serialize_with = "ser_rational")]
    pub alpha_term: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub expdeg_exact: BigRational,
    pub iota_estimate: f64,
    pub alpha_estimate: f64,
    pub expdeg: f64,
    pub lemma_holds: bool,
    pub identity_holds: bool,
}

/// `n(x)`: distinct vertices `y` joined to `x` by some edge that is not open.
pub fn closed_neighbors(g: &Network, x: usize, open: &OpenRule) -> usize {
    let mut ys: Vec<usize> =
        g.halves(x).iter().filter(|h| !open(g.mark_here(h), g.mark_there(h))).map(|h| h.to).collect();
    ys.sort_unstable();
    ys.dedup();
    ys.len()
}

/// Open cluster index per vertex.
pub fn open_clusters(g: &Network, open: &OpenRule) -> Vec<usize> {
    let sub = g.edge_subgraph(|e| {
        let e = g.edge(e);
        open(&e.mu, &e.mv)
    });
    sub.components()
}

/// Exact isoperimetric quantities of a uniformly rooted finite network for
/// the percolation given by `open`.
pub fn isoperimetry_report(g: &Network, open: &OpenRule) -> Result<IsoperimetryReport> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::EmptyNetwork);
    }
    let nx: Vec<usize> = (0..n).map(|x| closed_neighbors(g, x, open)).collect();
    let cluster = open_clusters(g, open);
    let k = cluster.iter().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; k];
    let mut bdry = vec![0usize; k];
    for x in 0..n {
        size[cluster[x]] += 1;
        bdry[cluster[x]] += nx[x];
    }
    let nn = BigRational::from_integer(BigInt::from(n));
    let per_cluster: BigRational =
        (0..n).map(|o| ratio(bdry[cluster[o]], size[cluster[o]])).sum::<BigRational>() / nn.clone();
    let at_root = ratio(nx.iter().sum(), n);
    let degsum: usize = (0..n).map(|x| g.degree(x)).sum();
    let expdeg = ratio(degsum, n);
    let alpha = ratio(degsum - nx.iter().sum::<usize>(), n);
    let lemma_holds = per_cluster == at_root;
    let identity_holds = per_cluster.clone() + alpha.clone() == expdeg;
    Ok(IsoperimetryReport {
        iota_estimate: to_f64(&per_cluster),
        alpha_estimate: to_f64(&alpha),
        expdeg: to_f64(&expdeg),
        boundary_per_cluster: per_cluster,
        boundary_at_root: at_root,
        alpha_term: alpha,
        expdeg_exact: expdeg,
        lemma_holds,
        identity_holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IotaGridPoint {
    pub p: f64,
    pub boundary: Estimate,
    /// Draws whose open root cluster touched the truncation boundary.
    pub escaped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct IotaGrid {
    pub points: Vec<IotaGridPoint>,
    /// Smallest `E[n(o)]` over grid points whose clusters never escaped:
    /// an upper estimate of `ι_E`, never the infimum itself.
    pub upper_bound: Option<f64>,
}

/// Bernoulli(`p`) percolations in the standard coupling on draws of `s`;
/// reports `E[n(o)]` per `p`.
pub fn iota_grid(s: &dyn RootedSampler, p_grid: &[f64], n: usize, seed: u64) -> Result<IotaGrid> {
    require_radius(s, 1)?;
    let per_draw: Vec<Vec<(f64, bool)>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let g = s.draw(seed, i)?;
            let c = crate::perc::couple(g.network(), derive_seed(seed, i));
            Ok(p_grid
                .iter()
                .map(|&p| {
                    let cl = crate::perc::cluster_of_root(&c, &g, p);
                    let nx = c.closed_neighbors(g.root(), p) as f64;
                    (nx, cl.touches_boundary)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let points: Vec<IotaGridPoint> = p_grid
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let xs: Vec<f64> = per_draw.iter().map(|d| d[j].0).collect();
            IotaGridPoint {
                p,
                boundary: Estimate::from_samples(&xs),
                escaped: per_draw.iter().filter(|d| d[j].1).count(),
            }
        })
        .collect();
    let upper_bound = points.iter().filter(|q| q.escaped == 0).map(|q| q.boundary.mean).reduce(f64::min);
    Ok(IotaGrid { points, upper_bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpdegReport {
    pub estimate: Estimate,
    pub floor: f64,
    /// True when the mean lies more than 3 standard errors below the floor.
    pub violation: bool,
}

/// Expected root degree with a check against the floor of 2 that holds for
/// unimodular measures on infinite graphs.
pub fn expdeg_floor_check(s: &dyn RootedSampler, n: usize, seed: u64) -> Result<ExpdegReport> {
    require_radius(s, 1)?;
    let degs: Vec<f64> =
        (0..n as u64).into_par_iter().map(|i| Ok(s.draw(seed, i)?.root_degree() as f64)).collect::<Result<_>>()?;
    let estimate = Estimate::from_samples(&degs);
    let violation = estimate.mean + 3.0 * estimate.std_err < 2.0;
    Ok(ExpdegReport { estimate, floor: 2.0, violation })
}
