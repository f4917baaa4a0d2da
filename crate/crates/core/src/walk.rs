//! Random walks on rooted networks: discrete kernels, degree biasing,
//! stationarity and reversibility tests, speed, heat kernels, traces and
//! continuous-time walks with explosion flagging.

use crate::canon::{canonical_key, CanonicalKey};
use crate::error::{Error, Result};
use crate::explore::Explorer;
use crate::gen::{fork, require_radius, RootedSampler};
use crate::mtp::ser_rational;
use crate::network::{Network, RootedNetwork};
use crate::rng::{derive_seed, stream, Rng};
use crate::stats::{Estimate, PairCounts};
use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::sync::Arc;

const WALK_STREAM: u64 = 0x7761_6c6b;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Trajectory {
    /// `w_0 = root, w_1, ...` as vertex indices of the walked network.
    pub positions: Vec<usize>,
    /// Jump times of a continuous-time walk; empty for discrete walks.
    pub jump_times: Vec<f64>,
}

impl Trajectory {
    /// CSV with header `step,vertex,time`; `time` is the step index for
    /// discrete walks and the jump time (0 for the start) otherwise.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,vertex,time\n");
        for (i, v) in self.positions.iter().enumerate() {
            let t = if self.jump_times.is_empty() {
                i as f64
            } else if i == 0 {
                0.0
            } else {
                self.jump_times[i - 1]
            };
            out.push_str(&format!("{i},{v},{t}\n"));
        }
        out
    }
}

/// A nearest-neighbor transition rule evaluated on an explorer.
pub trait Kernel: Send + Sync {
    fn step(&self, ex: &mut Explorer, x: usize, rng: &mut Rng) -> Result<usize>;
    fn name(&self) -> String;
}

/// Simple random walk: a uniform half-edge, so transitions are proportional
/// to multiplicity and loops count twice.
#[derive(Clone, Copy, Debug, Default)]
pub struct Simple;

impl Kernel for Simple {
    fn step(&self, ex: &mut Explorer, x: usize, rng: &mut Rng) -> Result<usize> {
        let halves = ex.neighbors(x)?;
        if halves.is_empty() {
            return Ok(x);
        }
        Ok(halves[rng.random_range(0..halves.len())].to)
    }
    fn name(&self) -> String {
        "simple".into()
    }
}

/// The canonical reversible environment: `p(x, y) ∝ 1/deg(y)` per half-edge.
#[derive(Clone, Copy, Debug, Default)]
pub struct Canonical;

impl Kernel for Canonical {
    fn step(&self, ex: &mut Explorer, x: usize, rng: &mut Rng) -> Result<usize> {
        let targets: Vec<usize> = ex.neighbors(x)?.iter().map(|h| h.to).collect();
        if targets.is_empty() {
            return Ok(x);
        }
        let mut w = Vec::with_capacity(targets.len());
        for &y in &targets {
            w.push(1.0 / ex.degree(y)? as f64);
        }
        let total: f64 = w.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, wi) in w.iter().enumerate() {
            if u < *wi {
                return Ok(targets[i]);
            }
            u -= wi;
        }
        Ok(*targets.last().unwrap())
    }
    fn name(&self) -> String {
        "canonical".into()
    }
}

/// Drift toward a fixed vertex of a materialized network: with probability
/// `drift` step to the first neighbor closer to `target`, otherwise to a
/// uniform other half-edge. Not reversible for the degree measure; used as
/// a negative control.
#[derive(Clone, Debug)]
pub struct TowardVertex {
    pub toward: Vec<usize>,
    pub drift: f64,
}

impl TowardVertex {
    pub fn new(g: &Network, target: usize, drift: f64) -> Self {
        let dist = g.distances_from(target);
        let toward = (0..g.vertex_count())
            .map(|x| {
                g.halves(x)
                    .iter()
                    .find(|h| matches!((dist[h.to], dist[x]), (Some(a), Some(b)) if a + 1 == b))
                    .map_or(usize::MAX, |h| h.to)
            })
            .collect();
        TowardVertex { toward, drift }
    }
}

impl Kernel for TowardVertex {
    fn step(&self, ex: &mut Explorer, x: usize, rng: &mut Rng) -> Result<usize> {
        let up = self.toward[x];
        let others: Vec<usize> = ex.neighbors(x)?.iter().map(|h| h.to).filter(|&y| y != up).collect();
        if up == usize::MAX {
            return Ok(if others.is_empty() { x } else { others[rng.random_range(0..others.len())] });
        }
        if others.is_empty() || rng.random::<f64>() < self.drift {
            return Ok(up);
        }
        Ok(others[rng.random_range(0..others.len())])
    }
    fn name(&self) -> String {
        format!("toward(drift={})", self.drift)
    }
}

/// `steps` steps of `kernel` from the root of `ex`.
pub fn walk(ex: &mut Explorer, kernel: &dyn Kernel, steps: usize, rng: &mut Rng) -> Result<Trajectory> {
    let mut x = ex.root();
    let mut positions = Vec::with_capacity(steps + 1);
    positions.push(x);
    for _ in 0..steps {
        x = kernel.step(ex, x, rng)?;
        positions.push(x);
    }
    Ok(Trajectory { positions, jump_times: Vec::new() })
}

/// Simple random walk of `steps` steps on `g` from its root.
pub fn srw_trajectory(g: &RootedNetwork, steps: usize, seed: u64) -> Result<Trajectory> {
    if let Some(r) = g.radius() {
        if steps as u64 > r as u64 {
            return Err(Error::TruncationTooSmall { have: r, need: steps as u32 });
        }
    }
    walk(&mut Explorer::from_rooted(g.clone()), &Simple, steps, &mut stream(seed, 0))
}

/// `s` biased by the root degree, by rejection against the largest root
/// degree in its support.
pub struct DegreeBiased {
    inner: Arc<dyn RootedSampler>,
    max_degree: usize,
}

pub fn degree_biased(inner: Arc<dyn RootedSampler>) -> Result<DegreeBiased> {
    let max_degree = inner.max_root_degree().ok_or(Error::UnboundedSupport)?;
    if max_degree == 0 {
        return Err(Error::param("sampler", "root degree is always 0"));
    }
    Ok(DegreeBiased { inner, max_degree })
}

impl RootedSampler for DegreeBiased {
    fn descriptor(&self) -> serde_json::Value {
        json!({"kind": "degree-biased", "inner": self.inner.descriptor()})
    }

    fn truncation_radius(&self) -> Option<u32> {
        self.inner.truncation_radius()
    }

    fn draw_rng(&self, mut rng: Rng) -> Result<RootedNetwork> {
        loop {
            let g = self.inner.draw_rng(fork(&mut rng))?;
            if rng.random_range(0..self.max_degree) < g.root_degree() {
                return Ok(g);
            }
        }
    }

    fn explore_rng(&self, mut rng: Rng) -> Result<Explorer> {
        loop {
            let mut ex = self.inner.explore_rng(fork(&mut rng))?;
            let root = ex.root();
            let d = ex.degree(root)?;
            if rng.random_range(0..self.max_degree) < d {
                return Ok(ex);
            }
        }
    }

    fn max_root_degree(&self) -> Option<usize> {
        Some(self.max_degree)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkTestReport {
    pub kernel: String,
    pub samples: usize,
    pub categories: usize,
    /// Total variation between the two compared laws.
    pub tv: f64,
    pub p_value: f64,
    pub permutations: usize,
}

impl WalkTestReport {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

fn ball_key(ex: &mut Explorer, v: usize, r: u32) -> Result<CanonicalKey> {
    Ok(canonical_key(&ex.ball(v, r)?))
}

fn pair_keys(
    s: &dyn RootedSampler,
    kernel: &dyn Kernel,
    r: u32,
    k: usize,
    n: usize,
    seed: u64,
) -> Result<(PairCounts, usize)> {
    require_radius(s, r + k as u32)?;
    let walk_seed = derive_seed(seed, WALK_STREAM);
    let pairs: Vec<(CanonicalKey, CanonicalKey)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut ex = s.explore(seed, i)?;
            let t = walk(&mut ex, kernel, k, &mut stream(walk_seed, i))?;
            let a = ball_key(&mut ex, t.positions[0], r)?;
            let b = ball_key(&mut ex, t.positions[k], r)?;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let mut ids: BTreeMap<CanonicalKey, u32> = BTreeMap::new();
    for (a, b) in &pairs {
        ids.entry(a.clone()).or_default();
        ids.entry(b.clone()).or_default();
    }
    for (i, v) in ids.values_mut().enumerate() {
        *v = i as u32;
    }
    let mut counts = PairCounts::default();
    for (a, b) in &pairs {
        counts.add(ids[a], ids[b]);
    }
    Ok((counts, ids.len()))
}

/// Compares the radius-`r` ball law at `w_0` with the law at `w_k` for walks
/// started from draws of `s` (bias `s` beforehand with [`degree_biased`]).
pub fn stationarity_test(
    s: &dyn RootedSampler,
    kernel: &dyn Kernel,
    r: u32,
    k: usize,
    n: usize,
    seed: u64,
    permutations: usize,
) -> Result<WalkTestReport> {
    let (counts, categories) = pair_keys(s, kernel, r, k, n, seed)?;
    let mut rng = stream(derive_seed(seed, WALK_STREAM + 1), 0);
    Ok(WalkTestReport {
        kernel: kernel.name(),
        samples: n,
        categories,
        tv: counts.marginal_tv(),
        p_value: counts.marginal_test(permutations, &mut rng),
        permutations,
    })
}

/// Compares the law of `(ball at w_0, ball at w_1)` with its swap.
pub fn reversibility_test(
    s: &dyn RootedSampler,
    kernel: &dyn Kernel,
    r: u32,
    n: usize,
    seed: u64,
    permutations: usize,
) -> Result<WalkTestReport> {
    let (counts, categories) = pair_keys(s, kernel, r, 1, n, seed)?;
    let mut rng = stream(derive_seed(seed, WALK_STREAM + 2), 0);
    Ok(WalkTestReport {
        kernel: kernel.name(),
        samples: n,
        categories,
        tv: counts.swap_tv(),
        p_value: counts.swap_test(permutations, &mut rng),
        permutations,
    })
}

fn q(a: usize, b: usize) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// `M(i, j) = deg(i) p(i, j) / Σ deg`, the one-step pair law of simple
/// random walk started from the degree measure.
pub fn degree_pair_matrix(g: &Network) -> Result<Vec<Vec<BigRational>>> {
    let n = g.vertex_count();
    let total: usize = (0..n).map(|x| g.degree(x)).sum();
    if total == 0 {
        return Err(Error::param("network", "no edges"));
    }
    let mut m = vec![vec![BigRational::zero(); n]; n];
    for (x, row) in m.iter_mut().enumerate() {
        for h in g.halves(x) {
            row[h.to] += q(1, total);
        }
    }
    Ok(m)
}

pub fn is_symmetric(m: &[Vec<BigRational>]) -> bool {
    (0..m.len()).all(|i| (0..i).all(|j| m[i][j] == m[j][i]))
}

/// Where an exact walk law starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Uniform,
    Degree,
}

/// Exact laws of the radius-`r` ball key at `w_0` and at `w_k` for simple
/// random walk on a finite network.
pub fn exact_walk_laws(
    g: &Network,
    r: u32,
    k: usize,
    start: Start,
) -> Result<(BTreeMap<CanonicalKey, BigRational>, BTreeMap<CanonicalKey, BigRational>)> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::EmptyNetwork);
    }
    if let Some(x) = (0..n).find(|&x| g.degree(x) == 0) {
        return Err(Error::IsolatedVertex(x));
    }
    let total: usize = (0..n).map(|x| g.degree(x)).sum();
    let mut law: Vec<BigRational> = (0..n)
        .map(|x| match start {
            Start::Uniform => q(1, n),
            Start::Degree => q(g.degree(x), total),
        })
        .collect();
    let keys: Vec<CanonicalKey> = (0..n).map(|x| canonical_key(&g.local_ball(x, r).0)).collect();
    let project = |law: &[BigRational]| {
        let mut out: BTreeMap<CanonicalKey, BigRational> = BTreeMap::new();
        for (x, p) in law.iter().enumerate() {
            *out.entry(keys[x].clone()).or_insert_with(BigRational::zero) += p;
        }
        out
    };
    let first = project(&law);
    for _ in 0..k {
        let mut next = vec![BigRational::zero(); n];
        for x in 0..n {
            let share = law[x].clone() / BigRational::from_integer(BigInt::from(g.degree(x)));
            for h in g.halves(x) {
                next[h.to] += share.clone();
            }
        }
        law = next;
    }
    Ok((first, project(&law)))
}

pub fn exact_tv(a: &BTreeMap<CanonicalKey, BigRational>, b: &BTreeMap<CanonicalKey, BigRational>) -> BigRational {
    let zero = BigRational::zero();
    let mut s = BigRational::zero();
    for k in a.keys().chain(b.keys().filter(|k| !a.contains_key(*k))) {
        let d = a.get(k).unwrap_or(&zero) - b.get(k).unwrap_or(&zero);
        s += if d < zero { -d } else { d };
    }
    s / BigRational::from_integer(BigInt::from(2))
}

/// `p_G(x, y) = Σ_{x→y} 1/[F(x) deg(y)]`, `F(x) = Σ_{x→y} 1/deg(y)`,
/// `ν(x) = F(x)/deg(x)/Z`.
#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    #[serde(serialize_with = "ser_vec")]
    pub f: Vec<BigRational>,
    /// Sparse rows `(y, p(x, y))` with `y` increasing.
    #[serde(serialize_with = "ser_rows")]
    pub transition: Vec<Vec<(usize, BigRational)>>,
    #[serde(serialize_with = "ser_vec")]
    pub nu: Vec<BigRational>,
    #[serde(serialize_with = "ser_rational")]
    pub z: BigRational,
    pub rows_stochastic: bool,
    pub reversible: bool,
}

fn ser_vec<S: serde::Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

fn ser_rows<S: serde::Serializer>(v: &[Vec<(usize, BigRational)>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|row| row.iter().map(|(y, p)| (*y, p.to_string())).collect::<Vec<_>>()))
}

impl Environment {
    pub fn p(&self, x: usize, y: usize) -> BigRational {
        self.transition[x].iter().find(|(z, _)| *z == y).map_or_else(BigRational::zero, |(_, p)| p.clone())
    }
}

/// The canonical environment on the stored network, treated as finite.
pub fn canonical_environment(g: &RootedNetwork) -> Result<Environment> {
    let net = g.network();
    let n = net.vertex_count();
    if let Some(x) = (0..n).find(|&x| net.degree(x) == 0) {
        return Err(Error::IsolatedVertex(x));
    }
    let inv_deg: Vec<BigRational> = (0..n).map(|x| q(1, net.degree(x))).collect();
    let f: Vec<BigRational> = (0..n).map(|x| net.halves(x).iter().map(|h| inv_deg[h.to].clone()).sum()).collect();
    let mut transition = Vec::with_capacity(n);
    for x in 0..n {
        let mut row: BTreeMap<usize, BigRational> = BTreeMap::new();
        for h in net.halves(x) {
            *row.entry(h.to).or_insert_with(BigRational::zero) += inv_deg[h.to].clone() / f[x].clone();
        }
        transition.push(row.into_iter().collect::<Vec<_>>());
    }
    let z: BigRational = (0..n).map(|x| f[x].clone() * inv_deg[x].clone()).sum();
    let nu: Vec<BigRational> = (0..n).map(|x| f[x].clone() * inv_deg[x].clone() / z.clone()).collect();
    let mut env = Environment { f, transition, nu, z, rows_stochastic: false, reversible: false };
    env.rows_stochastic =
        env.transition.iter().all(|row| row.iter().map(|(_, p)| p.clone()).sum::<BigRational>().is_one());
    env.reversible = (0..n)
        .all(|x| env.transition[x].iter().all(|(y, p)| env.nu[x].clone() * p == env.nu[*y].clone() * env.p(*y, x)));
    Ok(env)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeedReport {
    pub steps: usize,
    pub estimate: Estimate,
}

/// Mean of `dist(w_0, w_n)/n` for simple random walk from `s` (bias `s`
/// by degree beforehand for the stationary version).
pub fn speed_estimate(s: &dyn RootedSampler, steps: usize, trials: usize, seed: u64) -> Result<SpeedReport> {
    require_radius(s, steps as u32)?;
    if steps == 0 {
        return Err(Error::param("steps", "must be positive"));
    }
    let walk_seed = derive_seed(seed, WALK_STREAM);
    let xs: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut ex = s.explore(seed, i)?;
            let t = walk(&mut ex, &Simple, steps, &mut stream(walk_seed, i))?;
            Ok(ex.dist(t.positions[steps]) as f64 / steps as f64)
        })
        .collect::<Result<_>>()?;
    Ok(SpeedReport { steps, estimate: Estimate::from_samples(&xs) })
}

/// `1 − 2/d̄`, the speed of simple random walk on a unimodular tree with
/// expected degree `d̄`.
pub fn tree_speed_formula(mean_degree: f64) -> Result<f64> {
    if !(mean_degree > 0.0) {
        return Err(Error::param("mean_degree", "must be positive"));
    }
    Ok(1.0 - 2.0 / mean_degree)
}

pub const HEAT_KERNEL_CAP: usize = 2000;

/// A finite network with positive edge weights and its Laplacian
/// `A(x, y) = −Σ c(e)`, zero row sums. Loops do not enter `A`.
#[derive(Clone, Debug)]
pub struct WeightedOperator {
    pub laplacian: DMatrix<f64>,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl WeightedOperator {
    pub fn new(g: &Network, weights: &[f64]) -> Result<Self> {
        let n = g.vertex_count();
        if n == 0 {
            return Err(Error::EmptyNetwork);
        }
        if n > HEAT_KERNEL_CAP {
            return Err(Error::SizeCapExceeded { size: n, cap: HEAT_KERNEL_CAP });
        }
        if weights.len() != g.edge_count() {
            return Err(Error::param("weights", "one weight per edge"));
        }
        let mut a = DMatrix::zeros(n, n);
        for (i, e) in g.edges().iter().enumerate() {
            let c = weights[i];
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidWeight {
                    edge: i,
                    reason: format!("{c} is not a finite nonnegative weight"),
                });
            }
            if e.is_loop() {
                continue;
            }
            a[(e.u, e.v)] -= c;
            a[(e.v, e.u)] -= c;
            a[(e.u, e.u)] += c;
            a[(e.v, e.v)] += c;
        }
        let eigen = SymmetricEigen::new(a.clone());
        Ok(WeightedOperator { laplacian: a, eigen })
    }

    pub fn unit(g: &Network) -> Result<Self> {
        Self::new(g, &vec![1.0; g.edge_count()])
    }

    pub fn size(&self) -> usize {
        self.laplacian.nrows()
    }

    pub fn eigenvalues(&self) -> &nalgebra::DVector<f64> {
        &self.eigen.eigenvalues
    }

    /// `φ(A)` through the eigendecomposition.
    pub fn apply(&self, phi: &dyn Fn(f64) -> f64) -> Result<DMatrix<f64>> {
        let vals: Vec<f64> = self.eigen.eigenvalues.iter().map(|&l| phi(l)).collect();
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return Err(Error::SpectralRange(format!("function value {v} on the spectrum")));
        }
        let v = &self.eigen.eigenvectors;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals));
        Ok(v * d * v.transpose())
    }

    /// `(1/n) tr φ(A)`.
    pub fn normalized_trace(&self, phi: &dyn Fn(f64) -> f64) -> Result<f64> {
        let mut s = 0.0;
        for &l in self.eigen.eigenvalues.iter() {
            let v = phi(l);
            if !v.is_finite() {
                return Err(Error::SpectralRange(format!("function value {v} at eigenvalue {l}")));
            }
            s += v;
        }
        Ok(s / self.size() as f64)
    }
}

/// `P_t = e^{−tA}`.
pub fn heat_kernel(w: &WeightedOperator, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", "must be finite and nonnegative"));
    }
    w.apply(&|l| (-t * l).exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnRow {
    pub t: f64,
    pub trace_lower: f64,
    pub trace_upper: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnComparison {
    pub rows: Vec<ReturnRow>,
    pub tolerance: f64,
}

impl ReturnComparison {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Compares `(1/n) tr e^{−tA₁}` against `(1/n) tr e^{−tA₂}` for coupled
/// weights `c₁ ≤ c₂`; the first should dominate.
pub fn return_comparison(base: &Network, c1: &[f64], c2: &[f64], t_grid: &[f64]) -> Result<ReturnComparison> {
    if c1.len() != base.edge_count() || c2.len() != base.edge_count() {
        return Err(Error::param("weights", "one weight per edge"));
    }
    if let Some(e) = (0..c1.len()).find(|&e| c1[e] > c2[e]) {
        return Err(Error::CouplingViolation { edge: e, lower: c1[e], upper: c2[e] });
    }
    let w1 = WeightedOperator::new(base, c1)?;
    let w2 = WeightedOperator::new(base, c2)?;
    let tolerance = 1e-10;
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t >= 0.0) {
            return Err(Error::param("t", "must be nonnegative"));
        }
        let a = w1.normalized_trace(&|l| (-t * l).exp())?;
        let b = w2.normalized_trace(&|l| (-t * l).exp())?;
        rows.push(ReturnRow { t, trace_lower: a, trace_upper: b, holds: a >= b - tolerance });
    }
    Ok(ReturnComparison { rows, tolerance })
}

/// Average over the ensemble of `(1/n) tr φ(A)`, i.e. of `φ(A)(o, o)`
/// under a uniform root, each network weighted equally.
pub fn spectral_trace(ensemble: &[WeightedOperator], phi: &(dyn Fn(f64) -> f64 + Sync)) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::param("ensemble", "empty"));
    }
    let traces: Vec<f64> = ensemble.par_iter().map(|w| w.normalized_trace(phi)).collect::<Result<_>>()?;
    Ok(traces.iter().sum::<f64>() / ensemble.len() as f64)
}

pub const DEFAULT_JUMP_CAP: usize = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct CtrwRun {
    pub jumps: usize,
    pub final_time: f64,
    /// Sum of the holding times of jumps `cap/10 + 1 ..= cap`.
    pub last_decade_time: f64,
    pub flagged: bool,
    pub trajectory: Option<Trajectory>,
}

/// Rate of the half-edge `h` at its owning vertex: the real mark there.
fn half_rate(ex: &Explorer, h: &crate::network::Half) -> Result<f64> {
    let m = ex.network().mark_here(h);
    let r = m.as_real().ok_or_else(|| Error::InvalidWeight { edge: h.edge, reason: "missing rate mark".into() })?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidWeight { edge: h.edge, reason: format!("rate {r}") });
    }
    Ok(r)
}

/// Minimal continuous-time walk: at `x`, wait `Exp(Σ rates)` then jump
/// along a half-edge chosen proportionally to its rate, where the rate of a
/// half-edge is the real mark at its departing end. Stops at `t_max`, after
/// `cap` jumps, or in a vertex with total rate 0. Flags a possible
/// explosion when `cap` jumps happen before `t_max` and the last decade of
/// holding times sums below `1e-6 · t_max`.
pub fn ctrw_simulate(ex: &mut Explorer, t_max: f64, cap: usize, rng: &mut Rng, record: bool) -> Result<CtrwRun> {
    if cap < 10 {
        return Err(Error::param("cap", "must be at least 10"));
    }
    let mut x = ex.root();
    let mut t = 0.0;
    let mut jumps = 0;
    let mut last_decade_time = 0.0;
    let mut traj = record.then(|| Trajectory { positions: vec![x], jump_times: Vec::new() });
    let decade_start = cap / 10;
    while jumps < cap {
        let halves: Vec<crate::network::Half> = ex.neighbors(x)?.to_vec();
        let rates: Vec<f64> = halves.iter().map(|h| half_rate(ex, h)).collect::<Result<_>>()?;
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            break;
        }
        let hold: f64 = Exp1.sample(rng);
        let hold = hold / total;
        if t + hold > t_max {
            t = t_max;
            break;
        }
        t += hold;
        jumps += 1;
        if jumps > decade_start {
            last_decade_time += hold;
        }
        let mut u = rng.random::<f64>() * total;
        let mut next = halves[halves.len() - 1].to;
        for (h, r) in halves.iter().zip(&rates) {
            if u < *r {
                next = h.to;
                break;
            }
            u -= r;
        }
        x = next;
        if let Some(tr) = traj.as_mut() {
            tr.positions.push(x);
            tr.jump_times.push(t);
        }
    }
    let flagged = jumps >= cap && t < t_max && last_decade_time < 1e-6 * t_max;
    Ok(CtrwRun { jumps, final_time: t, last_decade_time, flagged, trajectory: traj })
}

/// Fraction of `runs` continuous-time walks on draws of `s` that are flagged.
pub fn explosion_frequency(s: &dyn RootedSampler, t_max: f64, cap: usize, runs: usize, seed: u64) -> Result<f64> {
    let walk_seed = derive_seed(seed, WALK_STREAM);
    let flags: Vec<bool> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut ex = s.explore(seed, i)?;
            Ok(ctrw_simulate(&mut ex, t_max, cap, &mut stream(walk_seed, i), false)?.flagged)
        })
        .collect::<Result<_>>()?;
    Ok(flags.iter().filter(|&&f| f).count() as f64 / runs.max(1) as f64)
}
