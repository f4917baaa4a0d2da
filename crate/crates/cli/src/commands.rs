use crate::sampler::{parse_graph, parse_list, SamplerArgs};
use crate::{CliError, Outcome, Verdict};
use clap::Args;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use umtp::canon::canonical_key;
use umtp::forest::{msf_degree_stats, ust_degree_stats};
use umtp::gen::{config_model, OffspringDistribution, RootedSampler};
use umtp::mtp::{
    ball_distribution, expdeg_floor_check, iota_grid, mtp_monte_carlo_test, transport_radius, AdjacentIndicator,
    EmpiricalBallDistribution, KeyHashed, MassTransport, NeighborSplit,
};
use umtp::perc::pc_estimate;
use umtp::rng::{derive_seed, stream};
use umtp::stats::{Estimate, DEFAULT_PERMUTATIONS};
use umtp::walk::{
    heat_kernel, return_comparison, reversibility_test, speed_estimate, stationarity_test, tree_speed_formula, walk,
    Canonical, Kernel, Simple, WeightedOperator,
};
use umtp::{Network, RootedNetwork};

fn resolved(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn check_level(alpha: f64) -> Result<(), CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::data("alpha", "must lie in (0, 1)"));
    }
    Ok(())
}

fn positive(field: &'static str, n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::data(field, "must be positive"));
    }
    Ok(())
}

fn verdict(rejected: bool) -> Verdict {
    if rejected {
        Verdict::Rejected
    } else {
        Verdict::Accepted
    }
}

/// `0.05, 0.10, ..., 1` unless given.
fn p_grid(grid: &Option<String>) -> Result<Vec<f64>, CliError> {
    let g = match grid {
        Some(s) => parse_list("grid", s)?,
        None => (1..=20).map(|i| i as f64 / 20.0).collect(),
    };
    if g.is_empty() || g.iter().any(|p| !(0.0..=1.0).contains(p)) || g.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::data("grid", "need an increasing list in [0, 1]"));
    }
    Ok(g)
}

fn t_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let t: Vec<f64> = parse_list("t", s)?;
    if t.is_empty() || t.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(CliError::data("t", "need nonnegative times"));
    }
    Ok(t)
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Truncation radius of tree samplers.
    #[arg(long, default_value_t = 2)]
    pub radius: u32,
    /// Number of draws.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Radius of the ball histogram.
    #[arg(long, default_value_t = 1)]
    pub ball_radius: u32,
}

pub fn sample(a: &SampleArgs, seed: u64) -> Result<Outcome, CliError> {
    positive("n", a.n)?;
    let s = a.sampler.build(a.radius)?;
    let draws: Vec<Value> = (0..a.n as u64).map(|i| Ok(s.draw(seed, i)?.to_json())).collect::<Result<_, CliError>>()?;
    let hist = ball_distribution(s.as_ref(), a.ball_radius, a.n, seed)?;
    Ok(Outcome {
        resolved: resolved(&[("descriptor", s.descriptor())]),
        csv: hist.to_csv(),
        result: json!({"histogram": hist, "draws": draws}),
        verdict: Verdict::Done,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct MtpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Truncation radius [default: what the mass function needs]
    #[arg(long)]
    pub radius: Option<u32>,
    /// neighbor-split, adjacent or key-hashed.
    #[arg(long, default_value = "neighbor-split")]
    pub mass: String,
    /// Radius of the key-hashed mass function.
    #[arg(long, default_value_t = 1)]
    pub mass_radius: u32,
    #[arg(long, default_value_t = 0)]
    pub salt: u64,
    #[arg(long, default_value_t = 3)]
    pub levels: u32,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    /// Rejection level.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
}

pub fn mtp_test(a: &MtpArgs, seed: u64) -> Result<Outcome, CliError> {
    check_level(a.alpha)?;
    positive("n", a.n)?;
    let f: Box<dyn MassTransport> = match a.mass.as_str() {
        "neighbor-split" => Box::new(NeighborSplit),
        "adjacent" => Box::new(AdjacentIndicator),
        "key-hashed" => Box::new(KeyHashed { radius: a.mass_radius, salt: a.salt, levels: a.levels.max(1) }),
        other => return Err(CliError::data("mass", format!("unknown mass function `{other}`"))),
    };
    let radius = a.radius.unwrap_or_else(|| transport_radius(f.as_ref()));
    let s = a.sampler.build(radius)?;
    let rep = mtp_monte_carlo_test(s.as_ref(), f.as_ref(), a.n, seed, a.permutations)?;
    let rejected = rep.rejects(a.alpha);
    let csv = format!(
        "function,samples,lhs_mean,rhs_mean,mean_difference,std_err,p_value,permutations,rejected\n{},{},{},{},{},{},{},{},{}\n",
        field(&rep.function),
        rep.samples,
        rep.lhs_mean,
        rep.rhs_mean,
        rep.mean_difference,
        rep.std_err,
        rep.p_value,
        rep.permutations,
        rejected
    );
    Ok(Outcome {
        resolved: resolved(&[("truncation_radius", json!(radius)), ("descriptor", s.descriptor())]),
        result: serde_json::to_value(&rep).expect("report serializes"),
        csv,
        verdict: verdict(rejected),
    })
}

/// A CSV field, quoted when it holds a comma or a quote.
fn field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ConvergeArgs {
    /// Offspring law as `k:p,...`.
    #[arg(long)]
    pub p: String,
    /// Graph sizes to compare.
    #[arg(long, default_value = "100,1000,10000")]
    pub sizes: String,
    /// Roots per size (every vertex of each generated graph is a root).
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    /// Largest accepted TV distance at the last size.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
}

/// The radius-1 ball law of UGW: a star with `k` leaves with probability
/// `r_k`.
fn ugw_star_law(p: &OffspringDistribution) -> BTreeMap<umtp::CanonicalKey, f64> {
    p.config_ball_law()
        .iter()
        .enumerate()
        .filter_map(|(k, r)| {
            let r = num_traits::ToPrimitive::to_f64(r)?;
            (r > 0.0).then(|| (canonical_key(&RootedNetwork::new(Network::star(k), 0).expect("star")), r))
        })
        .collect()
}

pub fn converge(a: &ConvergeArgs, seed: u64) -> Result<Outcome, CliError> {
    positive("n", a.n)?;
    let p = OffspringDistribution::parse(&a.p).map_err(|e| CliError::data("p", e))?;
    let sizes: Vec<usize> = parse_list("sizes", &a.sizes)?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(CliError::data("sizes", "need positive sizes"));
    }
    let law = ugw_star_law(&p);
    let mut rows = Vec::new();
    let mut csv = String::from("size,graphs,roots,tv\n");
    for &size in &sizes {
        let graphs = a.n.div_ceil(size);
        let s = derive_seed(seed, size as u64);
        let hists: Vec<EmpiricalBallDistribution> = (0..graphs as u64)
            .into_par_iter()
            .map(|i| {
                let mut h = EmpiricalBallDistribution::new(1);
                h.add_all_roots(&config_model(size, &p, &mut stream(s, i))?);
                Ok(h)
            })
            .collect::<Result<_, umtp::Error>>()?;
        let mut h = EmpiricalBallDistribution::new(1);
        for x in &hists {
            h.merge(x)?;
        }
        let tv = h.tv_to_law(&law);
        csv.push_str(&format!("{size},{graphs},{},{tv}\n", h.total));
        rows.push(json!({"size": size, "graphs": graphs, "roots": h.total, "tv": tv}));
    }
    let tvs: Vec<f64> = rows.iter().map(|r| r["tv"].as_f64().unwrap_or(f64::NAN)).collect();
    let decreasing = tvs.windows(2).all(|w| w[1] < w[0]);
    let last = tvs[tvs.len() - 1];
    Ok(Outcome {
        resolved: Map::new(),
        result: json!({"rows": rows, "decreasing": decreasing, "last_within_tolerance": last <= a.tolerance}),
        csv,
        verdict: verdict(!(decreasing && last <= a.tolerance)),
    })
}

#[derive(Args, Debug, Serialize)]
pub struct WalkArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Truncation radius [default: ball radius plus steps]
    #[arg(long)]
    pub radius: Option<u32>,
    /// simple or canonical.
    #[arg(long, default_value = "simple")]
    pub kernel: String,
    /// stationarity or reversibility.
    #[arg(long, default_value = "stationarity")]
    pub test: String,
    /// Walk length k for the stationarity test.
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub ball_radius: u32,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Also write the walk of draw 0 as CSV (step,vertex,time).
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

pub fn walk_test(a: &WalkArgs, seed: u64) -> Result<Outcome, CliError> {
    check_level(a.alpha)?;
    positive("n", a.n)?;
    let kernel: Box<dyn Kernel> = match a.kernel.as_str() {
        "simple" => Box::new(Simple),
        "canonical" => Box::new(Canonical),
        other => return Err(CliError::data("kernel", format!("unknown kernel `{other}`"))),
    };
    let steps = match a.test.as_str() {
        "stationarity" => a.steps,
        "reversibility" => 1,
        other => return Err(CliError::data("test", format!("unknown test `{other}`"))),
    };
    positive("steps", steps)?;
    let radius = a.radius.unwrap_or(a.ball_radius + steps as u32);
    let s = a.sampler.build(radius)?;
    let rep = if a.test == "stationarity" {
        stationarity_test(s.as_ref(), kernel.as_ref(), a.ball_radius, steps, a.n, seed, a.permutations)?
    } else {
        reversibility_test(s.as_ref(), kernel.as_ref(), a.ball_radius, a.n, seed, a.permutations)?
    };
    if let Some(path) = &a.trajectory {
        let mut ex = s.explore(seed, 0)?;
        let t = walk(&mut ex, kernel.as_ref(), steps, &mut stream(derive_seed(seed, 0x7472_616a), 0))?;
        std::fs::write(path, t.to_csv())?;
    }
    let rejected = rep.rejects(a.alpha);
    let csv = format!(
        "kernel,test,steps,ball_radius,samples,categories,tv,p_value,permutations,rejected\n{},{},{},{},{},{},{},{},{},{}\n",
        rep.kernel, a.test, steps, a.ball_radius, rep.samples, rep.categories, rep.tv, rep.p_value, rep.permutations, rejected
    );
    Ok(Outcome {
        resolved: resolved(&[("truncation_radius", json!(radius)), ("descriptor", s.descriptor())]),
        result: serde_json::to_value(&rep).expect("report serializes"),
        csv,
        verdict: verdict(rejected),
    })
}

#[derive(Args, Debug, Serialize)]
pub struct SpeedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Truncation radius [default: steps]
    #[arg(long)]
    pub radius: Option<u32>,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

pub fn speed(a: &SpeedArgs, seed: u64) -> Result<Outcome, CliError> {
    positive("steps", a.steps)?;
    positive("trials", a.trials)?;
    let radius = a.radius.unwrap_or(a.steps as u32);
    let s = a.sampler.build(radius)?;
    let rep = speed_estimate(s.as_ref(), a.steps, a.trials, seed)?;
    let formula = a.sampler.tree_mean_degree()?.map(tree_speed_formula).transpose()?;
    let formula_csv = formula.map(|f| f.to_string()).unwrap_or_default();
    Ok(Outcome {
        resolved: resolved(&[("truncation_radius", json!(radius)), ("descriptor", s.descriptor())]),
        csv: format!(
            "steps,trials,mean,std_err,formula\n{},{},{},{},{formula_csv}\n",
            a.steps, a.trials, rep.estimate.mean, rep.estimate.std_err
        ),
        result: json!({"steps": rep.steps, "estimate": rep.estimate, "formula": formula}),
        verdict: Verdict::Done,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct HeatArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Truncation radius of tree samplers.
    #[arg(long, default_value_t = 3)]
    pub radius: u32,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Times at which `p_t(o, o)` is reported.
    #[arg(long, default_value = "0.5,1,2,4")]
    pub t: String,
}

pub fn heat(a: &HeatArgs, seed: u64) -> Result<Outcome, CliError> {
    positive("n", a.n)?;
    let ts = t_grid(&a.t)?;
    let s = a.sampler.build(a.radius)?;
    let per_draw: Vec<Vec<f64>> = (0..a.n as u64)
        .into_par_iter()
        .map(|i| {
            let g = s.draw(seed, i)?;
            let op = WeightedOperator::unit(g.network())?;
            ts.iter().map(|&t| Ok(heat_kernel(&op, t)?[(g.root(), g.root())])).collect()
        })
        .collect::<Result<_, umtp::Error>>()?;
    let mut rows = Vec::new();
    let mut csv = String::from("t,mean,std_err,draws\n");
    for (j, &t) in ts.iter().enumerate() {
        let xs: Vec<f64> = per_draw.iter().map(|d| d[j]).collect();
        let e = Estimate::from_samples(&xs);
        csv.push_str(&format!("{t},{},{},{}\n", e.mean, e.std_err, e.samples));
        rows.push(json!({"t": t, "return_probability": e}));
    }
    Ok(Outcome {
        resolved: resolved(&[("descriptor", s.descriptor())]),
        result: json!({"rows": rows}),
        csv,
        verdict: Verdict::Done,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct ReturnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Truncation radius of tree samplers.
    #[arg(long, default_value_t = 3)]
    pub radius: u32,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value = "0.5,1,2,4,8")]
    pub t: String,
    /// Lower conductances are uniform on [low, 1].
    #[arg(long, default_value_t = 0.5)]
    pub low: f64,
    /// Upper conductances add a uniform amount from [0, spread].
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
}

pub fn return_compare(a: &ReturnArgs, seed: u64) -> Result<Outcome, CliError> {
    positive("n", a.n)?;
    let ts = t_grid(&a.t)?;
    if !(a.low > 0.0 && a.low <= 1.0) {
        return Err(CliError::data("low", "must lie in (0, 1]"));
    }
    if !(a.spread >= 0.0 && a.spread.is_finite()) {
        return Err(CliError::data("spread", "must be nonnegative"));
    }
    let s = a.sampler.build(a.radius)?;
    let weight_seed = derive_seed(seed, 0x636f_6e64);
    let runs: Vec<umtp::walk::ReturnComparison> = (0..a.n as u64)
        .into_par_iter()
        .map(|i| {
            let g = s.draw(seed, i)?;
            let mut rng = stream(weight_seed, i);
            let m = g.network().edge_count();
            let c1: Vec<f64> = (0..m).map(|_| a.low + (1.0 - a.low) * rng.random::<f64>()).collect();
            let c2: Vec<f64> = c1.iter().map(|c| c + a.spread * rng.random::<f64>()).collect();
            return_comparison(g.network(), &c1, &c2, &ts)
        })
        .collect::<Result<_, umtp::Error>>()?;
    let mut rows = Vec::new();
    let mut csv = String::from("t,trace_lower,trace_upper,violations\n");
    let mut total = 0;
    for (j, &t) in ts.iter().enumerate() {
        let lower = runs.iter().map(|r| r.rows[j].trace_lower).sum::<f64>() / a.n as f64;
        let upper = runs.iter().map(|r| r.rows[j].trace_upper).sum::<f64>() / a.n as f64;
        let violations = runs.iter().filter(|r| !r.rows[j].holds).count();
        total += violations;
        csv.push_str(&format!("{t},{lower},{upper},{violations}\n"));
        rows.push(json!({"t": t, "trace_lower": lower, "trace_upper": upper, "violations": violations}));
    }
    Ok(Outcome {
        resolved: resolved(&[("descriptor", s.descriptor())]),
        result: json!({"rows": rows, "tolerance": runs.first().map(|r| r.tolerance), "violations": total}),
        csv,
        verdict: verdict(total > 0),
    })
}

#[derive(Args, Debug, Serialize)]
pub struct UstArgs {
    /// Comma-separated `family:n` items (cycle, path, complete, star,
    /// tree:d:depth) or network JSON files.
    #[arg(long, default_value = "cycle:10,cycle:100,cycle:1000")]
    pub graphs: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub ball_radius: u32,
    /// Rejects when a mean tree degree is more than z standard errors from
    /// `2 − 2/n`.
    #[arg(long, default_value_t = 4.0)]
    pub z: f64,
}

pub fn ust(a: &UstArgs, seed: u64) -> Result<Outcome, CliError> {
    positive("n", a.n)?;
    let graphs: Vec<Network> = a
        .graphs
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_graph(t.trim()))
        .collect::<Result<_, _>>()?;
    if graphs.is_empty() {
        return Err(CliError::data("graphs", "need at least one graph"));
    }
    let rep = ust_degree_stats(&graphs, a.n, a.ball_radius, seed)?;
    let mut csv = String::from("vertices,draws,mean_degree,std_err,exact_mean_degree,tv_to_last\n");
    let mut rejected = false;
    for g in &rep.graphs {
        let d = &g.degree;
        rejected |= (d.mean - g.exact_mean_degree).abs() > a.z * d.std_err + 1e-12;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            g.vertices, g.draws, d.mean, d.std_err, g.exact_mean_degree, g.tv_to_last
        ));
    }
    Ok(Outcome {
        resolved: Map::new(),
        result: serde_json::to_value(&rep).expect("report serializes"),
        csv,
        verdict: verdict(rejected),
    })
}

#[derive(Args, Debug, Serialize)]
pub struct MsfArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Ball radius R of the wired rule; tree samplers are truncated at R + 1.
    #[arg(long, default_value_t = 4)]
    pub radius: u32,
    #[arg(long, default_value_t = 1)]
    pub ball_radius: u32,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
}

pub fn msf(a: &MsfArgs, seed: u64) -> Result<Outcome, CliError> {
    positive("n", a.n)?;
    let s = a.sampler.build(a.radius + 1)?;
    let rep = msf_degree_stats(s.as_ref(), a.radius, a.ball_radius, a.n, seed)?;
    Ok(Outcome {
        resolved: resolved(&[("truncation_radius", json!(a.radius + 1)), ("descriptor", s.descriptor())]),
        csv: format!(
            "radius,draws,mean_degree,std_err\n{},{},{},{}\n",
            rep.radius, rep.draws, rep.degree.mean, rep.degree.std_err
        ),
        result: serde_json::to_value(&rep).expect("report serializes"),
        verdict: Verdict::Done,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct PercArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Survival radius R, also the truncation radius.
    #[arg(long, default_value_t = 8)]
    pub radius: u32,
    /// Increasing list of p values [default: 0.05, 0.10, ..., 1]
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Crossing level as a fraction of the survival at the largest p.
    #[arg(long, default_value_t = 0.5)]
    pub level: f64,
}

pub fn perc(a: &PercArgs, seed: u64) -> Result<Outcome, CliError> {
    positive("n", a.n)?;
    let grid = p_grid(&a.grid)?;
    let s = a.sampler.build(a.radius)?;
    let est = pc_estimate(s.as_ref(), a.radius, &grid, a.n, seed, a.level)?;
    Ok(Outcome {
        resolved: resolved(&[("grid", json!(grid)), ("descriptor", s.descriptor())]),
        csv: est.to_csv(),
        result: serde_json::to_value(&est).expect("report serializes"),
        verdict: Verdict::Done,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct IsoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    /// Truncation radius of tree samplers.
    #[arg(long, default_value_t = 4)]
    pub radius: u32,
    /// Increasing list of p values [default: 0.05, 0.10, ..., 1]
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
}

pub fn iso(a: &IsoArgs, seed: u64) -> Result<Outcome, CliError> {
    positive("n", a.n)?;
    let grid = p_grid(&a.grid)?;
    let s: Arc<dyn RootedSampler> = a.sampler.build(a.radius)?;
    let iota = iota_grid(s.as_ref(), &grid, a.n, seed)?;
    let expdeg = expdeg_floor_check(s.as_ref(), a.n, seed)?;
    let mut csv = String::from("p,mean,std_err,escaped\n");
    for q in &iota.points {
        csv.push_str(&format!("{},{},{},{}\n", q.p, q.boundary.mean, q.boundary.std_err, q.escaped));
    }
    Ok(Outcome {
        resolved: resolved(&[("grid", json!(grid)), ("descriptor", s.descriptor())]),
        result: json!({"iota": iota, "expected_degree": expdeg}),
        csv,
        verdict: Verdict::Done,
    })
}
