//! Sampler and graph selection from command-line flags.

use crate::CliError;
use clap::Args;
use num_traits::ToPrimitive;
use serde::Serialize;
use std::path::PathBuf;
use std::sync::Arc;
use umtp::gen::{
    agw_sampler, biased_root, canopy_sampler, line_sampler, ugw_sampler, uniform_root, ConfigModelSampler,
    OffspringDistribution, RootedSampler,
};
use umtp::walk::degree_biased;
use umtp::Network;

pub const SAMPLERS: &str = "ugw, agw, line, canopy, config, cycle, path, complete, star, graph, \
                            biased-center-p3, degree-biased-p3";

#[derive(Args, Clone, Debug, Serialize)]
pub struct SamplerArgs {
    /// One of: ugw, agw, line, canopy, config, cycle, path, complete, star,
    /// graph, biased-center-p3, degree-biased-p3.
    #[arg(long, default_value = "ugw")]
    pub sampler: String,
    /// Offspring law as `k:p,...` (ugw, agw, config).
    #[arg(long)]
    pub p: Option<String>,
    /// Vertex count for config and the finite families (star: leaf count).
    #[arg(long)]
    pub size: Option<usize>,
    /// Network JSON file for `--sampler graph`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Bias the root by its degree (needs bounded degrees).
    #[arg(long)]
    pub degree_biased: bool,
}

impl SamplerArgs {
    fn offspring(&self) -> Result<OffspringDistribution, CliError> {
        let p =
            self.p.as_deref().ok_or_else(|| CliError::data("p", format!("required by sampler `{}`", self.sampler)))?;
        OffspringDistribution::parse(p).map_err(|e| CliError::data("p", e))
    }

    fn size(&self) -> Result<usize, CliError> {
        match self.size {
            Some(n) if n >= 1 => Ok(n),
            Some(_) => Err(CliError::data("size", "must be at least 1")),
            None => Err(CliError::data("size", format!("required by sampler `{}`", self.sampler))),
        }
    }

    /// Builds the sampler; tree laws are truncated at `radius`.
    pub fn build(&self, radius: u32) -> Result<Arc<dyn RootedSampler>, CliError> {
        let data = |e| CliError::data("sampler", e);
        let s: Arc<dyn RootedSampler> = match self.sampler.as_str() {
            "ugw" => Arc::new(ugw_sampler(&self.offspring()?, radius).map_err(data)?),
            "agw" => Arc::new(agw_sampler(&self.offspring()?, radius).map_err(data)?),
            "line" => Arc::new(line_sampler(radius).map_err(data)?),
            "canopy" => Arc::new(canopy_sampler(radius).map_err(data)?),
            "config" => Arc::new(ConfigModelSampler { n: self.size()?, offspring: self.offspring()? }),
            "cycle" | "path" | "complete" | "star" => {
                let g = family(&self.sampler, self.size()?)?;
                Arc::new(uniform_root(g).map_err(data)?)
            }
            "graph" => {
                let path = self.graph.as_ref().ok_or_else(|| CliError::data("graph", "required by sampler `graph`"))?;
                Arc::new(uniform_root(read_network(path)?).map_err(data)?)
            }
            "biased-center-p3" => Arc::new(biased_root(Network::path(3), vec![0.0, 1.0, 0.0]).map_err(data)?),
            "degree-biased-p3" => Arc::new(biased_root(Network::path(3), vec![1.0, 2.0, 1.0]).map_err(data)?),
            other => {
                return Err(CliError::data("sampler", format!("unknown sampler `{other}`; expected one of {SAMPLERS}")))
            }
        };
        if self.degree_biased {
            return Ok(Arc::new(degree_biased(s).map_err(|e| CliError::data("degree-biased", e))?));
        }
        Ok(s)
    }

    /// Expected root degree for the unimodular trees with a closed form.
    pub fn tree_mean_degree(&self) -> Result<Option<f64>, CliError> {
        if self.degree_biased {
            return Ok(None);
        }
        Ok(match self.sampler.as_str() {
            "ugw" => self.offspring()?.ugw_expected_degree().to_f64(),
            "line" | "canopy" => Some(2.0),
            _ => None,
        })
    }
}

fn family(name: &str, n: usize) -> Result<Network, CliError> {
    let g = match name {
        "cycle" => Network::cycle(n),
        "path" => Network::path(n),
        "complete" => Network::complete(n),
        "star" => Network::star(n),
        _ => return Err(CliError::data("graph", format!("unknown family `{name}`"))),
    };
    Ok(g)
}

pub fn read_network(path: &PathBuf) -> Result<Network, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::data("graph", format!("{}: {e}", path.display())))?;
    Network::from_json_str(&text).map_err(|e| CliError::data("graph", e))
}

/// Parses `family:n` items (`cycle:100`, `complete:10`, `tree:3:4`) or a
/// path to a network JSON file.
pub fn parse_graph(item: &str) -> Result<Network, CliError> {
    let parts: Vec<&str> = item.split(':').collect();
    let num = |s: &str| s.parse::<usize>().map_err(|_| CliError::data("graphs", format!("bad size in `{item}`")));
    match parts.as_slice() {
        ["tree", d, depth] => Ok(Network::regular_tree(num(d)?, num(depth)? as u32)),
        [name @ ("cycle" | "path" | "complete" | "star"), n] => family(name, num(n)?),
        [file] => read_network(&PathBuf::from(file)),
        _ => Err(CliError::data("graphs", format!("expected family:n or a file, got `{item}`"))),
    }
}

pub fn parse_list<T: std::str::FromStr>(field: &'static str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| CliError::data(field, format!("cannot parse `{t}`"))))
        .collect()
}
