//! Resolution of graph and noise arguments, and the `run-qv` config file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use qvol::protocol::{SweepMode, TrialConfig, DEFAULT_SHOTS, DEFAULT_Z, MIN_CIRCUITS};
use qvol::simulator::NoiseModel;
use qvol::transpiler::{BlockMode, CouplingGraph, PassPipeline};
use serde::{Deserialize, Serialize};

use crate::manifest::InputFile;

/// A graph given inline, as a preset/device name, or as a path to a JSON file.
#[derive(Debug, Clone)]
pub enum GraphSpec {
    Named(String),
    Inline(CouplingGraph),
}

/// A noise model given inline, as a device name, `ideal`, or a file path.
#[derive(Debug, Clone)]
pub enum NoiseSpec {
    Named(String),
    Inline(NoiseModel),
}

// Hand-written so that errors inside an inline object keep their field path.
macro_rules! name_or_inline {
    ($spec:ident, $inline:ty, $what:literal) => {
        impl<'de> Deserialize<'de> for $spec {
            fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
                struct V;
                impl<'de> serde::de::Visitor<'de> for V {
                    type Value = $spec;
                    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                        f.write_str($what)
                    }
                    fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<$spec, E> {
                        Ok($spec::Named(v.to_string()))
                    }
                    fn visit_map<A: serde::de::MapAccess<'de>>(self, map: A) -> std::result::Result<$spec, A::Error> {
                        <$inline>::deserialize(serde::de::value::MapAccessDeserializer::new(map)).map($spec::Inline)
                    }
                }
                de.deserialize_any(V)
            }
        }
    };
}

name_or_inline!(GraphSpec, CouplingGraph, "a graph name, file path or inline graph object");
name_or_inline!(NoiseSpec, NoiseModel, "a noise model name, file path or inline noise object");

/// Resolve a graph argument. A bare topology name (`grid`, `line`, `loop`,
/// `all-to-all`) is sized to `default_n`.
pub fn resolve_graph(spec: &GraphSpec, default_n: usize, inputs: &mut Vec<InputFile>) -> Result<CouplingGraph> {
    let name = match spec {
        GraphSpec::Inline(g) => return Ok(g.clone()),
        GraphSpec::Named(name) => name.trim(),
    };
    if Path::new(name).is_file() {
        let (text, input) = InputFile::read(name)?;
        inputs.push(input);
        return CouplingGraph::from_json(&text).with_context(|| format!("graph file {name}"));
    }
    if matches!(name, "grid" | "line" | "loop" | "ring" | "all-to-all" | "full") {
        return Ok(CouplingGraph::preset(&format!("{name}:{default_n}"))?);
    }
    Ok(CouplingGraph::preset(name)?)
}

pub fn resolve_noise(spec: &NoiseSpec, inputs: &mut Vec<InputFile>) -> Result<NoiseModel> {
    let name = match spec {
        NoiseSpec::Inline(n) => {
            n.rates()?;
            return Ok(n.clone());
        }
        NoiseSpec::Named(name) => name.trim(),
    };
    if Path::new(name).is_file() {
        let (text, input) = InputFile::read(name)?;
        inputs.push(input);
        return NoiseModel::from_json(&text).with_context(|| format!("noise file {name}"));
    }
    if matches!(name, "ideal" | "none") {
        return Ok(NoiseModel::ideal());
    }
    Ok(NoiseModel::device(name)?)
}

pub fn pipeline(name: &str, seed: u64, fb: Option<f64>, mirror: bool) -> Result<PassPipeline> {
    let mut p = PassPipeline::named(name, seed, fb)?;
    if mirror {
        let Some(fb) = fb.filter(|_| name == "approx") else {
            bail!("--mirror applies only to the approx pipeline");
        };
        p = PassPipeline::optimized(seed, BlockMode::Approx { basis_fidelity: fb }, true);
    }
    Ok(p)
}

/// Contents of a `run-qv` config file. Every field is optional; command-line
/// flags override file values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub schema_version: Option<u32>,
    pub widths: Option<Vec<usize>>,
    pub d_max: Option<usize>,
    pub circuits: Option<usize>,
    pub shots: Option<usize>,
    pub z: Option<f64>,
    pub seed: Option<u64>,
    pub graph: Option<GraphSpec>,
    pub noise: Option<NoiseSpec>,
    pub pipeline: Option<String>,
    pub fb: Option<f64>,
    pub mirror: Option<bool>,
    pub placement_search: Option<bool>,
}

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Parse a config file, reporting the field path of any error.
pub fn parse_run_config(text: &str, origin: &str) -> Result<RunConfigFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            anyhow::anyhow!("{origin}: {inner}")
        } else {
            anyhow::anyhow!("{origin}: at `{path}`: {inner}")
        }
    })?;
    if let Some(v) = cfg.schema_version {
        if v != CONFIG_SCHEMA_VERSION {
            bail!("{origin}: at `schema_version`: unsupported version {v} (expected {CONFIG_SCHEMA_VERSION})");
        }
    }
    Ok(cfg)
}

/// Fully resolved `run-qv` experiment; stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunPlan {
    pub widths: Vec<usize>,
    pub mode: SweepMode,
    pub trial: TrialConfig,
}

impl RunConfigFile {
    /// Overlay `other`'s set fields on `self`.
    pub fn overlay(mut self, other: RunConfigFile) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(schema_version, widths, d_max, circuits, shots, z, seed, graph, noise, pipeline, fb, mirror, placement_search);
        self
    }

    pub fn resolve(self, inputs: &mut Vec<InputFile>) -> Result<RunPlan> {
        let widths = self.widths.unwrap_or_else(|| vec![2, 3, 4]);
        if widths.is_empty() || widths.contains(&0) {
            bail!("widths must be a non-empty list of positive integers");
        }
        let max_w = *widths.iter().max().expect("non-empty");
        let seed = self.seed.unwrap_or(0);
        let graph_spec = self.graph.unwrap_or_else(|| GraphSpec::Named("all-to-all".into()));
        let graph = resolve_graph(&graph_spec, max_w, inputs)?;
        if graph.n() < max_w {
            bail!("graph has {} qubits but width {max_w} was requested", graph.n());
        }
        let noise = resolve_noise(&self.noise.unwrap_or_else(|| NoiseSpec::Named("ideal".into())), inputs)?;
        let pipeline = pipeline(self.pipeline.as_deref().unwrap_or("standard"), seed, self.fb, self.mirror.unwrap_or(false))?;
        let mut trial = TrialConfig::new(graph, pipeline, noise, self.circuits.unwrap_or(MIN_CIRCUITS), seed);
        trial.n_s = self.shots.unwrap_or(DEFAULT_SHOTS);
        trial.z = self.z.unwrap_or(DEFAULT_Z);
        trial.placement_search = self.placement_search.unwrap_or(false);
        trial.validate()?;
        let mode = match self.d_max {
            Some(d_max) => SweepMode::Full { d_max },
            None => SweepMode::Square,
        };
        Ok(RunPlan { widths, mode, trial })
    }
}
