mod commands;
mod manifest;
mod specs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qvol::protocol::{BisectionOptions, PassCriterion, ScalingParams, Topology, TrialConfig, MIN_CIRCUITS};
use qvol::simulator::NoiseModel;

use commands::{execute, Invocation};
use manifest::{InputFile, RunManifest, MANIFEST_FILE};
use specs::{GraphSpec, NoiseSpec, RunConfigFile};

#[derive(Parser)]
#[command(name = "qvol", version, about = "Quantum volume benchmarking toolkit")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs). Outputs do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded model circuits as QASM with heavy-set sidecars.
    Generate {
        #[arg(long, short)]
        m: usize,
        /// Depth; defaults to the width.
        #[arg(long, short)]
        d: Option<usize>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map QASM circuits onto a coupling graph.
    Transpile {
        /// A QASM file or a directory of them.
        input: PathBuf,
        /// Graph JSON file, preset (`grid:9`, `line:4`, `tokyo`, ...) or bare topology sized to the circuit.
        #[arg(long)]
        graph: String,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the heavy-output protocol over a range of widths.
    RunQv(RunQvArgs),
    /// Basis-gate application statistics for approximate synthesis.
    ApproxStats {
        #[arg(long)]
        fb: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        mirror: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 101)]
        cdf_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form volume estimate from a two-qubit error rate.
    Estimate {
        /// One or more error rates, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// grid, loop or all-to-all.
        #[arg(long, default_value = "grid")]
        topology: Topology,
        #[arg(long, default_value_t = 20)]
        m_max: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bisect the largest two-qubit error rate at which a square point passes.
    FindThreshold(FindThresholdArgs),
    /// Re-execute a manifest and check the outputs are byte-identical.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// standard, kak or approx.
    #[arg(long, default_value = "standard")]
    pipeline: String,
    /// Basis gate fidelity for the approx pipeline.
    #[arg(long)]
    fb: Option<f64>,
    /// Allow mirrored expansions (approx pipeline only).
    #[arg(long)]
    mirror: bool,
}

#[derive(Args)]
struct RunQvArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    /// Sweep depths 1..=d_max per width instead of only d = m.
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long)]
    graph: Option<String>,
    /// Noise JSON file, device name or `ideal`.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    pipeline: Option<String>,
    #[arg(long)]
    fb: Option<f64>,
    #[arg(long)]
    mirror: bool,
    #[arg(long)]
    circuits: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Search all connected regions for the best placement.
    #[arg(long)]
    placement_search: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    /// ĥ above 2/3.
    Point,
    /// Lower confidence bound above 2/3.
    Ci,
}

#[derive(Args)]
struct FindThresholdArgs {
    /// Target log2 of the volume; the square point (target, target) is tested.
    #[arg(long)]
    target: usize,
    #[arg(long, default_value = "grid")]
    graph: String,
    /// Base noise model; its readout rate and interpretation are kept.
    #[arg(long, default_value = "ideal")]
    noise: String,
    /// Override the readout error rate of the base noise model.
    #[arg(long)]
    eps_m: Option<f64>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = MIN_CIRCUITS)]
    circuits: usize,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "point")]
    criterion: CriterionArg,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    placement_search: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Replay found outputs that differ from the manifest.
#[derive(Debug)]
struct ReplayMismatch(Vec<String>);

impl std::fmt::Display for ReplayMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "replayed outputs differ from the manifest: {}", self.0.join(", "))
    }
}

impl std::error::Error for ReplayMismatch {}

fn qasm_inputs(path: &Path) -> Result<Vec<String>> {
    if !path.is_dir() {
        return Ok(vec![path.to_string_lossy().into_owned()]);
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(path).with_context(|| format!("cannot list {}", path.display()))? {
        let p = entry?.path();
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.ends_with(".qasm") && !name.ends_with(".transpiled.qasm") {
            files.push(p.to_string_lossy().into_owned());
        }
    }
    if files.is_empty() {
        bail!("no .qasm files in {}", path.display());
    }
    files.sort();
    Ok(files)
}

fn resolve(command: Command) -> Result<(Invocation, Vec<InputFile>, PathBuf)> {
    let mut inputs = Vec::new();
    let inv = match command {
        Command::Replay { .. } => unreachable!("handled separately"),
        Command::Generate { m, d, count, seed, out } => {
            return Ok((Invocation::Generate { m, d: d.unwrap_or(m), count, seed }, inputs, out));
        }
        Command::Transpile { input, graph, pipeline, seed, out } => {
            let mut files = Vec::new();
            let mut width = 0;
            for path in qasm_inputs(&input)? {
                let (text, file) = InputFile::read(&path)?;
                width = width.max(qvol::qasm::parse_qasm(&text).with_context(|| path.clone())?.width());
                files.push(file);
            }
            let graph = specs::resolve_graph(&GraphSpec::Named(graph), width, &mut inputs)?;
            let pipeline = specs::pipeline(&pipeline.pipeline, seed, pipeline.fb, pipeline.mirror)?;
            inputs.extend(files.iter().cloned());
            return Ok((Invocation::Transpile { inputs: files, graph, pipeline }, inputs, out));
        }
        Command::RunQv(a) => {
            let mut cfg = RunConfigFile::default();
            if let Some(path) = &a.config {
                let path = path.to_string_lossy().into_owned();
                let (text, file) = InputFile::read(&path)?;
                inputs.push(file);
                cfg = specs::parse_run_config(&text, &path)?;
            }
            let flags = RunConfigFile {
                widths: a.widths,
                d_max: a.d_max,
                circuits: a.circuits,
                shots: a.shots,
                z: a.z,
                seed: a.seed,
                graph: a.graph.map(GraphSpec::Named),
                noise: a.noise.map(NoiseSpec::Named),
                pipeline: a.pipeline,
                fb: a.fb,
                mirror: a.mirror.then_some(true),
                placement_search: a.placement_search.then_some(true),
                ..Default::default()
            };
            let plan = cfg.overlay(flags).resolve(&mut inputs)?;
            return Ok((Invocation::RunQv { plan }, inputs, a.out));
        }
        Command::ApproxStats { fb, samples, mirror, seed, cdf_points, out } => {
            return Ok((Invocation::ApproxStats { fb, samples, mirror, seed, cdf_points }, inputs, out));
        }
        Command::Estimate { eps, topology, m_max, out } => {
            (Invocation::Estimate { eps, topology, m_max, params: ScalingParams::default() }, out)
        }
        Command::FindThreshold(a) => {
            let graph = specs::resolve_graph(&GraphSpec::Named(a.graph), a.target, &mut inputs)?;
            let mut noise: NoiseModel = specs::resolve_noise(&NoiseSpec::Named(a.noise), &mut inputs)?;
            if let Some(em) = a.eps_m {
                noise.eps_m = em;
            }
            let pipeline = specs::pipeline(&a.pipeline.pipeline, a.seed, a.pipeline.fb, a.pipeline.mirror)?;
            let mut trial = TrialConfig::new(graph, pipeline, noise, a.circuits, a.seed);
            if let Some(s) = a.shots {
                trial.n_s = s;
            }
            trial.placement_search = a.placement_search;
            trial.validate()?;
            let d = BisectionOptions::default();
            let options = BisectionOptions {
                lo: a.lo.unwrap_or(d.lo),
                hi: a.hi.unwrap_or(d.hi),
                rel_tol: a.rel_tol.unwrap_or(d.rel_tol),
                criterion: match a.criterion {
                    CriterionArg::Point => PassCriterion::PointEstimate,
                    CriterionArg::Ci => PassCriterion::ConfidenceBound,
                },
            };
            (Invocation::FindThreshold { target: a.target, trial, options }, a.out)
        }
    };
    Ok((inv.0, inputs, inv.1))
}

fn report(summary: &[String], warnings: &[String], out: &Path, files: usize) {
    for line in summary {
        println!("{line}");
    }
    for w in warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {files} file(s) and {MANIFEST_FILE} to {}", out.display());
}

fn replay(manifest_path: &Path, out: &Path) -> Result<()> {
    let original = RunManifest::load(manifest_path)?;
    for input in &original.inputs {
        input.verify()?;
    }
    let ex = execute(&original.invocation)?;
    let (summary, warnings) = (ex.summary, ex.warnings);
    let replayed = ex.outputs.write(out, original.invocation.clone(), original.inputs.clone())?;
    report(&summary, &warnings, out, replayed.outputs.len());
    let mismatched: Vec<String> = original
        .outputs
        .iter()
        .filter(|o| !replayed.outputs.contains(o))
        .map(|o| o.file.clone())
        .chain(replayed.outputs.iter().filter(|o| !original.outputs.iter().any(|p| p.file == o.file)).map(|o| o.file.clone()))
        .collect();
    if !mismatched.is_empty() {
        return Err(ReplayMismatch(mismatched).into());
    }
    println!("all {} outputs match the manifest", replayed.outputs.len());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("cannot start the worker pool")?;
    }
    if let Command::Replay { manifest, out } = cli.command {
        return replay(&manifest, &out);
    }
    let (invocation, inputs, out) = resolve(cli.command)?;
    let ex = execute(&invocation)?;
    let (summary, warnings) = (ex.summary, ex.warnings);
    let manifest = ex.outputs.write(&out, invocation, inputs)?;
    report(&summary, &warnings, &out, manifest.outputs.len());
    Ok(())
}

fn is_numerical(e: &qvol::Error) -> bool {
    match e {
        qvol::Error::NotUnitary(_) | qvol::Error::Synthesis(_) | qvol::Error::Mapping(_) => true,
        qvol::Error::Circuit { source, .. } => is_numerical(source),
        _ => false,
    }
}

/// 2 for numerical or invariant failures, 1 for usage and configuration errors.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|c| {
        c.downcast_ref::<qvol::Error>().is_some_and(is_numerical) || c.downcast_ref::<ReplayMismatch>().is_some()
    });
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_errors_map_to_exit_two() {
        let nested = qvol::Error::Circuit { index: 3, source: Box::new(qvol::Error::Mapping("edge".into())) };
        assert_eq!(exit_code(&anyhow::Error::new(nested).context("run-qv")), 2);
        assert_eq!(exit_code(&anyhow::Error::new(qvol::Error::Config("x".into()))), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("missing file")), 1);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
