//! Resolved command invocations and their execution.
//!
//! An [`Invocation`] holds every option after defaults, presets and files
//! have been resolved, so executing it again reproduces the same bytes.

use anyhow::{bail, Context, Result};
use qvol::circuit::Circuit;
use qvol::model::{batch_seed, build_model_circuit, ModelCircuitSpec};
use qvol::protocol::{
    estimate_threshold, estimate_volume, find_threshold_eps, run_qv_sweep, BisectionOptions, ScalingParams,
    ThresholdResult, Topology, TrialConfig, VolumeEstimate, REPORT_SCHEMA_VERSION,
};
use qvol::qasm::{emit_qasm, parse_qasm};
use qvol::simulator::heavy_set;
use qvol::transpiler::{run_pipeline, unroll, BlockReport, CouplingGraph, PassPipeline};
use qvol::weyl::{approx_stats_from, cdf_f2, cdf_f2m, f2, f2m, haar_weyl_samples, ApproxStats};
use serde::{Deserialize, Serialize};

use crate::manifest::{sha256_hex, InputFile, Outputs};
use crate::specs::RunPlan;

pub const OUTPUT_SCHEMA_VERSION: u32 = REPORT_SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Invocation {
    Generate {
        m: usize,
        d: usize,
        count: usize,
        seed: u64,
    },
    Transpile {
        inputs: Vec<InputFile>,
        graph: CouplingGraph,
        pipeline: PassPipeline,
    },
    RunQv {
        plan: RunPlan,
    },
    ApproxStats {
        fb: f64,
        samples: usize,
        mirror: bool,
        seed: u64,
        cdf_points: usize,
    },
    Estimate {
        eps: Vec<f64>,
        topology: Topology,
        m_max: usize,
        params: ScalingParams,
    },
    FindThreshold {
        target: usize,
        trial: TrialConfig,
        options: BisectionOptions,
    },
}

/// Result of executing an invocation: files to write plus a human summary.
pub struct Execution {
    pub outputs: Outputs,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
}

impl Execution {
    fn new() -> Self {
        Execution { outputs: Outputs::default(), summary: Vec::new(), warnings: Vec::new() }
    }
}

pub fn execute(inv: &Invocation) -> Result<Execution> {
    match inv {
        Invocation::Generate { m, d, count, seed } => generate(*m, *d, *count, *seed),
        Invocation::Transpile { inputs, graph, pipeline } => transpile(inputs, graph, pipeline),
        Invocation::RunQv { plan } => run_qv(plan),
        Invocation::ApproxStats { fb, samples, mirror, seed, cdf_points } => {
            approx_stats(*fb, *samples, *mirror, *seed, *cdf_points)
        }
        Invocation::Estimate { eps, topology, m_max, params } => estimate(eps, *topology, *m_max, params),
        Invocation::FindThreshold { target, trial, options } => find_threshold(*target, trial, options),
    }
}

/// Stable hash of a resolved configuration.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    sha256_hex(serde_json::to_string(value).expect("config serializes").as_bytes())
}

#[derive(Serialize)]
struct HeavySidecar {
    schema_version: u32,
    index: usize,
    seed: u64,
    m: usize,
    d: usize,
    median: f64,
    ideal_heavy_probability: f64,
    heavy_outputs: Vec<String>,
}

fn generate(m: usize, d: usize, count: usize, seed: u64) -> Result<Execution> {
    let mut ex = Execution::new();
    let digits = count.saturating_sub(1).to_string().len().max(4);
    for index in 0..count {
        let circuit_seed = batch_seed(seed, index);
        let model = build_model_circuit(&ModelCircuitSpec::new(m, d, circuit_seed)?)?;
        let hs = heavy_set(&model)?;
        let stem = format!("circuit_{index:0digits$}");
        ex.outputs.add(format!("{stem}.qasm"), emit_qasm(&unroll(&model)?)?);
        ex.outputs.add_json(
            format!("{stem}.heavy.json"),
            &HeavySidecar {
                schema_version: OUTPUT_SCHEMA_VERSION,
                index,
                seed: circuit_seed,
                m,
                d,
                median: hs.median,
                ideal_heavy_probability: hs.ideal_heavy_probability,
                heavy_outputs: hs.bitstrings(),
            },
        );
    }
    ex.summary.push(format!("generated {count} model circuits (m = {m}, d = {d})"));
    Ok(ex)
}

#[derive(Serialize)]
struct MappingReport<'a> {
    schema_version: u32,
    source: &'a str,
    graph_qubits: usize,
    output_permutation: &'a [usize],
    input_relabeling: &'a [usize],
    swaps_inserted: usize,
    cx_before: usize,
    cx_after: usize,
    blocks: &'a [BlockReport],
}

#[derive(Serialize)]
struct TranspileSummary {
    schema_version: u32,
    pipeline: PassPipeline,
    circuits: usize,
    mean_cx_before: f64,
    mean_cx_after: f64,
    total_swaps: usize,
}

fn stem(path: &str) -> String {
    std::path::Path::new(path).file_stem().map_or_else(|| "circuit".into(), |s| s.to_string_lossy().into_owned())
}

fn transpile(inputs: &[InputFile], graph: &CouplingGraph, pipeline: &PassPipeline) -> Result<Execution> {
    let mut ex = Execution::new();
    let (mut before, mut after, mut swaps) = (0usize, 0usize, 0usize);
    for input in inputs {
        let text = input.verify()?;
        let parsed = parse_qasm(&text).with_context(|| format!("{}", input.path))?;
        if parsed.width() > graph.n() {
            bail!("{}: circuit width {} exceeds the graph's {} qubits", input.path, parsed.width(), graph.n());
        }
        let circuit = if parsed.width() < graph.n() {
            let mut wide = Circuit::from_gates(graph.n(), parsed.gates().iter().cloned())?;
            let mut perm = parsed.output_permutation().to_vec();
            perm.extend(parsed.width()..graph.n());
            wide.set_output_permutation(perm)?;
            wide
        } else {
            parsed
        };
        let cx_before = unroll(&circuit)?.cx_count();
        let out = run_pipeline(&circuit, graph, pipeline).with_context(|| format!("{}", input.path))?;
        let map = &out.mapping;
        let name = stem(&input.path);
        ex.outputs.add(format!("{name}.transpiled.qasm"), emit_qasm(&map.circuit)?);
        ex.outputs.add_json(
            format!("{name}.mapping.json"),
            &MappingReport {
                schema_version: OUTPUT_SCHEMA_VERSION,
                source: &input.path,
                graph_qubits: graph.n(),
                output_permutation: &map.output_permutation,
                input_relabeling: &map.input_relabeling,
                swaps_inserted: map.swaps_inserted,
                cx_before,
                cx_after: map.circuit.cx_count(),
                blocks: &out.blocks,
            },
        );
        before += cx_before;
        after += map.circuit.cx_count();
        swaps += map.swaps_inserted;
    }
    let n = inputs.len().max(1) as f64;
    let summary = TranspileSummary {
        schema_version: OUTPUT_SCHEMA_VERSION,
        pipeline: pipeline.clone(),
        circuits: inputs.len(),
        mean_cx_before: before as f64 / n,
        mean_cx_after: after as f64 / n,
        total_swaps: swaps,
    };
    ex.summary.push(format!(
        "transpiled {} circuit(s): mean CX {:.2} -> {:.2}, {} swaps inserted",
        summary.circuits, summary.mean_cx_before, summary.mean_cx_after, summary.total_swaps
    ));
    ex.outputs.add_json("summary.json", &summary);
    Ok(ex)
}

fn run_qv(plan: &RunPlan) -> Result<Execution> {
    let mut ex = Execution::new();
    let mut report = run_qv_sweep(&plan.trial, &plan.widths, plan.mode)?;
    report.metadata.config_hash = Some(config_hash(plan));
    for r in &report.results {
        ex.summary.push(format!(
            "m = {} d = {}: h = {:.4} (ci_lower {:.4}, ideal {:.4}, mean CX {:.1}) {}",
            r.m,
            r.d,
            r.h_hat,
            r.ci_lower,
            r.ideal_heavy_mean,
            r.mean_cx,
            if r.passed { "pass" } else { "fail" }
        ));
    }
    ex.summary.push(format!("log2 V_Q = {} (V_Q = {})", report.log2_vq, 1u64 << report.log2_vq));
    let mut json = report.to_json();
    json.push('\n');
    ex.outputs.add("report.json", json);
    ex.outputs.add("report.csv", report.to_csv());
    Ok(ex)
}

#[derive(Serialize)]
struct ApproxReport {
    schema_version: u32,
    seed: u64,
    stats: ApproxStats,
    median_f2: f64,
    median_f2m: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

fn approx_stats(fb: f64, samples: usize, mirror: bool, seed: u64, cdf_points: usize) -> Result<Execution> {
    if !(fb > 0.0 && fb <= 1.0) {
        bail!("basis fidelity {fb} outside (0, 1]");
    }
    if samples == 0 || cdf_points < 2 {
        bail!("need at least one sample and two CDF points");
    }
    let mut ex = Execution::new();
    let coords = haar_weyl_samples(samples, seed);
    let stats = approx_stats_from(&coords, fb, mirror);
    let mut v2: Vec<f64> = coords.iter().map(|&w| f2(w)).collect();
    let mut v2m: Vec<f64> = coords.iter().map(|&w| f2m(w)).collect();
    v2.sort_by(f64::total_cmp);
    v2m.sort_by(f64::total_cmp);
    let mut csv = String::from("fidelity,cdf_f2,empirical_f2,cdf_f2m,empirical_f2m\n");
    for k in 0..cdf_points {
        let f = 0.6 + 0.4 * k as f64 / (cdf_points - 1) as f64;
        let emp = |v: &[f64]| v.partition_point(|&x| x < f) as f64 / v.len() as f64;
        csv.push_str(&format!("{f},{},{},{},{}\n", cdf_f2(f), emp(&v2), cdf_f2m(f), emp(&v2m)));
    }
    let report = ApproxReport {
        schema_version: OUTPUT_SCHEMA_VERSION,
        seed,
        median_f2: median(v2),
        median_f2m: median(v2m),
        stats,
    };
    let s = &report.stats;
    ex.summary.push(format!(
        "F_b = {fb}, mirror = {mirror}: applications 0/1/2/3 = {:.2}/{:.2}/{:.2}/{:.2} %, mean {:.3}",
        100.0 * s.fractions[0],
        100.0 * s.fractions[1],
        100.0 * s.fractions[2],
        100.0 * s.fractions[3],
        s.mean_applications
    ));
    ex.summary.push(format!(
        "F_e = {:.5}, infidelity ratio {}",
        s.effective_fidelity,
        s.infidelity_ratio.map_or("n/a".into(), |r| format!("{r:.3}"))
    ));
    ex.outputs.add_json("approx_stats.json", &report);
    ex.outputs.add("cdf.csv", csv);
    Ok(ex)
}

#[derive(Serialize)]
struct ThresholdRow {
    target: usize,
    eps: f64,
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    schema_version: u32,
    params: &'a ScalingParams,
    estimates: Vec<VolumeEstimate>,
    thresholds: Vec<ThresholdRow>,
}

fn estimate(eps: &[f64], topology: Topology, m_max: usize, params: &ScalingParams) -> Result<Execution> {
    if eps.is_empty() {
        bail!("no error rates given");
    }
    let mut ex = Execution::new();
    let estimates = eps.iter().map(|&e| estimate_volume(e, topology, params, m_max)).collect::<qvol::Result<Vec<_>>>()?;
    let mut csv = String::from("eps,topology,m,eps_eff,depth,log2_vq\n");
    let topo = serde_json::to_value(topology)?.as_str().unwrap_or_default().to_string();
    for est in &estimates {
        for r in &est.rows {
            csv.push_str(&format!("{},{topo},{},{},{},{}\n", est.eps, r.m, r.eps_eff, r.depth, r.log2_vq));
        }
        ex.summary.push(format!("eps = {}: log2 V_Q ~ {} at m = {}", est.eps, est.log2_vq, est.m_star));
        if est.saturated {
            ex.warnings.push(format!("eps = {}: estimate is capped by m_max = {m_max}", est.eps));
        }
    }
    let thresholds =
        (2..=m_max).map(|k| ThresholdRow { target: k, eps: estimate_threshold(k, topology, params) }).collect();
    ex.outputs.add_json(
        "estimate.json",
        &EstimateReport { schema_version: OUTPUT_SCHEMA_VERSION, params, estimates, thresholds },
    );
    ex.outputs.add("estimate.csv", csv);
    Ok(ex)
}

#[derive(Serialize)]
struct ThresholdReport<'a> {
    schema_version: u32,
    config_hash: String,
    options: &'a BisectionOptions,
    result: ThresholdResult,
}

fn find_threshold(target: usize, trial: &TrialConfig, options: &BisectionOptions) -> Result<Execution> {
    let mut ex = Execution::new();
    let result = find_threshold_eps(target, trial, options)?;
    ex.summary.push(format!(
        "log2 V_Q = {target}: passes at eps2 = {:.5}, fails at {:.5} ({} evaluations)",
        result.eps,
        result.failing_eps,
        result.evaluations.len()
    ));
    ex.outputs.add_json(
        "threshold.json",
        &ThresholdReport {
            schema_version: OUTPUT_SCHEMA_VERSION,
            config_hash: config_hash(&(target, trial, options)),
            options,
            result,
        },
    );
    Ok(ex)
}
