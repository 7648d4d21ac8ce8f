//! Heavy-output test, confidence thresholds, achievable depth, quantum
//! volume and the closed-form scaling estimate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::model::{build_model_circuit, ModelCircuitSpec};
use crate::par::map_indices;
use crate::rng::{self, derive_seed, tag};
use crate::simulator::{heavy_set, HeavySet, NoiseModel, NoisySampler};
use crate::transpiler::{run_pipeline, select_region, CouplingGraph, PassPipeline};

pub const PASS_PROBABILITY: f64 = 2.0 / 3.0;
pub const MIN_CIRCUITS: usize = 100;
pub const DEFAULT_SHOTS: usize = 100;
pub const DEFAULT_Z: f64 = 2.0;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn default_z() -> f64 {
    DEFAULT_Z
}

fn default_shots() -> usize {
    DEFAULT_SHOTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub n_c: usize,
    #[serde(default = "default_shots")]
    pub n_s: usize,
    #[serde(default = "default_z")]
    pub z: f64,
    pub pipeline: PassPipeline,
    pub graph: CouplingGraph,
    #[serde(default)]
    pub noise: NoiseModel,
    pub seed: u64,
    /// Search connected regions of the graph for the best placement instead
    /// of using qubits `0..m`.
    #[serde(default)]
    pub placement_search: bool,
}

impl TrialConfig {
    pub fn new(graph: CouplingGraph, pipeline: PassPipeline, noise: NoiseModel, n_c: usize, seed: u64) -> Self {
        TrialConfig { n_c, n_s: DEFAULT_SHOTS, z: DEFAULT_Z, pipeline, graph, noise, seed, placement_search: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_c < MIN_CIRCUITS {
            return Err(Error::Config(format!("n_c = {} is below the minimum of {MIN_CIRCUITS} circuits", self.n_c)));
        }
        if self.n_s == 0 {
            return Err(Error::Config("n_s must be positive".into()));
        }
        if !(self.z.is_finite() && self.z >= 0.0) {
            return Err(Error::Config(format!("z = {} must be a non-negative number", self.z)));
        }
        self.pipeline.validate()?;
        self.noise.rates()?;
        Ok(())
    }
}

/// Heavy-output statistics at one (width, depth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthResult {
    pub m: usize,
    pub d: usize,
    pub n_c: usize,
    pub n_s: usize,
    pub n_h: u64,
    pub h_hat: f64,
    pub ci_lower: f64,
    /// Heavy fraction needed to pass with `n_c` circuits.
    pub threshold: f64,
    pub passed: bool,
    /// Mean over circuits of the exact ideal heavy-output probability.
    pub ideal_heavy_mean: f64,
    pub mean_cx: f64,
}

/// Lower confidence bound `(n_h − z√(n_h(n_s − n_h/n_c)))/(n_c n_s)`.
pub fn ci_lower(n_h: u64, n_c: usize, n_s: usize, z: f64) -> f64 {
    let (h, c, s) = (n_h as f64, n_c as f64, n_s as f64);
    let var = (h * (s - h / c)).max(0.0);
    (h - z * var.sqrt()) / (c * s)
}

/// Smallest heavy fraction `ĥ` with `ĥ − z√(ĥ(1−ĥ)/n_c) = 2/3`.
pub fn threshold(n_c: usize, z: f64) -> f64 {
    let t = PASS_PROBABILITY;
    let k = z * z / n_c as f64;
    let (a, b, c) = (1.0 + k, -(2.0 * t + k), t * t);
    (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
}

/// Circuit `index` of the batch at `(m, d)`.
pub fn circuit_seed(master: u64, m: usize, d: usize, index: usize) -> u64 {
    let point = derive_seed(master, tag::MODEL_CIRCUIT, ((m as u64) << 32) | d as u64);
    derive_seed(point, tag::MODEL_CIRCUIT, index as u64)
}

/// A model circuit prepared for sampling: heavy set of the ideal circuit and
/// its transpiled implementation.
#[derive(Debug, Clone)]
pub struct PreparedCircuit {
    pub seed: u64,
    pub heavy: HeavySet,
    pub transpiled: Circuit,
}

/// Generate, analyse and transpile the `n_c` circuits at `(m, d)`.
pub fn prepare_batch(m: usize, d: usize, cfg: &TrialConfig) -> Result<Vec<PreparedCircuit>> {
    let region = select_region(&cfg.graph, m, cfg.placement_search)?;
    let graph = cfg.graph.induced(&region)?;
    map_indices(cfg.n_c, |i| {
        let seed = circuit_seed(cfg.seed, m, d, i);
        let wrap = |e: Error| Error::Circuit { index: i, source: Box::new(e) };
        let model = build_model_circuit(&ModelCircuitSpec::new(m, d, seed).map_err(wrap)?).map_err(wrap)?;
        let heavy = heavy_set(&model).map_err(wrap)?;
        let pipeline = PassPipeline { seed: derive_seed(seed, tag::TRANSPILE, 0), ..cfg.pipeline.clone() };
        let transpiled = run_pipeline(&model, &graph, &pipeline).map_err(wrap)?.mapping.circuit;
        Ok(PreparedCircuit { seed, heavy, transpiled })
    })
    .into_iter()
    .collect()
}

/// Heavy counts per circuit for `noise`, `n_s` shots each.
pub fn heavy_counts(batch: &[PreparedCircuit], noise: &NoiseModel, n_s: usize) -> Result<Vec<u64>> {
    map_indices(batch.len(), |i| {
        let p = &batch[i];
        let wrap = |e: Error| Error::Circuit { index: i, source: Box::new(e) };
        let sampler = NoisySampler::new(&p.transpiled, noise).map_err(wrap)?;
        let mut n_h = 0u64;
        for k in 0..n_s {
            let mut stream = rng::stream(p.seed, tag::SAMPLING, k as u64);
            if p.heavy.contains(sampler.shot(&mut stream).map_err(wrap)?) {
                n_h += 1;
            }
        }
        Ok(n_h)
    })
    .into_iter()
    .collect()
}

/// Aggregate a prepared batch under `noise` into a [`DepthResult`].
pub fn evaluate_batch(
    m: usize,
    d: usize,
    batch: &[PreparedCircuit],
    noise: &NoiseModel,
    n_s: usize,
    z: f64,
) -> Result<DepthResult> {
    let n_c = batch.len();
    let n_h: u64 = heavy_counts(batch, noise, n_s)?.into_iter().sum();
    let total = (n_c * n_s) as f64;
    let lower = ci_lower(n_h, n_c, n_s, z);
    Ok(DepthResult {
        m,
        d,
        n_c,
        n_s,
        n_h,
        h_hat: n_h as f64 / total,
        ci_lower: lower,
        threshold: threshold(n_c, z),
        passed: lower > PASS_PROBABILITY,
        ideal_heavy_mean: batch.iter().map(|p| p.heavy.ideal_heavy_probability).sum::<f64>() / n_c as f64,
        mean_cx: batch.iter().map(|p| p.transpiled.cx_count() as f64).sum::<f64>() / n_c as f64,
    })
}

/// Run the heavy-output test at width `m` and depth `d`.
pub fn is_heavy(m: usize, d: usize, cfg: &TrialConfig) -> Result<DepthResult> {
    cfg.validate()?;
    let batch = prepare_batch(m, d, cfg)?;
    evaluate_batch(m, d, &batch, &cfg.noise, cfg.n_s, cfg.z)
}

/// Number of leading passes in depth-ascending results.
pub fn depth_from_results(results: &[DepthResult]) -> usize {
    let mut sorted: Vec<&DepthResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.d);
    sorted.iter().enumerate().take_while(|(i, r)| r.d == i + 1 && r.passed).count()
}

/// Largest `d ≤ d_max` passing at every depth `1..=d`; stops at the first
/// failure, so deeper points stay untested.
pub fn achievable_depth(m: usize, cfg: &TrialConfig, d_max: usize) -> Result<(usize, Vec<DepthResult>)> {
    let mut results = Vec::new();
    for d in 1..=d_max {
        let r = is_heavy(m, d, cfg)?;
        let passed = r.passed;
        results.push(r);
        if !passed {
            break;
        }
    }
    Ok((depth_from_results(&results), results))
}

/// `max_m min(m, d(m))` and the smallest width attaining it.
pub fn quantum_volume(d_of_m: &BTreeMap<usize, usize>) -> (usize, Option<usize>) {
    let mut best = (0, None);
    for (&m, &d) in d_of_m {
        let v = m.min(d);
        if v > best.0 {
            best = (v, Some(m));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Grid,
    Loop,
    AllToAll,
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Topology::Grid),
            "loop" | "ring" => Ok(Topology::Loop),
            "all-to-all" | "full" => Ok(Topology::AllToAll),
            other => Err(Error::Config(format!("unknown topology `{other}`"))),
        }
    }
}

impl Topology {
    pub fn graph(self, n: usize) -> Result<CouplingGraph> {
        match self {
            Topology::Grid => CouplingGraph::grid(n),
            Topology::Loop => CouplingGraph::ring(n),
            Topology::AllToAll => CouplingGraph::all_to_all(n),
        }
    }
}

/// Routing-overhead constants of the scaling estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub a: f64,
    pub b: f64,
    pub a_loop: f64,
    pub b_loop: f64,
}

impl Default for ScalingParams {
    fn default() -> Self {
        ScalingParams { a: 1.29, b: -0.78, a_loop: 0.5, b_loop: -0.45 }
    }
}

impl ScalingParams {
    /// Error-rate multiplier at width `m`.
    pub fn overhead(&self, m: usize, topology: Topology) -> f64 {
        let m = m as f64;
        match topology {
            Topology::Grid => self.a * m.sqrt() + self.b,
            Topology::Loop => self.a_loop * m + self.b_loop,
            Topology::AllToAll => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub m: usize,
    pub eps_eff: f64,
    /// `1/(m·ε_eff)`; infinite at zero error.
    pub depth: f64,
    pub log2_vq: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub eps: f64,
    pub topology: Topology,
    pub rows: Vec<EstimateRow>,
    pub m_star: usize,
    pub log2_vq: usize,
    /// The error rate is so small that the estimate is capped by `m_max`.
    pub saturated: bool,
}

/// Achievable depth `d̃(m) = 1/(m·ε_eff(m))` for `m = 2..=m_max`, and the
/// volume `max_m min(m, ⌊d̃(m)⌋)`.
pub fn estimate_volume(eps: f64, topology: Topology, params: &ScalingParams, m_max: usize) -> Result<VolumeEstimate> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::Config(format!("error rate {eps} must be non-negative")));
    }
    if m_max < 2 {
        return Err(Error::Config("m_max must be at least 2".into()));
    }
    let rows: Vec<EstimateRow> = (2..=m_max)
        .map(|m| {
            let eps_eff = params.overhead(m, topology) * eps;
            let depth = 1.0 / (m as f64 * eps_eff);
            let log2_vq = if depth >= m as f64 { m } else { depth.floor().max(0.0) as usize };
            EstimateRow { m, eps_eff, depth, log2_vq }
        })
        .collect();
    let best = rows.iter().max_by_key(|r| (r.log2_vq, std::cmp::Reverse(r.m))).expect("m range is non-empty");
    let (m_star, log2_vq) = (best.m, best.log2_vq);
    Ok(VolumeEstimate { eps, topology, saturated: log2_vq == m_max, rows, m_star, log2_vq })
}

/// Largest error rate at which the estimate reaches `target`:
/// `1/(k²·overhead(k))` for `k = target`.
pub fn estimate_threshold(target: usize, topology: Topology, params: &ScalingParams) -> f64 {
    let k = target as f64;
    1.0 / (k * k * params.overhead(target, topology))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Only `d = m` points.
    Square,
    /// Ascending depths up to `d_max` per width, stopping at the first failure.
    Full { d_max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub config_hash: Option<String>,
    pub version: String,
    pub mode: SweepMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QVReport {
    pub schema_version: u32,
    pub metadata: ReportMetadata,
    pub results: Vec<DepthResult>,
    /// Achievable depth per width. In square mode this is `m` for widths
    /// whose square point passes and 0 otherwise.
    pub d_of_m: BTreeMap<usize, usize>,
    pub log2_vq: usize,
    pub achieving_m: Option<usize>,
}

impl QVReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per tested `(m, d)` point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,d,n_c,n_s,n_h,h_hat,ci_lower,threshold,passed,ideal_heavy_mean,mean_cx\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.m, r.d, r.n_c, r.n_s, r.n_h, r.h_hat, r.ci_lower, r.threshold, r.passed, r.ideal_heavy_mean, r.mean_cx
            ));
        }
        out
    }
}

/// Evaluate widths `m_range` and assemble the report.
pub fn run_qv_sweep(cfg: &TrialConfig, m_range: &[usize], mode: SweepMode) -> Result<QVReport> {
    cfg.validate()?;
    let mut results = Vec::new();
    let mut d_of_m = BTreeMap::new();
    for &m in m_range {
        match mode {
            SweepMode::Square => {
                let r = is_heavy(m, m, cfg)?;
                d_of_m.insert(m, if r.passed { m } else { 0 });
                results.push(r);
            }
            SweepMode::Full { d_max } => {
                let (d, mut rs) = achievable_depth(m, cfg, d_max)?;
                d_of_m.insert(m, d);
                results.append(&mut rs);
            }
        }
    }
    let (log2_vq, achieving_m) = quantum_volume(&d_of_m);
    Ok(QVReport {
        schema_version: REPORT_SCHEMA_VERSION,
        metadata: ReportMetadata { seed: cfg.seed, config_hash: None, version: env!("CARGO_PKG_VERSION").into(), mode },
        results,
        d_of_m,
        log2_vq,
        achieving_m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassCriterion {
    /// `ĥ > 2/3`: the boundary where the heavy fraction crosses 2/3.
    #[default]
    PointEstimate,
    /// `ci_lower > 2/3`, the full test.
    ConfidenceBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionOptions {
    pub lo: f64,
    pub hi: f64,
    /// Stop when `hi/lo ≤ 1 + rel_tol`.
    pub rel_tol: f64,
    pub criterion: PassCriterion,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        BisectionOptions { lo: 1e-4, hi: 0.2, rel_tol: 0.1, criterion: PassCriterion::PointEstimate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEvaluation {
    pub eps2: f64,
    pub h_hat: f64,
    pub ci_lower: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub target: usize,
    /// Largest tested `eps2` that passed; the next failing rate is within
    /// the relative tolerance above it.
    pub eps: f64,
    pub failing_eps: f64,
    pub evaluations: Vec<ThresholdEvaluation>,
}

/// Bisect (geometrically) over the two-qubit error `eps2`, with
/// `eps1 = eps2/10` and the template's readout error, for the square point
/// `m = d = target`. Circuits and random streams are shared across rates.
pub fn find_threshold_eps(target: usize, cfg: &TrialConfig, options: &BisectionOptions) -> Result<ThresholdResult> {
    cfg.validate()?;
    if !(options.lo > 0.0 && options.lo < options.hi && options.rel_tol > 0.0) {
        return Err(Error::Config("bisection needs 0 < lo < hi and a positive tolerance".into()));
    }
    let batch = prepare_batch(target, target, cfg)?;
    let mut evaluations = Vec::new();
    let mut eval = |eps2: f64| -> Result<bool> {
        let noise = NoiseModel { eps1: eps2 / 10.0, eps2, ..cfg.noise.clone() };
        let r = evaluate_batch(target, target, &batch, &noise, cfg.n_s, cfg.z)?;
        let passed = match options.criterion {
            PassCriterion::PointEstimate => r.h_hat > PASS_PROBABILITY,
            PassCriterion::ConfidenceBound => r.passed,
        };
        evaluations.push(ThresholdEvaluation { eps2, h_hat: r.h_hat, ci_lower: r.ci_lower, passed });
        Ok(passed)
    };
    let (mut lo, mut hi) = (options.lo, options.hi);
    if !eval(lo)? {
        return Err(Error::Config(format!("square point {target} fails already at eps2 = {lo}")));
    }
    if eval(hi)? {
        return Err(Error::Config(format!("square point {target} still passes at eps2 = {hi}")));
    }
    while hi / lo > 1.0 + options.rel_tol {
        let mid = (lo * hi).sqrt();
        if eval(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult { target, eps: lo, failing_eps: hi, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(d: usize, passed: bool) -> DepthResult {
        DepthResult {
            m: 3,
            d,
            n_c: 100,
            n_s: 10,
            n_h: 0,
            h_hat: 0.0,
            ci_lower: 0.0,
            threshold: 0.0,
            passed,
            ideal_heavy_mean: 0.0,
            mean_cx: 0.0,
        }
    }

    #[test]
    fn ci_lower_extremes() {
        assert_eq!(ci_lower(100 * 50, 100, 50, 2.0), 1.0);
        let exact = ci_lower(2 * 100 * 30 / 3, 100, 30, 2.0);
        assert!(exact < PASS_PROBABILITY);
    }

    #[test]
    fn threshold_values() {
        assert!((threshold(5000, 2.0) - 0.680).abs() < 1e-3);
        assert!((threshold(100, 2.0) - 0.753).abs() < 1e-3);
        assert!(threshold(1000, 2.0) > 0.694 && threshold(1000, 2.0) < 0.697);
    }

    #[test]
    fn depth_prefix() {
        assert_eq!(depth_from_results(&[result(1, true), result(2, true), result(3, false)]), 2);
        assert_eq!(depth_from_results(&[result(1, false)]), 0);
        assert_eq!(depth_from_results(&[]), 0);
    }

    #[test]
    fn volume_min_then_max() {
        let d: BTreeMap<usize, usize> = [(2, 5), (3, 3), (4, 2)].into();
        assert_eq!(quantum_volume(&d), (3, Some(3)));
        let zero: BTreeMap<usize, usize> = [(2, 0), (3, 0)].into();
        assert_eq!(quantum_volume(&zero).0, 0);
        let depths: BTreeMap<usize, usize> = [(2, 2), (3, 3), (4, 4), (5, 3)].into();
        assert_eq!(quantum_volume(&depths), (4, Some(4)));
    }

    #[test]
    fn estimate_grid_point() {
        let p = ScalingParams::default();
        let eps = 1.0 / (16.0 * p.overhead(4, Topology::Grid));
        let est = estimate_volume(eps * (1.0 - 1e-12), Topology::Grid, &p, 8).unwrap();
        assert_eq!(est.rows[2].m, 4);
        assert!((est.rows[2].depth - 4.0).abs() < 1e-9);
        assert_eq!(est.log2_vq, 4);
        let zero = estimate_volume(0.0, Topology::Loop, &p, 6).unwrap();
        assert!(zero.saturated && zero.log2_vq == 6);
        assert!((estimate_threshold(4, Topology::Grid, &p) - 0.0347).abs() < 1e-4);
    }

    #[test]
    fn config_requires_enough_circuits() {
        let cfg = TrialConfig::new(CouplingGraph::line(2).unwrap(), PassPipeline::standard(0), NoiseModel::ideal(), 99, 0);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
