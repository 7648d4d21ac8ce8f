//! Circuit rewriting passes and the pipelines that chain them.
//!
//! Every pass is a pure function from circuit to circuit. Passes preserve the
//! circuit's output permutation (or extend it, for routing and mirrored
//! resynthesis), so the overall contract is `unitary(out) = unitary(in)` up
//! to global phase, with qubit relabelling recorded in the permutation.

mod blocks;
mod coupling;
mod loco;
mod passes;
mod routing;

use serde::{Deserialize, Serialize};

pub use blocks::{block_collect, block_optimize, BlockItem, BlockMode, BlockOptions, BlockReport, EXACT_TOLERANCE};
pub use coupling::{select_region, CouplingGraph, UNREACHABLE};
pub use loco::{bandwidth, interaction_matrix, loco, weighted_rcm, LocoResult};
pub use passes::{cnot_cancel, cnot_reorient, optimize_1q, unroll};
pub use routing::{swap_map, MappingResult, DEFAULT_SWAP_TRIALS};

use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pass", rename_all = "snake_case")]
pub enum Pass {
    Unroll,
    SwapMap { trials: usize },
    Reorient,
    CnotCancel,
    Optimize1q,
    /// Analysis only: block structure is recomputed by `BlockOptimize`.
    BlockCollect,
    BlockOptimize(BlockOptions),
    Loco,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassPipeline {
    pub passes: Vec<Pass>,
    pub seed: u64,
}

impl PassPipeline {
    /// unroll, swap-map, unroll, reorient, cnot-cancel, unroll, 1q-optimize.
    pub fn standard(seed: u64) -> Self {
        PassPipeline {
            passes: vec![
                Pass::Unroll,
                Pass::SwapMap { trials: DEFAULT_SWAP_TRIALS },
                Pass::Unroll,
                Pass::Reorient,
                Pass::CnotCancel,
                Pass::Unroll,
                Pass::Optimize1q,
            ],
            seed,
        }
    }

    /// Standard pipeline followed by block collection and resynthesis. The
    /// resynthesized CNOTs come out in template orientation, so the tail
    /// reorients, unrolls and merges single-qubit gates again.
    pub fn optimized(seed: u64, mode: BlockMode, mirror: bool) -> Self {
        let mut p = Self::standard(seed);
        p.passes.extend([
            Pass::BlockCollect,
            Pass::BlockOptimize(BlockOptions { mode, mirror }),
            Pass::Reorient,
            Pass::CnotCancel,
            Pass::Unroll,
            Pass::Optimize1q,
        ]);
        p
    }

    /// `standard`, `kak` (exact block resynthesis) or `approx` (requires the
    /// basis fidelity).
    pub fn named(name: &str, seed: u64, basis_fidelity: Option<f64>) -> Result<Self> {
        match name {
            "standard" => Ok(Self::standard(seed)),
            "kak" | "exact" => Ok(Self::optimized(seed, BlockMode::Exact, false)),
            "approx" => {
                let fb = basis_fidelity.ok_or_else(|| Error::Config("pipeline `approx` needs a basis fidelity".into()))?;
                if !(fb > 0.0 && fb <= 1.0) {
                    return Err(Error::Config(format!("basis fidelity {fb} outside (0, 1]")));
                }
                Ok(Self::optimized(seed, BlockMode::Approx { basis_fidelity: fb }, false))
            }
            other => Err(Error::Config(format!("unknown pipeline `{other}` (expected standard, kak or approx)"))),
        }
    }

    /// Reorientation must not run before the first swap mapping.
    pub fn validate(&self) -> Result<()> {
        let first_map = self.passes.iter().position(|p| matches!(p, Pass::SwapMap { .. }));
        let first_reorient = self.passes.iter().position(|p| matches!(p, Pass::Reorient));
        match (first_map, first_reorient) {
            (_, None) => Ok(()),
            (Some(m), Some(r)) if m < r => Ok(()),
            _ => Err(Error::Config("cnot reorientation must follow swap mapping".into())),
        }
    }

    pub fn is_approximate(&self) -> bool {
        self.passes.iter().any(|p| matches!(p, Pass::BlockOptimize(BlockOptions { mode: BlockMode::Approx { .. }, .. })))
    }
}

/// Output of [`run_pipeline`]: the mapping plus the block reports of any
/// resynthesis passes.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub mapping: MappingResult,
    pub blocks: Vec<BlockReport>,
}

/// Run `pipeline` on `c` for coupling graph `graph`.
pub fn run_pipeline(c: &Circuit, graph: &CouplingGraph, pipeline: &PassPipeline) -> Result<PipelineOutput> {
    pipeline.validate()?;
    let mut cur = c.clone();
    let mut relabeling: Vec<usize> = (0..c.width()).collect();
    let mut swaps = 0;
    let mut reports = Vec::new();
    for pass in &pipeline.passes {
        cur = match *pass {
            Pass::Unroll => unroll(&cur)?,
            Pass::SwapMap { trials } => {
                let r = swap_map(&cur, graph, pipeline.seed, trials)?;
                swaps += r.swaps_inserted;
                r.circuit
            }
            Pass::Reorient => cnot_reorient(&cur, graph)?,
            Pass::CnotCancel => cnot_cancel(&cur),
            Pass::Optimize1q => optimize_1q(&cur),
            Pass::BlockCollect => {
                block_collect(&cur);
                cur
            }
            Pass::BlockOptimize(options) => {
                let (out, mut r) = block_optimize(&cur, options)?;
                reports.append(&mut r);
                out
            }
            Pass::Loco => {
                let r = loco(&cur)?;
                relabeling = relabeling.iter().map(|&q| r.relabeling[q]).collect();
                r.circuit
            }
        };
    }
    if let Some(g) = cur.gates().iter().find(|g| g.kind() == GateKind::CX && !graph.has_edge(g.qubits()[0], g.qubits()[1])) {
        if pipeline.passes.contains(&Pass::Reorient) {
            return Err(Error::Mapping(format!("CX({}, {}) is not on an edge", g.qubits()[0], g.qubits()[1])));
        }
    }
    let perm = cur.output_permutation().to_vec();
    Ok(PipelineOutput {
        mapping: MappingResult { circuit: cur, output_permutation: perm, input_relabeling: relabeling, swaps_inserted: swaps },
        blocks: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_unitary;
    use crate::linalg::average_gate_fidelity;
    use crate::model::{build_model_circuit, ModelCircuitSpec};

    #[test]
    fn validation_orders_reorient_after_mapping() {
        let bad = PassPipeline { passes: vec![Pass::Reorient, Pass::SwapMap { trials: 1 }], seed: 0 };
        assert!(bad.validate().is_err());
        assert!(PassPipeline::standard(0).validate().is_ok());
    }

    #[test]
    fn empty_circuit_maps_to_empty() {
        let out = run_pipeline(&Circuit::new(3), &CouplingGraph::line(3).unwrap(), &PassPipeline::standard(1)).unwrap();
        assert!(out.mapping.circuit.is_empty());
        assert_eq!(out.mapping.output_permutation, vec![0, 1, 2]);
    }

    #[test]
    fn standard_pipeline_on_two_qubits() {
        let c = build_model_circuit(&ModelCircuitSpec::new(2, 3, 11).unwrap()).unwrap();
        let g = CouplingGraph::all_to_all(2).unwrap();
        let out = run_pipeline(&c, &g, &PassPipeline::standard(5)).unwrap().mapping;
        for gate in out.circuit.gates() {
            assert!(matches!(gate.kind(), GateKind::U1 | GateKind::U2 | GateKind::U3 | GateKind::CX));
        }
        let f = average_gate_fidelity(&circuit_unitary(&c).unwrap(), &circuit_unitary(&out.circuit).unwrap());
        assert!(1.0 - f < 1e-9);
    }

    #[test]
    fn exact_pipeline_on_line_is_sound_and_cheaper() {
        let g = CouplingGraph::line(4).unwrap();
        let c = build_model_circuit(&ModelCircuitSpec::new(4, 4, 2).unwrap()).unwrap();
        let std_out = run_pipeline(&c, &g, &PassPipeline::standard(9)).unwrap().mapping;
        let kak = run_pipeline(&c, &g, &PassPipeline::optimized(9, BlockMode::Exact, false)).unwrap().mapping;
        assert!(kak.circuit.cx_count() <= std_out.circuit.cx_count());
        let u = circuit_unitary(&c).unwrap();
        for out in [&std_out, &kak] {
            let f = average_gate_fidelity(&u, &circuit_unitary(&out.circuit).unwrap());
            assert!(1.0 - f < 1e-9);
            assert!(out.circuit.gates().iter().filter(|g| g.kind() == GateKind::CX).all(|g| g.qubits()[0] < 4));
        }
    }
}
