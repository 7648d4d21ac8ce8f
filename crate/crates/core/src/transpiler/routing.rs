//! Layer-by-layer SWAP insertion with a randomized greedy swap search.

use rand::seq::SliceRandom;
use rand::Rng as _;
use crate::circuit::{layerize, Circuit, Gate};
use crate::error::{Error, Result};
use crate::rng::{self, tag, Rng};
use crate::transpiler::coupling::UNREACHABLE;
use crate::transpiler::CouplingGraph;

pub const DEFAULT_SWAP_TRIALS: usize = 40;

/// A routed circuit and the permutation `W` it carries:
/// `unitary(circuit) = W · unitary(input)` once `W` is undone, i.e. physical
/// qubit `q` holds logical label `output_permutation[q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingResult {
    pub circuit: Circuit,
    pub output_permutation: Vec<usize>,
    /// Logical relabelling applied before routing (identity unless LOCO ran).
    pub input_relabeling: Vec<usize>,
    pub swaps_inserted: usize,
}

struct Layout {
    phys: Vec<usize>,
    logical: Vec<usize>,
}

impl Layout {
    fn identity(n: usize) -> Self {
        Layout { phys: (0..n).collect(), logical: (0..n).collect() }
    }

    fn swap_physical(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.logical[a], self.logical[b]);
        self.logical.swap(a, b);
        self.phys[la] = b;
        self.phys[lb] = a;
    }
}

/// Route `c` onto `graph` so every two-qubit gate acts on connected physical
/// qubits. Logical qubit `i` starts on physical qubit `i`; the output width
/// is `graph.n()`.
pub fn swap_map(c: &Circuit, graph: &CouplingGraph, seed: u64, trials: usize) -> Result<MappingResult> {
    let n = graph.n();
    if c.width() > n {
        return Err(Error::Mapping(format!("circuit width {} exceeds graph size {n}", c.width())));
    }
    let dist = graph.distances();
    let edges = graph.undirected_edges();
    let mut rng = rng::stream(seed, tag::TRANSPILE, 0);
    let mut layout = Layout::identity(n);
    let mut out = Circuit::new(n);
    let mut swaps = 0usize;
    let input_perm = c.output_permutation();

    for layer in layerize(c) {
        let mut pending: Vec<Gate> = Vec::new();
        for g in layer.gates {
            if g.kind().is_two_qubit_unitary() {
                let (a, b) = (g.qubits()[0], g.qubits()[1]);
                if dist[a][b] == UNREACHABLE {
                    return Err(Error::Mapping(format!("qubits {a} and {b} lie in disconnected regions")));
                }
                pending.push(g);
            } else {
                out.push(g.relabeled(|q| layout.phys[q]))?;
            }
        }
        let mut rounds = 0usize;
        let round_limit = 4 * n + 8;
        while !pending.is_empty() {
            let mut waiting = Vec::with_capacity(pending.len());
            for g in pending {
                let (pa, pb) = (layout.phys[g.qubits()[0]], layout.phys[g.qubits()[1]]);
                if graph.connected(pa, pb) {
                    out.push(g.relabeled(|q| layout.phys[q]))?;
                } else {
                    waiting.push(g);
                }
            }
            pending = waiting;
            if pending.is_empty() {
                break;
            }
            let pairs: Vec<(usize, usize)> = pending.iter().map(|g| (g.qubits()[0], g.qubits()[1])).collect();
            let current = score(&pairs, &layout.phys, &dist);
            let mut best: Option<(usize, Vec<(usize, usize)>)> = None;
            if rounds < round_limit {
                for _ in 0..trials.max(1) {
                    let layer = greedy_swap_layer(&pairs, &layout, &dist, &edges, &mut rng, n);
                    let mut trial = Layout { phys: layout.phys.clone(), logical: layout.logical.clone() };
                    for &(a, b) in &layer {
                        trial.swap_physical(a, b);
                    }
                    let s = score(&pairs, &trial.phys, &dist);
                    if s < current && best.as_ref().is_none_or(|(bs, bl)| (s, layer.len()) < (*bs, bl.len())) {
                        best = Some((s, layer));
                    }
                }
            }
            let layer = match best {
                Some((_, layer)) => layer,
                None => vec![step_towards(pairs[0], &layout, graph, &dist)],
            };
            for (a, b) in layer {
                out.push(Gate::swap(a, b))?;
                layout.swap_physical(a, b);
                swaps += 1;
            }
            rounds += 1;
        }
    }

    // Physical q holds logical layout.logical[q]; the input's own output
    // permutation then renames that logical qubit.
    let perm: Vec<usize> = (0..n)
        .map(|q| {
            let l = layout.logical[q];
            if l < c.width() {
                input_perm[l]
            } else {
                l
            }
        })
        .collect();
    out.set_output_permutation(perm.clone())?;
    Ok(MappingResult {
        circuit: out,
        output_permutation: perm,
        input_relabeling: (0..c.width()).collect(),
        swaps_inserted: swaps,
    })
}

fn score(pairs: &[(usize, usize)], phys: &[usize], dist: &[Vec<usize>]) -> usize {
    pairs.iter().map(|&(a, b)| dist[phys[a]][phys[b]]).sum()
}

/// One depth-one swap layer: repeatedly take the qubit-disjoint swap that
/// most reduces a randomly perturbed distance score.
fn greedy_swap_layer(
    pairs: &[(usize, usize)],
    layout: &Layout,
    dist: &[Vec<usize>],
    edges: &[(usize, usize)],
    rng: &mut Rng,
    n: usize,
) -> Vec<(usize, usize)> {
    let noise: Vec<Vec<f64>> =
        (0..n).map(|_| (0..n).map(|_| 1.0 + rng.random_range(-1.0..1.0) / n as f64).collect()).collect();
    let weighted = |phys: &[usize]| -> f64 {
        pairs
            .iter()
            .map(|&(a, b)| {
                let (pa, pb) = (phys[a], phys[b]);
                dist[pa][pb] as f64 * noise[pa.min(pb)][pa.max(pb)]
            })
            .sum()
    };
    let mut involved = vec![false; n];
    for &(a, b) in pairs {
        involved[layout.phys[a]] = true;
        involved[layout.phys[b]] = true;
    }
    let mut candidates: Vec<(usize, usize)> =
        edges.iter().copied().filter(|&(a, b)| involved[a] || involved[b]).collect();
    candidates.shuffle(rng);

    let mut trial = Layout { phys: layout.phys.clone(), logical: layout.logical.clone() };
    let mut used = vec![false; n];
    let mut chosen = Vec::new();
    let mut current = weighted(&trial.phys);
    loop {
        let mut best: Option<(f64, (usize, usize))> = None;
        for &(a, b) in &candidates {
            if used[a] || used[b] {
                continue;
            }
            trial.swap_physical(a, b);
            let s = weighted(&trial.phys);
            trial.swap_physical(a, b);
            if s < current - 1e-12 && best.is_none_or(|(bs, _)| s < bs) {
                best = Some((s, (a, b)));
            }
        }
        let Some((s, (a, b))) = best else { break };
        trial.swap_physical(a, b);
        used[a] = true;
        used[b] = true;
        chosen.push((a, b));
        current = s;
    }
    chosen
}

/// Swap the first pending pair's control one step along a shortest path.
fn step_towards(pair: (usize, usize), layout: &Layout, graph: &CouplingGraph, dist: &[Vec<usize>]) -> (usize, usize) {
    let (pa, pb) = (layout.phys[pair.0], layout.phys[pair.1]);
    let next = graph
        .neighbors(pa)
        .into_iter()
        .find(|&v| dist[v][pb] + 1 == dist[pa][pb])
        .expect("a shortest path exists between connected qubits");
    (pa, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_unitary;
    use crate::linalg::average_gate_fidelity;
    use crate::model::{build_model_circuit, ModelCircuitSpec};

    fn widen(c: &Circuit, n: usize) -> Circuit {
        let mut w = Circuit::from_gates(n, c.gates().iter().cloned()).unwrap();
        let mut perm = c.output_permutation().to_vec();
        perm.extend(c.width()..n);
        w.set_output_permutation(perm).unwrap();
        w
    }

    fn equivalent(original: &Circuit, routed: &MappingResult) {
        let u = circuit_unitary(&widen(original, routed.circuit.width())).unwrap();
        let v = circuit_unitary(&routed.circuit).unwrap();
        assert!(1.0 - average_gate_fidelity(&u, &v) < 1e-9);
    }

    #[test]
    fn all_to_all_needs_no_swaps() {
        let c = build_model_circuit(&ModelCircuitSpec::new(4, 4, 3).unwrap()).unwrap();
        let r = swap_map(&c, &CouplingGraph::all_to_all(4).unwrap(), 1, DEFAULT_SWAP_TRIALS).unwrap();
        assert_eq!(r.swaps_inserted, 0);
        assert_eq!(r.output_permutation, vec![0, 1, 2, 3]);
        assert_eq!(r.circuit.gates(), c.gates());
    }

    #[test]
    fn distant_cx_on_line() {
        let c = Circuit::from_gates(3, [Gate::cx(0, 2)]).unwrap();
        let g = CouplingGraph::line(3).unwrap();
        let r = swap_map(&c, &g, 7, DEFAULT_SWAP_TRIALS).unwrap();
        assert!(r.swaps_inserted >= 1);
        for gate in r.circuit.gates() {
            assert!(g.connected(gate.qubits()[0], gate.qubits()[1]));
        }
        equivalent(&c, &r);
    }

    #[test]
    fn model_circuits_on_line_are_equivalent() {
        let g = CouplingGraph::line(4).unwrap();
        for seed in 0..20 {
            let c = build_model_circuit(&ModelCircuitSpec::new(4, 4, seed).unwrap()).unwrap();
            let r = swap_map(&c, &g, seed, DEFAULT_SWAP_TRIALS).unwrap();
            equivalent(&c, &r);
        }
    }

    #[test]
    fn narrow_circuit_on_wider_graph() {
        let c = Circuit::from_gates(2, [Gate::cx(0, 1), Gate::cx(1, 0)]).unwrap();
        let r = swap_map(&c, &CouplingGraph::line(3).unwrap(), 0, 4).unwrap();
        assert_eq!(r.circuit.width(), 3);
        equivalent(&c, &r);
    }

    #[test]
    fn disconnected_pairs_are_rejected() {
        let g = CouplingGraph::new(3, [(0, 1)]).unwrap();
        let c = Circuit::from_gates(3, [Gate::cx(0, 2)]).unwrap();
        assert!(matches!(swap_map(&c, &g, 0, 4), Err(Error::Mapping(_))));
    }
}
