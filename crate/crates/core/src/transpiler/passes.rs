//! Local rewrites: macro expansion, CX orientation, CX cancellation and
//! single-qubit merging.

use std::f64::consts::PI;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::onequbit;
use crate::transpiler::CouplingGraph;
use crate::weyl;

fn rebuild(template: &Circuit, gates: Vec<Gate>) -> Circuit {
    let mut out = Circuit::from_gates(template.width(), gates).expect("passes keep qubits in range");
    out.set_output_permutation(template.output_permutation().to_vec()).expect("permutation unchanged");
    out
}

/// Expand macros: `H → u2(0, π)`, `SWAP → CX·CX·CX`, SU(4) blocks into the
/// minimal exact CNOT synthesis. Only u1/u2/u3/CX/Barrier/Measure remain.
pub fn unroll(c: &Circuit) -> Result<Circuit> {
    let mut gates = Vec::with_capacity(c.len());
    for g in c.gates() {
        match g.kind() {
            GateKind::H => gates.push(Gate::u2(g.qubits()[0], 0.0, PI)),
            GateKind::Swap => {
                let (a, b) = (g.qubits()[0], g.qubits()[1]);
                gates.extend([Gate::cx(a, b), Gate::cx(b, a), Gate::cx(a, b)]);
            }
            GateKind::Su4 => {
                let (a, b) = (g.qubits()[0], g.qubits()[1]);
                let m = g.matrix().expect("su4 gates carry a matrix");
                let choice = weyl::exact_expansion(weyl::weyl_of(m)?, 1e-12);
                let local = weyl::synthesize(m, &choice)?;
                gates.extend(local.gates().iter().map(|h| h.relabeled(|q| if q == 0 { a } else { b })));
            }
            _ => gates.push(g.clone()),
        }
    }
    Ok(rebuild(c, gates))
}

/// Make every CX follow a directed edge, flipping with
/// `CX(c,t) = (H⊗H)·CX(t,c)·(H⊗H)` where needed.
pub fn cnot_reorient(c: &Circuit, graph: &CouplingGraph) -> Result<Circuit> {
    if c.width() > graph.n() {
        return Err(Error::Mapping(format!("circuit width {} exceeds graph size {}", c.width(), graph.n())));
    }
    let mut gates = Vec::with_capacity(c.len());
    for (i, g) in c.gates().iter().enumerate() {
        let q = g.qubits();
        match g.kind() {
            GateKind::CX if graph.has_edge(q[0], q[1]) => gates.push(g.clone()),
            GateKind::CX if graph.has_edge(q[1], q[0]) => {
                let (ctl, tgt) = (q[0], q[1]);
                gates.extend([Gate::h(ctl), Gate::h(tgt), Gate::cx(tgt, ctl), Gate::h(ctl), Gate::h(tgt)]);
            }
            GateKind::CX => {
                return Err(Error::Mapping(format!(
                    "gate {i}: neither ({}, {}) nor ({}, {}) is an edge",
                    q[0], q[1], q[1], q[0]
                )))
            }
            k if k.is_two_qubit_unitary() && !graph.connected(q[0], q[1]) => {
                return Err(Error::Mapping(format!("gate {i}: {k:?} on unconnected pair ({}, {})", q[0], q[1])))
            }
            _ => gates.push(g.clone()),
        }
    }
    Ok(rebuild(c, gates))
}

/// Cancel adjacent identical CX pairs. Two CX gates are adjacent when no
/// live gate touches either qubit between them, so runs collapse to their
/// parity and disjoint gates in between do not block.
pub fn cnot_cancel(c: &Circuit) -> Circuit {
    let mut live: Vec<Option<Gate>> = Vec::with_capacity(c.len());
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); c.width()];
    for g in c.gates() {
        if g.kind() == GateKind::CX {
            let (a, b) = (g.qubits()[0], g.qubits()[1]);
            if let (Some(&i), Some(&j)) = (stacks[a].last(), stacks[b].last()) {
                if i == j && live[i].as_ref() == Some(g) {
                    live[i] = None;
                    stacks[a].pop();
                    stacks[b].pop();
                    continue;
                }
            }
        }
        let idx = live.len();
        for &q in g.qubits() {
            stacks[q].push(idx);
        }
        live.push(Some(g.clone()));
    }
    rebuild(c, live.into_iter().flatten().collect())
}

/// Merge each maximal run of single-qubit gates into at most one gate with
/// the fewest pulses (u1: 0, u2: 1, u3: 2). A lone gate is only replaced
/// when a cheaper equivalent exists, which keeps the pass idempotent.
pub fn optimize_1q(c: &Circuit) -> Circuit {
    let mut out = Vec::with_capacity(c.len());
    let mut runs: Vec<Vec<Gate>> = vec![Vec::new(); c.width()];
    for g in c.gates() {
        if g.kind().is_single_qubit_unitary() {
            runs[g.qubits()[0]].push(g.clone());
            continue;
        }
        for &q in g.qubits() {
            flush(&mut out, q, &mut runs[q]);
        }
        out.push(g.clone());
    }
    for (q, run) in runs.iter_mut().enumerate() {
        flush(&mut out, q, run);
    }
    rebuild(c, out)
}

fn flush(out: &mut Vec<Gate>, qubit: usize, run: &mut Vec<Gate>) {
    if run.is_empty() {
        return;
    }
    let merged = onequbit::minimal_gate(qubit, &onequbit::compose(run.iter()));
    if let [single] = run.as_slice() {
        let cost = |g: &Gate| g.kind().pulses().unwrap_or(u32::MAX);
        match &merged {
            Some(m) if cost(m) >= cost(single) => out.push(single.clone()),
            _ => out.extend(merged),
        }
    } else {
        out.extend(merged);
    }
    run.clear();
}
