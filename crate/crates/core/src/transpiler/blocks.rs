//! Two-qubit block collection and block resynthesis.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::Result;
use crate::weyl::{self, ExpansionChoice};

/// Infidelity below which an exact resynthesis is considered exact.
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// A unit of a collected circuit, in an order that respects every qubit's
/// gate sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockItem {
    /// Gates acting only on `qubits`, starting with any pending single-qubit
    /// gates and containing at least one two-qubit gate.
    Block { qubits: [usize; 2], gates: Vec<Gate> },
    Single(Gate),
}

impl BlockItem {
    pub fn gates(&self) -> &[Gate] {
        match self {
            BlockItem::Block { gates, .. } => gates,
            BlockItem::Single(g) => std::slice::from_ref(g),
        }
    }

    fn touches(&self, q: usize) -> bool {
        self.gates().iter().any(|g| g.acts_on(q))
    }
}

struct Open {
    qubits: [usize; 2],
    gates: Vec<(usize, Gate)>,
}

/// Partition `c` into maximal two-qubit blocks and leftover gates. A block
/// grows while gates stay on its pair; barriers and measurements end it.
pub fn block_collect(c: &Circuit) -> Vec<BlockItem> {
    let mut blocks: Vec<Open> = Vec::new();
    let mut open: Vec<Option<usize>> = vec![None; c.width()];
    let mut pending: Vec<Vec<(usize, Gate)>> = vec![Vec::new(); c.width()];
    let mut singles: Vec<(usize, Gate)> = Vec::new();

    for (idx, g) in c.gates().iter().enumerate() {
        let q = g.qubits();
        if g.kind().is_two_qubit_unitary() {
            let (a, b) = (q[0], q[1]);
            let same = match (open[a], open[b]) {
                (Some(x), Some(y)) if x == y => {
                    let p = blocks[x].qubits;
                    (p == [a, b] || p == [b, a]).then_some(x)
                }
                _ => None,
            };
            let id = same.unwrap_or_else(|| {
                let mut gates = std::mem::take(&mut pending[a]);
                gates.append(&mut pending[b]);
                blocks.push(Open { qubits: [a, b], gates });
                blocks.len() - 1
            });
            blocks[id].gates.push((idx, g.clone()));
            open[a] = Some(id);
            open[b] = Some(id);
        } else if g.kind().is_single_qubit_unitary() {
            match open[q[0]] {
                Some(id) => blocks[id].gates.push((idx, g.clone())),
                None => pending[q[0]].push((idx, g.clone())),
            }
        } else {
            for &qq in q {
                singles.append(&mut pending[qq]);
                open[qq] = None;
            }
            singles.push((idx, g.clone()));
        }
    }
    for p in &mut pending {
        singles.append(p);
    }

    let mut keyed: Vec<(usize, BlockItem)> = singles.into_iter().map(|(i, g)| (i, BlockItem::Single(g))).collect();
    for mut b in blocks {
        b.gates.sort_by_key(|(i, _)| *i);
        // absorbed single-qubit gates may predate other blocks on the pair,
        // so the block is placed by its first two-qubit gate
        let first = b.gates.iter().find(|(_, g)| g.kind().is_two_qubit_unitary()).map_or(0, |(i, _)| *i);
        keyed.push((first, BlockItem::Block { qubits: b.qubits, gates: b.gates.into_iter().map(|(_, g)| g).collect() }));
    }
    keyed.sort_by_key(|(i, _)| *i);
    keyed.into_iter().map(|(_, item)| item).collect()
}

/// Resynthesis target for [`block_optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BlockMode {
    /// Fewest CNOTs that reproduce the block exactly.
    Exact,
    /// Best `F(i) · F_b^i` trade-off for basis-gate fidelity `F_b`.
    Approx { basis_fidelity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockOptions {
    pub mode: BlockMode,
    /// Allow mirrored synthesis for blocks that end their qubits' activity;
    /// the swap is absorbed into the output permutation.
    pub mirror: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub qubits: [usize; 2],
    pub original_cx: usize,
    pub new_cx: usize,
    pub replaced: bool,
    pub choice: ExpansionChoice,
    /// Average gate fidelity of the emitted gates against the block.
    pub achieved_fidelity: f64,
}

fn cx_cost(gates: &[Gate]) -> usize {
    gates
        .iter()
        .map(|g| match g.kind() {
            GateKind::CX => 1,
            GateKind::Swap | GateKind::Su4 => 3,
            _ => 0,
        })
        .sum()
}

/// Replace each collected block by its resynthesis when that uses fewer
/// CNOTs.
pub fn block_optimize(c: &Circuit, options: BlockOptions) -> Result<(Circuit, Vec<BlockReport>)> {
    let items = block_collect(c);
    let mut last_item = vec![usize::MAX; c.width()];
    for (i, item) in items.iter().enumerate() {
        for q in 0..c.width() {
            if item.touches(q) {
                last_item[q] = i;
            }
        }
    }
    let mut gates = Vec::with_capacity(c.len());
    let mut perm = c.output_permutation().to_vec();
    let mut reports = Vec::new();
    for (i, item) in items.into_iter().enumerate() {
        let (qubits, block) = match item {
            BlockItem::Single(g) => {
                gates.push(g);
                continue;
            }
            BlockItem::Block { qubits, gates } => (qubits, gates),
        };
        let [a, b] = qubits;
        let local = Circuit::from_gates(2, block.iter().map(|g| g.relabeled(|q| usize::from(q == b))))?;
        let target = weyl::two_qubit_matrix(&local)?;
        let coords = weyl::weyl_of(&target)?;
        let terminal = last_item[a] == i && last_item[b] == i;
        let choice = match options.mode {
            BlockMode::Exact => weyl::exact_expansion(coords, EXACT_TOLERANCE),
            BlockMode::Approx { basis_fidelity } => {
                weyl::select_expansion(coords, basis_fidelity, options.mirror && terminal)
            }
        };
        let original_cx = cx_cost(&block);
        let new_cx = choice.applications as usize;
        let replaced = new_cx < original_cx;
        let achieved_fidelity = if replaced {
            let synth = weyl::synthesize(&target, &choice)?;
            let achieved = weyl::avg_fidelity(&weyl::two_qubit_matrix(&synth)?, &target);
            let map = |q: usize| if q == 0 { a } else { b };
            gates.extend(synth.gates().iter().map(|g| g.relabeled(map)));
            if choice.mirrored {
                perm.swap(a, b);
            }
            achieved
        } else {
            gates.extend(block);
            1.0
        };
        reports.push(BlockReport { qubits, original_cx, new_cx: if replaced { new_cx } else { original_cx }, replaced, choice, achieved_fidelity });
    }
    let mut out = Circuit::from_gates(c.width(), gates)?;
    out.set_output_permutation(perm)?;
    Ok((out, reports))
}
