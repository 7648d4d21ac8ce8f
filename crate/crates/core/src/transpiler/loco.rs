//! Logical qubit reordering by weighted reverse Cuthill-McKee.

use crate::circuit::{invert_permutation, Circuit, GateKind};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct LocoResult {
    pub circuit: Circuit,
    /// `relabeling[old] = new` logical index (identity when nothing improved).
    pub relabeling: Vec<usize>,
    pub bandwidth_before: usize,
    pub bandwidth_after: usize,
}

/// Symmetric count of CNOT-equivalent interactions between qubit pairs.
pub fn interaction_matrix(c: &Circuit) -> Vec<Vec<usize>> {
    let n = c.width();
    let mut a = vec![vec![0usize; n]; n];
    for g in c.gates() {
        let w = match g.kind() {
            GateKind::CX => 1,
            GateKind::Swap | GateKind::Su4 => 3,
            _ => continue,
        };
        let (x, y) = (g.qubits()[0], g.qubits()[1]);
        a[x][y] += w;
        a[y][x] += w;
    }
    a
}

/// `max |pos(i) − pos(j)|` over interacting pairs, `pos[i]` the label of `i`.
pub fn bandwidth(a: &[Vec<usize>], pos: &[usize]) -> usize {
    let mut bw = 0;
    for (i, row) in a.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if w > 0 {
                bw = bw.max(pos[i].abs_diff(pos[j]));
            }
        }
    }
    bw
}

/// Weighted reverse Cuthill-McKee order. Each component starts from its
/// lowest-degree qubit; neighbours are visited heaviest interaction first,
/// then by degree, then by index.
pub fn weighted_rcm(a: &[Vec<usize>]) -> Vec<usize> {
    let n = a.len();
    let degree: Vec<usize> = a.iter().map(|row| row.iter().filter(|&&w| w > 0).count()).collect();
    let strength: Vec<usize> = a.iter().map(|row| row.iter().sum()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&q| !visited[q])
            .min_by_key(|&q| (degree[q], strength[q], q))
            .expect("unvisited qubit remains");
        visited[start] = true;
        let mut head = order.len();
        order.push(start);
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut next: Vec<usize> = (0..n).filter(|&v| a[u][v] > 0 && !visited[v]).collect();
            next.sort_by_key(|&v| (std::cmp::Reverse(a[u][v]), degree[v], v));
            for v in next {
                visited[v] = true;
                order.push(v);
            }
        }
    }
    order.reverse();
    order
}

/// Relabel logical qubits by weighted RCM when that strictly lowers the
/// interaction bandwidth. Gates move to the new labels and the output
/// permutation is adjusted so measurement labels still name the original
/// qubits; the result equals the input composed with the relabeling.
pub fn loco(c: &Circuit) -> Result<LocoResult> {
    let a = interaction_matrix(c);
    let identity: Vec<usize> = (0..c.width()).collect();
    let before = bandwidth(&a, &identity);
    let order = weighted_rcm(&a);
    let relabeling = invert_permutation(&order);
    let after = bandwidth(&a, &relabeling);
    if after >= before {
        return Ok(LocoResult { circuit: c.clone(), relabeling: identity, bandwidth_before: before, bandwidth_after: before });
    }
    let mut out = Circuit::from_gates(c.width(), c.gates().iter().map(|g| g.relabeled(|q| relabeling[q])))?;
    let old_perm = c.output_permutation();
    out.set_output_permutation(order.iter().map(|&old| old_perm[old]).collect())?;
    Ok(LocoResult { circuit: out, relabeling, bandwidth_before: before, bandwidth_after: after })
}
