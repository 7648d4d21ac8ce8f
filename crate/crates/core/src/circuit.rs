//! Circuit intermediate representation.
//!
//! A [`Circuit`] is an ordered gate list over `width` qubits plus an output
//! permutation that relabels measurement outcomes: physical qubit `q` is
//! reported as label `output_permutation[q]`. Global phase is not tracked.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Mat4, C64, ONE, ZERO};

/// Widest circuit [`circuit_unitary`] will build densely.
pub const UNITARY_WIDTH_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    U1,
    U2,
    U3,
    CX,
    Su4,
    Swap,
    H,
    Barrier,
    Measure,
}

impl GateKind {
    pub fn param_count(self) -> usize {
        match self {
            GateKind::U1 => 1,
            GateKind::U2 => 2,
            GateKind::U3 => 3,
            _ => 0,
        }
    }

    /// Fixed qubit arity; `None` for barriers, which take any non-empty set.
    pub fn qubit_count(self) -> Option<usize> {
        match self {
            GateKind::U1 | GateKind::U2 | GateKind::U3 | GateKind::H | GateKind::Measure => Some(1),
            GateKind::CX | GateKind::Su4 | GateKind::Swap => Some(2),
            GateKind::Barrier => None,
        }
    }

    pub fn is_single_qubit_unitary(self) -> bool {
        matches!(self, GateKind::U1 | GateKind::U2 | GateKind::U3 | GateKind::H)
    }

    pub fn is_two_qubit_unitary(self) -> bool {
        matches!(self, GateKind::CX | GateKind::Su4 | GateKind::Swap)
    }

    /// Physical pulses needed by the single-qubit gate family (u1 is virtual).
    pub fn pulses(self) -> Option<u32> {
        match self {
            GateKind::U1 => Some(0),
            GateKind::U2 => Some(1),
            GateKind::U3 => Some(2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    params: Vec<f64>,
    qubits: Vec<usize>,
    matrix: Option<Box<Mat4>>,
}

impl Gate {
    /// Validating constructor for every kind except [`GateKind::Su4`].
    pub fn new(kind: GateKind, params: Vec<f64>, qubits: Vec<usize>) -> Result<Self> {
        if kind == GateKind::Su4 {
            return Err(Error::InvalidGate("su4 blocks need a matrix; use Gate::su4".into()));
        }
        check_arity(kind, &params, &qubits)?;
        Ok(Gate { kind, params, qubits, matrix: None })
    }

    pub fn su4(first: usize, second: usize, matrix: Mat4) -> Result<Self> {
        check_arity(GateKind::Su4, &[], &[first, second])?;
        let defect = linalg::unitarity_defect(&matrix);
        if defect > 1e-12 {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Gate {
            kind: GateKind::Su4,
            params: Vec::new(),
            qubits: vec![first, second],
            matrix: Some(Box::new(matrix)),
        })
    }

    pub fn u1(qubit: usize, lambda: f64) -> Self {
        Gate { kind: GateKind::U1, params: vec![lambda], qubits: vec![qubit], matrix: None }
    }

    pub fn u2(qubit: usize, phi: f64, lambda: f64) -> Self {
        Gate { kind: GateKind::U2, params: vec![phi, lambda], qubits: vec![qubit], matrix: None }
    }

    pub fn u3(qubit: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        Gate { kind: GateKind::U3, params: vec![theta, phi, lambda], qubits: vec![qubit], matrix: None }
    }

    pub fn h(qubit: usize) -> Self {
        Gate { kind: GateKind::H, params: Vec::new(), qubits: vec![qubit], matrix: None }
    }

    pub fn measure(qubit: usize) -> Self {
        Gate { kind: GateKind::Measure, params: Vec::new(), qubits: vec![qubit], matrix: None }
    }

    /// # Panics
    /// If `control == target`.
    pub fn cx(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "cx needs distinct qubits");
        Gate { kind: GateKind::CX, params: Vec::new(), qubits: vec![control, target], matrix: None }
    }

    /// # Panics
    /// If `a == b`.
    pub fn swap(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "swap needs distinct qubits");
        Gate { kind: GateKind::Swap, params: Vec::new(), qubits: vec![a, b], matrix: None }
    }

    pub fn barrier(qubits: Vec<usize>) -> Result<Self> {
        Gate::new(GateKind::Barrier, Vec::new(), qubits)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn matrix(&self) -> Option<&Mat4> {
        self.matrix.as_deref()
    }

    pub fn acts_on(&self, qubit: usize) -> bool {
        self.qubits.contains(&qubit)
    }

    /// Same gate with every qubit index passed through `map`.
    pub fn relabeled(&self, map: impl Fn(usize) -> usize) -> Gate {
        Gate {
            kind: self.kind,
            params: self.params.clone(),
            qubits: self.qubits.iter().map(|&q| map(q)).collect(),
            matrix: self.matrix.clone(),
        }
    }
}

fn check_arity(kind: GateKind, params: &[f64], qubits: &[usize]) -> Result<()> {
    if params.len() != kind.param_count() {
        return Err(Error::InvalidGate(format!(
            "{kind:?} takes {} parameters, got {}",
            kind.param_count(),
            params.len()
        )));
    }
    match kind.qubit_count() {
        Some(n) if qubits.len() != n => {
            return Err(Error::InvalidGate(format!("{kind:?} acts on {n} qubits, got {}", qubits.len())));
        }
        None if qubits.is_empty() => {
            return Err(Error::InvalidGate("barrier needs at least one qubit".into()));
        }
        _ => {}
    }
    for (i, q) in qubits.iter().enumerate() {
        if qubits[..i].contains(q) {
            return Err(Error::InvalidGate(format!("{kind:?} repeats qubit {q}")));
        }
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidGate(format!("{kind:?} has a non-finite parameter")));
    }
    Ok(())
}

/// Unitary of a single gate.
#[derive(Debug, Clone, PartialEq)]
pub enum GateMatrix {
    One(Mat2),
    Two(Mat4),
}

pub fn gate_matrix(g: &Gate) -> Result<GateMatrix> {
    let p = g.params();
    Ok(match g.kind() {
        GateKind::U1 => GateMatrix::One(Mat2::new(ONE, ZERO, ZERO, C64::from_polar(1.0, p[0]))),
        GateKind::U2 => GateMatrix::One(linalg::u3_matrix(std::f64::consts::FRAC_PI_2, p[0], p[1])),
        GateKind::U3 => GateMatrix::One(linalg::u3_matrix(p[0], p[1], p[2])),
        GateKind::H => GateMatrix::One(linalg::u3_matrix(std::f64::consts::FRAC_PI_2, 0.0, std::f64::consts::PI)),
        GateKind::CX => GateMatrix::Two(linalg::cnot()),
        GateKind::Swap => GateMatrix::Two(linalg::swap()),
        GateKind::Su4 => GateMatrix::Two(*g.matrix.clone().expect("su4 gate carries a matrix")),
        kind @ (GateKind::Barrier | GateKind::Measure) => return Err(Error::NoMatrix { kind }),
    })
}

/// Apply one gate to a full statevector. Barriers are no-ops.
pub(crate) fn apply_gate(amps: &mut [C64], g: &Gate) -> Result<()> {
    let q = g.qubits();
    match g.kind() {
        GateKind::Barrier => {}
        GateKind::Measure => return Err(Error::ContainsMeasure),
        GateKind::CX => linalg::apply_cx(amps, q[0], q[1]),
        GateKind::Swap => {
            let (ba, bb) = (1usize << q[0], 1usize << q[1]);
            for i in 0..amps.len() {
                if i & ba != 0 && i & bb == 0 {
                    amps.swap(i, (i & !ba) | bb);
                }
            }
        }
        _ => match gate_matrix(g)? {
            GateMatrix::One(m) => linalg::apply_1q(amps, q[0], &m),
            GateMatrix::Two(m) => linalg::apply_2q(amps, q[0], q[1], &m),
        },
    }
    Ok(())
}

/// Relabel basis states: bit `q` of the input index becomes bit `perm[q]`.
pub(crate) fn permute_state(amps: &[C64], perm: &[usize]) -> Vec<C64> {
    let mut out = vec![ZERO; amps.len()];
    for (x, &a) in amps.iter().enumerate() {
        out[permute_index(x, perm)] = a;
    }
    out
}

pub fn permute_index(x: usize, perm: &[usize]) -> usize {
    perm.iter()
        .enumerate()
        .fold(0, |y, (q, &target)| y | (((x >> q) & 1) << target))
}

pub fn is_identity_permutation(perm: &[usize]) -> bool {
    perm.iter().enumerate().all(|(i, &p)| i == p)
}

pub fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!("length {} for width {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection on 0..{n}")));
        }
    }
    Ok(())
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    output_permutation: Vec<usize>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Circuit { width, gates: Vec::new(), output_permutation: (0..width).collect() }
    }

    pub fn from_gates(width: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Circuit::new(width);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        if let Some(&q) = g.qubits().iter().find(|&&q| q >= self.width) {
            return Err(Error::QubitOutOfRange { qubit: q, width: self.width });
        }
        self.gates.push(g);
        Ok(())
    }

    pub fn set_output_permutation(&mut self, perm: Vec<usize>) -> Result<()> {
        check_permutation(&perm, self.width)?;
        self.output_permutation = perm;
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output_permutation(&self) -> &[usize] {
        &self.output_permutation
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind() == kind).count()
    }

    pub fn cx_count(&self) -> usize {
        self.count(GateKind::CX)
    }

    /// Same circuit with the identity output permutation.
    pub fn without_permutation(&self) -> Circuit {
        Circuit { width: self.width, gates: self.gates.clone(), output_permutation: (0..self.width).collect() }
    }

    /// Circuit that runs `self` and then `next`, where `next` addresses the
    /// output labels of `self`.
    pub fn then(&self, next: &Circuit) -> Result<Circuit> {
        if next.width != self.width {
            return Err(Error::InvalidGate(format!("width mismatch {} vs {}", self.width, next.width)));
        }
        let inv = invert_permutation(&self.output_permutation);
        let mut gates = self.gates.clone();
        gates.extend(next.gates.iter().map(|g| g.relabeled(|l| inv[l])));
        let perm = self.output_permutation.iter().map(|&l| next.output_permutation[l]).collect();
        Ok(Circuit { width: self.width, gates, output_permutation: perm })
    }
}

/// Dense unitary of the circuit including its output permutation.
pub fn circuit_unitary(c: &Circuit) -> Result<DMatrix<C64>> {
    if c.width() > UNITARY_WIDTH_LIMIT {
        return Err(Error::WidthLimit { width: c.width(), limit: UNITARY_WIDTH_LIMIT });
    }
    if c.gates().iter().any(|g| g.kind() == GateKind::Measure) {
        return Err(Error::ContainsMeasure);
    }
    let dim = 1usize << c.width();
    let identity_perm = is_identity_permutation(c.output_permutation());
    let mut u = DMatrix::zeros(dim, dim);
    let mut column = vec![ZERO; dim];
    for j in 0..dim {
        column.iter_mut().for_each(|a| *a = ZERO);
        column[j] = ONE;
        for g in c.gates() {
            apply_gate(&mut column, g)?;
        }
        let col = if identity_perm { column.clone() } else { permute_state(&column, c.output_permutation()) };
        for (i, a) in col.into_iter().enumerate() {
            u[(i, j)] = a;
        }
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Layer {
    pub gates: Vec<Gate>,
}

/// Greedy as-soon-as-possible partition into layers of qubit-disjoint gates.
pub fn layerize(c: &Circuit) -> Vec<Layer> {
    let mut next_free = vec![0usize; c.width()];
    let mut layers: Vec<Layer> = Vec::new();
    for g in c.gates() {
        let slot = g.qubits().iter().map(|&q| next_free[q]).max().unwrap_or(0);
        if slot == layers.len() {
            layers.push(Layer::default());
        }
        layers[slot].gates.push(g.clone());
        for &q in g.qubits() {
            next_free[q] = slot + 1;
        }
    }
    layers
}

/// Rebuild a circuit from layers, keeping `template`'s width and permutation.
pub fn concat_layers(template: &Circuit, layers: &[Layer]) -> Circuit {
    Circuit {
        width: template.width,
        gates: layers.iter().flat_map(|l| l.gates.iter().cloned()).collect(),
        output_permutation: template.output_permutation.clone(),
    }
}
