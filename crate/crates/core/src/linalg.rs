//! Small dense complex linear algebra used throughout the crate.
//!
//! Two-qubit matrices follow the convention that the *first* qubit of a gate
//! is the most significant bit of the local 4x4 index, so `kron(a, b)` applies
//! `a` to the first qubit. Inside full-width statevectors qubit 0 is the least
//! significant bit of the basis index.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Pauli by index: 0 = I, 1 = X, 2 = Y, 3 = Z.
pub fn pauli(index: usize) -> Mat2 {
    match index {
        0 => Mat2::identity(),
        1 => pauli_x(),
        2 => pauli_y(),
        3 => pauli_z(),
        _ => panic!("pauli index {index} out of range"),
    }
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|i, j| a[(i >> 1, j >> 1)] * b[(i & 1, j & 1)])
}

pub fn rz(theta: f64) -> Mat2 {
    Mat2::new(C64::from_polar(1.0, -theta / 2.0), ZERO, ZERO, C64::from_polar(1.0, theta / 2.0))
}

pub fn rx(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0))
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

/// Closed form of `u3(θ, φ, λ)` with a real, non-negative top-left entry.
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(
        c(co, 0.0),
        -C64::from_polar(s, lambda),
        C64::from_polar(s, phi),
        C64::from_polar(co, phi + lambda),
    )
}

/// Controlled-NOT with the first qubit as control.
pub fn cnot() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn swap() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// Largest entry of `|U†U − I|`.
pub fn unitarity_defect<R: nalgebra::Dim, C: nalgebra::Dim, S>(u: &nalgebra::Matrix<C64, R, C, S>) -> f64
where
    S: nalgebra::RawStorage<C64, R, C>,
{
    let (rows, cols) = u.shape();
    if rows != cols {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..cols {
        for j in 0..cols {
            let mut acc = ZERO;
            for k in 0..rows {
                acc += u[(k, i)].conj() * u[(k, j)];
            }
            if i == j {
                acc -= ONE;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// `Tr(U† V)` for square matrices of equal size.
pub fn trace_inner<R: nalgebra::Dim, C: nalgebra::Dim, S1, S2>(
    u: &nalgebra::Matrix<C64, R, C, S1>,
    v: &nalgebra::Matrix<C64, R, C, S2>,
) -> C64
where
    S1: nalgebra::RawStorage<C64, R, C>,
    S2: nalgebra::RawStorage<C64, R, C>,
{
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Average gate fidelity between two unitaries on `log2(dim)` qubits:
/// `(|Tr(U†V)|²/d + 1)/(d + 1)`.
pub fn average_gate_fidelity(u: &DMatrix<C64>, v: &DMatrix<C64>) -> f64 {
    let d = u.nrows() as f64;
    let t = trace_inner(u, v).norm_sqr();
    (t / d + 1.0) / (d + 1.0)
}

/// Two-qubit form `(4 + |Tr(U†V)|²)/20`.
pub fn average_gate_fidelity4(u: &Mat4, v: &Mat4) -> f64 {
    (4.0 + trace_inner(u, v).norm_sqr()) / 20.0
}

/// Max-norm distance after removing the relative global phase.
pub fn phase_aligned_distance<R: nalgebra::Dim, C: nalgebra::Dim, S1, S2>(
    u: &nalgebra::Matrix<C64, R, C, S1>,
    v: &nalgebra::Matrix<C64, R, C, S2>,
) -> f64
where
    S1: nalgebra::RawStorage<C64, R, C>,
    S2: nalgebra::RawStorage<C64, R, C>,
{
    let t = trace_inner(v, u);
    let phase = if t.norm() > 1e-300 { t / t.norm() } else { ONE };
    u.iter()
        .zip(v.iter())
        .map(|(a, b)| (a - phase * b).norm())
        .fold(0.0, f64::max)
}

pub fn to_dynamic4(m: &Mat4) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
}

/// Apply a one-qubit matrix to `qubit` of a statevector.
pub fn apply_1q(amps: &mut [C64], qubit: usize, m: &Mat2) {
    let bit = 1usize << qubit;
    let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    for i in 0..amps.len() {
        if i & bit == 0 {
            let j = i | bit;
            let (a0, a1) = (amps[i], amps[j]);
            amps[i] = m00 * a0 + m01 * a1;
            amps[j] = m10 * a0 + m11 * a1;
        }
    }
}

/// Apply a two-qubit matrix whose local index is `2·bit(first) + bit(second)`.
pub fn apply_2q(amps: &mut [C64], first: usize, second: usize, m: &Mat4) {
    let bf = 1usize << first;
    let bs = 1usize << second;
    for i in 0..amps.len() {
        if i & (bf | bs) == 0 {
            let idx = [i, i | bs, i | bf, i | bf | bs];
            let a = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for (r, &target) in idx.iter().enumerate() {
                amps[target] = m[(r, 0)] * a[0] + m[(r, 1)] * a[1] + m[(r, 2)] * a[2] + m[(r, 3)] * a[3];
            }
        }
    }
}

/// CNOT specialised kernel: swaps amplitude pairs, no arithmetic.
pub fn apply_cx(amps: &mut [C64], control: usize, target: usize) {
    let bc = 1usize << control;
    let bt = 1usize << target;
    for i in 0..amps.len() {
        if i & bc != 0 && i & bt == 0 {
            amps.swap(i, i | bt);
        }
    }
}
