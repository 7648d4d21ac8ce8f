//! Euler-angle recovery and minimal-pulse single-qubit gate selection.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::circuit::Gate;
use crate::linalg::{Mat2, C64};

/// Angles at or within this distance of a special value are snapped to it.
pub const SNAP_TOLERANCE: f64 = 1e-9;

/// Wrap an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// `(θ, φ, λ)` with `m ∝ u3(θ, φ, λ)`, `θ ∈ [0, π]`, `φ, λ ∈ (-π, π]`.
///
/// `φ + λ` comes from the diagonal phases and `φ − λ` from the off-diagonal
/// ones; whichever pair is negligible leaves its combination free, fixed by
/// `λ = 0` (diagonal vanishes) or `φ = 0` (off-diagonal vanishes).
pub fn u3_angles(m: &Mat2) -> (f64, f64, f64) {
    const NEGLIGIBLE: f64 = 1e-12;
    let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let cos_half = (m00.norm() + m11.norm()) / 2.0;
    let sin_half = (m01.norm() + m10.norm()) / 2.0;
    let theta = 2.0 * sin_half.atan2(cos_half);
    let scale = cos_half.hypot(sin_half);
    let sum = (cos_half > NEGLIGIBLE * scale).then(|| m11.arg() - m00.arg());
    let diff = (sin_half > NEGLIGIBLE * scale).then(|| m10.arg() - (-m01).arg());
    let (phi, lambda) = match (sum, diff) {
        (Some(s), Some(d)) => {
            let (phi, lambda) = ((s + d) / 2.0, (s - d) / 2.0);
            // Halving leaves a π ambiguity; m10·conj(m00) must point along e^{iφ}.
            if (m10 * m00.conj() * C64::from_polar(1.0, -phi)).re < 0.0 {
                (phi + PI, lambda + PI)
            } else {
                (phi, lambda)
            }
        }
        (Some(s), None) => (0.0, s),
        (None, Some(d)) => (d, 0.0),
        (None, None) => (0.0, 0.0),
    };
    (theta, wrap_angle(phi), wrap_angle(lambda))
}

/// Cheapest of u1/u2/u3 equal to `m` up to global phase; `None` when `m` is
/// proportional to the identity.
pub fn minimal_gate(qubit: usize, m: &Mat2) -> Option<Gate> {
    let (theta, phi, lambda) = u3_angles(m);
    if theta.abs() < SNAP_TOLERANCE {
        let sum = wrap_angle(phi + lambda);
        if sum.abs() < SNAP_TOLERANCE {
            None
        } else {
            Some(Gate::u1(qubit, sum))
        }
    } else if (theta - FRAC_PI_2).abs() < SNAP_TOLERANCE {
        Some(Gate::u2(qubit, phi, lambda))
    } else {
        Some(Gate::u3(qubit, theta, phi, lambda))
    }
}

pub fn gate_2x2(g: &Gate) -> Option<Mat2> {
    match crate::circuit::gate_matrix(g) {
        Ok(crate::circuit::GateMatrix::One(m)) => Some(m),
        _ => None,
    }
}

/// Product of a sequence of single-qubit gates in time order.
pub fn compose<'a>(gates: impl IntoIterator<Item = &'a Gate>) -> Mat2 {
    gates
        .into_iter()
        .fold(Mat2::identity(), |acc, g| gate_2x2(g).expect("single-qubit unitary") * acc)
}

pub fn det_normalized(m: &Mat2) -> Mat2 {
    let det: C64 = m.determinant();
    m / det.sqrt()
}
