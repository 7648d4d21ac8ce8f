//! Random model circuits: `d` layers, each a uniformly random pairing of the
//! `m` qubits followed by independent Haar-random SU(4) blocks on the pairs.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{c, Mat4, C64};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCircuitSpec {
    pub width: usize,
    pub depth: usize,
    pub seed: u64,
}

impl ModelCircuitSpec {
    pub fn new(width: usize, depth: usize, seed: u64) -> Result<Self> {
        if width < 1 || depth < 1 {
            return Err(Error::Config(format!("model circuits need m ≥ 1 and d ≥ 1, got m={width} d={depth}")));
        }
        Ok(ModelCircuitSpec { width, depth, seed })
    }
}

/// Haar-random element of SU(4): QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`, then scaled to unit determinant.
pub fn haar_su4(rng: &mut Rng) -> Mat4 {
    let g = Mat4::from_fn(|_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..4 {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..4 {
            q[(i, j)] *= phase;
        }
    }
    let det: C64 = q.determinant();
    let q = q / det.powf(0.25);
    // restore exact unitarity lost to rounding in the determinant root
    let det_after: C64 = q.determinant();
    q / det_after.powf(0.25)
}

/// One layer: a uniform permutation and `⌊m/2⌋` blocks on
/// `(π(0), π(1)), (π(2), π(3)), …`. For odd `m` qubit `π(m−1)` idles.
pub fn sample_layer(width: usize, rng: &mut Rng) -> Result<(Vec<usize>, Vec<Mat4>)> {
    if width < 2 {
        return Err(Error::Config(format!("a layer needs at least 2 qubits, got {width}")));
    }
    let mut perm: Vec<usize> = (0..width).collect();
    perm.shuffle(rng);
    let blocks = (0..width / 2).map(|_| haar_su4(rng)).collect();
    Ok((perm, blocks))
}

pub fn build_model_circuit(spec: &ModelCircuitSpec) -> Result<Circuit> {
    let mut rng = rng::from_seed(spec.seed);
    let mut circuit = Circuit::new(spec.width);
    if spec.width < 2 {
        return Ok(circuit);
    }
    for _ in 0..spec.depth {
        let (perm, blocks) = sample_layer(spec.width, &mut rng)?;
        for (pair, u) in perm.chunks_exact(2).zip(blocks) {
            circuit.push(Gate::su4(pair[0], pair[1], u)?)?;
        }
    }
    Ok(circuit)
}

/// Seed of circuit `index` in a batch drawn from `master`.
pub fn batch_seed(master: u64, index: usize) -> u64 {
    rng::derive_seed(master, rng::tag::MODEL_CIRCUIT, index as u64)
}
