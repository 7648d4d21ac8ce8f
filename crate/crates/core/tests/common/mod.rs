#![allow(dead_code)]

use nalgebra::DMatrix;
use qvol::linalg::{c, Mat2, Mat4};
use qvol::rng::{from_seed, Rng};
use qvol::{Circuit, Gate, C64};
use rand::seq::SliceRandom;
use rand::Rng as _;
use std::f64::consts::PI;

/// Random circuit of u1/u2/u3/h/cx/swap gates.
pub fn random_circuit(width: usize, len: usize, seed: u64) -> Circuit {
    let mut rng = from_seed(seed);
    let mut c = Circuit::new(width);
    for _ in 0..len {
        c.push(random_gate(width, &mut rng)).unwrap();
    }
    c
}

pub fn random_gate(width: usize, rng: &mut Rng) -> Gate {
    let q = rng.random_range(0..width);
    let a = |rng: &mut Rng| rng.random_range(-PI..PI);
    let kinds = if width > 1 { 6 } else { 4 };
    match rng.random_range(0..kinds) {
        0 => Gate::u1(q, a(rng)),
        1 => Gate::u2(q, a(rng), a(rng)),
        2 => Gate::u3(q, a(rng), a(rng), a(rng)),
        3 => Gate::h(q),
        k => {
            let mut qs: Vec<usize> = (0..width).collect();
            qs.shuffle(rng);
            if k == 4 {
                Gate::cx(qs[0], qs[1])
            } else {
                Gate::swap(qs[0], qs[1])
            }
        }
    }
}

/// Dense embedding of a gate by explicit Kronecker products and index
/// arithmetic, independent of the statevector kernels.
pub fn embed(g: &Gate, width: usize) -> DMatrix<C64> {
    let dim = 1 << width;
    let bit = |x: usize, q: usize| (x >> q) & 1;
    match qvol::circuit::gate_matrix(g).unwrap() {
        qvol::circuit::GateMatrix::One(m) => {
            let q = g.qubits()[0];
            DMatrix::from_fn(dim, dim, |i, j| {
                if (i ^ j) & !(1 << q) != 0 {
                    c(0.0, 0.0)
                } else {
                    m[(bit(i, q), bit(j, q))]
                }
            })
        }
        qvol::circuit::GateMatrix::Two(m) => {
            let (a, b) = (g.qubits()[0], g.qubits()[1]);
            let mask = !((1 << a) | (1 << b));
            DMatrix::from_fn(dim, dim, |i, j| {
                if (i ^ j) & mask != 0 {
                    c(0.0, 0.0)
                } else {
                    m[(2 * bit(i, a) + bit(i, b), 2 * bit(j, a) + bit(j, b))]
                }
            })
        }
    }
}

/// Permutation matrix sending basis bit `q` to bit `perm[q]`.
pub fn permutation_matrix(perm: &[usize]) -> DMatrix<C64> {
    let dim = 1 << perm.len();
    let mut p = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        let y = (0..perm.len()).fold(0, |y, q| y | (((x >> q) & 1) << perm[q]));
        p[(y, x)] = c(1.0, 0.0);
    }
    p
}

pub fn oracle_unitary(circ: &Circuit) -> DMatrix<C64> {
    let dim = 1 << circ.width();
    let body = circ.gates().iter().fold(DMatrix::identity(dim, dim), |acc, g| embed(g, circ.width()) * acc);
    permutation_matrix(circ.output_permutation()) * body
}

pub fn max_abs(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn random_local(rng: &mut Rng) -> Mat2 {
    qvol::linalg::u3_matrix(rng.random_range(0.0..PI), rng.random_range(-PI..PI), rng.random_range(-PI..PI))
}

pub fn random_local4(rng: &mut Rng) -> Mat4 {
    qvol::linalg::kron(&random_local(rng), &random_local(rng))
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic 1% critical value of the two-sample KS distance.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
