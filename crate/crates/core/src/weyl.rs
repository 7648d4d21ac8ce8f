//! Two-qubit canonical decomposition and approximate CNOT-basis synthesis.
//!
//! Any `U ∈ U(4)` factors as `phase · (k1l ⊗ k1r) · Ud(α, β, γ) · (k2l ⊗ k2r)`
//! with `Ud(α, β, γ) = exp(i(α XX + β YY + γ ZZ))` and the coordinates
//! restricted to the chamber `π/4 ≥ α ≥ β ≥ |γ|` (with `γ ≥ 0` when
//! `α = π/4`). Those coordinates decide how many CNOTs a gate needs and, via
//! a closed-form trace, how well it can be approximated with fewer.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::circuit::{circuit_unitary, Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{self, c, kron, Mat2, Mat4, C64, I, ONE, ZERO};
use crate::onequbit;

const BOUNDARY_TOLERANCE: f64 = 1e-10;
const TIE_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylCoordinates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl WeylCoordinates {
    pub const fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        WeylCoordinates { alpha, beta, gamma }
    }

    pub const fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub const fn cnot() -> Self {
        Self::new(FRAC_PI_4, 0.0, 0.0)
    }

    pub const fn dcnot() -> Self {
        Self::new(FRAC_PI_4, FRAC_PI_4, 0.0)
    }

    pub const fn swap() -> Self {
        Self::new(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4)
    }

    pub fn is_canonical(&self, slack: f64) -> bool {
        FRAC_PI_4 + slack >= self.alpha && self.alpha + slack >= self.beta && self.beta + slack >= self.gamma.abs()
    }

    /// Super-controlled gates sit at `(π/4, β, 0)`.
    pub fn is_super_controlled(&self, tol: f64) -> bool {
        (self.alpha - FRAC_PI_4).abs() <= tol && self.gamma.abs() <= tol
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        (self.alpha - other.alpha)
            .abs()
            .max((self.beta - other.beta).abs())
            .max((self.gamma - other.gamma).abs())
    }

    fn to_array(self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }
}

fn pauli_axis(axis: usize) -> Mat2 {
    linalg::pauli(axis + 1)
}

/// `exp(i(α XX + β YY + γ ZZ))`.
pub fn canonical_gate(w: WeylCoordinates) -> Mat4 {
    w.to_array().iter().enumerate().fold(Mat4::identity(), |acc, (axis, &angle)| {
        let p = pauli_axis(axis);
        let pp = kron(&p, &p);
        let (s, co) = angle.sin_cos();
        acc * (Mat4::identity() * c(co, 0.0) + pp * c(0.0, s))
    })
}

/// Columns are the magic-basis vectors; conjugation maps SU(2)⊗SU(2) onto
/// SO(4) and diagonalizes every canonical gate.
fn magic_basis() -> Mat4 {
    let s = c(FRAC_1_SQRT_2, 0.0);
    #[rustfmt::skip]
    let b = Mat4::new(
        ONE, ZERO, ZERO, I,
        ZERO, I, ONE, ZERO,
        ZERO, I, -ONE, ZERO,
        ONE, ZERO, ZERO, -I,
    );
    b * s
}

#[derive(Debug, Clone, PartialEq)]
pub struct KakFactors {
    pub k1l: Mat2,
    pub k1r: Mat2,
    pub k2l: Mat2,
    pub k2r: Mat2,
    pub coords: WeylCoordinates,
    pub phase: C64,
}

impl KakFactors {
    pub fn k1(&self) -> Mat4 {
        kron(&self.k1l, &self.k1r)
    }

    pub fn k2(&self) -> Mat4 {
        kron(&self.k2l, &self.k2r)
    }

    pub fn reconstruct(&self) -> Mat4 {
        self.k1() * canonical_gate(self.coords) * self.k2() * self.phase
    }
}

/// Split `l ∝ a ⊗ b` into its factors (`b` normalized to unit determinant).
fn factor_local(l: &Mat4) -> (Mat2, Mat2) {
    let block = |p: usize, r: usize| Mat2::from_fn(|q, s| l[(2 * p + q, 2 * r + s)]);
    let (mut bp, mut br, mut best) = (0, 0, -1.0);
    for p in 0..2 {
        for r in 0..2 {
            let n = block(p, r).norm_squared();
            if n > best {
                (bp, br, best) = (p, r, n);
            }
        }
    }
    let b = onequbit::det_normalized(&block(bp, br));
    let b_dag = b.adjoint();
    let a = Mat2::from_fn(|p, r| (b_dag * block(p, r)).trace() / 2.0);
    (a, b)
}

/// Real orthogonal `P` with `Pᵀ M P` diagonal, for complex symmetric unitary
/// `M`. Real and imaginary parts of such an `M` commute, so a generic real
/// combination of them shares its eigenvectors with `M`.
fn symmetric_unitary_eigenvectors(m: &Mat4) -> Matrix4<f64> {
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let mut best: Option<(f64, Matrix4<f64>)> = None;
    for k in 0..24 {
        let t = 0.4142135623730951 + 1.3247179572447460 * k as f64;
        let s = re * t.cos() + im * t.sin();
        let s = (s + s.transpose()) * 0.5;
        let p = SymmetricEigen::new(s).eigenvectors;
        let pc = p.map(|x| c(x, 0.0));
        let d = pc.transpose() * m * pc;
        let mut off = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    off = off.max(d[(i, j)].norm());
                }
            }
        }
        if off < 1e-13 {
            return p;
        }
        if best.as_ref().is_none_or(|(b, _)| off < *b) {
            best = Some((off, p));
        }
    }
    best.expect("at least one attempt").1
}

struct Canonicalizer {
    k1l: Mat2,
    k1r: Mat2,
    k2l: Mat2,
    k2r: Mat2,
    v: [f64; 3],
}

impl Canonicalizer {
    /// `v[j] -= steps·π/2`, absorbing `exp(i·steps·π/2·PP)` into K2.
    fn shift(&mut self, j: usize, steps: i64) {
        if steps == 0 {
            return;
        }
        self.v[j] -= steps as f64 * FRAC_PI_2;
        if steps % 2 != 0 {
            let p = pauli_axis(j);
            self.k2l = p * self.k2l;
            self.k2r = p * self.k2r;
        }
    }

    /// Flip the signs of `v[j]` and `v[k]` by conjugating with the third Pauli.
    fn negate(&mut self, j: usize, k: usize) {
        let l = 3 - j - k;
        let p = pauli_axis(l);
        self.v[j] = -self.v[j];
        self.v[k] = -self.v[k];
        self.k1l *= p;
        self.k2l = p * self.k2l;
    }

    fn swap(&mut self, j: usize, k: usize) {
        let (lo, hi) = (j.min(k), j.max(k));
        let v = match (lo, hi) {
            (0, 1) => Mat2::new(ONE, ZERO, ZERO, I),
            (1, 2) => linalg::rx(FRAC_PI_2),
            (0, 2) => linalg::ry(FRAC_PI_2),
            _ => unreachable!(),
        };
        self.v.swap(j, k);
        let vd = v.adjoint();
        self.k1l *= vd;
        self.k1r *= vd;
        self.k2l = v * self.k2l;
        self.k2r = v * self.k2r;
    }

    fn run(&mut self) {
        for j in 0..3 {
            let steps = (self.v[j] / FRAC_PI_2).round() as i64;
            self.shift(j, steps);
        }
        for (a, b) in [(0, 1), (1, 2), (0, 1)] {
            if self.v[a].abs() < self.v[b].abs() {
                self.swap(a, b);
            }
        }
        if self.v[0] < 0.0 {
            if self.v[1] < 0.0 {
                self.negate(0, 1);
            } else {
                self.negate(0, 2);
            }
        }
        if self.v[1] < 0.0 {
            self.negate(1, 2);
        }
        if self.v[2] < 0.0 && FRAC_PI_4 - self.v[0] < BOUNDARY_TOLERANCE {
            self.shift(0, 1);
            self.negate(0, 2);
        }
    }
}

pub fn kak_decompose(u: &Mat4) -> Result<KakFactors> {
    let defect = linalg::unitarity_defect(u);
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let det: C64 = u.determinant();
    let u4 = u / det.powf(0.25);
    let b = magic_basis();
    let bd = b.adjoint();
    let up = bd * u4 * b;
    let m2 = up.transpose() * up;

    let mut p = symmetric_unitary_eigenvectors(&m2);
    if p.determinant() < 0.0 {
        p.column_mut(0).neg_mut();
    }
    let pc = p.map(|x| c(x, 0.0));
    let d = pc.transpose() * m2 * pc;
    let mut theta: [f64; 4] = std::array::from_fn(|k| d[(k, k)].arg() / 2.0);
    let half_turns = (theta.iter().sum::<f64>() / PI).round() as i64;
    if half_turns.rem_euclid(2) == 1 {
        theta[0] += PI;
    }
    let a_inv = Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|k, _| C64::from_polar(1.0, -theta[k])));
    let k1 = b * (up * pc * a_inv) * bd;
    let k2 = b * pc.transpose() * bd;
    let (k1l, k1r) = factor_local(&k1);
    let (k2l, k2r) = factor_local(&k2);

    let mut canon = Canonicalizer {
        k1l,
        k1r,
        k2l,
        k2r,
        v: [
            (theta[0] + theta[1] - theta[2] - theta[3]) / 4.0,
            (-theta[0] + theta[1] - theta[2] + theta[3]) / 4.0,
            (theta[0] - theta[1] - theta[2] + theta[3]) / 4.0,
        ],
    };
    canon.run();
    let coords = WeylCoordinates::new(canon.v[0] + 0.0, canon.v[1] + 0.0, canon.v[2] + 0.0);
    let body = kron(&canon.k1l, &canon.k1r) * canonical_gate(coords) * kron(&canon.k2l, &canon.k2r);
    let overlap = linalg::trace_inner(&body, u) / 4.0;
    let phase = overlap / overlap.norm();
    Ok(KakFactors { k1l: canon.k1l, k1r: canon.k1r, k2l: canon.k2l, k2r: canon.k2r, coords, phase })
}

pub fn weyl_of(u: &Mat4) -> Result<WeylCoordinates> {
    kak_decompose(u).map(|k| k.coords)
}

/// Coordinates of the gate followed by a SWAP.
pub fn mirror_coords(w: WeylCoordinates) -> WeylCoordinates {
    let sign = if w.gamma < 0.0 { -1.0 } else { 1.0 };
    let alpha = FRAC_PI_4 - w.gamma.abs();
    let beta = FRAC_PI_4 - w.beta;
    let mut gamma = sign * (w.alpha - FRAC_PI_4);
    if gamma < 0.0 && FRAC_PI_4 - alpha < BOUNDARY_TOLERANCE {
        gamma = -gamma;
    }
    WeylCoordinates::new(alpha, beta, gamma)
}

/// `Tr(Ud(wc)† Ud(wt))` in closed form.
pub fn trace_product(wc: WeylCoordinates, wt: WeylCoordinates) -> C64 {
    let (da, db, dg) = (wc.alpha - wt.alpha, wc.beta - wt.beta, wc.gamma - wt.gamma);
    c(4.0 * da.cos() * db.cos() * dg.cos(), -4.0 * da.sin() * db.sin() * dg.sin())
}

/// Two-qubit average gate fidelity `(4 + |Tr(U†V)|²)/20`.
pub fn avg_fidelity(u: &Mat4, v: &Mat4) -> f64 {
    linalg::average_gate_fidelity4(u, v)
}

fn fidelity_from_trace(t: C64) -> f64 {
    (4.0 + t.norm_sqr()) / 20.0
}

/// Best average fidelity reachable for target `wt` with `applications` uses
/// of basis `wb`.
pub fn expansion_fidelity(applications: u8, wt: WeylCoordinates, wb: WeylCoordinates) -> Result<f64> {
    match applications {
        0 => Ok(fidelity_from_trace(trace_product(WeylCoordinates::identity(), wt))),
        1 => Ok(fidelity_from_trace(trace_product(wb, wt))),
        2 | 3 if !wb.is_super_controlled(1e-9) => Err(Error::Synthesis(format!(
            "{applications}-application expansions need a super-controlled basis, got {wb:?}"
        ))),
        2 => Ok((1.0 + 4.0 * wt.gamma.cos().powi(2)) / 5.0),
        3 => Ok(1.0),
        n => Err(Error::Synthesis(format!("no expansion with {n} applications"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionChoice {
    pub applications: u8,
    pub mirrored: bool,
    pub predicted_fidelity: f64,
}

impl ExpansionChoice {
    /// Approximation fidelity times the basis-gate fidelity per application.
    pub fn overall_fidelity(&self, basis_fidelity: f64) -> f64 {
        self.predicted_fidelity * basis_fidelity.powi(self.applications as i32)
    }
}

/// Maximize `F(i) · F_b^i` over applications `i` (and over the mirrored
/// target when allowed); ties go to fewer applications, then to no mirror.
pub fn select_expansion(wt: WeylCoordinates, basis_fidelity: f64, allow_mirror: bool) -> ExpansionChoice {
    let wb = WeylCoordinates::cnot();
    let mut targets = vec![(false, wt)];
    if allow_mirror {
        targets.push((true, mirror_coords(wt)));
    }
    let mut best: Option<(f64, ExpansionChoice)> = None;
    for applications in 0..=3u8 {
        for &(mirrored, w) in &targets {
            let f = expansion_fidelity(applications, w, wb).expect("cnot basis is super-controlled");
            let score = f * basis_fidelity.powi(applications as i32);
            if best.as_ref().is_none_or(|(s, _)| score > s + TIE_TOLERANCE) {
                best = Some((score, ExpansionChoice { applications, mirrored, predicted_fidelity: f }));
            }
        }
    }
    best.expect("non-empty candidate set").1
}

/// Smallest CNOT count that reproduces `wt` to within `tol` infidelity.
pub fn exact_expansion(wt: WeylCoordinates, tol: f64) -> ExpansionChoice {
    let wb = WeylCoordinates::cnot();
    (0..=3u8)
        .map(|i| ExpansionChoice {
            applications: i,
            mirrored: false,
            predicted_fidelity: expansion_fidelity(i, wt, wb).expect("cnot basis"),
        })
        .find(|ch| 1.0 - ch.predicted_fidelity <= tol)
        .expect("three applications are always exact")
}

/// 4x4 unitary of a two-qubit circuit in gate convention (qubit 0 is the
/// first, most significant, qubit), output permutation included.
pub fn two_qubit_matrix(c2: &Circuit) -> Result<Mat4> {
    if c2.width() != 2 {
        return Err(Error::Synthesis(format!("expected a 2-qubit circuit, got width {}", c2.width())));
    }
    let mut flipped = Circuit::from_gates(2, c2.gates().iter().map(|g| g.relabeled(|q| 1 - q)))?;
    let perm: Vec<usize> = vec![1 - c2.output_permutation()[1], 1 - c2.output_permutation()[0]];
    flipped.set_output_permutation(perm)?;
    let u = circuit_unitary(&flipped)?;
    Ok(Mat4::from_fn(|i, j| u[(i, j)]))
}

/// CNOT-based circuit whose canonical coordinates are `w` (with the number of
/// CNOTs fixed by `applications`; `w` must be reachable with that many).
fn template(applications: u8, w: WeylCoordinates) -> Circuit {
    let gates = match applications {
        0 => vec![],
        1 => vec![Gate::cx(0, 1)],
        2 => vec![
            Gate::cx(0, 1),
            Gate::u3(0, -2.0 * w.alpha, -FRAC_PI_2, FRAC_PI_2),
            Gate::u1(1, -2.0 * w.beta),
            Gate::cx(0, 1),
        ],
        _ => vec![
            Gate::cx(1, 0),
            Gate::u1(0, FRAC_PI_2 - 2.0 * w.gamma),
            Gate::u3(1, FRAC_PI_2 - 2.0 * w.alpha, 0.0, 0.0),
            Gate::cx(0, 1),
            Gate::u3(1, 2.0 * w.beta - FRAC_PI_2, 0.0, 0.0),
            Gate::cx(1, 0),
        ],
    };
    Circuit::from_gates(2, gates).expect("template qubits are in range")
}

fn push_local(out: &mut Vec<Gate>, qubit: usize, m: &Mat2) {
    if let Some(g) = onequbit::minimal_gate(qubit, m) {
        out.push(g);
    }
}

/// Realize `choice` for `target` as a 2-qubit circuit of CX and u-gates.
///
/// The circuit implements `K1 · Ud(w') · K2`, where `K1`, `K2` are the
/// target's local factors and `w'` is the closest point reachable with
/// `choice.applications` CNOTs. A mirrored choice implements `SWAP · target`
/// and records the swap in the circuit's output permutation, so the circuit
/// as a whole approximates `target`.
pub fn synthesize(target: &Mat4, choice: &ExpansionChoice) -> Result<Circuit> {
    let work = if choice.mirrored { linalg::swap() * target } else { *target };
    let kt = kak_decompose(&work)?;
    let w = kt.coords;
    let realized = match choice.applications {
        0 => WeylCoordinates::identity(),
        1 => WeylCoordinates::cnot(),
        2 => WeylCoordinates::new(w.alpha, w.beta, 0.0),
        3 => w,
        n => return Err(Error::Synthesis(format!("no expansion with {n} applications"))),
    };
    let t = template(choice.applications, realized);
    let kk = kak_decompose(&two_qubit_matrix(&t)?)?;
    if kk.coords.max_distance(&realized) > 1e-7 {
        return Err(Error::Synthesis(format!(
            "template reached {:?} instead of {:?}",
            kk.coords, realized
        )));
    }
    let mut gates = Vec::with_capacity(t.len() + 4);
    push_local(&mut gates, 0, &(kk.k2l.adjoint() * kt.k2l));
    push_local(&mut gates, 1, &(kk.k2r.adjoint() * kt.k2r));
    gates.extend(t.gates().iter().cloned());
    push_local(&mut gates, 0, &(kt.k1l * kk.k1l.adjoint()));
    push_local(&mut gates, 1, &(kt.k1r * kk.k1r.adjoint()));
    let mut out = crate::transpiler::optimize_1q(&Circuit::from_gates(2, gates)?);
    if choice.mirrored {
        out.set_output_permutation(vec![1, 0])?;
    }
    Ok(out)
}

/// Haar density on the chamber (normalized to 1 over `π/4 ≥ α ≥ β ≥ |γ|`).
pub fn weyl_density(w: WeylCoordinates) -> f64 {
    let (a, b, g) = (w.alpha, w.beta, w.gamma);
    let cs = |x: f64| x.cos();
    24.0 / PI
        * (cs(4.0 * a) * cs(8.0 * b) + cs(4.0 * b) * cs(8.0 * g) + cs(4.0 * g) * cs(8.0 * a)
            - cs(8.0 * a) * cs(4.0 * b)
            - cs(8.0 * b) * cs(4.0 * g)
            - cs(8.0 * g) * cs(4.0 * a))
}

/// Angle `z` with `(1 + 4cos²z)/5 = F`.
fn fidelity_angle(f: f64) -> f64 {
    ((5.0 * f - 1.0).max(0.0).sqrt() / 2.0).min(1.0).acos()
}

/// `P(F2 < F)` for Haar-random targets, where `F2 = (1 + 4cos²γ)/5`.
pub fn cdf_f2(f: f64) -> f64 {
    if f <= 0.6 {
        return 0.0;
    }
    if f >= 1.0 {
        return 1.0;
    }
    let z = fidelity_angle(f);
    (2.0 * z).cos().powi(4) * ((4.0 * z - PI) * ((4.0 * z).cos() - 2.0) - 3.0 * (4.0 * z).sin()) / PI
}

/// `P(F2m < F)` for the mirror-aware two-application fidelity.
pub fn cdf_f2m(f: f64) -> f64 {
    if f >= 1.0 {
        return 1.0;
    }
    let z = fidelity_angle(f);
    if z >= PI / 8.0 {
        return 0.0;
    }
    (4.0 * z).cos() * ((8.0 * z - PI) * ((8.0 * z).cos() - 2.0) - 3.0 * (8.0 * z).sin()) / PI
}

/// Two-application fidelity with and without the mirror option.
pub fn f2(w: WeylCoordinates) -> f64 {
    (1.0 + 4.0 * w.gamma.cos().powi(2)) / 5.0
}

pub fn f2m(w: WeylCoordinates) -> f64 {
    let z = w.gamma.abs().min((w.alpha - FRAC_PI_4).abs());
    (1.0 + 4.0 * z.cos().powi(2)) / 5.0
}

const STAT_CHUNKS: usize = 64;

/// Canonical coordinates of `n` Haar-random SU(4) samples, reproducible from
/// `seed` regardless of thread count.
pub fn haar_weyl_samples(n: usize, seed: u64) -> Vec<WeylCoordinates> {
    let chunks = crate::par::map_indices(STAT_CHUNKS, |k| {
        let count = n / STAT_CHUNKS + usize::from(k < n % STAT_CHUNKS);
        let mut rng = crate::rng::stream(seed, crate::rng::tag::HAAR_STATS, k as u64);
        (0..count)
            .map(|_| weyl_of(&crate::model::haar_su4(&mut rng)).expect("haar samples are unitary"))
            .collect::<Vec<_>>()
    });
    chunks.into_iter().flatten().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxStats {
    pub basis_fidelity: f64,
    pub mirror: bool,
    pub samples: usize,
    /// Fraction of targets using 0, 1, 2, 3 basis applications.
    pub fractions: [f64; 4],
    pub mean_applications: f64,
    pub mean_best_fidelity: f64,
    pub effective_fidelity: f64,
    /// `(1 − F_e)/(1 − F_b)`; `None` when `F_b = 1`.
    pub infidelity_ratio: Option<f64>,
}

pub fn approx_stats_from(samples: &[WeylCoordinates], basis_fidelity: f64, mirror: bool) -> ApproxStats {
    let mut counts = [0usize; 4];
    let mut sum_best = 0.0;
    for &w in samples {
        let ch = select_expansion(w, basis_fidelity, mirror);
        counts[ch.applications as usize] += 1;
        sum_best += ch.overall_fidelity(basis_fidelity);
    }
    let n = samples.len().max(1) as f64;
    let fractions = counts.map(|k| k as f64 / n);
    let mean_applications = fractions.iter().enumerate().map(|(i, f)| i as f64 * f).sum();
    let mean_best_fidelity = sum_best / n;
    let effective_fidelity = mean_best_fidelity.cbrt();
    let infidelity_ratio =
        (basis_fidelity < 1.0).then(|| (1.0 - effective_fidelity) / (1.0 - basis_fidelity));
    ApproxStats {
        basis_fidelity,
        mirror,
        samples: samples.len(),
        fractions,
        mean_applications,
        mean_best_fidelity,
        effective_fidelity,
        infidelity_ratio,
    }
}

pub fn approx_stats(basis_fidelity: f64, mirror: bool, samples: usize, seed: u64) -> ApproxStats {
    approx_stats_from(&haar_weyl_samples(samples, seed), basis_fidelity, mirror)
}

/// Cube root of the mean best-expansion fidelity over Haar targets.
pub fn effective_fidelity(basis_fidelity: f64, mirror: bool, samples: usize, seed: u64) -> f64 {
    approx_stats(basis_fidelity, mirror, samples, seed).effective_fidelity
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_local(r: &mut rng::Rng) -> Mat2 {
        use rand::Rng as _;
        linalg::u3_matrix(r.random_range(0.0..PI), r.random_range(-PI..PI), r.random_range(-PI..PI))
    }

    #[test]
    fn named_gates_land_on_their_coordinates() {
        assert!(weyl_of(&Mat4::identity()).unwrap().max_distance(&WeylCoordinates::identity()) < 1e-12);
        assert!(weyl_of(&linalg::cnot()).unwrap().max_distance(&WeylCoordinates::cnot()) < 1e-12);
        let cx10 = kron(&linalg::ry(FRAC_PI_2), &Mat2::identity());
        let dcnot = linalg::swap() * linalg::cnot() * linalg::swap() * linalg::cnot();
        assert!(weyl_of(&dcnot).unwrap().max_distance(&WeylCoordinates::dcnot()) < 1e-12);
        assert!(weyl_of(&linalg::swap()).unwrap().max_distance(&WeylCoordinates::swap()) < 1e-12);
        assert!(weyl_of(&(cx10 * linalg::cnot())).unwrap().max_distance(&WeylCoordinates::cnot()) < 1e-12);
    }

    #[test]
    fn reconstruction_and_chamber() {
        let mut r = rng::from_seed(4);
        for _ in 0..200 {
            let u = crate::model::haar_su4(&mut r);
            let k = kak_decompose(&u).unwrap();
            assert!(linalg::phase_aligned_distance(&k.reconstruct(), &u) < 1e-10);
            assert!(k.coords.is_canonical(1e-9));
        }
    }

    #[test]
    fn coordinates_are_local_invariants() {
        let mut r = rng::from_seed(5);
        let w = WeylCoordinates::new(0.3, 0.2, 0.1);
        for _ in 0..50 {
            let a = kron(&random_local(&mut r), &random_local(&mut r));
            let b = kron(&random_local(&mut r), &random_local(&mut r));
            assert!(weyl_of(&(a * canonical_gate(w) * b)).unwrap().max_distance(&w) < 1e-9);
        }
    }

    #[test]
    fn negative_gamma_survives_below_the_boundary() {
        let w = WeylCoordinates::new(0.5, 0.3, -0.2);
        assert!(weyl_of(&canonical_gate(w)).unwrap().max_distance(&w) < 1e-9);
    }

    #[test]
    fn mirror_examples() {
        assert!(mirror_coords(WeylCoordinates::cnot()).max_distance(&WeylCoordinates::dcnot()) < 1e-15);
        assert!(mirror_coords(WeylCoordinates::identity()).max_distance(&WeylCoordinates::swap()) < 1e-15);
        let mut r = rng::from_seed(6);
        for _ in 0..100 {
            let w = weyl_of(&crate::model::haar_su4(&mut r)).unwrap();
            let direct = weyl_of(&(linalg::swap() * canonical_gate(w))).unwrap();
            assert!(direct.max_distance(&mirror_coords(w)) < 1e-9, "{w:?}");
        }
    }

    #[test]
    fn trace_product_matches_dense() {
        assert!((trace_product(WeylCoordinates::cnot(), WeylCoordinates::identity()).re - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        let mut r = rng::from_seed(7);
        for _ in 0..100 {
            let a = weyl_of(&crate::model::haar_su4(&mut r)).unwrap();
            let b = weyl_of(&crate::model::haar_su4(&mut r)).unwrap();
            let dense = linalg::trace_inner(&canonical_gate(a), &canonical_gate(b));
            assert!((dense - trace_product(a, b)).norm() < 1e-12);
        }
    }

    #[test]
    fn expansion_fidelity_examples() {
        let cx = WeylCoordinates::cnot();
        assert_eq!(expansion_fidelity(3, WeylCoordinates::new(0.3, 0.2, 0.1), cx).unwrap(), 1.0);
        assert!((expansion_fidelity(2, WeylCoordinates::swap(), cx).unwrap() - 0.6).abs() < 1e-15);
        assert!((expansion_fidelity(0, WeylCoordinates::identity(), cx).unwrap() - 1.0).abs() < 1e-15);
        assert!((expansion_fidelity(1, cx, cx).unwrap() - 1.0).abs() < 1e-15);
        assert!(expansion_fidelity(2, WeylCoordinates::identity(), WeylCoordinates::identity()).is_err());
        assert!((avg_fidelity(&Mat4::identity(), &linalg::swap()) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn selection_at_perfect_basis() {
        let ch = select_expansion(WeylCoordinates::new(0.5, 0.3, 0.1), 1.0, false);
        assert_eq!(ch.applications, 3);
        let flat = select_expansion(WeylCoordinates::new(0.5, 0.3, 0.0), 1.0, false);
        assert_eq!(flat.applications, 2);
    }

    #[test]
    fn synthesis_hits_predicted_fidelity() {
        let mut r = rng::from_seed(8);
        for _ in 0..50 {
            let u = crate::model::haar_su4(&mut r);
            let w = weyl_of(&u).unwrap();
            for apps in 0..=3u8 {
                for mirrored in [false, true] {
                    let work = if mirrored { mirror_coords(w) } else { w };
                    let predicted = expansion_fidelity(apps, work, WeylCoordinates::cnot()).unwrap();
                    let choice = ExpansionChoice { applications: apps, mirrored, predicted_fidelity: predicted };
                    let c = synthesize(&u, &choice).unwrap();
                    assert_eq!(c.cx_count(), apps as usize);
                    let achieved = avg_fidelity(&two_qubit_matrix(&c).unwrap(), &u);
                    assert!((achieved - predicted).abs() < 1e-9, "{apps} {mirrored} {achieved} {predicted}");
                }
            }
        }
        let u = canonical_gate(WeylCoordinates::new(0.3, 0.2, 0.15));
        let ch = ExpansionChoice { applications: 2, mirrored: false, predicted_fidelity: 0.0 };
        let achieved = avg_fidelity(&two_qubit_matrix(&synthesize(&u, &ch).unwrap()).unwrap(), &u);
        assert!((achieved - (1.0 + 4.0 * 0.15f64.cos().powi(2)) / 5.0).abs() < 1e-9);
    }

    #[test]
    fn local_targets_need_no_cnot() {
        let mut r = rng::from_seed(9);
        let u = kron(&random_local(&mut r), &random_local(&mut r));
        let ch = exact_expansion(weyl_of(&u).unwrap(), 1e-12);
        assert_eq!(ch.applications, 0);
        let c = synthesize(&u, &ch).unwrap();
        assert_eq!(c.cx_count(), 0);
        assert!(1.0 - avg_fidelity(&two_qubit_matrix(&c).unwrap(), &u) < 1e-12);
    }

    #[test]
    fn cdf_endpoints() {
        assert_eq!(cdf_f2(0.6), 0.0);
        assert_eq!(cdf_f2(1.0), 1.0);
        assert!(cdf_f2(0.99) > 0.3 && cdf_f2(0.99) < 0.7);
        assert_eq!(cdf_f2m(0.85), 0.0);
        assert_eq!(cdf_f2m(1.0), 1.0);
        let mut prev = 0.0;
        for k in 0..=400 {
            let f = 0.6 + 0.4 * k as f64 / 400.0;
            let v = cdf_f2(f);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn perfect_basis_has_unit_effective_fidelity() {
        assert!((effective_fidelity(1.0, false, 2000, 1) - 1.0).abs() < 1e-12);
    }
}
