//! Dense statevector simulation, heavy-output sets and noisy sampling.
//!
//! Noise is a stochastic Pauli channel: after each gate, with probability
//! `p` a uniformly random non-identity Pauli on the gate's qubits is applied.
//! Readout flips each bit independently with probability `epsM`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_gate, permute_index, Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::linalg::{self, C64, ONE, ZERO};
use crate::rng;

pub const STATEVECTOR_WIDTH_LIMIT: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    width: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// `|0…0⟩` on `width` qubits.
    pub fn new(width: usize) -> Result<Self> {
        if width > STATEVECTOR_WIDTH_LIMIT {
            return Err(Error::WidthLimit { width, limit: STATEVECTOR_WIDTH_LIMIT });
        }
        let mut amps = vec![ZERO; 1 << width];
        amps[0] = ONE;
        Ok(Statevector { width, amps })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Apply a unitary gate; barriers and measurements are no-ops (readout
    /// is implicit at the end).
    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        if let Some(&q) = g.qubits().iter().find(|&&q| q >= self.width) {
            return Err(Error::QubitOutOfRange { qubit: q, width: self.width });
        }
        match g.kind() {
            GateKind::Measure | GateKind::Barrier => Ok(()),
            _ => apply_gate(&mut self.amps, g),
        }
    }

    /// Pauli `index` (0 = I, 1 = X, 2 = Y, 3 = Z) on `qubit`.
    pub fn apply_pauli(&mut self, qubit: usize, index: usize) {
        if index != 0 {
            linalg::apply_1q(&mut self.amps, qubit, &linalg::pauli(index));
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probabilities indexed by physical basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Final statevector of `c` applied to `|0…0⟩`, before output relabelling.
pub fn final_state(c: &Circuit) -> Result<Statevector> {
    let mut sv = Statevector::new(c.width())?;
    for g in c.gates() {
        sv.apply(g)?;
    }
    Ok(sv)
}

/// Ideal output distribution indexed by output label (the circuit's output
/// permutation applied).
pub fn ideal_probabilities(c: &Circuit) -> Result<Vec<f64>> {
    let physical = final_state(c)?.probabilities();
    let perm = c.output_permutation();
    let mut p = vec![0.0; physical.len()];
    for (x, px) in physical.into_iter().enumerate() {
        p[permute_index(x, perm)] = px;
    }
    Ok(p)
}

/// Outcomes whose ideal probability is strictly above the median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavySet {
    pub width: usize,
    /// Output labels, ascending.
    pub members: Vec<usize>,
    pub median: f64,
    /// Ideal probability mass of the members.
    pub ideal_heavy_probability: f64,
}

impl HeavySet {
    pub fn from_probabilities(p: &[f64]) -> Self {
        let width = p.len().trailing_zeros() as usize;
        let mut sorted = p.to_vec();
        sorted.sort_by(f64::total_cmp);
        let half = p.len() / 2;
        let median = if p.len() == 1 { sorted[0] } else { (sorted[half] + sorted[half - 1]) / 2.0 };
        let members: Vec<usize> = (0..p.len()).filter(|&x| p[x] > median).collect();
        let ideal_heavy_probability = members.iter().map(|&x| p[x]).sum();
        HeavySet { width, members, median, ideal_heavy_probability }
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn bitstrings(&self) -> Vec<String> {
        self.members.iter().map(|&x| bitstring(x, self.width)).collect()
    }
}

pub fn heavy_set(c: &Circuit) -> Result<HeavySet> {
    Ok(HeavySet::from_probabilities(&ideal_probabilities(c)?))
}

/// `x` as a bitstring, highest qubit first.
pub fn bitstring(x: usize, width: usize) -> String {
    (0..width).rev().map(|q| if (x >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpretation {
    /// Rates are Pauli-injection probabilities.
    #[default]
    Pauli,
    /// Rates are average gate infidelities `r`; converted to injection
    /// probabilities `p = r·(d+1)/d` (`1.5·r` for one qubit, `1.25·r` for two).
    Infidelity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeOverride {
    pub qubits: [usize; 2],
    pub eps2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub eps1: f64,
    pub eps2: f64,
    #[serde(rename = "epsM")]
    pub eps_m: f64,
    #[serde(default)]
    pub interpretation: Interpretation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeOverride>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::ideal()
    }
}

const DEVICE_NOISE: [(&str, &str); 4] = [
    ("tenerife", include_str!("../data/noise/tenerife.json")),
    ("melbourne", include_str!("../data/noise/melbourne.json")),
    ("tokyo", include_str!("../data/noise/tokyo.json")),
    ("johannesburg", include_str!("../data/noise/johannesburg.json")),
];

/// Injection probabilities after interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliRates {
    pub p1: f64,
    pub p2: f64,
    pub p_m: f64,
    edges: Vec<([usize; 2], f64)>,
}

impl PauliRates {
    pub fn two_qubit(&self, a: usize, b: usize) -> f64 {
        self.edges
            .iter()
            .find(|(e, _)| *e == [a, b] || *e == [b, a])
            .map_or(self.p2, |&(_, p)| p)
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_m == 0.0 && self.edges.iter().all(|&(_, p)| p == 0.0)
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        NoiseModel::pauli(0.0, 0.0, 0.0)
    }

    pub fn pauli(eps1: f64, eps2: f64, eps_m: f64) -> Self {
        NoiseModel { eps1, eps2, eps_m, interpretation: Interpretation::Pauli, edges: Vec::new() }
    }

    /// Average error rates of one of the shipped devices.
    pub fn device(name: &str) -> Result<Self> {
        let (_, text) = DEVICE_NOISE
            .iter()
            .find(|(d, _)| d.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config(format!("no noise data for device `{name}`")))?;
        Self::from_json(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: NoiseModel = serde_json::from_str(text).map_err(|e| Error::Config(format!("noise model: {e}")))?;
        m.rates()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("noise model serializes")
    }

    pub fn rates(&self) -> Result<PauliRates> {
        let check = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(Error::Config(format!("{name} = {v} is not a probability")))
            }
        };
        let (s1, s2) = match self.interpretation {
            Interpretation::Pauli => (1.0, 1.0),
            Interpretation::Infidelity => (1.5, 1.25),
        };
        let p1 = check("eps1 (converted)", s1 * check("eps1", self.eps1)?)?;
        let p2 = check("eps2 (converted)", s2 * check("eps2", self.eps2)?)?;
        let p_m = check("epsM", self.eps_m)?;
        let edges = self
            .edges
            .iter()
            .map(|e| Ok((e.qubits, check("edge eps2 (converted)", s2 * check("edge eps2", e.eps2)?)?)))
            .collect::<Result<_>>()?;
        Ok(PauliRates { p1, p2, p_m, edges })
    }
}

/// Sampler for one circuit: caches the noiseless output distribution so
/// error-free shots skip simulation.
pub struct NoisySampler<'a> {
    circuit: &'a Circuit,
    rates: PauliRates,
    gate_rates: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<'a> NoisySampler<'a> {
    pub fn new(circuit: &'a Circuit, noise: &NoiseModel) -> Result<Self> {
        let rates = noise.rates()?;
        let gate_rates = circuit
            .gates()
            .iter()
            .map(|g| match g.kind() {
                k if k.is_single_qubit_unitary() => rates.p1,
                k if k.is_two_qubit_unitary() => rates.two_qubit(g.qubits()[0], g.qubits()[1]),
                _ => 0.0,
            })
            .collect();
        let cumulative = cumulative(&final_state(circuit)?.probabilities());
        Ok(NoisySampler { circuit, rates, gate_rates, cumulative })
    }

    /// One shot, returned as an output label. Every shot consumes the same
    /// number of random draws regardless of the rates, so runs at different
    /// error rates with the same seed share their random numbers.
    pub fn shot(&self, rng: &mut rng::Rng) -> Result<usize> {
        let mut events: Vec<(usize, usize)> = Vec::new();
        for (i, (&p, g)) in self.gate_rates.iter().zip(self.circuit.gates()).enumerate() {
            let u: f64 = rng.random();
            let k = g.qubits().len().min(2);
            let pauli = rng.random_range(1..(1usize << (2 * k)).max(2));
            if u < p {
                events.push((i, pauli));
            }
        }
        let u: f64 = rng.random();
        let mut x = if events.is_empty() {
            draw(&self.cumulative, u)
        } else {
            let mut sv = Statevector::new(self.circuit.width())?;
            let mut next = events.iter().peekable();
            for (i, g) in self.circuit.gates().iter().enumerate() {
                sv.apply(g)?;
                if let Some(&(_, pauli)) = next.next_if(|(j, _)| *j == i) {
                    let q = g.qubits();
                    if q.len() == 1 {
                        sv.apply_pauli(q[0], pauli);
                    } else {
                        sv.apply_pauli(q[0], pauli >> 2);
                        sv.apply_pauli(q[1], pauli & 3);
                    }
                }
            }
            draw(&cumulative(&sv.probabilities()), u)
        };
        for q in 0..self.circuit.width() {
            let flip: f64 = rng.random();
            if flip < self.rates.p_m {
                x ^= 1 << q;
            }
        }
        Ok(permute_index(x, self.circuit.output_permutation()))
    }
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|&v| {
            acc += v;
            acc
        })
        .collect()
}

fn draw(cumulative: &[f64], u: f64) -> usize {
    let total = *cumulative.last().expect("non-empty distribution");
    let target = u * total;
    cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1)
}

/// `shots` noisy outcomes (output labels) of `c`; shot `k` draws from its
/// own stream derived from `seed`.
pub fn sample_outputs(c: &Circuit, noise: &NoiseModel, shots: usize, seed: u64) -> Result<Vec<usize>> {
    let sampler = NoisySampler::new(c, noise)?;
    (0..shots).map(|k| sampler.shot(&mut rng::stream(seed, rng::tag::SAMPLING, k as u64))).collect()
}

/// Heavy count and heavy fraction of `samples`.
pub fn heavy_fraction(samples: &[usize], hs: &HeavySet) -> (usize, f64) {
    let n_h = samples.iter().filter(|&&x| hs.contains(x)).count();
    let h = if samples.is_empty() { 0.0 } else { n_h as f64 / samples.len() as f64 };
    (n_h, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_hadamard_distributions() {
        assert_eq!(ideal_probabilities(&Circuit::new(2)).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let h = Circuit::from_gates(1, [Gate::h(0)]).unwrap();
        let p = ideal_probabilities(&h).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn output_permutation_relabels_outcomes() {
        let mut c = Circuit::from_gates(2, [Gate::u3(0, std::f64::consts::PI, 0.0, 0.0)]).unwrap();
        assert!(ideal_probabilities(&c).unwrap()[1] > 0.99);
        c.set_output_permutation(vec![1, 0]).unwrap();
        assert!(ideal_probabilities(&c).unwrap()[2] > 0.99);
    }

    #[test]
    fn heavy_set_edge_cases() {
        let hs = HeavySet::from_probabilities(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(hs.median, 0.0);
        assert_eq!(hs.bitstrings(), vec!["00".to_string()]);
        assert_eq!(hs.ideal_heavy_probability, 1.0);
        assert!(HeavySet::from_probabilities(&[0.25; 4]).is_empty());
        assert_eq!(heavy_fraction(&[0, 0], &hs), (2, 1.0));
        assert_eq!(heavy_fraction(&[1, 2], &HeavySet::from_probabilities(&[0.25; 4])), (0, 0.0));
    }

    #[test]
    fn bitstrings_are_msb_first() {
        assert_eq!(bitstring(1, 3), "001");
        assert_eq!(bitstring(6, 3), "110");
    }

    #[test]
    fn noiseless_identity_is_all_zero() {
        let s = sample_outputs(&Circuit::new(3), &NoiseModel::ideal(), 50, 1).unwrap();
        assert!(s.iter().all(|&x| x == 0));
    }

    #[test]
    fn readout_flip_at_one_half() {
        let s = sample_outputs(&Circuit::new(1), &NoiseModel::pauli(0.0, 0.0, 0.5), 4000, 3).unwrap();
        let ones = s.iter().filter(|&&x| x == 1).count() as f64 / 4000.0;
        assert!((ones - 0.5).abs() < 3.0 * (0.25f64 / 4000.0).sqrt());
    }

    #[test]
    fn noise_json_and_interpretation() {
        let m = NoiseModel::from_json(r#"{"eps1": 0.002, "eps2": 0.02, "epsM": 0.03, "interpretation": "infidelity"}"#)
            .unwrap();
        let r = m.rates().unwrap();
        assert!((r.p1 - 0.003).abs() < 1e-15);
        assert!((r.p2 - 0.025).abs() < 1e-15);
        assert_eq!(r.p_m, 0.03);
        assert!(NoiseModel::from_json(r#"{"eps1": 1.5, "eps2": 0.0, "epsM": 0.0}"#).is_err());
        assert!(NoiseModel::from_json(r#"{"eps1": 0.1, "eps2": 0.0}"#).is_err());
        assert!(NoiseModel::from_json(r#"{"eps1": 0, "eps2": 0, "epsM": 0, "typo": 1}"#).is_err());
        let e = NoiseModel::from_json(r#"{"eps1": 0, "eps2": 0.1, "epsM": 0, "edges": [{"qubits": [0, 1], "eps2": 0.5}]}"#)
            .unwrap()
            .rates()
            .unwrap();
        assert_eq!(e.two_qubit(1, 0), 0.5);
        assert_eq!(e.two_qubit(1, 2), 0.1);
    }

    #[test]
    fn shipped_noise_files_parse() {
        for (name, _) in DEVICE_NOISE {
            assert_eq!(NoiseModel::device(name).unwrap().interpretation, Interpretation::Infidelity);
        }
        let tokyo = NoiseModel::device("Tokyo").unwrap();
        assert_eq!((tokyo.eps1, tokyo.eps2, tokyo.eps_m), (1.6e-3, 2.1e-2, 3.0e-2));
        assert!(NoiseModel::device("nowhere").is_err());
    }
}
