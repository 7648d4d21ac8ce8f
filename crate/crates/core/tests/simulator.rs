mod common;

use common::{random_circuit, random_gate};
use nalgebra::DMatrix;
use proptest::prelude::*;
use qvol::circuit::circuit_unitary;
use qvol::linalg::{average_gate_fidelity, kron, pauli, to_dynamic4};
use qvol::model::{build_model_circuit, ModelCircuitSpec};
use qvol::rng::from_seed;
use qvol::simulator::*;
use qvol::transpiler::{run_pipeline, CouplingGraph, PassPipeline};
use qvol::{Circuit, Gate};

fn model(m: usize, d: usize, seed: u64) -> Circuit {
    build_model_circuit(&ModelCircuitSpec::new(m, d, seed).unwrap()).unwrap()
}

fn transpiled(m: usize, d: usize, seed: u64) -> Circuit {
    let c = model(m, d, seed);
    run_pipeline(&c, &CouplingGraph::line(m).unwrap(), &PassPipeline::standard(seed)).unwrap().mapping.circuit
}

fn within_3_sigma(k: usize, n: usize, p: f64) -> bool {
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (k as f64 - n as f64 * p).abs() <= 3.0 * sigma
}

#[test]
fn ideal_probabilities_match_dense_column() {
    for seed in 0..10 {
        let mut c = random_circuit(3, 15, seed);
        if seed % 2 == 0 {
            c.set_output_permutation(vec![2, 0, 1]).unwrap();
        }
        let u = circuit_unitary(&c).unwrap();
        let p = ideal_probabilities(&c).unwrap();
        for (x, px) in p.iter().enumerate() {
            assert!((px - u[(x, 0)].norm_sqr()).abs() < 1e-10);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn small_examples() {
    assert_eq!(ideal_probabilities(&Circuit::new(2)).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    let h = ideal_probabilities(&Circuit::from_gates(1, [Gate::h(0)]).unwrap()).unwrap();
    assert!((h[0] - 0.5).abs() < 1e-15 && (h[1] - 0.5).abs() < 1e-15);
    let hs = heavy_set(&Circuit::new(2)).unwrap();
    assert_eq!(hs.bitstrings(), vec!["00".to_string()]);
    assert_eq!(hs.median, 0.0);
    assert_eq!(hs.ideal_heavy_probability, 1.0);
    assert!(HeavySet::from_probabilities(&[0.25; 4]).is_empty());
}

#[test]
fn heavy_set_matches_brute_force() {
    for seed in 0..50 {
        let c = model(2, 2, seed);
        let p = ideal_probabilities(&c).unwrap();
        let hs = heavy_set(&c).unwrap();
        // with distinct probabilities, x is heavy iff at least half the outcomes are lighter
        let brute: Vec<usize> = (0..4).filter(|&x| p.iter().filter(|&&q| q < p[x]).count() >= 2).collect();
        assert_eq!(hs.members, brute);
    }
}

#[test]
fn haar_circuits_have_half_heavy_outputs() {
    for m in 2..7 {
        for seed in 0..10 {
            let hs = heavy_set(&model(m, m, seed)).unwrap();
            assert_eq!(hs.len(), 1 << (m - 1));
            assert!(hs.ideal_heavy_probability > 0.5);
        }
    }
}

#[test]
fn ideal_heavy_mean_approaches_the_asymptote() {
    let mean: f64 = (0..200).map(|s| heavy_set(&model(5, 5, s)).unwrap().ideal_heavy_probability).sum::<f64>() / 200.0;
    let target = (1.0 + std::f64::consts::LN_2) / 2.0;
    assert!((mean - target).abs() < 0.03, "{mean}");
}

#[test]
fn norm_is_preserved_over_many_gates() {
    let mut rng = from_seed(17);
    let mut sv = Statevector::new(5).unwrap();
    for _ in 0..10_000 {
        sv.apply(&random_gate(5, &mut rng)).unwrap();
    }
    assert!((sv.norm_sqr() - 1.0).abs() < 1e-9);
}

#[test]
fn noiseless_identity_always_reads_zero() {
    let c = Circuit::new(3);
    assert!(sample_outputs(&c, &NoiseModel::ideal(), 500, 1).unwrap().iter().all(|&x| x == 0));
}

#[test]
fn readout_flips() {
    let shots = 20_000;
    let ones = sample_outputs(&Circuit::new(1), &NoiseModel::pauli(0.0, 0.0, 0.5), shots, 2).unwrap();
    assert!(within_3_sigma(ones.iter().filter(|&&x| x == 1).count(), shots, 0.5));
}

/// One noisy gate: with probability p a uniformly random X, Y or Z follows.
/// X and Y move the |1> weight q to 1 − q, Z leaves it.
#[test]
fn single_gate_trajectories_match_the_channel() {
    let (p, theta) = (0.3, 1.0f64);
    let c = Circuit::from_gates(1, [Gate::u3(0, theta, 0.4, -0.2)]).unwrap();
    let q = (theta / 2.0).sin().powi(2);
    let expected = (1.0 - p) * q + p / 3.0 * (2.0 * (1.0 - q) + q);
    let shots = 100_000;
    let ones = sample_outputs(&c, &NoiseModel::pauli(p, 0.0, 0.0), shots, 3).unwrap().iter().filter(|&&x| x == 1).count();
    assert!(within_3_sigma(ones, shots, expected), "{ones} vs {}", expected * shots as f64);
}

#[test]
fn ideal_heavy_fraction_matches_exact_sum() {
    let c = model(2, 2, 77);
    let hs = heavy_set(&c).unwrap();
    let shots = 100_000;
    let (n_h, h) = heavy_fraction(&sample_outputs(&c, &NoiseModel::ideal(), shots, 4).unwrap(), &hs);
    assert!(within_3_sigma(n_h, shots, hs.ideal_heavy_probability));
    assert_eq!(h, n_h as f64 / shots as f64);
    assert_eq!(heavy_fraction(&[0, 1], &HeavySet::from_probabilities(&[0.25; 4])), (0, 0.0));
    assert_eq!(heavy_fraction(&[], &hs), (0, 0.0));
}

#[test]
fn heavy_fraction_falls_with_two_qubit_error() {
    let circuits: Vec<(Circuit, HeavySet)> = (0..20)
        .map(|s| {
            let c = transpiled(3, 3, s);
            let hs = heavy_set(&c).unwrap();
            (c, hs)
        })
        .collect();
    let shots = 500;
    let n = (circuits.len() * shots) as f64;
    let means: Vec<f64> = [0.0, 0.01, 0.03, 0.05]
        .iter()
        .map(|&e| {
            let noise = NoiseModel::pauli(e / 10.0, e, 0.0);
            circuits
                .iter()
                .enumerate()
                .map(|(i, (c, hs))| heavy_fraction(&sample_outputs(c, &noise, shots, i as u64).unwrap(), hs).0)
                .sum::<usize>() as f64
                / n
        })
        .collect();
    for w in means.windows(2) {
        let sigma = (w[0] * (1.0 - w[0]) / n).sqrt();
        assert!(w[1] <= w[0] + 3.0 * sigma, "{means:?}");
    }
    assert!(means[3] < means[0]);
}

#[test]
fn complete_two_qubit_error_gives_one_half() {
    let noise = NoiseModel::pauli(0.0, 1.0, 0.0);
    let (mut heavy, mut total) = (0, 0);
    for s in 0..50 {
        let c = transpiled(3, 3, s);
        let hs = heavy_set(&c).unwrap();
        let (n_h, _) = heavy_fraction(&sample_outputs(&c, &noise, 200, s).unwrap(), &hs);
        heavy += n_h;
        total += 200;
    }
    assert!(within_3_sigma(heavy, total, 0.5), "{}", heavy as f64 / total as f64);
}

/// Average gate infidelity of the channel "with probability p apply a
/// uniformly random non-identity Pauli", computed from dense Paulis.
fn channel_infidelity(p: f64, k: usize) -> f64 {
    let paulis: Vec<DMatrix<qvol::C64>> = if k == 1 {
        (1..4).map(|i| DMatrix::from_fn(2, 2, |r, c| pauli(i)[(r, c)])).collect()
    } else {
        (1..16).map(|i| to_dynamic4(&kron(&pauli(i >> 2), &pauli(i & 3)))).collect()
    };
    let d = 1 << k;
    let id = DMatrix::identity(d, d);
    let f: f64 = paulis.iter().map(|q| average_gate_fidelity(&id, q)).sum::<f64>() / paulis.len() as f64;
    1.0 - ((1.0 - p) + p * f)
}

#[test]
fn infidelity_interpretation_inverts_the_channel() {
    let noise = NoiseModel { interpretation: Interpretation::Infidelity, ..NoiseModel::pauli(0.002, 0.02, 0.03) };
    let r = noise.rates().unwrap();
    assert!((channel_infidelity(r.p1, 1) - 0.002).abs() < 1e-15);
    assert!((channel_infidelity(r.p2, 2) - 0.02).abs() < 1e-15);
    assert_eq!(r.p_m, 0.03);
}

#[test]
fn noise_json_round_trip_and_validation() {
    let text = r#"{"eps1": 0.001, "eps2": 0.02, "epsM": 0.03, "interpretation": "infidelity", "edges": [{"qubits": [0, 1], "eps2": 0.05}]}"#;
    let m = NoiseModel::from_json(text).unwrap();
    assert_eq!(NoiseModel::from_json(&m.to_json()).unwrap(), m);
    assert!((m.rates().unwrap().two_qubit(1, 0) - 0.0625).abs() < 1e-15);
    assert!(NoiseModel::from_json(r#"{"eps1": 0.1, "eps2": 1.5, "epsM": 0}"#).is_err());
    assert!(NoiseModel::from_json(r#"{"eps1": 0.1, "eps2": 0.1, "epsM": 0, "extra": 1}"#).is_err());
    assert!(NoiseModel::from_json(r#"{"eps1": 0.1, "eps2": 0.9, "epsM": 0, "interpretation": "infidelity"}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), eps in 0.0..0.2f64) {
        let c = random_circuit(3, 12, seed);
        let noise = NoiseModel::pauli(eps / 10.0, eps, eps / 2.0);
        prop_assert_eq!(sample_outputs(&c, &noise, 50, seed).unwrap(), sample_outputs(&c, &noise, 50, seed).unwrap());
    }

    #[test]
    fn heavy_set_invariants(seed in any::<u64>(), m in 1usize..6) {
        let c = random_circuit(m, 3 * m, seed);
        let p = ideal_probabilities(&c).unwrap();
        let hs = HeavySet::from_probabilities(&p);
        prop_assert!(hs.len() <= 1usize << (m - 1));
        prop_assert!(hs.members.iter().all(|&x| p[x] > hs.median));
        prop_assert!(p.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
    }
}
