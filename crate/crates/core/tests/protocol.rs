use proptest::prelude::*;
use qvol::protocol::*;
use qvol::simulator::NoiseModel;
use qvol::transpiler::{CouplingGraph, PassPipeline};
use std::collections::BTreeMap;

fn config(graph: CouplingGraph, noise: NoiseModel, seed: u64) -> TrialConfig {
    TrialConfig::new(graph, PassPipeline::standard(seed), noise, MIN_CIRCUITS, seed)
}

#[test]
fn threshold_values() {
    assert!((threshold(5000, 2.0) - 0.680).abs() < 0.001);
    let t1000 = threshold(1000, 2.0);
    assert!((0.694..=0.697).contains(&t1000), "{t1000}");
    assert!((threshold(100, 2.0) - 0.753).abs() < 0.001);
    for n_c in [100, 1000, 5000] {
        let t = threshold(n_c, 2.0);
        let lhs = t - 2.0 * (t * (1.0 - t) / n_c as f64).sqrt();
        assert!((lhs - PASS_PROBABILITY).abs() < 1e-12);
    }
}

#[test]
fn threshold_decreases_to_two_thirds() {
    let ts: Vec<f64> = (1..=60).map(|k| threshold(100 * k * k, 2.0)).collect();
    assert!(ts.windows(2).all(|w| w[1] < w[0]));
    assert!((threshold(1 << 40, 2.0) - PASS_PROBABILITY).abs() < 1e-5);
}

#[test]
fn ci_lower_edge_cases() {
    assert_eq!(ci_lower(100 * 100, 100, 100, 2.0), 1.0);
    let at_boundary = ci_lower(2 * 100 * 30, 300, 100, 2.0);
    assert!(at_boundary < PASS_PROBABILITY);
}

#[test]
fn quantum_volume_examples() {
    let vq = |pairs: &[(usize, usize)]| quantum_volume(&pairs.iter().copied().collect()).0;
    assert_eq!(vq(&[(2, 5), (3, 3), (4, 2)]), 3);
    assert_eq!(vq(&[(2, 0), (3, 0)]), 0);
    assert_eq!(vq(&[(2, 2), (3, 3), (4, 4), (5, 3)]), 4);
    assert_eq!(quantum_volume(&BTreeMap::from([(2, 5), (3, 3), (4, 2)])).1, Some(3));
}

#[test]
fn estimate_examples() {
    let p = ScalingParams::default();
    let eps = 1.0 / (16.0 * p.overhead(4, Topology::Grid));
    let est = estimate_volume(eps, Topology::Grid, &p, 8).unwrap();
    assert!((est.rows[2].depth - 4.0).abs() < 1e-9);
    assert_eq!(est.log2_vq, 4);
    assert!((p.overhead(6, Topology::Loop) - (0.5 * 6.0 - 0.45)).abs() < 1e-15);
    assert_eq!(p.overhead(9, Topology::AllToAll), 1.0);
    let zero = estimate_volume(0.0, Topology::Grid, &p, 7).unwrap();
    assert!(zero.saturated && zero.log2_vq == 7);
    let sweep: Vec<usize> = [0.03, 0.015, 0.008, 0.0032]
        .iter()
        .map(|&e| estimate_volume(e, Topology::Grid, &p, 12).unwrap().log2_vq)
        .collect();
    assert!(sweep.windows(2).all(|w| w[0] < w[1]), "{sweep:?}");
}

/// With the default constants the grid overhead only drops below the loop
/// overhead from m = 6 on.
#[test]
fn grid_and_loop_overheads_cross_between_five_and_six() {
    let p = ScalingParams::default();
    for m in 2..=5 {
        assert!(p.overhead(m, Topology::Grid) > p.overhead(m, Topology::Loop), "m = {m}");
    }
    for m in 6..=64 {
        assert!(p.overhead(m, Topology::Grid) < p.overhead(m, Topology::Loop), "m = {m}");
    }
}

#[test]
fn config_rejects_too_few_circuits() {
    let mut cfg = config(CouplingGraph::line(2).unwrap(), NoiseModel::ideal(), 0);
    cfg.n_c = 99;
    assert!(cfg.validate().is_err());
    assert!(is_heavy(2, 2, &cfg).is_err());
}

#[test]
fn noiseless_two_qubit_circuits_pass() {
    let mut cfg = config(CouplingGraph::line(2).unwrap(), NoiseModel::ideal(), 12);
    cfg.n_c = 200;
    let r = is_heavy(2, 2, &cfg).unwrap();
    assert!(r.h_hat >= 0.7 && r.passed, "{r:?}");
    let sigma = (r.ideal_heavy_mean * (1.0 - r.ideal_heavy_mean) / (r.n_c * r.n_s) as f64).sqrt();
    assert!((r.h_hat - r.ideal_heavy_mean).abs() < 3.0 * sigma.max(1e-3));
    let (d, results) = achievable_depth(2, &cfg, 4).unwrap();
    assert_eq!(d, 4);
    assert!(results.iter().all(|r| r.ci_lower <= r.h_hat));
}

#[test]
fn heavy_depolarization_caps_the_depth() {
    let cfg = config(CouplingGraph::line(4).unwrap(), NoiseModel::pauli(0.03, 0.3, 0.0), 5);
    let (d, results) = achievable_depth(4, &cfg, 3).unwrap();
    assert!(d <= 1, "{results:?}");
    assert_eq!(results.last().map(|r| r.passed), Some(false));
}

#[test]
fn sweeps_are_reproducible() {
    let cfg = config(CouplingGraph::grid(4).unwrap(), NoiseModel::pauli(0.002, 0.02, 0.01), 99);
    let a = run_qv_sweep(&cfg, &[2, 3], SweepMode::Square).unwrap();
    let b = run_qv_sweep(&cfg, &[2, 3], SweepMode::Square).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.results.len(), 2);
    for r in &a.results {
        assert_eq!(r.passed, r.ci_lower > PASS_PROBABILITY);
        assert!(r.ci_lower <= r.h_hat);
    }
    let other = config(CouplingGraph::grid(4).unwrap(), NoiseModel::pauli(0.002, 0.02, 0.01), 100);
    assert_ne!(run_qv_sweep(&other, &[2, 3], SweepMode::Square).unwrap().to_json(), a.to_json());
}

#[test]
fn full_sweep_respects_the_prefix_rule() {
    let cfg = config(CouplingGraph::line(3).unwrap(), NoiseModel::pauli(0.005, 0.05, 0.0), 3);
    let report = run_qv_sweep(&cfg, &[2, 3], SweepMode::Full { d_max: 6 }).unwrap();
    for (&m, &d) in &report.d_of_m {
        let rows: Vec<&DepthResult> = report.results.iter().filter(|r| r.m == m).collect();
        assert!(rows.iter().take(d).all(|r| r.passed));
        assert!(rows.len() == d || !rows[d].passed);
    }
    assert_eq!(report.log2_vq, quantum_volume(&report.d_of_m).0);
}

proptest! {
    #[test]
    fn ci_lower_identity(n_c in 100usize..2000, n_s in 1usize..500, frac in 0.0..=1.0f64, z in 0.0..4.0f64) {
        let n_h = (frac * (n_c * n_s) as f64).round() as u64;
        let h = n_h as f64 / (n_c * n_s) as f64;
        let direct = h - z * (h * (1.0 - h) / n_c as f64).max(0.0).sqrt();
        prop_assert!((ci_lower(n_h, n_c, n_s, z) - direct).abs() < 1e-12);
        prop_assert!(ci_lower(n_h, n_c, n_s, z) <= h + 1e-15);
    }

    #[test]
    fn volume_is_monotone(ds in prop::collection::vec(0usize..10, 1..8), which in any::<prop::sample::Index>(), bump in 1usize..5) {
        let d_of_m: BTreeMap<usize, usize> = ds.iter().enumerate().map(|(i, &d)| (i + 2, d)).collect();
        let mut better = d_of_m.clone();
        let key = 2 + which.index(ds.len());
        *better.get_mut(&key).unwrap() += bump;
        prop_assert!(quantum_volume(&better).0 >= quantum_volume(&d_of_m).0);
        let expected = d_of_m.iter().map(|(&m, &d)| m.min(d)).max().unwrap_or(0);
        prop_assert_eq!(quantum_volume(&d_of_m).0, expected);
    }

    #[test]
    fn grid_estimate_beats_loop(eps in 1e-4..0.05f64, m_max in 6usize..16) {
        let p = ScalingParams::default();
        let grid = estimate_volume(eps, Topology::Grid, &p, m_max).unwrap();
        let ring = estimate_volume(eps, Topology::Loop, &p, m_max).unwrap();
        for (g, l) in grid.rows.iter().zip(&ring.rows).filter(|(g, _)| g.m >= 6) {
            prop_assert!(g.eps_eff < l.eps_eff);
            prop_assert!(g.log2_vq >= l.log2_vq);
        }
    }
}
