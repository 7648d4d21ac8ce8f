//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; errors become JS exceptions.

use qvol::model::{build_model_circuit, ModelCircuitSpec};
use qvol::protocol::{estimate_volume, ScalingParams, Topology};
use qvol::simulator::{heavy_set, ideal_probabilities};
use qvol::weyl::{approx_stats_from, cdf_f2, cdf_f2m, haar_weyl_samples};
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_SAMPLES: usize = 200_000;
const MAX_WIDTH: usize = 12;

pub fn approx_stats(fb: f64, mirror: bool, samples: usize, seed: u64) -> Result<String, String> {
    if !(fb > 0.0 && fb <= 1.0) {
        return Err(format!("basis fidelity {fb} outside (0, 1]"));
    }
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(format!("samples must be between 1 and {MAX_SAMPLES}"));
    }
    let stats = approx_stats_from(&haar_weyl_samples(samples, seed), fb, mirror);
    let grid: Vec<f64> = (0..=80).map(|k| 0.8 + 0.2 * k as f64 / 80.0).collect();
    let cdf: Vec<_> = grid.iter().map(|&f| json!([f, cdf_f2(f), cdf_f2m(f)])).collect();
    Ok(json!({ "stats": stats, "cdf": cdf }).to_string())
}

pub fn estimate(eps: f64, topology: &str, m_max: usize) -> Result<String, String> {
    let topo: Topology = topology.parse().map_err(|e| format!("{e}"))?;
    let est = estimate_volume(eps, topo, &ScalingParams::default(), m_max).map_err(|e| e.to_string())?;
    serde_json::to_string(&est).map_err(|e| e.to_string())
}

pub fn ideal_distribution(m: usize, d: usize, seed: u64) -> Result<String, String> {
    if m > MAX_WIDTH {
        return Err(format!("width is limited to {MAX_WIDTH} in the browser"));
    }
    let spec = ModelCircuitSpec::new(m, d, seed).map_err(|e| e.to_string())?;
    let circuit = build_model_circuit(&spec).map_err(|e| e.to_string())?;
    let probs = ideal_probabilities(&circuit).map_err(|e| e.to_string())?;
    let hs = heavy_set(&circuit).map_err(|e| e.to_string())?;
    let heavy: Vec<bool> = (0..probs.len()).map(|x| hs.contains(x)).collect();
    Ok(json!({
        "width": m,
        "probabilities": probs,
        "heavy": heavy,
        "median": hs.median,
        "ideal_heavy_probability": hs.ideal_heavy_probability,
    })
    .to_string())
}

#[wasm_bindgen(js_name = approxStats)]
pub fn approx_stats_js(fb: f64, mirror: bool, samples: usize, seed: u32) -> Result<String, JsValue> {
    approx_stats(fb, mirror, samples, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = estimateVolume)]
pub fn estimate_js(eps: f64, topology: &str, m_max: usize) -> Result<String, JsValue> {
    estimate(eps, topology, m_max).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = idealDistribution)]
pub fn ideal_distribution_js(m: usize, d: usize, seed: u32) -> Result<String, JsValue> {
    ideal_distribution(m, d, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn exports_produce_json() {
        let v: Value = serde_json::from_str(&approx_stats(0.97, false, 2000, 1).unwrap()).unwrap();
        assert_eq!(v["cdf"].as_array().unwrap().len(), 81);
        let v: Value = serde_json::from_str(&estimate(0.01, "grid", 10).unwrap()).unwrap();
        assert!(v["log2_vq"].as_u64().unwrap() >= 2);
        let v: Value = serde_json::from_str(&ideal_distribution(3, 3, 2).unwrap()).unwrap();
        assert_eq!(v["probabilities"].as_array().unwrap().len(), 8);
        assert_eq!(v["heavy"].as_array().unwrap().iter().filter(|h| h.as_bool().unwrap()).count(), 4);
    }

    #[test]
    fn bad_arguments_are_errors() {
        assert!(approx_stats(1.5, false, 10, 0).is_err());
        assert!(estimate(0.01, "torus", 10).is_err());
        assert!(ideal_distribution(20, 2, 0).is_err());
    }
}
