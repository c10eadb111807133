//! wasm-bindgen bindings for the static page in `www/`.
//!
//! Each export returns a JSON string. The `*_json` functions hold the logic
//! so they can be tested natively.

use aoi_shs::{
    gaussian_comparison, mm11_abandonment, preemptive_line, transient, Analysis, RenewalSpec,
    SamplingNetwork, TransientInit, TransientSpec, UniformGrid,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Stationary analysis of the M/M/1/1 queue with abandonment: state
/// probabilities, first two moments, s0 and the monitor MGF on `[-s0, s0)`.
pub fn mm11_json(lambda: f64, mu: f64, alpha: f64, samples: usize) -> Result<Value, String> {
    let model = mm11_abandonment(lambda, mu, alpha).map_err(err)?;
    let a = Analysis::new(&model).map_err(err)?;
    let ms = a.moments(2).map_err(err)?;
    let s0 = a.mgf_radius().map_err(err)?;
    let samples = samples.clamp(2, 2000);
    let mut s = Vec::with_capacity(samples);
    let mut mgf = Vec::with_capacity(samples);
    for i in 0..samples {
        // stop short of the pole
        let x = s0 * (-1.0 + 1.95 * i as f64 / (samples - 1) as f64);
        s.push(x);
        mgf.push(a.mgf(x).map_err(err)?.aggregate[1]);
    }
    Ok(json!({
        "pi": a.stationary_probabilities(),
        "mean": ms[0].aggregate,
        "second_moment": ms[1].aggregate,
        "s0": s0,
        "s": s,
        "mgf": mgf,
    }))
}

/// Mean ages of a preemptive line over time from `x(0) = 0`, with the
/// stationary means.
pub fn line_transient_json(rates: &[f64], t_end: f64, points: usize) -> Result<Value, String> {
    let model = preemptive_line(rates).map_err(err)?;
    let mut spec = TransientSpec::new(t_end, vec![1], vec![]);
    spec.output_points = points.clamp(2, 2000);
    let traj = transient(&model, &TransientInit::zero(&model), &spec).map_err(err)?;
    let n = model.age_dim;
    let series: Vec<Vec<f64>> = (0..n)
        .map(|j| traj.moments[0].iter().map(|v| v[j]).collect())
        .collect();
    let stationary = Analysis::new(&model)
        .and_then(|a| a.moments(1))
        .map_err(err)?[0]
        .aggregate
        .clone();
    Ok(json!({ "times": traj.times, "means": series, "stationary": stationary }))
}

fn hop(family: &str, param: f64) -> Result<RenewalSpec, String> {
    match family {
        "uniform" => Ok(RenewalSpec::Uniform { b: param }),
        "exponential" => Ok(RenewalSpec::Exponential { rate: param }),
        // shape 2, mean `param`
        "gamma" => Ok(RenewalSpec::Gamma {
            shape: 2.0,
            scale: param / 2.0,
        }),
        other => Err(format!("unknown family `{other}`")),
    }
}

/// Node-`k` age density of a line of identical hops next to its matched
/// Gaussian.
pub fn sampling_json(
    family: &str,
    param: f64,
    hops: usize,
    node: usize,
    points: usize,
) -> Result<Value, String> {
    let spec = hop(family, param)?;
    let net = SamplingNetwork::new(vec![spec; hops.max(1)]).map_err(err)?;
    let grid = UniformGrid::spanning(net.node_extent(node).map_err(err)?, points.clamp(16, 4096));
    let cmp = gaussian_comparison(&net, node, &grid).map_err(err)?;
    Ok(json!({
        "x": grid.abscissae(),
        "convolution": cmp.convolution.values,
        "gaussian": cmp.gaussian.values,
        "mean": cmp.mean,
        "variance": cmp.variance,
        "l1": cmp.l1,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mm11(lambda: f64, mu: f64, alpha: f64, samples: usize) -> Result<String, JsValue> {
    to_js(mm11_json(lambda, mu, alpha, samples))
}

#[wasm_bindgen]
pub fn line_transient(rates: Vec<f64>, t_end: f64, points: usize) -> Result<String, JsValue> {
    to_js(line_transient_json(&rates, t_end, points))
}

#[wasm_bindgen]
pub fn sampling(
    family: &str,
    param: f64,
    hops: usize,
    node: usize,
    points: usize,
) -> Result<String, JsValue> {
    to_js(sampling_json(family, param, hops, node, points))
}
