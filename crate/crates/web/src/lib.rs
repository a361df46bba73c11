//! Browser bindings: trace a leg mechanism, score it against a cycloid
//! target, and sample the target itself. Curves cross the boundary as flat
//! `[x0, y0, x1, y1, …]` arrays, reports as JSON strings.

use clm_core::linkage::{trace_bt, Branch, Linkage, ParamVector, Topology};
use clm_core::metrics::evaluate_bt;
use clm_core::target::{cycloid_bt_target, CycloidSpec};
use clm_core::trajectory::{LegLayout, Trajectory};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Crank period used for every trace, seconds.
pub const PERIOD: f64 = 2.0;

const FOUR_BAR_DEFAULT: [f64; 10] = [0.1, 3.0, 0.0, 0.0, 30.0, 90.0, 80.0, 100.0, 40.0, -5.0];
const STEPHENSON_DEFAULT: [f64; 16] = [
    1.33, -2.23, 97.25, 350.28, 51.09, 74.79, 200.28, 211.01, 40.0, 38.28, 112.31, -135.06, 167.3,
    138.38, -258.62, 311.65,
];

fn topology(name: &str) -> Result<Topology, String> {
    let t: Topology = name.parse().map_err(|e: clm_core::Error| e.to_string())?;
    if t == Topology::RtclmSevenBar {
        return Err("the seven-bar leg is not available here".into());
    }
    Ok(t)
}

fn flatten(t: &Trajectory) -> Vec<f64> {
    t.points.iter().flat_map(|p| [p.x, p.y]).collect()
}

/// First assembly, over the dyad branch flags, that completes a full crank turn.
pub fn trace_curve(
    name: &str,
    params: &[f64],
    n: usize,
) -> Result<(Vec<Branch>, Trajectory), String> {
    let t = topology(name)?;
    let pv = ParamVector::new(t, params.to_vec()).map_err(|e| e.to_string())?;
    let flags = [Branch::Positive, Branch::Negative];
    let mut last = String::new();
    for b0 in flags {
        for b1 in flags {
            let b = [b0, b1][..t.dyad_count()].to_vec();
            match Linkage::new(&pv, &b).and_then(|l| trace_bt(&l, n, PERIOD)) {
                Ok(bt) => return Ok((b, bt)),
                Err(e) => last = e.to_string(),
            }
            if t.dyad_count() == 1 {
                break;
            }
        }
    }
    Err(last)
}

/// Performance report of the traced curve against a cycloid target, as JSON.
pub fn evaluate_json(
    name: &str,
    params: &[f64],
    n: usize,
    length: f64,
    height: f64,
) -> Result<String, String> {
    let (branches, bt) = trace_curve(name, params, n)?;
    let spec = CycloidSpec::new(length, height, PERIOD).map_err(|e| e.to_string())?;
    let target = cycloid_bt_target(&spec, n).map_err(|e| e.to_string())?;
    let e = evaluate_bt(&bt, Some(&target), &LegLayout::biped()).map_err(|e| e.to_string())?;
    let features: Vec<_> = e
        .features
        .labelled()
        .into_iter()
        .map(|(label, k)| json!({"label": label, "x": bt.points[k].x, "y": bt.points[k].y}))
        .collect();
    Ok(json!({
        "branches": branches,
        "report": e.report,
        "features": features,
        "wt": flatten(&e.wt),
    })
    .to_string())
}

/// Samples of the compound cycloid, flattened.
pub fn cycloid_curve(length: f64, height: f64, n: usize) -> Result<Vec<f64>, String> {
    let spec = CycloidSpec::new(length, height, PERIOD).map_err(|e| e.to_string())?;
    cycloid_bt_target(&spec, n)
        .map(|t| flatten(&t))
        .map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = paramNames)]
pub fn param_names(name: &str) -> Result<Vec<String>, JsError> {
    let t = topology(name).map_err(|e| JsError::new(&e))?;
    Ok(t.param_names().iter().map(|s| s.to_string()).collect())
}

#[wasm_bindgen(js_name = defaultParams)]
pub fn default_params(name: &str) -> Result<Vec<f64>, JsError> {
    match topology(name).map_err(|e| JsError::new(&e))? {
        Topology::FourBar => Ok(FOUR_BAR_DEFAULT.to_vec()),
        _ => Ok(STEPHENSON_DEFAULT.to_vec()),
    }
}

#[wasm_bindgen]
pub fn trace(name: &str, params: &[f64], n: usize) -> Result<Vec<f64>, JsError> {
    trace_curve(name, params, n)
        .map(|(_, t)| flatten(&t))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn evaluate(
    name: &str,
    params: &[f64],
    n: usize,
    length: f64,
    height: f64,
) -> Result<String, JsError> {
    evaluate_json(name, params, n, length, height).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cycloid(length: f64, height: f64, n: usize) -> Result<Vec<f64>, JsError> {
    cycloid_curve(length, height, n).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_trace() {
        for (name, p) in [
            ("four_bar", &FOUR_BAR_DEFAULT[..]),
            ("stephenson1", &STEPHENSON_DEFAULT[..]),
        ] {
            let (_, bt) = trace_curve(name, p, 360).unwrap();
            assert_eq!(bt.len(), 360);
        }
    }

    #[test]
    fn evaluate_reports_mse() {
        let v: serde_json::Value = serde_json::from_str(
            &evaluate_json("four_bar", &FOUR_BAR_DEFAULT, 360, 300.0, 100.0).unwrap(),
        )
        .unwrap();
        assert!(v["report"]["mse"].as_f64().unwrap() > 0.0);
        assert!(v["features"].as_array().unwrap().len() >= 5);
    }

    #[test]
    fn cycloid_ends_on_stance_line() {
        let c = cycloid_curve(300.0, 100.0, 360).unwrap();
        assert_eq!(c.len(), 720);
        assert!(c[1].abs() < 1e-12);
        assert!(c.chunks(2).map(|p| p[1]).fold(f64::INFINITY, f64::min) >= -100.0 - 1e-9);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(trace_curve("four_bar", &[1.0], 10).is_err());
        assert!(trace_curve("rtclm7", &[0.0; 13], 10).is_err());
        assert!(cycloid_curve(-1.0, 100.0, 10).is_err());
    }
}
