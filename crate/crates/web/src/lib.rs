//! Browser bindings for the static demo page in `www/`.
//!
//! Everything is in units of the noise level (sigma = 1). Results cross the
//! JS boundary as flat `Float64Array`s; the row layout of each function is
//! given in its doc comment.

use shrinkage_risk::optimizer::optimize_all;
use shrinkage_risk::sequences::{calibrate_ensemble, default_p_grid, CalibratedEnsemble};
use shrinkage_risk::sequences::{DEFAULT_LAMBDA, DEFAULT_N, DEFAULT_PEAK_MULTIPLE};
use shrinkage_risk::{risk, EstimatorParams, OptimizerConfig};
use wasm_bindgen::prelude::*;

fn text(e: shrinkage_risk::Error) -> String {
    e.to_string()
}

fn estimator(family: &str, t: f64, alpha: f64, t0_ratio: f64) -> Result<EstimatorParams, String> {
    match family {
        "ht" => EstimatorParams::hard(t),
        "pl" => EstimatorParams::piecewise_linear(alpha, t),
        "ss" => {
            if !(0.0..=1.0).contains(&t0_ratio) {
                return Err(format!("T0 ratio must lie in [0, 1], got {t0_ratio}"));
            }
            EstimatorParams::semisoft(t0_ratio * t, t)
        }
        other => return Err(format!("unknown family `{other}`")),
    }
    .map_err(text)
}

fn grid(x_max: f64, steps: usize) -> Result<Vec<f64>, String> {
    if steps < 2 || !(x_max.is_finite() && x_max > 0.0) {
        return Err(format!("need x_max > 0 and at least 2 steps, got {x_max}, {steps}"));
    }
    Ok((0..steps).map(|i| x_max * i as f64 / (steps - 1) as f64).collect())
}

/// Rows of `[x, bias, mse, crb_biased, crb_unbiased, oracle]` on `[0, x_max]`.
pub fn risk_rows(
    family: &str,
    t: f64,
    alpha: f64,
    t0_ratio: f64,
    x_max: f64,
    steps: usize,
) -> Result<Vec<f64>, String> {
    let e = estimator(family, t, alpha, t0_ratio)?;
    let pts = risk::risk_curve(&e, 1.0, &grid(x_max, steps)?).map_err(text)?;
    Ok(pts
        .iter()
        .flat_map(|r| [r.x, r.bias, r.mse, r.crb_biased, r.crb_unbiased, r.oracle])
        .collect())
}

fn default_ensemble() -> Result<CalibratedEnsemble, String> {
    calibrate_ensemble(DEFAULT_N, DEFAULT_LAMBDA, &default_p_grid(), 1.0, DEFAULT_PEAK_MULTIPLE).map_err(text)
}

/// Coefficients of the default ensemble member at decay rate `p`.
pub fn sequence_values(p: f64) -> Result<Vec<f64>, String> {
    Ok(default_ensemble()?.sequence_at(p).map_err(text)?.coefficients)
}

/// Optimized estimators for the default ensemble at decay rate `p`:
/// `[T_ht, mse_ht, T_pl, alpha_pl, mse_pl, T0_ss, T_ss, mse_ss, snr_db]`.
pub fn optimum(p: f64) -> Result<Vec<f64>, String> {
    let ens = default_ensemble()?;
    let seq = ens.sequence_at(p).map_err(text)?;
    let row = optimize_all(&seq.coefficients, 1.0, p, &OptimizerConfig::default()).map_err(text)?;
    let (pl_alpha, ss_t0) = match (row.pl.params, row.ss.params) {
        (EstimatorParams::PiecewiseLinear(a), EstimatorParams::Semisoft(b)) => (a.alpha(), b.inner()),
        _ => return Err("optimizer returned an unexpected family".into()),
    };
    Ok(vec![
        row.ht.params.threshold(),
        row.ht.avg_mse_per_symbol,
        row.pl.params.threshold(),
        pl_alpha,
        row.pl.avg_mse_per_symbol,
        ss_t0,
        row.ss.params.threshold(),
        row.ss.avg_mse_per_symbol,
        ens.snr_db,
    ])
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = riskCurve)]
pub fn risk_curve(
    family: &str,
    t: f64,
    alpha: f64,
    t0_ratio: f64,
    x_max: f64,
    steps: usize,
) -> Result<Vec<f64>, JsError> {
    js(risk_rows(family, t, alpha, t0_ratio, x_max, steps))
}

#[wasm_bindgen(js_name = decaySequence)]
pub fn decay_sequence(p: f64) -> Result<Vec<f64>, JsError> {
    js(sequence_values(p))
}

#[wasm_bindgen(js_name = optimizeAt)]
pub fn optimize_at(p: f64) -> Result<Vec<f64>, JsError> {
    js(optimum(p))
}
