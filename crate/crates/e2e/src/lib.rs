//! Shared fixtures for the end-to-end acceptance suite in `tests/`.

use std::io::Write;

use shrinkage_risk::EstimatorParams;

/// `x / sigma` in `{0, 0.25, ..., 8}`.
pub fn x_grid() -> Vec<f64> {
    (0..=32).map(|i| 0.25 * i as f64).collect()
}

/// HT, PL and SS parameter sets of the standard grid, in units of sigma:
/// `T in {0.5, 1, 2, 3}`, `alpha in {0, 0.25, ..., 1}`, `T0 in {0, T/4, T/2, 3T/4}`.
pub fn standard_estimators() -> Vec<EstimatorParams> {
    let mut out = Vec::new();
    for t in [0.5, 1.0, 2.0, 3.0] {
        out.push(EstimatorParams::hard(t).unwrap());
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            out.push(EstimatorParams::piecewise_linear(alpha, t).unwrap());
        }
        for r in [0.0, 0.25, 0.5, 0.75] {
            out.push(EstimatorParams::semisoft(r * t, t).unwrap());
        }
    }
    out
}

/// Monte Carlo estimators: HT T = 1, 2; PL (0.5, 2); PL slope 1 (identity);
/// SS (1, 2); SS (0.5, 3).
pub fn monte_carlo_estimators() -> Vec<EstimatorParams> {
    vec![
        EstimatorParams::hard(1.0).unwrap(),
        EstimatorParams::hard(2.0).unwrap(),
        EstimatorParams::piecewise_linear(0.5, 2.0).unwrap(),
        EstimatorParams::piecewise_linear(1.0, 2.0).unwrap(),
        EstimatorParams::semisoft(1.0, 2.0).unwrap(),
        EstimatorParams::semisoft(0.5, 3.0).unwrap(),
    ]
}

pub fn verdict_line(id: u32, title: &str, pass: bool, detail: &str) -> String {
    let verdict = if pass { "PASS" } else { "FAIL" };
    format!("[acceptance] criterion {id} {verdict}: {title}: {detail}\n")
}

/// Written straight to the stderr handle so the line shows up even when the
/// test harness captures output.
pub fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let _ = std::io::stderr().write_all(verdict_line(id, title, pass, detail).as_bytes());
}
