//! End-to-end acceptance checks. Each test prints one PASS/FAIL line with
//! the measured quantities before asserting.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use shrinkage_risk::monte_carlo::{simulate_point, SimulationReport, DEFAULT_POINT_TRIALS};
use shrinkage_risk::optimizer::{sweep_decay, SweepRow};
use shrinkage_risk::rng::derive_seed;
use shrinkage_risk::sequences::{calibrate_ensemble, default_p_grid, DEFAULT_LAMBDA, DEFAULT_N, DEFAULT_PEAK_MULTIPLE};
use shrinkage_risk::special::gamma_inc_3half;
use shrinkage_risk::{risk, EstimatorParams, OptimizerConfig};
use shrinkage_risk_e2e::{monte_carlo_estimators, report, standard_estimators, x_grid};

const S: f64 = 1.0;

#[test]
fn criterion_1_closed_forms_match_quadrature() {
    let start = Instant::now();
    let (mut worst_bias, mut worst_mse, mut cells) = (0.0f64, 0.0f64, 0usize);
    for e in standard_estimators() {
        for x in x_grid() {
            let b = risk::bias(&e, x, S).unwrap();
            let m = risk::mse(&e, x, S).unwrap();
            let qb = risk::quadrature_oracle_bias(&e, x, S).unwrap();
            let qm = risk::quadrature_oracle_mse(&e, x, S).unwrap();
            worst_bias = worst_bias.max((b - qb).abs());
            worst_mse = worst_mse.max((m - qm).abs());
            cells += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_bias <= 1e-9 && worst_mse <= 1e-9 && elapsed < Duration::from_secs(10);
    report(
        1,
        "closed form vs quadrature",
        pass,
        &format!("{cells} cells, max |bias err| {worst_bias:.2e}, max |mse err| {worst_mse:.2e} (tol 1e-9), {elapsed:.2?} (limit 10 s)"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_point_values() {
    let ht = EstimatorParams::hard(2.0).unwrap();
    let mse0 = risk::mse_ht(0.0, 2.0, S).unwrap();
    let mse0_identity = 1.0 - gamma_inc_3half(2.0).unwrap().value();
    let mse0_quad = risk::quadrature_oracle_mse(&ht, 0.0, S).unwrap();

    let b2 = risk::bias_ht(2.0, 2.0, S).unwrap();
    let b2_quad = risk::quadrature_oracle_bias(&ht, 2.0, S).unwrap();

    let db0 = risk::bias_deriv_ht(0.0, 2.0, S).unwrap();
    let crb0 = risk::crb_biased_scalar(0.0, db0, S).unwrap();
    // Independent derivative: central difference of the quadrature bias.
    let h = 1e-4;
    let db0_fd = (risk::quadrature_oracle_bias(&ht, h, S).unwrap() - risk::quadrature_oracle_bias(&ht, -h, S).unwrap())
        / (2.0 * h);
    let crb0_oracle = (1.0 + db0_fd).powi(2);

    let checks = [
        (mse0 - 0.26146).abs() < 1e-4,
        (mse0 - mse0_identity).abs() < 1e-12,
        (mse0 - mse0_quad).abs() < 1e-9,
        (b2 + 0.6011).abs() < 1e-3,
        (b2 - b2_quad).abs() < 1e-9,
        (crb0 - 0.06836).abs() < 1e-4,
        (crb0 - crb0_oracle).abs() < 1e-6,
    ];
    let pass = checks.iter().all(|&c| c);
    report(
        2,
        "derived point values",
        pass,
        &format!(
            "mse_ht(0;2) = {mse0:.6} (identity {mse0_identity:.6}, quad {mse0_quad:.6}); \
             bias_ht(2;2) = {b2:.6} (quad {b2_quad:.6}); crb_biased(0;2) = {crb0:.6} (fd oracle {crb0_oracle:.6})"
        ),
    );
    assert!(pass, "{checks:?}");
}

#[test]
fn criterion_3_bound_relationships() {
    let tol = 1e-9 * S * S;
    let xs: Vec<f64> = (0..=800).map(|i| 0.01 * i as f64).collect();
    let (mut worst_crb, mut worst_oracle) = (f64::INFINITY, f64::INFINITY);
    let mut dips = true;
    for t in [0.5, 1.0, 2.0, 3.0] {
        let e = EstimatorParams::hard(t).unwrap();
        let pts = risk::risk_curve(&e, S, &xs).unwrap();
        for r in &pts {
            worst_crb = worst_crb.min(r.mse - r.crb_biased);
            worst_oracle = worst_oracle.min(r.mse - r.oracle);
        }
        dips &= pts[0].mse < risk::crb_unbiased(S).unwrap();
    }
    let pass = worst_crb >= -tol && worst_oracle >= -tol && dips;
    report(
        3,
        "bound ordering on [0, 8]",
        pass,
        &format!(
            "min(mse - crb_biased) = {worst_crb:.3e}, min(mse - oracle) = {worst_oracle:.3e} (tol -1e-9), \
             mse(0) < crb_unbiased for all T: {dips}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_ensemble_calibration() {
    let start = Instant::now();
    let grid = default_p_grid();
    let ens = calibrate_ensemble(DEFAULT_N, DEFAULT_LAMBDA, &grid, S, DEFAULT_PEAK_MULTIPLE).unwrap();
    let elapsed = start.elapsed();
    let peak = ens
        .members
        .iter()
        .flat_map(|m| m.coefficients.iter())
        .fold(0.0f64, |a, &b| a.max(b));
    let pass =
        (ens.snr_db - 10.7).abs() <= 0.3 && ((peak - 10.0) / 10.0).abs() <= 1e-9 && elapsed < Duration::from_secs(1);
    report(
        4,
        "ensemble calibration",
        pass,
        &format!(
            "SNR = {:.4} dB (target 10.7 +/- 0.3), peak = {peak:.12} sigma, {elapsed:.2?} (limit 1 s)",
            ens.snr_db
        ),
    );
    assert!(pass);
}

struct Sweep {
    rows: Vec<SweepRow>,
    elapsed: Duration,
}

fn sweep() -> &'static Sweep {
    static CELL: OnceLock<Sweep> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let ens = calibrate_ensemble(DEFAULT_N, DEFAULT_LAMBDA, &default_p_grid(), S, DEFAULT_PEAK_MULTIPLE).unwrap();
        let rows = sweep_decay(&ens, &OptimizerConfig::default()).unwrap();
        Sweep {
            rows,
            elapsed: start.elapsed(),
        }
    })
}

fn params(e: &EstimatorParams) -> (f64, f64, f64) {
    match e {
        EstimatorParams::HardThreshold(p) => (p.threshold(), f64::NAN, f64::NAN),
        EstimatorParams::PiecewiseLinear(p) => (p.threshold(), p.alpha(), f64::NAN),
        EstimatorParams::Semisoft(p) => (p.threshold(), f64::NAN, p.inner()),
    }
}

#[test]
fn criterion_5_sweep_orderings() {
    let rows = &sweep().rows;
    let tol = 1e-12 * S * S;
    let contained = rows.iter().all(|r| {
        r.pl.avg_mse_per_symbol <= r.ht.avg_mse_per_symbol + tol
            && r.ss.avg_mse_per_symbol <= r.ht.avg_mse_per_symbol + tol
    });
    let interior = &rows[1..rows.len() - 1];
    let best_gain = interior
        .iter()
        .map(|r| r.ht.avg_mse_per_symbol - r.pl.avg_mse_per_symbol.min(r.ss.avg_mse_per_symbol))
        .fold(f64::NEG_INFINITY, f64::max);
    let last = rows.last().unwrap();
    let gap = (last.pl.avg_mse_per_symbol - last.ht.avg_mse_per_symbol).abs();
    let ss_best = last.ss.avg_mse_per_symbol <= last.ht.avg_mse_per_symbol.min(last.pl.avg_mse_per_symbol);
    let checks = [
        ("containment", contained),
        ("strict gain > 1%", best_gain > 0.01 * S * S),
        ("PL-HT gap at p_max < 1e-3", gap < 1e-3 * S * S),
        ("SS* <= min(HT*, PL*) at p_max", ss_best),
    ];
    let pass = checks.iter().all(|c| c.1);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    report(
        5,
        "sweep orderings",
        pass,
        &format!(
            "containment {contained}, max interior gain {best_gain:.4e}, gap at p = {} is {gap:.4e} (limit 1e-3), \
             SS best at p_max {ss_best}; failed: {failed:?}",
            last.p
        ),
    );
    assert!(pass, "failed checks: {failed:?}");
}

#[test]
fn criterion_6_optimum_limits() {
    let sw = sweep();
    let (first, last) = (&sw.rows[0], sw.rows.last().unwrap());
    let (ht_t0, _, _) = params(&first.ht.params);
    let (_, _, ss_inner0) = params(&first.ss.params);
    let (pl_t0, pl_a0, _) = params(&first.pl.params);
    let (ht_t1, _, _) = params(&last.ht.params);
    let (pl_t1, pl_a1, _) = params(&last.pl.params);
    let checks = [
        ("HT T* < 0.05 at p_min", ht_t0 < 0.05),
        ("SS T0* < 0.05 at p_min", ss_inner0 < 0.05),
        ("PL alpha* in (0.9, 1) at p_min", pl_a0 > 0.9 && pl_a0 < 1.0),
        ("PL T* > 5 at p_min", pl_t0 > 5.0),
        ("PL alpha* < 0.05 at p_max", pl_a1 < 0.05),
        ("|T*_PL - T*_HT| < 0.1 at p_max", (pl_t1 - ht_t1).abs() < 0.1),
        ("sweep < 5 min", sw.elapsed < Duration::from_secs(300)),
    ];
    let pass = checks.iter().all(|c| c.1);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    report(
        6,
        "optimum limits",
        pass,
        &format!(
            "p = {:.4}: T*_HT = {ht_t0:.4}, T0*_SS = {ss_inner0:.4}, PL (alpha*, T*) = ({pl_a0:.4}, {pl_t0:.4}); \
             p = {}: alpha*_PL = {pl_a1:.4}, T*_PL - T*_HT = {:.4}; sweep {:.2?}; failed: {failed:?}",
            first.p,
            last.p,
            pl_t1 - ht_t1,
            sw.elapsed
        ),
    );
    assert!(pass, "failed checks: {failed:?}");
}

fn monte_carlo_grid(seed: u64) -> Vec<(EstimatorParams, SimulationReport)> {
    let mut out = Vec::new();
    let mut cell = 0;
    for e in monte_carlo_estimators() {
        for x in x_grid() {
            let r = simulate_point(x, &e, S, DEFAULT_POINT_TRIALS, derive_seed(seed, cell)).unwrap();
            out.push((e, r));
            cell += 1;
        }
    }
    out
}

#[test]
fn criterion_7_monte_carlo_consistency() {
    let start = Instant::now();
    let run = monte_carlo_grid(2024);
    let passed = run
        .iter()
        .filter(|(e, r)| r.agrees_with(risk::bias(e, r.x, S).unwrap(), risk::mse(e, r.x, S).unwrap(), 3.0))
        .count();
    let rerun = monte_carlo_grid(2024);
    let bytes = |v: &[(EstimatorParams, SimulationReport)]| {
        serde_json::to_vec(&v.iter().map(|c| c.1).collect::<Vec<_>>()).unwrap()
    };
    let identical = bytes(&run) == bytes(&rerun);
    let share = passed as f64 / run.len() as f64;
    let pass = share >= 0.99 && identical;
    report(
        7,
        "Monte Carlo consistency",
        pass,
        &format!(
            "{passed}/{} cells within 3 stderr ({:.2}%, need 99%), {} trials per cell, rerun byte-identical: {identical}, {:.2?}",
            run.len(),
            100.0 * share,
            DEFAULT_POINT_TRIALS,
            start.elapsed()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_symmetry_and_limits() {
    let xs: Vec<f64> = (0..=64).map(|i| 0.125 * i as f64).collect();
    let mut odd = 0.0f64;
    let mut even = 0.0f64;
    for e in standard_estimators() {
        for &x in &xs {
            odd = odd.max((risk::bias(&e, -x, S).unwrap() + risk::bias(&e, x, S).unwrap()).abs());
            even = even.max((risk::mse(&e, -x, S).unwrap() - risk::mse(&e, x, S).unwrap()).abs());
        }
    }
    let (mut pl0, mut pl1, mut ss_eq, mut far) = (true, 0.0f64, true, 0.0f64);
    for t in [0.5, 1.0, 2.0, 3.0, 6.0] {
        let ht = EstimatorParams::hard(t).unwrap();
        let p0 = EstimatorParams::piecewise_linear(0.0, t).unwrap();
        let p1 = EstimatorParams::piecewise_linear(1.0, t).unwrap();
        let eq = EstimatorParams::semisoft(t, t).unwrap();
        for &x in &xs {
            let (b, m) = (risk::bias(&ht, x, S).unwrap(), risk::mse(&ht, x, S).unwrap());
            pl0 &= risk::bias(&p0, x, S).unwrap() == b && risk::mse(&p0, x, S).unwrap() == m;
            ss_eq &= risk::bias(&eq, x, S).unwrap() == b && risk::mse(&eq, x, S).unwrap() == m;
            pl1 = pl1
                .max(risk::bias(&p1, x, S).unwrap().abs())
                .max((risk::mse(&p1, x, S).unwrap() - 1.0).abs());
        }
    }
    for &x in &xs {
        far = far.max((risk::mse_ht(x, 40.0, S).unwrap() - x * x).abs());
    }
    let pass = odd <= 1e-9 && even <= 1e-9 && pl0 && pl1 <= 1e-12 && ss_eq && far <= 1e-9;
    report(
        8,
        "symmetry and limits",
        pass,
        &format!(
            "max |b(-x)+b(x)| {odd:.2e}, max |m(-x)-m(x)| {even:.2e}, PL(0)=HT exact {pl0}, \
             PL(1) vs ML {pl1:.2e}, SS(T0=T)=HT exact {ss_eq}, |mse(T=40) - x^2| {far:.2e}"
        ),
    );
    assert!(pass);
}
