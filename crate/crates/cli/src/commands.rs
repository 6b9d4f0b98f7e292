use std::path::Path;

use serde_json::json;
use shrinkage_risk::monte_carlo::{simulate_point, DEFAULT_POINT_TRIALS};
use shrinkage_risk::optimizer::{sweep_decay, SweepRow};
use shrinkage_risk::rng::derive_seed;
use shrinkage_risk::sequences::{calibrate_ensemble, histogram, DecayModel};
use shrinkage_risk::{risk, EstimatorParams, OptimizationResult, OptimizerConfig};

use crate::config::{FamilyChoice, Format, Settings};
use crate::output::{emit, json_text, sibling, Cell, Table};
use crate::CliError;

/// Slack allowed on the bound and containment checks, in units of sigma^2.
const BOUND_TOL: f64 = 1e-9;
const CONTAINMENT_TOL: f64 = 1e-12;

fn numeric(e: shrinkage_risk::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Column name with the `_over_sigma` suffix in normalized mode.
fn col(s: &Settings, name: &str, power: u8) -> String {
    match (s.absolute, power) {
        (true, _) => name.to_string(),
        (false, 1) => format!("{name}_over_sigma"),
        (false, _) => format!("{name}_over_sigma2"),
    }
}

fn header(s: &Settings, spec: &[(&str, u8)]) -> Vec<String> {
    spec.iter()
        .map(|&(n, p)| if p == 0 { n.to_string() } else { col(s, n, p) })
        .collect()
}

fn check_finite(values: &[f64], what: &str) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("non-finite value in {what}")))
    }
}

/// One table per estimator: written to `<stem>_<family>.<ext>` when there
/// are several, or to the output path itself when there is one.
fn emit_per_family(s: &Settings, tables: &[(EstimatorParams, Table)]) -> Result<(), CliError> {
    if let [(_, t)] = tables {
        return emit(s.out.as_deref(), &t.render(s.format));
    }
    match &s.out {
        Some(path) => {
            for (e, t) in tables {
                emit(
                    Some(&sibling(path, e.family().tag(), s.format.ext())),
                    &t.render(s.format),
                )?;
            }
            Ok(())
        }
        None => {
            let text = match s.format {
                Format::Csv => tables
                    .iter()
                    .map(|(e, t)| format!("# {}\n{}", e.family().tag(), t.to_csv()))
                    .collect::<Vec<_>>()
                    .join("\n"),
                Format::Json => {
                    let obj: serde_json::Map<String, serde_json::Value> = tables
                        .iter()
                        .map(|(e, t)| (e.family().tag().to_string(), t.to_json()))
                        .collect();
                    json_text(&serde_json::Value::Object(obj))
                }
            };
            emit(None, &text)
        }
    }
}

pub fn risk_curve(s: &Settings) -> Result<(), CliError> {
    let (u, u2) = (s.unit, s.unit * s.unit);
    let columns = header(
        s,
        &[
            ("x", 1),
            ("bias", 1),
            ("mse", 2),
            ("crb_biased", 2),
            ("crb_unbiased", 2),
            ("oracle", 2),
        ],
    );
    let mut tables = Vec::new();
    for e in s.estimators()? {
        let points = risk::risk_curve(&e, s.sigma, &s.x_grid).map_err(numeric)?;
        let mut t = Table::new(columns.clone());
        for r in points {
            let vals = [
                r.x / u,
                r.bias / u,
                r.mse / u2,
                r.crb_biased / u2,
                r.crb_unbiased / u2,
                r.oracle / u2,
            ];
            check_finite(&vals, "risk curve")?;
            t.push(vals.into_iter().map(Cell::Num).collect());
        }
        tables.push((e, t));
    }
    emit_per_family(s, &tables)
}

pub fn bounds(s: &Settings) -> Result<(), CliError> {
    if !matches!(s.family, FamilyChoice::Ht) {
        return Err(CliError::Usage(
            "bounds is defined for the hard-threshold family only".into(),
        ));
    }
    let e = EstimatorParams::hard(s.t).map_err(|e| CliError::Usage(e.to_string()))?;
    let (u, u2) = (s.unit, s.unit * s.unit);
    let tol = BOUND_TOL * s.sigma * s.sigma;
    let mut t = Table::new(header(
        s,
        &[
            ("x", 1),
            ("mse", 2),
            ("crb_unbiased", 2),
            ("crb_biased", 2),
            ("oracle", 2),
            ("bounds_ok", 0),
        ],
    ));
    let mut violations = Vec::new();
    for r in risk::risk_curve(&e, s.sigma, &s.x_grid).map_err(numeric)? {
        check_finite(&[r.mse, r.crb_biased, r.oracle], "bounds")?;
        let ok = r.mse >= r.crb_biased - tol && r.mse >= r.oracle - tol;
        if !ok {
            violations.push(r.x / u);
        }
        let mut row: Vec<Cell> = [
            r.x / u,
            r.mse / u2,
            r.crb_unbiased / u2,
            r.crb_biased / u2,
            r.oracle / u2,
        ]
        .map(Cell::Num)
        .into();
        row.push(Cell::Bool(ok));
        t.push(row);
    }
    emit(s.out.as_deref(), &t.render(s.format))?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(format!(
            "MSE below a lower bound at x = {violations:?}"
        )))
    }
}

fn sweep_cells(r: &OptimizationResult, u: f64, u2: f64) -> [Cell; 4] {
    let (t, alpha, t0) = match r.params {
        EstimatorParams::HardThreshold(h) => (h.threshold(), Cell::Empty, Cell::Empty),
        EstimatorParams::PiecewiseLinear(p) => (p.threshold(), Cell::Num(p.alpha()), Cell::Empty),
        EstimatorParams::Semisoft(q) => (q.threshold(), Cell::Empty, Cell::Num(q.inner() / u)),
    };
    [Cell::Num(t / u), alpha, t0, Cell::Num(r.avg_mse_per_symbol / u2)]
}

fn histogram_table(s: &Settings, seq: &DecayModel) -> Result<Table, CliError> {
    let mut t = Table::new(vec![col(s, "center", 1), "count".into()]);
    for b in histogram(seq, s.bin_width).map_err(numeric)? {
        t.push(vec![Cell::Num(b.center / s.unit), Cell::Int(b.count as u64)]);
    }
    Ok(t)
}

/// PL and SS contain HT, so their optima may not be worse.
fn containment_failures(rows: &[SweepRow], tol: f64) -> Vec<f64> {
    rows.iter()
        .filter(|r| {
            r.pl.avg_mse_per_symbol > r.ht.avg_mse_per_symbol + tol
                || r.ss.avg_mse_per_symbol > r.ht.avg_mse_per_symbol + tol
        })
        .map(|r| r.p)
        .collect()
}

pub fn sweep(s: &Settings) -> Result<(), CliError> {
    let grid = s.sweep_grid();
    let ensemble = calibrate_ensemble(s.n, s.lambda, &grid, s.sigma, s.peak).map_err(numeric)?;
    eprintln!(
        "ensemble SNR: {:.4} dB (N = {}, lambda = {}, {} decay rates)",
        ensemble.snr_db,
        s.n,
        s.lambda,
        grid.len()
    );
    let rows = sweep_decay(&ensemble, &OptimizerConfig::default()).map_err(numeric)?;

    let (u, u2) = (s.unit, s.unit * s.unit);
    let mut t = Table::new(header(
        s,
        &[
            ("p", 0),
            ("family", 0),
            ("T", 1),
            ("alpha", 0),
            ("T0", 1),
            ("avg_mse", 2),
        ],
    ));
    for row in &rows {
        for r in row.results() {
            check_finite(&[r.avg_mse_per_symbol], "sweep")?;
            let mut cells = vec![Cell::Num(row.p), Cell::Text(r.estimator_kind.tag().into())];
            cells.extend(sweep_cells(r, u, u2));
            t.push(cells);
        }
    }
    emit(s.out.as_deref(), &t.render(s.format))?;

    if let Some(path) = &s.out {
        emit(
            Some(&sibling(path, "ensemble", "json")),
            &json_text(&json!(ensemble.metadata())),
        )?;
        for (p, tag) in [(1.0, "hist_p1"), (75.0, "hist_p75")] {
            let seq = ensemble.sequence_at(p).map_err(numeric)?;
            emit(
                Some(&sibling(path, tag, s.format.ext())),
                &histogram_table(s, &seq)?.render(s.format),
            )?;
        }
    }

    let bad = containment_failures(&rows, CONTAINMENT_TOL * s.sigma * s.sigma);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(format!(
            "optimized PL or SS worse than HT at p = {bad:?}"
        )))
    }
}

pub fn simulate(s: &Settings) -> Result<(), CliError> {
    let trials = s.trials.unwrap_or(DEFAULT_POINT_TRIALS);
    let (u, u2) = (s.unit, s.unit * s.unit);
    let mut t = Table::new(header(
        s,
        &[
            ("family", 0),
            ("x", 1),
            ("seed", 0),
            ("bias_hat", 1),
            ("bias_stderr", 1),
            ("bias_exact", 1),
            ("mse_hat", 2),
            ("mse_stderr", 2),
            ("mse_exact", 2),
            ("pass", 0),
        ],
    ));
    let (mut cells, mut failed) = (0u64, 0u64);
    for e in s.estimators()? {
        for &x in &s.x_grid {
            let seed = derive_seed(s.seed, cells);
            let r = simulate_point(x, &e, s.sigma, trials, seed).map_err(|e| match e {
                shrinkage_risk::Error::Domain(m) => CliError::Usage(m),
                other => numeric(other),
            })?;
            let bias = risk::bias(&e, x, s.sigma).map_err(numeric)?;
            let mse = risk::mse(&e, x, s.sigma).map_err(numeric)?;
            let pass = r.agrees_with(bias, mse, 3.0);
            cells += 1;
            failed += u64::from(!pass);
            let mut row = vec![Cell::Text(e.family().tag().into()), Cell::Num(x / u), Cell::Int(seed)];
            row.extend(
                [
                    r.bias_hat / u,
                    r.bias_stderr / u,
                    bias / u,
                    r.mse_hat / u2,
                    r.mse_stderr / u2,
                    mse / u2,
                ]
                .map(Cell::Num),
            );
            row.push(Cell::Bool(pass));
            t.push(row);
        }
    }
    emit(s.out.as_deref(), &t.render(s.format))?;
    eprintln!(
        "{} of {cells} cells within 3 standard errors ({trials} trials each)",
        cells - failed
    );
    if failed * 100 > cells {
        Err(CliError::Assertion(format!(
            "{failed} of {cells} cells outside 3 standard errors"
        )))
    } else {
        Ok(())
    }
}

pub fn sequence(s: &Settings) -> Result<(), CliError> {
    let p = s.p.unwrap_or(1.0);
    let ensemble = calibrate_ensemble(s.n, s.lambda, &s.calibration_grid(), s.sigma, s.peak).map_err(numeric)?;
    let seq = ensemble.sequence_at(p).map_err(numeric)?;
    let meta = json!({
        "p": p,
        "kappa": seq.kappa,
        "ensemble": ensemble.metadata(),
    });
    match s.format {
        Format::Csv => {
            let mut t = Table::new(vec!["n".into(), col(s, "x_n", 1)]);
            for (i, &x) in seq.coefficients.iter().enumerate() {
                t.push(vec![Cell::Int(i as u64), Cell::Num(x / s.unit)]);
            }
            emit(s.out.as_deref(), &t.to_csv())?;
            match &s.out {
                Some(path) => emit(Some(&sibling(path, "meta", "json")), &json_text(&meta)),
                None => {
                    eprintln!("{}", meta);
                    Ok(())
                }
            }
        }
        Format::Json => {
            let coeffs: Vec<f64> = seq.coefficients.iter().map(|x| x / s.unit).collect();
            let mut doc = meta;
            doc["coefficients"] = json!(coeffs);
            emit(s.out.as_deref(), &json_text(&doc))
        }
    }
}

pub fn out_dir_exists(path: Option<&Path>) -> bool {
    match path.and_then(Path::parent) {
        Some(d) if !d.as_os_str().is_empty() => d.is_dir(),
        _ => true,
    }
}
