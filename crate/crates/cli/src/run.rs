//! Experiment execution and file output.

use std::path::{Path, PathBuf};

use cavmag_core::gaussian::{self, CAVITY};
use cavmag_core::oracles::{self, FockConfig, FockModel};
use cavmag_core::sweep::{self, EvalTime, FitResult, SweepRecord};
use cavmag_core::{CriticalModel, RwaModel};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{
    CriticalRun, CriticalSweepRun, ExperimentConfig, HlSweep, NuCheck, Oracle, OracleCheck, RwaRun, SweepVariable,
};
use crate::error::{CliError, Op};

pub const TIME_HEADER: [&str; 8] = ["t", "F_Q", "F_C", "S", "n_th", "r", "phi", "N_c"];
pub const CRITICAL_HEADER: [&str; 5] = ["g", "gc_minus_g", "t_star", "F_Q", "F_C"];

/// Largest cavity-covariance entry difference accepted from the Fock oracle.
pub const FOCK_THRESHOLD: f64 = 1e-6;
/// Largest cavity-covariance difference, relative to `max(1, max|γ|)`,
/// accepted from the Lyapunov oracle.
pub const LYAPUNOV_THRESHOLD: f64 = 1e-8;

/// What a run wrote and what it has to say about it.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

/// Shortest decimal string that parses back to the same double.
pub fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    }
    let csv_err = |e| CliError::Csv(path.to_path_buf(), e);
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt(x))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Io(path.to_path_buf(), e))
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn companion_path(csv: &Path, suffix: &str) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}{suffix}.csv"))
}

fn fit_json(f: &FitResult) -> Value {
    json!({
        "slope": f.slope,
        "intercept": f.intercept,
        "r_squared": f.r_squared,
        "n_points": f.n_points,
        "flagged": f.flagged(),
    })
}

fn write_sidecar(
    csv: &Path,
    cfg: &ExperimentConfig,
    files: &[PathBuf],
    fits: Map<String, Value>,
    results: Map<String, Value>,
) -> Result<PathBuf, CliError> {
    let path = sidecar_path(csv);
    let doc = json!({
        "config": cfg,
        "files": files,
        "fits": fits,
        "results": results,
    });
    let text = serde_json::to_string_pretty(&doc).expect("sidecar is plain JSON data");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(path.clone(), e))?;
    Ok(path)
}

fn time_row(r: &SweepRecord) -> Vec<f64> {
    vec![r.t, r.f_q, r.f_c, r.s, r.n_th, r.r, r.phi, r.n_c]
}

/// Finalises a run that wrote `csvs` (the first one names the sidecar).
fn finish(
    cfg: &ExperimentConfig,
    csvs: Vec<PathBuf>,
    fits: Map<String, Value>,
    results: Map<String, Value>,
    mut lines: Vec<String>,
) -> Result<Report, CliError> {
    let sidecar = write_sidecar(&csvs[0], cfg, &csvs, fits, results)?;
    let mut files = csvs;
    files.push(sidecar);
    for f in &files {
        lines.push(format!("wrote {}", f.display()));
    }
    Ok(Report { files, lines })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    match cfg {
        ExperimentConfig::Rwa(c) => run_rwa(cfg, c),
        ExperimentConfig::Critical(c) => run_critical(cfg, c),
        ExperimentConfig::SweepHl(c) => run_hl(cfg, c),
        ExperimentConfig::SweepCritical(c) => run_critical_sweep(cfg, c),
        ExperimentConfig::NuCheck(c) => run_nu(cfg, c),
        ExperimentConfig::OracleCheck(c) => oracle_check(cfg, c),
    }
}

/// Grid point with the largest `F/t²` (t > 0, finite values only).
fn grid_peak(rows: &[Vec<f64>], column: usize) -> Option<(f64, f64)> {
    rows.iter()
        .filter(|r| r[0] > 0.0 && r[column].is_finite())
        .map(|r| (r[0], r[column] / (r[0] * r[0])))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

fn peak_results(rows: &[Vec<f64>], results: &mut Map<String, Value>) {
    for (name, column) in [("F_Q", 1), ("F_C", 2)] {
        if let Some((t, v)) = grid_peak(rows, column) {
            results.insert(format!("grid_peak_{name}_over_t2"), json!({ "t": t, "value": v }));
        }
    }
}

fn run_rwa(cfg: &ExperimentConfig, c: &RwaRun) -> Result<Report, CliError> {
    let grid = c.t_grid.values("t_grid")?;
    let records = sweep::rwa_time_series(&c.model, &grid).op("rwa_dynamics time series")?;
    let rows: Vec<Vec<f64>> = records.iter().map(time_row).collect();
    write_csv(&c.output, &TIME_HEADER, &rows)?;
    let mut results = Map::new();
    if let Ok(ts) = c.model.t_star() {
        results.insert("t_star".into(), json!(ts));
    }
    peak_results(&rows, &mut results);
    finish(cfg, vec![c.output.clone()], Map::new(), results, Vec::new())
}

fn critical_row(m: &CriticalModel, t: f64) -> cavmag_core::Result<Vec<f64>> {
    let (p, f) = m.fisher_at(t)?;
    let s = gaussian::entanglement_entropy(p.n_th)?;
    Ok(vec![t, f.f_q, f.f_c, s, p.n_th, p.r, p.phi, gaussian::photon_number(&p)])
}

fn run_critical(cfg: &ExperimentConfig, c: &CriticalRun) -> Result<Report, CliError> {
    let grid = c.t_grid.values("t_grid")?;
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&t| critical_row(&c.model, t))
        .collect::<cavmag_core::Result<_>>()
        .op("critical_dynamics time series")?;
    write_csv(&c.output, &TIME_HEADER, &rows)?;
    let mut results = Map::new();
    results.insert("g_c".into(), json!(c.model.g_c()));
    results.insert("t_star".into(), json!(c.model.t_star(1).op("critical_dynamics t_star")?));
    peak_results(&rows, &mut results);
    finish(cfg, vec![c.output.clone()], Map::new(), results, Vec::new())
}

fn run_hl(cfg: &ExperimentConfig, c: &HlSweep) -> Result<Report, CliError> {
    let grid = c.grid.values("grid")?;
    let (exp, fit_name) = match c.vary {
        SweepVariable::R0 => (
            sweep::snl_hl_experiment(&c.model, &grid, c.eval).op("snl_hl_experiment")?,
            "F_C_vs_N_c",
        ),
        SweepVariable::Bx => {
            let t = match c.eval {
                EvalTime::Fixed(t) => t,
                _ => c.model.t_star().op("rwa_dynamics t_star")?,
            };
            (
                sweep::displacement_experiment(&c.model, &grid, t).op("displacement sweep")?,
                "F_Q_vs_N_c",
            )
        }
    };
    let rows: Vec<Vec<f64>> = exp.records.iter().map(time_row).collect();
    write_csv(&c.output, &TIME_HEADER, &rows)?;
    let mut fits = Map::new();
    fits.insert(fit_name.into(), fit_json(&exp.fit));
    let mut results = Map::new();
    results.insert("swept_values".into(), json!(grid));
    let excluded: Vec<f64> = exp
        .records
        .iter()
        .zip(&grid)
        .filter(|(r, _)| r.clamped)
        .map(|(_, &v)| v)
        .collect();
    results.insert("excluded_from_fit".into(), json!(excluded));
    let lines = vec![format!(
        "{fit_name}: slope {} (R² {})",
        fmt(exp.fit.slope),
        fmt(exp.fit.r_squared)
    )];
    finish(cfg, vec![c.output.clone()], fits, results, lines)
}

fn run_critical_sweep(cfg: &ExperimentConfig, c: &CriticalSweepRun) -> Result<Report, CliError> {
    let gaps = c.gap_grid.values("gap_grid")?;
    let s = sweep::critical_scaling_sweep(c.omega_c, c.omega_m, &gaps).op("critical scaling sweep")?;
    let at_star: Vec<Vec<f64>> = s.records.iter().map(|r| vec![r.g, r.gc_minus_g, r.t_star, r.f_q, r.f_c]).collect();
    let at_quarter: Vec<Vec<f64>> = s
        .records
        .iter()
        .map(|r| vec![r.g, r.gc_minus_g, r.t_star, r.f_q_quarter, r.f_c_quarter])
        .collect();
    let quarter = companion_path(&c.output, "_quarter");
    write_csv(&c.output, &CRITICAL_HEADER, &at_star)?;
    write_csv(&quarter, &CRITICAL_HEADER, &at_quarter)?;

    let mut fits = Map::new();
    fits.insert("F_C_over_tstar2_at_t_star".into(), fit_json(&s.fit_t_star));
    fits.insert("F_C_over_tstar2_at_quarter".into(), fit_json(&s.fit_quarter));
    fits.insert("F_C_at_t_star".into(), fit_json(&s.raw_fit_t_star));
    fits.insert("F_C_at_quarter".into(), fit_json(&s.raw_fit_quarter));
    let lines = vec![
        format!("slope at t*: {} (R² {})", fmt(s.fit_t_star.slope), fmt(s.fit_t_star.r_squared)),
        format!("slope at t*/4: {} (R² {})", fmt(s.fit_quarter.slope), fmt(s.fit_quarter.r_squared)),
    ];
    finish(cfg, vec![c.output.clone(), quarter], fits, Map::new(), lines)
}

fn run_nu(cfg: &ExperimentConfig, c: &NuCheck) -> Result<Report, CliError> {
    let grid = c.r_grid.values("r_grid")?;
    let exp = sweep::nu_scaling_check(c.nu, &grid).op("nu_scaling_check")?;
    let rows: Vec<Vec<f64>> = exp.records.iter().map(time_row).collect();
    write_csv(&c.output, &TIME_HEADER, &rows)?;
    let mut fits = Map::new();
    fits.insert("F_Q_vs_N_c".into(), fit_json(&exp.fit));
    let mut results = Map::new();
    results.insert("expected_slope".into(), json!(4.0 / (2.0 + c.nu)));
    let lines = vec![format!(
        "F_Q vs N_c slope {} (expected {})",
        fmt(exp.fit.slope),
        fmt(4.0 / (2.0 + c.nu))
    )];
    finish(cfg, vec![c.output.clone()], fits, results, lines)
}

fn closed_cavity(model: &FockModel, t: f64) -> cavmag_core::Result<gaussian::GaussianState> {
    match model {
        FockModel::Rwa(m) => Ok(m.evolve_cavity(t)?.0),
        FockModel::Critical(m) => m.gamma_c_closed(t),
    }
}

fn fock_discrepancies(
    model: &FockModel,
    cutoff: Option<usize>,
    tail_tolerance: Option<f64>,
    grid: &[f64],
) -> cavmag_core::Result<Vec<f64>> {
    let (r0, base) = match model {
        FockModel::Rwa(m) => (m.r0, FockConfig::for_squeezing(*model, m.r0)?),
        FockModel::Critical(_) => (0.0, FockConfig::new(*model, 60)),
    };
    let cfg = FockConfig {
        cutoff: cutoff.unwrap_or(base.cutoff),
        tail_tolerance: tail_tolerance.unwrap_or(base.tail_tolerance),
        ..base
    };
    grid.par_iter()
        .map(|&t| {
            let fock = oracles::fock_evolve(&cfg, r0, t)?.state.reduce(CAVITY)?;
            let closed = closed_cavity(model, t)?;
            Ok((fock.covariance() - closed.covariance()).amax())
        })
        .collect()
}

fn lyapunov_discrepancies(m: &RwaModel, grid: &[f64]) -> cavmag_core::Result<(Vec<f64>, Option<f64>)> {
    let joint = oracles::lyapunov_integrate_grid(m, grid)?;
    let mut cavity = Vec::with_capacity(grid.len());
    let noiseless = m.kappa == 0.0 && m.b_x == 0.0 && m.b_y == 0.0;
    let mut joint_max: f64 = 0.0;
    for (state, &t) in joint.iter().zip(grid) {
        let closed = m.evolve_cavity(t)?.0;
        let scale = closed.covariance().amax().max(1.0);
        cavity.push((state.reduce(CAVITY)?.covariance() - closed.covariance()).amax() / scale);
        if noiseless {
            let exact = m.joint_evolve_noiseless(t)?;
            joint_max = joint_max.max((state.covariance() - exact.covariance()).amax());
        }
    }
    Ok((cavity, noiseless.then_some(joint_max)))
}

pub fn oracle_check(cfg: &ExperimentConfig, c: &OracleCheck) -> Result<Report, CliError> {
    let grid = c.t_grid.values("t_grid")?;
    let mut results = Map::new();
    let mut lines = Vec::new();
    let (name, threshold, diffs) = match &c.oracle {
        Oracle::Fock { model, cutoff, tail_tolerance } => (
            "fock",
            FOCK_THRESHOLD,
            fock_discrepancies(model, *cutoff, *tail_tolerance, &grid).op("fock oracle")?,
        ),
        Oracle::Lyapunov { model } => {
            let (diffs, joint) = lyapunov_discrepancies(model, &grid).op("lyapunov oracle")?;
            if let Some(j) = joint {
                lines.push(format!("joint covariance vs symplectic propagator: {}", fmt(j)));
                results.insert("joint_discrepancy".into(), json!(j));
            }
            ("lyapunov", LYAPUNOV_THRESHOLD, diffs)
        }
    };
    let max = diffs.iter().copied().fold(0.0, f64::max);
    lines.insert(
        0,
        format!(
            "{name} oracle: max cavity covariance discrepancy {} over {} times (threshold {})",
            fmt(max),
            grid.len(),
            fmt(threshold)
        ),
    );
    results.insert("max_discrepancy".into(), json!(max));
    results.insert("threshold".into(), json!(threshold));

    let mut report = Report { files: Vec::new(), lines };
    if let Some(out) = &c.output {
        let rows: Vec<Vec<f64>> = grid.iter().zip(&diffs).map(|(&t, &d)| vec![t, d]).collect();
        write_csv(out, &["t", "discrepancy"], &rows)?;
        let done = finish(cfg, vec![out.clone()], Map::new(), results, Vec::new())?;
        report.files = done.files;
        report.lines.extend(done.lines);
    }
    if !(max <= threshold) {
        for l in &report.lines {
            println!("{l}");
        }
        return Err(CliError::OracleMismatch {
            oracle: name,
            max,
            threshold,
        });
    }
    Ok(report)
}
