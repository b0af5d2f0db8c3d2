//! `cavmag`: config-driven metrology experiments for the cavity-magnon model.

mod config;
mod error;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
pub use crate::error::CliError;
use crate::error::Op;

const CONFIG_HELP: &str = "\
Config files are JSON objects selected by \"mode\". Unknown fields are errors.

Grids: {\"start\": x, \"stop\": y, \"count\": n, \"spacing\": \"linear\" | \"geometric\"}
  (spacing defaults to linear).

RWA model fields: omega_c, B0, g, and optionally B, B_x, B_y, kappa, n_noise, r0
  (defaults 0); the magnon frequency is B0 + B.
Critical model fields: omega_c, omega_m, g (g below sqrt(omega_c*omega_m)/2).

Modes:
  rwa             model (RWA), t_grid, output
  critical        model (critical), t_grid, output
  sweep-hl        model (RWA), grid, vary (\"r0\" | \"B_x\", default r0),
                  eval (\"t_star\" | {\"fixed\": t} | {\"cfi_peak\": {\"lo\", \"hi\", \"grid_n\"}},
                  lo/hi in units of t*; default t_star), output
  sweep-critical  omega_c, omega_m, gap_grid ((g_c - g)/g_c values), output;
                  also writes <output stem>_quarter.csv evaluated at t*/4
  nu-check        nu, r_grid, output
  oracle-check    oracle ({\"kind\": \"fock\", \"model\": {\"kind\": \"rwa\" | \"critical\", ...},
                  \"cutoff\"?, \"tail_tolerance\"?} or {\"kind\": \"lyapunov\", \"model\": RWA}),
                  t_grid, output (optional)

CSV columns: t,F_Q,F_C,S,n_th,r,phi,N_c (sweep-critical: g,gc_minus_g,t_star,F_Q,F_C).
Each CSV gets a JSON sidecar (same stem) holding the resolved config and fits.

Exit codes: 0 success, 1 I/O failure, 2 invalid config, 3 numerical failure
or oracle disagreement. MM_SEED is reserved and unused: all dynamics are
deterministic.";

#[derive(Parser)]
#[command(name = "cavmag", version, about = "Gaussian-state metrology experiments for cavity magnonics", after_long_help = CONFIG_HELP)]
struct Cli {
    /// Worker threads for parallel sweeps (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Compare a closed form against its brute-force oracle.
    OracleCheck { config: PathBuf },
    /// Log-log least-squares fit of two CSV columns.
    Fit {
        csv: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Config(format!("{}: no column named {name}", path.display())))
}

fn fit(path: &Path, x: &str, y: &str) -> Result<Vec<String>, CliError> {
    let csv_err = |e| CliError::Csv(path.to_path_buf(), e);
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let (ix, iy) = (column(&headers, x, path)?, column(&headers, y, path)?);
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let parse = |i: usize| -> Result<f64, CliError> {
            record[i].trim().parse().map_err(|_| {
                CliError::Config(format!("{}: row {}: {:?} is not a number", path.display(), line + 2, &record[i]))
            })
        };
        points.push((parse(ix)?, parse(iy)?));
    }
    let f = cavmag_core::sweep::loglog_fit(&points).op("loglog_fit")?;
    let doc = serde_json::json!({
        "x": x,
        "y": y,
        "slope": f.slope,
        "intercept": f.intercept,
        "r_squared": f.r_squared,
        "n_points": f.n_points,
        "flagged": f.flagged(),
    });
    Ok(vec![serde_json::to_string_pretty(&doc).expect("plain JSON data")])
}

fn dispatch(cli: Cli) -> Result<Vec<String>, CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Run { config } => Ok(run::run(&ExperimentConfig::load(&config)?)?.lines),
        Command::OracleCheck { config } => match ExperimentConfig::load(&config)? {
            ref cfg @ ExperimentConfig::OracleCheck(ref c) => Ok(run::oracle_check(cfg, c)?.lines),
            _ => Err(CliError::Config(format!(
                "{}: oracle-check needs \"mode\": \"oracle-check\"",
                config.display()
            ))),
        },
        Command::Fit { csv, x, y } => fit(&csv, &x, &y),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
