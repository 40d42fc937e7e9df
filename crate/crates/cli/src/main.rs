//! `qsteer` command-line tool.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use qsteer::ed::{self, ChainSpec, GroundSpaceOptions, Model, Solver};
use qsteer::io::{self as qio, IoError};
use qsteer::quadrature::QuadConfig;
use qsteer::scan::{self, IsingScanConfig, Scan, XxzScanConfig, XxzSource};

#[derive(Parser, Debug)]
#[command(name = "qsteer", version, about = "Quantum obesity and steering-ellipsoid sweeps")]
struct Cli {
    /// TOML file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report R, obesity, ellipsoid and concurrence of a state file.
    Analyze {
        state: PathBuf,
        /// Filter file with "O_A" and "O_B".
        #[arg(long)]
        filter: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the Ising coupling λ.
    IsingScan {
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Separation of the spin pair.
        #[arg(long)]
        k: Option<usize>,
        /// Apply the optimal local filter at every point.
        #[arg(long)]
        filter: bool,
        #[arg(long)]
        quad_tol: Option<f64>,
        #[arg(long)]
        quad_budget: Option<usize>,
        /// Add a 10x finer sweep over [0.9, 1.1], written to <out>.fine.csv.
        #[arg(long)]
        densify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the XXZ anisotropy Δ.
    XxzScan {
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = Source::Ed)]
        source: Source,
        #[arg(long)]
        table_file: Option<PathBuf>,
        #[arg(long)]
        degeneracy_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact-diagonalization correlators of one chain as CSV.
    EdDump {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        param: f64,
        #[arg(long)]
        degeneracy_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    Ed,
    Table,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    #[serde(default)]
    quadrature: QuadSection,
    #[serde(default)]
    ising: GridSection,
    #[serde(default)]
    xxz: GridSection,
    #[serde(default)]
    ed: EdSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadSection {
    tol: Option<f64>,
    budget: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
    k: Option<usize>,
    n: Option<usize>,
    filter: Option<bool>,
    densify: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdSection {
    degeneracy_tol: Option<f64>,
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_scan(scan: &Scan, out: Option<&Path>) -> Result<(), Failure> {
    scan::write_records(output(out)?, &scan.param_name, &scan.records).map_err(|e| Failure::Input(e.to_string()))?;
    if let (Some(fine), Some(p)) = (&scan.fine, out) {
        let fine_path = p.with_extension("fine.csv");
        scan::write_records(output(Some(&fine_path))?, &fine.param_name, &fine.records)
            .map_err(|e| Failure::Input(e.to_string()))?;
    }
    match scan.kink() {
        Ok(k) => eprintln!(
            "kink: {} = {} (score {:.3e}, window [{}, {}])",
            scan.param_name, k.param_hat, k.score, k.window.0, k.window.1
        ),
        Err(e) => eprintln!("kink: not located ({e})"),
    }
    for f in &scan.failures {
        eprintln!("failed at {} = {}: {}", scan.param_name, f.param, f.message);
    }
    if scan.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("{} grid points failed", scan.failures.len())))
    }
}

fn quad_config(cfg: &Config, tol: Option<f64>, budget: Option<usize>) -> Result<QuadConfig, Failure> {
    let d = QuadConfig::default();
    let q = QuadConfig {
        tol: tol.or(cfg.quadrature.tol).unwrap_or(d.tol),
        budget: budget.or(cfg.quadrature.budget).unwrap_or(d.budget),
    };
    if !(q.tol > 0.0) {
        return Err(Failure::Input(format!("quadrature tolerance must be positive, got {}", q.tol)));
    }
    Ok(q)
}

fn ground_options(cfg: &Config, tol: Option<f64>) -> GroundSpaceOptions {
    GroundSpaceOptions {
        degeneracy_tol: tol.or(cfg.ed.degeneracy_tol).unwrap_or(ed::DEFAULT_DEGENERACY_TOL),
        solver: Solver::Auto,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Analyze { state, filter, out } => {
            let rho = qio::read_state_file(&state)?;
            let f = filter.as_deref().map(qio::read_filter_file).transpose()?;
            let report = scan::analyze_state(&rho, f.as_ref()).map_err(|e| Failure::Input(e.to_string()))?;
            let mut w = output(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &report).map_err(|e| Failure::Input(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        }
        Command::IsingScan {
            from,
            to,
            step,
            k,
            filter,
            quad_tol,
            quad_budget,
            densify,
            out,
        } => {
            let d = IsingScanConfig::default();
            let g = &cfg.ising;
            let sc = IsingScanConfig {
                from: from.or(g.from).unwrap_or(d.from),
                to: to.or(g.to).unwrap_or(d.to),
                step: step.or(g.step).unwrap_or(d.step),
                k: k.or(g.k).unwrap_or(d.k),
                quad: quad_config(&cfg, quad_tol, quad_budget)?,
                with_filter: filter || g.filter.unwrap_or(false),
                densify: densify || g.densify.unwrap_or(false),
            };
            if !(1..=qsteer::ising::MAX_SEPARATION).contains(&sc.k) {
                return Err(Failure::Input(format!("k = {} outside 1..={}", sc.k, qsteer::ising::MAX_SEPARATION)));
            }
            let result = scan::ising_scan(&sc).map_err(|e| Failure::Input(e.to_string()))?;
            write_scan(&result, out.as_deref())
        }
        Command::XxzScan {
            from,
            to,
            step,
            n,
            source,
            table_file,
            degeneracy_tol,
            out,
        } => {
            let g = &cfg.xxz;
            let n = n.or(g.n).unwrap_or(12);
            if !(ed::MIN_SITES..=ed::MAX_SITES).contains(&n) {
                return Err(Failure::Input(format!("n = {n} outside {}..={}", ed::MIN_SITES, ed::MAX_SITES)));
            }
            let source = match source {
                Source::Ed => XxzSource::Ed(ground_options(&cfg, degeneracy_tol)),
                Source::Table => {
                    let path = table_file.ok_or_else(|| Failure::Input("--source table needs --table-file".into()))?;
                    let file = File::open(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                    XxzSource::Table(ed::read_correlator_table(file).map_err(|e| Failure::Input(e.to_string()))?)
                }
            };
            let sc = XxzScanConfig {
                from: from.or(g.from).unwrap_or(-2.0),
                to: to.or(g.to).unwrap_or(0.0),
                step: step.or(g.step).unwrap_or(0.05),
                n,
                source,
            };
            let result = scan::xxz_scan(&sc).map_err(|e| Failure::Input(e.to_string()))?;
            write_scan(&result, out.as_deref())
        }
        Command::EdDump {
            model,
            n,
            param,
            degeneracy_tol,
            out,
        } => {
            let spec = ChainSpec::new(model, n, param).map_err(|e| Failure::Input(e.to_string()))?;
            let gs = ed::ground_space_with(&spec, ground_options(&cfg, degeneracy_tol))
                .map_err(|e| Failure::Numerical(e.to_string()))?;
            let rows = ed::correlator_rows(&gs).map_err(|e| Failure::Numerical(e.to_string()))?;
            eprintln!("energy {} degeneracy {}", gs.energy, gs.degeneracy);
            ed::write_correlator_table(output(out.as_deref())?, &rows).map_err(|e| Failure::Input(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
