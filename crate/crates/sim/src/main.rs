use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use twr_sim::experiment::{convergence, design, DesignSettings};
use twr_sim::output::{write_results, Format};
use twr_sim::{emit_convergence, emit_results, run_experiment, ExperimentConfig, Method, PhaseScenario, ResultRow, SimError};

#[derive(Parser)]
#[command(name = "twr-sim", version, about = "Training design experiments for MIMO two-way relay channel estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design the training sequences at one SNR and print them as JSON.
    Design {
        #[command(flatten)]
        common: Common,
        /// SNR in dB; defaults to the first grid point.
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Analytic and Monte-Carlo NMSE for every method over the SNR grid.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Per-iteration error of one design.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Defaults to the first configured method.
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Sweep, then tabulate each method against the baselines.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; inferred from the --out extension by default.
    #[arg(long)]
    format: Option<Format>,
    /// Write zero wall times so reruns produce identical files.
    #[arg(long)]
    no_timing: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, SimError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.experiment.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.experiment.trials = t;
        }
        if self.no_timing {
            cfg.experiment.timing = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or_else(|| self.out.as_deref().map(Format::from_path).unwrap_or(Format::Csv))
    }

    fn emit(&self, rows: &[ResultRow]) -> Result<(), SimError> {
        match &self.out {
            Some(p) => emit_results(rows, self.format(), p),
            None => write_results(rows, self.format(), io::stdout().lock())
                .map_err(|msg| SimError::Format { path: "<stdout>".into(), msg }),
        }
    }
}

#[derive(Serialize)]
struct DesignOut {
    method: Method,
    snr_db: f64,
    mse: f64,
    nmse: f64,
    iterations: usize,
    budgets: Vec<f64>,
    powers: Vec<f64>,
    /// Row-major `[re, im]` entries.
    training: Vec<Vec<[f64; 2]>>,
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), SimError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| SimError::Io { path: p.to_path_buf(), source }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| SimError::Io { path: "<stdout>".into(), source }),
    }
}

fn run_design(common: &Common, snr: Option<f64>) -> Result<(), SimError> {
    let cfg = common.load()?;
    let e = &cfg.experiment;
    let snr_db = snr.unwrap_or(e.snr_grid[0]);
    if !snr_db.is_finite() {
        return Err(SimError::Config(format!("--snr: non-finite value {snr_db}")));
    }
    let sc = PhaseScenario::build(&cfg.scenario, e.phase, snr_db)?;
    let cell = e.snr_grid.iter().position(|&v| v == snr_db).unwrap_or(0) as u64;
    let settings = DesignSettings::from_config(&cfg);
    let mut designs = Vec::new();
    for &method in &e.methods {
        let d = design(method, &sc, &settings, cell).map_err(|source| SimError::Design { method, snr_db, source })?;
        let training = (0..d.seq.s.nrows())
            .map(|i| d.seq.s.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        designs.push(DesignOut {
            method,
            snr_db,
            mse: d.mse,
            nmse: d.mse / sc.n_coefficients() as f64,
            iterations: d.iterations,
            budgets: d.seq.budgets.clone(),
            powers: d.seq.powers(),
            training,
        });
    }
    let text = serde_json::to_string_pretty(&designs).expect("design output serializes") + "\n";
    write_text(common.out.as_deref(), &text)
}

fn run_converge(common: &Common, method: Option<Method>, snr: Option<f64>) -> Result<(), SimError> {
    let cfg = common.load()?;
    let method = method.unwrap_or(cfg.experiment.methods[0]);
    if !method.supports(cfg.experiment.phase) {
        return Err(SimError::Config(format!("--method: `{method}` does not apply to the {:?} phase", cfg.experiment.phase)));
    }
    let snr_db = snr.unwrap_or(cfg.experiment.snr_grid[0]);
    let trace = convergence(&cfg, method, snr_db)?;
    match &common.out {
        Some(p) => emit_convergence(&trace, p),
        None => {
            let mut text = String::from("iteration,mse\n");
            for (i, e) in trace.iter().enumerate() {
                text += &format!("{i},{e}\n");
            }
            write_text(None, &text)
        }
    }
}

fn compare_table(rows: &[ResultRow], methods: &[Method], grid: &[f64]) -> String {
    let reference = [Method::P2pOrthogonalBaseline, Method::IdentityBaseline]
        .into_iter()
        .find(|m| methods.contains(m));
    let cell = |m: Method, snr: f64| rows.iter().find(|r| r.method == m && r.snr_db == snr);
    let mut text = format!("{:>8}", "snr_db");
    for m in methods {
        text += &format!(" {:>24}", m.name());
    }
    text.push('\n');
    for &snr in grid {
        text += &format!("{snr:>8.2}");
        for &m in methods {
            let r = cell(m, snr).expect("every cell was run");
            let nmse_db = 10.0 * r.analytic_nmse.log10();
            match reference.and_then(|b| cell(b, snr)).filter(|_| Some(m) != reference) {
                Some(b) => {
                    let gain = 10.0 * (b.analytic_nmse / r.analytic_nmse).log10();
                    text += &format!(" {:>14.3} ({gain:+6.2})", nmse_db);
                }
                None => text += &format!(" {nmse_db:>24.3}"),
            }
        }
        text.push('\n');
    }
    text += "analytic NMSE in dB";
    if let Some(b) = reference {
        text += &format!("; parentheses: gain over {b} in dB");
    }
    text.push('\n');
    text
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Design { common, snr } => run_design(&common, snr),
        Command::Sweep { common } => {
            let cfg = common.load()?;
            common.emit(&run_experiment(&cfg)?)
        }
        Command::Converge { common, method, snr } => run_converge(&common, method, snr),
        Command::Compare { common } => {
            let cfg = common.load()?;
            let rows = run_experiment(&cfg)?;
            let table = compare_table(&rows, &cfg.experiment.methods, &cfg.experiment.snr_grid);
            match &common.out {
                Some(p) => {
                    emit_results(&rows, common.format(), p)?;
                    print!("{table}");
                    Ok(())
                }
                None => write_text(None, &table),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twr-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
