use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use spheregate::commands;
use spheregate::{Outcome, RunConfig};
use spheregate_core::Mode;

/// Simulator for a multi-control Rydberg Toffoli gate with controls on a
/// sphere around the target.
#[derive(Parser, Debug)]
#[command(name = "spheregate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (SPHEREGATE_OUT takes precedence).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for trajectories and sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trajectories per input.
    #[arg(long, global = true)]
    trajectories: Option<usize>,
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Allow registers larger than eight atoms.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Unit fidelities against ring height.
    SweepH {
        #[command(flatten)]
        common: Common,
    },
    /// Averaged unit fidelity against Omega_c / Omega_t.
    SweepChi {
        #[command(flatten)]
        common: Common,
    },
    /// Error decomposition against the target Rabi frequency.
    SweepOmega {
        #[command(flatten)]
        common: Common,
    },
    /// Fidelity of the gate with the first k controls.
    Gate {
        #[arg(long, default_value_t = 6)]
        controls: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Fidelity with one extra randomly placed control.
    Seventh {
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Per-input outputs of the gate.
    TruthTable {
        #[arg(long, default_value_t = 2)]
        controls: usize,
        /// No decay, no control-control shift, near-perfect blockade.
        #[arg(long)]
        ideal: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: spheregate_core::Error| e.to_string())
}

fn resolve(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(m) = common.trajectories {
        cfg.solver.trajectories = m;
    }
    if let Some(mode) = common.mode {
        cfg.solver.mode = Some(mode);
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(env) = std::env::var_os("SPHEREGATE_OUT") {
        cfg.output_dir = PathBuf::from(env);
    }
    cfg.validate()?;
    if let Some(w) = common.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    let out = cfg.output_dir.clone();
    Ok((cfg, out))
}

fn report<S: Serialize>(outcome: Outcome<S>, headline: String) -> ExitCode {
    println!("{headline}");
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} point(s) failed:", outcome.failures.len());
        for f in &outcome.failures {
            eprintln!("  {f}");
        }
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let code = match cli.command {
        Command::SweepH { common } => {
            let (cfg, out) = resolve(&common)?;
            let o = commands::sweep_h(&cfg, Path::new(&out))?;
            let maxima: Vec<String> = o
                .summary
                .maxima
                .iter()
                .map(|(h, f)| format!("{f:.5} at h/R = {h:.3}"))
                .collect();
            let line = format!("F_av maxima: {}", maxima.join(", "));
            report(o, line)
        }
        Command::SweepChi { common } => {
            let (cfg, out) = resolve(&common)?;
            let o = commands::sweep_chi(&cfg, &out)?;
            let line = match o.summary.points.last() {
                Some(p) => format!("chi = {}: F_av = {:?}", p.chi, p.fidelities),
                None => "no points".to_string(),
            };
            report(o, line)
        }
        Command::SweepOmega { common } => {
            let (cfg, out) = resolve(&common)?;
            let o = commands::sweep_omega(&cfg, &out)?;
            let line = format!("{} Rabi frequencies decomposed", o.summary.points.len());
            report(o, line)
        }
        Command::Gate { controls, common } => {
            let (cfg, out) = resolve(&common)?;
            let o = commands::gate(&cfg, &out, controls, common.force)?;
            let s = &o.summary;
            let line = format!(
                "F_{} = {:.5} +/- {:.5} (1 - e_k_sp = {:.5})",
                controls + 1,
                s.fidelity,
                s.std_error,
                s.decay_bound
            );
            report(o, line)
        }
        Command::Seventh { samples, common } => {
            let (cfg, out) = resolve(&common)?;
            let o = commands::seventh(&cfg, &out, samples, common.force)?;
            let s = &o.summary;
            let line = format!(
                "mean F = {:.5} (spread {:.5}, SE {:.5}); 1 - e_k_sp = {:.5}",
                s.mean, s.spread, s.se_mean, s.decay_bound
            );
            report(o, line)
        }
        Command::TruthTable {
            controls,
            ideal,
            common,
        } => {
            let (cfg, out) = resolve(&common)?;
            let o = commands::truth_table(&cfg, &out, controls, ideal, common.force)?;
            let text = o.summary.text.trim_end().to_string();
            report(o, text)
        }
    };
    Ok(code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
