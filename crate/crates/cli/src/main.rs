use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use preb_core::config::RunConfig;
use preb_core::correlation::CorrelationMatrix;
use preb_core::dynamics::{trajectory_thermodynamics, write_trajectory_csv};
use preb_core::negf::{landauer_currents, write_transmission_csv, NegfOptions, NegfReport};
use preb_core::pipeline::{build_chains, prepare_cycle, solve_ness};
use preb_core::sweep::{run_sweep, write_report_csv, write_sweep_csv};
use preb_core::validation::{run_criterion, criterion_ids, Level};
use preb_core::{PrebError, Result};

/// Periodically refreshed baths: steady states, sweeps and checks.
#[derive(Parser, Debug)]
#[command(name = "preb", version)]
struct Cli {
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and validation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Sites added to the light-cone chain length.
    #[arg(long, global = true)]
    l0: Option<usize>,
    /// Minimum chain depth.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady-state report for one parameter point.
    Ness { config: PathBuf },
    /// Steady-state reports over the config's [sweep] grid.
    Sweep { config: PathBuf },
    /// Per-cycle thermodynamics starting from the empty system.
    Trajectory {
        config: PathBuf,
        #[arg(long)]
        steps: usize,
    },
    /// Chain coefficients of one bath.
    Chainmap {
        config: PathBuf,
        /// Which bath (1 or 2).
        #[arg(long, default_value_t = 1)]
        bath: usize,
    },
    /// Continuous-time steady state of the system between the two leads.
    Negf {
        config: PathBuf,
        /// Also dump the transmission function to this file.
        #[arg(long)]
        transmission: Option<PathBuf>,
        #[arg(long, default_value_t = 1201)]
        points: usize,
    },
    /// Run the self-checks; prints `id,measured,tolerance,pass`.
    Validate {
        #[arg(long)]
        full: bool,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            PrebError::Io(io::Error::new(e.kind(), format!("cannot write {}: {e}", p.display())))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(l0) = cli.l0 {
        cfg.model.process.l0 = l0;
    }
    if let Some(depth) = cli.depth {
        if depth == 0 {
            return Err(PrebError::Config("--depth must be positive".into()));
        }
        cfg.model.process.depth = depth;
    }
    Ok(cfg)
}

fn jobs(cli: &Cli) -> usize {
    cli.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ness { config } => {
            let cfg = load(cli, config)?;
            let report = solve_ness(&cfg.model)?.report;
            write_report_csv(output(&cli.out)?, &[report])
        }
        Command::Sweep { config } => {
            let cfg = load(cli, config)?;
            let spec = cfg.sweep.ok_or_else(|| PrebError::Config("config has no [sweep] section".into()))?;
            let mut out = output(&cli.out)?;
            let rows = run_sweep(&cfg.model, &spec, jobs(cli))?;
            write_sweep_csv(&mut out, &rows)
        }
        Command::Trajectory { config, steps } => {
            if *steps == 0 {
                return Err(PrebError::Config("--steps must be positive".into()));
            }
            let cfg = load(cli, config)?;
            let setup = prepare_cycle(&cfg.model)?;
            let (traj, thermo) = trajectory_thermodynamics(
                &CorrelationMatrix::zeros(cfg.model.system.dim()),
                *steps,
                &setup.hamiltonian,
                &setup.propagator,
                &setup.drive,
                setup.bath_refs(),
                cfg.model.thermal(),
            )?;
            write_trajectory_csv(output(&cli.out)?, &thermo, &traj.dist_to_ness)
        }
        Command::Chainmap { config, bath } => {
            if !(1..=2).contains(bath) {
                return Err(PrebError::Config(format!("--bath must be 1 or 2, got {bath}")));
            }
            let cfg = load(cli, config)?;
            let [c1, c2] = build_chains(&cfg.model, cfg.model.process.depth)?;
            let chain = if *bath == 1 { c1 } else { c2 };
            chain.write_csv_to(output(&cli.out)?)
        }
        Command::Negf { config, transmission, points } => {
            let cfg = load(cli, config)?;
            let m = &cfg.model;
            let report = landauer_currents(&m.system, m.spectral(), m.thermal(), &NegfOptions::default())?;
            if let Some(path) = transmission {
                write_transmission_csv(&m.system, m.spectral(), *points, path)?;
            }
            let mut out = output(&cli.out)?;
            writeln!(out, "{}", NegfReport::header(m.system.dim()).join(","))?;
            writeln!(out, "{}", report.csv_fields().join(","))?;
            out.flush()?;
            Ok(())
        }
        Command::Validate { full } => {
            let level = if *full { Level::Full } else { Level::Quick };
            let mut out = output(&cli.out)?;
            writeln!(out, "id,measured,tolerance,pass")?;
            let mut failed = Vec::new();
            for id in criterion_ids(level) {
                let res = run_criterion(id)?;
                for c in &res.checks {
                    eprintln!("[{}] {c}", res.id);
                }
                writeln!(out, "{}", res.summary_fields().join(","))?;
                out.flush()?;
                if !res.pass() {
                    failed.push(res.id);
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(PrebError::Validation(format!("failed criteria: {}", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
