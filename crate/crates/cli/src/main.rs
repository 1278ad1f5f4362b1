use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qfluid_cli::commands::{self, Outcome, SemigroupSpec, UncheckedInit};
use qfluid_cli::config::parse_config;
use qfluid_cli::error::{CliError, EXIT_OK, EXIT_USAGE};
use qfluid_cli::threads;
use qfluid_core::limits::SweepParameter;
use qfluid_core::relative_energy::ReferenceKind;
use qfluid_core::semiflow::Observable;

#[derive(Parser, Debug)]
#[command(name = "qfluid", version, about = "Galerkin experiments for viscous quantum fluids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation and audit its energy balance.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory; defaults to the config's output.directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Start from a raw density snapshot instead of the configured family.
        #[arg(long, value_name = "RHO")]
        unchecked_init: Option<PathBuf>,
        /// Momentum snapshot paired with --unchecked-init (zero if absent).
        #[arg(long, value_name = "MOM", requires = "unchecked_init")]
        unchecked_momentum: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run a parameter ladder.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// delta, epsilon or modes.
        #[arg(long)]
        param: SweepParameter,
        /// Comma-separated ladder values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        ladder: Vec<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        richardson: bool,
    },
    /// Relative energy of a run against a manufactured strong solution.
    Compare {
        #[arg(short, long)]
        config: PathBuf,
        /// constant or isothermal-drift.
        #[arg(long = "ref")]
        reference: ReferenceKind,
        /// Existing trajectory directory; runs the config when absent.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Gronwall fit window as start,end.
        #[arg(long, value_parser = pair)]
        window: Option<(f64, f64)>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Lexicographic selection over a set of candidate trajectories.
    Select {
        /// Directory holding candidates.json or candidate subdirectories.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "energy")]
        functionals: Vec<Observable>,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[arg(long)]
        horizon: Option<f64>,
        /// Config used to regenerate candidates for the semigroup check.
        #[arg(short, long, requires = "semigroup")]
        config: Option<PathBuf>,
        /// Semigroup check times as t1,t2.
        #[arg(long, value_parser = pair, requires = "config")]
        semigroup: Option<(f64, f64)>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check the operator identities on a grid.
    Verify {
        #[arg(long, default_value = "identities")]
        suite: String,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// Parses "a,b" into a pair of numbers.
fn pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b but got {s:?}"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

fn run(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Simulate {
            config,
            out,
            unchecked_init,
            unchecked_momentum,
            jobs,
        } => {
            threads::configure(jobs);
            let cfg = parse_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.directory.clone());
            let unchecked = unchecked_init.map(|rho| UncheckedInit {
                rho,
                momentum: unchecked_momentum,
            });
            commands::simulate(&cfg, &out, unchecked.as_ref())
        }
        Command::Sweep {
            config,
            param,
            ladder,
            out,
            jobs,
            richardson,
        } => {
            let jobs = threads::configure(jobs);
            let cfg = parse_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.directory.clone());
            commands::sweep(&cfg, param, &ladder, &out, jobs, richardson)
        }
        Command::Compare {
            config,
            reference,
            trajectory,
            window,
            out,
            jobs,
        } => {
            threads::configure(jobs);
            let cfg = parse_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.directory.clone());
            commands::compare(&cfg, reference, trajectory.as_deref(), window, &out)
        }
        Command::Select {
            manifest,
            functionals,
            rate,
            horizon,
            config,
            semigroup,
            out,
            jobs,
        } => {
            threads::configure(jobs);
            let sg = match (config, semigroup) {
                (Some(c), Some((t1, t2))) => Some(SemigroupSpec {
                    config: parse_config(&c)?,
                    t1,
                    t2,
                }),
                _ => None,
            };
            let out = out.unwrap_or_else(|| PathBuf::from("out"));
            commands::select_cmd(&manifest, &functionals, rate, horizon, sg.as_ref(), &out)
        }
        Command::Verify { suite, resolution, out } => {
            threads::configure(None);
            commands::verify(&suite, resolution, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(o) => {
            match &o.text {
                Some(t) => print!("{t}"),
                None => println!("{}", serde_json::to_string_pretty(&o.summary).unwrap_or_default()),
            }
            if o.code != EXIT_OK {
                eprintln!("qfluid: finished with exit code {}", o.code);
            }
            ExitCode::from(o.code as u8)
        }
        Err(e) => {
            eprintln!("qfluid: {} error: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
