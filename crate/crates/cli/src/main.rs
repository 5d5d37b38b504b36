//! `subwalk`: subordinated random walks from the command line.
//!
//! Flags override the JSON config. A one-line JSON summary goes to stdout and
//! CSV artifacts to the output directory. Exit codes: 0 success, 1 failed
//! verification, 2 usage, 3 numeric or i/o failure.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Outcome, Theorem};
use crate::config::{parse_config, KernelRoute, RunConfig, WalkConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "subwalk",
    version,
    about = "Subordinated random walks on the integer lattice"
)]
struct Cli {
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Named walk such as `simple-1d`, `simple-2d` or `lazy-1d`.
    #[arg(long, global = true)]
    walk: Option<String>,
    /// Index of the Bernstein function, applied to the configured family.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Step-length law `c_k = P(R = k)`.
    Coeffs {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Law of `τ_n` and its tail against the regular-variation predictor.
    Tau {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
    },
    /// Transition kernel `P(S_{τ_n} = x)`.
    Kernel {
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Point as `1;2` or `1,2`; repeat for several points.
        #[arg(long, value_parser = parse_point)]
        x: Vec<Vec<i64>>,
        #[arg(long)]
        route: Option<KernelRoute>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Monte Carlo positions `S_{τ_{⌊nt⌋}}`.
    Simulate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        t_grid: Vec<f64>,
        #[arg(long)]
        replicas: Option<u64>,
    },
    /// Limit constants of the configured walk and Bernstein function.
    Constants,
    /// Numerical check of an asymptotic statement.
    Verify {
        #[command(subcommand)]
        theorem: VerifyCommand,
    },
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// Tail of `τ_n` against `n ψ(1/t) / Γ(1 − α/2)`.
    Tail(VerifyArgs),
    /// On-site decay `p_ψ(0, n)` against `D ψ^{-1}(1/n)^{d/2}`.
    Onsite(VerifyArgs),
    /// Smoothed far-field kernel against its stable asymptotic.
    Ratio(VerifyArgs),
    /// Pólya-type far field of the unsmoothed kernel.
    Polya(VerifyArgs),
    /// Characteristic function of the rescaled endpoint.
    Doa(VerifyArgs),
    /// Marginal of the rescaled endpoint against the stable law, by KS distance.
    Flt(VerifyArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long, value_parser = parse_point)]
    x: Vec<Vec<i64>>,
    /// Frequency as `1;0` or `1,0`.
    #[arg(long, value_parser = parse_float_point)]
    xi: Option<Vec<f64>>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    axis: Option<usize>,
    /// Overrides the tolerance of the chosen check.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn split_coords(text: &str) -> impl Iterator<Item = &str> {
    text.split([';', ',']).map(str::trim)
}

fn parse_point(text: &str) -> Result<Vec<i64>, String> {
    split_coords(text)
        .map(|c| {
            c.parse::<i64>()
                .map_err(|e| format!("bad coordinate `{c}`: {e}"))
        })
        .collect()
}

fn parse_float_point(text: &str) -> Result<Vec<f64>, String> {
    split_coords(text)
        .map(|c| {
            c.parse::<f64>()
                .map_err(|e| format!("bad coordinate `{c}`: {e}"))
        })
        .collect()
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_list<T>(slot: &mut Vec<T>, value: Vec<T>) {
    if !value.is_empty() {
        *slot = value;
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    set(&mut config.out, cli.out.clone());
    set(&mut config.seed, cli.seed);
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    if let Some(name) = &cli.walk {
        config.walk = WalkConfig::Named(name.clone());
    }
    if let Some(alpha) = cli.alpha {
        config.psi = config.psi.with_alpha(alpha);
    }
    Ok(config)
}

fn apply_verify(config: &mut RunConfig, args: VerifyArgs, theorem: Theorem) {
    let v = &mut config.verify;
    set_list(&mut v.n, args.n);
    set_list(&mut v.t, args.t);
    set_list(&mut v.x, args.x);
    set(&mut v.xi, args.xi);
    if args.grid.is_some() {
        v.grid = args.grid;
    }
    if args.replicas.is_some() {
        v.replicas = args.replicas;
    }
    set(&mut v.axis, args.axis);
    if let Some(tol) = args.tolerance {
        let t = &mut config.tolerances;
        let slot = match theorem {
            Theorem::Tail => &mut t.tail,
            Theorem::Onsite => &mut t.onsite,
            Theorem::Ratio => &mut t.ratio,
            Theorem::Polya => &mut t.polya,
            Theorem::Doa => &mut t.doa,
            Theorem::Flt => &mut t.flt,
        };
        *slot = Some(tol);
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let mut config = load_config(&cli)?;
    let dispatch = match cli.command {
        Command::Coeffs { k } => {
            if k.is_some() {
                config.coeffs.k = k;
            }
            commands::coeffs
        }
        Command::Tau { n, k, t } => {
            set(&mut config.tau.n, n);
            if k.is_some() {
                config.tau.k = k;
            }
            set_list(&mut config.tau.t, t);
            commands::tau
        }
        Command::Kernel {
            n,
            x,
            route,
            grid,
            k,
        } => {
            let p = &mut config.kernel;
            set_list(&mut p.n, n);
            set_list(&mut p.x, x);
            set(&mut p.route, route);
            if grid.is_some() {
                p.grid = grid;
            }
            set(&mut p.k, k);
            commands::kernel
        }
        Command::Simulate {
            n,
            t_grid,
            replicas,
        } => {
            let p = &mut config.simulate;
            set(&mut p.n, n);
            set_list(&mut p.t_grid, t_grid);
            set(&mut p.replicas, replicas);
            commands::simulate
        }
        Command::Constants => commands::constants,
        Command::Verify { theorem } => {
            let (theorem, args) = match theorem {
                VerifyCommand::Tail(a) => (Theorem::Tail, a),
                VerifyCommand::Onsite(a) => (Theorem::Onsite, a),
                VerifyCommand::Ratio(a) => (Theorem::Ratio, a),
                VerifyCommand::Polya(a) => (Theorem::Polya, a),
                VerifyCommand::Doa(a) => (Theorem::Doa, a),
                VerifyCommand::Flt(a) => (Theorem::Flt, a),
            };
            apply_verify(&mut config, args, theorem);
            config.validate()?;
            configure_threads(config.threads)?;
            return commands::verify(&config, theorem);
        }
    };
    config.validate()?;
    configure_threads(config.threads)?;
    dispatch(&config)
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numeric(format!("cannot start {n} worker threads: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("subwalk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
