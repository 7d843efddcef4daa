//! `feedcap` command line: rate computation, parameter sweeps, Monte Carlo
//! simulation runs and verification suites.
//!
//! Exit codes: 0 success, 2 input error, 3 solver infeasibility, 4 I/O
//! error, 5 tolerance failure. `FEEDCAP_THREADS` overrides the worker
//! count; all outputs are invariant to it.

mod commands;
mod config;
mod errors;
mod output;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "feedcap", version, about = "Achievable rates and Monte Carlo validation for feedback coding over AR(p) Gaussian channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Theta grid points for the conjugate-pair search.
    #[arg(long, default_value_t = 1000)]
    grid_theta: usize,
    /// Points per axis of the real-pair coarse grid.
    #[arg(long, default_value_t = 200)]
    grid_real: usize,
    /// Bisection tolerance on root magnitudes.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Search box edge; defaults to sqrt(1 + P) + 2.
    #[arg(long)]
    gamma_max: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the achievable rate for one model and power budget.
    Rate {
        /// AR coefficients, comma separated (omit or empty for white noise).
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        beta: String,
        /// Average power budget P (> 0).
        #[arg(long)]
        power: f64,
        /// One of: sk1, sk2, ar1, combined.
        #[arg(long, default_value = "combined")]
        scheme: String,
        /// Print the bits value first.
        #[arg(long)]
        bits: bool,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also write the record to this file.
        #[arg(long)]
        out: Option<String>,
    },
    /// Sweep one AR coefficient and emit a CSV of rates.
    Sweep {
        /// AR coefficients with exactly one `x` marking the swept slot,
        /// e.g. `x` or `x,0.9`.
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        /// Swept range as lo:hi:step.
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        /// Power budgets, comma separated.
        #[arg(long, default_value = "1")]
        power: String,
        /// Schemes to compute: any of sk1,sk2,combined,ar1.
        #[arg(long, default_value = "sk1,sk2,combined,ar1")]
        schemes: String,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a Monte Carlo simulation described by a config file.
    Simulate {
        /// Flat key = value config file.
        config: String,
        /// Report path (stdout when omitted).
        #[arg(long)]
        out: Option<String>,
        /// Suppress the timestamp field so reports are byte-reproducible.
        #[arg(long)]
        no_timestamp: bool,
        /// Allow horizons past the linear-domain guard.
        #[arg(long)]
        log_domain: bool,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Override the config horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Run an oracle-equivalence battery.
    Verify {
        /// One of: lemma1, limit-identity, gram-forms, all.
        suite: String,
    },
    /// Tabulate the noise power spectral density.
    Psd {
        /// AR coefficients, comma separated (omit or empty for white noise).
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        beta: String,
        /// Number of sample points over [0, pi].
        #[arg(long, default_value_t = 512)]
        points: usize,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rate { beta, power, scheme, bits, solver, out } => {
            commands::rate(&beta, power, &scheme, bits, &solver, out.as_deref())
        }
        Command::Sweep { beta, range, power, schemes, solver, out } => {
            commands::sweep(&beta, &range, &power, &schemes, &solver, out.as_deref())
        }
        Command::Simulate { config, out, no_timestamp, log_domain, seed, trials, horizon } => {
            commands::simulate(
                &config,
                out.as_deref(),
                no_timestamp,
                log_domain,
                seed,
                trials,
                horizon,
            )
        }
        Command::Verify { suite } => commands::verify(&suite),
        Command::Psd { beta, points, out } => commands::psd(&beta, points, out.as_deref()),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("FEEDCAP_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
