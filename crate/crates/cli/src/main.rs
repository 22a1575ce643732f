mod commands;
mod config;
mod failure;
mod series;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Run;
use config::{load_config, Resolver};
use failure::{usage, Failure};

/// Simulation, estimation and Monte Carlo studies for long-memory LARCH processes.
#[derive(Parser)]
#[command(name = "larch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write `t,x,sigma,eps`.
    Simulate(Flags),
    /// Estimate (d, c, a) from a series in --input.
    Estimate(Flags),
    /// Replicated simulate-and-estimate study; --case 1|2 selects a preset.
    Mc(Flags),
    /// Loss as a function of d for several regularization constants.
    Landscape(Flags),
    /// Sample autocorrelations of x and x^2.
    Acf(Flags),
    /// Sandwich covariance of the estimator at the given parameter.
    Asymcov(Flags),
    /// Evaluate the moment conditions at the given parameter.
    CheckMoments(Flags),
    /// Predicted rates and the Monte Carlo score gap.
    Rates(Flags),
}

/// Settings shared by all subcommands; each uses the ones it needs.
#[derive(Args, Default)]
struct Flags {
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    a: Option<String>,
    /// Regularization constant (comma-separated list for `landscape`).
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Sample size (comma-separated list for `mc` and `rates`; path length for `asymcov`).
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "burn-in")]
    burn_in: Option<String>,
    /// Number of lags kept in the coefficient sum.
    #[arg(long)]
    trunc: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    /// Smallest d estimates dropped by the trimmed summaries.
    #[arg(long)]
    trim: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    input: Option<String>,
    /// Parameters to estimate, e.g. `d` or `d,c,a`.
    #[arg(long)]
    free: Option<String>,
    #[arg(long = "max-lag")]
    max_lag: Option<String>,
    /// Number of d grid points for `landscape`.
    #[arg(long)]
    points: Option<String>,
    /// File of `key = value` lines; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn into_parts(self) -> (BTreeMap<String, String>, Option<PathBuf>) {
        let pairs = [
            ("d", self.d),
            ("c", self.c),
            ("a", self.a),
            ("eps", self.eps),
            ("beta", self.beta),
            ("n", self.n),
            ("burn-in", self.burn_in),
            ("trunc", self.trunc),
            ("seed", self.seed),
            ("replicates", self.replicates),
            ("trim", self.trim),
            ("threads", self.threads),
            ("out", self.out),
            ("case", self.case),
            ("input", self.input),
            ("free", self.free),
            ("max-lag", self.max_lag),
            ("points", self.points),
        ];
        let map = pairs
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
        (map, self.config)
    }
}

type Body = fn(&mut Run) -> Result<(), Failure>;

fn dispatch(command: Command) -> Result<(), Failure> {
    let (name, flags, body): (&'static str, Flags, Body) = match command {
        Command::Simulate(f) => ("simulate", f, commands::simulate_cmd),
        Command::Estimate(f) => ("estimate", f, commands::estimate_cmd),
        Command::Mc(f) => ("mc", f, commands::mc_cmd),
        Command::Landscape(f) => ("landscape", f, commands::landscape_cmd),
        Command::Acf(f) => ("acf", f, commands::acf_cmd),
        Command::Asymcov(f) => ("asymcov", f, commands::asymcov_cmd),
        Command::CheckMoments(f) => ("check-moments", f, commands::check_moments_cmd),
        Command::Rates(f) => ("rates", f, commands::rates_cmd),
    };
    let (cli, config) = flags.into_parts();
    let file = match config {
        Some(path) => load_config(&path)?,
        None => BTreeMap::new(),
    };
    let mut res = Resolver::new(cli, file);
    if let Some(threads) = res.opt::<usize>("threads")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| usage(format!("--threads: {e}")))?;
    }
    let mut run = Run::new(name, res)?;
    body(&mut run)?;
    run.finish()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
