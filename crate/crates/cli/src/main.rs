//! `fsmac`: capacity bounds and coding experiments for finite-state MACs.

mod commands;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "fsmac", version, about = "Capacity bounds for finite-state multiple-access channels")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Worker threads (0 uses every core).
    #[arg(long, global = true, env = "FSMAC_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Cap on each user's Shannon-strategy count.
    #[arg(long, global = true, default_value_t = 4096)]
    pub strategy_cap: usize,
    /// Directory for report files; without it the report goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a spec file; exit 0 if it is valid.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Rate pentagon of one team policy.
    Pentagon {
        #[arg(long)]
        spec: PathBuf,
        /// Policy JSON `{"pi_a": [...], "pi_b": [...]}`; uniform if omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Maximize the sum rate over team policies.
    Sumrate(SumrateArgs),
    /// Trace the inner bound region and the sum-rate outer bound.
    Region(RegionArgs),
    /// Estimate the error rate of random strategy codes.
    Simulate(SimulateArgs),
    /// Check the converse factorization on random encoders.
    VerifyConverse(ConverseArgs),
}

#[derive(Args, Debug)]
pub struct OptimizerOpts {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::ExponentiatedGradient)]
    pub solver: SolverArg,
}

#[derive(Args, Debug)]
pub struct SumrateArgs {
    #[command(flatten)]
    pub opt: OptimizerOpts,
    /// Also run the exhaustive grid oracle at this resolution.
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    #[command(flatten)]
    pub opt: OptimizerOpts,
    #[arg(long, default_value_t = 33)]
    pub directions: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Policy JSON; uniform if omitted.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Block lengths, comma separated for a sweep.
    #[arg(long, value_delimiter = ',', default_value = "12")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub ra: f64,
    #[arg(long, default_value_t = 0.2)]
    pub rb: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DecoderArg::Typicality)]
    pub decoder: DecoderArg,
    /// Also write the per-n results as CSV.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct ConverseArgs {
    /// Spec file; the mod-2 adder with BSC(0.1) observations if omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Message counts are drawn uniformly from 1 to this value.
    #[arg(long, default_value_t = 4)]
    pub max_messages: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SolverArg {
    ExponentiatedGradient,
    ConditionalGradient,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum DecoderArg {
    Typicality,
    MaxLikelihood,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = cli.global;
    let result = fsmac::par::with_threads(g.threads, || match cli.command {
        Command::Validate { spec } => commands::validate(&g, &spec),
        Command::Pentagon { spec, policy } => commands::pentagon(&g, &spec, policy.as_deref()),
        Command::Sumrate(a) => commands::sumrate(&g, &a),
        Command::Region(a) => commands::region(&g, &a),
        Command::Simulate(a) => commands::simulate(&g, &a),
        Command::VerifyConverse(a) => commands::verify_converse(&g, &a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message());
            f.exit_code()
        }
    }
}
