//! `eclair`: simulate ε-clairvoyant schedules, compare them with SRPT, build
//! and verify competitiveness certificates, run the lower-bound
//! constructions and check the speed reduction.
//!
//! Exit codes: 0 on success, 1 when a verification or property check fails,
//! 2 on input errors (unreadable files, malformed documents, bad flags).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eclair_adversary::SamplerKind;
use eclair_core::Rat;
use eclair_sim::Policy;

#[derive(Debug, Parser)]
#[command(
    name = "eclair",
    version,
    about = "Exact experiments on ε-clairvoyant flow time scheduling"
)]
struct Cli {
    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = "eclair-out")]
    out: PathBuf,
    /// Seed of the random stream (required by sampling commands).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batch commands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one policy on an instance; writes the schedule, the event log
    /// and flow metrics against SRPT.
    Simulate(SimulateArgs),
    /// Compare a policy with SRPT and check local competitiveness at ⌈1/ε⌉.
    Compare(CompareArgs),
    /// Build and verify a valid-assignment certificate for SLF.
    Certify(CertifyArgs),
    /// Run a lower-bound construction.
    #[command(subcommand)]
    Adversary(AdversaryCommand),
    /// Draw instances from a randomized family.
    Sample(SampleArgs),
    /// Monte-Carlo campaign over family sizes and ε values (CSV for plots).
    Sweep(SweepArgs),
    /// Check the SLF / speed-augmented SETF chain or a water-filling system.
    Reduce(ReduceArgs),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Instance JSON document.
    instance: PathBuf,
    /// Override the instance's ε.
    #[arg(long, value_parser = parse_rat)]
    epsilon: Option<Rat>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: InstanceArgs,
    /// Policy: slf, srpt, setf or rr.
    #[arg(long, default_value = "slf", value_parser = parse_policy)]
    policy: Policy,
    /// Machine speed.
    #[arg(long, default_value = "1", value_parser = parse_rat)]
    speed: Rat,
    /// JSON list of `[start, end]` pairs during which the machine idles.
    #[arg(long)]
    forbidden: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InstanceArgs,
    /// Policy compared with SRPT.
    #[arg(long, default_value = "slf", value_parser = parse_policy)]
    policy: Policy,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[command(flatten)]
    input: InstanceArgs,
    /// Target time.
    #[arg(long, value_parser = parse_rat, required_unless_present = "all", conflicts_with = "all")]
    time: Option<Rat>,
    /// Certify every event time of SLF and SRPT instead of one time.
    #[arg(long)]
    all: bool,
}

#[derive(Debug, Subcommand)]
enum AdversaryCommand {
    /// The adaptive round adversary against a deterministic policy.
    Det(DetArgs),
    /// Statistics of a policy on a randomized family.
    Sample(FamilyStatsArgs),
}

#[derive(Debug, Args)]
struct DetArgs {
    /// Policy to play against (slf, setf or rr).
    #[arg(long, default_value = "slf", value_parser = parse_policy)]
    policy: Policy,
    /// Clairvoyance parameter in (0, 1).
    #[arg(long, value_parser = parse_rat)]
    epsilon: Rat,
    /// Number of rounds.
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    /// Number of unit jobs appended after the last round.
    #[arg(long, default_value_t = 0)]
    tail: u64,
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// Family: geometric, phase or exp.
    #[arg(long, value_parser = parse_family)]
    family: SamplerKind,
    /// `k` for geometric and phase, `n` for exp.
    #[arg(long)]
    size: u32,
    /// ε (phase and exp; geometric uses 1/(2k)).
    #[arg(long, value_parser = parse_rat)]
    epsilon: Option<Rat>,
}

#[derive(Debug, Args)]
struct FamilyStatsArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Number of draws.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Policy measured against SRPT.
    #[arg(long, default_value = "slf", value_parser = parse_policy)]
    policy: Policy,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Number of instances; draw `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 1)]
    count: usize,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Family: geometric, phase or exp.
    #[arg(long, value_parser = parse_family)]
    family: SamplerKind,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<u32>,
    /// Comma-separated ε values (ignored by the geometric family).
    #[arg(long, value_delimiter = ',', value_parser = parse_rat)]
    epsilons: Vec<Rat>,
    /// Draws per configuration.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Policy measured against SRPT.
    #[arg(long, default_value = "slf", value_parser = parse_policy)]
    policy: Policy,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    /// Instance JSON document.
    #[arg(required_unless_present = "jars", conflicts_with = "jars")]
    instance: Option<PathBuf>,
    /// ε in (0, 1) (defaults to the instance's).
    #[arg(long, value_parser = parse_rat)]
    epsilon: Option<Rat>,
    /// Water-filling configuration `{"x": [...], "x_prime": [...], "p": [...]}`.
    #[arg(long)]
    jars: Option<PathBuf>,
}

fn parse_rat(s: &str) -> Result<Rat, String> {
    s.parse().map_err(|e: eclair_core::Error| e.to_string())
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse()
        .map_err(|e: eclair_sim::PolicyError| e.to_string())
}

fn parse_family(s: &str) -> Result<SamplerKind, String> {
    s.parse()
        .map_err(|e: eclair_adversary::AdversaryError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
