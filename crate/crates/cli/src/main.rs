//! `koblab`: certified Kobayashi metric bounds from the command line.
//!
//! Exit status: 0 when every requested certificate was obtained (and sweep
//! slopes fell in their windows), 2 when only part of it was, 1 on errors.

mod commands;
mod files;
mod output;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "koblab", version, about = "Certified bounds for the Kobayashi metric near the boundary")]
struct Cli {
    /// Worker threads for query fan-out.
    #[arg(long, global = true, env = "KOBLAB_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,

    /// Directory for report files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Seed for sample scattering (probe and map-regularity).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lower and upper bound for one query `(z, X)`.
    Bound(BoundArgs),
    /// Bounds along a normal ray with power-law fits.
    Sweep(SweepArgs),
    /// Sample the Levi form and look for a non-pseudoconvexity witness.
    Probe(ProbeArgs),
    /// Normal preservation and Hölder regularity of a holomorphic map.
    MapRegularity(MapArgs),
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// Highest numerator degree of the witness discs.
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Scale evaluations allowed in the disc search.
    #[arg(long, default_value_t = 60)]
    pub effort: usize,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Domain file, or one of ball, saddle, quartic, omega-m2, omega-m3.
    #[arg(long, required_unless_present = "canonical", conflicts_with = "canonical")]
    pub domain: Option<String>,
    /// Canonical domain: disc, half-plane, ball[:R] or polydisc:R1,R2,...
    #[arg(long)]
    pub canonical: Option<String>,
    /// Base point: comma-separated complex entries, one entry to repeat, or eK.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    /// Tangent vector, same syntax as --point.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: String,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Named experiment; other flags override its settings.
    #[arg(long, required_unless_present = "domain")]
    pub preset: Option<String>,
    /// Domain file or built-in name.
    #[arg(long)]
    pub domain: Option<String>,
    /// Boundary point the ray starts from.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "seed_point")]
    pub base_point: Option<String>,
    /// Point whose boundary projection is the base point.
    #[arg(long, allow_hyphen_values = true)]
    pub seed_point: Option<String>,
    /// normal, fixed:V or scaled:EXP:V (V tangential, see --point syntax).
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    /// Depths as HI:LO:COUNT (log-spaced) or a decreasing comma list.
    #[arg(long)]
    pub deltas: Option<String>,
    /// none, c11 or pseudoconvex.
    #[arg(long)]
    pub lower: Option<String>,
    /// none, optimize or normal-family.
    #[arg(long)]
    pub upper: Option<String>,
    /// Accepted lower slope range MIN:MAX.
    #[arg(long, allow_hyphen_values = true)]
    pub lower_slope: Option<String>,
    /// Accepted upper slope range MIN:MAX.
    #[arg(long, allow_hyphen_values = true)]
    pub upper_slope: Option<String>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Named experiment (nonpsc-witness).
    #[arg(long, required_unless_present = "domain")]
    pub preset: Option<String>,
    /// Domain file or built-in name.
    #[arg(long)]
    pub domain: Option<String>,
    /// Boundary samples for the Levi form.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Accepted witness slope range MIN:MAX.
    #[arg(long, allow_hyphen_values = true)]
    pub witness_slope: Option<String>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Map file, `identity` or `automorphism:A`.
    #[arg(long)]
    pub map: String,
    /// Source domain file or built-in name.
    #[arg(long)]
    pub source: String,
    /// Target domain (defaults to the source).
    #[arg(long)]
    pub target: Option<String>,
    /// Normal rays sampled.
    #[arg(long, default_value_t = 16)]
    pub rays: usize,
    /// Depths as HI:LO:COUNT or a decreasing comma list.
    #[arg(long)]
    pub deltas: Option<String>,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Certified,
    Partial,
}

fn configure_threads(threads: Option<u32>) -> anyhow::Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    if threads.is_some_and(|n| n > 1) {
        eprintln!("note: built without the parallel feature, running on one thread");
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    configure_threads(cli.threads)?;
    let ctx = commands::Context {
        out: cli.out,
        seed: cli.seed,
    };
    match cli.command {
        Command::Bound(a) => commands::bound(&ctx, &a),
        Command::Sweep(a) => commands::sweep(&ctx, &a),
        Command::Probe(a) => commands::probe(&ctx, &a),
        Command::MapRegularity(a) => commands::map_regularity(&ctx, &a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(Status::Certified) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
