use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use discavg_cli::{run, verify, Command, RunOptions};

#[derive(Parser)]
#[command(name = "discavg", version, about = "Discrete averaging experiments for near-integrable symplectic maps")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// RNG seed; overrides the config `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Interpolating vector field X_m at given points.
    Interp(Common),
    /// Embedding error of the time-one flow across orders or eps.
    EmbedError(Common),
    /// Drift of the reconstructed Hamiltonian along orbits.
    Energy(Common),
    /// Dirichlet sites for frequencies or actions.
    Resonance(Common),
    /// Trapped orbits and Fourier modes of the resonant normal form.
    Nucleus(Common),
    /// Confinement scan over random seeds.
    Stability(Common),
    /// Generating function recovered from the map, and loop actions.
    GenRecover(Common),
    /// Run one acceptance criterion (1 to 14).
    Verify {
        #[arg(long)]
        criterion: u32,
        #[arg(long, default_value = "verify_out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn init_pool(workers: Option<usize>) -> usize {
    let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        eprintln!("discavg: cannot configure {n} workers: {e}");
    }
    n
}

fn main() {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Verify { criterion, out, workers } => {
            let n = init_pool(workers);
            std::process::exit(verify(criterion, &out, n));
        }
        Sub::Interp(c) => (Command::Interp, c),
        Sub::EmbedError(c) => (Command::EmbedError, c),
        Sub::Energy(c) => (Command::Energy, c),
        Sub::Resonance(c) => (Command::Resonance, c),
        Sub::Nucleus(c) => (Command::Nucleus, c),
        Sub::Stability(c) => (Command::Stability, c),
        Sub::GenRecover(c) => (Command::GenRecover, c),
    };
    let workers = init_pool(common.workers);
    let opts = RunOptions { config: common.config, out: common.out, seed: common.seed, workers };
    std::process::exit(run(command, &opts));
}
