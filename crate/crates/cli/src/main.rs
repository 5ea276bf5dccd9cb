use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracac_cli::drivers;
use fracac_cli::output::{write_snapshot, write_text, SnapshotHeader};
use fracac_cli::selftest;
use fracac_cli::{CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "fracac", version, about = "Fractional Allen-Cahn solver with two-level Strang splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate to t_end and dump the final state.
    Run(Common),
    /// Temporal self-convergence table over tau_list.
    ConvTime(Common),
    /// Spatial convergence table over h_list against h_ref.
    ConvSpace(Common),
    /// Max-norm after every step.
    TraceMax(Common),
    /// Discrete energy after every step.
    TraceEnergy(Common),
    /// Field dumps at snapshot_times.
    Snapshot(Common),
    /// Weight identities and oracle comparisons.
    Selftest,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory from the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        Ok(cfg)
    }
}

fn save(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    write_text(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Run(c) => {
            let cfg = c.load()?;
            let s = drivers::run(&cfg)?;
            println!(
                "{} steps to t = {}: max norm {:.6e}, energy {:.10e}",
                s.steps, s.time, s.max_norm, s.energy
            );
            let bin = write_snapshot(&cfg.output, "final", &s.field, &SnapshotHeader::new(&cfg.grid()?, s.time))?;
            println!("wrote {}", bin.display());
        }
        Command::ConvTime(c) => {
            let cfg = c.load()?;
            let table = drivers::run_temporal_convergence(&cfg)?;
            print!("{}", table.to_csv());
            save(&cfg.output, "conv_time.csv", &table.to_csv())?;
        }
        Command::ConvSpace(c) => {
            let cfg = c.load()?;
            let table = drivers::run_spatial_convergence(&cfg)?;
            print!("{}", table.to_csv());
            save(&cfg.output, "conv_space.csv", &table.to_csv())?;
        }
        Command::TraceMax(c) => {
            let cfg = c.load()?;
            save(&cfg.output, "trace_max.csv", &drivers::run_maxnorm_trace(&cfg)?.to_csv())?;
        }
        Command::TraceEnergy(c) => {
            let cfg = c.load()?;
            save(&cfg.output, "trace_energy.csv", &drivers::run_energy_trace(&cfg)?.to_csv())?;
        }
        Command::Snapshot(c) => {
            let cfg = c.load()?;
            for p in drivers::run_snapshots(&cfg, &cfg.output)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Selftest => {
            let checks = selftest::run_all()?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                let tag = if c.passed { "ok  " } else { "FAIL" };
                println!("{tag} {} ({:.3e} <= {:.1e})", c.name, c.value, c.tolerance);
            }
            if failed > 0 {
                return Err(CliError::Selftest(format!("{failed} of {} checks failed", checks.len())));
            }
            println!("all {} checks passed", checks.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
