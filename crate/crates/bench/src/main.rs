use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corobts::veb::Eps;
use corobts_bench::{run, verify, write_csv, BenchError, Scenario, ScenarioSpec, Suite, VerifyOptions};

/// Directory for CSV output; stdout when unset.
const OUT_DIR_ENV: &str = "COROBTS_BENCH_OUT";

#[derive(Parser)]
#[command(name = "corobts-bench", version, about = "Block-transfer experiments and invariant suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cold-cache root-to-leaf descents.
    Search(TreeArgs),
    /// Leaf inserts and removes below leaf parents.
    InsertRemove(TreeArgs),
    /// Single-element churn on a bare packed-memory array.
    PmaChurn(TreeArgs),
    /// Random writes to a persistent array; one row per epoch.
    Persist(PersistArgs),
    /// Run an invariant suite: layout-oracle, pma-density or persist-oracle.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "1/2")]
    eps: Eps,
    #[arg(long = "block", default_value_t = 64)]
    block_size: usize,
    #[arg(long = "cache", default_value_t = 256)]
    cache_blocks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long, default_value_t = 1 << 12)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    a: usize,
    #[arg(long, default_value_t = 4)]
    b: usize,
    #[arg(long = "reps", default_value_t = 100)]
    repetitions: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PersistArgs {
    #[arg(long, default_value_t = 64)]
    u: usize,
    #[arg(long, default_value_t = 1000)]
    writes: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    u: usize,
    #[arg(long, default_value_t = 2000)]
    writes: usize,
    /// Damage the structure midway to check that the suite notices.
    #[arg(long)]
    inject_corruption: bool,
}

fn tree_spec(scenario: Scenario, t: TreeArgs) -> ScenarioSpec {
    ScenarioSpec {
        a: t.a,
        b: t.b,
        repetitions: t.repetitions,
        ..with_common(ScenarioSpec::new(scenario, t.n), &t.common)
    }
}

fn with_common(spec: ScenarioSpec, c: &Common) -> ScenarioSpec {
    ScenarioSpec { eps: c.eps, block_size: c.block_size, cache_blocks: c.cache_blocks, seed: c.seed, ..spec }
}

fn emit(spec: &ScenarioSpec) -> Result<(), BenchError> {
    let rows = run(spec)?;
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => {
            let path = PathBuf::from(dir).join(format!("{}.csv", spec.scenario));
            write_csv(&rows, BufWriter::new(File::create(&path)?))?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Search(t) => emit(&tree_spec(Scenario::Search, t)),
        Command::InsertRemove(t) => emit(&tree_spec(Scenario::InsertRemove, t)),
        Command::PmaChurn(t) => emit(&tree_spec(Scenario::PmaChurn, t)),
        Command::Persist(p) => {
            let spec = ScenarioSpec { writes: p.writes, ..with_common(ScenarioSpec::new(Scenario::Persist, p.u), &p.common) };
            emit(&spec)
        }
        Command::Verify(v) => {
            let opts = VerifyOptions { seed: v.seed, u: v.u, writes: v.writes, inject_corruption: v.inject_corruption };
            match v.suite.parse::<Suite>().and_then(|s| verify(s, &opts).map(|r| (s, r))) {
                Ok((s, Ok(summary))) => {
                    println!("PASS {s}: {summary}");
                    return ExitCode::SUCCESS;
                }
                Ok((s, Err(counterexample))) => {
                    println!("FAIL {s}: {counterexample}");
                    return ExitCode::from(1);
                }
                Err(e) => Err(e),
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(BenchError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
