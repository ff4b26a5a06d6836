use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use etdfem_cli::run::{write_bench, write_solve};
use etdfem_cli::{run_bench, run_convergence, run_solve, run_validate, CliError, Overrides, RunConfig, Task};

#[derive(Parser)]
#[command(name = "etdfem", version, about = "Tempered fractional reaction-diffusion: ETD-RDP and Crank-Nicolson FEM")]
struct Cli {
    /// TOML file with the same keys as the flags; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write the final profile
    Solve {
        #[command(flatten)]
        flags: Overrides,
        /// Also write every k-th time level
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Error and observed order over a refinement sequence
    Converge {
        #[command(flatten)]
        flags: Overrides,
    },
    /// Wall time of both schemes on a shared assembly
    Bench {
        #[command(flatten)]
        flags: Overrides,
    },
    /// Run the built-in self-checks
    Validate {
        #[command(flatten)]
        flags: Overrides,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let file = match &cli.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    let (task, flags, snapshot_every) = match cli.command {
        Command::Solve { flags, snapshot_every } => (Task::Solve, flags, snapshot_every),
        Command::Converge { flags } => (Task::Converge, flags, None),
        Command::Bench { flags } => (Task::Bench, flags, None),
        Command::Validate { flags } => (Task::Validate, flags, None),
    };
    let ov = file.merged(flags);
    if let Some(threads) = ov.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }

    match task {
        Task::Validate => {
            let checks = run_validate();
            for c in &checks {
                println!("{}", c.line());
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            println!("{} of {} checks passed", checks.len() - failed, checks.len());
            Ok(u8::from(failed > 0))
        }
        Task::Solve => {
            let cfg = RunConfig::resolve(task, &ov)?;
            let outs = run_solve(&cfg)?;
            for path in write_solve(&cfg, &outs, snapshot_every)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Task::Converge => {
            let cfg = RunConfig::resolve(task, &ov)?;
            let report = run_convergence(&cfg)?;
            for r in &report.rows {
                println!(
                    "alpha={:<4} {:<6} h={:<10} tau={:<10} err={:<12} order={}",
                    r.alpha,
                    r.scheme.name(),
                    r.h,
                    r.tau,
                    r.rel_linf_error.map_or("-".into(), |e| format!("{e:.4e}")),
                    r.observed_order.map_or("-".into(), |p| format!("{p:.4}"))
                );
                if let Some(f) = &r.failure {
                    println!("  failed: {f}");
                }
            }
            for path in report.write(&cfg.out)? {
                println!("wrote {}", path.display());
            }
            Ok(u8::from(report.any_failed()))
        }
        Task::Bench => {
            // both benchmark problems unless one is named
            let examples = match ov.example {
                Some(e) => vec![e],
                None => vec![1, 2],
            };
            let mut rows = Vec::new();
            let mut out = None;
            for e in examples {
                let cfg = RunConfig::resolve(task, &Overrides { example: Some(e), ..ov.clone() })?;
                let part = run_bench(&cfg)?;
                for r in &part {
                    println!(
                        "example {} alpha={} etdrdp={} cn={} improvement={}",
                        e,
                        r.alpha,
                        r.etdrdp_s.map_or("-".into(), |v| format!("{v:.4}s")),
                        r.cn_s.map_or("-".into(), |v| format!("{v:.4}s")),
                        r.improvement_pct().map_or("-".into(), |v| format!("{v:.2}%"))
                    );
                }
                rows.extend(part);
                out = Some(cfg);
            }
            if let Some(cfg) = out {
                println!("wrote {}", write_bench(&cfg, &rows)?.display());
            }
            Ok(0)
        }
    }
}
