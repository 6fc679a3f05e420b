use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use mrps::cli::config::Method;
use mrps::cli::report::read_result_files;
use mrps::cli::{report, run, RunConfig};

#[derive(Parser)]
#[command(name = "mrps", version, about = "Multireference product states for VQE")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (flat key = value)
    #[arg(long)]
    config: PathBuf,
    /// Overrides optimizer.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the embedded fragment states
    FragmentVqe(Common),
    /// Energy of the assembled product state
    Mrps(Common),
    /// ADAPT-VQE; the reference comes from `method` (mrps-adapt or hf-adapt)
    Adapt(Common),
    /// Full UCCGSD product; the reference comes from `method`
    Uccgsd(Common),
    /// Exact diagonalization
    Exact(Common),
    /// Evaluate `scan.method` over every integrals file
    Scan(Common),
    /// Compare result files
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn configure(common: &Common, method: impl Fn(Method) -> Method) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::from_file(&common.config)?;
    cfg.method = method(cfg.method);
    if let Some(seed) = common.seed {
        cfg.optimizer.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if common.jobs.is_some() {
        cfg.jobs = common.jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let cfg = match &cli.command {
        Command::Report { files } => {
            let rows = read_result_files(files)?;
            print!("{}", report(&rows));
            return Ok(true);
        }
        Command::FragmentVqe(c) => configure(c, |_| Method::FragmentVqe)?,
        Command::Mrps(c) => configure(c, |_| Method::Mrps)?,
        Command::Adapt(c) => configure(c, |m| if m == Method::HfAdapt { m } else { Method::MrpsAdapt })?,
        Command::Uccgsd(c) => configure(c, |m| if m == Method::HfUccgsd { m } else { Method::MrpsUccgsd })?,
        Command::Exact(c) => configure(c, |_| Method::Exact)?,
        Command::Scan(c) => configure(c, |_| Method::Scan)?,
    };
    let go = || run(&cfg);
    let outcome = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building the worker pool")?
            .install(go)?,
        None => go()?,
    };
    for p in &outcome.points {
        println!(
            "{:<40} {:<12} E = {:.10}  E_exact = {:.10}  error = {:.3e}  cnots = {}{}",
            p.tag,
            p.method,
            p.energy,
            p.exact.energy,
            p.error(),
            p.cnots,
            if p.converged { "" } else { "  (not converged)" }
        );
    }
    Ok(outcome.converged)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: at least one optimization did not converge; artifacts are flagged");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
