use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mendkit::par::Execution;
use mendkit::pipeline::{
    mine_dir, repair_all, retrieval_dump, sandbox_dir_from_env, stats_dir, summarize, Manifest, Overrides,
    RepairOptions,
};
use mendkit::tokenize::TokenBudget;

#[derive(Parser)]
#[command(name = "mendkit", version, about = "Hunk-level program repair pipeline")]
struct Cli {
    /// Run batch work on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract and filter training instances from buggy/fixed pairs and diffs.
    Mine {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = TokenBudget::default().input_limit)]
        input_budget: usize,
        #[arg(long, default_value_t = TokenBudget::default().output_limit)]
        output_budget: usize,
    },
    /// Generate and validate patches for every bug in a manifest.
    Repair {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Bugs repaired concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Retrieved lines per hunk.
        #[arg(long)]
        r: Option<usize>,
        /// Minimum cosine similarity for retrieved lines.
        #[arg(long)]
        threshold: Option<f64>,
        /// Beam size per checkpoint.
        #[arg(long)]
        beam: Option<usize>,
        /// Number of checkpoints in the ensemble.
        #[arg(long)]
        checkpoints: Option<usize>,
        /// Per-run test timeout in seconds.
        #[arg(long)]
        timeout: Option<f64>,
    },
    /// Show the lines retrieval adds to each hunk's prompt.
    Retrieve {
        manifest: PathBuf,
        bug_id: String,
        #[arg(long)]
        json: bool,
    },
    /// Summarize a directory of repair reports.
    Stats { dir: PathBuf },
}

fn run(cli: Cli) -> Result<ExitCode> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Mine { input, output, input_budget, output_budget } => {
            let budget = TokenBudget { input_limit: input_budget, output_limit: output_budget };
            let s = mine_dir(&input, &output, budget, exec)?;
            let r = s.rules;
            println!("inputs: {} file pairs, {} diffs ({} not bug fixes, {} unpaired)", s.pairs, s.diffs, s.not_bugfix, s.unpaired);
            println!("extracted:            {}", r.input);
            println!("removed duplicate:    {}", r.duplicates);
            println!("removed unchanged:    {}", r.unchanged);
            println!("removed empty fix:    {}", r.empty_fix);
            println!("removed over budget:  {}", r.over_budget);
            println!("written:              {}", r.output);
        }
        Command::Repair { manifest, out, jobs, r, threshold, beam, checkpoints, timeout } => {
            let mut m = Manifest::load(&manifest)?;
            let overrides = Overrides { r, threshold, t: beam, k: checkpoints, timeout_secs: timeout };
            for bug in &mut m.bugs {
                bug.apply(&overrides);
            }
            let opts = RepairOptions { jobs, sandbox_dir: sandbox_dir_from_env(), exec };
            let reports = repair_all(&m, &out, &opts)?;
            for r in &reports {
                let rank = r.first_plausible_rank.map_or("-".to_string(), |k| k.to_string());
                println!("{:<24} {:<10} npc {:<5} rank {rank}", r.bug, format!("{:?}", r.status).to_lowercase(), r.npc);
                if let Some(err) = &r.error {
                    eprintln!("{}: {err}", r.bug);
                }
            }
            let s = summarize(&reports);
            println!("{} bugs: {} plausible, {} exhausted, {} error", s.bugs, s.plausible, s.exhausted, s.errors);
            if s.errors > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Retrieve { manifest, bug_id, json } => {
            let m = Manifest::load(&manifest)?;
            let dump = retrieval_dump(&m, &bug_id)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&dump)?);
            } else {
                print!("{dump}");
            }
        }
        Command::Stats { dir } => {
            let stats = stats_dir(&dir).with_context(|| format!("cannot summarize {}", dir.display()))?;
            print!("{stats}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("MENDKIT_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
