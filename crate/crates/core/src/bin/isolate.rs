//! `isolate`: run, replay and inspect compiler-bug isolation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use witness_core::complexity::{analyze, format_analysis};
use witness_core::orchestrator::{self, BackendKind, RunConfig, RunError};
use witness_core::program::{ast_to_json, SourceProgram};
use witness_core::prompt::{render_prompt, rule_catalog};
use witness_core::validation::{semantic_validate, validate};

#[derive(Parser)]
#[command(
    name = "isolate",
    about = "Isolate compiler bugs with generated witness programs"
)]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Cmd>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    budget: Option<f64>,
    /// Stop after this many accepted passing programs.
    #[arg(long)]
    target: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Def-use table, variable ranking and region complexity of a program.
    Analyze { file: PathBuf },
    /// Screen a program for undefined behaviour, and for oracle changes when
    /// the original failing program is given.
    Check {
        file: PathBuf,
        #[arg(long)]
        failing: Option<PathBuf>,
    },
    /// Dump the parsed AST as JSON.
    Ast { file: PathBuf },
    /// Print every mutation prompt of a configuration with its hash.
    Prompts {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute a run from its log and print the report.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_program(path: &Path) -> Result<SourceProgram, RunError> {
    let text = std::fs::read_to_string(path)?;
    SourceProgram::new(path.display().to_string(), text).map_err(|e| RunError::Setup(e.to_string()))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, RunError> {
    let mut c = RunConfig::load(path)?;
    if seed.is_some() {
        c.seed = seed;
    }
    Ok(c)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Some(Cmd::Analyze { file }) => {
            let ast = load_program(&file)?
                .parse()
                .map_err(|e| RunError::Setup(e.to_string()))?;
            let a =
                analyze(&ast, Default::default()).map_err(|e| RunError::Setup(e.to_string()))?;
            print!("{}", format_analysis(&a));
        }
        Some(Cmd::Check { file, failing }) => {
            let candidate = load_program(&file)?;
            let report = match failing {
                Some(f) => validate(&candidate, &load_program(&f)?, None)?,
                None => semantic_validate(&candidate, None)?,
            };
            println!("{}", serde_json::to_string(&report).expect("json"));
        }
        Some(Cmd::Ast { file }) => {
            let ast = load_program(&file)?
                .parse()
                .map_err(|e| RunError::Setup(e.to_string()))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&ast_to_json(&ast)).expect("json")
            );
        }
        Some(Cmd::Prompts { config }) => {
            let c = load_config(&config, None)?;
            let program = load_program(&c.resolve(&c.failing_program))?;
            let ast = program
                .parse()
                .map_err(|e| RunError::Setup(e.to_string()))?;
            let a = analyze(&ast, c.variables).map_err(|e| RunError::Setup(e.to_string()))?;
            for r in rule_catalog() {
                let p = render_prompt(&r, &a.target, &program);
                println!(
                    "{:>2} {} {}",
                    r.id,
                    witness_core::llm::sha256_hex(&p.rendered),
                    r.description
                );
            }
        }
        Some(Cmd::Replay { config, log, seed }) => {
            let c = load_config(&config, seed)?;
            print!("{}", orchestrator::replay(&c, &log)?.to_text());
        }
        None => {
            let args = cli.run;
            let path = args
                .config
                .ok_or_else(|| RunError::Config("--config is required".into()))?;
            let mut c = load_config(&path, args.seed)?;
            if let Some(b) = args.backend {
                c.backend = b;
            }
            if args.budget.is_some() {
                c.termination.budget_secs = args.budget;
            }
            if args.target.is_some() {
                c.termination.target = args.target;
            }
            if let Some(o) = args.out {
                c.out_dir = std::env::current_dir()?.join(o);
            }
            print!("{}", orchestrator::run(&c)?.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isolate: {e}");
            ExitCode::from(if e.is_setup() { 2 } else { 1 })
        }
    }
}
