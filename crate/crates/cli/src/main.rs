use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use skanren::engine::{Options, DEFAULT_DEPTH_BOUND};
use skanren::frontend::parser::parse_query_text;
use skanren::frontend::reader::read;
use skanren::oracle::{ground_program, DEFAULT_ATOM_CAP};
use skanren_cli::verify::{engine_decider, exhaustive_probes, query_probe, verify_with};
use skanren_cli::*;

#[derive(Parser)]
#[command(name = "skanren", version, about = "Relational logic programs with stable-model negation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Program files (.skl), loaded in order.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Proof depth bound.
    #[arg(long, default_value_t = DEFAULT_DEPTH_BOUND)]
    depth_bound: u32,
    /// Log pruned branches to standard error.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Largest ground program, in atoms, the oracle will enumerate.
    #[arg(long, default_value_t = DEFAULT_ATOM_CAP)]
    atom_cap: usize,
    /// Enumeration threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a query and print its answers.
    Run {
        #[command(flatten)]
        common: Common,
        /// Query text, or @file.
        #[arg(short, long)]
        query: String,
        #[arg(long, default_value_t = 10_000)]
        max_answers: usize,
    },
    /// Count stable models with the brute-force oracle.
    Models {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        oracle: OracleArgs,
        /// Count distinct restrictions to these relations.
        #[arg(long, value_delimiter = ',')]
        project: Vec<String>,
        #[arg(long)]
        list_models: bool,
    },
    /// Print the ground program.
    Ground {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Compare engine answers with oracle model membership.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        oracle: OracleArgs,
        /// Ground-literal queries to check; without any, every atom is probed.
        #[arg(short, long)]
        query: Vec<String>,
        /// Probe every pair of atoms as well as every single literal.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Load programs, then read definitions and queries from standard input.
    Repl {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        max_answers: usize,
    },
}

fn threads(o: &OracleArgs) -> usize {
    o.threads.unwrap_or_else(default_threads)
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::Run {
            common,
            query,
            max_answers,
        } => {
            let program = load_program(&common.files)?;
            let cfg = RunConfig {
                max_answers,
                depth_bound: common.depth_bound,
                verbose: common.verbose,
            };
            cmd_run(&program, &query_text(&query)?, &cfg, out)
        }
        Command::Models {
            common,
            oracle,
            project,
            list_models,
        } => {
            let program = load_program(&common.files)?;
            let cfg = ModelsConfig {
                atom_cap: oracle.atom_cap,
                project,
                list: list_models,
                threads: threads(&oracle),
            };
            cmd_models(&program, &cfg, out)
        }
        Command::Ground { common, oracle } => {
            let program = load_program(&common.files)?;
            cmd_ground(&program, oracle.atom_cap, out)
        }
        Command::Verify {
            common,
            oracle,
            query,
            exhaustive,
        } => {
            let program = load_program(&common.files)?;
            let g = ground_program(&program, oracle.atom_cap)?;
            let models = enumerate_models(&g, threads(&oracle))?;
            let probes = if query.is_empty() {
                exhaustive_probes(&program, &g, &models, exhaustive)?
            } else {
                query
                    .iter()
                    .map(|q| {
                        let text = query_text(q)?;
                        let parsed = parse_query_text(&text, &program).context("query")?;
                        query_probe(&program, &g, &models, &text, &parsed)
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            let opts = Options {
                depth_bound: common.depth_bound,
                ..Options::default()
            };
            let report = verify_with(&probes, &engine_decider(&program, opts));
            writeln!(out, "{report}")?;
            Ok(if report.is_clean() { EXIT_OK } else { EXIT_EMPTY })
        }
        Command::Repl {
            common,
            max_answers,
        } => {
            let mut forms = Vec::new();
            for f in &common.files {
                let text = std::fs::read_to_string(f)
                    .with_context(|| format!("cannot read {}", f.display()))?;
                forms.extend(read(&text).with_context(|| f.display().to_string())?);
            }
            let cfg = RunConfig {
                max_answers,
                depth_bound: common.depth_bound,
                verbose: common.verbose,
            };
            repl::repl(forms, &cfg, &mut io::stdin().lock(), out, &mut io::stderr())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
