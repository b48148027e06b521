//! Subcommands behind the `skanren` binary. Each writes to the given sinks and
//! returns the process exit code.

pub mod repl;
pub mod verify;

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use skanren::engine::{Engine, Options, TraceEvent};
use skanren::frontend::parser::{parse_program, parse_query_text};
use skanren::frontend::reader::read;
use skanren::oracle::{
    ground_program, project, GroundProgram, Interpretation, OracleError, StableModels,
};
use skanren::program::Program;
use skanren::term::Term;

pub const EXIT_OK: u8 = 0;
pub const EXIT_EMPTY: u8 = 1;
pub const EXIT_LOAD: u8 = 2;
pub const EXIT_CAP: u8 = 3;

/// Reads and compiles one program out of several files.
pub fn load_program(paths: &[PathBuf]) -> Result<Program> {
    let mut forms = Vec::new();
    for p in paths {
        let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        forms.extend(read(&text).with_context(|| format!("{}", p.display()))?);
    }
    let label = match paths {
        [one] => one.display().to_string(),
        _ => "program".to_string(),
    };
    parse_program(&forms).with_context(|| label)
}

/// `text`, or the contents of the file named after a leading `@`.
pub fn query_text(arg: &str) -> Result<String> {
    match arg.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("cannot read {path}")),
        None => Ok(arg.to_string()),
    }
}

/// Exit code for an error: 3 for an oracle cap, 2 otherwise.
pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<OracleError>() {
        Some(OracleError::AtomCap { .. }) => EXIT_CAP,
        _ => EXIT_LOAD,
    }
}

/// `(a b c)`, the shape the interactive system prints.
pub fn format_answers(answers: &[Term]) -> String {
    let mut s = String::from("(");
    for (i, a) in answers.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{a}");
    }
    s.push(')');
    s
}

pub struct RunConfig {
    pub max_answers: usize,
    pub depth_bound: u32,
    pub verbose: bool,
}

/// Logs each pruned branch's constraint and bindings to standard error.
fn trace_hook() -> skanren::engine::TraceHook {
    Arc::new(|ev: &TraceEvent<'_>| match ev {
        TraceEvent::Violation {
            spec,
            env,
            finalizing,
        } => {
            let mut binds = String::new();
            for (name, v) in spec.var_names.iter().zip(env.iter()) {
                if let Some(v) = v {
                    let _ = write!(binds, " {name}={v}");
                }
            }
            let when = if *finalizing { "completion" } else { "online" };
            eprintln!("violation ({when}) of constraint {}: {}{binds}", spec.id, spec.text);
        }
    })
}

/// Runs one query and prints its answers.
pub fn cmd_run(program: &Program, query: &str, cfg: &RunConfig, out: &mut dyn Write) -> Result<u8> {
    let mut q = parse_query_text(query, program).context("query")?;
    q.limit = Some(q.limit.map_or(cfg.max_answers, |n| n.min(cfg.max_answers)));
    let opts = Options {
        depth_bound: cfg.depth_bound,
        trace: cfg.verbose.then(|| trace_hook()),
        ..Options::default()
    };
    let engine = Engine::with_options(program, opts);
    let answers = engine.run(&q)?;
    writeln!(out, "{}", format_answers(&answers))?;
    Ok(if answers.is_empty() { EXIT_EMPTY } else { EXIT_OK })
}

/// Stable models with constraints applied, enumerated on `threads` workers.
/// The result is ascending and independent of the thread count.
pub fn enumerate_models(g: &GroundProgram, threads: usize) -> Result<Vec<Interpretation>> {
    let sm = StableModels::new(g)?;
    let space = sm.space();
    let threads = (threads.max(1) as u64).min(space);
    let chunk = space.div_ceil(threads);
    let parts = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let sm = &sm;
                s.spawn(move || sm.scan(t * chunk..((t + 1) * chunk).min(space), true))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().map_err(|_| anyhow!("enumeration worker panicked")))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(parts.into_iter().flatten().collect())
}

pub struct ModelsConfig {
    pub atom_cap: usize,
    pub project: Vec<String>,
    pub list: bool,
    pub threads: usize,
}

/// Prints the number of stable models, projected onto `project` if given.
pub fn cmd_models(program: &Program, cfg: &ModelsConfig, out: &mut dyn Write) -> Result<u8> {
    let g = ground_program(program, cfg.atom_cap)?;
    let models = enumerate_models(&g, cfg.threads)?;
    let shown = if cfg.project.is_empty() {
        models
    } else {
        for r in &cfg.project {
            if program.lookup(r).is_none() {
                return Err(anyhow!("unknown relation '{r}' in --project"));
            }
        }
        let rels: Vec<&str> = cfg.project.iter().map(String::as_str).collect();
        project(&models, g.relation_mask(&rels))
    };
    writeln!(out, "{}", shown.len())?;
    if cfg.list {
        for m in &shown {
            writeln!(out, "{}", g.display_interpretation(*m))?;
        }
    }
    Ok(EXIT_OK)
}

/// Prints the ground program.
pub fn cmd_ground(program: &Program, atom_cap: usize, out: &mut dyn Write) -> Result<u8> {
    let g = ground_program(program, atom_cap)?;
    write!(out, "{g}")?;
    Ok(EXIT_OK)
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

/// Path of a corpus file shipped with the repository.
pub fn corpus_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}
