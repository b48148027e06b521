//! Engine-versus-oracle cross-checking.
//!
//! Each probe is a conjunction of ground literals. The oracle says it is
//! satisfiable iff some stable model (constraints applied) agrees with every
//! literal; the engine says so iff `run 1` finds an answer.

use std::fmt;

use anyhow::{anyhow, Result};
use skanren::engine::{Engine, EngineError, Options};
use skanren::oracle::{GroundAtom, GroundProgram, Interpretation};
use skanren::program::{Goal, Program, Query};

/// One ground literal: atom index and sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Literal {
    pub atom: usize,
    pub negative: bool,
}

#[derive(Clone, Debug)]
pub struct Probe {
    pub text: String,
    pub goal: Goal,
    pub expected: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checked: usize,
    pub mismatches: Vec<String>,
    /// Probes the engine could not settle within its depth bound.
    pub nonterminating: Vec<String>,
    pub errors: Vec<String>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.nonterminating.is_empty() && self.errors.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.mismatches {
            writeln!(f, "mismatch: {m}")?;
        }
        for m in &self.nonterminating {
            writeln!(f, "nonterminating: {m}")?;
        }
        for m in &self.errors {
            writeln!(f, "error: {m}")?;
        }
        write!(
            f,
            "{} probes, {} mismatches, {} nonterminating, {} errors",
            self.checked,
            self.mismatches.len(),
            self.nonterminating.len(),
            self.errors.len()
        )
    }
}

fn agrees(m: Interpretation, lits: &[Literal]) -> bool {
    lits.iter().all(|l| m.contains(l.atom) != l.negative)
}

fn literal_probe(
    program: &Program,
    g: &GroundProgram,
    models: &[Interpretation],
    lits: &[Literal],
) -> Result<Probe> {
    let mut goals = Vec::new();
    let mut text = Vec::new();
    for l in lits {
        let a = &g.atoms[l.atom];
        let rel = program
            .lookup(&a.relation)
            .ok_or_else(|| anyhow!("ground atom {a} has no relation"))?;
        if l.negative {
            goals.push(Goal::noto(rel, a.args.clone()));
            text.push(format!("(noto {a})"));
        } else {
            goals.push(Goal::call(rel, a.args.clone()));
            text.push(a.to_string());
        }
    }
    Ok(Probe {
        text: if text.is_empty() {
            "(consistency)".to_string()
        } else {
            text.join(" ")
        },
        goal: Goal::conj(goals),
        expected: models.iter().any(|&m| agrees(m, lits)),
    })
}

/// Consistency, every atom in both signs, and, with `pairs`, every pair of
/// distinct atoms taken positively.
pub fn exhaustive_probes(
    program: &Program,
    g: &GroundProgram,
    models: &[Interpretation],
    pairs: bool,
) -> Result<Vec<Probe>> {
    let n = g.atoms.len();
    let mut out = vec![literal_probe(program, g, models, &[])?];
    for atom in 0..n {
        for negative in [false, true] {
            out.push(literal_probe(program, g, models, &[Literal { atom, negative }])?);
        }
    }
    if pairs {
        for a in 0..n {
            for b in a + 1..n {
                let lits = [
                    Literal { atom: a, negative: false },
                    Literal { atom: b, negative: false },
                ];
                out.push(literal_probe(program, g, models, &lits)?);
            }
        }
    }
    Ok(out)
}

/// Probe for a query whose goals are all ground calls, e.g.
/// `(run 1 (q) (pick 1 1) (noto (free 1 1)))`.
pub fn query_probe(
    program: &Program,
    g: &GroundProgram,
    models: &[Interpretation],
    text: &str,
    query: &Query,
) -> Result<Probe> {
    // `None` marks a positive call to an underivable atom.
    fn collect(goal: &Goal, p: &Program, g: &GroundProgram, out: &mut Vec<Option<Literal>>) -> Result<()> {
        match goal {
            Goal::Succeed => Ok(()),
            Goal::Conj(gs) => gs.iter().try_for_each(|x| collect(x, p, g, out)),
            Goal::Call {
                rel,
                args,
                negative,
            } if args.iter().all(|a| a.is_ground()) => {
                let atom = GroundAtom {
                    relation: p.relation(*rel).name.as_str().into(),
                    args: args.clone(),
                };
                match (g.atom_index(&atom), negative) {
                    (Some(i), _) => out.push(Some(Literal {
                        atom: i,
                        negative: *negative,
                    })),
                    // Underivable atoms are false in every model.
                    (None, true) => {}
                    (None, false) => out.push(None),
                }
                Ok(())
            }
            _ => Err(anyhow!("verify queries must be conjunctions of ground calls")),
        }
    }
    let mut lits = Vec::new();
    collect(&query.goal, program, g, &mut lits)?;
    let expected = match lits.into_iter().collect::<Option<Vec<_>>>() {
        Some(lits) => models.iter().any(|&m| agrees(m, &lits)),
        None => false,
    };
    Ok(Probe {
        text: text.trim().to_string(),
        goal: query.goal.clone(),
        expected,
    })
}

/// Satisfiability as decided by some engine build.
pub type Decide<'a> = dyn Fn(&Query) -> Result<bool, EngineError> + 'a;

/// The real engine: `run 1` over the goal.
pub fn engine_decider(program: &Program, options: Options) -> impl Fn(&Query) -> Result<bool, EngineError> + '_ {
    move |q: &Query| {
        let engine = Engine::with_options(program, options.clone());
        let mut answers = engine.answers(q);
        answers.next().transpose().map(|a| a.is_some())
    }
}

pub fn verify_with(probes: &[Probe], decide: &Decide<'_>) -> Report {
    let mut report = Report::default();
    for p in probes {
        report.checked += 1;
        let what = &p.text;
        match decide(&Query::closed(Some(1), p.goal.clone())) {
            Ok(got) if got == p.expected => {}
            Ok(got) => report.mismatches.push(format!(
                "{what}: engine {}, oracle {}",
                if got { "satisfiable" } else { "unsatisfiable" },
                if p.expected { "satisfiable" } else { "unsatisfiable" },
            )),
            Err(e @ EngineError::DepthExceeded { .. }) => {
                report.nonterminating.push(format!("{what}: {e}"))
            }
            Err(e) => report.errors.push(format!("{what}: {e}")),
        }
    }
    report
}
