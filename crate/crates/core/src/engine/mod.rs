//! Resolution under stable-model semantics.
//!
//! Calls consult a branch-local assumption table. A ground call is marked in
//! progress, its body (or, for `noto`, the complement of its body) runs, and on
//! success the atom is recorded and emitted to the constraint handlers.
//! Re-entering an in-progress atom with the same polarity succeeds for
//! negative calls and, for positive calls, only if a negative call lies between
//! the two; opposite polarity fails. Candidate answers are then completed over
//! the program's ground atoms before being accepted.

mod finalize;
mod solve;
pub mod state;
mod stream;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::constraints::{ConstraintError, ConstraintSpec};
use crate::program::{Goal, Program, Query};
use crate::term::{Term, VarId};
use finalize::AtomSpace;
use solve::Solver;
pub use state::{AssumptionTable, AtomKey, Entry, State, Status};
use stream::Stream;

pub const DEFAULT_DEPTH_BOUND: u32 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("proof depth bound {bound} exceeded while calling '{relation}'")]
    DepthExceeded { relation: String, bound: u32 },
    #[error("'{relation}' succeeded with unbound arguments; make its parameters safe")]
    NonGroundSuccess { relation: String },
    #[error("negative call to '{relation}' with unbound arguments")]
    NonGroundNegation { relation: String },
    #[error("ground atom space over the program universe is too large")]
    UniverseTooLarge,
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// Events reported to an optional trace hook.
#[derive(Debug)]
pub enum TraceEvent<'e> {
    Violation {
        spec: &'e ConstraintSpec,
        env: &'e [Option<Term>],
        /// Found while completing a candidate rather than online.
        finalizing: bool,
    },
}

pub type TraceHook = Arc<dyn Fn(&TraceEvent<'_>) + Send + Sync>;

#[derive(Clone)]
pub struct Options {
    pub depth_bound: u32,
    /// Complete candidates before accepting them. Turning this off exposes the
    /// raw online behavior.
    pub finalize: bool,
    pub trace: Option<TraceHook>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            depth_bound: DEFAULT_DEPTH_BOUND,
            finalize: true,
            trace: None,
        }
    }
}

impl fmt::Debug for Options {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Options")
            .field("depth_bound", &self.depth_bound)
            .field("finalize", &self.finalize)
            .field("trace", &self.trace.is_some())
            .finish()
    }
}

pub struct Engine<'p> {
    program: &'p Program,
    options: Options,
    space: Result<AtomSpace, EngineError>,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program) -> Self {
        Self::with_options(program, Options::default())
    }

    pub fn with_options(program: &'p Program, options: Options) -> Self {
        Engine {
            program,
            options,
            space: AtomSpace::new(program),
        }
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn options(&self) -> &Options {
        &self.options
    }

    fn solver(&self) -> Solver<'_> {
        Solver {
            program: self.program,
            opts: &self.options,
        }
    }

    /// Lazily yields reified answers for slot 0 of the query.
    pub fn answers<'a>(&'a self, query: &'a Query) -> Answers<'a> {
        let mut answers = Answers {
            engine: self,
            stream: None,
            remaining: query.limit,
            failed: false,
            verdicts: BTreeMap::new(),
        };
        for spec in self.program.constraints() {
            match spec.violated_unconditionally(self.program.symbol_order()) {
                Ok(false) => {}
                Ok(true) => return answers,
                Err(e) => {
                    answers.stream = Some(Stream::Error(e.into()));
                    return answers;
                }
            }
        }
        let mut env = vec![Term::Nil; query.locals.max(1) as usize];
        env[0] = Term::Var(VarId(0));
        let st = State {
            next_var: 1,
            ..State::default()
        };
        answers.stream = Some(self.solver().solve(&query.goal, env.into(), st));
        answers
    }

    /// Runs the query to completion (or its answer limit).
    pub fn run(&self, query: &Query) -> Result<Vec<Term>, EngineError> {
        self.answers(query).collect()
    }

    /// Runs `goal` with at most `limit` answers; the query variable is unused.
    pub fn run_goal(&self, limit: Option<usize>, goal: Goal) -> Result<Vec<Term>, EngineError> {
        self.run(&Query::closed(limit, goal))
    }

    /// Decides whether a candidate state can be completed without violating
    /// any constraint.
    pub fn finalize_answer(&self, st: &State) -> Result<bool, EngineError> {
        let space = self.space.as_ref().map_err(Clone::clone)?;
        self.solver().finalize(space, st.clone())
    }
}

/// Iterator over reified answers. Stops after the first error.
pub struct Answers<'a> {
    engine: &'a Engine<'a>,
    stream: Option<Stream<'a>>,
    remaining: Option<usize>,
    failed: bool,
    /// Completion depends only on the table, and many candidates share one
    /// (repeated calls are table hits), so verdicts are cached.
    verdicts: BTreeMap<Vec<(AtomKey, Status)>, bool>,
}

impl<'a> Answers<'a> {
    /// Next accepted state, before reification.
    pub fn next_state(&mut self) -> Option<Result<State, EngineError>> {
        if self.failed || self.remaining == Some(0) {
            return None;
        }
        loop {
            let stream = self.stream.take()?;
            match stream.next() {
                None => return None,
                Some(Err(e)) => {
                    self.failed = true;
                    return Some(Err(e));
                }
                Some(Ok((st, rest))) => {
                    self.stream = Some(rest);
                    if self.engine.options.finalize {
                        let key: Vec<(AtomKey, Status)> =
                            st.table.iter().map(|(k, e)| (k.clone(), e.status)).collect();
                        let verdict = match self.verdicts.get(&key) {
                            Some(&v) => v,
                            None => match self.engine.finalize_answer(&st) {
                                Ok(v) => {
                                    self.verdicts.insert(key, v);
                                    v
                                }
                                Err(e) => {
                                    self.failed = true;
                                    return Some(Err(e));
                                }
                            },
                        };
                        if !verdict {
                            continue;
                        }
                    }
                    if let Some(n) = self.remaining.as_mut() {
                        *n -= 1;
                    }
                    return Some(Ok(st));
                }
            }
        }
    }
}

impl Iterator for Answers<'_> {
    type Item = Result<Term, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_state()
            .map(|r| r.map(|st| st.subst.reify(&Term::Var(VarId(0)))))
    }
}
