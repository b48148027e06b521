//! Load-time variable safety.
//!
//! Every head parameter must be bound by the clause body, and every variable
//! passed to a negative call must already be bound by an earlier positive call
//! or by unification with a ground term.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::program::{Goal, RelationDef};
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    UnboundAtNegation,
    HeadNeverBound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub relation: String,
    /// Zero-based clause index within the relation.
    pub clause: usize,
    pub variable: String,
    pub problem: Problem,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.problem {
            Problem::UnboundAtNegation => write!(
                f,
                "unsafe clause {} of '{}': variable '{}' is unbound at a negative call",
                self.clause + 1,
                self.relation,
                self.variable
            ),
            Problem::HeadNeverBound => write!(
                f,
                "unsafe clause {} of '{}': head variable '{}' is never bound by the body",
                self.clause + 1,
                self.relation,
                self.variable
            ),
        }
    }
}

fn vars_of(t: &Term, out: &mut Vec<u32>) {
    match t {
        Term::Var(v) => out.push(v.0),
        Term::Pair(p) => {
            vars_of(&p.0, out);
            vars_of(&p.1, out);
        }
        _ => {}
    }
}

struct Checker<'a> {
    names: &'a [String],
    unsafe_vars: Vec<u32>,
}

impl Checker<'_> {
    /// Returns the bound set after `g`, given the bound set before it.
    fn walk(&mut self, g: &Goal, bound: Vec<bool>) -> Vec<bool> {
        let mut bound = bound;
        match g {
            Goal::Succeed | Goal::Fail | Goal::Disunify(..) => {}
            Goal::Unify(a, b) => {
                let (mut va, mut vb) = (Vec::new(), Vec::new());
                vars_of(a, &mut va);
                vars_of(b, &mut vb);
                let a_ground = va.iter().all(|&v| bound[v as usize]);
                let b_ground = vb.iter().all(|&v| bound[v as usize]);
                if a_ground {
                    vb.iter().for_each(|&v| bound[v as usize] = true);
                }
                if b_ground {
                    va.iter().for_each(|&v| bound[v as usize] = true);
                }
            }
            Goal::Call { args, negative, .. } => {
                let mut vs = Vec::new();
                args.iter().for_each(|a| vars_of(a, &mut vs));
                if *negative {
                    for v in vs {
                        if !bound[v as usize] && !self.unsafe_vars.contains(&v) {
                            self.unsafe_vars.push(v);
                        }
                    }
                } else {
                    vs.iter().for_each(|&v| bound[v as usize] = true);
                }
            }
            Goal::Conj(gs) => {
                for g in gs {
                    bound = self.walk(g, bound);
                }
            }
            Goal::Disj(gs) => {
                let mut acc: Option<Vec<bool>> = None;
                for g in gs {
                    let after = self.walk(g, bound.clone());
                    acc = Some(match acc {
                        None => after,
                        Some(prev) => prev.iter().zip(&after).map(|(a, b)| *a && *b).collect(),
                    });
                }
                if let Some(a) = acc {
                    bound = a;
                }
            }
            Goal::Fresh(_, body) | Goal::Forall(_, body) => bound = self.walk(body, bound),
        }
        bound
    }
}

fn name(names: &[String], v: u32) -> String {
    names
        .get(v as usize)
        .cloned()
        .unwrap_or_else(|| alloc::format!("#{v}"))
}

/// Reports every unsafe variable, clause by clause.
pub fn check_safety(relations: &[RelationDef]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for r in relations {
        for (ci, c) in r.clauses.iter().enumerate() {
            let mut checker = Checker {
                names: &c.local_names,
                unsafe_vars: Vec::new(),
            };
            let bound = checker.walk(&c.body, alloc::vec![false; c.locals as usize]);
            for v in checker.unsafe_vars {
                out.push(Diagnostic {
                    relation: r.name.clone(),
                    clause: ci,
                    variable: name(checker.names, v),
                    problem: Problem::UnboundAtNegation,
                });
            }
            for (p, &b) in bound.iter().enumerate().take(r.arity) {
                if !b {
                    out.push(Diagnostic {
                        relation: r.name.clone(),
                        clause: ci,
                        variable: name(&c.local_names, p as u32),
                        problem: Problem::HeadNeverBound,
                    });
                }
            }
        }
    }
    out
}
