//! Brute-force stable-model semantics, used to cross-check the engine.
//!
//! A program is grounded over its constant universe, then every interpretation
//! is tested: `M` is stable iff the least model of the reduct `Π_M` equals `M`.

mod ground;
mod models;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::constraints::ConstraintError;
use crate::term::Term;

pub use ground::{ground_program, DEFAULT_ATOM_CAP};
pub use models::{
    encode_constraints, filter_by_constraints, is_stable, minimal_model, project, reduct,
    stable_models, stable_models_in, stable_models_unfiltered, StableModels,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("ground program has {count} atoms, above the cap of {cap}")]
    AtomCap { count: usize, cap: usize },
    #[error("goal form not supported by the grounder: {0}")]
    Unsupported(String),
    #[error("program is not negation-free")]
    NotNegationFree,
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub relation: Arc<str>,
    pub args: Vec<Term>,
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.relation)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// `head :- pos..., not neg...`; indices point into [`GroundProgram::atoms`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundRule {
    pub head: usize,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

/// `:- pos..., not neg...`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundConstraint {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundProgram {
    pub atoms: Vec<GroundAtom>,
    pub rules: Vec<GroundRule>,
    pub constraints: Vec<GroundConstraint>,
}

/// A set of atoms, bit `i` standing for `atoms[i]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interpretation(pub u64);

impl Interpretation {
    pub fn contains(self, atom: usize) -> bool {
        self.0 & (1 << atom) != 0
    }

    pub fn with(self, atom: usize) -> Interpretation {
        Interpretation(self.0 | (1 << atom))
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }
}

impl GroundProgram {
    pub fn atom_index(&self, atom: &GroundAtom) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }

    /// Bitmask of every atom whose relation is in `relations`.
    pub fn relation_mask(&self, relations: &[&str]) -> u64 {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| relations.contains(&&*a.relation))
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    pub fn is_negation_free(&self) -> bool {
        self.rules.iter().all(|r| r.neg.is_empty())
    }

    fn write_body(&self, f: &mut fmt::Formatter<'_>, pos: &[usize], neg: &[usize]) -> fmt::Result {
        let lits = pos
            .iter()
            .map(|&a| (false, a))
            .chain(neg.iter().map(|&a| (true, a)));
        for (i, (negated, a)) in lits.enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if negated {
                f.write_str("not ")?;
            }
            write!(f, "{}", self.atoms[a])?;
        }
        Ok(())
    }

    pub fn display_interpretation(&self, m: Interpretation) -> String {
        let mut s = String::from("{");
        for (k, i) in m.iter().enumerate() {
            if k > 0 {
                s.push_str(", ");
            }
            s.push_str(&alloc::format!("{}", self.atoms[i]));
        }
        s.push('}');
        s
    }
}

/// One rule per line: `head.`, `head :- a, not b.` and `:- a, b.`
impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            write!(f, "{}", self.atoms[r.head])?;
            if !(r.pos.is_empty() && r.neg.is_empty()) {
                f.write_str(" :- ")?;
                self.write_body(f, &r.pos, &r.neg)?;
            }
            f.write_str(".\n")?;
        }
        for c in &self.constraints {
            f.write_str(":- ")?;
            self.write_body(f, &c.pos, &c.neg)?;
            f.write_str(".\n")?;
        }
        Ok(())
    }
}
