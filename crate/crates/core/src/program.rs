//! Loaded programs: relations with their complements, constraint specs and the
//! constant universe.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::constraints::ConstraintSpec;
use crate::frontend::safety::{check_safety, Diagnostic};
use crate::term::{Symbol, Term};
use crate::verifier::SymbolOrder;

pub type RelId = usize;

/// Goals are templates: `Term::Var(i)` inside a goal refers to clause-local slot `i`.
/// Slots `0..arity` are the head parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Goal {
    Succeed,
    Fail,
    Unify(Term, Term),
    /// Succeeds iff the two sides do not unify under the current substitution.
    Disunify(Term, Term),
    Conj(Vec<Goal>),
    Disj(Vec<Goal>),
    Fresh(Vec<u32>, Box<Goal>),
    /// Body must hold for every assignment of the slots to constants of the universe.
    Forall(Vec<u32>, Box<Goal>),
    Call {
        rel: RelId,
        args: Vec<Term>,
        negative: bool,
    },
}

impl Goal {
    pub fn call(rel: RelId, args: Vec<Term>) -> Goal {
        Goal::Call {
            rel,
            args,
            negative: false,
        }
    }

    pub fn noto(rel: RelId, args: Vec<Term>) -> Goal {
        Goal::Call {
            rel,
            args,
            negative: true,
        }
    }

    /// Conjunction that collapses the trivial cases.
    pub fn conj(mut goals: Vec<Goal>) -> Goal {
        match goals.len() {
            0 => Goal::Succeed,
            1 => goals.pop().unwrap(),
            _ => Goal::Conj(goals),
        }
    }

    pub fn disj(mut goals: Vec<Goal>) -> Goal {
        match goals.len() {
            0 => Goal::Fail,
            1 => goals.pop().unwrap(),
            _ => Goal::Disj(goals),
        }
    }

    /// Pushes negation through the goal. Locals introduced by `Fresh` become
    /// universally quantified. Conjunctions use the disjoint form
    /// `¬a ∨ (a ∧ ¬b) ∨ (a ∧ b ∧ ¬c) ...` so each failure is proven once.
    pub fn complement(&self) -> Goal {
        match self {
            Goal::Succeed => Goal::Fail,
            Goal::Fail => Goal::Succeed,
            Goal::Unify(a, b) => Goal::Disunify(a.clone(), b.clone()),
            Goal::Disunify(a, b) => Goal::Unify(a.clone(), b.clone()),
            Goal::Call {
                rel,
                args,
                negative,
            } => Goal::Call {
                rel: *rel,
                args: args.clone(),
                negative: !negative,
            },
            Goal::Disj(gs) => Goal::conj(gs.iter().map(Goal::complement).collect()),
            Goal::Conj(gs) => {
                let mut branches = Vec::with_capacity(gs.len());
                for i in 0..gs.len() {
                    let mut prefix: Vec<Goal> = gs[..i].to_vec();
                    prefix.push(gs[i].complement());
                    branches.push(Goal::conj(prefix));
                }
                Goal::disj(branches)
            }
            Goal::Fresh(vs, g) => Goal::Forall(vs.clone(), Box::new(g.complement())),
            Goal::Forall(vs, g) => Goal::Fresh(vs.clone(), Box::new(g.complement())),
        }
    }

    pub(crate) fn for_each_constant(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Goal::Unify(a, b) | Goal::Disunify(a, b) => {
                a.for_each_constant(f);
                b.for_each_constant(f);
            }
            Goal::Conj(gs) | Goal::Disj(gs) => gs.iter().for_each(|g| g.for_each_constant(f)),
            Goal::Fresh(_, g) | Goal::Forall(_, g) => g.for_each_constant(f),
            Goal::Call { args, .. } => args.iter().for_each(|a| a.for_each_constant(f)),
            Goal::Succeed | Goal::Fail => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    /// Total number of local slots, head parameters included.
    pub locals: u32,
    /// Names for diagnostics, indexed by slot.
    pub local_names: Vec<String>,
    pub body: Goal,
    pub complement: Goal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationDef {
    pub name: String,
    pub arity: usize,
    pub clauses: Vec<Clause>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("relation '{name}' already defined with arity {existing}, redefined with arity {new}")]
    ArityRedefinition {
        name: String,
        existing: usize,
        new: usize,
    },
    #[error("unknown relation '{0}'")]
    UnknownRelation(String),
    #[error("relation '{name}' takes {expected} argument(s), called with {got}")]
    CallArity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("{}", join_diagnostics(.0))]
    Unsafe(Vec<Diagnostic>),
}

fn join_diagnostics(ds: &[Diagnostic]) -> String {
    let mut out = String::new();
    for (i, d) in ds.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&d.to_string());
    }
    out
}

/// An immutable loaded program.
#[derive(Clone, Debug)]
pub struct Program {
    relations: Vec<RelationDef>,
    index: BTreeMap<String, RelId>,
    constraints: Vec<ConstraintSpec>,
    universe: Vec<Term>,
    symbols: SymbolOrder,
}

impl Program {
    pub fn relations(&self) -> &[RelationDef] {
        &self.relations
    }

    pub fn relation(&self, id: RelId) -> &RelationDef {
        &self.relations[id]
    }

    pub fn lookup(&self, name: &str) -> Option<RelId> {
        self.index.get(name).copied()
    }

    pub fn constraints(&self) -> &[ConstraintSpec] {
        &self.constraints
    }

    /// Atomic constants (symbols and integers) appearing anywhere in the program, sorted.
    pub fn universe(&self) -> &[Term] {
        &self.universe
    }

    pub fn symbol_order(&self) -> &SymbolOrder {
        &self.symbols
    }

    /// Checks that `rel` exists with the given arity.
    pub fn resolve_call(&self, name: &str, arity: usize) -> Result<RelId, ProgramError> {
        let id = self
            .lookup(name)
            .ok_or_else(|| ProgramError::UnknownRelation(name.to_string()))?;
        let expected = self.relations[id].arity;
        if expected != arity {
            return Err(ProgramError::CallArity {
                name: name.to_string(),
                expected,
                got: arity,
            });
        }
        Ok(id)
    }
}

/// A compiled `run`/`run*` form. Slot 0 is the query variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    /// `None` means all answers.
    pub limit: Option<usize>,
    pub locals: u32,
    pub local_names: Vec<String>,
    pub goal: Goal,
}

impl Query {
    /// A query over `goal` whose only local is the (unused) query variable.
    pub fn closed(limit: Option<usize>, goal: Goal) -> Query {
        Query {
            limit,
            locals: 1,
            local_names: vec!["q".to_string()],
            goal,
        }
    }
}

/// Incremental construction; `build` derives complements, the universe and
/// runs the safety check.
#[derive(Clone, Debug, Default)]
pub struct ProgramBuilder {
    relations: Vec<RelationDef>,
    index: BTreeMap<String, RelId>,
    constraints: Vec<ConstraintSpec>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `name/arity`. Declaring an existing name with the same arity
    /// returns the existing id; a different arity is an error.
    pub fn declare(&mut self, name: &str, arity: usize) -> Result<RelId, ProgramError> {
        if let Some(&id) = self.index.get(name) {
            let existing = self.relations[id].arity;
            if existing != arity {
                return Err(ProgramError::ArityRedefinition {
                    name: name.to_string(),
                    existing,
                    new: arity,
                });
            }
            return Ok(id);
        }
        let id = self.relations.len();
        self.relations.push(RelationDef {
            name: name.to_string(),
            arity,
            clauses: Vec::new(),
        });
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<(RelId, usize)> {
        self.index
            .get(name)
            .map(|&id| (id, self.relations[id].arity))
    }

    pub fn relation_name(&self, id: RelId) -> &str {
        &self.relations[id].name
    }

    /// Adds one clause. `local_names` must have one entry per slot; the first
    /// `arity` are the head parameters.
    pub fn add_clause(&mut self, rel: RelId, local_names: Vec<String>, body: Goal) {
        let complement = body.complement();
        self.relations[rel].clauses.push(Clause {
            locals: local_names.len() as u32,
            local_names,
            body,
            complement,
        });
    }

    /// Convenience for propositional programs: `head :- pos..., not neg...`.
    pub fn add_rule(&mut self, head: RelId, pos: &[RelId], neg: &[RelId]) {
        let mut goals: Vec<Goal> = pos.iter().map(|&r| Goal::call(r, vec![])).collect();
        goals.extend(neg.iter().map(|&r| Goal::noto(r, vec![])));
        self.add_clause(head, Vec::new(), Goal::conj(goals));
    }

    pub fn add_constraint(&mut self, mut spec: ConstraintSpec) {
        spec.id = self.constraints.len();
        self.constraints.push(spec);
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn build(self) -> Result<Program, ProgramError> {
        let diagnostics = check_safety(&self.relations);
        if !diagnostics.is_empty() {
            return Err(ProgramError::Unsafe(diagnostics));
        }
        let mut constants = BTreeSet::new();
        let mut symbols = BTreeSet::new();
        let mut note = |t: &Term| {
            if let Term::Sym(s) = t {
                symbols.insert(s.clone());
            }
            constants.insert(t.clone());
        };
        for r in &self.relations {
            for c in &r.clauses {
                c.body.for_each_constant(&mut note);
            }
        }
        let mut verifier_syms: Vec<Symbol> = Vec::new();
        for spec in &self.constraints {
            spec.verifier.for_each_symbol(&mut |s| verifier_syms.push(s.clone()));
        }
        symbols.extend(verifier_syms);
        Ok(Program {
            relations: self.relations,
            index: self.index,
            constraints: self.constraints,
            universe: constants.into_iter().collect(),
            symbols: SymbolOrder::new(symbols),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> Term {
        Term::var(i)
    }

    #[test]
    fn complement_of_negated_call_is_positive_call() {
        let mut b = ProgramBuilder::new();
        let alice = b.declare("Alice", 0).unwrap();
        let bob = b.declare("Bob", 0).unwrap();
        b.add_clause(alice, vec![], Goal::noto(bob, vec![]));
        let p = {
            b.add_clause(bob, vec![], Goal::noto(alice, vec![]));
            b.build().unwrap()
        };
        assert_eq!(
            p.relation(alice).clauses[0].complement,
            Goal::call(bob, vec![])
        );
    }

    #[test]
    fn complement_of_finite_disjunction() {
        let body = Goal::Disj(
            (1..=4)
                .map(|i| Goal::Unify(v(0), Term::int(i)))
                .collect(),
        );
        assert_eq!(
            body.complement(),
            Goal::Conj(
                (1..=4)
                    .map(|i| Goal::Disunify(v(0), Term::int(i)))
                    .collect()
            )
        );
    }

    #[test]
    fn complement_of_conjunction_is_disjoint() {
        let body = Goal::Conj(vec![Goal::call(0, vec![]), Goal::noto(1, vec![])]);
        assert_eq!(
            body.complement(),
            Goal::Disj(vec![
                Goal::noto(0, vec![]),
                Goal::Conj(vec![Goal::call(0, vec![]), Goal::call(1, vec![])]),
            ])
        );
        let fresh = Goal::Fresh(vec![1], Box::new(Goal::call(0, vec![v(1)])));
        assert_eq!(
            fresh.complement(),
            Goal::Forall(vec![1], Box::new(Goal::noto(0, vec![v(1)])))
        );
    }

    #[test]
    fn redefinition_with_other_arity_fails() {
        let mut b = ProgramBuilder::new();
        b.declare("num", 1).unwrap();
        assert_eq!(b.declare("num", 1).unwrap(), 0);
        assert!(matches!(
            b.declare("num", 2),
            Err(ProgramError::ArityRedefinition { .. })
        ));
    }

    #[test]
    fn universe_collects_constants() {
        let mut b = ProgramBuilder::new();
        let num = b.declare("num", 1).unwrap();
        b.add_clause(
            num,
            vec!["x".into()],
            Goal::Disj(vec![
                Goal::Unify(v(0), Term::int(2)),
                Goal::Unify(v(0), Term::sym("b")),
                Goal::Unify(v(0), Term::list([Term::int(1), Term::sym("a")])),
            ]),
        );
        let p = b.build().unwrap();
        assert_eq!(
            p.universe(),
            &[Term::sym("a"), Term::sym("b"), Term::int(1), Term::int(2)]
        );
        assert_eq!(p.symbol_order().symbols().len(), 2);
    }
}
