//! Answer-time completion.
//!
//! A candidate answer only decides the atoms its proof touched. Before it is
//! accepted, every remaining ground atom over the program's universe is
//! decided, preferring false, so that constraints whose emitters the query
//! never ran (and odd loops elsewhere in the program) are honored. During
//! completion each newly proven literal is checked directly against the
//! literals already in the table, in every slot order.

use alloc::collections::BTreeSet;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use super::solve::Solver;
use super::state::{AtomKey, State};
use super::stream::{bind, mplus, Stream};
use super::EngineError;
use crate::program::{Goal, Program, RelId};
use crate::term::Term;

/// Constants an argument position can take; `None` is any constant.
type Dom = Option<BTreeSet<Term>>;

fn meet(a: &Dom, b: &Dom) -> Dom {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(x), Some(y)) => Some(x.intersection(y).cloned().collect()),
    }
}

fn join(a: &Dom, b: &Dom) -> Dom {
    match (a, b) {
        (None, _) | (_, None) => None,
        (Some(x), Some(y)) => Some(x.union(y).cloned().collect()),
    }
}

fn admits(d: &Dom, t: &Term) -> bool {
    d.as_ref().is_none_or(|s| s.contains(t))
}

/// Abstractly runs a clause body over slot domains. `None` means the body
/// cannot succeed with atomic values in the tracked slots.
fn abstract_goal(g: &Goal, env: Vec<Dom>, doms: &[Vec<Dom>]) -> Option<Vec<Dom>> {
    let mut env = env;
    match g {
        Goal::Succeed | Goal::Disunify(..) | Goal::Forall(..) => Some(env),
        Goal::Fail => None,
        Goal::Unify(a, b) => {
            match (a, b) {
                (Term::Var(i), Term::Var(j)) => {
                    let m = meet(&env[i.0 as usize], &env[j.0 as usize]);
                    env[i.0 as usize] = m.clone();
                    env[j.0 as usize] = m;
                }
                (Term::Var(i), c) | (c, Term::Var(i)) => {
                    // A slot bound to a pair is not an atomic value.
                    let d = if c.is_atomic() {
                        Some(BTreeSet::from([c.clone()]))
                    } else {
                        Some(BTreeSet::new())
                    };
                    env[i.0 as usize] = meet(&env[i.0 as usize], &d);
                }
                _ => {}
            }
            Some(env)
        }
        Goal::Conj(gs) => gs.iter().try_fold(env, |e, g| abstract_goal(g, e, doms)),
        Goal::Disj(gs) => gs
            .iter()
            .filter_map(|g| abstract_goal(g, env.clone(), doms))
            .reduce(|a, b| a.iter().zip(&b).map(|(x, y)| join(x, y)).collect()),
        Goal::Fresh(vs, body) => {
            for &v in vs {
                env[v as usize] = None;
            }
            abstract_goal(body, env, doms)
        }
        Goal::Call {
            rel,
            args,
            negative: false,
        } => {
            for (arg, d) in args.iter().zip(&doms[*rel]) {
                match arg {
                    Term::Var(i) => env[i.0 as usize] = meet(&env[i.0 as usize], d),
                    c if !admits(d, c) => return None,
                    _ => {}
                }
            }
            Some(env)
        }
        Goal::Call { .. } => Some(env),
    }
}

/// Over-approximates, per relation and argument position, the constants a
/// provable atom can carry.
fn derivable_domains(p: &Program) -> Vec<Vec<Dom>> {
    let mut doms: Vec<Vec<Dom>> = p
        .relations()
        .iter()
        .map(|r| vec![Some(BTreeSet::new()); r.arity])
        .collect();
    loop {
        let mut changed = false;
        for (rel, def) in p.relations().iter().enumerate() {
            for c in &def.clauses {
                let env = vec![None; c.locals as usize];
                let Some(out) = abstract_goal(&c.body, env, &doms) else {
                    continue;
                };
                if out[..def.arity].iter().any(|d| d.as_ref().is_some_and(BTreeSet::is_empty)) {
                    continue;
                }
                for (j, d) in out[..def.arity].iter().enumerate() {
                    let next = join(&doms[rel][j], d);
                    if next != doms[rel][j] {
                        doms[rel][j] = next;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return doms;
        }
    }
}

/// Flattened enumeration of the ground atoms completion has to decide.
///
/// Atoms whose arguments fall outside the derivable domains are false in any
/// completion, so they are skipped, except for relations that occur negated
/// in a constraint: their negative literals are emissions in their own right.
pub(crate) struct AtomSpace {
    /// `(relation, first index, argument domains)`.
    blocks: Vec<(RelId, usize, Vec<Vec<Term>>)>,
    total: usize,
}

impl AtomSpace {
    pub(crate) fn new(p: &Program) -> Result<AtomSpace, EngineError> {
        let universe = p.universe();
        let doms = derivable_domains(p);
        let mut blocks = Vec::new();
        let mut total: usize = 0;
        for (rel, def) in p.relations().iter().enumerate() {
            let negated = p
                .constraints()
                .iter()
                .any(|c| c.slots.iter().any(|s| s.rel == rel && s.negative));
            let cols: Vec<Vec<Term>> = (0..def.arity)
                .map(|j| match (&doms[rel][j], negated) {
                    (Some(d), false) => universe.iter().filter(|t| d.contains(t)).cloned().collect(),
                    _ => universe.to_vec(),
                })
                .collect();
            let count = cols
                .iter()
                .try_fold(1usize, |n, c| n.checked_mul(c.len()))
                .ok_or(EngineError::UniverseTooLarge)?;
            blocks.push((rel, total, cols));
            total = total
                .checked_add(count)
                .ok_or(EngineError::UniverseTooLarge)?;
        }
        Ok(AtomSpace { blocks, total })
    }

    pub(crate) fn total(&self) -> usize {
        self.total
    }

    pub(crate) fn atom(&self, i: usize) -> (RelId, Vec<Term>) {
        let pos = self.blocks.partition_point(|(_, start, _)| *start <= i) - 1;
        let (rel, start, cols) = &self.blocks[pos];
        let mut rest = i - start;
        let mut args = Vec::with_capacity(cols.len());
        for col in cols.iter().rev() {
            args.push(col[rest % col.len()].clone());
            rest /= col.len();
        }
        args.reverse();
        (*rel, args)
    }
}

impl<'a> Solver<'a> {
    pub(crate) fn complete(self, space: &'a AtomSpace, from: usize, st: State) -> Stream<'a> {
        let mut i = from;
        while i < space.total() {
            let (rel, args) = space.atom(i);
            let key = AtomKey {
                rel,
                args: args.clone().into(),
            };
            if st.table.get(&key).is_none() {
                let next = i + 1;
                let k: super::stream::Cont<'a> =
                    Rc::new(move |s| Stream::delay(move || self.complete(space, next, s)));
                let neg = {
                    let (args, st, k) = (args.clone(), st.clone(), k.clone());
                    Stream::delay(move || bind(self.call(rel, args, true, st), k))
                };
                let pos = Stream::delay(move || bind(self.call(rel, args, false, st), k));
                return mplus(neg, pos);
            }
            i += 1;
        }
        Stream::unit(st)
    }

    /// True if the candidate extends to a total assignment with no violation.
    pub(crate) fn finalize(self, space: &'a AtomSpace, st: State) -> Result<bool, EngineError> {
        let st = State {
            finalizing: true,
            ..st
        };
        match self.complete(space, 0, st).next() {
            None => Ok(false),
            Some(Ok(_)) => Ok(true),
            Some(Err(e)) => Err(e),
        }
    }
}
