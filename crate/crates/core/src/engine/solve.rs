//! Top-down resolution of goals under the assumption table.

use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::state::{AtomKey, Entry, State, Status};
use super::stream::{bind, mplus, Stream};
use super::{EngineError, Options, TraceEvent};
use crate::constraints::check_literal;
use crate::program::{Goal, Program, RelId};
use crate::term::{Term, VarId};

/// Runtime values of a clause's local slots.
pub(crate) type Env = Rc<[Term]>;

/// Replaces slot references in a template by their runtime values.
pub(crate) fn instantiate(t: &Term, env: &[Term]) -> Term {
    match t {
        Term::Var(v) => env[v.0 as usize].clone(),
        Term::Pair(p) => Term::pair(instantiate(&p.0, env), instantiate(&p.1, env)),
        other => other.clone(),
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Solver<'a> {
    pub program: &'a Program,
    pub opts: &'a Options,
}

impl<'a> Solver<'a> {
    pub(crate) fn solve(self, g: &'a Goal, env: Env, st: State) -> Stream<'a> {
        match g {
            Goal::Succeed => Stream::unit(st),
            Goal::Fail => Stream::Empty,
            Goal::Unify(a, b) => {
                match st.subst.unify(&instantiate(a, &env), &instantiate(b, &env)) {
                    Some(subst) => Stream::unit(State { subst, ..st }),
                    None => Stream::Empty,
                }
            }
            Goal::Disunify(a, b) => {
                if st
                    .subst
                    .unify(&instantiate(a, &env), &instantiate(b, &env))
                    .is_some()
                {
                    Stream::Empty
                } else {
                    Stream::unit(st)
                }
            }
            Goal::Conj(gs) => self.conj(gs, env, st),
            Goal::Disj(gs) => self.disj(gs, env, st),
            Goal::Fresh(vs, body) => {
                let mut st = st;
                let mut local = env.to_vec();
                for &v in vs {
                    local[v as usize] = Term::Var(VarId(st.next_var));
                    st.next_var += 1;
                }
                self.solve(body, local.into(), st)
            }
            Goal::Forall(vs, body) => {
                let n = self.program.universe().len();
                match u32::try_from(vs.len())
                    .ok()
                    .and_then(|k| n.checked_pow(k))
                {
                    Some(total) => self.forall(vs, body, env, 0, total, st),
                    None => Stream::Error(EngineError::UniverseTooLarge),
                }
            }
            Goal::Call {
                rel,
                args,
                negative,
            } => {
                let args = args.iter().map(|a| instantiate(a, &env)).collect();
                self.call(*rel, args, *negative, st)
            }
        }
    }

    fn conj(self, gs: &'a [Goal], env: Env, st: State) -> Stream<'a> {
        match gs {
            [] => Stream::unit(st),
            [g] => self.solve(g, env, st),
            [g, rest @ ..] => {
                let env2 = env.clone();
                bind(
                    self.solve(g, env, st),
                    Rc::new(move |s| self.conj(rest, env2.clone(), s)),
                )
            }
        }
    }

    fn disj(self, gs: &'a [Goal], env: Env, st: State) -> Stream<'a> {
        match gs {
            [] => Stream::Empty,
            [g] => self.solve(g, env, st),
            [g, rest @ ..] => {
                let left = self.solve(g, env.clone(), st.clone());
                mplus(left, Stream::delay(move || self.disj(rest, env, st)))
            }
        }
    }

    fn forall(
        self,
        vs: &'a [u32],
        body: &'a Goal,
        env: Env,
        i: usize,
        total: usize,
        st: State,
    ) -> Stream<'a> {
        if i == total {
            return Stream::unit(st);
        }
        let universe = self.program.universe();
        let mut local = env.to_vec();
        let mut rest = i;
        for &v in vs {
            local[v as usize] = universe[rest % universe.len()].clone();
            rest /= universe.len();
        }
        let step = self.solve(body, local.into(), st);
        bind(
            step,
            Rc::new(move |s| {
                let env = env.clone();
                Stream::delay(move || self.forall(vs, body, env, i + 1, total, s))
            }),
        )
    }

    /// Calls `rel` on runtime arguments, consulting and updating the table.
    pub(crate) fn call(self, rel: RelId, args: Vec<Term>, negative: bool, st: State) -> Stream<'a> {
        let args: Vec<Term> = args.iter().map(|a| st.subst.walk_star(a)).collect();
        let def = self.program.relation(rel);
        if st.depth >= self.opts.depth_bound {
            return Stream::Error(EngineError::DepthExceeded {
                relation: def.name.clone(),
                bound: self.opts.depth_bound,
            });
        }
        let ground = args.iter().all(Term::is_ground);
        if negative && !ground {
            return Stream::Error(EngineError::NonGroundNegation {
                relation: def.name.clone(),
            });
        }
        let mut st = st;
        if ground {
            let key = AtomKey {
                rel,
                args: Arc::from(args.clone()),
            };
            if let Some(e) = st.table.get(&key).cloned() {
                return match Self::revisit(&key, &e, negative, st) {
                    Some(st) => Stream::unit(st),
                    None => Stream::Empty,
                };
            }
            let status = if negative {
                Status::FalseInProgress
            } else {
                Status::TrueInProgress
            };
            st.table = st.table.set(key, Entry::new(status, st.neg_depth));
        }
        let hyp_mark = st.hyps.len();
        st.depth += 1;
        if negative {
            st.neg_depth += 1;
        }
        let args: Rc<[Term]> = args.into();
        let body = {
            let args = args.clone();
            Stream::delay(move || self.bodies(rel, &args, negative, st))
        };
        bind(
            body,
            Rc::new(move |s| self.epilogue(rel, &args, negative, ground, hyp_mark, s)),
        )
    }

    fn clause_env(args: &[Term], locals: u32) -> Env {
        let mut env = args.to_vec();
        env.resize(locals as usize, Term::Nil);
        env.into()
    }

    fn bodies(self, rel: RelId, args: &[Term], negative: bool, st: State) -> Stream<'a> {
        let clauses = &self.program.relation(rel).clauses;
        if negative {
            self.all_complements(clauses, 0, args.into(), st)
        } else {
            let mut out = Stream::Empty;
            for c in clauses.iter().rev() {
                let env = Self::clause_env(args, c.locals);
                let branch = self.solve(&c.body, env, st.clone());
                out = mplus(branch, out);
            }
            out
        }
    }

    fn all_complements(
        self,
        clauses: &'a [crate::program::Clause],
        i: usize,
        args: Rc<[Term]>,
        st: State,
    ) -> Stream<'a> {
        let Some(c) = clauses.get(i) else {
            return Stream::unit(st);
        };
        let env = Self::clause_env(&args, c.locals);
        bind(
            self.solve(&c.complement, env, st),
            Rc::new(move |s| self.all_complements(clauses, i + 1, args.clone(), s)),
        )
    }

    /// Runs after a call's body succeeds: pop the frame, record the atom and
    /// run the constraint checkpoint.
    fn epilogue(
        self,
        rel: RelId,
        args: &[Term],
        negative: bool,
        marked: bool,
        hyp_mark: usize,
        st: State,
    ) -> Stream<'a> {
        let mut st = st;
        st.depth -= 1;
        if negative {
            st.neg_depth -= 1;
        }
        let args: Vec<Term> = args.iter().map(|a| st.subst.walk_star(a)).collect();
        if !args.iter().all(Term::is_ground) {
            return Stream::Error(EngineError::NonGroundSuccess {
                relation: self.program.relation(rel).name.clone(),
            });
        }
        let key = AtomKey {
            rel,
            args: Arc::from(args),
        };
        let unguarded = Self::settle_hyps(&key, marked, hyp_mark, &mut st);
        if !marked {
            if let Some(e) = st.table.get(&key).cloned() {
                return match Self::revisit(&key, &e, false, st) {
                    Some(st) => Stream::unit(st),
                    None => Stream::Empty,
                };
            }
        }
        let entry = if negative {
            Entry::new(Status::FalseAssumed, 0)
        } else {
            Entry {
                status: Status::TrueProven,
                neg_at: 0,
                hyps: (!unguarded.is_empty()).then(|| unguarded.into()),
            }
        };
        st.table = st.table.set(key.clone(), entry);
        self.emit(&key, negative, st)
    }

    /// The table already holds `key` with entry `e`; decides the call, and on
    /// success records any loop assumption the reuse depends on.
    fn revisit(key: &AtomKey, e: &Entry, negative: bool, mut st: State) -> Option<State> {
        let positive = !negative;
        match (e.status, positive) {
            (Status::FalseAssumed, false) | (Status::FalseInProgress, false) => Some(st),
            // Same-polarity loops need a negation in between.
            (Status::TrueInProgress, true) if st.neg_depth > e.neg_at => {
                st.hyps = st.hyps.push_front((key.clone(), st.neg_depth));
                Some(st)
            }
            // A proven atom is only as good as the loop assumptions behind it.
            (Status::TrueProven, true) => {
                for h in e.hyps.iter().flat_map(|hs| hs.iter()) {
                    match st.table.get(h) {
                        Some(he) if he.status == Status::TrueInProgress => {
                            if st.neg_depth <= he.neg_at {
                                return None;
                            }
                            st.hyps = st.hyps.push_front((h.clone(), st.neg_depth));
                        }
                        _ => {}
                    }
                }
                Some(st)
            }
            _ => None,
        }
    }

    /// Compacts the hypothesis uses made since `hyp_mark` to those still open,
    /// keeping the smallest depth per atom. Returns the ones with no negation
    /// between this frame and the use.
    fn settle_hyps(key: &AtomKey, marked: bool, hyp_mark: usize, st: &mut State) -> Vec<AtomKey> {
        let fresh = st.hyps.len() - hyp_mark;
        if fresh == 0 {
            return Vec::new();
        }
        let mut open: BTreeMap<AtomKey, u32> = BTreeMap::new();
        let mut rest = st.hyps.clone();
        for _ in 0..fresh {
            let (h, d) = rest.first().cloned().expect("hypothesis list shorter than its mark");
            rest = rest.drop_first().expect("non-empty");
            let still_open = !(marked && h == *key)
                && st
                    .table
                    .get(&h)
                    .is_some_and(|e| e.status == Status::TrueInProgress);
            if still_open {
                let slot = open.entry(h).or_insert(d);
                *slot = (*slot).min(d);
            }
        }
        let k = st.neg_depth;
        let mut unguarded = Vec::new();
        for (h, d) in open {
            if d <= k {
                unguarded.push(h.clone());
            }
            rest = rest.push_front((h, d));
        }
        st.hyps = rest;
        unguarded
    }

    fn emit(self, key: &AtomKey, negative: bool, st: State) -> Stream<'a> {
        let specs = self.program.constraints();
        if specs.is_empty() {
            return Stream::unit(st);
        }
        let order = self.program.symbol_order();
        if st.finalizing {
            let known = |r: RelId, neg: bool| {
                let status = if neg {
                    Status::FalseAssumed
                } else {
                    Status::TrueProven
                };
                st.table.with_status(r, status)
            };
            for spec in specs {
                match check_literal(spec, key.rel, negative, &key.args, &known, order) {
                    Ok(None) => {}
                    Ok(Some(v)) => {
                        self.trace(TraceEvent::Violation {
                            spec,
                            env: &v.env,
                            finalizing: true,
                        });
                        return Stream::Empty;
                    }
                    Err(e) => return Stream::Error(e.into()),
                }
            }
            Stream::unit(st)
        } else {
            match st
                .store
                .on_emission(specs, key.rel, negative, &key.args, order)
            {
                Ok((store, None)) => Stream::unit(State { store, ..st }),
                Ok((_, Some(v))) => {
                    self.trace(TraceEvent::Violation {
                        spec: &specs[v.spec],
                        env: &v.env,
                        finalizing: false,
                    });
                    Stream::Empty
                }
                Err(e) => Stream::Error(e.into()),
            }
        }
    }

    fn trace(self, ev: TraceEvent<'_>) {
        if let Some(t) = &self.opts.trace {
            t(&ev);
        }
    }
}
