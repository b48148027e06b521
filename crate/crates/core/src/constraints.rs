//! `constrainto` compilation and the partial-handler store.
//!
//! A constraint is a list of signed emitter slots plus a verifier. When an
//! atom is proven, every stored handler that still waits for a slot of that
//! atom's kind receives the values as a new, extended copy. Complete handlers
//! are evaluated and discarded; `true` means the constraint is violated.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rpds::ListSync;
use thiserror::Error;

use crate::frontend::reader::Form;
use crate::program::RelId;
use crate::term::Term;
use crate::verifier::{
    eval_verifier, parse_verifier, EvalError, SymbolOrder, VarIndex, VerifierError, VerifierExpr,
};

/// Handlers track filled slots in a bitmask.
pub const MAX_SLOTS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub rel: RelId,
    pub negative: bool,
    pub vars: Vec<VarIndex>,
}

impl Slot {
    fn matches(&self, rel: RelId, negative: bool) -> bool {
        self.rel == rel && self.negative == negative
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSpec {
    /// Position in the owning program.
    pub id: usize,
    pub slots: Vec<Slot>,
    pub var_names: Vec<String>,
    /// Conjunction of the verifiers; empty means ⊤.
    pub verifier: VerifierExpr,
    /// Surface text, for diagnostics.
    pub text: String,
}

/// Surface emitter before resolution: `(r a b)` or `(noto (r a b))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmitterPattern {
    pub relation: String,
    pub negative: bool,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("constraint emitter names unknown relation '{0}'")]
    UnknownRelation(String),
    #[error("emitter '{name}' takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("variable '{0}' is shared by two emitters; connect them with an equality verifier instead")]
    SharedVariable(String),
    #[error("constraints support at most {MAX_SLOTS} emitters")]
    TooManySlots,
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error("constraint {text}: {source}")]
    Eval { text: String, source: EvalError },
}

impl ConstraintSpec {
    /// Validates a spec assembled programmatically. Verifier variable indices
    /// must refer to `var_names`, and every variable must sit in exactly one slot.
    pub fn new(
        slots: Vec<Slot>,
        var_names: Vec<String>,
        verifiers: Vec<VerifierExpr>,
        text: String,
    ) -> Result<ConstraintSpec, ConstraintError> {
        if slots.len() > MAX_SLOTS {
            return Err(ConstraintError::TooManySlots);
        }
        let mut owner = vec![false; var_names.len()];
        for s in &slots {
            for &v in &s.vars {
                if owner[v] {
                    return Err(ConstraintError::SharedVariable(var_names[v].clone()));
                }
                owner[v] = true;
            }
        }
        let verifier = VerifierExpr::And(verifiers);
        let mut used = Vec::new();
        verifier.var_refs(&mut used);
        if let Some(&v) = used.iter().find(|&&v| !owner.get(v).copied().unwrap_or(false)) {
            let name = var_names
                .get(v)
                .cloned()
                .unwrap_or_else(|| alloc::format!("#{v}"));
            return Err(VerifierError::UnboundVariable(name).into());
        }
        Ok(ConstraintSpec {
            id: 0,
            slots,
            var_names,
            verifier,
            text,
        })
    }

    fn eval(
        &self,
        env: &[Option<Term>],
        order: &SymbolOrder,
    ) -> Result<bool, ConstraintError> {
        eval_verifier(&self.verifier, env, order).map_err(|source| ConstraintError::Eval {
            text: self.text.clone(),
            source,
        })
    }

    /// For zero-slot specs: whether the constant verifier already holds.
    pub fn violated_unconditionally(&self, order: &SymbolOrder) -> Result<bool, ConstraintError> {
        if !self.slots.is_empty() {
            return Ok(false);
        }
        self.eval(&[], order)
    }

    fn bind(&self, env: &mut [Option<Term>], slot: usize, args: &[Term]) {
        for (&v, a) in self.slots[slot].vars.iter().zip(args) {
            env[v] = Some(a.clone());
        }
    }
}

/// Compiles `(constrainto [emitters...] [verifiers...])`. `resolve` maps a
/// relation name to its id and arity.
pub fn compile_constraint(
    emitters: &[EmitterPattern],
    verifiers: &[Form],
    resolve: &dyn Fn(&str) -> Option<(RelId, usize)>,
    text: String,
) -> Result<ConstraintSpec, ConstraintError> {
    let mut var_names: Vec<String> = Vec::new();
    let mut slots = Vec::with_capacity(emitters.len());
    for e in emitters {
        let (rel, arity) =
            resolve(&e.relation).ok_or_else(|| ConstraintError::UnknownRelation(e.relation.clone()))?;
        if arity != e.args.len() {
            return Err(ConstraintError::Arity {
                name: e.relation.clone(),
                expected: arity,
                got: e.args.len(),
            });
        }
        let mut vars = Vec::with_capacity(arity);
        for a in &e.args {
            if var_names.contains(a) {
                return Err(ConstraintError::SharedVariable(a.clone()));
            }
            vars.push(var_names.len());
            var_names.push(a.clone());
        }
        slots.push(Slot {
            rel,
            negative: e.negative,
            vars,
        });
    }
    let scope = |name: &str| var_names.iter().position(|n| n == name);
    let exprs = verifiers
        .iter()
        .map(|f| parse_verifier(f, &scope))
        .collect::<Result<Vec<_>, _>>()?;
    ConstraintSpec::new(slots, var_names, exprs, text)
}

/// A constraint handler some of whose slots are filled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialHandler {
    pub spec: usize,
    /// Bit `i` set iff slot `i` is filled.
    pub filled: u64,
    pub env: Arc<[Option<Term>]>,
}

impl PartialHandler {
    pub fn filled_count(&self) -> u32 {
        self.filled.count_ones()
    }
}

/// A violated handler, reported for diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub spec: usize,
    pub env: Vec<Option<Term>>,
}

/// Persistent, branch-local collection of partial handlers.
#[derive(Clone, Debug, Default)]
pub struct HandlerStore {
    handlers: ListSync<PartialHandler>,
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Earliest slot of the given kind that is not yet filled.
fn next_slot(spec: &ConstraintSpec, filled: u64, rel: RelId, negative: bool) -> Option<usize> {
    spec.slots
        .iter()
        .enumerate()
        .find(|(i, s)| filled & (1 << i) == 0 && s.matches(rel, negative))
        .map(|(i, _)| i)
}

impl HandlerStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.handlers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.handlers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PartialHandler> {
        self.handlers.iter()
    }

    pub fn count_for(&self, spec: usize) -> usize {
        self.handlers.iter().filter(|h| h.spec == spec).count()
    }

    /// Delivers one ground emission. Each stored handler waiting for this kind
    /// gets one extended copy (the original stays), and each spec with a slot
    /// of this kind starts a new handler. Returns the first violation found.
    pub fn on_emission(
        &self,
        specs: &[ConstraintSpec],
        rel: RelId,
        negative: bool,
        args: &[Term],
        order: &SymbolOrder,
    ) -> Result<(HandlerStore, Option<Violation>), ConstraintError> {
        let mut out = self.handlers.clone();
        let mut extend = |spec: &ConstraintSpec,
                          filled: u64,
                          env: &[Option<Term>],
                          slot: usize|
         -> Result<Option<Violation>, ConstraintError> {
            let mut env = env.to_vec();
            spec.bind(&mut env, slot, args);
            let filled = filled | (1 << slot);
            if filled == full_mask(spec.slots.len()) {
                if spec.eval(&env, order)? {
                    return Ok(Some(Violation { spec: spec.id, env }));
                }
            } else {
                out.push_front_mut(PartialHandler {
                    spec: spec.id,
                    filled,
                    env: env.into(),
                });
            }
            Ok(None)
        };
        for h in self.handlers.iter() {
            let spec = &specs[h.spec];
            if let Some(slot) = next_slot(spec, h.filled, rel, negative) {
                if let Some(v) = extend(spec, h.filled, &h.env, slot)? {
                    return Ok((HandlerStore::default(), Some(v)));
                }
            }
        }
        for spec in specs {
            if let Some(slot) = next_slot(spec, 0, rel, negative) {
                let empty = vec![None; spec.var_names.len()];
                if let Some(v) = extend(spec, 0, &empty, slot)? {
                    return Ok((HandlerStore::default(), Some(v)));
                }
            }
        }
        Ok((HandlerStore { handlers: out }, None))
    }
}

/// Evaluates a complete handler. `true` means the constraint is violated.
pub fn evaluate_handler(
    h: &PartialHandler,
    spec: &ConstraintSpec,
    order: &SymbolOrder,
) -> Result<bool, ConstraintError> {
    debug_assert_eq!(h.filled, full_mask(spec.slots.len()));
    spec.eval(&h.env, order)
}

/// Checks every filling of `spec` that uses the literal `(rel, negative, args)`
/// in at least one slot, in every slot order, with the remaining slots drawn
/// from `known(rel, negative)`. Literals of the same kind never pair with
/// themselves.
pub fn check_literal(
    spec: &ConstraintSpec,
    rel: RelId,
    negative: bool,
    args: &[Term],
    known: &dyn Fn(RelId, bool) -> Vec<Arc<[Term]>>,
    order: &SymbolOrder,
) -> Result<Option<Violation>, ConstraintError> {
    let n = spec.slots.len();
    if !spec.slots.iter().any(|s| s.matches(rel, negative)) {
        return Ok(None);
    }
    let pools: Vec<Vec<Arc<[Term]>>> = spec
        .slots
        .iter()
        .map(|s| {
            let mut pool = known(s.rel, s.negative);
            if s.matches(rel, negative) {
                pool.retain(|a| &a[..] != args);
            }
            pool
        })
        .collect();
    let mut env = vec![None; spec.var_names.len()];
    let mut chosen: Vec<Option<&[Term]>> = vec![None; n];
    for j in 0..n {
        if !spec.slots[j].matches(rel, negative) {
            continue;
        }
        chosen[j] = Some(args);
        spec.bind(&mut env, j, args);
        let found = fill(spec, &pools, j, 0, &mut chosen, &mut env, order)?;
        chosen[j] = None;
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

fn fill<'a>(
    spec: &ConstraintSpec,
    pools: &'a [Vec<Arc<[Term]>>],
    fixed: usize,
    k: usize,
    chosen: &mut Vec<Option<&'a [Term]>>,
    env: &mut Vec<Option<Term>>,
    order: &SymbolOrder,
) -> Result<Option<Violation>, ConstraintError> {
    if k == spec.slots.len() {
        return Ok(if spec.eval(env, order)? {
            Some(Violation {
                spec: spec.id,
                env: env.clone(),
            })
        } else {
            None
        });
    }
    if k == fixed {
        return fill(spec, pools, fixed, k + 1, chosen, env, order);
    }
    let slot = &spec.slots[k];
    for cand in &pools[k] {
        let clash = spec.slots.iter().zip(chosen.iter()).any(|(s, c)| {
            s.matches(slot.rel, slot.negative) && c.is_some_and(|c| c == &cand[..])
        });
        if clash {
            continue;
        }
        chosen[k] = Some(cand);
        spec.bind(env, k, cand);
        let found = fill(spec, pools, fixed, k + 1, chosen, env, order)?;
        chosen[k] = None;
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "constraint #{} violated with", self.spec)?;
        for v in self.env.iter().flatten() {
            write!(f, " {v}")?;
        }
        Ok(())
    }
}

impl core::fmt::Display for EmitterPattern {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.negative {
            f.write_str("(noto ")?;
        }
        write!(f, "({}", self.relation)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")?;
        if self.negative {
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::reader::read;

    const PICK: RelId = 0;
    const FREE: RelId = 1;

    fn resolve(name: &str) -> Option<(RelId, usize)> {
        match name {
            "pick" => Some((PICK, 2)),
            "free" => Some((FREE, 2)),
            _ => None,
        }
    }

    fn em(rel: &str, negative: bool, args: &[&str]) -> EmitterPattern {
        EmitterPattern {
            relation: rel.into(),
            negative,
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }

    fn spec(emitters: &[EmitterPattern], verifiers: &str) -> Result<ConstraintSpec, ConstraintError> {
        compile_constraint(emitters, &read(verifiers).unwrap(), &resolve, "test".into())
    }

    fn row_spec() -> ConstraintSpec {
        spec(
            &[em("pick", false, &["x", "y"]), em("pick", false, &["u", "v"])],
            "(= x u) (not (= y v))",
        )
        .unwrap()
    }

    fn ints(a: i64, b: i64) -> [Term; 2] {
        [Term::int(a), Term::int(b)]
    }

    #[test]
    fn compiles_row_constraint() {
        let s = row_spec();
        assert_eq!(s.slots.len(), 2);
        assert_eq!(s.var_names, ["x", "y", "u", "v"]);
        let VerifierExpr::And(parts) = &s.verifier else {
            panic!()
        };
        assert_eq!(parts.len(), 2);
    }

    #[test]
    fn rejects_shared_and_unbound_variables() {
        let shared = spec(
            &[em("pick", false, &["x", "y"]), em("pick", false, &["x", "v"])],
            "(= y v)",
        );
        assert_eq!(shared, Err(ConstraintError::SharedVariable("x".into())));
        let unbound = spec(&[em("pick", false, &["x", "y"])], "(= x z)");
        assert!(matches!(
            unbound,
            Err(ConstraintError::Verifier(VerifierError::UnboundVariable(_)))
        ));
        let unknown = spec(&[em("queen", false, &["x", "y"])], "");
        assert_eq!(unknown, Err(ConstraintError::UnknownRelation("queen".into())));
        let arity = spec(&[em("pick", false, &["x"])], "");
        assert!(matches!(arity, Err(ConstraintError::Arity { .. })));
    }

    #[test]
    fn zero_slot_constraint() {
        let order = SymbolOrder::default();
        let s = spec(&[], "(= 1 1)").unwrap();
        assert!(s.violated_unconditionally(&order).unwrap());
        let s = spec(&[], "(= 1 2)").unwrap();
        assert!(!s.violated_unconditionally(&order).unwrap());
        assert!(spec(&[], "(= x 1)").is_err());
    }

    #[test]
    fn same_row_pair_violates() {
        let specs = [row_spec()];
        let order = SymbolOrder::default();
        let (st, v) = HandlerStore::new()
            .on_emission(&specs, PICK, false, &ints(1, 1), &order)
            .unwrap();
        assert!(v.is_none());
        assert_eq!(st.len(), 1);
        let (_, v) = st
            .on_emission(&specs, PICK, false, &ints(1, 2), &order)
            .unwrap();
        let v = v.expect("violation");
        assert_eq!(
            v.env,
            [1, 1, 1, 2].map(|i| Some(Term::int(i))).to_vec()
        );
    }

    #[test]
    fn different_rows_keep_partials() {
        let specs = [row_spec()];
        let order = SymbolOrder::default();
        let (st, _) = HandlerStore::new()
            .on_emission(&specs, PICK, false, &ints(1, 1), &order)
            .unwrap();
        let (st, v) = st
            .on_emission(&specs, PICK, false, &ints(2, 1), &order)
            .unwrap();
        assert!(v.is_none());
        assert_eq!(st.len(), 2);
        let firsts: Vec<_> = st.iter().map(|h| h.env[0].clone().unwrap()).collect();
        assert!(firsts.contains(&Term::int(1)) && firsts.contains(&Term::int(2)));
        assert!(st.iter().all(|h| h.filled == 1));
    }

    #[test]
    fn store_grows_by_one_per_emission() {
        let specs = [row_spec()];
        let order = SymbolOrder::default();
        let mut st = HandlerStore::new();
        for (k, r) in (1..=5).enumerate() {
            let (next, v) = st
                .on_emission(&specs, PICK, false, &ints(r, 3), &order)
                .unwrap();
            assert!(v.is_none());
            st = next;
            assert_eq!(st.count_for(0), k + 1);
        }
    }

    #[test]
    fn negative_emitter_without_verifier() {
        let specs = [spec(&[em("free", true, &["x", "y"])], "").unwrap()];
        let order = SymbolOrder::default();
        let (_, v) = HandlerStore::new()
            .on_emission(&specs, FREE, true, &ints(2, 3), &order)
            .unwrap();
        assert!(v.is_some());
        let (st, v) = HandlerStore::new()
            .on_emission(&specs, FREE, false, &ints(2, 3), &order)
            .unwrap();
        assert!(v.is_none() && st.is_empty());
    }

    #[test]
    fn evaluate_complete_handler() {
        let s = row_spec();
        let order = SymbolOrder::default();
        let h = |vals: [i64; 4]| PartialHandler {
            spec: 0,
            filled: 0b11,
            env: vals.map(|v| Some(Term::int(v))).to_vec().into(),
        };
        assert!(evaluate_handler(&h([1, 1, 1, 2]), &s, &order).unwrap());
        assert!(!evaluate_handler(&h([1, 1, 2, 1]), &s, &order).unwrap());
        assert!(!evaluate_handler(&h([1, 3, 2, 4]), &s, &order).unwrap());
    }

    #[test]
    fn eval_errors_name_the_constraint() {
        let specs = [spec(
            &[em("pick", false, &["x", "y"])],
            "(= x 1)",
        )
        .unwrap()];
        let err = HandlerStore::new()
            .on_emission(
                &specs,
                PICK,
                false,
                &[Term::sym("a"), Term::int(1)],
                &SymbolOrder::default(),
            )
            .unwrap_err();
        assert!(matches!(err, ConstraintError::Eval { .. }));
    }

    #[test]
    fn literal_check_tries_both_orders() {
        let mut s = spec(
            &[em("pick", false, &["x", "y"]), em("pick", false, &["u", "v"])],
            "(> x u)",
        )
        .unwrap();
        s.id = 0;
        let order = SymbolOrder::default();
        let known = |_: RelId, _: bool| -> Vec<Arc<[Term]>> {
            vec![Arc::from(ints(1, 1).to_vec()), Arc::from(ints(3, 3).to_vec())]
        };
        // Fresh (2,2) sits between the known rows, so one of the orders fires.
        assert!(check_literal(&s, PICK, false, &ints(2, 2), &known, &order)
            .unwrap()
            .is_some());
        // A literal never pairs with itself.
        let only_self = |_: RelId, _: bool| -> Vec<Arc<[Term]>> { vec![Arc::from(ints(2, 2).to_vec())] };
        assert!(check_literal(&s, PICK, false, &ints(2, 2), &only_self, &order)
            .unwrap()
            .is_none());
        // Other kinds are ignored.
        assert!(check_literal(&s, FREE, false, &ints(2, 2), &known, &order)
            .unwrap()
            .is_none());
    }

    #[test]
    fn heterogeneous_slots_fill_in_any_order() {
        let specs = [spec(
            &[em("pick", false, &["x", "y"]), em("free", true, &["u", "v"])],
            "(= x u) (= y v)",
        )
        .unwrap()];
        let order = SymbolOrder::default();
        let (st, v) = HandlerStore::new()
            .on_emission(&specs, FREE, true, &ints(1, 2), &order)
            .unwrap();
        assert!(v.is_none());
        let (_, v) = st
            .on_emission(&specs, PICK, false, &ints(1, 2), &order)
            .unwrap();
        assert!(v.is_some());
    }
}
