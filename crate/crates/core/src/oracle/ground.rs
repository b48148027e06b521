//! Naive grounding over the program's constant universe.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{GroundAtom, GroundConstraint, GroundProgram, GroundRule, OracleError};
use crate::constraints::ConstraintSpec;
use crate::program::{Goal, Program, RelId};
use crate::term::{free_vars, Substitution, Term};
use crate::verifier::eval_verifier;

/// 2^22 interpretations.
pub const DEFAULT_ATOM_CAP: usize = 22;

#[derive(Clone, Debug)]
enum Lit {
    Unify(Term, Term),
    Disunify(Term, Term),
    Call(RelId, Vec<Term>, bool),
}

/// Disjunctive normal form of a clause body.
fn dnf(g: &Goal) -> Result<Vec<Vec<Lit>>, OracleError> {
    Ok(match g {
        Goal::Succeed => vec![vec![]],
        Goal::Fail => vec![],
        Goal::Unify(a, b) => vec![vec![Lit::Unify(a.clone(), b.clone())]],
        Goal::Disunify(a, b) => vec![vec![Lit::Disunify(a.clone(), b.clone())]],
        Goal::Call {
            rel,
            args,
            negative,
        } => vec![vec![Lit::Call(*rel, args.clone(), *negative)]],
        Goal::Fresh(_, body) => dnf(body)?,
        Goal::Disj(gs) => {
            let mut out = Vec::new();
            for g in gs {
                out.extend(dnf(g)?);
            }
            out
        }
        Goal::Conj(gs) => {
            let mut acc = vec![vec![]];
            for g in gs {
                let parts = dnf(g)?;
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for a in &acc {
                    for p in &parts {
                        let mut c: Vec<Lit> = a.clone();
                        c.extend(p.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
        Goal::Forall(..) => return Err(OracleError::Unsupported("universal quantification".to_string())),
    })
}

type Atom = (RelId, Vec<Term>);

struct RawRule {
    head: Atom,
    pos: Vec<Atom>,
    neg: Vec<Atom>,
}

/// Every assignment of `vars` to universe constants, as substitutions.
fn assignments(vars: &[crate::term::VarId], universe: &[Term], base: &Substitution) -> Vec<Substitution> {
    let mut out = vec![base.clone()];
    for &v in vars {
        let mut next = Vec::with_capacity(out.len() * universe.len());
        for s in &out {
            for c in universe {
                next.push(s.bind_unchecked(v, c.clone()));
            }
        }
        out = next;
    }
    out
}

fn ground_clause(
    rel: RelId,
    arity: usize,
    body: &Goal,
    universe: &[Term],
    out: &mut Vec<RawRule>,
) -> Result<(), OracleError> {
    for conj in dnf(body)? {
        let mut s = Substitution::new();
        let mut ok = true;
        for l in &conj {
            if let Lit::Unify(a, b) = l {
                match s.unify(a, b) {
                    Some(next) => s = next,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        let mut all_terms: Vec<Term> = (0..arity as u32).map(Term::var).collect();
        for l in &conj {
            match l {
                Lit::Disunify(a, b) => {
                    all_terms.push(a.clone());
                    all_terms.push(b.clone());
                }
                Lit::Call(_, args, _) => all_terms.extend(args.iter().cloned()),
                Lit::Unify(..) => {}
            }
        }
        let vars = free_vars(&Term::list(all_terms), &s);
        'inst: for inst in assignments(&vars, universe, &s) {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for l in &conj {
                match l {
                    Lit::Unify(..) => {}
                    Lit::Disunify(a, b) => {
                        if inst.unify(a, b).is_some() {
                            continue 'inst;
                        }
                    }
                    Lit::Call(r, args, negative) => {
                        let atom = (*r, args.iter().map(|a| inst.walk_star(a)).collect());
                        if *negative {
                            neg.push(atom);
                        } else {
                            pos.push(atom);
                        }
                    }
                }
            }
            let head = (rel, (0..arity as u32).map(|i| inst.walk_star(&Term::var(i))).collect());
            out.push(RawRule { head, pos, neg });
        }
    }
    Ok(())
}

fn ground_constraint(
    spec: &ConstraintSpec,
    p: &Program,
    possible: &BTreeMap<Atom, usize>,
    out: &mut Vec<GroundConstraint>,
) -> Result<(), OracleError> {
    let universe = p.universe();
    // Candidate argument tuples per slot.
    let pools: Vec<Vec<Vec<Term>>> = spec
        .slots
        .iter()
        .map(|slot| {
            if slot.negative {
                let arity = slot.vars.len();
                let mut tuples = vec![vec![]];
                for _ in 0..arity {
                    let mut next = Vec::new();
                    for t in &tuples {
                        for c in universe {
                            let mut t2: Vec<Term> = t.clone();
                            t2.push(c.clone());
                            next.push(t2);
                        }
                    }
                    tuples = next;
                }
                tuples
            } else {
                possible
                    .keys()
                    .filter(|(r, _)| *r == slot.rel)
                    .map(|(_, args)| args.clone())
                    .collect()
            }
        })
        .collect();
    let mut choice = vec![0usize; spec.slots.len()];
    if pools.iter().any(Vec::is_empty) {
        return Ok(());
    }
    loop {
        let tuples: Vec<&Vec<Term>> = choice.iter().zip(&pools).map(|(&i, p)| &p[i]).collect();
        let self_paired = (0..tuples.len()).any(|i| {
            (0..i).any(|j| {
                spec.slots[i].rel == spec.slots[j].rel
                    && spec.slots[i].negative == spec.slots[j].negative
                    && tuples[i] == tuples[j]
            })
        });
        if !self_paired {
            let mut env = vec![None; spec.var_names.len()];
            for (slot, args) in spec.slots.iter().zip(&tuples) {
                for (&v, a) in slot.vars.iter().zip(args.iter()) {
                    env[v] = Some(a.clone());
                }
            }
            let holds = eval_verifier(&spec.verifier, &env, p.symbol_order()).map_err(|source| {
                crate::constraints::ConstraintError::Eval {
                    text: spec.text.clone(),
                    source,
                }
            })?;
            if holds {
                let mut c = GroundConstraint {
                    pos: vec![],
                    neg: vec![],
                };
                for (slot, args) in spec.slots.iter().zip(&tuples) {
                    let key = (slot.rel, (*args).clone());
                    match (slot.negative, possible.get(&key)) {
                        (false, Some(&i)) => c.pos.push(i),
                        (true, Some(&i)) => c.neg.push(i),
                        // `not a` for an underivable atom is simply true.
                        (true, None) => {}
                        (false, None) => unreachable!("positive pools hold derivable atoms"),
                    }
                }
                out.push(c);
            }
        }
        // Advance the mixed-radix counter.
        let mut k = 0;
        loop {
            if k == choice.len() {
                return Ok(());
            }
            choice[k] += 1;
            if choice[k] < pools[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Grounds every clause over the universe, keeps instances whose positive
/// bodies are derivable, and grounds constraints with their verifiers
/// evaluated away. Fails if more than `cap` atoms remain.
pub fn ground_program(p: &Program, cap: usize) -> Result<GroundProgram, OracleError> {
    let universe = p.universe();
    let mut raw = Vec::new();
    for (rel, def) in p.relations().iter().enumerate() {
        for c in &def.clauses {
            ground_clause(rel, def.arity, &c.body, universe, &mut raw)?;
        }
    }
    let mut possible: BTreeSet<Atom> = BTreeSet::new();
    loop {
        let before = possible.len();
        for r in &raw {
            if !possible.contains(&r.head) && r.pos.iter().all(|a| possible.contains(a)) {
                possible.insert(r.head.clone());
            }
        }
        if possible.len() == before {
            break;
        }
    }
    if possible.len() > cap {
        return Err(OracleError::AtomCap {
            count: possible.len(),
            cap,
        });
    }
    let index: BTreeMap<Atom, usize> = possible
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    let names: Vec<Arc<str>> = p
        .relations()
        .iter()
        .map(|r| Arc::from(r.name.as_str()))
        .collect();
    let atoms = possible
        .iter()
        .map(|(r, args)| GroundAtom {
            relation: names[*r].clone(),
            args: args.clone(),
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut rules = Vec::new();
    for r in raw {
        if !r.pos.iter().all(|a| index.contains_key(a)) {
            continue;
        }
        let rule = GroundRule {
            head: index[&r.head],
            pos: r.pos.iter().map(|a| index[a]).collect(),
            neg: r.neg.iter().filter_map(|a| index.get(a).copied()).collect(),
        };
        if seen.insert(rule.clone()) {
            rules.push(rule);
        }
    }
    let mut constraints = Vec::new();
    for spec in p.constraints() {
        ground_constraint(spec, p, &index, &mut constraints)?;
    }
    Ok(GroundProgram {
        atoms,
        rules,
        constraints,
    })
}
