//! Reducts, least models and exhaustive stable-model search.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::{GroundAtom, GroundProgram, GroundRule, Interpretation, OracleError};

/// Hard limit so interpretations fit a `u64` with room for the range end.
const MAX_ATOMS: usize = 63;

/// The Gelfond-Lifschitz reduct: drop rules blocked by `m`, then drop the
/// remaining negative literals. Constraints are not part of the reduct.
pub fn reduct(g: &GroundProgram, m: Interpretation) -> GroundProgram {
    GroundProgram {
        atoms: g.atoms.clone(),
        rules: g
            .rules
            .iter()
            .filter(|r| r.neg.iter().all(|&a| !m.contains(a)))
            .map(|r| GroundRule {
                head: r.head,
                pos: r.pos.clone(),
                neg: vec![],
            })
            .collect(),
        constraints: vec![],
    }
}

/// Least model of a negation-free program.
pub fn minimal_model(g: &GroundProgram) -> Result<Interpretation, OracleError> {
    if !g.is_negation_free() {
        return Err(OracleError::NotNegationFree);
    }
    let mut m = Interpretation(0);
    loop {
        let next = g
            .rules
            .iter()
            .filter(|r| r.pos.iter().all(|&a| m.contains(a)))
            .fold(m, |acc, r| acc.with(r.head));
        if next == m {
            return Ok(m);
        }
        m = next;
    }
}

struct MaskRule {
    head: u64,
    pos: u64,
    neg: u64,
}

/// A ground program compiled to bitmasks for fast stability checks.
pub struct StableModels {
    atoms: usize,
    rules: Vec<MaskRule>,
    constraints: Vec<(u64, u64)>,
}

fn mask(ix: &[usize]) -> u64 {
    ix.iter().fold(0, |m, &i| m | (1 << i))
}

impl StableModels {
    pub fn new(g: &GroundProgram) -> Result<Self, OracleError> {
        if g.atoms.len() > MAX_ATOMS {
            return Err(OracleError::AtomCap {
                count: g.atoms.len(),
                cap: MAX_ATOMS,
            });
        }
        Ok(StableModels {
            atoms: g.atoms.len(),
            rules: g
                .rules
                .iter()
                .map(|r| MaskRule {
                    head: 1 << r.head,
                    pos: mask(&r.pos),
                    neg: mask(&r.neg),
                })
                .collect(),
            constraints: g
                .constraints
                .iter()
                .map(|c| (mask(&c.pos), mask(&c.neg)))
                .collect(),
        })
    }

    /// Number of interpretations, `2^atoms`.
    pub fn space(&self) -> u64 {
        1 << self.atoms
    }

    pub fn is_stable(&self, m: u64) -> bool {
        // Cheap necessary conditions first: `m` closed under the reduct, and
        // every atom of `m` has a supporting rule.
        let mut supported = 0;
        for r in &self.rules {
            if r.neg & m == 0 && r.pos & m == r.pos {
                if r.head & m == 0 {
                    return false;
                }
                supported |= r.head;
            }
        }
        if supported != m {
            return false;
        }
        let mut lfp = 0;
        loop {
            let mut next = lfp;
            for r in &self.rules {
                if r.neg & m == 0 && r.pos & next == r.pos {
                    next |= r.head;
                }
            }
            if next == lfp {
                return lfp == m;
            }
            lfp = next;
        }
    }

    pub fn satisfies_constraints(&self, m: u64) -> bool {
        self.constraints
            .iter()
            .all(|&(pos, neg)| !(pos & m == pos && neg & m == 0))
    }

    /// Stable models within `range`, ascending. With `filter`, models that
    /// violate a ground constraint are dropped.
    pub fn scan(&self, range: Range<u64>, filter: bool) -> Vec<Interpretation> {
        let end = range.end.min(self.space());
        (range.start..end)
            .filter(|&m| self.is_stable(m) && (!filter || self.satisfies_constraints(m)))
            .map(Interpretation)
            .collect()
    }
}

pub fn is_stable(g: &GroundProgram, m: Interpretation) -> Result<bool, OracleError> {
    Ok(StableModels::new(g)?.is_stable(m.0))
}

/// Stable models of the rules alone, ignoring constraints.
pub fn stable_models_unfiltered(g: &GroundProgram) -> Result<Vec<Interpretation>, OracleError> {
    let s = StableModels::new(g)?;
    Ok(s.scan(0..s.space(), false))
}

/// Stable models whose bit pattern lies in `range`, constraints applied.
pub fn stable_models_in(
    g: &GroundProgram,
    range: Range<u64>,
) -> Result<Vec<Interpretation>, OracleError> {
    Ok(StableModels::new(g)?.scan(range, true))
}

/// Stable models satisfying every ground constraint.
pub fn stable_models(g: &GroundProgram) -> Result<Vec<Interpretation>, OracleError> {
    let s = StableModels::new(g)?;
    Ok(s.scan(0..s.space(), true))
}

pub fn filter_by_constraints(g: &GroundProgram, models: &[Interpretation]) -> Vec<Interpretation> {
    models
        .iter()
        .copied()
        .filter(|m| {
            g.constraints.iter().all(|c| {
                !(c.pos.iter().all(|&a| m.contains(a)) && c.neg.iter().all(|&a| !m.contains(a)))
            })
        })
        .collect()
}

/// Rewrites each constraint `:- body` as `fail :- body, not fail`, with one
/// shared fresh atom. The result has the same stable models (plus nothing on
/// the fail atom) as filtering.
pub fn encode_constraints(g: &GroundProgram) -> GroundProgram {
    let mut out = GroundProgram {
        atoms: g.atoms.clone(),
        rules: g.rules.clone(),
        constraints: vec![],
    };
    if g.constraints.is_empty() {
        return out;
    }
    let taken: BTreeSet<&str> = g.atoms.iter().map(|a| &*a.relation).collect();
    let mut name = alloc::string::String::from("fail");
    let mut k = 0;
    while taken.contains(name.as_str()) {
        k += 1;
        name = format!("fail_{k}");
    }
    let fail = out.atoms.len();
    out.atoms.push(GroundAtom {
        relation: Arc::from(name.as_str()),
        args: vec![],
    });
    for c in &g.constraints {
        let mut neg = c.neg.clone();
        neg.push(fail);
        out.rules.push(GroundRule {
            head: fail,
            pos: c.pos.clone(),
            neg,
        });
    }
    out
}

/// Distinct restrictions of `models` to `mask`, ascending.
pub fn project(models: &[Interpretation], mask: u64) -> Vec<Interpretation> {
    let set: BTreeSet<u64> = models.iter().map(|m| m.0 & mask).collect();
    set.into_iter().map(Interpretation).collect()
}
