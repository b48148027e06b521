//! Branch-local resolution state and the assumption table.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rpds::{ListSync, RedBlackTreeMapSync};

use crate::constraints::HandlerStore;
use crate::program::RelId;
use crate::term::{Substitution, Term};

/// A ground atom: relation plus argument tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomKey {
    pub rel: RelId,
    pub args: Arc<[Term]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Status {
    TrueProven,
    TrueInProgress,
    FalseAssumed,
    FalseInProgress,
}

impl Status {
    pub fn is_true(self) -> bool {
        matches!(self, Status::TrueProven | Status::TrueInProgress)
    }

    pub fn in_progress(self) -> bool {
        matches!(self, Status::TrueInProgress | Status::FalseInProgress)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub status: Status,
    /// Negative frames on the path when the call was entered.
    pub neg_at: u32,
    /// For a proven atom: positive in-progress atoms its proof assumed with no
    /// negation in between. Reusing the atom reuses those assumptions.
    pub hyps: Option<Arc<[AtomKey]>>,
}

impl Entry {
    pub fn new(status: Status, neg_at: u32) -> Entry {
        Entry {
            status,
            neg_at,
            hyps: None,
        }
    }
}

/// Persistent map from ground atoms to their truth status on this branch.
#[derive(Clone, Debug, Default)]
pub struct AssumptionTable {
    map: RedBlackTreeMapSync<AtomKey, Entry>,
}

impl AssumptionTable {
    pub fn get(&self, key: &AtomKey) -> Option<&Entry> {
        self.map.get(key)
    }

    pub fn set(&self, key: AtomKey, entry: Entry) -> AssumptionTable {
        AssumptionTable {
            map: self.map.insert(key, entry),
        }
    }

    pub fn len(&self) -> usize {
        self.map.size()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AtomKey, &Entry)> {
        self.map.iter()
    }

    /// Argument tuples of `rel` whose status is exactly `status`.
    pub fn with_status(&self, rel: RelId, status: Status) -> Vec<Arc<[Term]>> {
        let lo = AtomKey {
            rel,
            args: Arc::from(Vec::new()),
        };
        let hi = AtomKey {
            rel: rel + 1,
            args: Arc::from(Vec::new()),
        };
        self.map
            .range(lo..hi)
            .filter(|(_, e)| e.status == status)
            .map(|(k, _)| k.args.clone())
            .collect()
    }
}

/// Everything a resolution branch carries. Cloning is cheap; every field is
/// persistent.
#[derive(Clone, Debug, Default)]
pub struct State {
    pub subst: Substitution,
    pub table: AssumptionTable,
    pub store: HandlerStore,
    pub next_var: u32,
    pub(crate) depth: u32,
    pub(crate) neg_depth: u32,
    /// Uses of positive in-progress atoms, newest first, each with the
    /// negation depth at the point of use.
    pub(crate) hyps: ListSync<(AtomKey, u32)>,
    /// Set while completing a candidate answer.
    pub(crate) finalizing: bool,
}
