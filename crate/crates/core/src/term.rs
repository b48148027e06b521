//! Logic terms, persistent substitutions, unification and reification.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rpds::RedBlackTreeMapSync;

/// Identifier of a logic variable. Unique within one query's resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

/// An interned-by-value symbol. Ordering is code-point lexicographic on the name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(VarId),
    Sym(Symbol),
    Int(i64),
    Pair(Arc<(Term, Term)>),
    Nil,
}

impl Term {
    pub fn var(id: u32) -> Term {
        Term::Var(VarId(id))
    }

    pub fn sym(name: &str) -> Term {
        Term::Sym(Symbol::new(name))
    }

    pub fn int(v: i64) -> Term {
        Term::Int(v)
    }

    pub fn pair(head: Term, tail: Term) -> Term {
        Term::Pair(Arc::new((head, tail)))
    }

    /// Builds a proper list terminated by `Nil`.
    pub fn list<I>(items: I) -> Term
    where
        I: IntoIterator<Item = Term>,
        I::IntoIter: DoubleEndedIterator,
    {
        items
            .into_iter()
            .rev()
            .fold(Term::Nil, |tail, head| Term::pair(head, tail))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// True if the term contains no variables (without consulting a substitution).
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Pair(p) => p.0.is_ground() && p.1.is_ground(),
            _ => true,
        }
    }

    /// True for symbols, integers and the empty list.
    pub fn is_atomic(&self) -> bool {
        matches!(self, Term::Sym(_) | Term::Int(_) | Term::Nil)
    }

    /// Calls `f` on every atomic leaf of the term (symbols and integers).
    pub fn for_each_constant(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Term::Sym(_) | Term::Int(_) => f(self),
            Term::Pair(p) => {
                p.0.for_each_constant(f);
                p.1.for_each_constant(f);
            }
            _ => {}
        }
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Self {
        Term::Int(v)
    }
}

impl From<&str> for Term {
    fn from(s: &str) -> Self {
        Term::sym(s)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Scheme-style printing: `(1 2 3)`, `(a . b)`, `()`, and `_v7` for raw variables.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "_v{}", v.0),
            Term::Sym(s) => f.write_str(s.as_str()),
            Term::Int(i) => write!(f, "{i}"),
            Term::Nil => f.write_str("()"),
            Term::Pair(p) => {
                f.write_str("(")?;
                fmt::Display::fmt(&p.0, f)?;
                let mut rest = &p.1;
                loop {
                    match rest {
                        Term::Nil => break,
                        Term::Pair(q) => {
                            f.write_str(" ")?;
                            fmt::Display::fmt(&q.0, f)?;
                            rest = &q.1;
                        }
                        other => {
                            f.write_str(" . ")?;
                            fmt::Display::fmt(other, f)?;
                            break;
                        }
                    }
                }
                f.write_str(")")
            }
        }
    }
}

/// Persistent triangular substitution. Extending returns a new value and
/// leaves the original untouched, so sibling branches can share structure.
#[derive(Clone, Default)]
pub struct Substitution {
    map: RedBlackTreeMapSync<VarId, Term>,
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.map.iter()).finish()
    }
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.size()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn lookup(&self, v: VarId) -> Option<&Term> {
        self.map.get(&v)
    }

    /// Binds `v` to `t` without any check. Callers must guarantee `v` is unbound
    /// and that the binding does not create a cycle.
    pub fn bind_unchecked(&self, v: VarId, t: Term) -> Substitution {
        Substitution {
            map: self.map.insert(v, t),
        }
    }

    /// Binds `v` to `t`, refusing if `v` occurs in `t`.
    pub fn extend(&self, v: VarId, t: Term) -> Option<Substitution> {
        if self.occurs(v, &t) {
            None
        } else {
            Some(self.bind_unchecked(v, t))
        }
    }

    pub fn walk(&self, t: &Term) -> Term {
        let mut cur = t;
        while let Term::Var(v) = cur {
            match self.map.get(v) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur.clone()
    }

    /// Recursive walk into pairs.
    pub fn walk_star(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Pair(p) => Term::pair(self.walk_star(&p.0), self.walk_star(&p.1)),
            other => other,
        }
    }

    pub fn is_ground(&self, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(_) => false,
            Term::Pair(p) => self.is_ground(&p.0) && self.is_ground(&p.1),
            _ => true,
        }
    }

    fn occurs(&self, v: VarId, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => w == v,
            Term::Pair(p) => self.occurs(v, &p.0) || self.occurs(v, &p.1),
            _ => false,
        }
    }

    pub fn unify(&self, a: &Term, b: &Term) -> Option<Substitution> {
        let a = self.walk(a);
        let b = self.walk(b);
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => Some(self.clone()),
            (Term::Var(x), _) => self.extend(*x, b),
            (_, Term::Var(y)) => self.extend(*y, a),
            (Term::Pair(p), Term::Pair(q)) => {
                let s = self.unify(&p.0, &q.0)?;
                s.unify(&p.1, &q.1)
            }
            _ if a == b => Some(self.clone()),
            _ => None,
        }
    }

    /// Fully walks `t` and renames each distinct unbound variable `_.0`, `_.1`, ...
    /// in first-encounter (left to right) order.
    pub fn reify(&self, t: &Term) -> Term {
        let resolved = self.walk_star(t);
        let mut names = BTreeMap::new();
        rename_vars(&resolved, &mut names)
    }
}

fn rename_vars(t: &Term, names: &mut BTreeMap<VarId, usize>) -> Term {
    match t {
        Term::Var(v) => {
            let next = names.len();
            let n = *names.entry(*v).or_insert(next);
            Term::Sym(Symbol::new(&reified_name(n)))
        }
        Term::Pair(p) => {
            let head = rename_vars(&p.0, names);
            let tail = rename_vars(&p.1, names);
            Term::pair(head, tail)
        }
        other => other.clone(),
    }
}

fn reified_name(n: usize) -> String {
    format!("_.{n}")
}

/// Unbound variables of `t` under `s`, in first-encounter order without duplicates.
pub fn free_vars(t: &Term, s: &Substitution) -> Vec<VarId> {
    fn go(t: &Term, s: &Substitution, out: &mut Vec<VarId>) {
        match s.walk(t) {
            Term::Var(v) => {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
            Term::Pair(p) => {
                go(&p.0, s, out);
                go(&p.1, s, out);
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    go(t, s, &mut out);
    out
}
