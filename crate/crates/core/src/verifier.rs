//! Boolean/arithmetic expressions used in verifier position of `constrainto`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::frontend::reader::{Form, FormKind};
use crate::term::{Symbol, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Abs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Lt,
    Ge,
    Le,
}

/// Index of a constraint variable inside its environment.
pub type VarIndex = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum VerifierExpr {
    IntLit(i64),
    SymLit(Symbol),
    VarRef(VarIndex),
    Arith(ArithOp, Vec<VerifierExpr>),
    Cmp(CmpOp, Box<VerifierExpr>, Box<VerifierExpr>),
    SymEq(Box<VerifierExpr>, Box<VerifierExpr>),
    SymRank(Box<VerifierExpr>),
    /// Empty conjunction is true.
    And(Vec<VerifierExpr>),
    Or(Vec<VerifierExpr>),
    Not(Box<VerifierExpr>),
}

impl VerifierExpr {
    pub fn var_refs(&self, out: &mut Vec<VarIndex>) {
        match self {
            VerifierExpr::VarRef(i) => {
                if !out.contains(i) {
                    out.push(*i)
                }
            }
            VerifierExpr::Arith(_, args) | VerifierExpr::And(args) | VerifierExpr::Or(args) => {
                args.iter().for_each(|a| a.var_refs(out))
            }
            VerifierExpr::Cmp(_, a, b) | VerifierExpr::SymEq(a, b) => {
                a.var_refs(out);
                b.var_refs(out);
            }
            VerifierExpr::SymRank(a) | VerifierExpr::Not(a) => a.var_refs(out),
            VerifierExpr::IntLit(_) | VerifierExpr::SymLit(_) => {}
        }
    }

    /// Calls `f` on every literal symbol.
    pub fn for_each_symbol(&self, f: &mut impl FnMut(&Symbol)) {
        match self {
            VerifierExpr::SymLit(s) => f(s),
            VerifierExpr::Arith(_, args) | VerifierExpr::And(args) | VerifierExpr::Or(args) => {
                args.iter().for_each(|a| a.for_each_symbol(f))
            }
            VerifierExpr::Cmp(_, a, b) | VerifierExpr::SymEq(a, b) => {
                a.for_each_symbol(f);
                b.for_each_symbol(f);
            }
            VerifierExpr::SymRank(a) | VerifierExpr::Not(a) => a.for_each_symbol(f),
            VerifierExpr::IntLit(_) | VerifierExpr::VarRef(_) => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VerifierError {
    #[error("unknown verifier operator '{0}'")]
    UnknownOperator(String),
    #[error("operator '{op}' expects {expected} argument(s), got {got}")]
    Arity {
        op: String,
        expected: &'static str,
        got: usize,
    },
    #[error("verifier variable '{0}' is not bound by any emitter")]
    UnboundVariable(String),
    #[error("malformed verifier expression: {0}")]
    Malformed(String),
}

fn arity_err(op: &str, expected: &'static str, got: usize) -> VerifierError {
    VerifierError::Arity {
        op: op.to_string(),
        expected,
        got,
    }
}

/// Parses a surface verifier form. `scope` resolves identifiers to constraint
/// variable indices.
pub fn parse_verifier(
    form: &Form,
    scope: &dyn Fn(&str) -> Option<VarIndex>,
) -> Result<VerifierExpr, VerifierError> {
    match &form.kind {
        FormKind::Int(i) => Ok(VerifierExpr::IntLit(*i)),
        FormKind::Ident(name) => scope(name)
            .map(VerifierExpr::VarRef)
            .ok_or_else(|| VerifierError::UnboundVariable(name.clone())),
        FormKind::Quote(inner) => match &inner.kind {
            FormKind::Ident(s) => Ok(VerifierExpr::SymLit(Symbol::new(s))),
            FormKind::Int(i) => Ok(VerifierExpr::IntLit(*i)),
            _ => Err(VerifierError::Malformed(form.to_string())),
        },
        FormKind::List { items, tail: None } if !items.is_empty() => {
            let op = items[0]
                .ident()
                .ok_or_else(|| VerifierError::Malformed(form.to_string()))?;
            let args = items[1..]
                .iter()
                .map(|a| parse_verifier(a, scope))
                .collect::<Result<Vec<_>, _>>()?;
            build(op, args)
        }
        _ => Err(VerifierError::Malformed(form.to_string())),
    }
}

fn build(op: &str, mut args: Vec<VerifierExpr>) -> Result<VerifierExpr, VerifierError> {
    let n = args.len();
    let cmp = |c: CmpOp, mut args: Vec<VerifierExpr>| {
        if args.len() != 2 {
            return Err(arity_err(op, "2", args.len()));
        }
        let b = args.pop().unwrap();
        let a = args.pop().unwrap();
        Ok(VerifierExpr::Cmp(c, Box::new(a), Box::new(b)))
    };
    match op {
        "=" => cmp(CmpOp::Eq, args),
        // `!=` is sugar for a negated equality.
        "!=" => cmp(CmpOp::Eq, args).map(|e| VerifierExpr::Not(Box::new(e))),
        ">" => cmp(CmpOp::Gt, args),
        "<" => cmp(CmpOp::Lt, args),
        ">=" => cmp(CmpOp::Ge, args),
        "<=" => cmp(CmpOp::Le, args),
        "+" | "-" | "*" => {
            if n == 0 {
                return Err(arity_err(op, "at least 1", n));
            }
            let a = match op {
                "+" => ArithOp::Add,
                "-" => ArithOp::Sub,
                _ => ArithOp::Mul,
            };
            Ok(VerifierExpr::Arith(a, args))
        }
        "abs" => {
            if n != 1 {
                return Err(arity_err(op, "1", n));
            }
            Ok(VerifierExpr::Arith(ArithOp::Abs, args))
        }
        "eq?" => {
            if n != 2 {
                return Err(arity_err(op, "2", n));
            }
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            Ok(VerifierExpr::SymEq(Box::new(a), Box::new(b)))
        }
        "symbol-hash" => {
            if n != 1 {
                return Err(arity_err(op, "1", n));
            }
            Ok(VerifierExpr::SymRank(Box::new(args.pop().unwrap())))
        }
        "and" | "or" => {
            if n == 0 {
                return Err(arity_err(op, "at least 1", n));
            }
            Ok(if op == "and" {
                VerifierExpr::And(args)
            } else {
                VerifierExpr::Or(args)
            })
        }
        "not" => {
            if n != 1 {
                return Err(arity_err(op, "1", n));
            }
            Ok(VerifierExpr::Not(Box::new(args.pop().unwrap())))
        }
        other => Err(VerifierError::UnknownOperator(other.to_string())),
    }
}

/// The program's declared symbol universe in code-point lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolOrder {
    sorted: Vec<Symbol>,
}

impl SymbolOrder {
    pub fn new(symbols: impl IntoIterator<Item = Symbol>) -> Self {
        let mut sorted: Vec<Symbol> = symbols.into_iter().collect();
        sorted.sort();
        sorted.dedup();
        SymbolOrder { sorted }
    }

    /// Rank of `s` in the universe; `None` if `s` is not part of it.
    pub fn sym_rank(&self, s: &Symbol) -> Option<i64> {
        self.sorted.binary_search(s).ok().map(|i| i as i64)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.sorted
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound verifier variable #{0}")]
    Unbound(VarIndex),
    #[error("'{op}' expects {expected}, got {found}")]
    Type {
        op: &'static str,
        expected: &'static str,
        found: String,
    },
    #[error("integer overflow in '{0}'")]
    Overflow(&'static str),
    #[error("symbol '{0}' is not in the program's symbol universe")]
    UnknownSymbol(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Value {
    Int(i64),
    Sym(Symbol),
    Bool(bool),
}

impl Value {
    fn describe(&self) -> String {
        match self {
            Value::Int(i) => alloc::format!("integer {i}"),
            Value::Sym(s) => alloc::format!("symbol {s}"),
            Value::Bool(b) => alloc::format!("boolean {b}"),
        }
    }
}

fn type_err(op: &'static str, expected: &'static str, v: &Value) -> EvalError {
    EvalError::Type {
        op,
        expected,
        found: v.describe(),
    }
}

fn arith_name(op: ArithOp) -> &'static str {
    match op {
        ArithOp::Add => "+",
        ArithOp::Sub => "-",
        ArithOp::Mul => "*",
        ArithOp::Abs => "abs",
    }
}

fn cmp_name(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "!=",
        CmpOp::Gt => ">",
        CmpOp::Lt => "<",
        CmpOp::Ge => ">=",
        CmpOp::Le => "<=",
    }
}

struct Evaluator<'a> {
    env: &'a [Option<Term>],
    order: &'a SymbolOrder,
}

impl Evaluator<'_> {
    fn value(&self, e: &VerifierExpr) -> Result<Value, EvalError> {
        match e {
            VerifierExpr::IntLit(i) => Ok(Value::Int(*i)),
            VerifierExpr::SymLit(s) => Ok(Value::Sym(s.clone())),
            VerifierExpr::VarRef(i) => match self.env.get(*i).and_then(Option::as_ref) {
                Some(Term::Int(v)) => Ok(Value::Int(*v)),
                Some(Term::Sym(s)) => Ok(Value::Sym(s.clone())),
                Some(other) => Err(EvalError::Type {
                    op: "variable",
                    expected: "an integer or symbol",
                    found: other.to_string(),
                }),
                None => Err(EvalError::Unbound(*i)),
            },
            VerifierExpr::Arith(op, args) => self.arith(*op, args).map(Value::Int),
            VerifierExpr::SymRank(a) => match self.value(a)? {
                Value::Sym(s) => self
                    .order
                    .sym_rank(&s)
                    .map(Value::Int)
                    .ok_or_else(|| EvalError::UnknownSymbol(s.to_string())),
                other => Err(type_err("symbol-hash", "a symbol", &other)),
            },
            _ => self.truth(e).map(Value::Bool),
        }
    }

    fn int(&self, op: &'static str, e: &VerifierExpr) -> Result<i64, EvalError> {
        match self.value(e)? {
            Value::Int(i) => Ok(i),
            other => Err(type_err(op, "an integer", &other)),
        }
    }

    fn arith(&self, op: ArithOp, args: &[VerifierExpr]) -> Result<i64, EvalError> {
        let name = arith_name(op);
        let first = self.int(name, &args[0])?;
        let overflow = || EvalError::Overflow(name);
        match op {
            ArithOp::Abs => first.checked_abs().ok_or_else(overflow),
            ArithOp::Sub if args.len() == 1 => first.checked_neg().ok_or_else(overflow),
            _ => args[1..].iter().try_fold(first, |acc, a| {
                let v = self.int(name, a)?;
                match op {
                    ArithOp::Add => acc.checked_add(v),
                    ArithOp::Sub => acc.checked_sub(v),
                    _ => acc.checked_mul(v),
                }
                .ok_or_else(overflow)
            }),
        }
    }

    fn truth(&self, e: &VerifierExpr) -> Result<bool, EvalError> {
        match e {
            VerifierExpr::And(args) => {
                for a in args {
                    if !self.truth(a)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            VerifierExpr::Or(args) => {
                for a in args {
                    if self.truth(a)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            VerifierExpr::Not(a) => Ok(!self.truth(a)?),
            VerifierExpr::Cmp(op, a, b) => {
                let name = cmp_name(*op);
                let x = self.int(name, a)?;
                let y = self.int(name, b)?;
                Ok(match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Gt => x > y,
                    CmpOp::Lt => x < y,
                    CmpOp::Ge => x >= y,
                    CmpOp::Le => x <= y,
                })
            }
            VerifierExpr::SymEq(a, b) => match (self.value(a)?, self.value(b)?) {
                (Value::Sym(x), Value::Sym(y)) => Ok(x == y),
                (Value::Sym(_), other) | (other, _) => Err(type_err("eq?", "a symbol", &other)),
            },
            other => match self.value(other)? {
                Value::Bool(b) => Ok(b),
                v => Err(type_err("boolean context", "a boolean", &v)),
            },
        }
    }
}

/// Evaluates `e` over a ground environment. `true` means the constraint is violated.
pub fn eval_verifier(
    e: &VerifierExpr,
    env: &[Option<Term>],
    order: &SymbolOrder,
) -> Result<bool, EvalError> {
    Evaluator { env, order }.truth(e)
}

/// Rank of a symbol under `order`; exposed for direct use and tests.
pub fn sym_rank(order: &SymbolOrder, s: &Symbol) -> Result<i64, EvalError> {
    order
        .sym_rank(s)
        .ok_or_else(|| EvalError::UnknownSymbol(s.to_string()))
}
