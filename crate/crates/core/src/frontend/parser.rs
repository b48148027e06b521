//! Compiles surface forms into a [`Program`] and [`Query`] values.
//!
//! ```text
//! (defineo (name p ...) goal ...)
//! (constrainto [emitter ...] [verifier ...])
//! (run n (q) goal ...)   (run* (q) goal ...)
//! ```
//! Goals: `(== a b)`, `(conde [g ...] ...)`, `(fresh (x ...) g ...)`,
//! `(noto (r a ...))`, `(r a ...)`, `succeed`, `fail`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::reader::{read, read_one, Form, FormKind, ReadError, Span};
use crate::constraints::{compile_constraint, ConstraintError, EmitterPattern};
use crate::program::{Goal, Program, ProgramBuilder, ProgramError, Query};
use crate::term::Term;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("{span}: {message}")]
    Syntax { span: Span, message: String },
    #[error("{span}: {source}")]
    Program { span: Span, source: ProgramError },
    #[error("{span}: {source}")]
    Constraint {
        span: Span,
        source: ConstraintError,
    },
    #[error(transparent)]
    Unsafe(ProgramError),
}

fn syntax(form: &Form, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        span: form.span,
        message: message.into(),
    }
}

const KEYWORDS: [&str; 8] = [
    "==", "conde", "fresh", "noto", "defineo", "constrainto", "run", "run*",
];

/// Lexically scoped names for one clause or query.
struct Scope {
    names: Vec<String>,
    /// Visible bindings, innermost last.
    visible: Vec<(String, u32)>,
}

impl Scope {
    fn new() -> Self {
        Scope {
            names: Vec::new(),
            visible: Vec::new(),
        }
    }

    fn bind(&mut self, name: &str) -> u32 {
        let slot = self.names.len() as u32;
        self.names.push(name.to_string());
        self.visible.push((name.to_string(), slot));
        slot
    }

    fn lookup(&self, name: &str) -> Option<u32> {
        self.visible
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|&(_, s)| s)
    }
}

/// Resolves relation names while compiling bodies.
trait Relations {
    fn resolve(&self, name: &str, arity: usize) -> Result<usize, ProgramError>;
}

impl Relations for ProgramBuilder {
    fn resolve(&self, name: &str, arity: usize) -> Result<usize, ProgramError> {
        match self.lookup(name) {
            None => Err(ProgramError::UnknownRelation(name.to_string())),
            Some((id, a)) if a == arity => Ok(id),
            Some((_, a)) => Err(ProgramError::CallArity {
                name: name.to_string(),
                expected: a,
                got: arity,
            }),
        }
    }
}

impl Relations for Program {
    fn resolve(&self, name: &str, arity: usize) -> Result<usize, ProgramError> {
        self.resolve_call(name, arity)
    }
}

fn list_items<'f>(form: &'f Form, what: &str) -> Result<&'f [Form], ParseError> {
    form.list()
        .ok_or_else(|| syntax(form, alloc::format!("expected a list for {what}, found {form}")))
}

fn identifier<'f>(form: &'f Form, what: &str) -> Result<&'f str, ParseError> {
    form.ident()
        .filter(|s| !KEYWORDS.contains(s))
        .ok_or_else(|| syntax(form, alloc::format!("expected an identifier for {what}, found {form}")))
}

/// Quoted data: identifiers become symbols.
fn datum(form: &Form) -> Result<Term, ParseError> {
    match &form.kind {
        FormKind::Int(i) => Ok(Term::Int(*i)),
        FormKind::Ident(s) => Ok(Term::sym(s)),
        FormKind::List { items, tail } => {
            let mut t = match tail {
                Some(t) => datum(t)?,
                None => Term::Nil,
            };
            for item in items.iter().rev() {
                t = Term::pair(datum(item)?, t);
            }
            Ok(t)
        }
        _ => Err(syntax(form, "nested quotation is not supported")),
    }
}

fn compile_term(form: &Form, scope: &Scope) -> Result<Term, ParseError> {
    match &form.kind {
        FormKind::Int(i) => Ok(Term::Int(*i)),
        FormKind::Ident(name) => scope
            .lookup(name)
            .map(Term::var)
            .ok_or_else(|| syntax(form, alloc::format!("unbound identifier '{name}'; introduce it with fresh"))),
        FormKind::Quote(inner) => datum(inner),
        FormKind::Quasiquote(inner) => quasi(inner, scope),
        FormKind::List { items, tail: None } if items.is_empty() => Ok(Term::Nil),
        FormKind::List { .. } => Err(syntax(
            form,
            "lists in term position must be quoted or quasiquoted",
        )),
        FormKind::Unquote(_) => Err(syntax(form, "unquote outside quasiquote")),
    }
}

fn quasi(form: &Form, scope: &Scope) -> Result<Term, ParseError> {
    match &form.kind {
        FormKind::Unquote(inner) => compile_term(inner, scope),
        FormKind::List { items, tail } => {
            let mut t = match tail {
                Some(t) => quasi(t, scope)?,
                None => Term::Nil,
            };
            for item in items.iter().rev() {
                t = Term::pair(quasi(item, scope)?, t);
            }
            Ok(t)
        }
        FormKind::Int(_) | FormKind::Ident(_) => datum(form),
        _ => Err(syntax(form, "nested quotation is not supported")),
    }
}

fn compile_goals(
    forms: &[Form],
    scope: &mut Scope,
    rels: &dyn Relations,
) -> Result<Goal, ParseError> {
    let goals = forms
        .iter()
        .map(|f| compile_goal(f, scope, rels))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Goal::conj(goals))
}

fn compile_call(
    form: &Form,
    scope: &mut Scope,
    rels: &dyn Relations,
    negative: bool,
) -> Result<Goal, ParseError> {
    let items = list_items(form, "a relation call")?;
    let name = items
        .first()
        .and_then(Form::ident)
        .ok_or_else(|| syntax(form, alloc::format!("expected a relation call, found {form}")))?;
    if KEYWORDS.contains(&name) {
        return Err(syntax(
            form,
            alloc::format!("noto applies only to relation calls, found ({name} ...)"),
        ));
    }
    let rel = rels
        .resolve(name, items.len() - 1)
        .map_err(|source| ParseError::Program {
            span: form.span,
            source,
        })?;
    let args = items[1..]
        .iter()
        .map(|a| compile_term(a, scope))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Goal::Call {
        rel,
        args,
        negative,
    })
}

fn compile_goal(form: &Form, scope: &mut Scope, rels: &dyn Relations) -> Result<Goal, ParseError> {
    match form.ident() {
        Some("succeed") => return Ok(Goal::Succeed),
        Some("fail") => return Ok(Goal::Fail),
        Some(_) => return Err(syntax(form, alloc::format!("expected a goal, found {form}"))),
        None => {}
    }
    let items = list_items(form, "a goal")?;
    let head = items
        .first()
        .and_then(Form::ident)
        .ok_or_else(|| syntax(form, alloc::format!("expected a goal, found {form}")))?;
    let args = &items[1..];
    match head {
        "==" => {
            if args.len() != 2 {
                return Err(syntax(form, "== takes exactly two terms"));
            }
            Ok(Goal::Unify(
                compile_term(&args[0], scope)?,
                compile_term(&args[1], scope)?,
            ))
        }
        "conde" => {
            if args.is_empty() {
                return Err(syntax(form, "conde needs at least one clause"));
            }
            let branches = args
                .iter()
                .map(|clause| {
                    let goals = list_items(clause, "a conde clause")?;
                    if goals.is_empty() {
                        return Err(syntax(clause, "empty conde clause"));
                    }
                    compile_goals(goals, scope, rels)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Goal::Disj(branches))
        }
        "fresh" => {
            let Some((vars, body)) = args.split_first() else {
                return Err(syntax(form, "fresh needs a variable list"));
            };
            let names = list_items(vars, "fresh variables")?;
            if names.is_empty() {
                return Err(syntax(vars, "fresh needs at least one variable"));
            }
            let mark = scope.visible.len();
            let mut slots = Vec::with_capacity(names.len());
            for n in names {
                slots.push(scope.bind(identifier(n, "a fresh variable")?));
            }
            let body = compile_goals(body, scope, rels);
            scope.visible.truncate(mark);
            Ok(Goal::Fresh(slots, Box::new(body?)))
        }
        "noto" => {
            if args.len() != 1 {
                return Err(syntax(form, "noto takes exactly one relation call"));
            }
            if args[0].ident().is_some() {
                return Err(syntax(&args[0], "noto applies only to relation calls"));
            }
            compile_call(&args[0], scope, rels, true)
        }
        "defineo" | "constrainto" | "run" | "run*" => Err(syntax(
            form,
            alloc::format!("'{head}' is only allowed at top level"),
        )),
        _ => compile_call(form, scope, rels, false),
    }
}

fn definition_head(form: &Form) -> Result<(&str, &[Form]), ParseError> {
    let items = form.list().unwrap_or(&[]);
    let head = items
        .get(1)
        .ok_or_else(|| syntax(form, "defineo needs a head (name params ...)"))?;
    let head_items = list_items(head, "a defineo head")?;
    let (name, params) = head_items
        .split_first()
        .ok_or_else(|| syntax(head, "empty defineo head"))?;
    Ok((identifier(name, "a relation name")?, params))
}

fn emitter(form: &Form) -> Result<EmitterPattern, ParseError> {
    let (negative, call) = if form.head_ident() == Some("noto") {
        match form.list() {
            Some([_, inner]) => (true, inner),
            _ => return Err(syntax(form, "noto takes exactly one relation pattern")),
        }
    } else {
        (false, form)
    };
    let items = list_items(call, "an emitter")?;
    let (name, args) = items
        .split_first()
        .ok_or_else(|| syntax(call, "empty emitter"))?;
    let relation = identifier(name, "an emitter relation")?.to_string();
    let args = args
        .iter()
        .map(|a| identifier(a, "an emitter argument").map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EmitterPattern {
        relation,
        negative,
        args,
    })
}

/// Builds a program from top-level `defineo` and `constrainto` forms.
/// Relations may be used before their definition.
pub fn parse_program(forms: &[Form]) -> Result<Program, ParseError> {
    let mut b = ProgramBuilder::new();
    for f in forms {
        match f.head_ident() {
            Some("defineo") => {
                let (name, params) = definition_head(f)?;
                b.declare(name, params.len())
                    .map_err(|source| ParseError::Program {
                        span: f.span,
                        source,
                    })?;
            }
            Some("constrainto") => {}
            _ => {
                return Err(syntax(
                    f,
                    alloc::format!("expected defineo or constrainto at top level, found {f}"),
                ))
            }
        }
    }
    for f in forms {
        let items = f.list().unwrap_or(&[]);
        if f.head_ident() == Some("defineo") {
            let (name, params) = definition_head(f)?;
            let mut scope = Scope::new();
            for p in params {
                let p_name = identifier(p, "a parameter")?;
                if scope.lookup(p_name).is_some() {
                    return Err(syntax(p, alloc::format!("duplicate parameter '{p_name}'")));
                }
                scope.bind(p_name);
            }
            let body = compile_goals(&items[2..], &mut scope, &b)?;
            let (rel, _) = b.lookup(name).expect("declared in first pass");
            b.add_clause(rel, scope.names, body);
        } else {
            let [_, emitters, verifiers] = items else {
                return Err(syntax(f, "constrainto takes an emitter list and a verifier list"));
            };
            let emitters = list_items(emitters, "constrainto emitters")?
                .iter()
                .map(emitter)
                .collect::<Result<Vec<_>, _>>()?;
            let verifiers = list_items(verifiers, "constrainto verifiers")?;
            let resolve = |name: &str| b.lookup(name);
            let spec = compile_constraint(&emitters, verifiers, &resolve, f.to_string())
                .map_err(|source| ParseError::Constraint {
                    span: f.span,
                    source,
                })?;
            b.add_constraint(spec);
        }
    }
    b.build().map_err(ParseError::Unsafe)
}

pub fn parse_program_text(text: &str) -> Result<Program, ParseError> {
    parse_program(&read(text)?)
}

/// Compiles `(run n (q) goal ...)` or `(run* (q) goal ...)` against `program`.
pub fn parse_query(form: &Form, program: &Program) -> Result<Query, ParseError> {
    let items = list_items(form, "a query")?;
    let (limit, rest) = match items.first().and_then(Form::ident) {
        Some("run*") => (None, &items[1..]),
        Some("run") => {
            let n = items
                .get(1)
                .ok_or_else(|| syntax(form, "run needs an answer count"))?;
            match n.kind {
                FormKind::Int(k) if k > 0 => (Some(k as usize), &items[2..]),
                _ => return Err(syntax(n, alloc::format!("answer count must be a positive integer, found {n}"))),
            }
        }
        _ => return Err(syntax(form, alloc::format!("expected (run n (q) ...) or (run* (q) ...), found {form}"))),
    };
    let (vars, goals) = rest
        .split_first()
        .ok_or_else(|| syntax(form, "query needs a (q) variable list"))?;
    let var = match list_items(vars, "the query variable")? {
        [v] => identifier(v, "the query variable")?,
        _ => return Err(syntax(vars, "query takes exactly one query variable")),
    };
    let mut scope = Scope::new();
    scope.bind(var);
    let goal = compile_goals(goals, &mut scope, program)?;
    Ok(Query {
        limit,
        locals: scope.names.len() as u32,
        local_names: scope.names,
        goal,
    })
}

pub fn parse_query_text(text: &str, program: &Program) -> Result<Query, ParseError> {
    parse_query(&read_one(text)?, program)
}
