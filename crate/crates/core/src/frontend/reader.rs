//! Tokenizer and reader for the s-expression surface syntax.
//!
//! Parentheses and square brackets are interchangeable delimiters, but each
//! opener must be closed by its own kind. `;` starts a comment that runs to
//! the end of the line. The reader understands `'x`, `` `x `` and `,x`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// 1-based line and column of the first character of a form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug)]
pub struct Form {
    pub kind: FormKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FormKind {
    Int(i64),
    Ident(String),
    /// A list; `tail` is set for dotted lists `(a b . c)`.
    List {
        items: Vec<Form>,
        tail: Option<Box<Form>>,
    },
    Quote(Box<Form>),
    Quasiquote(Box<Form>),
    Unquote(Box<Form>),
}

/// Structural equality; source positions are ignored.
impl PartialEq for Form {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Form {
    pub fn new(kind: FormKind) -> Self {
        Form {
            kind,
            span: Span::default(),
        }
    }

    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            FormKind::Ident(s) => Some(s),
            _ => None,
        }
    }

    /// Items of a proper list.
    pub fn list(&self) -> Option<&[Form]> {
        match &self.kind {
            FormKind::List { items, tail: None } => Some(items),
            _ => None,
        }
    }

    /// The operator symbol of a proper, non-empty list whose head is an identifier.
    pub fn head_ident(&self) -> Option<&str> {
        self.list().and_then(|items| items.first()).and_then(Form::ident)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FormKind::Int(i) => write!(f, "{i}"),
            FormKind::Ident(s) => f.write_str(s),
            FormKind::Quote(x) => write!(f, "'{x}"),
            FormKind::Quasiquote(x) => write!(f, "`{x}"),
            FormKind::Unquote(x) => write!(f, ",{x}"),
            FormKind::List { items, tail } => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                if let Some(t) = tail {
                    write!(f, " . {t}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReadError {
    #[error("{0}: unexpected end of input, unclosed '{1}'")]
    Unclosed(Span, char),
    #[error("{0}: unexpected closing '{1}'")]
    UnexpectedClose(Span, char),
    #[error("{0}: closing '{1}' does not match opening '{2}'")]
    Mismatched(Span, char, char),
    #[error("{0}: misplaced dot")]
    StrayDot(Span),
    #[error("{0}: '{1}' must be followed by a form")]
    DanglingPrefix(Span, char),
    #[error("{0}: integer literal out of range: {1}")]
    IntOutOfRange(Span, String),
    #[error("expected exactly one form, found {0}")]
    FormCount(usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open(char),
    Close(char),
    Dot,
    Prefix(char),
    Atom(String),
}

struct Lexer<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    line: u32,
    col: u32,
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | ';' | '\'' | '`' | ',' | '"')
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn next_tok(&mut self) -> Option<(Tok, Span)> {
        loop {
            let c = *self.chars.peek()?;
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
        let span = Span {
            line: self.line,
            col: self.col,
        };
        let c = self.bump()?;
        let tok = match c {
            '(' | '[' => Tok::Open(c),
            ')' | ']' => Tok::Close(c),
            '\'' | '`' | ',' => Tok::Prefix(c),
            _ => {
                let mut s = String::new();
                s.push(c);
                while let Some(&n) = self.chars.peek() {
                    if is_delimiter(n) {
                        break;
                    }
                    s.push(n);
                    self.bump();
                }
                if s == "." {
                    Tok::Dot
                } else {
                    Tok::Atom(s)
                }
            }
        };
        Some((tok, span))
    }
}

fn closer_of(open: char) -> char {
    if open == '(' {
        ')'
    } else {
        ']'
    }
}

fn atom_form(s: String, span: Span) -> Result<Form, ReadError> {
    let digits = s.strip_prefix('-').unwrap_or(&s);
    let kind = if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        match s.parse::<i64>() {
            Ok(v) => FormKind::Int(v),
            Err(_) => return Err(ReadError::IntOutOfRange(span, s)),
        }
    } else {
        FormKind::Ident(s)
    };
    Ok(Form { kind, span })
}

struct Reader<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Tok, Span)>,
}

impl<'a> Reader<'a> {
    fn peek(&mut self) -> Option<&(Tok, Span)> {
        if self.peeked.is_none() {
            self.peeked = self.lexer.next_tok();
        }
        self.peeked.as_ref()
    }

    fn next(&mut self) -> Option<(Tok, Span)> {
        self.peek();
        self.peeked.take()
    }

    fn read_form(&mut self, tok: Tok, span: Span) -> Result<Form, ReadError> {
        match tok {
            Tok::Atom(s) => atom_form(s, span),
            Tok::Dot => Err(ReadError::StrayDot(span)),
            Tok::Close(c) => Err(ReadError::UnexpectedClose(span, c)),
            Tok::Prefix(p) => {
                let (t, sp) = self.next().ok_or(ReadError::DanglingPrefix(span, p))?;
                if matches!(t, Tok::Close(_) | Tok::Dot) {
                    return Err(ReadError::DanglingPrefix(span, p));
                }
                let inner = Box::new(self.read_form(t, sp)?);
                let kind = match p {
                    '\'' => FormKind::Quote(inner),
                    '`' => FormKind::Quasiquote(inner),
                    _ => FormKind::Unquote(inner),
                };
                Ok(Form { kind, span })
            }
            Tok::Open(open) => {
                let mut items = Vec::new();
                let mut tail = None;
                loop {
                    let (t, sp) = self.next().ok_or(ReadError::Unclosed(span, open))?;
                    match t {
                        Tok::Close(c) if c == closer_of(open) => break,
                        Tok::Close(c) => return Err(ReadError::Mismatched(sp, c, open)),
                        Tok::Dot => {
                            if items.is_empty() || tail.is_some() {
                                return Err(ReadError::StrayDot(sp));
                            }
                            let (t2, sp2) =
                                self.next().ok_or(ReadError::Unclosed(span, open))?;
                            if matches!(t2, Tok::Close(_) | Tok::Dot) {
                                return Err(ReadError::StrayDot(sp));
                            }
                            tail = Some(Box::new(self.read_form(t2, sp2)?));
                            match self.next() {
                                Some((Tok::Close(c), _)) if c == closer_of(open) => break,
                                Some((Tok::Close(c), sp3)) => {
                                    return Err(ReadError::Mismatched(sp3, c, open))
                                }
                                Some((_, sp3)) => return Err(ReadError::StrayDot(sp3)),
                                None => return Err(ReadError::Unclosed(span, open)),
                            }
                        }
                        other => items.push(self.read_form(other, sp)?),
                    }
                }
                Ok(Form {
                    kind: FormKind::List { items, tail },
                    span,
                })
            }
        }
    }
}

/// Reads every top-level form in `text`.
pub fn read(text: &str) -> Result<Vec<Form>, ReadError> {
    let mut reader = Reader {
        lexer: Lexer::new(text),
        peeked: None,
    };
    let mut forms = Vec::new();
    while let Some((tok, span)) = reader.next() {
        forms.push(reader.read_form(tok, span)?);
    }
    Ok(forms)
}

/// Reads exactly one form.
pub fn read_one(text: &str) -> Result<Form, ReadError> {
    let mut forms = read(text)?;
    if forms.len() == 1 {
        Ok(forms.remove(0))
    } else {
        Err(ReadError::FormCount(forms.len()))
    }
}

/// Convenience for building identifier forms in code.
pub fn ident(name: &str) -> Form {
    Form::new(FormKind::Ident(name.to_string()))
}
