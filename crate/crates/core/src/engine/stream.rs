//! Lazy answer streams with miniKanren-style interleaving.

use alloc::boxed::Box;
use alloc::rc::Rc;

use super::state::State;
use super::EngineError;

pub(crate) type Thunk<'a> = Box<dyn FnOnce() -> Stream<'a> + 'a>;
pub(crate) type Cont<'a> = Rc<dyn Fn(State) -> Stream<'a> + 'a>;

pub(crate) enum Stream<'a> {
    Empty,
    Error(EngineError),
    Cons(State, Box<Stream<'a>>),
    Delay(Thunk<'a>),
}

impl<'a> Stream<'a> {
    pub(crate) fn unit(st: State) -> Stream<'a> {
        Stream::Cons(st, Box::new(Stream::Empty))
    }

    pub(crate) fn delay(f: impl FnOnce() -> Stream<'a> + 'a) -> Stream<'a> {
        Stream::Delay(Box::new(f))
    }

    /// Next mature element, forcing delays. `None` when exhausted.
    pub(crate) fn next(mut self) -> Option<Result<(State, Stream<'a>), EngineError>> {
        loop {
            match self {
                Stream::Empty => return None,
                Stream::Error(e) => return Some(Err(e)),
                Stream::Cons(st, rest) => return Some(Ok((st, *rest))),
                Stream::Delay(f) => self = f(),
            }
        }
    }
}

/// Fair disjunction: a delayed left side hands control to the right side.
pub(crate) fn mplus<'a>(a: Stream<'a>, b: Stream<'a>) -> Stream<'a> {
    match a {
        Stream::Empty => b,
        Stream::Error(e) => Stream::Error(e),
        Stream::Cons(st, rest) => {
            Stream::Cons(st, Box::new(Stream::delay(move || mplus(*rest, b))))
        }
        Stream::Delay(f) => Stream::delay(move || mplus(b, f())),
    }
}

pub(crate) fn bind<'a>(s: Stream<'a>, k: Cont<'a>) -> Stream<'a> {
    match s {
        Stream::Empty => Stream::Empty,
        Stream::Error(e) => Stream::Error(e),
        Stream::Cons(st, rest) => {
            let k2 = k.clone();
            mplus(k(st), Stream::delay(move || bind(*rest, k2)))
        }
        Stream::Delay(f) => Stream::delay(move || bind(f(), k)),
    }
}
