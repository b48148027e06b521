//! Load-and-query shell. Definitions typed at the prompt extend the program;
//! `run` forms are answered against it.

use std::io::{BufRead, Write};

use anyhow::Result;
use skanren::frontend::parser::parse_program;
use skanren::frontend::reader::{read, Form, ReadError};
use skanren::program::Program;

use crate::{cmd_run, RunConfig};

pub fn repl(
    mut forms: Vec<Form>,
    cfg: &RunConfig,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<u8> {
    let mut program: Program = parse_program(&forms)?;
    let mut buffer = String::new();
    loop {
        write!(out, "{}", if buffer.is_empty() { "> " } else { "  " })?;
        out.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            return Ok(0);
        }
        if buffer.is_empty() && matches!(line.trim(), ":q" | ":quit") {
            return Ok(0);
        }
        buffer.push_str(&line);
        let parsed = match read(&buffer) {
            Ok(p) => p,
            Err(ReadError::Unclosed(..)) => continue,
            Err(e) => {
                writeln!(err, "{e}")?;
                buffer.clear();
                continue;
            }
        };
        buffer.clear();
        for form in parsed {
            if matches!(form.head_ident(), Some("run" | "run*")) {
                if let Err(e) = cmd_run(&program, &form.to_string(), cfg, out) {
                    writeln!(err, "{e:#}")?;
                }
                continue;
            }
            forms.push(form);
            match parse_program(&forms) {
                Ok(p) => program = p,
                Err(e) => {
                    forms.pop();
                    writeln!(err, "{e}")?;
                }
            }
        }
    }
}
