//! Surface syntax: reader, program compiler and load-time safety checks.

pub mod parser;
pub mod reader;
pub mod safety;
