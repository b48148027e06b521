//! A relational logic engine with stable-model negation and integrity
//! constraints, plus a brute-force stable-model oracle.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod constraints;
pub mod engine;
pub mod frontend;
pub mod oracle;
pub mod program;
pub mod term;
pub mod verifier;
