//! Helpers shared by the integration suites.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn corpus(name: &str) -> PathBuf {
    skanren_cli::corpus_path(name)
}

pub fn read_corpus(name: &str) -> String {
    std::fs::read_to_string(corpus(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Limits for generated propositional programs.
#[derive(Clone, Copy)]
pub struct Shape {
    pub atoms: usize,
    pub rules: usize,
    pub constraints: usize,
}

/// Source text of a random propositional normal program with integrity
/// constraints, over atoms `a0..`.
pub fn random_program(rng: &mut StdRng, shape: Shape) -> String {
    // Sizes lean toward the limits; tiny programs are mostly trivial.
    let n = rng.gen_range(shape.atoms.div_ceil(2)..=shape.atoms);
    let rules = rng.gen_range(n.min(shape.rules)..=shape.rules);
    let mut bodies: Vec<Vec<String>> = vec![Vec::new(); n];
    for _ in 0..rules {
        let head = rng.gen_range(0..n);
        let len = rng.gen_range(0..=3);
        let mut body = Vec::new();
        for _ in 0..len {
            let a = rng.gen_range(0..n);
            if rng.gen_bool(0.6) {
                body.push(format!("(noto (a{a}))"));
            } else {
                body.push(format!("(a{a})"));
            }
        }
        bodies[head].push(if body.is_empty() {
            "succeed".to_string()
        } else {
            body.join(" ")
        });
    }
    let mut text = String::new();
    for (i, bs) in bodies.iter().enumerate() {
        if bs.is_empty() {
            text.push_str(&format!("(defineo (a{i}) fail)\n"));
        }
        for b in bs {
            text.push_str(&format!("(defineo (a{i}) {b})\n"));
        }
    }
    for _ in 0..rng.gen_range(0..=shape.constraints) {
        let len = rng.gen_range(1..=3usize.min(n));
        let mut lits: Vec<(usize, bool)> = Vec::new();
        while lits.len() < len {
            let lit = (rng.gen_range(0..n), rng.gen_bool(0.4));
            if !lits.contains(&lit) {
                lits.push(lit);
            }
        }
        let emitters: Vec<String> = lits
            .iter()
            .map(|&(a, neg)| if neg { format!("(noto (a{a}))") } else { format!("(a{a})") })
            .collect();
        text.push_str(&format!("(constrainto [{}] [])\n", emitters.join(" ")));
    }
    text
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
