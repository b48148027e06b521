mod common;

use common::{random_program, rng, Shape};
use skanren::engine::Options;
use skanren::frontend::parser::parse_program_text;
use skanren::oracle::{encode_constraints, ground_program, stable_models, stable_models_unfiltered, DEFAULT_ATOM_CAP};
use skanren_cli::verify::{engine_decider, exhaustive_probes, verify_with};

/// Checks `count` generated programs; returns the reports that were not clean.
fn sweep(seed: u64, count: usize, shape: Shape) -> Vec<String> {
    let mut r = rng(seed);
    let mut bad = Vec::new();
    for i in 0..count {
        let text = random_program(&mut r, shape);
        let p = parse_program_text(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        let g = ground_program(&p, DEFAULT_ATOM_CAP).unwrap();
        let models = stable_models(&g).unwrap();
        let encoded = stable_models_unfiltered(&encode_constraints(&g)).unwrap();
        if encoded != models {
            bad.push(format!("#{i}: encoding differs\n{text}"));
        }
        let probes = exhaustive_probes(&p, &g, &models, true).unwrap();
        let report = verify_with(&probes, &engine_decider(&p, Options::default()));
        if !report.is_clean() {
            bad.push(format!("#{i}\n{text}{report}"));
        }
    }
    bad
}

#[test]
fn small_programs_agree_with_the_oracle() {
    let bad = sweep(7, 200, Shape { atoms: 8, rules: 12, constraints: 3 });
    assert!(bad.is_empty(), "{}", bad.join("\n\n"));
}

#[test]
fn larger_programs_agree_with_the_oracle() {
    let bad = sweep(11, 1000, Shape { atoms: 10, rules: 15, constraints: 3 });
    assert!(bad.is_empty(), "{}", bad.join("\n\n"));
}

#[test]
fn dense_programs_agree_with_the_oracle() {
    let bad = sweep(2, 1000, Shape { atoms: 6, rules: 20, constraints: 3 });
    assert!(bad.is_empty(), "{}", bad.join("\n\n"));
}
