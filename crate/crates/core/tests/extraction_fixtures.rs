mod common;

use std::collections::BTreeSet;

use common::fixture;
use prover_agent::extraction::{
    declared_names, extract_lean_blocks, parse_informal_lemmas, sanitize_name, select_candidate, NameRegistry,
    SanitizeConfig,
};
use prover_agent::verifier::detect_sorry;

#[test]
fn factorial_lemma_text_gives_three_lemmas() {
    let lemmas = parse_informal_lemmas(&fixture("lemmas.md"), 3);
    let names: Vec<_> = lemmas.iter().map(|l| l.name.as_str()).collect();
    assert_eq!(names, ["base_case_3", "exponent_inequality", "factorial_less_than_n_next_power"]);
    assert!(lemmas[0].assumptions.is_empty());
    assert_eq!(lemmas[0].conclusion, "3! < 3^(3-1)");
    assert_eq!(lemmas[1].assumptions, ["n is a natural number and n ≥ 2"]);
    assert_eq!(lemmas[1].conclusion, "n^(n-1) < (n+1)^(n-1)");
    assert_eq!(lemmas[2].conclusion, "n! < (n+1)^(n-1)");
}

#[test]
fn lemma_cap_keeps_the_first_ones() {
    let lemmas = parse_informal_lemmas(&fixture("lemmas.md"), 2);
    assert_eq!(lemmas.len(), 2);
    assert_eq!(lemmas[1].name, "exponent_inequality");
}

#[test]
fn factorial_trace_yields_the_complete_proof() {
    let trace = fixture("final_trace.md");
    let blocks = extract_lean_blocks(&trace);
    assert!(blocks.len() >= 3);
    assert!(blocks.iter().all(|b| b.terminated));
    let last = blocks.last().unwrap();
    assert!(last.code.starts_with("theorem induction"));
    assert!(!detect_sorry(&last.code));
    // the two sketches before it use sorry
    assert!(blocks[..blocks.len() - 1].iter().all(|b| detect_sorry(&b.code)));

    let chosen = select_candidate(&blocks, "induction").unwrap();
    assert_eq!(chosen.block_index, blocks.len() - 1);
    assert!(chosen.complete && chosen.declares_target);
    assert_eq!(chosen.code, last.code);
    assert!(chosen.code.trim_end().ends_with("exact h_general"));
}

#[test]
fn factorial_problem_name_sanitizes_to_the_final_proof_name() {
    let cfg = SanitizeConfig::default();
    assert_eq!(sanitize_name("induction_nfactltnexpnm1ngt3", &cfg), "induction");
    let problem = fixture("problem.lean");
    assert_eq!(declared_names(&problem), ["induction_nfactltnexpnm1ngt3"]);
}

#[test]
fn factorial_lemma_sources_declare_their_names() {
    assert_eq!(declared_names(&fixture("exponent_inequality.lean")), ["exponent_inequality"]);
    assert_eq!(declared_names(&fixture("base_case_3.lean")), ["base_case_3"]);
    assert!(detect_sorry(&fixture("factorial_lt_n_next_power.lean")));
    assert!(!detect_sorry(&fixture("exponent_inequality.lean")));
}

#[test]
fn long_benchmark_name_sanitizes_to_algebra() {
    let cfg = SanitizeConfig::default();
    assert_eq!(sanitize_name("algebra_2varlineareq_fp3zeq11_3tfm1m5zeqn68_feqn10_zeq7", &cfg), "algebra");
}

fn minif2f_names() -> Vec<String> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/minif2f_names.txt");
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn benchmark_names_sanitize_to_unique_identifiers() {
    let names = minif2f_names();
    let mut registry = NameRegistry::new(SanitizeConfig::default());
    let assigned: Vec<String> = names.iter().map(|n| registry.assign(n)).collect();
    let unique: BTreeSet<&String> = assigned.iter().collect();
    assert_eq!(unique.len(), names.len());
    for (orig, new) in names.iter().zip(&assigned) {
        assert!(new.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'), "{new}");
        assert!(!new.starts_with(|c: char| c.is_ascii_digit()), "{new}");
        // competition names are already readable and stay as they are
        if orig.starts_with("mathd_") || orig.starts_with("amc12") || orig.starts_with("aime_") || orig.starts_with("imo_") {
            assert_eq!(orig, new);
        }
    }
    let pos = |n: &str| names.iter().position(|x| x == n).unwrap();
    assert_eq!(assigned[pos("algebra_2varlineareq_fp3zeq11_3tfm1m5zeqn68_feqn10_zeq7")], "algebra");
    assert_eq!(assigned[pos("induction_nfactltnexpnm1ngt3")], "induction");
    assert!(assigned.iter().any(|n| n == "algebra_2"));
}
