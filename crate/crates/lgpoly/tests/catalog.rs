use lgpoly::catalog::{catalog, find, listing};
use lgpoly::RunError;
use std::collections::BTreeSet;

#[test]
fn each_criterion_has_exactly_one_subcommand() {
    let mut seen = BTreeSet::new();
    for e in catalog() {
        if let Some(c) = e.criterion {
            assert!(seen.insert(c), "criterion {c} gated twice");
        }
    }
    assert_eq!(seen, (1..=16).collect::<BTreeSet<u8>>());
}

#[test]
fn names_are_unique() {
    let names: BTreeSet<_> = catalog().iter().map(|e| e.name).collect();
    assert_eq!(names.len(), catalog().len());
}

#[test]
fn named_subcommands_exist() {
    for name in [
        "oracle", "verify-burke", "ratio-limit", "busemann", "p2l-ratio", "measure-limit", "exponent", "env-chain",
        "xicheck-law", "size-bias", "duality", "elogz", "compare-lemma", "ldp-tail", "corrector-erg", "degenerate",
        "overlap",
    ] {
        assert!(find(name).is_ok(), "missing {name}");
    }
    assert!(matches!(find("nope"), Err(RunError::UnknownExperiment(_))));
}

#[test]
fn listing_has_one_line_per_entry() {
    let lines = listing();
    assert_eq!(lines.len(), catalog().len());
    assert!(lines.iter().any(|l| l.starts_with("exponent") && l.contains("N^{2/3}")));
    assert!(lines.iter().any(|l| l.starts_with("env-chain") && l.contains("invariant")));
}

#[test]
fn defaults_round_trip_through_validation() {
    for e in catalog() {
        let d = e.defaults();
        assert_eq!(e.validate(d.clone()).unwrap(), d, "{}", e.name);
    }
}
