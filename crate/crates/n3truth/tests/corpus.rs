mod common;

use common::replay::{replay, CORPUS};

#[test]
fn every_corpus_expectation_holds() {
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    let mut total = 0;
    for name in CORPUS {
        let (n, bad) = replay(name, dir.path());
        assert!(n > 0, "{name} has no expectations");
        total += n;
        failures.extend(bad);
    }
    assert!(failures.is_empty(), "{} of {total} failed:\n{}", failures.len(), failures.join("\n"));
}
