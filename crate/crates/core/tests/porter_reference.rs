//! Porter stemmer conformance against words from the published reference
//! vocabulary and the worked examples accompanying the algorithm.

use conbrowse_core::text::stem;

fn reference() -> Vec<(String, String)> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/porter-reference.tsv");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (w, s) = l.split_once('\t').unwrap();
            (w.to_string(), s.to_string())
        })
        .collect()
}

#[test]
fn reference_vocabulary() {
    let pairs = reference();
    assert!(pairs.len() >= 50);
    let misses: Vec<_> = pairs
        .iter()
        .filter(|(word, expected)| stem(word) != *expected)
        .map(|(word, expected)| format!("{word}: got {}, want {expected}", stem(word)))
        .collect();
    assert!(misses.is_empty(), "{misses:#?}");
}
