//! Parity with frozen outputs of independent reference implementations.
//! Regenerate the fixtures with the scripts in `tests/oracles/`.

use linguaforge::textmetrics::{bleu, count_syllables, modified_precision, readability};
use serde::Deserialize;

#[derive(Deserialize)]
struct BleuPair {
    candidate: String,
    references: Vec<String>,
    bleu: f64,
    precisions: Vec<[u64; 2]>,
}

#[derive(Deserialize)]
struct BleuFixture {
    pairs: Vec<BleuPair>,
}

#[derive(Deserialize)]
struct ReadabilityRow {
    text: String,
    words: usize,
    sentences: usize,
    syllables: usize,
    fre: f64,
    fkgl: f64,
}

#[derive(Deserialize)]
struct ReadabilityFixture {
    rows: Vec<ReadabilityRow>,
}

fn split(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

#[test]
fn bleu_matches_oracle() {
    let fixture: BleuFixture = serde_json::from_str(include_str!("fixtures/bleu_pairs.json")).unwrap();
    assert_eq!(fixture.pairs.len(), 20);
    for (i, pair) in fixture.pairs.iter().enumerate() {
        let cand = split(&pair.candidate);
        let refs: Vec<Vec<&str>> = pair.references.iter().map(|r| split(r)).collect();
        let score = bleu(&cand, &refs, 4).unwrap();
        assert!((score.composite - pair.bleu).abs() < 1e-9, "pair {i}: {} vs {}", score.composite, pair.bleu);

        for (n, &[num, den]) in pair.precisions.iter().enumerate() {
            let ours = modified_precision(&cand, &refs, n + 1).unwrap();
            if ours.is_undefined() {
                // the oracle reports 0/1 where we report 0/0
                assert_eq!(num, 0, "pair {i} order {}", n + 1);
            } else {
                assert_eq!(ours.numerator * den, num * ours.denominator, "pair {i} order {}", n + 1);
            }
        }
    }
}

#[test]
fn bleu_hand_case() {
    let p = modified_precision(&split("the the the the the the the"), &[split("the cat is on the mat")], 1).unwrap();
    assert_eq!((p.numerator, p.denominator), (2, 7));
}

#[test]
fn readability_matches_oracle() {
    let fixture: ReadabilityFixture = serde_json::from_str(include_str!("fixtures/readability_oracle.json")).unwrap();
    assert_eq!(fixture.rows.len(), 5);
    for row in &fixture.rows {
        let r = readability(&row.text).unwrap();
        assert_eq!((r.words, r.sentences, r.syllables), (row.words, row.sentences, row.syllables), "{}", row.text);
        assert!((r.fre - row.fre).abs() < 0.01, "{}: FRE {} vs {}", row.text, r.fre, row.fre);
        assert!((r.fkgl - row.fkgl).abs() < 0.01, "{}: FKGL {} vs {}", row.text, r.fkgl, row.fkgl);
    }
}

#[test]
fn cat_sentence_exact() {
    let r = readability("The cat sat on the mat.").unwrap();
    assert!((r.fre - 116.145).abs() < 1e-9);
    assert!((r.fkgl + 1.45).abs() < 1e-9);
    assert_eq!(count_syllables("communication"), 5);
}
