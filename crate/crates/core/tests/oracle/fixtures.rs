//! Seeded random fixtures shared by the oracle comparisons.

use std::collections::BTreeSet;

use argrank_core::annotation::AnnotationRecord;
use argrank_core::corpus::{EvidencePair, GoldLabel, Winner};
use rand::Rng;

use super::annotation::Vote;

pub fn winner(a: bool) -> Winner {
    if a {
        Winner::A
    } else {
        Winner::B
    }
}

/// Random crowd votes: each labeler covers each pair with probability
/// `coverage`, leans towards a per-pair truth, and answers a few hidden
/// questions. Returns library records and the oracle's view of the same.
pub fn random_votes(rng: &mut impl Rng, labelers: usize, pairs: usize, coverage: f64) -> (Vec<AnnotationRecord>, Vec<Vote>) {
    let truth: Vec<bool> = (0..pairs).map(|_| rng.gen_bool(0.55)).collect();
    let mut records = Vec::new();
    let mut votes = Vec::new();
    for l in 0..labelers {
        let labeler = format!("L{l:02}");
        let accuracy = rng.gen_range(0.3..1.0);
        for (p, &t) in truth.iter().enumerate() {
            if !rng.gen_bool(coverage) {
                continue;
            }
            let chose_a = if rng.gen_bool(accuracy) { t } else { !t };
            let pair = format!("P{p:03}");
            records.push(AnnotationRecord::real(labeler.clone(), pair.clone(), winner(chose_a)));
            votes.push(Vote { labeler: labeler.clone(), pair, chose_a, hidden_gold_a: None });
        }
        for h in 0..rng.gen_range(0..6) {
            let gold = rng.gen_bool(0.5);
            let chose_a = if rng.gen_bool(accuracy) { gold } else { !gold };
            let pair = format!("H{h:02}");
            records.push(AnnotationRecord::hidden(labeler.clone(), pair.clone(), winner(chose_a), winner(gold)));
            votes.push(Vote { labeler: labeler.clone(), pair, chose_a, hidden_gold_a: Some(gold) });
        }
    }
    (records, votes)
}

/// Random labels over a random subset of item pairs (each unordered pair at
/// most once, random orientation). Returns library inputs, the item list and
/// the oracle's `(winner, loser)` relation.
pub fn random_preferences(
    rng: &mut impl Rng,
    items: usize,
    density: f64,
) -> (Vec<EvidencePair>, Vec<GoldLabel>, Vec<String>, BTreeSet<(String, String)>) {
    let ids: Vec<String> = (0..items).map(|i| format!("e{i:02}")).collect();
    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    let mut beats = BTreeSet::new();
    for i in 0..items {
        for j in i + 1..items {
            if !rng.gen_bool(density) {
                continue;
            }
            let (a, b) = if rng.gen_bool(0.5) { (&ids[i], &ids[j]) } else { (&ids[j], &ids[i]) };
            let id = format!("{a}-{b}");
            let a_wins = rng.gen_bool(0.5);
            pairs.push(EvidencePair::new(id.clone(), "T", a.clone(), b.clone()));
            labels.push(GoldLabel { pair_id: id, winner: winner(a_wins), majority_fraction: 1.0 });
            beats.insert(if a_wins { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) });
        }
    }
    (pairs, labels, ids, beats)
}

/// Twelve reliable labelers on 30 pairs plus one planted violation of each
/// labeler filter.
pub fn planted_labelers() -> Vec<AnnotationRecord> {
    let truth = |p: usize| if p.is_multiple_of(3) { Winner::B } else { Winner::A };
    let mut out = Vec::new();
    for l in 0..12 {
        for p in 0..30 {
            let w = if (l + p) % 10 == 0 { truth(p).flipped() } else { truth(p) };
            out.push(AnnotationRecord::real(format!("good{l:02}"), format!("p{p:02}"), w));
        }
        for h in 0..5 {
            out.push(AnnotationRecord::hidden(format!("good{l:02}"), format!("h{h}"), Winner::A, Winner::A));
        }
    }
    for p in 0..30 {
        out.push(AnnotationRecord::real("contrarian", format!("p{p:02}"), truth(p).flipped()));
        out.push(AnnotationRecord::real("careless", format!("p{p:02}"), truth(p)));
    }
    for h in 0..5 {
        let choice = if h < 2 { Winner::A } else { Winner::B };
        out.push(AnnotationRecord::hidden("careless", format!("h{h}"), choice, Winner::A));
    }
    for p in 0..19 {
        out.push(AnnotationRecord::real("brief", format!("p{p:02}"), truth(p)));
    }
    out
}

/// Twelve labelers, four of them rejected, on four pairs: one clear, one
/// indecisive, one decided only after filtering and one under-annotated.
/// Returns the records and the rejected labelers.
pub fn planted_pairs() -> (Vec<AnnotationRecord>, BTreeSet<String>) {
    let mut records = Vec::new();
    let mut vote = |l: usize, p: &str, w: Winner| records.push(AnnotationRecord::real(format!("l{l:02}"), p, w));
    // l00..l03 are rejected; eight valid labelers remain
    for l in 0..12 {
        vote(l, "clear", Winner::A);
        if l >= 4 {
            vote(l, "split", if l < 8 { Winner::A } else { Winner::B });
        }
        // 6 of 12 for B overall, but 6 of the 8 valid votes
        vote(l, "spam", if !(4..10).contains(&l) { Winner::A } else { Winner::B });
        if l < 9 {
            vote(l, "thin", Winner::B);
        }
    }
    let rejected: BTreeSet<String> = (0..4).map(|l| format!("l{l:02}")).collect();
    (records, rejected)
}
