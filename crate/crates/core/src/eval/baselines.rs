use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::PairPrediction;
use crate::corpus::{Corpus, EvidencePair, GoldLabel, Winner};
use crate::model::{pairwise_from_outputs, pointwise_from_output, EmbeddingTable, SiameseRanker};
use crate::{Error, Result};

/// Prefers the longer text (in characters); equal lengths go to A.
pub fn length_baseline(pair: &EvidencePair, corpus: &Corpus) -> Result<Winner> {
    let (a, b) = corpus.sides(pair)?;
    Ok(if a.char_length >= b.char_length {
        Winner::A
    } else {
        Winner::B
    })
}

pub fn length_predictions(pairs: &[EvidencePair], corpus: &Corpus) -> Result<Vec<PairPrediction>> {
    pairs
        .iter()
        .map(|p| Ok(PairPrediction::hard(p.id.clone(), length_baseline(p, corpus)?)))
        .collect()
}

/// Predicts the side that won most often in training for every test pair.
pub fn most_frequent_label_baseline(
    train_gold: &[GoldLabel],
    test_pairs: &[EvidencePair],
) -> Result<Vec<PairPrediction>> {
    if train_gold.is_empty() {
        return Err(Error::Undefined("most frequent label of an empty training set"));
    }
    let a_wins = train_gold.iter().filter(|g| g.winner == Winner::A).count();
    let side = if 2 * a_wins >= train_gold.len() {
        Winner::A
    } else {
        Winner::B
    };
    Ok(test_pairs
        .iter()
        .map(|p| PairPrediction::hard(p.id.clone(), side))
        .collect())
}

/// Prefers the side with the higher external score; ties go to A.
pub fn score_baseline(pair: &EvidencePair, scores: &BTreeMap<String, f64>) -> Result<Winner> {
    let get = |id: &str| {
        scores
            .get(id)
            .copied()
            .ok_or_else(|| Error::MissingScore(id.to_string()))
    };
    let (a, b) = (get(&pair.a)?, get(&pair.b)?);
    Ok(if a >= b { Winner::A } else { Winner::B })
}

pub fn score_predictions(
    pairs: &[EvidencePair],
    scores: &BTreeMap<String, f64>,
) -> Result<Vec<PairPrediction>> {
    pairs
        .iter()
        .map(|p| Ok(PairPrediction::hard(p.id.clone(), score_baseline(p, scores)?)))
        .collect()
}

/// Leg outputs per evidence id for every side of `pairs`.
fn leg_outputs(
    model: &SiameseRanker,
    table: &EmbeddingTable,
    corpus: &Corpus,
    pairs: &[EvidencePair],
) -> Result<BTreeMap<String, crate::model::LegOutput>> {
    let mut out = BTreeMap::new();
    for pair in pairs {
        for id in [&pair.a, &pair.b] {
            if !out.contains_key(id) {
                let ev = corpus.get(id)?;
                out.insert(id.clone(), model.leg_output(table, &ev.text)?);
            }
        }
    }
    Ok(out)
}

/// Pairwise-softmax predictions of the model.
pub fn model_predictions(
    model: &SiameseRanker,
    table: &EmbeddingTable,
    corpus: &Corpus,
    pairs: &[EvidencePair],
) -> Result<Vec<PairPrediction>> {
    let outputs = leg_outputs(model, table, corpus, pairs)?;
    Ok(pairs
        .iter()
        .map(|p| {
            let prob = pairwise_from_outputs(outputs[&p.a].c, outputs[&p.b].c);
            PairPrediction::from_probability(p.id.clone(), prob)
        })
        .collect())
}

/// Predictions from comparing pointwise scores (ties to A).
pub fn pointwise_predictions(
    model: &SiameseRanker,
    table: &EmbeddingTable,
    corpus: &Corpus,
    pairs: &[EvidencePair],
) -> Result<Vec<PairPrediction>> {
    let outputs = leg_outputs(model, table, corpus, pairs)?;
    Ok(pairs
        .iter()
        .map(|p| {
            let (sa, sb) = (
                pointwise_from_output(outputs[&p.a]),
                pointwise_from_output(outputs[&p.b]),
            );
            PairPrediction::hard(p.id.clone(), if sa >= sb { Winner::A } else { Winner::B })
        })
        .collect())
}

/// Wins divided by comparisons for every evidence appearing in a labeled
/// pair. A diagnostic score only.
pub fn win_rate_scores(labels: &[GoldLabel], pairs: &[EvidencePair]) -> Result<BTreeMap<String, f64>> {
    let by_id: BTreeMap<&str, &EvidencePair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for label in labels {
        let pair = by_id
            .get(label.pair_id.as_str())
            .ok_or_else(|| Error::UnknownPair(label.pair_id.clone()))?;
        let (winner, loser) = match label.winner {
            Winner::A => (&pair.a, &pair.b),
            Winner::B => (&pair.b, &pair.a),
        };
        let w = tally.entry(winner.clone()).or_default();
        w.0 += 1;
        w.1 += 1;
        tally.entry(loser.clone()).or_default().1 += 1;
    }
    Ok(tally
        .into_iter()
        .map(|(id, (wins, n))| (id, wins as f64 / n as f64))
        .collect())
}
