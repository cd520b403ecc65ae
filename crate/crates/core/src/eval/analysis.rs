use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{pairwise_accuracy, PairPrediction};
use crate::corpus::{within_length_ratio, Corpus, EvidencePair, GoldLabel, Winner};
use crate::model::tokenize;
use crate::{Error, Result};

/// One coded justification attached to a pair (e.g. `C8-1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasonUnit {
    pub pair_id: String,
    pub code: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReasonErrorRow {
    pub code: String,
    pub n_pairs: usize,
    pub baseline_error: f64,
    pub model_error: f64,
    /// `100 * (baseline_error - model_error) / baseline_error`; `None` when
    /// the baseline makes no error.
    pub relative_decrease: Option<f64>,
}

/// Error rates of two systems per reason code, over pairs that carry exactly
/// one reason unit. Codes without pairs do not appear.
pub fn reason_error_analysis(
    model: &[PairPrediction],
    baseline: &[PairPrediction],
    gold: &[GoldLabel],
    reasons: &[ReasonUnit],
) -> Result<Vec<ReasonErrorRow>> {
    let mut per_pair: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in reasons {
        per_pair.entry(r.pair_id.as_str()).or_default().push(r.code.as_str());
    }
    let gold_by_id: BTreeMap<&str, &GoldLabel> = gold.iter().map(|g| (g.pair_id.as_str(), g)).collect();
    let mut by_code: BTreeMap<&str, Vec<GoldLabel>> = BTreeMap::new();
    for (pair, codes) in &per_pair {
        if codes.len() != 1 {
            continue;
        }
        if let Some(g) = gold_by_id.get(pair) {
            by_code.entry(codes[0]).or_default().push((*g).clone());
        }
    }
    by_code
        .into_iter()
        .map(|(code, labels)| {
            let model_error = 1.0 - pairwise_accuracy(model, &labels)?;
            let baseline_error = 1.0 - pairwise_accuracy(baseline, &labels)?;
            Ok(ReasonErrorRow {
                code: code.to_string(),
                n_pairs: labels.len(),
                baseline_error,
                model_error,
                relative_decrease: (baseline_error > 0.0)
                    .then(|| 100.0 * (baseline_error - model_error) / baseline_error),
            })
        })
        .collect()
}

/// Winner and loser texts of a correctly classified pair plus its topic title.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastPair {
    pub convincing: String,
    pub non_convincing: String,
    pub topic_title: String,
}

/// Pairs whose prediction matches gold, split into winner and loser texts.
pub fn contrast_pairs(
    predictions: &[PairPrediction],
    gold: &[GoldLabel],
    pairs: &[EvidencePair],
    corpus: &Corpus,
) -> Result<Vec<ContrastPair>> {
    let predicted: BTreeMap<&str, Winner> = predictions
        .iter()
        .map(|p| (p.pair_id.as_str(), p.predicted_winner))
        .collect();
    let by_id: BTreeMap<&str, &EvidencePair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut out = Vec::new();
    for label in gold {
        let p = predicted
            .get(label.pair_id.as_str())
            .ok_or_else(|| Error::MissingPrediction(label.pair_id.clone()))?;
        if *p != label.winner {
            continue;
        }
        let pair = by_id
            .get(label.pair_id.as_str())
            .ok_or_else(|| Error::UnknownPair(label.pair_id.clone()))?;
        let (a, b) = corpus.sides(pair)?;
        let (win, lose) = match label.winner {
            Winner::A => (a, b),
            Winner::B => (b, a),
        };
        out.push(ContrastPair {
            convincing: win.text.clone(),
            non_convincing: lose.text.clone(),
            topic_title: corpus.topic_title(&pair.topic_id).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordDiff {
    /// Words ranked by `p_convincing - p_non_convincing`, descending.
    pub convincing: Vec<(String, f64)>,
    /// Words ranked by `p_non_convincing - p_convincing`, descending.
    pub non_convincing: Vec<(String, f64)>,
}

/// Relative unigram frequencies (token occurrences) of the two sides,
/// ignoring stop words and words of the pair's topic title, and the top
/// `top_n` words of each difference. Ties rank alphabetically.
pub fn word_distribution_diff(
    pairs: &[ContrastPair],
    stopwords: &BTreeSet<String>,
    top_n: usize,
) -> Result<WordDiff> {
    if pairs.is_empty() {
        return Err(Error::Undefined("word distribution of an empty pair set"));
    }
    let mut conv: BTreeMap<String, usize> = BTreeMap::new();
    let mut non: BTreeMap<String, usize> = BTreeMap::new();
    for p in pairs {
        let title: BTreeSet<String> = tokenize(&p.topic_title).into_iter().collect();
        for (text, counts) in [(&p.convincing, &mut conv), (&p.non_convincing, &mut non)] {
            for tok in tokenize(text) {
                if stopwords.contains(&tok) || title.contains(&tok) {
                    continue;
                }
                *counts.entry(tok).or_default() += 1;
            }
        }
    }
    let total = |m: &BTreeMap<String, usize>| m.values().sum::<usize>().max(1) as f64;
    let (tc, tn) = (total(&conv), total(&non));
    let vocab: BTreeSet<&String> = conv.keys().chain(non.keys()).collect();
    let diffs: Vec<(String, f64)> = vocab
        .into_iter()
        .map(|w| {
            let pc = conv.get(w).copied().unwrap_or(0) as f64 / tc;
            let pn = non.get(w).copied().unwrap_or(0) as f64 / tn;
            (w.clone(), pc - pn)
        })
        .collect();
    let rank = |sign: f64| {
        let mut v: Vec<(String, f64)> = diffs.iter().map(|(w, d)| (w.clone(), sign * d)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v.truncate(top_n);
        v
    };
    Ok(WordDiff {
        convincing: rank(1.0),
        non_convincing: rank(-1.0),
    })
}

/// Accuracy on pairs whose length ratio exceeds the 30% construction limit.
/// A pair within the limit is rejected.
pub fn length_robustness_eval(
    predictions: &[PairPrediction],
    unbalanced_pairs: &[EvidencePair],
    gold: &[GoldLabel],
    corpus: &Corpus,
) -> Result<f64> {
    let ids: BTreeSet<&str> = unbalanced_pairs.iter().map(|p| p.id.as_str()).collect();
    for pair in unbalanced_pairs {
        let (a, b) = corpus.sides(pair)?;
        if within_length_ratio(a.char_length, b.char_length) {
            return Err(Error::InvalidPair {
                pair_id: pair.id.clone(),
                reason: alloc::format!(
                    "lengths {} and {} are within the 30% limit",
                    a.char_length,
                    b.char_length
                ),
            });
        }
    }
    let relevant: Vec<GoldLabel> = gold
        .iter()
        .filter(|g| ids.contains(g.pair_id.as_str()))
        .cloned()
        .collect();
    pairwise_accuracy(predictions, &relevant)
}
