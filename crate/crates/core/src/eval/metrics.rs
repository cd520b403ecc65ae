use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{GoldLabel, Winner};
use crate::{Error, Result};

/// A system's verdict on one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPrediction {
    pub pair_id: String,
    /// Probability that A wins, for probabilistic systems.
    pub p_a_wins: Option<f64>,
    pub predicted_winner: Winner,
}

impl PairPrediction {
    /// `p > 0.5` predicts A; an exact 0.5 also predicts A.
    pub fn from_probability(pair_id: impl Into<String>, p_a_wins: f64) -> Self {
        PairPrediction {
            pair_id: pair_id.into(),
            p_a_wins: Some(p_a_wins),
            predicted_winner: if p_a_wins >= 0.5 { Winner::A } else { Winner::B },
        }
    }

    pub fn hard(pair_id: impl Into<String>, winner: Winner) -> Self {
        PairPrediction {
            pair_id: pair_id.into(),
            p_a_wins: None,
            predicted_winner: winner,
        }
    }
}

/// Fraction of gold pairs whose predicted winner matches.
pub fn pairwise_accuracy(predictions: &[PairPrediction], gold: &[GoldLabel]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::Undefined("accuracy over an empty gold set"));
    }
    let by_id: BTreeMap<&str, Winner> = predictions
        .iter()
        .map(|p| (p.pair_id.as_str(), p.predicted_winner))
        .collect();
    let mut correct = 0usize;
    for label in gold {
        let predicted = by_id
            .get(label.pair_id.as_str())
            .ok_or_else(|| Error::MissingPrediction(label.pair_id.clone()))?;
        correct += usize::from(*predicted == label.winner);
    }
    Ok(correct as f64 / gold.len() as f64)
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Config(alloc::format!(
            "correlation inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Undefined("correlation of fewer than two points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input"));
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with zero variance"));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of the average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    pearson_r(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// Correlations per group, averaged across groups.
    PerGroup,
    /// One correlation over all items.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankReport {
    pub mean_pearson: Option<f64>,
    pub mean_spearman: Option<f64>,
    /// Groups that contributed to the means, with their (r, rho).
    pub groups: Vec<(String, f64, f64)>,
    /// Groups with a zero-variance side.
    pub degenerate: Vec<String>,
    /// Groups with fewer than two items.
    pub skipped: Vec<String>,
}

/// Correlates system scores with gold scores, per group or pooled.
pub fn rank_evaluation(
    predicted: &[f64],
    gold: &[f64],
    groups: &[&str],
    grouping: Grouping,
) -> Result<RankReport> {
    if predicted.len() != gold.len() || gold.len() != groups.len() {
        return Err(Error::Config("rank evaluation inputs differ in length".to_string()));
    }
    let mut buckets: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((&p, &g), &group) in predicted.iter().zip(gold).zip(groups) {
        let key = match grouping {
            Grouping::PerGroup => group,
            Grouping::Pooled => "all",
        };
        let b = buckets.entry(key).or_default();
        b.0.push(p);
        b.1.push(g);
    }
    let mut report = RankReport::default();
    for (name, (p, g)) in buckets {
        if p.len() < 2 {
            report.skipped.push(name.to_string());
            continue;
        }
        match (pearson_r(&p, &g), spearman_rho(&p, &g)) {
            (Ok(r), Ok(rho)) => report.groups.push((name.to_string(), r, rho)),
            (Err(Error::Undefined(_)), _) | (_, Err(Error::Undefined(_))) => {
                report.degenerate.push(name.to_string())
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    if !report.groups.is_empty() {
        let n = report.groups.len() as f64;
        report.mean_pearson = Some(report.groups.iter().map(|g| g.1).sum::<f64>() / n);
        report.mean_spearman = Some(report.groups.iter().map(|g| g.2).sum::<f64>() / n);
    }
    Ok(report)
}
