//! Crowd-label quality control and aggregation.
//!
//! The pipeline is one-shot: labeler statistics are computed once over all
//! annotations, failing labelers are rejected, and the remaining votes are
//! aggregated per pair. Hidden test questions only feed the precision
//! statistic; they never enter kappa or aggregation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{EvidencePair, GoldLabel, Winner};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub labeler_id: String,
    pub pair_id: String,
    pub choice: Winner,
    /// Gold side for hidden test questions; `None` for real pairs.
    pub hidden_gold: Option<Winner>,
}

impl AnnotationRecord {
    pub fn real(labeler: impl Into<String>, pair: impl Into<String>, choice: Winner) -> Self {
        AnnotationRecord {
            labeler_id: labeler.into(),
            pair_id: pair.into(),
            choice,
            hidden_gold: None,
        }
    }

    pub fn hidden(
        labeler: impl Into<String>,
        pair: impl Into<String>,
        choice: Winner,
        gold: Winner,
    ) -> Self {
        AnnotationRecord {
            labeler_id: labeler.into(),
            pair_id: pair.into(),
            choice,
            hidden_gold: Some(gold),
        }
    }

    pub fn is_hidden_test(&self) -> bool {
        self.hidden_gold.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelerStats {
    pub labeler_id: String,
    /// Distinct non-hidden pairs annotated.
    pub n_real_pairs: usize,
    pub n_hidden: usize,
    pub hidden_precision: Option<f64>,
    pub avg_kappa: Option<f64>,
    /// Counterparts sharing enough pairs and having a defined kappa.
    pub n_kappa_counterparts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterThresholds {
    pub min_pairs: usize,
    pub min_kappa: f64,
    pub min_precision: f64,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        FilterThresholds {
            min_pairs: 20,
            min_kappa: 0.1,
            min_precision: 0.55,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaPolicy {
    /// Shared non-hidden pairs needed before a counterpart counts.
    pub min_shared: usize,
    /// Counterparts needed before the average is defined.
    pub min_counterparts: usize,
}

impl Default for KappaPolicy {
    fn default() -> Self {
        KappaPolicy {
            min_shared: 20,
            min_counterparts: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregationPolicy {
    pub min_annotations: usize,
    pub majority: f64,
}

impl Default for AggregationPolicy {
    fn default() -> Self {
        AggregationPolicy {
            min_annotations: 7,
            majority: 0.6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AggregationReport {
    pub kept_labels: Vec<GoldLabel>,
    pub dropped_indecisive: Vec<String>,
    pub dropped_underannotated: Vec<String>,
    pub filtered_labelers: Vec<String>,
}

/// Cohen's kappa over the pairs both labelers annotated.
///
/// `None` when nothing is shared or the expected agreement is 1 (both
/// labelers used a single identical side throughout). A pair listed twice
/// by one labeler counts with its first choice.
pub fn cohen_kappa(ann1: &[(&str, Winner)], ann2: &[(&str, Winner)]) -> Option<f64> {
    let first = first_choices(ann1.iter().copied());
    let second = first_choices(ann2.iter().copied());
    kappa_on_maps(&first, &second)
}

fn first_choices<'a>(it: impl Iterator<Item = (&'a str, Winner)>) -> BTreeMap<&'a str, Winner> {
    let mut map = BTreeMap::new();
    for (pair, choice) in it {
        map.entry(pair).or_insert(choice);
    }
    map
}

fn kappa_on_maps(first: &BTreeMap<&str, Winner>, second: &BTreeMap<&str, Winner>) -> Option<f64> {
    let (mut n, mut agree, mut a1, mut a2) = (0usize, 0usize, 0usize, 0usize);
    for (pair, &c1) in first {
        if let Some(&c2) = second.get(pair) {
            n += 1;
            agree += usize::from(c1 == c2);
            a1 += usize::from(c1 == Winner::A);
            a2 += usize::from(c2 == Winner::A);
        }
    }
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let (pa1, pa2) = (a1 as f64 / nf, a2 as f64 / nf);
    let p_e = pa1 * pa2 + (1.0 - pa1) * (1.0 - pa2);
    if p_e >= 1.0 {
        return None;
    }
    Some((p_o - p_e) / (1.0 - p_e))
}

fn shared_count(first: &BTreeMap<&str, Winner>, second: &BTreeMap<&str, Winner>) -> usize {
    first.keys().filter(|k| second.contains_key(*k)).count()
}

/// Per-labeler real-pair choices (first occurrence wins), hidden questions excluded.
fn real_choices(annotations: &[AnnotationRecord]) -> BTreeMap<&str, BTreeMap<&str, Winner>> {
    let mut out: BTreeMap<&str, BTreeMap<&str, Winner>> = BTreeMap::new();
    for rec in annotations {
        let entry = out.entry(rec.labeler_id.as_str()).or_default();
        if !rec.is_hidden_test() {
            entry.entry(rec.pair_id.as_str()).or_insert(rec.choice);
        }
    }
    out
}

/// Kappa of every labeler pair (lexicographic, `left < right`) sharing at
/// least `min_shared` real pairs, with the shared count.
pub fn pairwise_kappas(
    annotations: &[AnnotationRecord],
    min_shared: usize,
) -> Vec<(String, String, usize, Option<f64>)> {
    let choices = real_choices(annotations);
    let labelers: Vec<_> = choices.keys().copied().collect();
    let mut out = Vec::new();
    for (i, &l1) in labelers.iter().enumerate() {
        for &l2 in &labelers[i + 1..] {
            let shared = shared_count(&choices[l1], &choices[l2]);
            if shared >= min_shared.max(1) {
                out.push((
                    String::from(l1),
                    String::from(l2),
                    shared,
                    kappa_on_maps(&choices[l1], &choices[l2]),
                ));
            }
        }
    }
    out
}

pub fn compute_labeler_stats(annotations: &[AnnotationRecord]) -> Vec<LabelerStats> {
    compute_labeler_stats_with(annotations, KappaPolicy::default())
}

pub fn compute_labeler_stats_with(
    annotations: &[AnnotationRecord],
    policy: KappaPolicy,
) -> Vec<LabelerStats> {
    let choices = real_choices(annotations);
    let mut hidden: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for rec in annotations {
        if let Some(gold) = rec.hidden_gold {
            let e = hidden.entry(rec.labeler_id.as_str()).or_default();
            e.0 += 1;
            e.1 += usize::from(rec.choice == gold);
        }
    }
    let labelers: Vec<&str> = choices.keys().copied().collect();
    labelers
        .iter()
        .map(|&id| {
            let mine = &choices[id];
            let mut kappas = Vec::new();
            for &other in &labelers {
                if other == id {
                    continue;
                }
                let theirs = &choices[other];
                if shared_count(mine, theirs) >= policy.min_shared.max(1) {
                    if let Some(k) = kappa_on_maps(mine, theirs) {
                        kappas.push(k);
                    }
                }
            }
            let (n_hidden, n_correct) = hidden.get(id).copied().unwrap_or((0, 0));
            LabelerStats {
                labeler_id: String::from(id),
                n_real_pairs: mine.len(),
                n_hidden,
                hidden_precision: (n_hidden > 0).then(|| n_correct as f64 / n_hidden as f64),
                avg_kappa: (kappas.len() >= policy.min_counterparts && !kappas.is_empty())
                    .then(|| kappas.iter().sum::<f64>() / kappas.len() as f64),
                n_kappa_counterparts: kappas.len(),
            }
        })
        .collect()
}

/// Ids of labelers falling strictly below any threshold. Undefined kappa or
/// precision never rejects on its own.
pub fn filter_labelers(stats: &[LabelerStats], thresholds: FilterThresholds) -> BTreeSet<String> {
    stats
        .iter()
        .filter(|s| {
            s.n_real_pairs < thresholds.min_pairs
                || s.avg_kappa.is_some_and(|k| k < thresholds.min_kappa)
                || s.hidden_precision.is_some_and(|p| p < thresholds.min_precision)
        })
        .map(|s| s.labeler_id.clone())
        .collect()
}

/// Majority aggregation over non-rejected, non-hidden votes. Every pair seen
/// in a real annotation lands in exactly one of the three output lists.
pub fn aggregate_labels(
    annotations: &[AnnotationRecord],
    rejected: &BTreeSet<String>,
    policy: AggregationPolicy,
) -> AggregationReport {
    let mut votes: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for rec in annotations.iter().filter(|r| !r.is_hidden_test()) {
        let entry = votes.entry(rec.pair_id.as_str()).or_default();
        if !rejected.contains(&rec.labeler_id) {
            match rec.choice {
                Winner::A => entry.0 += 1,
                Winner::B => entry.1 += 1,
            }
        }
    }
    let mut report = AggregationReport {
        filtered_labelers: rejected.iter().cloned().collect(),
        ..Default::default()
    };
    for (pair, (for_a, for_b)) in votes {
        let n = for_a + for_b;
        if n < policy.min_annotations || n == 0 {
            report.dropped_underannotated.push(String::from(pair));
            continue;
        }
        let needed = policy.majority * n as f64 - 1e-9;
        let (winner, count) = if for_a as f64 >= needed {
            (Winner::A, for_a)
        } else if for_b as f64 >= needed {
            (Winner::B, for_b)
        } else {
            report.dropped_indecisive.push(String::from(pair));
            continue;
        };
        report.kept_labels.push(GoldLabel {
            pair_id: String::from(pair),
            winner,
            majority_fraction: count as f64 / n as f64,
        });
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitivityReport {
    pub n_triplets: usize,
    pub n_consistent: usize,
    pub fraction_consistent: f64,
}

/// Audits every evidence triplet whose three pairs all carry a gold label.
///
/// Three preferences over three items admit a strict total order exactly
/// when they do not form a cycle. When an unordered pair is labeled more
/// than once the first label is used; labels for unknown pairs are ignored.
pub fn transitivity_audit(labels: &[GoldLabel], pairs: &[EvidencePair]) -> TransitivityReport {
    let by_id: BTreeMap<&str, &EvidencePair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    // (lo, hi) -> winner evidence id
    let mut beats: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    let mut neighbours: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for label in labels {
        let Some(pair) = by_id.get(label.pair_id.as_str()) else {
            continue;
        };
        let (a, b) = (pair.a.as_str(), pair.b.as_str());
        if a == b {
            continue;
        }
        let winner = match label.winner {
            Winner::A => a,
            Winner::B => b,
        };
        let key = if a < b { (a, b) } else { (b, a) };
        if beats.contains_key(&key) {
            continue;
        }
        beats.insert(key, winner);
        neighbours.entry(a).or_default().insert(b);
        neighbours.entry(b).or_default().insert(a);
    }

    let (mut total, mut consistent) = (0usize, 0usize);
    for (&(x, y), &w_xy) in &beats {
        // x < y < z, so each triplet is visited once
        for &z in neighbours[y].range::<&str, _>((core::ops::Bound::Excluded(y), core::ops::Bound::Unbounded)) {
            let Some(&w_xz) = beats.get(&(x, z)) else {
                continue;
            };
            let w_yz = beats[&(y, z)];
            total += 1;
            let wins = |e: &str| usize::from(w_xy == e) + usize::from(w_xz == e) + usize::from(w_yz == e);
            if wins(x) == 2 || wins(y) == 2 || wins(z) == 2 {
                consistent += 1;
            }
        }
    }
    TransitivityReport {
        n_triplets: total,
        n_consistent: consistent,
        fraction_consistent: if total == 0 {
            1.0
        } else {
            consistent as f64 / total as f64
        },
    }
}

/// Agreement between two independently labeled groups on a shared pair set.
/// `None` marks an indecisive pair. Pairs indecisive in either group, or
/// present in only one, are dropped; `None` is returned if nothing remains.
pub fn group_agreement(
    labels1: &[(&str, Option<Winner>)],
    labels2: &[(&str, Option<Winner>)],
) -> Option<f64> {
    let second: BTreeMap<&str, Option<Winner>> = labels2.iter().copied().collect();
    let (mut n, mut agree) = (0usize, 0usize);
    let mut seen = BTreeSet::new();
    for &(pair, w1) in labels1 {
        if !seen.insert(pair) {
            continue;
        }
        if let (Some(w1), Some(Some(w2))) = (w1, second.get(pair)) {
            n += 1;
            agree += usize::from(w1 == *w2);
        }
    }
    (n > 0).then(|| agree as f64 / n as f64)
}

/// Mean pairwise kappa across labeler pairs, plain and weighted by the
/// number of shared pairs. Undefined kappas are skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSummary {
    pub n_labeler_pairs: usize,
    pub unweighted: Option<f64>,
    pub weighted: Option<f64>,
}

pub fn kappa_summary(annotations: &[AnnotationRecord], min_shared: usize) -> KappaSummary {
    let kappas: Vec<(usize, f64)> = pairwise_kappas(annotations, min_shared)
        .into_iter()
        .filter_map(|(_, _, shared, k)| k.map(|k| (shared, k)))
        .collect();
    if kappas.is_empty() {
        return KappaSummary {
            n_labeler_pairs: 0,
            unweighted: None,
            weighted: None,
        };
    }
    let total_weight: usize = kappas.iter().map(|(w, _)| w).sum();
    KappaSummary {
        n_labeler_pairs: kappas.len(),
        unweighted: Some(kappas.iter().map(|(_, k)| k).sum::<f64>() / kappas.len() as f64),
        weighted: Some(
            kappas.iter().map(|(w, k)| *w as f64 * k).sum::<f64>() / total_weight as f64,
        ),
    }
}

/// Average hidden-test precision over the given labelers (those with at
/// least one hidden question).
pub fn mean_hidden_precision<'a>(stats: impl IntoIterator<Item = &'a LabelerStats>) -> Option<f64> {
    let values: Vec<f64> = stats.into_iter().filter_map(|s| s.hidden_precision).collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
