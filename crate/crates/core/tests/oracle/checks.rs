//! Library-versus-oracle comparisons over one seeded random fixture each.
//! An `Err` carries a description of the first disagreement.

use std::collections::BTreeSet;

use argrank_core::annotation::{
    aggregate_labels, cohen_kappa, compute_labeler_stats_with, filter_labelers, transitivity_audit,
    AggregationPolicy, FilterThresholds, KappaPolicy,
};
use argrank_core::corpus::Winner;
use argrank_core::eval::{pearson_r, spearman_rho};
use argrank_core::rng::{seeded, StreamRng};
use rand::Rng;

use super::{annotation as brute, fixtures, metrics};

fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= tol,
        (None, None) => true,
        _ => false,
    }
}

/// Kappa, labeler statistics, filtering and aggregation on one fixture.
pub fn annotation_trial(seed: u64) -> Result<(), String> {
    let mut rng = seeded(seed, 400);
    let labelers = rng.gen_range(2..14);
    let pairs = rng.gen_range(3..40);
    let coverage = rng.gen_range(0.3..1.0);
    let (records, votes) = fixtures::random_votes(&mut rng, labelers, pairs, coverage);
    let policy = KappaPolicy {
        min_shared: rng.gen_range(1..12),
        min_counterparts: rng.gen_range(1..6),
    };
    let thresholds = FilterThresholds {
        min_pairs: rng.gen_range(0..30),
        min_kappa: rng.gen_range(-0.5..0.8),
        min_precision: rng.gen_range(0.0..1.0),
    };
    let min_annotations = rng.gen_range(1..9);

    // pairwise kappa
    let ids: BTreeSet<&str> = records.iter().map(|r| r.labeler_id.as_str()).collect();
    let lists: Vec<(&str, Vec<(&str, Winner)>, Vec<(String, bool)>)> = ids
        .iter()
        .map(|&id| {
            let real: Vec<_> = records.iter().filter(|r| r.labeler_id == id && !r.is_hidden_test()).collect();
            (
                id,
                real.iter().map(|r| (r.pair_id.as_str(), r.choice)).collect(),
                real.iter().map(|r| (r.pair_id.clone(), r.choice == Winner::A)).collect(),
            )
        })
        .collect();
    for (i, (l1, lib1, or1)) in lists.iter().enumerate() {
        for (l2, lib2, or2) in &lists[i + 1..] {
            let got = cohen_kappa(lib1, lib2);
            let want = brute::kappa_of_lists(or1, or2);
            if !close(got, want, 1e-12) {
                return Err(format!("kappa({l1}, {l2}): {got:?} vs {want:?}"));
            }
            if got != cohen_kappa(lib2, lib1) {
                return Err(format!("kappa({l1}, {l2}) is not symmetric"));
            }
        }
    }

    // statistics
    let stats = compute_labeler_stats_with(&records, policy);
    let want = brute::labeler_stats(&votes, policy.min_shared, policy.min_counterparts);
    if stats.len() != want.len() {
        return Err(format!("{} labelers vs {}", stats.len(), want.len()));
    }
    for s in &stats {
        let w = &want[&s.labeler_id];
        let same = s.n_real_pairs == w.n_real
            && s.n_hidden == w.n_hidden
            && s.n_kappa_counterparts == w.counterparts
            && close(s.hidden_precision, w.precision, 1e-12)
            && close(s.avg_kappa, w.avg_kappa, 1e-12);
        if !same {
            return Err(format!("stats of {}: {s:?} vs {w:?}", s.labeler_id));
        }
    }

    // filtering
    let rejected = filter_labelers(&stats, thresholds);
    let want_rejected = brute::rejected(&want, thresholds.min_pairs, thresholds.min_kappa, thresholds.min_precision);
    if rejected != want_rejected {
        return Err(format!("rejected {rejected:?} vs {want_rejected:?}"));
    }

    // aggregation
    let report = aggregate_labels(
        &records,
        &rejected,
        AggregationPolicy { min_annotations, majority: 0.6 },
    );
    let agg = brute::aggregate(&votes, &rejected, min_annotations);
    let kept: Vec<(String, bool, f64)> = report
        .kept_labels
        .iter()
        .map(|g| (g.pair_id.clone(), g.winner == Winner::A, g.majority_fraction))
        .collect();
    let want_kept: Vec<(String, bool, f64)> = agg.kept.iter().map(|(p, (a, f))| (p.clone(), *a, *f)).collect();
    if kept != want_kept {
        return Err(format!("kept {kept:?} vs {want_kept:?}"));
    }
    let set = |v: &[String]| v.iter().cloned().collect::<BTreeSet<_>>();
    if set(&report.dropped_indecisive) != agg.indecisive || set(&report.dropped_underannotated) != agg.underannotated {
        return Err("dropped pair lists differ".into());
    }
    Ok(())
}

/// Transitivity counts on one random preference graph.
pub fn transitivity_trial(seed: u64) -> Result<(), String> {
    let mut rng = seeded(seed, 401);
    let items = rng.gen_range(3..12);
    let density = rng.gen_range(0.2..1.0);
    let (pairs, labels, ids, beats) = fixtures::random_preferences(&mut rng, items, density);
    let report = transitivity_audit(&labels, &pairs);
    let (total, ok) = brute::transitivity(&ids, &beats);
    if (report.n_triplets, report.n_consistent) != (total, ok) {
        return Err(format!(
            "triplets {}/{} vs {ok}/{total}",
            report.n_consistent, report.n_triplets
        ));
    }
    Ok(())
}

/// Random vectors of length 2..50; every fourth trial uses small integers so
/// that ties are common.
pub fn correlation_trial(seed: u64) -> Result<(), String> {
    let mut rng = seeded(seed, 402);
    let n = rng.gen_range(2..50);
    let ties = seed.is_multiple_of(4);
    let draw = |rng: &mut StreamRng| -> Vec<f64> {
        (0..n)
            .map(|_| if ties { f64::from(rng.gen_range(0..4)) } else { rng.gen_range(-10.0..10.0) })
            .collect()
    };
    let x = draw(&mut rng);
    let y = draw(&mut rng);
    let p = pearson_r(&x, &y).ok();
    let s = spearman_rho(&x, &y).ok();
    if !close(p, metrics::pearson(&x, &y), 1e-9) {
        return Err(format!("pearson {p:?} vs {:?}", metrics::pearson(&x, &y)));
    }
    if !close(s, metrics::spearman(&x, &y), 1e-9) {
        return Err(format!("spearman {s:?} vs {:?}", metrics::spearman(&x, &y)));
    }
    // strictly increasing transforms leave the ranks unchanged
    if let Some(s) = s {
        let tx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        let ty: Vec<f64> = y.iter().map(|v| (v / 3.0).exp()).collect();
        let st = spearman_rho(&tx, &ty).map_err(|e| e.to_string())?;
        if (st - s).abs() > 1e-9 {
            return Err(format!("spearman changed under monotone transform: {s} vs {st}"));
        }
    }
    Ok(())
}
