//! Annotation statistics by direct counting.

use std::collections::{BTreeMap, BTreeSet};

/// One vote: labeler, pair, chose A, hidden gold (true = A).
#[derive(Debug, Clone)]
pub struct Vote {
    pub labeler: String,
    pub pair: String,
    pub chose_a: bool,
    pub hidden_gold_a: Option<bool>,
}

/// First real choice per pair of one labeler.
fn choices(votes: &[Vote], labeler: &str) -> BTreeMap<String, bool> {
    let mut out = BTreeMap::new();
    for v in votes.iter().filter(|v| v.labeler == labeler && v.hidden_gold_a.is_none()) {
        out.entry(v.pair.clone()).or_insert(v.chose_a);
    }
    out
}

/// Kappa from the 2x2 confusion table of shared pairs.
pub fn kappa(c1: &BTreeMap<String, bool>, c2: &BTreeMap<String, bool>) -> Option<f64> {
    let mut table = [[0usize; 2]; 2];
    for (pair, &a1) in c1 {
        if let Some(&a2) = c2.get(pair) {
            table[usize::from(a1)][usize::from(a2)] += 1;
        }
    }
    let n = (table[0][0] + table[0][1] + table[1][0] + table[1][1]) as f64;
    if n == 0.0 {
        return None;
    }
    let po = (table[0][0] + table[1][1]) as f64 / n;
    let row1 = (table[1][0] + table[1][1]) as f64 / n;
    let col1 = (table[0][1] + table[1][1]) as f64 / n;
    let pe = row1 * col1 + (1.0 - row1) * (1.0 - col1);
    if pe >= 1.0 {
        return None;
    }
    Some((po - pe) / (1.0 - pe))
}

pub fn kappa_of_lists(l1: &[(String, bool)], l2: &[(String, bool)]) -> Option<f64> {
    let first = |l: &[(String, bool)]| {
        let mut m = BTreeMap::new();
        for (p, c) in l {
            m.entry(p.clone()).or_insert(*c);
        }
        m
    };
    kappa(&first(l1), &first(l2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub n_real: usize,
    pub n_hidden: usize,
    pub precision: Option<f64>,
    pub avg_kappa: Option<f64>,
    pub counterparts: usize,
}

pub fn labeler_stats(votes: &[Vote], min_shared: usize, min_counterparts: usize) -> BTreeMap<String, Stats> {
    let labelers: BTreeSet<String> = votes.iter().map(|v| v.labeler.clone()).collect();
    let mut out = BTreeMap::new();
    for l in &labelers {
        let mine = choices(votes, l);
        let mut ks = Vec::new();
        for other in labelers.iter().filter(|o| *o != l) {
            let theirs = choices(votes, other);
            let shared = mine.keys().filter(|p| theirs.contains_key(*p)).count();
            if shared >= min_shared.max(1) {
                if let Some(k) = kappa(&mine, &theirs) {
                    ks.push(k);
                }
            }
        }
        let hidden: Vec<&Vote> = votes
            .iter()
            .filter(|v| &v.labeler == l && v.hidden_gold_a.is_some())
            .collect();
        let correct = hidden.iter().filter(|v| Some(v.chose_a) == v.hidden_gold_a).count();
        out.insert(
            l.clone(),
            Stats {
                n_real: mine.len(),
                n_hidden: hidden.len(),
                precision: (!hidden.is_empty()).then(|| correct as f64 / hidden.len() as f64),
                avg_kappa: (ks.len() >= min_counterparts && !ks.is_empty())
                    .then(|| ks.iter().sum::<f64>() / ks.len() as f64),
                counterparts: ks.len(),
            },
        );
    }
    out
}

pub fn rejected(stats: &BTreeMap<String, Stats>, min_pairs: usize, min_kappa: f64, min_precision: f64) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (id, s) in stats {
        let mut bad = s.n_real < min_pairs;
        if let Some(k) = s.avg_kappa {
            bad |= k < min_kappa;
        }
        if let Some(p) = s.precision {
            bad |= p < min_precision;
        }
        if bad {
            out.insert(id.clone());
        }
    }
    out
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Aggregated {
    /// pair -> (winner is A, fraction)
    pub kept: BTreeMap<String, (bool, f64)>,
    pub indecisive: BTreeSet<String>,
    pub underannotated: BTreeSet<String>,
}

/// Majority with the 60% rule checked in integers: `10 * votes >= 6 * n`.
pub fn aggregate(votes: &[Vote], rejected: &BTreeSet<String>, min_annotations: usize) -> Aggregated {
    let pairs: BTreeSet<String> = votes
        .iter()
        .filter(|v| v.hidden_gold_a.is_none())
        .map(|v| v.pair.clone())
        .collect();
    let mut out = Aggregated::default();
    for pair in pairs {
        let valid: Vec<&Vote> = votes
            .iter()
            .filter(|v| v.pair == pair && v.hidden_gold_a.is_none() && !rejected.contains(&v.labeler))
            .collect();
        let n = valid.len();
        let a = valid.iter().filter(|v| v.chose_a).count();
        let b = n - a;
        if n < min_annotations || n == 0 {
            out.underannotated.insert(pair);
        } else if 10 * a >= 6 * n {
            out.kept.insert(pair, (true, a as f64 / n as f64));
        } else if 10 * b >= 6 * n {
            out.kept.insert(pair, (false, b as f64 / n as f64));
        } else {
            out.indecisive.insert(pair);
        }
    }
    out
}

/// Every unordered triple of items whose three pairs are all labeled, and
/// how many of them admit some permutation that orders all three labels.
/// `beats` maps `(winner, loser)` and holds each unordered pair once.
pub fn transitivity(items: &[String], beats: &BTreeSet<(String, String)>) -> (usize, usize) {
    let has = |x: &String, y: &String| beats.contains(&(x.clone(), y.clone()));
    let labeled = |x: &String, y: &String| has(x, y) || has(y, x);
    let (mut total, mut ok) = (0, 0);
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            for k in j + 1..items.len() {
                let t = [&items[i], &items[j], &items[k]];
                if !(labeled(t[0], t[1]) && labeled(t[0], t[2]) && labeled(t[1], t[2])) {
                    continue;
                }
                total += 1;
                let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
                if perms.iter().any(|p| {
                    has(t[p[0]], t[p[1]]) && has(t[p[0]], t[p[2]]) && has(t[p[1]], t[p[2]])
                }) {
                    ok += 1;
                }
            }
        }
    }
    (total, ok)
}
