use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::corpus::StanceKind;
use crate::model::{EmbeddingTable, LegConfig, SiameseRanker};
use crate::rng::{seeded, stream};
use crate::train::{accuracy, train, TrainConfig, TrainingPair};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StancedPair {
    pub pair: TrainingPair,
    pub kind: StanceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StanceSubset {
    Same,
    Cross,
    Mixed,
}

impl StanceSubset {
    pub const ALL: [StanceSubset; 3] = [StanceSubset::Same, StanceSubset::Cross, StanceSubset::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            StanceSubset::Same => "same",
            StanceSubset::Cross => "cross",
            StanceSubset::Mixed => "mixed",
        }
    }
}

/// Accuracy of a model trained on each row subset and tested on each
/// column subset (rows and columns in `StanceSubset::ALL` order).
#[derive(Debug, Clone, PartialEq)]
pub struct StanceGrid {
    pub cells: [[f64; 3]; 3],
    pub train_size: usize,
    pub test_size: usize,
}

/// Draws the three equal-sized subsets. The mixed subset takes half its
/// pairs from each stance kind (the extra one, if odd, is same-stance).
fn draw_subsets(
    pool: &[StancedPair],
    size: usize,
    seed: u64,
    role: &str,
) -> Result<[Vec<TrainingPair>; 3]> {
    let mut rng = seeded(seed, stream::SUBSETS);
    let mut same: Vec<&TrainingPair> = pool.iter().filter(|p| p.kind == StanceKind::Same).map(|p| &p.pair).collect();
    let mut cross: Vec<&TrainingPair> = pool.iter().filter(|p| p.kind == StanceKind::Cross).map(|p| &p.pair).collect();
    let need = |name: &str, needed: usize, available: usize| -> Result<()> {
        if available < needed {
            return Err(Error::InsufficientPairs {
                subset: alloc::format!("{role}/{name}"),
                needed,
                available,
            });
        }
        Ok(())
    };
    need("same", size, same.len())?;
    need("cross", size, cross.len())?;
    same.shuffle(&mut rng);
    cross.shuffle(&mut rng);
    let take = |v: &[&TrainingPair], n: usize| v.iter().take(n).map(|p| (*p).clone()).collect::<Vec<_>>();
    let same_subset = take(&same, size);
    let cross_subset = take(&cross, size);
    same.shuffle(&mut rng);
    cross.shuffle(&mut rng);
    let mut mixed = take(&same, size - size / 2);
    mixed.extend(take(&cross, size / 2));
    mixed.shuffle(&mut rng);
    Ok([same_subset, cross_subset, mixed])
}

/// Trains one model per training subset (same seed for each) and scores it
/// on every test subset.
#[allow(clippy::too_many_arguments)]
pub fn stance_grid(
    train_pool: &[StancedPair],
    test_pool: &[StancedPair],
    train_size: usize,
    test_size: usize,
    leg: LegConfig,
    config: &TrainConfig,
    table: &EmbeddingTable,
) -> Result<StanceGrid> {
    if train_size == 0 || test_size == 0 {
        return Err(Error::Config("stance grid subsets must be non-empty".to_string()));
    }
    let train_sets = draw_subsets(train_pool, train_size, config.seed, "train")?;
    let test_sets = draw_subsets(test_pool, test_size, config.seed.wrapping_add(1), "test")?;
    let mut cells = [[0.0; 3]; 3];
    for (row, train_set) in train_sets.iter().enumerate() {
        let mut model = SiameseRanker::new(leg, config.seed)?;
        train(&mut model, table, train_set, config)?;
        for (col, test_set) in test_sets.iter().enumerate() {
            cells[row][col] = accuracy(&model, table, test_set)?;
        }
    }
    Ok(StanceGrid {
        cells,
        train_size,
        test_size,
    })
}

/// Which topics are held out together in each fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoldSpec {
    LeaveOneTopicOut,
    Groups(Vec<BTreeSet<String>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValReport {
    /// Held-out topics (joined with `+`) and the fold's test accuracy.
    pub folds: Vec<(String, f64)>,
    pub mean_accuracy: f64,
}

/// Cross-topic validation: for each fold, train on all other topics and test
/// on the held-out ones. Folds with an empty side are skipped.
pub fn cross_topic_validation(
    items: &[(String, TrainingPair)],
    folds: &FoldSpec,
    leg: LegConfig,
    config: &TrainConfig,
    table: &EmbeddingTable,
) -> Result<CrossValReport> {
    let groups: Vec<BTreeSet<String>> = match folds {
        FoldSpec::LeaveOneTopicOut => {
            let topics: BTreeSet<&String> = items.iter().map(|(t, _)| t).collect();
            topics
                .into_iter()
                .map(|t| [t.clone()].into_iter().collect())
                .collect()
        }
        FoldSpec::Groups(g) => g.clone(),
    };
    let mut report = CrossValReport {
        folds: Vec::new(),
        mean_accuracy: 0.0,
    };
    for held_out in groups {
        let (test, train_set): (Vec<_>, Vec<_>) =
            items.iter().partition(|(t, _)| held_out.contains(t));
        if test.is_empty() || train_set.is_empty() {
            continue;
        }
        let train_pairs: Vec<TrainingPair> = train_set.into_iter().map(|(_, p)| p.clone()).collect();
        let test_pairs: Vec<TrainingPair> = test.into_iter().map(|(_, p)| p.clone()).collect();
        let mut model = SiameseRanker::new(leg, config.seed)?;
        train(&mut model, table, &train_pairs, config)?;
        let name = held_out.iter().map(String::as_str).collect::<Vec<_>>().join("+");
        report.folds.push((name, accuracy(&model, table, &test_pairs)?));
    }
    if report.folds.is_empty() {
        return Err(Error::Undefined("cross-topic validation without usable folds"));
    }
    report.mean_accuracy =
        report.folds.iter().map(|f| f.1).sum::<f64>() / report.folds.len() as f64;
    Ok(report)
}
