//! Synthetic preference data: a text's planted score is the number of times
//! the keyword occurs. Texts in a task all have the same token count.

use argrank_core::corpus::Winner;
use argrank_core::model::{EmbeddingTable, LegConfig};
use argrank_core::rng::{seeded, StreamRng};
use argrank_core::train::TrainingPair;
use rand::seq::SliceRandom;
use rand::Rng;

pub const KEYWORD: &str = "strong";
pub const FILLERS: usize = 40;
pub const TEXT_LEN: usize = 8;

pub fn filler(i: usize) -> String {
    format!("w{i:02}")
}

/// Seeded table over the fillers and the keyword.
pub fn table(dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = seeded(seed, 500);
    let mut entries: Vec<(String, Vec<f32>)> = (0..FILLERS)
        .map(|i| (filler(i), (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()))
        .collect();
    entries.push((KEYWORD.to_string(), (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()));
    EmbeddingTable::new(dim, entries).unwrap()
}

pub fn config(dim: usize) -> LegConfig {
    LegConfig { embed_dim: dim, hidden: 8, heads: 4, max_len: 60 }
}

/// A text with `count` keywords at random positions.
pub fn text(rng: &mut StreamRng, count: usize) -> String {
    let mut tokens: Vec<String> = (0..TEXT_LEN).map(|_| filler(rng.gen_range(0..FILLERS))).collect();
    let mut positions: Vec<usize> = (0..TEXT_LEN).collect();
    positions.shuffle(rng);
    for &p in &positions[..count] {
        tokens[p] = KEYWORD.to_string();
    }
    tokens.join(" ")
}

/// Pairs of texts with different keyword counts (0..=4); the side with more
/// keywords wins, and A wins in half of the pairs.
pub fn keyword_pairs(seed: u64, n: usize, tag: &str) -> Vec<TrainingPair> {
    let mut rng = seeded(seed, 501);
    (0..n)
        .map(|i| {
            let hi = rng.gen_range(1..=4);
            let lo = rng.gen_range(0..hi);
            let (strong, weak) = (text(&mut rng, hi), text(&mut rng, lo));
            let a_wins = i % 2 == 0;
            let (a, b) = if a_wins { (strong, weak) } else { (weak, strong) };
            TrainingPair {
                pair_id: format!("{tag}{i:04}"),
                a,
                b,
                winner: if a_wins { Winner::A } else { Winner::B },
            }
        })
        .collect()
}

/// Distinct random texts with arbitrary balanced labels; only memorization
/// can fit them.
pub fn random_label_pairs(seed: u64, n: usize) -> Vec<TrainingPair> {
    let mut rng = seeded(seed, 502);
    (0..n)
        .map(|i| TrainingPair {
            pair_id: format!("r{i:03}"),
            a: text(&mut rng, 0),
            b: text(&mut rng, 0),
            winner: if i % 2 == 0 { Winner::A } else { Winner::B },
        })
        .collect()
}

/// Training settings of the sanity checks: the defaults with a larger step
/// and smaller batches, so that ten epochs are enough on a few hundred pairs.
pub fn sanity_train_config(seed: u64) -> argrank_core::train::TrainConfig {
    argrank_core::train::TrainConfig {
        learning_rate: 0.01,
        batch_size: 8,
        seed,
        ..Default::default()
    }
}

/// Texts of 1..15 tokens mixing fillers, the keyword and unknown words.
pub fn random_texts(seed: u64, n: usize) -> Vec<String> {
    let mut rng = seeded(seed, 503);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..15);
            (0..len)
                .map(|_| match rng.gen_range(0..10) {
                    0 => KEYWORD.to_string(),
                    1 => format!("unk{}", rng.gen_range(0..5)),
                    _ => filler(rng.gen_range(0..FILLERS)),
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}
