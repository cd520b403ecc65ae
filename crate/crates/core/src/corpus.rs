//! Topics, evidence sentences, evidence pairs and their gold labels.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::{seeded, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub id: String,
    pub title: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stance {
    Pro,
    Con,
}

impl Stance {
    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Pro => "PRO",
            Stance::Con => "CON",
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stance {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "PRO" => Ok(Stance::Pro),
            "CON" => Ok(Stance::Con),
            other => Err(format!("unknown stance `{other}` (expected PRO or CON)")),
        }
    }
}

/// Whether both sides of a pair argue for the same side of the topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StanceKind {
    Same,
    Cross,
}

/// Side of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Winner {
    A,
    B,
}

impl Winner {
    pub fn as_str(self) -> &'static str {
        match self {
            Winner::A => "A",
            Winner::B => "B",
        }
    }

    pub fn flipped(self) -> Winner {
        match self {
            Winner::A => Winner::B,
            Winner::B => Winner::A,
        }
    }

    /// Class index used by the pairwise softmax.
    pub fn index(self) -> usize {
        match self {
            Winner::A => 0,
            Winner::B => 1,
        }
    }
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Winner {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "A" => Ok(Winner::A),
            "B" => Ok(Winner::B),
            other => Err(format!("unknown side `{other}` (expected A or B)")),
        }
    }
}

/// A single argumentative sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    pub id: String,
    pub topic_id: String,
    pub stance: Stance,
    pub text: String,
    /// Number of Unicode scalar values in `text`.
    pub char_length: usize,
}

impl Evidence {
    pub fn new(
        id: impl Into<String>,
        topic_id: impl Into<String>,
        stance: Stance,
        text: impl Into<String>,
    ) -> Self {
        let text = text.into();
        let char_length = text.chars().count();
        Evidence {
            id: id.into(),
            topic_id: topic_id.into(),
            stance,
            text,
            char_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidencePair {
    pub id: String,
    pub topic_id: String,
    pub a: String,
    pub b: String,
}

impl EvidencePair {
    pub fn new(
        id: impl Into<String>,
        topic_id: impl Into<String>,
        a: impl Into<String>,
        b: impl Into<String>,
    ) -> Self {
        EvidencePair {
            id: id.into(),
            topic_id: topic_id.into(),
            a: a.into(),
            b: b.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldLabel {
    pub pair_id: String,
    pub winner: Winner,
    pub majority_fraction: f64,
}

/// Topic-disjoint partition of pair ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

/// True when the longer text is at most 30% longer than the shorter one
/// (boundary included).
pub fn within_length_ratio(len_a: usize, len_b: usize) -> bool {
    let (lo, hi) = if len_a <= len_b {
        (len_a, len_b)
    } else {
        (len_b, len_a)
    };
    // hi <= 1.3 * lo, in integers
    (hi as u128) * 10 <= (lo as u128) * 13
}

/// In-memory corpus with id lookups.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub topics: BTreeMap<String, Topic>,
    pub evidence: BTreeMap<String, Evidence>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and empty texts. Topics are
    /// optional; when `topics` is non-empty every evidence must reference one.
    pub fn new(topics: Vec<Topic>, evidence: Vec<Evidence>) -> Result<Self> {
        let mut corpus = Corpus::default();
        for topic in topics {
            if topic.title.trim().is_empty() {
                return Err(Error::Config(format!("topic `{}` has an empty title", topic.id)));
            }
            if corpus.topics.contains_key(&topic.id) {
                return Err(Error::Config(format!("duplicate topic id `{}`", topic.id)));
            }
            corpus.topics.insert(topic.id.clone(), topic);
        }
        for ev in evidence {
            if ev.text.is_empty() {
                return Err(Error::Config(format!("evidence `{}` has empty text", ev.id)));
            }
            if !corpus.topics.is_empty() && !corpus.topics.contains_key(&ev.topic_id) {
                return Err(Error::Config(format!(
                    "evidence `{}` references unknown topic `{}`",
                    ev.id, ev.topic_id
                )));
            }
            if corpus.evidence.contains_key(&ev.id) {
                return Err(Error::Config(format!("duplicate evidence id `{}`", ev.id)));
            }
            corpus.evidence.insert(ev.id.clone(), ev);
        }
        Ok(corpus)
    }

    pub fn get(&self, id: &str) -> Result<&Evidence> {
        self.evidence
            .get(id)
            .ok_or_else(|| Error::UnknownEvidence(id.to_string()))
    }

    /// Both sides of a pair.
    pub fn sides(&self, pair: &EvidencePair) -> Result<(&Evidence, &Evidence)> {
        Ok((self.get(&pair.a)?, self.get(&pair.b)?))
    }

    pub fn stance_kind(&self, pair: &EvidencePair) -> Result<StanceKind> {
        let (a, b) = self.sides(pair)?;
        Ok(if a.stance == b.stance {
            StanceKind::Same
        } else {
            StanceKind::Cross
        })
    }

    /// Checks the structural pair invariants: distinct sides, both known,
    /// both on the pair's topic.
    pub fn validate_pair(&self, pair: &EvidencePair) -> Result<()> {
        let invalid = |reason: String| Error::InvalidPair {
            pair_id: pair.id.clone(),
            reason,
        };
        if pair.a == pair.b {
            return Err(invalid(format!("both sides are `{}`", pair.a)));
        }
        let (a, b) = self.sides(pair)?;
        if a.topic_id != pair.topic_id || b.topic_id != pair.topic_id {
            return Err(invalid(format!(
                "sides belong to topics `{}` and `{}`, pair topic is `{}`",
                a.topic_id, b.topic_id, pair.topic_id
            )));
        }
        Ok(())
    }

    pub fn topic_title(&self, topic_id: &str) -> Option<&str> {
        self.topics.get(topic_id).map(|t| t.title.as_str())
    }
}

/// Output of [`build_pairs`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSampling {
    pub pairs: Vec<EvidencePair>,
    /// Topics with fewer than two evidence sentences.
    pub skipped_topics: Vec<String>,
}

/// Samples same-topic pairs whose lengths differ by at most 30% of the
/// shorter side.
///
/// Per topic (in topic-id order) all eligible unordered combinations are
/// enumerated, shuffled with a seeded stream, and the first
/// `per_topic_budget` are kept. The side placed first is a seeded coin flip.
pub fn build_pairs(evidence: &[Evidence], per_topic_budget: usize, seed: u64) -> PairSampling {
    let mut by_topic: BTreeMap<&str, Vec<&Evidence>> = BTreeMap::new();
    for ev in evidence {
        by_topic.entry(ev.topic_id.as_str()).or_default().push(ev);
    }
    let mut rng = seeded(seed, stream::PAIRS);
    let mut out = PairSampling::default();
    for (topic, members) in by_topic {
        if members.len() < 2 {
            out.skipped_topics.push(topic.to_string());
            continue;
        }
        let mut eligible = Vec::new();
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                if members[i].id != members[j].id
                    && within_length_ratio(members[i].char_length, members[j].char_length)
                {
                    eligible.push((i, j));
                }
            }
        }
        eligible.shuffle(&mut rng);
        for (k, &(i, j)) in eligible.iter().take(per_topic_budget).enumerate() {
            let (a, b) = if rng.gen::<bool>() {
                (members[i], members[j])
            } else {
                (members[j], members[i])
            };
            out.pairs.push(EvidencePair::new(
                format!("{topic}-p{k:05}"),
                topic,
                a.id.clone(),
                b.id.clone(),
            ));
        }
    }
    out
}

/// Sends every pair whose topic is in `test_topic_ids` to the test side.
pub fn split_by_topic(pairs: &[EvidencePair], test_topic_ids: &BTreeSet<String>) -> DatasetSplit {
    let mut split = DatasetSplit::default();
    for pair in pairs {
        if test_topic_ids.contains(&pair.topic_id) {
            split.test.insert(pair.id.clone());
        } else {
            split.train.insert(pair.id.clone());
        }
    }
    split
}
