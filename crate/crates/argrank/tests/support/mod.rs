//! A small synthetic dataset on disk and a runner for the binary.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use argrank::formats;
use argrank_core::annotation::AnnotationRecord;
use argrank_core::corpus::{within_length_ratio, Evidence, EvidencePair, GoldLabel, Stance, Topic, Winner};
use argrank_core::eval::ReasonUnit;
use argrank_core::rng::seeded;

#[path = "../../../core/tests/oracle/mod.rs"]
pub mod oracle;

use oracle::synthetic;

pub const DIM: usize = 8;
pub const TOPICS: usize = 4;
pub const PER_TOPIC: usize = 12;
pub const TEST_TOPIC: &str = "T3";

/// Flags for a small, fast model.
pub const SMALL_MODEL: [&str; 10] = [
    "--hidden", "4", "--heads", "2", "--epochs", "2", "--batch-size", "8", "--learning-rate", "0.01",
];

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_argrank"))
        .args(args)
        .env_remove("ARGRANK_DATA_ROOT")
        .output()
        .expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Keyword count of an evidence, its planted convincingness.
pub fn keywords(text: &str) -> usize {
    text.split(' ').filter(|t| *t == synthetic::KEYWORD).count()
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub evidence: Vec<Evidence>,
    pub pairs: Vec<EvidencePair>,
    pub train_labels: Vec<GoldLabel>,
    pub test_labels: Vec<GoldLabel>,
    pub unbalanced: Vec<EvidencePair>,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    pub fn test_pairs(&self) -> Vec<&EvidencePair> {
        self.pairs.iter().filter(|p| p.topic_id == TEST_TOPIC).collect()
    }

    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = seeded(1, 600);
        let topics: Vec<Topic> = (0..TOPICS)
            .map(|t| Topic { id: format!("T{t}"), title: format!("motion number {t}") })
            .collect();
        let mut evidence = Vec::new();
        for t in 0..TOPICS {
            for i in 0..PER_TOPIC {
                let stance = if i % 2 == 0 { Stance::Pro } else { Stance::Con };
                let text = synthetic::text(&mut rng, (i / 2) % 5);
                evidence.push(Evidence::new(format!("e{t}_{i:02}"), format!("T{t}"), stance, text));
            }
        }
        let mut pairs = Vec::new();
        let mut train_labels = Vec::new();
        let mut test_labels = Vec::new();
        let mut unbalanced = Vec::new();
        let mut n = 0;
        for t in 0..TOPICS {
            let items = &evidence[t * PER_TOPIC..(t + 1) * PER_TOPIC];
            for i in 0..items.len() {
                for j in i + 1..items.len() {
                    let (ka, kb) = (keywords(&items[i].text), keywords(&items[j].text));
                    if ka == kb {
                        continue;
                    }
                    let (a, b) = if n % 2 == 0 { (&items[i], &items[j]) } else { (&items[j], &items[i]) };
                    let id = format!("p{n:04}");
                    n += 1;
                    let pair = EvidencePair::new(id.clone(), format!("T{t}"), a.id.clone(), b.id.clone());
                    let winner = if keywords(&a.text) > keywords(&b.text) { Winner::A } else { Winner::B };
                    let label = GoldLabel { pair_id: id, winner, majority_fraction: 0.8 };
                    if t == TOPICS - 1 {
                        if !within_length_ratio(a.char_length, b.char_length) {
                            unbalanced.push(pair.clone());
                        }
                        test_labels.push(label);
                    } else {
                        train_labels.push(label);
                    }
                    pairs.push(pair);
                }
            }
        }
        let f = Fixture { dir, evidence, pairs, train_labels, test_labels, unbalanced };
        let w = |name: &str, text: String| std::fs::write(f.path(name), text).unwrap();
        w("topics.tsv", formats::write_topics(&topics).unwrap());
        w("evidence.tsv", formats::write_evidence(&f.evidence).unwrap());
        w("pairs.tsv", formats::write_pairs(&f.pairs).unwrap());
        w("train_labels.tsv", formats::write_labels(&f.train_labels).unwrap());
        w("test_labels.tsv", formats::write_labels(&f.test_labels).unwrap());
        w("unbalanced_pairs.tsv", formats::write_pairs(&f.unbalanced).unwrap());
        let unbalanced_labels: Vec<GoldLabel> = f
            .test_labels
            .iter()
            .filter(|l| f.unbalanced.iter().any(|p| p.id == l.pair_id))
            .cloned()
            .collect();
        w("unbalanced_labels.tsv", formats::write_labels(&unbalanced_labels).unwrap());
        w("embeddings.txt", formats::write_embeddings(&synthetic::table(DIM, 1)));
        let scores = f
            .evidence
            .iter()
            .map(|e| (e.id.clone(), keywords(&e.text) as f64 * 0.25))
            .collect();
        w("detection_scores.tsv", formats::write_scores(&scores).unwrap());
        let gold_scores = f
            .evidence
            .iter()
            .filter(|e| e.topic_id == TEST_TOPIC)
            .map(|e| (e.id.clone(), keywords(&e.text) as f64))
            .collect();
        w("gold_scores.tsv", formats::write_scores(&gold_scores).unwrap());
        let reasons: Vec<ReasonUnit> = f
            .test_labels
            .iter()
            .enumerate()
            .map(|(i, l)| ReasonUnit {
                pair_id: l.pair_id.clone(),
                code: if i % 2 == 0 { "C8-1" } else { "C1" }.to_string(),
                text: "more details".to_string(),
            })
            .collect();
        w("reasons.tsv", formats::write_reasons(&reasons).unwrap());
        w("annotations.tsv", formats::write_annotations(&planted_annotations()).unwrap());
        f
    }
}

/// Eleven agreeing labelers and `contrarian`, who picks the other side on
/// every real pair and fails every hidden question. 25 pairs, each labeled
/// by all twelve.
pub fn planted_annotations() -> Vec<AnnotationRecord> {
    let truth = |p: usize| if p.is_multiple_of(3) { Winner::B } else { Winner::A };
    let mut out = Vec::new();
    for l in 0..12 {
        let name = if l == 11 { "contrarian".to_string() } else { format!("l{l:02}") };
        for p in 0..25 {
            let choice = if l == 11 { truth(p).flipped() } else { truth(p) };
            out.push(AnnotationRecord::real(name.clone(), format!("q{p:02}"), choice));
        }
        for h in 0..4 {
            let gold = truth(h);
            let choice = if l == 11 { gold.flipped() } else { gold };
            out.push(AnnotationRecord::hidden(name.clone(), format!("h{h}"), choice, gold));
        }
    }
    out
}

/// `train` on the fixture's training labels with the small model.
pub fn train(f: &Fixture, out: &str, extra: &[&str]) -> std::process::Output {
    let mut args = vec![
        "train".to_string(),
        "--evidence".into(),
        f.arg("evidence.tsv"),
        "--topics".into(),
        f.arg("topics.tsv"),
        "--pairs".into(),
        f.arg("pairs.tsv"),
        "--labels".into(),
        f.arg("train_labels.tsv"),
        "--embeddings".into(),
        f.arg("embeddings.txt"),
        "--out".into(),
        f.arg(out),
    ];
    args.extend(SMALL_MODEL.iter().map(|s| s.to_string()));
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&refs)
}

/// `eval` with every optional input and a small stance grid.
pub fn full_eval(f: &Fixture, ck: &str, out: &str) -> std::process::Output {
    run(&[
        "eval",
        "--checkpoint",
        ck,
        "--embeddings",
        &f.arg("embeddings.txt"),
        "--evidence",
        &f.arg("evidence.tsv"),
        "--topics",
        &f.arg("topics.tsv"),
        "--pairs",
        &f.arg("pairs.tsv"),
        "--labels",
        &f.arg("test_labels.tsv"),
        "--train-labels",
        &f.arg("train_labels.tsv"),
        "--detection-scores",
        &f.arg("detection_scores.tsv"),
        "--gold-scores",
        &f.arg("gold_scores.tsv"),
        "--unbalanced-pairs",
        &f.arg("unbalanced_pairs.tsv"),
        "--unbalanced-labels",
        &f.arg("unbalanced_labels.tsv"),
        "--grid-train-size",
        "20",
        "--grid-test-size",
        "10",
        "--epochs",
        "1",
        "--seed",
        "5",
        "--out",
        &f.arg(out),
    ])
}
