use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use argrank_core::annotation::{
    aggregate_labels, compute_labeler_stats_with, filter_labelers, kappa_summary, mean_hidden_precision,
    transitivity_audit, AggregationPolicy, AnnotationRecord, FilterThresholds, KappaPolicy,
};
use argrank_core::corpus::{build_pairs, Corpus, EvidencePair, GoldLabel, Stance, StanceKind, Winner};
use argrank_core::eval::{
    contrast_pairs, length_predictions, length_robustness_eval, model_predictions,
    most_frequent_label_baseline, pairwise_accuracy, rank_evaluation, reason_error_analysis,
    score_predictions, stance_grid, word_distribution_diff, Grouping, PairPrediction, StanceSubset,
    StancedPair,
};
use argrank_core::model::{pairwise_from_outputs, pointwise_from_output, EmbeddingTable, LegConfig, SiameseRanker};
use argrank_core::train::{resolve_pairs, train, TrainConfig, TrainingPair};

use super::uncovered;
use crate::checkpoint::Checkpoint;
use crate::config::Settings;
use crate::significance::{one_sample_t_test, wilcoxon_signed_rank};
use crate::{formats, Error, Result};

pub const CHECKPOINT_FILE: &str = "checkpoint.evck";
pub const LOSS_LOG_FILE: &str = "loss_log.tsv";
pub const SCORES_FILE: &str = "scores.tsv";
pub const PAIR_PROBABILITIES_FILE: &str = "pair_probabilities.tsv";
pub const SUMMARY_FILE: &str = "summary.txt";

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_v1.txt");

pub fn dispatch(s: &Settings) -> Result<String> {
    match s.command.as_str() {
        "ingest" => ingest(s),
        "audit" => audit(s),
        "train" => cmd_train(s),
        "score" => score(s),
        "eval" => eval(s),
        "analyze" => analyze(s),
        other => Err(Error::Usage(format!("unknown command `{other}`"))),
    }
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn metric_table(rows: &[(&str, String)]) -> Result<String> {
    formats::to_tsv(
        &["metric", "value"],
        rows.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
    )
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    formats::write_file(&dir.join(name), contents)
}

/// Writes the summary and the run configuration and returns the summary.
fn finish(s: &Settings, dir: &Path, summary: String) -> Result<String> {
    write(dir, SUMMARY_FILE, &summary)?;
    s.write_run_config(dir)?;
    Ok(summary)
}

fn load_corpus(s: &Settings) -> Result<Corpus> {
    let evidence = formats::load_evidence(&s.input("evidence")?)?;
    let topics = match s.optional_input("topics")? {
        Some(p) => formats::load_topics(&p)?,
        None => Vec::new(),
    };
    Ok(Corpus::new(topics, evidence)?)
}

fn train_config(s: &Settings, defaults: TrainConfig) -> Result<TrainConfig> {
    let config = TrainConfig {
        epochs: s.parse_or("epochs", defaults.epochs)?,
        learning_rate: s.parse_or("learning_rate", defaults.learning_rate)?,
        clip_norm: s.parse_or("clip_norm", defaults.clip_norm)?,
        dropout_rate: s.parse_or("dropout_rate", defaults.dropout_rate)?,
        batch_size: s.parse_or("batch_size", defaults.batch_size)?,
        seed: s.parse_or("seed", defaults.seed)?,
    };
    config.validate()?;
    Ok(config)
}

/// Loads the checkpoint and its embeddings, rejecting a vocabulary other
/// than the one used in training.
fn load_model(s: &Settings) -> Result<(Checkpoint, EmbeddingTable)> {
    let ck_path = s.input("checkpoint")?;
    let emb_path = s.input("embeddings")?;
    let ck = Checkpoint::load(&ck_path)?;
    let table = formats::load_embeddings(&emb_path)?;
    ck.check_table(&table)?;
    Ok((ck, table))
}

/// The pairs behind `labels`, in label order. Labels without a pair and
/// pairs with unknown evidence are reported together by id.
fn covered_pairs(corpus: &Corpus, pairs: &[EvidencePair], labels: &[GoldLabel]) -> Result<Vec<EvidencePair>> {
    let by_id: BTreeMap<&str, &EvidencePair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    let missing: Vec<String> = labels
        .iter()
        .filter(|l| !by_id.contains_key(l.pair_id.as_str()))
        .map(|l| l.pair_id.clone())
        .collect();
    uncovered("labeled pairs missing from the pairs file", missing)?;
    let out: Vec<EvidencePair> = labels.iter().map(|l| by_id[l.pair_id.as_str()].clone()).collect();
    let unknown: Vec<String> = out
        .iter()
        .filter(|p| corpus.sides(p).is_err())
        .map(|p| p.id.clone())
        .collect();
    uncovered("pairs referencing unknown evidence", unknown)?;
    Ok(out)
}

fn ingest(s: &Settings) -> Result<String> {
    let labels_path = s.optional_input("labels")?;
    let annotations_path = s.optional_input("annotations")?;
    let pairs_path = s.optional_input("pairs")?;
    let corpus = load_corpus(s)?;
    let seed: u64 = s.parse_or("seed", 0)?;
    let mut skipped_topics = Vec::new();
    let pairs = match (pairs_path, s.parse::<usize>("pair_budget")?) {
        (Some(p), _) => formats::load_pairs(&p)?,
        (None, Some(budget)) => {
            let evidence: Vec<_> = corpus.evidence.values().cloned().collect();
            let sampling = build_pairs(&evidence, budget, seed);
            skipped_topics = sampling.skipped_topics;
            sampling.pairs
        }
        (None, None) => Vec::new(),
    };
    for pair in &pairs {
        corpus.validate_pair(pair)?;
    }
    let labels = match &labels_path {
        Some(p) => formats::load_labels(p)?,
        None => Vec::new(),
    };
    covered_pairs(&corpus, &pairs, &labels)?;
    let annotations = match &annotations_path {
        Some(p) => formats::load_annotations(p)?,
        None => Vec::new(),
    };

    let out = s.output_dir()?;
    let evidence: Vec<_> = corpus.evidence.values().cloned().collect();
    write(&out, "evidence.tsv", formats::write_evidence(&evidence)?)?;
    if !corpus.topics.is_empty() {
        let topics: Vec<_> = corpus.topics.values().cloned().collect();
        write(&out, "topics.tsv", formats::write_topics(&topics)?)?;
    }
    write(&out, "pairs.tsv", formats::write_pairs(&pairs)?)?;
    if labels_path.is_some() {
        write(&out, "labels.tsv", formats::write_labels(&labels)?)?;
    }
    if annotations_path.is_some() {
        write(&out, "annotations.tsv", formats::write_annotations(&annotations)?)?;
    }

    #[derive(Default)]
    struct TopicCounts {
        pro: usize,
        con: usize,
        same: usize,
        cross: usize,
        pairs: usize,
    }
    let mut per_topic: BTreeMap<&str, TopicCounts> = BTreeMap::new();
    for ev in corpus.evidence.values() {
        let t = per_topic.entry(ev.topic_id.as_str()).or_default();
        match ev.stance {
            Stance::Pro => t.pro += 1,
            Stance::Con => t.con += 1,
        }
    }
    for pair in &pairs {
        let t = per_topic.entry(pair.topic_id.as_str()).or_default();
        t.pairs += 1;
        match corpus.stance_kind(pair)? {
            StanceKind::Same => t.same += 1,
            StanceKind::Cross => t.cross += 1,
        }
    }
    let topic_rows = per_topic.iter().map(|(id, t)| {
        vec![
            id.to_string(),
            (t.pro + t.con).to_string(),
            t.pro.to_string(),
            t.con.to_string(),
            t.pairs.to_string(),
            t.same.to_string(),
            t.cross.to_string(),
        ]
    });
    write(
        &out,
        "summary_topics.tsv",
        formats::to_tsv(
            &["topic_id", "n_evidence", "n_pro", "n_con", "n_pairs", "n_same_stance", "n_cross_stance"],
            topic_rows,
        )?,
    )?;

    let sum = |f: fn(&TopicCounts) -> usize| per_topic.values().map(f).sum::<usize>();
    let a_wins = labels.iter().filter(|l| l.winner == Winner::A).count();
    let (most_frequent, share) = if labels.is_empty() {
        ("NA", None)
    } else if 2 * a_wins >= labels.len() {
        ("A", Some(a_wins as f64 / labels.len() as f64))
    } else {
        ("B", Some((labels.len() - a_wins) as f64 / labels.len() as f64))
    };
    let rows = [
        ("n_topics", per_topic.len().to_string()),
        ("n_evidence", corpus.evidence.len().to_string()),
        ("n_pro", sum(|t| t.pro).to_string()),
        ("n_con", sum(|t| t.con).to_string()),
        ("n_pairs", pairs.len().to_string()),
        ("n_same_stance_pairs", sum(|t| t.same).to_string()),
        ("n_cross_stance_pairs", sum(|t| t.cross).to_string()),
        ("n_labels", labels.len().to_string()),
        ("n_label_a", a_wins.to_string()),
        ("n_label_b", (labels.len() - a_wins).to_string()),
        ("most_frequent_label", most_frequent.to_string()),
        ("most_frequent_label_share", na(share)),
        ("n_annotations", annotations.len().to_string()),
        ("skipped_topics", skipped_topics.join(",")),
    ];
    write(&out, "summary.tsv", metric_table(&rows)?)?;

    let mut text = String::new();
    writeln!(text, "{} topics, {} evidence ({} PRO, {} CON)", per_topic.len(), corpus.evidence.len(), rows[2].1, rows[3].1).unwrap();
    writeln!(text, "{} pairs ({} same-stance, {} cross-stance)", pairs.len(), rows[5].1, rows[6].1).unwrap();
    if let Some(share) = share {
        writeln!(text, "{} labels; most frequent label {most_frequent} covers {:.1}%", labels.len(), 100.0 * share).unwrap();
    }
    if !skipped_topics.is_empty() {
        writeln!(text, "topics without a valid pair: {}", skipped_topics.join(", ")).unwrap();
    }
    finish(s, &out, text)
}

fn audit(s: &Settings) -> Result<String> {
    let annotations = formats::load_annotations(&s.input("annotations")?)?;
    let pairs = match s.optional_input("pairs")? {
        Some(p) => Some(formats::load_pairs(&p)?),
        None => None,
    };
    let defaults = (FilterThresholds::default(), KappaPolicy::default(), AggregationPolicy::default());
    let thresholds = FilterThresholds {
        min_pairs: s.parse_or("min_pairs", defaults.0.min_pairs)?,
        min_kappa: s.parse_or("min_kappa", defaults.0.min_kappa)?,
        min_precision: s.parse_or("min_precision", defaults.0.min_precision)?,
    };
    let kappa_policy = KappaPolicy {
        min_shared: s.parse_or("min_shared", defaults.1.min_shared)?,
        min_counterparts: s.parse_or("min_counterparts", defaults.1.min_counterparts)?,
    };
    let policy = AggregationPolicy {
        min_annotations: s.parse_or("min_annotations", defaults.2.min_annotations)?,
        majority: s.parse_or("majority", defaults.2.majority)?,
    };
    let out = s.output_dir()?;

    let stats = compute_labeler_stats_with(&annotations, kappa_policy);
    let rejected = filter_labelers(&stats, thresholds);
    let report = aggregate_labels(&annotations, &rejected, policy);
    let kept: Vec<AnnotationRecord> = annotations
        .iter()
        .filter(|r| !rejected.contains(&r.labeler_id))
        .cloned()
        .collect();
    let kappa_all = kappa_summary(&annotations, kappa_policy.min_shared);
    let kappa_kept = kappa_summary(&kept, kappa_policy.min_shared);
    let precision_kept = mean_hidden_precision(stats.iter().filter(|st| !rejected.contains(&st.labeler_id)));
    let transitivity = pairs.as_ref().map(|p| transitivity_audit(&report.kept_labels, p));

    let labeler_rows = stats.iter().map(|st| {
        vec![
            st.labeler_id.clone(),
            st.n_real_pairs.to_string(),
            st.n_hidden.to_string(),
            na(st.hidden_precision),
            na(st.avg_kappa),
            st.n_kappa_counterparts.to_string(),
            u8::from(rejected.contains(&st.labeler_id)).to_string(),
        ]
    });
    write(
        &out,
        "labelers.tsv",
        formats::to_tsv(
            &["labeler_id", "n_real_pairs", "n_hidden", "hidden_precision", "avg_kappa", "n_kappa_counterparts", "rejected"],
            labeler_rows,
        )?,
    )?;
    write(&out, "labels.tsv", formats::write_labels(&report.kept_labels)?)?;
    let dropped = report
        .dropped_underannotated
        .iter()
        .map(|p| vec![p.clone(), "underannotated".to_string()])
        .chain(report.dropped_indecisive.iter().map(|p| vec![p.clone(), "indecisive".to_string()]));
    write(&out, "dropped_pairs.tsv", formats::to_tsv(&["pair_id", "reason"], dropped)?)?;

    let mut rows = vec![
        ("n_annotations", annotations.len().to_string()),
        ("n_labelers", stats.len().to_string()),
        ("n_rejected_labelers", rejected.len().to_string()),
        ("n_kept_pairs", report.kept_labels.len().to_string()),
        ("n_indecisive_pairs", report.dropped_indecisive.len().to_string()),
        ("n_underannotated_pairs", report.dropped_underannotated.len().to_string()),
        ("mean_hidden_precision_kept", na(precision_kept)),
        ("kappa_labeler_pairs_all", kappa_all.n_labeler_pairs.to_string()),
        ("kappa_unweighted_all", na(kappa_all.unweighted)),
        ("kappa_weighted_all", na(kappa_all.weighted)),
        ("kappa_labeler_pairs_kept", kappa_kept.n_labeler_pairs.to_string()),
        ("kappa_unweighted_kept", na(kappa_kept.unweighted)),
        ("kappa_weighted_kept", na(kappa_kept.weighted)),
    ];
    if let Some(t) = &transitivity {
        rows.push(("transitivity_triplets", t.n_triplets.to_string()));
        rows.push(("transitivity_consistent", t.n_consistent.to_string()));
        rows.push(("transitivity_fraction", t.fraction_consistent.to_string()));
    }
    write(&out, "audit.tsv", metric_table(&rows)?)?;

    let mut text = String::new();
    writeln!(text, "{} annotations from {} labelers; {} labelers rejected", annotations.len(), stats.len(), rejected.len()).unwrap();
    writeln!(
        text,
        "{} pairs kept, {} indecisive, {} under-annotated",
        report.kept_labels.len(),
        report.dropped_indecisive.len(),
        report.dropped_underannotated.len()
    )
    .unwrap();
    writeln!(text, "hidden-test precision of kept labelers: {}", na(precision_kept)).unwrap();
    writeln!(text, "kappa of kept labelers: {} (weighted {})", na(kappa_kept.unweighted), na(kappa_kept.weighted)).unwrap();
    if let Some(t) = &transitivity {
        writeln!(text, "transitivity: {}/{} triplets consistent", t.n_consistent, t.n_triplets).unwrap();
    }
    finish(s, &out, text)
}

fn cmd_train(s: &Settings) -> Result<String> {
    let pairs_path = s.input("pairs")?;
    let labels_path = s.input("labels")?;
    let emb_path = s.input("embeddings")?;
    let corpus = load_corpus(s)?;
    let pairs = formats::load_pairs(&pairs_path)?;
    let labels = formats::load_labels(&labels_path)?;
    covered_pairs(&corpus, &pairs, &labels)?;
    let table = formats::load_embeddings(&emb_path)?;
    let standard = LegConfig::standard(table.dim());
    let leg = LegConfig {
        hidden: s.parse_or("hidden", standard.hidden)?,
        heads: s.parse_or("heads", standard.heads)?,
        max_len: s.parse_or("max_len", standard.max_len)?,
        ..standard
    };
    let config = train_config(s, TrainConfig::default())?;
    let out = s.output_dir()?;

    let training = resolve_pairs(&corpus, &pairs, &labels)?;
    let mut model = SiameseRanker::new(leg, config.seed)?;
    let log = train(&mut model, &table, &training, &config)?;
    Checkpoint::new(&model, &table, config).save(&out.join(CHECKPOINT_FILE))?;
    let rows = log.iter().map(|e| {
        vec![e.epoch.to_string(), e.mean_loss.to_string(), e.train_accuracy.to_string()]
    });
    write(&out, LOSS_LOG_FILE, formats::to_tsv(&["epoch", "mean_loss", "train_accuracy"], rows)?)?;

    let mut text = format!("trained on {} pairs for {} epochs\n", training.len(), config.epochs);
    if let Some(last) = log.last() {
        writeln!(text, "final mean loss {:.4}, training accuracy {:.4}", last.mean_loss, last.train_accuracy).unwrap();
    }
    finish(s, &out, text)
}

fn score(s: &Settings) -> Result<String> {
    let pairs_path = s.optional_input("pairs")?;
    let (ck, table) = load_model(s)?;
    let corpus = load_corpus(s)?;
    let pairs = match &pairs_path {
        Some(p) => formats::load_pairs(p)?,
        None => Vec::new(),
    };
    let unknown: Vec<String> = pairs.iter().filter(|p| corpus.sides(p).is_err()).map(|p| p.id.clone()).collect();
    uncovered("pairs referencing unknown evidence", unknown)?;
    let out = s.output_dir()?;
    let model = ck.into_model();

    let mut outputs = BTreeMap::new();
    for ev in corpus.evidence.values() {
        let o = model
            .leg_output(&table, &ev.text)
            .map_err(|e| Error::Schema(format!("evidence `{}`: {e}", ev.id)))?;
        outputs.insert(ev.id.clone(), o);
    }
    let scores: BTreeMap<String, f64> = outputs.iter().map(|(k, o)| (k.clone(), pointwise_from_output(*o))).collect();
    write(&out, SCORES_FILE, formats::write_scores(&scores)?)?;
    if pairs_path.is_some() {
        let rows = pairs.iter().map(|p| {
            let prob = pairwise_from_outputs(outputs[&p.a].c, outputs[&p.b].c);
            let pred = PairPrediction::from_probability(p.id.clone(), prob);
            vec![p.id.clone(), p.a.clone(), p.b.clone(), prob.to_string(), pred.predicted_winner.as_str().to_string()]
        });
        write(
            &out,
            PAIR_PROBABILITIES_FILE,
            formats::to_tsv(&["pair_id", "evidence_a", "evidence_b", "p_a_wins", "predicted_winner"], rows)?,
        )?;
    }
    let text = format!("scored {} evidence and {} pairs\n", scores.len(), pairs.len());
    finish(s, &out, text)
}

/// Accuracy of one system per topic, keyed by topic id.
fn per_topic_accuracy(preds: &[PairPrediction], gold: &[GoldLabel], pairs: &[EvidencePair]) -> Result<BTreeMap<String, f64>> {
    let mut by_topic: BTreeMap<&str, Vec<GoldLabel>> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pairs) {
        by_topic.entry(p.topic_id.as_str()).or_default().push(g.clone());
    }
    by_topic
        .into_iter()
        .map(|(t, g)| Ok((t.to_string(), pairwise_accuracy(preds, &g)?)))
        .collect()
}

fn correctness(preds: &[PairPrediction], gold: &[GoldLabel]) -> Vec<f64> {
    let by_id: BTreeMap<&str, Winner> = preds.iter().map(|p| (p.pair_id.as_str(), p.predicted_winner)).collect();
    gold.iter()
        .map(|g| f64::from(u8::from(by_id.get(g.pair_id.as_str()) == Some(&g.winner))))
        .collect()
}

fn eval(s: &Settings) -> Result<String> {
    let baseline_only = s.get("baseline").map(str::to_string);
    if let Some(b) = &baseline_only {
        if !["length", "most-frequent", "detection"].contains(&b.as_str()) {
            return Err(Error::Usage(format!("unknown baseline `{b}` (expected length, most-frequent or detection)")));
        }
    }
    let wants = |name: &str| baseline_only.as_deref().is_none_or(|b| b == name);
    let pairs_path = s.input("pairs")?;
    let labels_path = s.input("labels")?;
    let train_labels_path = s.optional_input("train_labels")?;
    let detection_path = s.optional_input("detection_scores")?;
    let gold_scores_path = s.optional_input("gold_scores")?;
    let unbalanced_pairs_path = s.optional_input("unbalanced_pairs")?;
    let unbalanced_labels_path = s.optional_input("unbalanced_labels")?;
    let grid = match (s.parse::<usize>("grid_train_size")?, s.parse::<usize>("grid_test_size")?) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err(Error::Usage("the stance grid needs both --grid-train-size and --grid-test-size".into())),
    };
    let model = if baseline_only.is_none() { Some(load_model(s)?) } else { None };
    if baseline_only.as_deref() == Some("most-frequent") && train_labels_path.is_none() {
        return Err(Error::Usage("the most-frequent baseline needs --train-labels".into()));
    }
    if baseline_only.as_deref() == Some("detection") && detection_path.is_none() {
        return Err(Error::Usage("the detection baseline needs --detection-scores".into()));
    }
    if grid.is_some() && (model.is_none() || train_labels_path.is_none()) {
        return Err(Error::Usage("the stance grid needs a checkpoint and --train-labels".into()));
    }
    if unbalanced_pairs_path.is_some() != unbalanced_labels_path.is_some() {
        return Err(Error::Usage("length robustness needs both --unbalanced-pairs and --unbalanced-labels".into()));
    }

    let corpus = load_corpus(s)?;
    let all_pairs = formats::load_pairs(&pairs_path)?;
    let gold = formats::load_labels(&labels_path)?;
    let test_pairs = covered_pairs(&corpus, &all_pairs, &gold)?;
    let train_gold = match &train_labels_path {
        Some(p) => Some(formats::load_labels(p)?),
        None => None,
    };
    let detection = match &detection_path {
        Some(p) => {
            let scores = formats::load_scores(p)?;
            let missing: BTreeSet<String> = test_pairs
                .iter()
                .flat_map(|p| [&p.a, &p.b])
                .filter(|id| !scores.contains_key(*id))
                .cloned()
                .collect();
            uncovered("evidence without a detection score", missing.into_iter().collect())?;
            Some(scores)
        }
        None => None,
    };
    let out = s.output_dir()?;

    let mut systems: Vec<(&str, Vec<PairPrediction>)> = Vec::new();
    if let Some((ck, table)) = &model {
        let m = SiameseRanker::from_params(ck.params.clone());
        systems.push(("model", model_predictions(&m, table, &corpus, &test_pairs)?));
    }
    if wants("length") {
        systems.push(("length", length_predictions(&test_pairs, &corpus)?));
    }
    if wants("most-frequent") {
        if let Some(tg) = &train_gold {
            systems.push(("most-frequent", most_frequent_label_baseline(tg, &test_pairs)?));
        }
    }
    if wants("detection") {
        if let Some(scores) = &detection {
            systems.push(("detection", score_predictions(&test_pairs, scores)?));
        }
    }

    let mut text = String::new();
    let mut rows = Vec::new();
    let mut accuracy = BTreeMap::new();
    for (name, preds) in &systems {
        let acc = pairwise_accuracy(preds, &gold)?;
        accuracy.insert(*name, acc);
        rows.push(vec![name.to_string(), gold.len().to_string(), acc.to_string()]);
        writeln!(text, "{name:<14} accuracy {acc:.4} on {} pairs", gold.len()).unwrap();
    }
    write(&out, "metrics.tsv", formats::to_tsv(&["system", "n_pairs", "accuracy"], rows)?)?;
    let pred_rows = systems.iter().flat_map(|(name, preds)| {
        preds.iter().map(move |p| {
            vec![
                p.pair_id.clone(),
                name.to_string(),
                na(p.p_a_wins),
                p.predicted_winner.as_str().to_string(),
            ]
        })
    });
    write(&out, "predictions.tsv", formats::to_tsv(&["pair_id", "system", "p_a_wins", "predicted_winner"], pred_rows)?)?;

    if let Some((_, model_preds)) = systems.iter().find(|(n, _)| *n == "model") {
        let model_correct = correctness(model_preds, &gold);
        let model_topics = per_topic_accuracy(model_preds, &gold, &test_pairs)?;
        let mut sig_rows = Vec::new();
        for (name, preds) in systems.iter().filter(|(n, _)| *n != "model") {
            let diffs: Vec<f64> = model_correct
                .iter()
                .zip(correctness(preds, &gold))
                .map(|(m, b)| m - b)
                .collect();
            match wilcoxon_signed_rank(&diffs) {
                Ok(w) => sig_rows.push(vec![
                    format!("model-{name}"),
                    "wilcoxon_per_pair".into(),
                    w.n.to_string(),
                    w.statistic.to_string(),
                    w.p_value.to_string(),
                ]),
                Err(_) => sig_rows.push(vec![format!("model-{name}"), "wilcoxon_per_pair".into(), "0".into(), "NA".into(), "NA".into()]),
            }
            let base_topics = per_topic_accuracy(preds, &gold, &test_pairs)?;
            let topic_diffs: Vec<f64> = model_topics.iter().map(|(t, a)| a - base_topics[t]).collect();
            match one_sample_t_test(&topic_diffs, 0.0) {
                Ok(t) => sig_rows.push(vec![
                    format!("model-{name}"),
                    "t_test_per_topic".into(),
                    topic_diffs.len().to_string(),
                    t.statistic.to_string(),
                    t.p_value.to_string(),
                ]),
                Err(_) => sig_rows.push(vec![
                    format!("model-{name}"),
                    "t_test_per_topic".into(),
                    topic_diffs.len().to_string(),
                    "NA".into(),
                    "NA".into(),
                ]),
            }
        }
        write(
            &out,
            "significance.tsv",
            formats::to_tsv(&["comparison", "test", "n", "statistic", "p_value"], sig_rows)?,
        )?;
    }

    if let (Some((ck, table)), Some(path)) = (&model, &gold_scores_path) {
        let gold_scores = formats::load_scores(path)?;
        let unknown: Vec<String> = gold_scores.keys().filter(|id| !corpus.evidence.contains_key(*id)).cloned().collect();
        uncovered("gold-scored evidence missing from the corpus", unknown)?;
        let m = SiameseRanker::from_params(ck.params.clone());
        let mut predicted = Vec::new();
        let mut gold_values = Vec::new();
        let mut groups = Vec::new();
        for (id, g) in &gold_scores {
            let ev = corpus.get(id)?;
            predicted.push(m.pointwise_score(table, &ev.text)?);
            gold_values.push(*g);
            groups.push(ev.topic_id.as_str());
        }
        let mut corr_rows = Vec::new();
        for (label, grouping) in [("per_topic", Grouping::PerGroup), ("pooled", Grouping::Pooled)] {
            let r = rank_evaluation(&predicted, &gold_values, &groups, grouping)?;
            corr_rows.push(vec![
                label.to_string(),
                na(r.mean_pearson),
                na(r.mean_spearman),
                r.groups.len().to_string(),
                r.degenerate.join(","),
                r.skipped.join(","),
            ]);
            writeln!(text, "correlation ({label}): pearson {} spearman {}", na(r.mean_pearson), na(r.mean_spearman)).unwrap();
        }
        write(
            &out,
            "correlations.tsv",
            formats::to_tsv(&["grouping", "pearson", "spearman", "n_groups", "degenerate", "skipped"], corr_rows)?,
        )?;
    }

    if let (Some(up), Some(ul)) = (&unbalanced_pairs_path, &unbalanced_labels_path) {
        let upairs = formats::load_pairs(up)?;
        let ulabels = formats::load_labels(ul)?;
        let covered = covered_pairs(&corpus, &upairs, &ulabels)?;
        let mut lr_rows = Vec::new();
        if let Some((ck, table)) = &model {
            let m = SiameseRanker::from_params(ck.params.clone());
            let preds = model_predictions(&m, table, &corpus, &covered)?;
            let acc = length_robustness_eval(&preds, &covered, &ulabels, &corpus)?;
            lr_rows.push(vec!["model".to_string(), covered.len().to_string(), acc.to_string()]);
            writeln!(text, "length robustness: model accuracy {acc:.4} on {} pairs", covered.len()).unwrap();
        }
        let preds = length_predictions(&covered, &corpus)?;
        let acc = length_robustness_eval(&preds, &covered, &ulabels, &corpus)?;
        lr_rows.push(vec!["length".to_string(), covered.len().to_string(), acc.to_string()]);
        write(&out, "length_robustness.tsv", formats::to_tsv(&["system", "n_pairs", "accuracy"], lr_rows)?)?;
    }

    if let (Some((train_size, test_size)), Some((ck, table)), Some(tg)) = (grid, &model, &train_gold) {
        let defaults = TrainConfig { seed: ck.train.seed, ..ck.train };
        let config = train_config(s, defaults)?;
        let train_pairs = covered_pairs(&corpus, &all_pairs, tg)?;
        let pool = |pairs: &[EvidencePair], labels: &[GoldLabel]| -> Result<Vec<StancedPair>> {
            let resolved: Vec<TrainingPair> = resolve_pairs(&corpus, pairs, labels)?;
            let by_id: BTreeMap<&str, &EvidencePair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
            resolved
                .into_iter()
                .map(|pair| {
                    let kind = corpus.stance_kind(by_id[pair.pair_id.as_str()])?;
                    Ok(StancedPair { pair, kind })
                })
                .collect()
        };
        let g = stance_grid(
            &pool(&train_pairs, tg)?,
            &pool(&test_pairs, &gold)?,
            train_size,
            test_size,
            ck.leg_config(),
            &config,
            table,
        )?;
        let grid_rows = StanceSubset::ALL.iter().zip(g.cells).map(|(row, cells)| {
            let mut r = vec![row.as_str().to_string()];
            r.extend(cells.iter().map(f64::to_string));
            r
        });
        write(&out, "stance_grid.tsv", formats::to_tsv(&["train\\test", "same", "cross", "mixed"], grid_rows)?)?;
        writeln!(text, "stance grid written ({train_size} train / {test_size} test pairs per subset)").unwrap();
    }
    finish(s, &out, text)
}

fn analyze(s: &Settings) -> Result<String> {
    let pairs_path = s.input("pairs")?;
    let labels_path = s.input("labels")?;
    let reasons_path = s.optional_input("reasons")?;
    let stopwords_path = s.optional_input("stopwords")?;
    let top_n: usize = s.parse_or("top_n", 20)?;
    let (ck, table) = load_model(s)?;
    let corpus = load_corpus(s)?;
    let all_pairs = formats::load_pairs(&pairs_path)?;
    let gold = formats::load_labels(&labels_path)?;
    let pairs = covered_pairs(&corpus, &all_pairs, &gold)?;
    let stopwords = match &stopwords_path {
        Some(p) => formats::load_stopwords(p)?,
        None => formats::parse_stopwords(BUNDLED_STOPWORDS),
    };
    let out = s.output_dir()?;
    let model = ck.into_model();
    let preds = model_predictions(&model, &table, &corpus, &pairs)?;
    let mut text = String::new();

    if let Some(p) = &reasons_path {
        let reasons = formats::load_reasons(p)?;
        let baseline = length_predictions(&pairs, &corpus)?;
        let rows = reason_error_analysis(&preds, &baseline, &gold, &reasons)?;
        let table_rows = rows.iter().map(|r| {
            vec![
                r.code.clone(),
                r.n_pairs.to_string(),
                r.baseline_error.to_string(),
                r.model_error.to_string(),
                na(r.relative_decrease),
            ]
        });
        write(
            &out,
            "reason_errors.tsv",
            formats::to_tsv(&["code", "n_pairs", "baseline_error", "model_error", "relative_decrease"], table_rows)?,
        )?;
        writeln!(text, "reason analysis over {} codes (baseline: length)", rows.len()).unwrap();
    }

    let contrast = contrast_pairs(&preds, &gold, &pairs, &corpus)?;
    let diff = word_distribution_diff(&contrast, &stopwords, top_n)?;
    let diff_rows = [("convincing", &diff.convincing), ("non_convincing", &diff.non_convincing)]
        .into_iter()
        .flat_map(|(side, words)| {
            words
                .iter()
                .enumerate()
                .map(move |(i, (w, d))| vec![side.to_string(), (i + 1).to_string(), w.clone(), d.to_string()])
        });
    write(&out, "word_diff.tsv", formats::to_tsv(&["side", "rank", "word", "difference"], diff_rows)?)?;
    writeln!(text, "word distributions over {} correctly ranked pairs", contrast.len()).unwrap();
    finish(s, &out, text)
}
