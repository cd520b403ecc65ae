//! Tab-separated corpus files, stop-word lists and text embeddings.
//!
//! Every TSV file is UTF-8 with `\n` line endings, one header row and `\t`
//! separators. Errors carry the 1-based line number of the offending row.
//! Writers refuse fields containing a tab or a line break, so any file they
//! produce parses back to the same values.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use argrank_core::annotation::AnnotationRecord;
use argrank_core::corpus::{EvidencePair, Evidence, GoldLabel, Stance, Topic, Winner};
use argrank_core::eval::ReasonUnit;
use argrank_core::model::EmbeddingTable;

use crate::{Error, Result};

pub const EVIDENCE_HEADER: [&str; 4] = ["id", "topic_id", "stance", "text"];
pub const PAIRS_HEADER: [&str; 4] = ["pair_id", "topic_id", "evidence_a", "evidence_b"];
pub const LABELS_HEADER: [&str; 3] = ["pair_id", "winner", "majority_fraction"];
pub const SCORES_HEADER: [&str; 2] = ["evidence_id", "score"];
pub const TOPICS_HEADER: [&str; 2] = ["topic_id", "title"];
pub const ANNOTATIONS_HEADER: [&str; 5] = ["labeler_id", "pair_id", "choice", "is_hidden_test", "hidden_gold"];
pub const REASONS_HEADER: [&str; 3] = ["pair_id", "code", "text"];

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Data rows with their line numbers, after checking the header.
fn rows<'a>(text: &'a str, header: &[&str], source: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.split('\n').enumerate();
    let Some((_, first)) = lines.next().filter(|(_, l)| !l.is_empty()) else {
        return Err(Error::parse(source, 1, "missing header row"));
    };
    let found: Vec<&str> = first.strip_suffix('\r').unwrap_or(first).split('\t').collect();
    if found != header {
        return Err(Error::parse(
            source,
            1,
            format!("header is `{}`, expected `{}`", found.join("\\t"), header.join("\\t")),
        ));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            // only a final newline may leave an empty line
            if text.split('\n').skip(i + 1).any(|l| !l.is_empty()) {
                return Err(Error::parse(source, i + 1, "empty row"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(Error::parse(
                source,
                i + 1,
                format!("expected {} columns, found {}", header.len(), fields.len()),
            ));
        }
        out.push((i + 1, fields));
    }
    Ok(out)
}

fn non_empty<'a>(source: &str, line: usize, column: &str, value: &'a str) -> Result<&'a str> {
    if value.is_empty() {
        return Err(Error::parse(source, line, format!("empty `{column}`")));
    }
    Ok(value)
}

fn real(source: &str, line: usize, column: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::parse(source, line, format!("`{column}` is not a number: `{value}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(source, line, format!("`{column}` is not finite: `{value}`")));
    }
    Ok(v)
}

/// Joins fields into a TSV document, rejecting separators inside fields.
pub fn to_tsv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        for (k, field) in row.iter().enumerate() {
            if field.contains(['\t', '\n', '\r']) {
                return Err(Error::Schema(format!(
                    "field `{}` contains a tab or line break: {field:?}",
                    header[k]
                )));
            }
        }
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    Ok(out)
}

fn check_unique<'a>(source: &str, ids: impl IntoIterator<Item = (usize, &'a str)>, what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (line, id) in ids {
        if !seen.insert(id) {
            return Err(Error::Schema(format!("{source}:{line}: duplicate {what} `{id}`")));
        }
    }
    Ok(())
}

pub fn parse_evidence(text: &str, source: &str) -> Result<Vec<Evidence>> {
    let rows = rows(text, &EVIDENCE_HEADER, source)?;
    check_unique(source, rows.iter().map(|(l, f)| (*l, f[0])), "evidence id")?;
    rows.iter()
        .map(|(line, f)| {
            let stance: Stance = f[2]
                .parse()
                .map_err(|e: String| Error::parse(source, *line, e))?;
            Ok(Evidence::new(
                non_empty(source, *line, "id", f[0])?,
                non_empty(source, *line, "topic_id", f[1])?,
                stance,
                non_empty(source, *line, "text", f[3])?,
            ))
        })
        .collect()
}

pub fn write_evidence(evidence: &[Evidence]) -> Result<String> {
    to_tsv(
        &EVIDENCE_HEADER,
        evidence.iter().map(|e| {
            vec![e.id.clone(), e.topic_id.clone(), e.stance.as_str().to_string(), e.text.clone()]
        }),
    )
}

pub fn parse_topics(text: &str, source: &str) -> Result<Vec<Topic>> {
    let rows = rows(text, &TOPICS_HEADER, source)?;
    check_unique(source, rows.iter().map(|(l, f)| (*l, f[0])), "topic id")?;
    rows.iter()
        .map(|(line, f)| {
            Ok(Topic {
                id: non_empty(source, *line, "topic_id", f[0])?.to_string(),
                title: non_empty(source, *line, "title", f[1])?.to_string(),
            })
        })
        .collect()
}

pub fn write_topics(topics: &[Topic]) -> Result<String> {
    to_tsv(&TOPICS_HEADER, topics.iter().map(|t| vec![t.id.clone(), t.title.clone()]))
}

pub fn parse_pairs(text: &str, source: &str) -> Result<Vec<EvidencePair>> {
    let rows = rows(text, &PAIRS_HEADER, source)?;
    check_unique(source, rows.iter().map(|(l, f)| (*l, f[0])), "pair id")?;
    rows.iter()
        .map(|(line, f)| {
            Ok(EvidencePair::new(
                non_empty(source, *line, "pair_id", f[0])?,
                non_empty(source, *line, "topic_id", f[1])?,
                non_empty(source, *line, "evidence_a", f[2])?,
                non_empty(source, *line, "evidence_b", f[3])?,
            ))
        })
        .collect()
}

pub fn write_pairs(pairs: &[EvidencePair]) -> Result<String> {
    to_tsv(
        &PAIRS_HEADER,
        pairs
            .iter()
            .map(|p| vec![p.id.clone(), p.topic_id.clone(), p.a.clone(), p.b.clone()]),
    )
}

pub fn parse_labels(text: &str, source: &str) -> Result<Vec<GoldLabel>> {
    let rows = rows(text, &LABELS_HEADER, source)?;
    check_unique(source, rows.iter().map(|(l, f)| (*l, f[0])), "label for pair")?;
    rows.iter()
        .map(|(line, f)| {
            let winner: Winner = f[1].parse().map_err(|e: String| Error::parse(source, *line, e))?;
            let fraction = real(source, *line, "majority_fraction", f[2])?;
            if !(0.6..=1.0).contains(&fraction) {
                return Err(Error::parse(
                    source,
                    *line,
                    format!("majority_fraction {fraction} outside [0.6, 1]"),
                ));
            }
            Ok(GoldLabel {
                pair_id: non_empty(source, *line, "pair_id", f[0])?.to_string(),
                winner,
                majority_fraction: fraction,
            })
        })
        .collect()
}

pub fn write_labels(labels: &[GoldLabel]) -> Result<String> {
    to_tsv(
        &LABELS_HEADER,
        labels.iter().map(|l| {
            vec![l.pair_id.clone(), l.winner.as_str().to_string(), l.majority_fraction.to_string()]
        }),
    )
}

/// Scores per evidence id. A repeated id is accepted only with the same score.
pub fn parse_scores(text: &str, source: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (line, f) in rows(text, &SCORES_HEADER, source)? {
        let id = non_empty(source, line, "evidence_id", f[0])?;
        let score = real(source, line, "score", f[1])?;
        if let Some(previous) = out.insert(id.to_string(), score) {
            if previous != score {
                return Err(Error::Schema(format!(
                    "{source}:{line}: conflicting scores for `{id}` ({previous} and {score})"
                )));
            }
        }
    }
    Ok(out)
}

pub fn write_scores(scores: &BTreeMap<String, f64>) -> Result<String> {
    to_tsv(&SCORES_HEADER, scores.iter().map(|(id, s)| vec![id.clone(), s.to_string()]))
}

pub fn parse_annotations(text: &str, source: &str) -> Result<Vec<AnnotationRecord>> {
    rows(text, &ANNOTATIONS_HEADER, source)?
        .into_iter()
        .map(|(line, f)| {
            let choice: Winner = f[2].parse().map_err(|e: String| Error::parse(source, line, e))?;
            let hidden = match f[3] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(source, line, format!("is_hidden_test must be 0 or 1, got `{other}`")))
                }
            };
            let gold = match (hidden, f[4]) {
                (false, "") => None,
                (true, g) if !g.is_empty() => {
                    Some(g.parse::<Winner>().map_err(|e| Error::parse(source, line, e))?)
                }
                (true, _) => return Err(Error::parse(source, line, "hidden test question without hidden_gold")),
                (false, _) => return Err(Error::parse(source, line, "hidden_gold given for a real pair")),
            };
            Ok(AnnotationRecord {
                labeler_id: non_empty(source, line, "labeler_id", f[0])?.to_string(),
                pair_id: non_empty(source, line, "pair_id", f[1])?.to_string(),
                choice,
                hidden_gold: gold,
            })
        })
        .collect()
}

pub fn write_annotations(records: &[AnnotationRecord]) -> Result<String> {
    to_tsv(
        &ANNOTATIONS_HEADER,
        records.iter().map(|r| {
            vec![
                r.labeler_id.clone(),
                r.pair_id.clone(),
                r.choice.as_str().to_string(),
                if r.is_hidden_test() { "1" } else { "0" }.to_string(),
                r.hidden_gold.map(|g| g.as_str().to_string()).unwrap_or_default(),
            ]
        }),
    )
}

pub fn parse_reasons(text: &str, source: &str) -> Result<Vec<ReasonUnit>> {
    rows(text, &REASONS_HEADER, source)?
        .into_iter()
        .map(|(line, f)| {
            Ok(ReasonUnit {
                pair_id: non_empty(source, line, "pair_id", f[0])?.to_string(),
                code: non_empty(source, line, "code", f[1])?.to_string(),
                text: f[2].to_string(),
            })
        })
        .collect()
}

pub fn write_reasons(reasons: &[ReasonUnit]) -> Result<String> {
    to_tsv(
        &REASONS_HEADER,
        reasons
            .iter()
            .map(|r| vec![r.pair_id.clone(), r.code.clone(), r.text.clone()]),
    )
}

/// One token per line; blank lines and lines starting with `#` are skipped.
/// Tokens are lowercased to match the tokenizer.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// The common text format: a `V d` line, then `token v_1 ... v_d` per line.
pub fn parse_embeddings(text: &str, source: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines
        .next()
        .ok_or_else(|| Error::parse(source, 1, "missing `V d` header"))?;
    let dims: Vec<&str> = head.split_whitespace().collect();
    let parse_count = |s: &str| s.parse::<usize>().ok().filter(|&n| n > 0);
    let (vocab, dim) = match dims.as_slice() {
        [v, d] => match (v.parse::<usize>().ok(), parse_count(d)) {
            (Some(v), Some(d)) => (v, d),
            _ => return Err(Error::parse(source, 1, format!("bad header `{head}`"))),
        },
        _ => return Err(Error::parse(source, 1, format!("bad header `{head}`"))),
    };
    let mut entries = Vec::with_capacity(vocab);
    for (i, line) in lines {
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap_or_default().to_string();
        let values: Vec<f32> = parts
            .map(|v| v.parse::<f32>().ok().filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::parse(source, i + 1, format!("bad vector for `{token}`")))?;
        if values.len() != dim {
            return Err(Error::parse(
                source,
                i + 1,
                format!("`{token}` has {} values, expected {dim}", values.len()),
            ));
        }
        entries.push((token, values));
    }
    if entries.len() != vocab {
        return Err(Error::Schema(format!(
            "{source}: header announces {vocab} vectors, found {}",
            entries.len()
        )));
    }
    Ok(EmbeddingTable::new(dim, entries)?)
}

pub fn write_embeddings(table: &EmbeddingTable) -> String {
    let mut out = format!("{} {}\n", table.vocab_size(), table.dim());
    for token in table.tokens() {
        out.push_str(token);
        for v in table.row(token).expect("listed token") {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

macro_rules! loader {
    ($name:ident, $parse:ident, $out:ty) => {
        pub fn $name(path: &Path) -> Result<$out> {
            $parse(&read_to_string(path)?, &path.display().to_string())
        }
    };
}

loader!(load_evidence, parse_evidence, Vec<Evidence>);
loader!(load_topics, parse_topics, Vec<Topic>);
loader!(load_pairs, parse_pairs, Vec<EvidencePair>);
loader!(load_labels, parse_labels, Vec<GoldLabel>);
loader!(load_scores, parse_scores, BTreeMap<String, f64>);
loader!(load_annotations, parse_annotations, Vec<AnnotationRecord>);
loader!(load_reasons, parse_reasons, Vec<ReasonUnit>);
loader!(load_embeddings, parse_embeddings, EmbeddingTable);

pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    Ok(parse_stopwords(&read_to_string(path)?))
}
