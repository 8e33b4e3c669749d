//! Evaluation metrics: normalized exact match and Rouge-L, with macro
//! aggregation across tasks.
//!
//! Exact match follows the usual QA normalization: lowercase, strip
//! punctuation, drop the articles a/an/the, collapse whitespace. Rouge-L is
//! the token-level LCS F-measure with precision and recall weighted equally.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalize an answer string for exact-match comparison: unicode-aware
/// lowercasing, punctuation replaced by spaces, article tokens removed,
/// whitespace collapsed to single spaces.
pub fn normalize_text(s: &str) -> String {
    let lowered = s.to_lowercase();
    let depunct: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    depunct
        .split_whitespace()
        .filter(|token| !matches!(*token, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// 1 if the normalized prediction equals any normalized reference.
pub fn exact_match(prediction: &str, references: &[String]) -> Result<bool> {
    if references.is_empty() {
        return Err(Error::validation("exact match requires at least one reference"));
    }
    let prediction = normalize_text(prediction);
    Ok(references.iter().any(|r| normalize_text(r) == prediction))
}

/// Lowercased tokens split on runs of non-alphanumeric characters.
fn tokenize(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // two-row DP over the shorter sequence
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut curr = vec![0usize; short.len() + 1];
    for item in long {
        for (j, other) in short.iter().enumerate() {
            curr[j + 1] = if item == other {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// Rouge-L F-measure between a prediction and a single reference, in [0, 1].
/// Two empty token sequences are a perfect match; exactly one empty scores 0.
pub fn rouge_l(prediction: &str, reference: &str) -> f64 {
    let p = tokenize(prediction);
    let r = tokenize(reference);
    match (p.is_empty(), r.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let lcs = lcs_len(&p, &r) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let precision = lcs / p.len() as f64;
    let recall = lcs / r.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best Rouge-L over all references.
pub fn rouge_l_max(prediction: &str, references: &[String]) -> Result<f64> {
    if references.is_empty() {
        return Err(Error::validation("rouge-l requires at least one reference"));
    }
    Ok(references
        .iter()
        .map(|r| rouge_l(prediction, r))
        .fold(0.0, f64::max))
}

/// Scores for one (task, instance) prediction. `em` is 0 or 1; `rouge` is
/// the best Rouge-L over references. Both stored as fractions of 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub task_id: String,
    pub instance_id: String,
    pub em: u8,
    pub rouge: f64,
}

impl EvalRecord {
    pub fn new(task_id: impl Into<String>, instance_id: impl Into<String>, em: bool, rouge: f64) -> Self {
        EvalRecord {
            task_id: task_id.into(),
            instance_id: instance_id.into(),
            em: em as u8,
            rouge,
        }
    }
}

/// Mean scores for one task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub em: f64,
    pub rouge: f64,
    pub instances: usize,
}

/// Macro-aggregated scores: instances average within each task, tasks
/// average with equal weight into the overall numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_task: BTreeMap<String, TaskScore>,
    pub overall_em: f64,
    pub overall_rouge: f64,
    pub task_count: usize,
    pub instance_count: usize,
}

/// Aggregate per-instance records into per-task and overall means.
/// Duplicate (task, instance) pairs are rejected so a stray double join
/// cannot silently skew the averages.
pub fn aggregate(records: &[EvalRecord]) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::validation("cannot aggregate an empty record list"));
    }
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut sums: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for record in records {
        if record.em > 1 {
            return Err(Error::validation(format!(
                "record {}/{}: em must be 0 or 1",
                record.task_id, record.instance_id
            )));
        }
        if !(0.0..=1.0).contains(&record.rouge) || !record.rouge.is_finite() {
            return Err(Error::validation(format!(
                "record {}/{}: rouge {} outside [0, 1]",
                record.task_id, record.instance_id, record.rouge
            )));
        }
        if !seen.insert((&record.task_id, &record.instance_id)) {
            return Err(Error::validation(format!(
                "duplicate record for task {} instance {}",
                record.task_id, record.instance_id
            )));
        }
        let entry = sums.entry(&record.task_id).or_insert((0.0, 0.0, 0));
        entry.0 += record.em as f64;
        entry.1 += record.rouge;
        entry.2 += 1;
    }

    let mut per_task = BTreeMap::new();
    let (mut em_total, mut rouge_total) = (0.0, 0.0);
    for (task_id, (em_sum, rouge_sum, count)) in &sums {
        let score = TaskScore {
            em: em_sum / *count as f64,
            rouge: rouge_sum / *count as f64,
            instances: *count,
        };
        em_total += score.em;
        rouge_total += score.rouge;
        per_task.insert(task_id.to_string(), score);
    }
    let task_count = per_task.len();
    Ok(EvalReport {
        overall_em: em_total / task_count as f64,
        overall_rouge: rouge_total / task_count as f64,
        task_count,
        instance_count: records.len(),
        per_task,
    })
}
