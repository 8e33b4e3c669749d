//! The few-shot transfer prompt.
//!
//! Format transfer is phrased as in-context translation between "task
//! descriptions": each seed pair shows an instruction in the source format
//! (description A) and the same task's instruction in the target format
//! (description B). The prompt ends with the instruction to convert and an
//! open `Task description B:` for the model to complete. Byte layout is
//! frozen by golden tests.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generation is cut at the start of any next example block.
pub const TRANSFER_STOP: &str = "\nExample ";

/// One worked conversion: the same task's instruction written in the source
/// format and in the target format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelSeedPair {
    pub pair_id: String,
    pub source_text: String,
    pub target_text: String,
}

impl ParallelSeedPair {
    pub fn new(
        pair_id: impl Into<String>,
        source_text: impl Into<String>,
        target_text: impl Into<String>,
    ) -> Result<Self> {
        let pair = ParallelSeedPair {
            pair_id: pair_id.into(),
            source_text: source_text.into(),
            target_text: target_text.into(),
        };
        pair.validate()?;
        Ok(pair)
    }

    fn validate(&self) -> Result<()> {
        if self.pair_id.trim().is_empty() {
            return Err(Error::validation("seed pair with empty pair_id"));
        }
        if self.source_text.trim().is_empty() {
            return Err(Error::validation(format!(
                "seed pair {}: source_text is empty",
                self.pair_id
            )));
        }
        if self.target_text.trim().is_empty() {
            return Err(Error::validation(format!(
                "seed pair {}: target_text is empty",
                self.pair_id
            )));
        }
        Ok(())
    }
}

/// Load seed pairs from a JSON-Lines file
/// (`{"pair_id", "source_text", "target_text"}` per line).
pub fn load_seed_pairs(path: &Path) -> Result<Vec<ParallelSeedPair>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    let mut seen = BTreeSet::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: ParallelSeedPair = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{}:{}", path.display(), line_no + 1), e))?;
        pair.validate()?;
        if !seen.insert(pair.pair_id.clone()) {
            return Err(Error::validation(format!(
                "{}: duplicate seed pair_id {:?}",
                path.display(),
                pair.pair_id
            )));
        }
        pairs.push(pair);
    }
    if pairs.is_empty() {
        return Err(Error::validation(format!(
            "{}: no seed pairs found",
            path.display()
        )));
    }
    Ok(pairs)
}

/// Assemble the few-shot prompt: every seed pair as a numbered example,
/// then the source instruction with its target left open. The prompt ends
/// exactly at `Task description B:` so the completion *is* the converted
/// instruction.
pub fn build_transfer_prompt(seeds: &[ParallelSeedPair], source_text: &str) -> Result<String> {
    if seeds.is_empty() {
        return Err(Error::validation("transfer prompt requires at least one seed pair"));
    }
    if source_text.trim().is_empty() {
        return Err(Error::validation("transfer prompt requires non-empty source text"));
    }
    for seed in seeds {
        seed.validate()?;
    }

    let mut prompt = String::new();
    for (i, seed) in seeds.iter().enumerate() {
        writeln!(prompt, "Example {}.", i + 1).expect("string write");
        writeln!(prompt, "Task description A: {}", seed.source_text).expect("string write");
        writeln!(prompt, "Task description B: {}", seed.target_text).expect("string write");
        prompt.push('\n');
    }
    writeln!(prompt, "Example {}.", seeds.len() + 1).expect("string write");
    writeln!(prompt, "Task description A: {source_text}").expect("string write");
    prompt.push_str("Task description B:");
    Ok(prompt)
}
