//! Decoding and encoding between JSON-Lines task records and [`UnifiedTask`].
//!
//! One record per task. The base schema carries `task_id` and `instances`;
//! task-level records add `definition` / `positives` / `negatives`,
//! instance-level records add `template`, keywords-level records add
//! `keywords`. Unknown keys are preserved verbatim so foreign corpora can
//! round-trip without loss.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::schema::mask::ComponentMask;
use crate::schema::types::{
    BlankFill, DemonstrationExample, FormatSpec, TaskInstance, UnifiedTask,
};

/// Wire form of one task record. Field order here fixes the key order in
/// encoded output.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positives: Vec<DemonstrationExample>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub negatives: Vec<DemonstrationExample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keywords: Vec<String>,
    pub instances: Vec<TaskInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, rename = "blank_fill", skip_serializing_if = "BlankFill::is_empty")]
    pub filled: BlankFill,
    #[serde(flatten, default, skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

fn check_mask_requirements(task: &UnifiedTask, mask: ComponentMask) -> Result<()> {
    for component in mask.components() {
        if !task.component_satisfied(component) {
            return Err(Error::format(format!(
                "task {}: format {} requires {} but the task provides neither content nor a blank marker",
                task.task_id,
                mask.code(),
                component
            )));
        }
    }
    Ok(())
}

/// Validate a record against a format spec and build the in-memory task.
///
/// Components present in the record are captured even when the spec does not
/// ask for them; the spec governs what is *required*. For instance- and
/// keywords-level corpora, per-record payloads win over a corpus-wide one
/// configured on the spec.
pub fn decode_task(record: TaskRecord, spec: &FormatSpec) -> Result<UnifiedTask> {
    spec.validate()?;
    if record.task_id.trim().is_empty() {
        return Err(Error::validation("record has an empty task_id"));
    }
    let task_id = record.task_id.clone();
    let context = |what: &str| format!("task {task_id}: {what}");

    for (i, example) in record.positives.iter().enumerate() {
        example.validate(&context(&format!("positives[{i}]")))?;
    }
    for (i, example) in record.negatives.iter().enumerate() {
        example.validate(&context(&format!("negatives[{i}]")))?;
    }
    let mut seen = std::collections::BTreeSet::new();
    for instance in &record.instances {
        instance.validate(&context("instances"))?;
        if !seen.insert(instance.instance_id.as_str()) {
            return Err(Error::validation(format!(
                "task {task_id}: duplicate instance id {:?}",
                instance.instance_id
            )));
        }
    }

    let source_format = match spec {
        FormatSpec::Task { mask } => FormatSpec::Task { mask: *mask },
        FormatSpec::Instance { template } => {
            let effective = record.template.clone().or_else(|| template.clone());
            let Some(effective) = effective else {
                return Err(Error::format(format!(
                    "task {task_id}: instance-level record carries no template and the spec configures none"
                )));
            };
            FormatSpec::instance(Some(effective))
                .map_err(|e| Error::format(format!("task {task_id}: {e}")))?
        }
        FormatSpec::Keywords { keywords } => {
            let effective = if record.keywords.is_empty() {
                keywords.clone()
            } else {
                Some(record.keywords.clone())
            };
            let Some(effective) = effective else {
                return Err(Error::format(format!(
                    "task {task_id}: keywords-level record carries no keywords and the spec configures none"
                )));
            };
            FormatSpec::keywords(Some(effective))
                .map_err(|e| Error::format(format!("task {task_id}: {e}")))?
        }
    };

    let task = UnifiedTask {
        task_id: record.task_id,
        source_format,
        definition: record.definition,
        positives: record.positives,
        negatives: record.negatives,
        instances: record.instances,
        category: record.category,
        filled: record.filled,
        extra: record.extra,
    };

    if let FormatSpec::Task { mask } = spec {
        check_mask_requirements(&task, *mask)?;
    }
    Ok(task)
}

/// Project a task back into a record for the given spec.
///
/// The spec's level decides which instruction fields are emitted: task-level
/// records carry the D/P/N/E fields, instance-level records carry the
/// template, keywords-level records carry keywords. Fields outside the level
/// are dropped, so converting a task and encoding it yields a clean record
/// in the target format. Requirements are enforced the same way as in
/// [`decode_task`], so a task that encodes will decode.
pub fn encode_task(task: &UnifiedTask, spec: &FormatSpec) -> Result<TaskRecord> {
    spec.validate()?;
    let mut record = TaskRecord {
        task_id: task.task_id.clone(),
        instances: task.instances.clone(),
        category: task.category.clone(),
        extra: task.extra.clone(),
        ..TaskRecord::default()
    };

    match spec {
        FormatSpec::Task { mask } => {
            check_mask_requirements(task, *mask)?;
            record.definition = task.definition.clone();
            record.positives = task.positives.clone();
            record.negatives = task.negatives.clone();
            record.filled = task.filled;
        }
        FormatSpec::Instance { template } => {
            let own = task.source_format.template();
            if own.is_none() && template.is_none() {
                return Err(Error::format(format!(
                    "task {}: instance-level encoding requires a template on the task or the spec",
                    task.task_id
                )));
            }
            // omit the template when the corpus-wide spec already carries it
            record.template = own.map(str::to_string);
        }
        FormatSpec::Keywords { keywords } => {
            let own = task.source_format.keyword_list();
            if own.is_none() && keywords.is_none() {
                return Err(Error::format(format!(
                    "task {}: keywords-level encoding requires keywords on the task or the spec",
                    task.task_id
                )));
            }
            record.keywords = own.map(<[String]>::to_vec).unwrap_or_default();
        }
    }
    Ok(record)
}
