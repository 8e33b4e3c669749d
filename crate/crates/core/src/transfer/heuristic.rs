//! Rule-based format transfer: copy what matches, blank what cannot be
//! filled, synthesize positives from held-out instances when the target
//! needs them and the source has none.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schema::{
    BlankFill, Component, ComponentMask, DemonstrationExample, FormatSpec, TaskInstance,
    UnifiedTask, INPUT_PLACEHOLDER,
};

/// Template used when a task must be projected to the instance level and
/// neither the task nor the target spec carries one: the instance input
/// stands alone.
pub const FALLBACK_TEMPLATE: &str = INPUT_PLACEHOLDER;

/// Convert `task` into `target` format by rule. Components present in both
/// formats are copied verbatim; target components with no source
/// counterpart are marked as deliberate blanks — except positives, which
/// are synthesized by sampling `num_pos` instances from `example_pool`
/// (seeded, so reproducible). A task already in the target format is
/// returned unchanged.
pub fn heuristic_transfer(
    task: &UnifiedTask,
    target: &FormatSpec,
    example_pool: &[TaskInstance],
    rng_seed: u64,
    num_pos: usize,
) -> Result<UnifiedTask> {
    target.validate()?;
    if task.source_format == *target {
        return Ok(task.clone());
    }
    match target {
        FormatSpec::Task { mask } => to_task_level(task, *mask, example_pool, rng_seed, num_pos),
        FormatSpec::Instance { template } => to_instance_level(task, template.as_deref()),
        FormatSpec::Keywords { keywords } => to_keywords_level(task, keywords.as_deref()),
    }
}

fn to_task_level(
    task: &UnifiedTask,
    mask: ComponentMask,
    example_pool: &[TaskInstance],
    rng_seed: u64,
    num_pos: usize,
) -> Result<UnifiedTask> {
    let mut filled = BlankFill::default();

    let definition = if mask.has_d() {
        if task.component_present(Component::Definition) {
            task.definition.clone()
        } else {
            filled.set(Component::Definition);
            None
        }
    } else {
        None
    };

    let positives = if mask.has_p() {
        if task.component_present(Component::Positives) {
            task.positives.clone()
        } else {
            synthesize_positives(task, example_pool, rng_seed, num_pos)?
        }
    } else {
        Vec::new()
    };

    let negatives = if mask.has_n() {
        if task.component_present(Component::Negatives) {
            task.negatives.clone()
        } else {
            // a wrong answer cannot be manufactured from correct instances
            filled.set(Component::Negatives);
            Vec::new()
        }
    } else {
        Vec::new()
    };

    let mut result = UnifiedTask {
        task_id: task.task_id.clone(),
        source_format: FormatSpec::Task { mask },
        definition,
        positives,
        negatives,
        instances: task.instances.clone(),
        category: task.category.clone(),
        filled,
        extra: task.extra.clone(),
    };

    if mask.has_e() && !result.component_present(Component::Explanations) {
        result.filled.set(Component::Explanations);
    }
    if !mask.has_e() {
        for example in result.positives.iter_mut().chain(&mut result.negatives) {
            example.explanation = None;
        }
    }
    Ok(result)
}

fn synthesize_positives(
    task: &UnifiedTask,
    example_pool: &[TaskInstance],
    rng_seed: u64,
    num_pos: usize,
) -> Result<Vec<DemonstrationExample>> {
    let usable: Vec<&TaskInstance> =
        example_pool.iter().filter(|inst| !inst.references.is_empty()).collect();
    if usable.is_empty() {
        return Err(Error::validation(format!(
            "task {}: target format requires Positive Examples but the task has none and the \
             example pool is empty",
            task.task_id
        )));
    }
    let amount = num_pos.max(1).min(usable.len());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let picked = rand::seq::index::sample(&mut rng, usable.len(), amount);
    Ok(picked
        .iter()
        .map(|i| DemonstrationExample::new(usable[i].input.clone(), usable[i].references[0].clone()))
        .collect())
}

fn to_instance_level(task: &UnifiedTask, target_template: Option<&str>) -> Result<UnifiedTask> {
    // prefer the template the task already carries, then the target's, then
    // the bare-input fallback
    let template = task
        .source_format
        .template()
        .or(target_template)
        .unwrap_or(FALLBACK_TEMPLATE)
        .to_string();
    Ok(UnifiedTask {
        task_id: task.task_id.clone(),
        source_format: FormatSpec::instance(Some(template))?,
        definition: None,
        positives: Vec::new(),
        negatives: Vec::new(),
        instances: task.instances.clone(),
        category: task.category.clone(),
        filled: BlankFill::default(),
        extra: task.extra.clone(),
    })
}

fn to_keywords_level(task: &UnifiedTask, target_keywords: Option<&[String]>) -> Result<UnifiedTask> {
    let keywords = match task.source_format.keyword_list().or(target_keywords) {
        Some(kws) => kws.to_vec(),
        None => {
            return Err(Error::validation(format!(
                "task {}: keywords-level target needs a keyword list, but neither the task nor \
                 the target format provides one",
                task.task_id
            )))
        }
    };
    Ok(UnifiedTask {
        task_id: task.task_id.clone(),
        source_format: FormatSpec::keywords(Some(keywords))?,
        definition: None,
        positives: Vec::new(),
        negatives: Vec::new(),
        instances: task.instances.clone(),
        category: task.category.clone(),
        filled: BlankFill::default(),
        extra: task.extra.clone(),
    })
}
