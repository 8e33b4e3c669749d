//! Rendering tasks into prompt text.
//!
//! The grammar is deliberately frozen — golden tests pin the exact bytes —
//! because transfer prompts, candidate parsing, and scoring all assume it:
//!
//! ```text
//! Definition: <definition>
//!
//! Positive Example 1—
//! Input: <input>
//! Output: <output>
//! Explanation: <explanation>        (only when the mask has E)
//!
//! Negative Example 1—
//! ...
//!
//! Input: <instance input>
//! Output:
//! ```
//!
//! Instance-level formats substitute the instance input into the task
//! template; keywords-level formats emit one `keyword: input` line per
//! keyword. Components a transfer deliberately blanked render as an empty
//! section (a bare `Definition:` header, or no example blocks at all).

use crate::error::{Error, Result};
use crate::schema::mask::ComponentMask;
use crate::schema::types::{
    DemonstrationExample, FormatSpec, RenderedInstruction, UnifiedTask, INPUT_PLACEHOLDER,
};

/// Number of examples to show, clamped to what a task actually has.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExampleBudget {
    pub num_pos: usize,
    pub num_neg: usize,
}

impl Default for ExampleBudget {
    fn default() -> Self {
        // two worked examples of each kind is the usual prompt budget
        ExampleBudget { num_pos: 2, num_neg: 2 }
    }
}

impl ExampleBudget {
    pub fn clamped(self, task: &UnifiedTask) -> ExampleBudget {
        ExampleBudget {
            num_pos: self.num_pos.min(task.positives.len()),
            num_neg: self.num_neg.min(task.negatives.len()),
        }
    }
}

fn example_block(kind: &str, index: usize, example: &DemonstrationExample, show_explanation: bool) -> String {
    let mut block = format!(
        "{kind} Example {index}—\nInput: {}\nOutput: {}",
        example.input, example.output
    );
    if show_explanation {
        if let Some(explanation) = &example.explanation {
            block.push_str("\nExplanation: ");
            block.push_str(explanation);
        }
    }
    block
}

fn task_level_sections(
    task: &UnifiedTask,
    mask: ComponentMask,
    budget: ExampleBudget,
) -> Result<Vec<String>> {
    for component in mask.components() {
        if !task.component_satisfied(component) {
            return Err(Error::format(format!(
                "task {}: cannot render format {}: {} is neither present nor deliberately blank",
                task.task_id,
                mask.code(),
                component
            )));
        }
    }
    if mask.has_p() && budget.num_pos > task.positives.len() {
        return Err(Error::validation(format!(
            "task {}: asked to render {} positive examples but only {} exist",
            task.task_id,
            budget.num_pos,
            task.positives.len()
        )));
    }
    if mask.has_n() && budget.num_neg > task.negatives.len() {
        return Err(Error::validation(format!(
            "task {}: asked to render {} negative examples but only {} exist",
            task.task_id,
            budget.num_neg,
            task.negatives.len()
        )));
    }

    let mut sections = Vec::new();
    if mask.has_d() {
        match task.definition.as_deref().filter(|d| !d.trim().is_empty()) {
            Some(definition) => sections.push(format!("Definition: {definition}")),
            None => sections.push("Definition:".to_string()),
        }
    }
    if mask.has_p() {
        for (i, example) in task.positives.iter().take(budget.num_pos).enumerate() {
            sections.push(example_block("Positive", i + 1, example, mask.has_e()));
        }
    }
    if mask.has_n() {
        for (i, example) in task.negatives.iter().take(budget.num_neg).enumerate() {
            sections.push(example_block("Negative", i + 1, example, mask.has_e()));
        }
    }
    Ok(sections)
}

fn keywords_for(task: &UnifiedTask, spec: &FormatSpec) -> Result<Vec<String>> {
    spec.keyword_list()
        .or_else(|| task.source_format.keyword_list())
        .map(<[String]>::to_vec)
        .ok_or_else(|| {
            Error::format(format!(
                "task {}: keywords-level rendering requires keywords on the spec or the task",
                task.task_id
            ))
        })
}

fn template_for(task: &UnifiedTask, spec: &FormatSpec) -> Result<String> {
    spec.template()
        .or_else(|| task.source_format.template())
        .map(str::to_string)
        .ok_or_else(|| {
            Error::format(format!(
                "task {}: instance-level rendering requires a template on the spec or the task",
                task.task_id
            ))
        })
}

/// The instruction part of a prompt, without any instance attached: the
/// definition/example sections, the raw template, or the keyword prefixes.
/// This is the text transfer operates on.
pub fn instruction_text(task: &UnifiedTask, spec: &FormatSpec, budget: ExampleBudget) -> Result<String> {
    match spec {
        FormatSpec::Task { mask } => Ok(task_level_sections(task, *mask, budget)?.join("\n\n")),
        FormatSpec::Instance { .. } => template_for(task, spec),
        FormatSpec::Keywords { .. } => {
            let keywords = keywords_for(task, spec)?;
            Ok(keywords.iter().map(|kw| format!("{kw}:")).collect::<Vec<_>>().join("\n"))
        }
    }
}

/// Render one instance of a task into a prompt plus its reference answer
/// (the first reference).
pub fn render(
    task: &UnifiedTask,
    spec: &FormatSpec,
    instance_id: &str,
    budget: ExampleBudget,
) -> Result<RenderedInstruction> {
    let instance = task.instance(instance_id).ok_or_else(|| {
        Error::validation(format!(
            "task {}: unknown instance id {instance_id:?}",
            task.task_id
        ))
    })?;
    let target_text = instance
        .references
        .first()
        .cloned()
        .ok_or_else(|| {
            Error::validation(format!(
                "task {}: instance {instance_id} has no references",
                task.task_id
            ))
        })?;

    let (prompt_text, format) = match spec {
        FormatSpec::Task { mask } => {
            let mut sections = task_level_sections(task, *mask, budget)?;
            sections.push(format!("Input: {}\nOutput:", instance.input));
            (sections.join("\n\n"), spec.clone())
        }
        FormatSpec::Instance { .. } => {
            let template = template_for(task, spec)?;
            let prompt = template.replace(INPUT_PLACEHOLDER, &instance.input);
            (prompt, FormatSpec::Instance { template: Some(template) })
        }
        FormatSpec::Keywords { .. } => {
            let keywords = keywords_for(task, spec)?;
            let prompt = keywords
                .iter()
                .map(|kw| format!("{kw}: {}", instance.input))
                .collect::<Vec<_>>()
                .join("\n");
            (prompt, FormatSpec::Keywords { keywords: Some(keywords) })
        }
    };

    Ok(RenderedInstruction {
        task_id: task.task_id.clone(),
        instance_id: instance.instance_id.clone(),
        prompt_text,
        target_text,
        format,
    })
}
