//! Transfer candidates and the parser that turns raw generations into
//! structured instruction fragments.
//!
//! Parsing is strict about structure (a candidate that cannot be parsed
//! cannot be scored or applied) but failure is a value: `parse_candidate`
//! returns a diagnostic string naming the first missing or garbled section
//! instead of an error type, and the pipeline keeps unparseable candidates
//! around for reporting.

use serde::{Deserialize, Serialize};

use crate::schema::{
    BlankFill, ComponentMask, DemonstrationExample, ExampleBudget, FormatSpec, UnifiedTask,
};

/// One sampled conversion attempt. Exactly one of `parsed` / `parse_error`
/// is set; `ppl` appears once the denoiser has scored the candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferCandidate {
    pub sample_index: u32,
    pub sampling_seed: u64,
    pub raw_generation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parsed: Option<TaskFragment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppl: Option<f64>,
}

/// The instruction content extracted from one generation, in the target
/// format. Instance templates and keyword lists live inside `format`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskFragment {
    pub format: FormatSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positives: Vec<DemonstrationExample>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub negatives: Vec<DemonstrationExample>,
    /// Non-fatal oddities: dropped sections, trailing commentary.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TaskFragment {
    /// Canonical instruction text for this fragment, in the frozen render
    /// grammar. Used as the scoring prefix and in reports.
    pub fn instruction_text(&self) -> String {
        let task = self.as_bare_task();
        let budget = ExampleBudget {
            num_pos: self.positives.len(),
            num_neg: self.negatives.len(),
        };
        crate::schema::instruction_text(&task, &self.format, budget)
            .expect("fragment satisfies its own format")
    }

    /// Prompt prefix for scoring one worked example against this
    /// instruction; the example's output is the continuation.
    pub fn scoring_prefix(&self, input: &str) -> String {
        match &self.format {
            FormatSpec::Task { .. } => {
                format!("{}\n\nInput: {input}\nOutput:", self.instruction_text())
            }
            FormatSpec::Instance { .. } => {
                let template = self.format.template().expect("instance fragment has template");
                template.replace(crate::schema::INPUT_PLACEHOLDER, input)
            }
            FormatSpec::Keywords { .. } => {
                let keywords = self.format.keyword_list().expect("keywords fragment has keywords");
                keywords
                    .iter()
                    .map(|kw| format!("{kw}: {input}"))
                    .collect::<Vec<_>>()
                    .join("\n")
            }
        }
    }

    /// Replace `task`'s instruction with this fragment, keeping identity,
    /// instances, category, and unknown keys.
    pub fn apply(&self, task: &UnifiedTask) -> UnifiedTask {
        UnifiedTask {
            task_id: task.task_id.clone(),
            source_format: self.format.clone(),
            definition: self.definition.clone(),
            positives: self.positives.clone(),
            negatives: self.negatives.clone(),
            instances: task.instances.clone(),
            category: task.category.clone(),
            filled: BlankFill::default(),
            extra: task.extra.clone(),
        }
    }

    fn as_bare_task(&self) -> UnifiedTask {
        UnifiedTask {
            task_id: String::new(),
            source_format: self.format.clone(),
            definition: self.definition.clone(),
            positives: self.positives.clone(),
            negatives: self.negatives.clone(),
            instances: Vec::new(),
            category: None,
            filled: BlankFill::default(),
            extra: serde_json::Map::new(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ExampleKind {
    Positive,
    Negative,
}

impl ExampleKind {
    fn label(self) -> &'static str {
        match self {
            ExampleKind::Positive => "Positive",
            ExampleKind::Negative => "Negative",
        }
    }
}

#[derive(Debug)]
struct ExampleDraft {
    kind: ExampleKind,
    /// The numeral written in the header, for diagnostics.
    written_index: usize,
    input: Option<String>,
    output: Option<String>,
    explanation: Option<String>,
}

impl ExampleDraft {
    fn name(&self) -> String {
        format!("{} Example {}", self.kind.label(), self.written_index)
    }
}

/// Which buffer continuation lines append to.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    None,
    Definition,
    Input,
    Output,
    Explanation,
    /// Just saw an example header; only a field header may follow.
    ExampleHeader,
}

enum Line<'a> {
    Blank,
    Definition(&'a str),
    Example(ExampleKind, usize),
    Input(&'a str),
    Output(&'a str),
    Explanation(&'a str),
    Text(&'a str),
    GarbledExample(&'a str),
}

fn classify(line: &str) -> Line<'_> {
    if line.trim().is_empty() {
        return Line::Blank;
    }
    if let Some(rest) = line.strip_prefix("Definition:") {
        return Line::Definition(rest.strip_prefix(' ').unwrap_or(rest));
    }
    if let Some(rest) = line.strip_prefix("Input:") {
        return Line::Input(rest.strip_prefix(' ').unwrap_or(rest));
    }
    if let Some(rest) = line.strip_prefix("Output:") {
        return Line::Output(rest.strip_prefix(' ').unwrap_or(rest));
    }
    if let Some(rest) = line.strip_prefix("Explanation:") {
        return Line::Explanation(rest.strip_prefix(' ').unwrap_or(rest));
    }
    for (prefix, kind) in [
        ("Positive Example", ExampleKind::Positive),
        ("Negative Example", ExampleKind::Negative),
    ] {
        if let Some(rest) = line.strip_prefix(prefix) {
            // frozen header form: "Positive Example 3—"
            let rest = rest.trim_end();
            let digits: String = rest.trim_start().chars().take_while(|c| c.is_ascii_digit()).collect();
            let tail = rest.trim_start().strip_prefix(&digits).unwrap_or(rest);
            if !digits.is_empty() && tail == "—" {
                return Line::Example(kind, digits.parse().expect("checked digits"));
            }
            return Line::GarbledExample(line);
        }
    }
    Line::Text(line)
}

fn append(buffer: &mut Option<String>, text: &str) {
    match buffer {
        Some(existing) => {
            existing.push('\n');
            existing.push_str(text);
        }
        None => *buffer = Some(text.to_string()),
    }
}

struct ParsedSections {
    definition: Option<String>,
    drafts: Vec<ExampleDraft>,
    trailing: Option<String>,
}

fn parse_sections(text: &str) -> Result<ParsedSections, String> {
    let mut definition: Option<String> = None;
    let mut drafts: Vec<ExampleDraft> = Vec::new();
    let mut field = Field::None;
    let mut started = false;
    let mut trailing: Vec<&str> = Vec::new();

    for line in text.lines() {
        if !trailing.is_empty() {
            trailing.push(line);
            continue;
        }
        match classify(line) {
            Line::Blank => {
                if field != Field::ExampleHeader {
                    field = Field::None;
                }
            }
            Line::Definition(rest) => {
                if definition.is_some() {
                    return Err("duplicate Definition section".to_string());
                }
                definition = Some(rest.to_string());
                field = Field::Definition;
                started = true;
            }
            Line::Example(kind, written_index) => {
                drafts.push(ExampleDraft {
                    kind,
                    written_index,
                    input: None,
                    output: None,
                    explanation: None,
                });
                field = Field::ExampleHeader;
                started = true;
            }
            Line::GarbledExample(line) => {
                return Err(format!("garbled example header: {line:?}"));
            }
            field_line @ (Line::Input(_) | Line::Output(_) | Line::Explanation(_)) => {
                let (label, rest, slot_field) = match field_line {
                    Line::Input(rest) => ("Input", rest, Field::Input),
                    Line::Output(rest) => ("Output", rest, Field::Output),
                    Line::Explanation(rest) => ("Explanation", rest, Field::Explanation),
                    _ => unreachable!("outer pattern admits only field lines"),
                };
                let Some(draft) = drafts.last_mut() else {
                    return Err(format!("{label} field outside an example block"));
                };
                let slot = match slot_field {
                    Field::Input => &mut draft.input,
                    Field::Output => &mut draft.output,
                    _ => &mut draft.explanation,
                };
                if slot.is_some() {
                    return Err(format!("duplicate {label} in {}", draft.name()));
                }
                *slot = Some(rest.to_string());
                field = slot_field;
            }
            Line::Text(line) => match field {
                Field::Definition => append(&mut definition, line),
                Field::Input => append(&mut drafts.last_mut().expect("field implies draft").input, line),
                Field::Output => append(&mut drafts.last_mut().expect("field implies draft").output, line),
                Field::Explanation => {
                    append(&mut drafts.last_mut().expect("field implies draft").explanation, line)
                }
                Field::ExampleHeader => {
                    return Err(format!(
                        "unexpected text inside {} before its Input field: {line:?}",
                        drafts.last().expect("header implies draft").name()
                    ))
                }
                Field::None => {
                    if !started {
                        return Err(format!(
                            "unrecognized text before the first section header: {line:?}"
                        ));
                    }
                    trailing.push(line);
                }
            },
        }
    }

    Ok(ParsedSections {
        definition: definition.map(|d| d.trim().to_string()),
        drafts,
        trailing: if trailing.is_empty() {
            None
        } else {
            Some(trailing.join("\n").trim().to_string())
        },
    })
}

fn excerpt(text: &str) -> String {
    const LIMIT: usize = 80;
    let flat = text.replace('\n', " ");
    if flat.len() > LIMIT {
        let mut end = LIMIT;
        while !flat.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &flat[..end])
    } else {
        flat
    }
}

fn parse_task_level(text: &str, mask: ComponentMask) -> Result<TaskFragment, String> {
    let sections = parse_sections(text)?;
    let mut warnings = Vec::new();

    let definition = match (mask.has_d(), sections.definition) {
        (true, None) => return Err("missing Definition section".to_string()),
        (true, Some(d)) if d.is_empty() => return Err("empty Definition section".to_string()),
        (true, Some(d)) => Some(d),
        (false, Some(_)) => {
            warnings.push(format!(
                "Definition section dropped: target mask {} has no D component",
                mask.code()
            ));
            None
        }
        (false, None) => None,
    };

    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for draft in &sections.drafts {
        let name = draft.name();
        let wanted = match draft.kind {
            ExampleKind::Positive => mask.has_p(),
            ExampleKind::Negative => mask.has_n(),
        };
        if !wanted {
            warnings.push(format!(
                "{name} dropped: target mask {} has no {} component",
                mask.code(),
                match draft.kind {
                    ExampleKind::Positive => "P",
                    ExampleKind::Negative => "N",
                }
            ));
            continue;
        }
        let input = match draft.input.as_deref().map(str::trim) {
            None => return Err(format!("{name}: missing Input")),
            Some("") => return Err(format!("{name}: empty Input")),
            Some(input) => input.to_string(),
        };
        let output = match draft.output.as_deref().map(str::trim) {
            None => return Err(format!("{name}: missing Output")),
            Some("") => return Err(format!("{name}: empty Output")),
            Some(output) => output.to_string(),
        };
        let explanation = match draft.explanation.as_deref().map(str::trim) {
            None if mask.has_e() => return Err(format!("{name}: missing Explanation")),
            Some("") if mask.has_e() => return Err(format!("{name}: empty Explanation")),
            None => None,
            Some(_) if !mask.has_e() => {
                warnings.push(format!(
                    "{name}: Explanation dropped: target mask {} has no E component",
                    mask.code()
                ));
                None
            }
            Some(explanation) => Some(explanation.to_string()),
        };
        let mut example = DemonstrationExample::new(input, output);
        example.explanation = explanation;
        match draft.kind {
            ExampleKind::Positive => positives.push(example),
            ExampleKind::Negative => negatives.push(example),
        }
    }

    if mask.has_p() && positives.is_empty() {
        return Err("missing Positive Examples section".to_string());
    }
    if mask.has_n() && negatives.is_empty() {
        return Err("missing Negative Examples section".to_string());
    }
    if let Some(trailing) = sections.trailing {
        warnings.push(format!("trailing commentary ignored: {:?}", excerpt(&trailing)));
    }

    Ok(TaskFragment {
        format: FormatSpec::Task { mask },
        definition,
        positives,
        negatives,
        warnings,
    })
}

/// Split off the first paragraph; the remainder (if any) is commentary.
fn first_paragraph(text: &str) -> (String, Option<String>) {
    let mut kept: Vec<&str> = Vec::new();
    let mut rest: Vec<&str> = Vec::new();
    let mut in_rest = false;
    for line in text.lines() {
        if in_rest {
            rest.push(line);
        } else if line.trim().is_empty() && !kept.is_empty() {
            in_rest = true;
        } else if !line.trim().is_empty() {
            kept.push(line);
        }
    }
    let rest = rest.join("\n").trim().to_string();
    (
        kept.join("\n"),
        if rest.is_empty() { None } else { Some(rest) },
    )
}

fn parse_instance_level(text: &str) -> Result<TaskFragment, String> {
    let (template, trailing) = first_paragraph(text);
    if template.is_empty() {
        return Err("empty generation, no template found".to_string());
    }
    crate::schema::validate_template(&template).map_err(|e| e.to_string())?;
    let mut warnings = Vec::new();
    if let Some(trailing) = trailing {
        warnings.push(format!("trailing commentary ignored: {:?}", excerpt(&trailing)));
    }
    Ok(TaskFragment {
        format: FormatSpec::Instance { template: Some(template) },
        definition: None,
        positives: Vec::new(),
        negatives: Vec::new(),
        warnings,
    })
}

fn parse_keywords_level(text: &str) -> Result<TaskFragment, String> {
    let (paragraph, trailing) = first_paragraph(text);
    if paragraph.is_empty() {
        return Err("empty generation, no keywords found".to_string());
    }
    let mut keywords = Vec::new();
    for line in paragraph.lines() {
        // keyword lines may carry a sample input after the colon; the
        // keyword itself is whatever precedes it
        let keyword = match line.find(':') {
            Some(colon) => &line[..colon],
            None => line,
        };
        let keyword = keyword.trim();
        if keyword.is_empty() {
            return Err(format!("keyword line without a keyword: {line:?}"));
        }
        keywords.push(keyword.to_string());
    }
    let mut warnings = Vec::new();
    if let Some(trailing) = trailing {
        warnings.push(format!("trailing commentary ignored: {:?}", excerpt(&trailing)));
    }
    Ok(TaskFragment {
        format: FormatSpec::Keywords { keywords: Some(keywords) },
        definition: None,
        positives: Vec::new(),
        negatives: Vec::new(),
        warnings,
    })
}

/// Parse a raw generation into an instruction fragment for the target
/// format. The `Err` carries a diagnostic naming the first missing or
/// garbled piece; it is data, not a process failure.
pub fn parse_candidate(raw: &str, target: &FormatSpec) -> Result<TaskFragment, String> {
    // tolerate a model echoing the open label it was asked to complete
    let text = raw.trim_start();
    let text = text.strip_prefix("Task description B:").unwrap_or(text);
    let text = text.trim();
    if text.is_empty() {
        return Err("empty generation".to_string());
    }
    match target {
        FormatSpec::Task { mask } => parse_task_level(text, *mask),
        FormatSpec::Instance { .. } => parse_instance_level(text),
        FormatSpec::Keywords { .. } => parse_keywords_level(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_component_mask;

    fn task_target(code: &str) -> FormatSpec {
        FormatSpec::Task { mask: parse_component_mask(code).unwrap() }
    }

    const WELL_FORMED_DPNE: &str = "\
Definition: Decide whether the word names an animal.

Positive Example 1—
Input: otter
Output: yes
Explanation: An otter is a semiaquatic mammal.

Negative Example 1—
Input: cloud
Output: yes
Explanation: A cloud is weather, so yes is wrong.";

    #[test]
    fn parses_well_formed_dpne() {
        let fragment = parse_candidate(WELL_FORMED_DPNE, &task_target("DPNE")).unwrap();
        assert_eq!(fragment.definition.as_deref(), Some("Decide whether the word names an animal."));
        assert_eq!(fragment.positives.len(), 1);
        assert_eq!(fragment.negatives.len(), 1);
        assert_eq!(fragment.positives[0].input, "otter");
        assert_eq!(
            fragment.negatives[0].explanation.as_deref(),
            Some("A cloud is weather, so yes is wrong.")
        );
        assert!(fragment.warnings.is_empty());
    }

    #[test]
    fn instruction_text_re_renders_canonically() {
        let fragment = parse_candidate(WELL_FORMED_DPNE, &task_target("DPNE")).unwrap();
        assert_eq!(fragment.instruction_text(), WELL_FORMED_DPNE);
        let prefix = fragment.scoring_prefix("pelican");
        assert!(prefix.ends_with("Input: pelican\nOutput:"));
    }

    #[test]
    fn missing_definition_is_named() {
        let raw = "Positive Example 1—\nInput: a\nOutput: b";
        let err = parse_candidate(raw, &task_target("DP")).unwrap_err();
        assert_eq!(err, "missing Definition section");
    }

    #[test]
    fn missing_examples_and_fields_are_named() {
        let err = parse_candidate("Definition: d.", &task_target("DP")).unwrap_err();
        assert_eq!(err, "missing Positive Examples section");

        let raw = "Definition: d.\n\nPositive Example 1—\nInput: a";
        let err = parse_candidate(raw, &task_target("DP")).unwrap_err();
        assert_eq!(err, "Positive Example 1: missing Output");

        let raw = "Definition: d.\n\nPositive Example 1—\nInput: a\nOutput: b";
        let err = parse_candidate(raw, &task_target("DPN")).unwrap_err();
        assert_eq!(err, "missing Negative Examples section");
        let err = parse_candidate(raw, &task_target("DPE")).unwrap_err();
        assert_eq!(err, "Positive Example 1: missing Explanation");
    }

    #[test]
    fn garbled_header_is_an_error() {
        let raw = "Definition: d.\n\nPositive Example one\nInput: a\nOutput: b";
        let err = parse_candidate(raw, &task_target("DP")).unwrap_err();
        assert!(err.contains("garbled example header"), "{err}");
    }

    #[test]
    fn trailing_commentary_is_warned_not_merged() {
        let raw = format!("{WELL_FORMED_DPNE}\n\nHope that helps with the conversion!");
        let fragment = parse_candidate(&raw, &task_target("DPNE")).unwrap();
        assert_eq!(fragment.warnings.len(), 1);
        assert!(fragment.warnings[0].contains("trailing commentary"), "{:?}", fragment.warnings);
        assert!(fragment.warnings[0].contains("Hope that helps"));
        // the commentary is not inside any parsed field
        assert!(!fragment.instruction_text().contains("Hope"));
    }

    #[test]
    fn sections_outside_the_mask_are_dropped_with_warnings() {
        let fragment = parse_candidate(WELL_FORMED_DPNE, &task_target("DP")).unwrap();
        assert_eq!(fragment.positives.len(), 1);
        assert!(fragment.negatives.is_empty());
        assert!(fragment.positives[0].explanation.is_none());
        assert!(fragment.warnings.iter().any(|w| w.contains("no N component")));
        assert!(fragment.warnings.iter().any(|w| w.contains("no E component")));
    }

    #[test]
    fn leading_junk_and_echoed_label_handling() {
        let raw = format!("Task description B: {WELL_FORMED_DPNE}");
        assert!(parse_candidate(&raw, &task_target("DPNE")).is_ok());

        let raw = format!("Sure, here is the task.\n{WELL_FORMED_DPNE}");
        let err = parse_candidate(&raw, &task_target("DPNE")).unwrap_err();
        assert!(err.contains("before the first section header"), "{err}");

        assert!(parse_candidate("   ", &task_target("DP")).is_err());
    }

    #[test]
    fn multi_line_bodies_continue_until_blank_or_header() {
        let raw = "\
Definition: Sort the list.
Ties keep their original order.

Positive Example 1—
Input: 3
1
Output: 1
3";
        let fragment = parse_candidate(raw, &task_target("DP")).unwrap();
        assert_eq!(
            fragment.definition.as_deref(),
            Some("Sort the list.\nTies keep their original order.")
        );
        assert_eq!(fragment.positives[0].input, "3\n1");
        assert_eq!(fragment.positives[0].output, "1\n3");
    }

    #[test]
    fn duplicate_fields_are_rejected() {
        let raw = "Definition: a.\n\nPositive Example 1—\nInput: x\nInput: y\nOutput: z";
        let err = parse_candidate(raw, &task_target("DP")).unwrap_err();
        assert!(err.contains("duplicate Input"), "{err}");
        let raw = "Definition: a.\n\nDefinition: b.";
        assert!(parse_candidate(raw, &task_target("D")).unwrap_err().contains("duplicate Definition"));
    }

    #[test]
    fn instance_level_takes_first_paragraph_as_template() {
        let fragment =
            parse_candidate("Rate the review: {input}\nAnswer:", &FormatSpec::Instance { template: None })
                .unwrap();
        assert_eq!(fragment.format.template(), Some("Rate the review: {input}\nAnswer:"));
        assert!(fragment.warnings.is_empty());

        let fragment = parse_candidate(
            "Rate the review: {input}\n\nThis template asks for a rating.",
            &FormatSpec::Instance { template: None },
        )
        .unwrap();
        assert_eq!(fragment.format.template(), Some("Rate the review: {input}"));
        assert_eq!(fragment.warnings.len(), 1);

        let err = parse_candidate("Rate the review.", &FormatSpec::Instance { template: None })
            .unwrap_err();
        assert!(err.contains("{input}"), "{err}");
    }

    #[test]
    fn keywords_level_reads_one_keyword_per_line() {
        let target = FormatSpec::Keywords { keywords: None };
        let fragment = parse_candidate("summarize:", &target).unwrap();
        assert_eq!(fragment.format.keyword_list(), Some(&["summarize".to_string()][..]));

        // a sample input after the colon is tolerated
        let fragment = parse_candidate("summarize: the article text\ncondense:", &target).unwrap();
        assert_eq!(
            fragment.format.keyword_list(),
            Some(&["summarize".to_string(), "condense".to_string()][..])
        );

        assert!(parse_candidate(": no keyword", &target).is_err());
    }

    #[test]
    fn apply_replaces_instruction_and_keeps_identity() {
        let fragment = parse_candidate(WELL_FORMED_DPNE, &task_target("DPNE")).unwrap();
        let base = UnifiedTask {
            task_id: "animals".into(),
            category: Some("classification".into()),
            instances: vec![crate::schema::TaskInstance::new("i1", "newt", vec!["yes".into()])],
            ..UnifiedTask::default()
        };
        let converted = fragment.apply(&base);
        assert_eq!(converted.task_id, "animals");
        assert_eq!(converted.category.as_deref(), Some("classification"));
        assert_eq!(converted.instances.len(), 1);
        assert_eq!(converted.source_format, task_target("DPNE"));
        assert_eq!(converted.positives.len(), 1);
        assert!(converted.filled.is_empty());
    }
}
