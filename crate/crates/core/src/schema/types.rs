//! The unified in-memory representation of instruction-tuning tasks.
//!
//! Datasets arrive in one of three format levels: full task-level
//! instructions (definition plus worked examples), per-task instance
//! templates with an `{input}` placeholder, or bare keyword prefixes.
//! Everything downstream (rendering, transfer, corpus ops) works on
//! [`UnifiedTask`] so those sources can be converted into one another.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::schema::mask::{Component, ComponentMask};

/// A worked example shown as part of a task-level instruction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationExample {
    pub input: String,
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    /// Unknown record keys, preserved on round trip.
    #[serde(flatten, default, skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

impl DemonstrationExample {
    pub fn new(input: impl Into<String>, output: impl Into<String>) -> Self {
        DemonstrationExample {
            input: input.into(),
            output: output.into(),
            explanation: None,
            extra: Map::new(),
        }
    }

    pub fn with_explanation(mut self, explanation: impl Into<String>) -> Self {
        self.explanation = Some(explanation.into());
        self
    }

    pub(crate) fn validate(&self, context: &str) -> Result<()> {
        if self.input.trim().is_empty() {
            return Err(Error::validation(format!("{context}: example input is empty")));
        }
        if self.output.trim().is_empty() {
            return Err(Error::validation(format!("{context}: example output is empty")));
        }
        if let Some(explanation) = &self.explanation {
            if explanation.trim().is_empty() {
                return Err(Error::validation(format!(
                    "{context}: example explanation is present but empty"
                )));
            }
        }
        Ok(())
    }
}

/// One evaluated instance of a task: an input and its reference outputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    #[serde(rename = "id")]
    pub instance_id: String,
    pub input: String,
    pub references: Vec<String>,
    #[serde(flatten, default, skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

impl TaskInstance {
    pub fn new(
        instance_id: impl Into<String>,
        input: impl Into<String>,
        references: Vec<String>,
    ) -> Self {
        TaskInstance {
            instance_id: instance_id.into(),
            input: input.into(),
            references,
            extra: Map::new(),
        }
    }

    pub(crate) fn validate(&self, context: &str) -> Result<()> {
        if self.instance_id.trim().is_empty() {
            return Err(Error::validation(format!("{context}: instance id is empty")));
        }
        if self.references.is_empty() {
            return Err(Error::validation(format!(
                "{context}: instance {} has no references",
                self.instance_id
            )));
        }
        Ok(())
    }
}

/// The three format levels a corpus can use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatLevel {
    Task,
    Instance,
    Keywords,
}

impl fmt::Display for FormatLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FormatLevel::Task => "task",
            FormatLevel::Instance => "instance",
            FormatLevel::Keywords => "keywords",
        };
        f.write_str(name)
    }
}

/// A concrete instruction format: the level plus its level-specific
/// configuration. `Instance`/`Keywords` payloads are optional at the corpus
/// level because per-task records usually carry their own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "snake_case")]
pub enum FormatSpec {
    /// Task-level instruction (definition and worked examples).
    Task { mask: ComponentMask },
    /// Per-task template applied to each instance input.
    Instance {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        template: Option<String>,
    },
    /// Keyword prefixes prepended to each instance input.
    Keywords {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        keywords: Option<Vec<String>>,
    },
}

impl FormatSpec {
    pub fn task(mask: ComponentMask) -> Self {
        FormatSpec::Task { mask }
    }

    pub fn instance(template: Option<String>) -> Result<Self> {
        if let Some(template) = &template {
            validate_template(template)?;
        }
        Ok(FormatSpec::Instance { template })
    }

    pub fn keywords(keywords: Option<Vec<String>>) -> Result<Self> {
        if let Some(keywords) = &keywords {
            validate_keywords(keywords)?;
        }
        Ok(FormatSpec::Keywords { keywords })
    }

    pub fn level(&self) -> FormatLevel {
        match self {
            FormatSpec::Task { .. } => FormatLevel::Task,
            FormatSpec::Instance { .. } => FormatLevel::Instance,
            FormatSpec::Keywords { .. } => FormatLevel::Keywords,
        }
    }

    pub fn mask(&self) -> Option<ComponentMask> {
        match self {
            FormatSpec::Task { mask } => Some(*mask),
            _ => None,
        }
    }

    pub fn template(&self) -> Option<&str> {
        match self {
            FormatSpec::Instance { template } => template.as_deref(),
            _ => None,
        }
    }

    pub fn keyword_list(&self) -> Option<&[String]> {
        match self {
            FormatSpec::Keywords { keywords } => keywords.as_deref(),
            _ => None,
        }
    }

    /// Short code for CLI flags and reports: a mask code for task level,
    /// otherwise the level name.
    pub fn code(&self) -> String {
        match self {
            FormatSpec::Task { mask } => mask.code(),
            FormatSpec::Instance { .. } => "instance".to_string(),
            FormatSpec::Keywords { .. } => "keywords".to_string(),
        }
    }

    /// Parse a CLI format code: `"instance"`, `"keywords"`, or a component
    /// mask code such as `"DPE"`.
    pub fn parse_code(code: &str) -> Result<Self> {
        match code.trim().to_ascii_lowercase().as_str() {
            "instance" => Ok(FormatSpec::Instance { template: None }),
            "keywords" => Ok(FormatSpec::Keywords { keywords: None }),
            "task" => Err(Error::validation(
                "task-level format requires a component mask code such as DP or DPNE",
            )),
            _ => Ok(FormatSpec::Task { mask: super::mask::parse_component_mask(code)? }),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            FormatSpec::Task { .. } => Ok(()),
            FormatSpec::Instance { template } => {
                template.as_deref().map_or(Ok(()), validate_template)
            }
            FormatSpec::Keywords { keywords } => {
                keywords.as_deref().map_or(Ok(()), validate_keywords)
            }
        }
    }
}

impl fmt::Display for FormatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatSpec::Task { mask } => write!(f, "task[{mask}]"),
            FormatSpec::Instance { .. } => f.write_str("instance"),
            FormatSpec::Keywords { .. } => f.write_str("keywords"),
        }
    }
}

/// The placeholder substituted with each instance input.
pub const INPUT_PLACEHOLDER: &str = "{input}";

/// Check that a template has balanced, non-empty placeholders and uses the
/// `{input}` placeholder at least once.
pub fn validate_template(template: &str) -> Result<()> {
    let mut open: Option<usize> = None;
    let mut saw_input = false;
    for (i, ch) in template.char_indices() {
        match ch {
            '{' => {
                if open.is_some() {
                    return Err(Error::format(format!(
                        "malformed placeholder in template: nested '{{' at byte {i}"
                    )));
                }
                open = Some(i);
            }
            '}' => match open.take() {
                Some(start) => {
                    let name = &template[start + 1..i];
                    if name.trim().is_empty() {
                        return Err(Error::format(
                            "malformed placeholder in template: empty '{}'".to_string(),
                        ));
                    }
                    if name == "input" {
                        saw_input = true;
                    }
                }
                None => {
                    return Err(Error::format(format!(
                        "malformed placeholder in template: unmatched '}}' at byte {i}"
                    )))
                }
            },
            _ => {}
        }
    }
    if open.is_some() {
        return Err(Error::format(
            "malformed placeholder in template: unclosed '{'".to_string(),
        ));
    }
    if !saw_input {
        return Err(Error::format(format!(
            "template must contain the {INPUT_PLACEHOLDER} placeholder: {template:?}"
        )));
    }
    Ok(())
}

fn validate_keywords(keywords: &[String]) -> Result<()> {
    if keywords.is_empty() {
        return Err(Error::format("keywords list is empty"));
    }
    for kw in keywords {
        if kw.trim().is_empty() {
            return Err(Error::format("keywords list contains an empty keyword"));
        }
    }
    Ok(())
}

/// Components a transfer deliberately left blank because the source format
/// could not supply them. A blank component still satisfies the target
/// format's requirements; the marker is what distinguishes "intentionally
/// empty" from "missing".
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct BlankFill {
    pub d: bool,
    pub p: bool,
    pub n: bool,
    pub e: bool,
}

impl BlankFill {
    pub fn is_empty(&self) -> bool {
        !(self.d || self.p || self.n || self.e)
    }

    pub fn has(&self, component: Component) -> bool {
        match component {
            Component::Definition => self.d,
            Component::Positives => self.p,
            Component::Negatives => self.n,
            Component::Explanations => self.e,
        }
    }

    pub fn set(&mut self, component: Component) {
        match component {
            Component::Definition => self.d = true,
            Component::Positives => self.p = true,
            Component::Negatives => self.n = true,
            Component::Explanations => self.e = true,
        }
    }

    pub fn code(&self) -> String {
        Component::ALL
            .into_iter()
            .filter(|c| self.has(*c))
            .map(Component::letter)
            .collect()
    }

    pub fn parse(code: &str) -> Result<Self> {
        let mut fill = BlankFill::default();
        for ch in code.chars() {
            let component = match ch.to_ascii_uppercase() {
                'D' => Component::Definition,
                'P' => Component::Positives,
                'N' => Component::Negatives,
                'E' => Component::Explanations,
                other => {
                    return Err(Error::validation(format!(
                        "unknown component letter {other:?} in blank-fill code {code:?}"
                    )))
                }
            };
            if fill.has(component) {
                return Err(Error::validation(format!(
                    "component letter repeated in blank-fill code {code:?}"
                )));
            }
            fill.set(component);
        }
        Ok(fill)
    }

    pub fn components(&self) -> impl Iterator<Item = Component> + '_ {
        Component::ALL.into_iter().filter(|c| self.has(*c))
    }
}

impl fmt::Debug for BlankFill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlankFill({})", self.code())
    }
}

impl Serialize for BlankFill {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for BlankFill {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        BlankFill::parse(&code).map_err(D::Error::custom)
    }
}

/// A task in the unified representation: identity, instruction components,
/// and evaluated instances. Which components are meaningful is governed by
/// `source_format`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UnifiedTask {
    pub task_id: String,
    pub source_format: FormatSpec,
    pub definition: Option<String>,
    pub positives: Vec<DemonstrationExample>,
    pub negatives: Vec<DemonstrationExample>,
    pub instances: Vec<TaskInstance>,
    pub category: Option<String>,
    /// Components satisfied by a deliberate blank rather than content.
    pub filled: BlankFill,
    /// Unknown record keys, preserved on round trip.
    pub extra: Map<String, Value>,
}

impl Default for FormatSpec {
    fn default() -> Self {
        FormatSpec::Task { mask: ComponentMask::DP }
    }
}

impl UnifiedTask {
    /// Whether `component` carries content (not merely a blank marker).
    pub fn component_present(&self, component: Component) -> bool {
        match component {
            Component::Definition => {
                self.definition.as_deref().is_some_and(|d| !d.trim().is_empty())
            }
            Component::Positives => !self.positives.is_empty(),
            Component::Negatives => !self.negatives.is_empty(),
            Component::Explanations => self
                .positives
                .iter()
                .chain(&self.negatives)
                .any(|ex| ex.explanation.is_some()),
        }
    }

    /// Whether `component` satisfies a mask requirement: either present or
    /// deliberately blanked by a transfer.
    pub fn component_satisfied(&self, component: Component) -> bool {
        self.component_present(component) || self.filled.has(component)
    }

    pub fn instance(&self, instance_id: &str) -> Option<&TaskInstance> {
        self.instances.iter().find(|i| i.instance_id == instance_id)
    }
}

/// A prompt-ready instruction for one instance, plus the reference text the
/// model is expected to produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderedInstruction {
    pub task_id: String,
    pub instance_id: String,
    pub prompt_text: String,
    pub target_text: String,
    pub format: FormatSpec,
}
