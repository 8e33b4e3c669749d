//! Unified task schema: types, component masks, record codec, rendering.

pub mod codec;
pub mod mask;
pub mod render;
pub mod types;

pub use codec::{decode_task, encode_task, TaskRecord};
pub use mask::{parse_component_mask, Component, ComponentMask};
pub use render::{instruction_text, render, ExampleBudget};
pub use types::{
    validate_template, BlankFill, DemonstrationExample, FormatLevel, FormatSpec,
    RenderedInstruction, TaskInstance, UnifiedTask, INPUT_PLACEHOLDER,
};
