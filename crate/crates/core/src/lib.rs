//! Instruction-format unification: a schema for instruction-tuning tasks,
//! transfer between format families (rule-based and few-shot through a
//! model backend), perplexity-based candidate denoising, corpus pipeline
//! operations, and the evaluation metrics to close the loop.
//!
//! The pipeline, end to end: read a corpus in its native format, transfer
//! every task into the target format ([`transfer`]), pick the least
//! perplexing conversion when several were sampled ([`denoise`]), filter
//! test leakage and assemble training mixtures ([`corpus`]), and score
//! predictions ([`metrics`]). Everything is deterministic under explicit
//! seeds; the only nondeterminism lives behind the [`backend`] traits, and
//! the shipped mock backend removes even that.

pub mod backend;
pub mod corpus;
pub mod denoise;
pub mod error;
pub mod metrics;
pub mod schema;
pub mod synth;
pub mod transfer;
pub mod util;

pub use error::{BackendError, Error, Result};
pub use schema::{ComponentMask, FormatLevel, FormatSpec, UnifiedTask};
