//! Witness-program generation and spectrum-based isolation of compiler bugs.
//!
//! A failing test program is analyzed for data-flow and control-flow hot
//! spots, mutated into passing variants by a language model steered by an
//! actor-critic prompt selector, and the coverage of those variants is used
//! to rank suspicious compiler source files.

pub mod complexity;
pub mod harness;
pub mod llm;
pub mod orchestrator;
pub mod program;
pub mod prompt;
pub mod rl;
pub mod sbfl;
pub mod spectra;
pub mod validation;
