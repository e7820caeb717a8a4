//! Context-guided decompilation of compiler-emitted x86 assembly into
//! re-executable C.
//!
//! The pipeline retrieves similar (assembly, source) exemplars or compiler
//! optimization rule descriptors, renders them into a prompt for an external
//! language model, then recompiles and runs what comes back.

pub mod asmnorm;
pub mod ctoken;
pub mod corpus;
pub mod index;
pub mod context;
pub mod llm;
pub mod harness;
pub mod triage;
pub mod flags;
pub mod orchestrator;
