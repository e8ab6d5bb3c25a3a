//! Persona-conditioned product recommendation audits.
//!
//! The crate generates recommendation corpora from a chat-completions
//! endpoint ([`llmgen`]) and measures lexical disparities between a marked
//! and an unmarked demographic group three ways: weighted log-odds with an
//! informative Dirichlet prior ([`markedwords`]), linear SVM coefficients
//! ([`svm`]) and per-word Jensen-Shannon divergence contributions ([`jsd`]).
//! [`analysis`] wires these together per comparison axis.

pub mod analysis;
pub mod corpus;
pub mod jsd;
pub mod llmgen;
pub mod markedwords;
pub mod preprocess;
pub mod svm;
