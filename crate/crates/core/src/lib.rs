//! Multi-hop retrieval-augmented question answering.

pub mod graph;
pub mod planparse;
pub mod providers;
pub mod scoring;
pub mod text;
pub mod config;
pub mod demos;
pub mod eval;
pub mod prompts;
pub mod transcript;
pub mod traversal;
