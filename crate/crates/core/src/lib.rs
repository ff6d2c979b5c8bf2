//! Conversational memory architectures and the harness that benchmarks them.

pub mod backends;
pub mod context;
pub mod episodic;
pub mod evaluation;
pub mod facts;
pub mod full_context;
pub mod message;
pub mod persistence;
pub mod profile;
pub mod runner;
pub mod simulation;
pub mod sync;
pub mod tokens;
pub mod vector;
