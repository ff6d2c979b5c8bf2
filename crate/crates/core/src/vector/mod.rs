//! Vector-retrieval memory.

mod chunk;
mod embed;
mod index;
mod rag;

use thiserror::Error;

use crate::backends::BackendError;
use crate::context::ContextError;

pub use chunk::{
    chunk_history, dechunk, serialize_history, Chunk, ChunkError, DEFAULT_CHUNK_TOKENS,
    DEFAULT_OVERLAP_TOKENS,
};
pub use embed::embed;
pub use index::{cosine, ChunkIndex, Hit, IndexEntry};
pub use rag::{build_index, rag_answer_context, retrieve_top_k, RagContext, VectorMemory, DEFAULT_TOP_K};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VectorError {
    #[error("vector has dimension {got}, index expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("vector contains non-finite values")]
    NonFinite,
    #[error("embedding is the zero vector")]
    ZeroVector,
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Context(#[from] ContextError),
}
