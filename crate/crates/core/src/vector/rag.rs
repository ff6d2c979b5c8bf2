//! Retrieval-augmented baseline: chunk the whole history, answer from the
//! top-k chunks.

use std::sync::Arc;

use super::chunk::{chunk_history, Chunk, DEFAULT_CHUNK_TOKENS, DEFAULT_OVERLAP_TOKENS};
use super::embed::embed;
use super::index::{ChunkIndex, Hit};
use super::VectorError;
use crate::backends::EmbeddingBackend;
use crate::context::AssembledContext;
use crate::message::Message;
use crate::tokens::TokenCounter;

pub const DEFAULT_TOP_K: usize = 5;

/// Embeds `query` and returns the `k` nearest chunks.
pub fn retrieve_top_k(
    index: &ChunkIndex,
    backend: &dyn EmbeddingBackend,
    query: &str,
    k: usize,
) -> Result<Vec<Hit>, VectorError> {
    if index.is_empty() {
        return Ok(Vec::new());
    }
    let q = embed(query, backend)?;
    index.search(&q, k)
}

/// Chunks `messages` and indexes every chunk.
pub fn build_index(
    messages: &[Message],
    backend: &dyn EmbeddingBackend,
    chunk_size: usize,
    overlap: usize,
    counter: &TokenCounter,
) -> Result<ChunkIndex, VectorError> {
    let chunks = chunk_history(messages, chunk_size, overlap, counter)?;
    let batch = chunks
        .into_iter()
        .map(|c| {
            let v = embed(&c.text, backend)?;
            Ok((c, v))
        })
        .collect::<Result<Vec<(Chunk, Vec<f64>)>, VectorError>>()?;
    let index = ChunkIndex::new(backend.dim());
    index.extend(batch)?;
    Ok(index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RagContext {
    pub context: AssembledContext,
    pub hits: Vec<Hit>,
}

/// Preamble, the top-k chunks in descending similarity, then the query.
pub fn rag_answer_context(
    index: &ChunkIndex,
    backend: &dyn EmbeddingBackend,
    preamble: &str,
    query: &str,
    k: usize,
    counter: &TokenCounter,
) -> Result<RagContext, VectorError> {
    let hits = retrieve_top_k(index, backend, query, k)?;
    let chunks = hits.iter().map(|h| h.chunk.text.clone()).collect();
    let context = AssembledContext::build(preamble, "", chunks, Vec::new(), query, counter)?;
    Ok(RagContext { context, hits })
}

/// Full RAG memory over one conversation.
pub struct VectorMemory {
    backend: Arc<dyn EmbeddingBackend>,
    index: ChunkIndex,
    preamble: String,
    k: usize,
    counter: TokenCounter,
}

impl VectorMemory {
    pub fn build(
        messages: &[Message],
        backend: Arc<dyn EmbeddingBackend>,
        preamble: &str,
        counter: TokenCounter,
    ) -> Result<Self, VectorError> {
        let index = build_index(
            messages,
            backend.as_ref(),
            DEFAULT_CHUNK_TOKENS,
            DEFAULT_OVERLAP_TOKENS,
            &counter,
        )?;
        Ok(Self {
            backend,
            index,
            preamble: preamble.to_string(),
            k: DEFAULT_TOP_K,
            counter,
        })
    }

    pub fn index(&self) -> &ChunkIndex {
        &self.index
    }

    pub fn context(&self, query: &str) -> Result<RagContext, VectorError> {
        rag_answer_context(&self.index, self.backend.as_ref(), &self.preamble, query, self.k, &self.counter)
    }
}
