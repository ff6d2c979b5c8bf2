//! In-memory cosine index with exhaustive top-k search.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::chunk::Chunk;
use super::VectorError;
use crate::sync::Published;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub chunk: Chunk,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub chunk: Chunk,
    pub score: f64,
}

/// Chunks with their embeddings. Appends publish a new entry list; searches
/// run against whichever list was current when they started.
#[derive(Debug)]
pub struct ChunkIndex {
    dim: usize,
    entries: Published<Vec<Arc<IndexEntry>>>,
}

impl ChunkIndex {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Published::new(Vec::new()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.load().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Arc<Vec<Arc<IndexEntry>>> {
        self.entries.load()
    }

    fn check(&self, v: &[f64]) -> Result<(), VectorError> {
        if v.len() != self.dim {
            return Err(VectorError::Dimension {
                expected: self.dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(VectorError::NonFinite);
        }
        Ok(())
    }

    pub fn append(&self, chunk: Chunk, vector: Vec<f64>) -> Result<(), VectorError> {
        self.extend(vec![(chunk, vector)])
    }

    /// Appends a batch with a single publish. Nothing is added if any vector
    /// is malformed.
    pub fn extend(&self, batch: Vec<(Chunk, Vec<f64>)>) -> Result<(), VectorError> {
        for (_, v) in &batch {
            self.check(v)?;
        }
        self.entries.update(|cur| {
            let mut next = Vec::with_capacity(cur.len() + batch.len());
            next.extend(cur.iter().cloned());
            next.extend(
                batch
                    .into_iter()
                    .map(|(chunk, vector)| Arc::new(IndexEntry { chunk, vector })),
            );
            (next, ())
        });
        Ok(())
    }

    /// The `k` best entries by cosine similarity, descending, ties by id.
    pub fn search(&self, query: &[f64], k: usize) -> Result<Vec<Hit>, VectorError> {
        self.check(query)?;
        let entries = self.entries.load();
        let qn = norm(query);
        let mut scored: Vec<(f64, &IndexEntry)> = entries
            .iter()
            .map(|e| (cosine_with_norm(query, qn, &e.vector), e.as_ref()))
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.chunk.id.cmp(&b.1.chunk.id))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(score, e)| Hit {
                chunk: e.chunk.clone(),
                score,
            })
            .collect())
    }

    pub fn to_records(&self) -> Vec<IndexEntry> {
        self.entries.load().iter().map(|e| (**e).clone()).collect()
    }

    pub fn from_records(dim: usize, records: Vec<IndexEntry>) -> Result<Self, VectorError> {
        let index = Self::new(dim);
        index.extend(records.into_iter().map(|e| (e.chunk, e.vector)).collect())?;
        Ok(index)
    }
}

impl PartialEq for ChunkIndex {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.to_records() == other.to_records()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cosine_with_norm(q: &[f64], qn: f64, v: &[f64]) -> f64 {
    let denom = qn * norm(v);
    if denom == 0.0 {
        return 0.0;
    }
    let dot: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
    (dot / denom).clamp(-1.0, 1.0)
}

/// Cosine similarity of two vectors, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    cosine_with_norm(a, norm(a), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chunk(id: u64) -> Chunk {
        Chunk {
            id,
            text: format!("chunk {id}"),
            source_span: (id, id),
            token_count: 2,
            byte_start: 0,
            byte_end: 0,
            overlap_bytes: 0,
        }
    }

    fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn underfull_index_returns_all() {
        let idx = ChunkIndex::new(3);
        for i in 0..3 {
            idx.append(chunk(i), vec![1.0, i as f64, 0.0]).unwrap();
        }
        assert_eq!(idx.search(&[1.0, 0.0, 0.0], 5).unwrap().len(), 3);
    }

    #[test]
    fn empty_index_is_empty_result() {
        assert!(ChunkIndex::new(2).search(&[1.0, 0.0], 5).unwrap().is_empty());
    }

    #[test]
    fn ties_break_by_id() {
        let idx = ChunkIndex::new(2);
        for i in [3, 1, 2] {
            idx.append(chunk(i), vec![0.0, 1.0]).unwrap();
        }
        let ids: Vec<u64> = idx.search(&[0.0, 1.0], 3).unwrap().iter().map(|h| h.chunk.id).collect();
        assert_eq!(ids, vec![1, 2, 3]);
    }

    #[test]
    fn rejects_bad_vectors() {
        let idx = ChunkIndex::new(2);
        assert!(idx.append(chunk(0), vec![1.0]).is_err());
        assert!(idx.append(chunk(0), vec![f64::INFINITY, 0.0]).is_err());
        assert!(idx.is_empty());
    }

    #[test]
    fn matches_brute_force_on_1000_chunks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let idx = ChunkIndex::new(64);
        let vecs: Vec<Vec<f64>> = (0..1000).map(|_| random_unit(&mut rng, 64)).collect();
        idx.extend(vecs.iter().enumerate().map(|(i, v)| (chunk(i as u64), v.clone())).collect())
            .unwrap();
        let q = random_unit(&mut rng, 64);
        let mut oracle: Vec<(f64, u64)> = vecs
            .iter()
            .enumerate()
            .map(|(i, v)| (q.iter().zip(v).map(|(a, b)| a * b).sum::<f64>(), i as u64))
            .collect();
        oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let got: Vec<u64> = idx.search(&q, 5).unwrap().iter().map(|h| h.chunk.id).collect();
        let want: Vec<u64> = oracle[..5].iter().map(|x| x.1).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn self_similarity_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_unit(&mut rng, 16);
        assert!((cosine(&v, &v) - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn incremental_equals_batch(n in 0usize..40, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let items: Vec<(Chunk, Vec<f64>)> = (0..n).map(|i| (chunk(i as u64), random_unit(&mut rng, 8))).collect();
            let a = ChunkIndex::new(8);
            a.extend(items.clone()).unwrap();
            let b = ChunkIndex::new(8);
            for (c, v) in items {
                b.append(c, v).unwrap();
            }
            prop_assert!(a == b);
        }

        #[test]
        fn scores_in_range(a in prop::collection::vec(-1e3f64..1e3, 8), b in prop::collection::vec(-1e3f64..1e3, 8)) {
            let s = cosine(&a, &b);
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
