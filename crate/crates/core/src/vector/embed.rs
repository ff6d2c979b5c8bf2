//! Validated embedding.

use crate::backends::EmbeddingBackend;

use super::VectorError;

/// Embeds `text` and returns a finite unit vector of the backend's dimension.
pub fn embed(text: &str, backend: &dyn EmbeddingBackend) -> Result<Vec<f64>, VectorError> {
    let mut v = backend.embed(text)?;
    if v.len() != backend.dim() {
        return Err(VectorError::Dimension {
            expected: backend.dim(),
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(VectorError::NonFinite);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(VectorError::ZeroVector);
    }
    if (norm - 1.0).abs() > 1e-12 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendError, HashEmbedder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn stable_and_unit() {
        let e = HashEmbedder::new(64, 1);
        let a = embed("cancer-associated fibroblasts", &e).unwrap();
        assert_eq!(a, embed("cancer-associated fibroblasts", &e).unwrap());
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unrelated_random_strings_are_dissimilar() {
        // 1,000 pairs of random alphanumeric strings.
        let e = HashEmbedder::new(64, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let word = |rng: &mut ChaCha8Rng| -> String {
            let n = rng.random_range(3..20);
            (0..n)
                .map(|_| char::from(b"abcdefghijklmnopqrstuvwxyz0123456789"[rng.random_range(0..36)]))
                .collect()
        };
        let mut worst: f64 = -1.0;
        for _ in 0..1000 {
            let a = word(&mut rng);
            let b = word(&mut rng);
            if a == b {
                continue;
            }
            worst = worst.max(cosine(&embed(&a, &e).unwrap(), &embed(&b, &e).unwrap()));
        }
        assert!(worst < 0.5, "max cosine {worst}");
    }

    struct Bad(Vec<f64>);
    impl EmbeddingBackend for Bad {
        fn dim(&self) -> usize {
            2
        }
        fn embed(&self, _: &str) -> Result<Vec<f64>, BackendError> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn rejects_malformed_vectors() {
        assert!(matches!(embed("x", &Bad(vec![1.0])), Err(VectorError::Dimension { .. })));
        assert!(matches!(embed("x", &Bad(vec![f64::NAN, 1.0])), Err(VectorError::NonFinite)));
        assert!(matches!(embed("x", &Bad(vec![0.0, 0.0])), Err(VectorError::ZeroVector)));
        let v = embed("x", &Bad(vec![3.0, 4.0])).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-12);
    }
}
