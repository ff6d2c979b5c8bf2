//! Record/replay of HTTP exchanges, keyed by a hash of the request.
//!
//! Credentials are not part of the key, so fixtures recorded with one key
//! replay without any.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::http::Transport;
use super::BackendError;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "dir")]
pub enum FixtureMode {
    #[default]
    Off,
    Record(PathBuf),
    Replay(PathBuf),
}

/// Hex SHA-256 of the URL and request body.
pub fn fixture_key(url: &str, body: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(url.as_bytes());
    h.update(b"\n");
    h.update(body);
    hex::encode(h.finalize())
}

pub struct FixtureTransport {
    dir: PathBuf,
    inner: Option<Arc<dyn Transport>>,
}

impl FixtureTransport {
    pub fn recording(dir: impl Into<PathBuf>, inner: Arc<dyn Transport>) -> Self {
        Self {
            dir: dir.into(),
            inner: Some(inner),
        }
    }

    pub fn replaying(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            inner: None,
        }
    }

    /// Applies `mode` around a live transport.
    pub fn wrap(mode: FixtureMode, live: Arc<dyn Transport>) -> Result<Arc<dyn Transport>, BackendError> {
        Ok(match mode {
            FixtureMode::Off => live,
            FixtureMode::Record(dir) => {
                fs::create_dir_all(&dir).map_err(|e| BackendError::FixtureIo(e.to_string()))?;
                Arc::new(Self::recording(dir, live))
            }
            FixtureMode::Replay(dir) => Arc::new(Self::replaying(dir)),
        })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl Transport for FixtureTransport {
    fn post(&self, url: &str, body: &[u8], bearer: Option<&str>) -> Result<Vec<u8>, BackendError> {
        let key = fixture_key(url, body);
        let path = self.path(&key);
        match &self.inner {
            None => fs::read(&path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => BackendError::FixtureMissing(key),
                _ => BackendError::FixtureIo(e.to_string()),
            }),
            Some(inner) => {
                let bytes = inner.post(url, body, bearer)?;
                fs::write(&path, &bytes).map_err(|e| BackendError::FixtureIo(e.to_string()))?;
                Ok(bytes)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::http::mock;
    use super::super::{ChatBackend, ChatRequest, HttpChat, HttpTransport, RetryPolicy};
    use super::*;
    use std::time::Duration;

    #[test]
    fn replay_equals_recorded_bytes() {
        let body = r#"{"choices":[{"message":{"content":"recorded answer"}}]}"#;
        let (url, hits, _) = mock::serve(vec![(200, body.into())]);
        let dir = tempfile::tempdir().unwrap();
        let live: Arc<dyn Transport> =
            Arc::new(HttpTransport::new(Duration::from_secs(5), RetryPolicy::default()));
        let rec = Arc::new(FixtureTransport::recording(dir.path(), live));
        let req = ChatRequest {
            system: String::new(),
            user: "QUERY: q".into(),
            input_tokens: 3,
            temperature: 0.0,
            max_output_tokens: 8,
        };
        let recorded = HttpChat::new(url.clone(), "m".into(), 1000, Some("secret".into()), rec).complete(&req);
        assert_eq!(recorded.text(), Some("recorded answer"));

        let files: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
        let stored = fs::read(files[0].as_ref().unwrap().path()).unwrap();
        assert_eq!(stored, body.as_bytes());

        let replay = Arc::new(FixtureTransport::replaying(dir.path()));
        let replayed = HttpChat::new(url, "m".into(), 1000, None, replay).complete(&req);
        assert_eq!(replayed.text(), Some("recorded answer"));
        assert_eq!(hits.load(std::sync::atomic::Ordering::SeqCst), 1);
    }

    #[test]
    fn missing_fixture_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let t = FixtureTransport::replaying(dir.path());
        assert!(matches!(t.post("u", b"{}", None), Err(BackendError::FixtureMissing(_))));
    }

    #[test]
    fn key_depends_on_url_and_body() {
        assert_ne!(fixture_key("a", b"x"), fixture_key("b", b"x"));
        assert_ne!(fixture_key("a", b"x"), fixture_key("a", b"y"));
        assert_eq!(fixture_key("a", b"x").len(), 64);
    }
}
