//! Line-delimited storage with provenance and content hashes.
//!
//! Every object file is `{kind}/{spec_hash}/{seed}.ldj` under the store
//! root. The first line is a JSON header naming the kind, the format
//! version, the provenance (spec hash and seed), the item count, and the
//! sha256 of the remaining lines. Each following line is one item.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evaluation::BenchmarkRecord;
use crate::message::Message;
use crate::profile::SemanticProfile;
use crate::vector::{ChunkIndex, IndexEntry, VectorError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record in {path} line {line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("content hash mismatch in {path}: header {expected}, computed {actual}")]
    Corrupt {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("{path} holds {found:?} objects, expected {expected:?}")]
    WrongKind {
        path: PathBuf,
        expected: ObjectKind,
        found: ObjectKind,
    },
    #[error("{path} was written by format version {0}, newer than {FORMAT_VERSION}", .found)]
    UnsupportedVersion { path: PathBuf, found: u32 },
    #[error(transparent)]
    Vector(#[from] VectorError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Conversations,
    Profiles,
    Indices,
    Fixtures,
    Results,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 5] = [
        ObjectKind::Conversations,
        ObjectKind::Profiles,
        ObjectKind::Indices,
        ObjectKind::Fixtures,
        ObjectKind::Results,
    ];

    pub fn dir_name(self) -> &'static str {
        match self {
            ObjectKind::Conversations => "conversations",
            ObjectKind::Profiles => "profiles",
            ObjectKind::Indices => "indices",
            ObjectKind::Fixtures => "fixtures",
            ObjectKind::Results => "results",
        }
    }
}

/// Where an object came from: the hash of the workload spec that generated
/// it and the seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec_hash: String,
    pub seed: u64,
}

/// Short hex sha256 of a value's JSON form.
pub fn provenance_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

fn content_hash(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    kind: ObjectKind,
    format_version: u32,
    spec_hash: String,
    seed: u64,
    count: usize,
    content_hash: String,
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("object");
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Serializes items as a header plus one JSON line each.
pub fn encode<T: Serialize>(kind: ObjectKind, provenance: &Provenance, items: &[T]) -> String {
    let mut body = String::new();
    for item in items {
        body.push_str(&serde_json::to_string(item).expect("serializable"));
        body.push('\n');
    }
    let header = Header {
        kind,
        format_version: FORMAT_VERSION,
        spec_hash: provenance.spec_hash.clone(),
        seed: provenance.seed,
        count: items.len(),
        content_hash: content_hash(&body),
    };
    format!("{}\n{body}", serde_json::to_string(&header).expect("serializable"))
}

fn warn_unknown_fields<T: Serialize>(raw: &Value, parsed: &T, path: &Path, line: usize) {
    let (Value::Object(raw), Ok(Value::Object(known))) = (raw, serde_json::to_value(parsed)) else {
        return;
    };
    for k in raw.keys().filter(|k| !known.contains_key(*k)) {
        log::warn!("{}: line {line}: ignoring unknown field {k:?}", path.display());
    }
}

/// Parses a document produced by [`encode`], checking kind and hash.
pub fn decode<T: Serialize + DeserializeOwned>(
    kind: ObjectKind,
    text: &str,
    path: &Path,
) -> Result<(Provenance, Vec<T>), PersistError> {
    let malformed = |line: usize, message: String| PersistError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let (head, body) = text.split_once('\n').ok_or_else(|| malformed(1, "missing header".into()))?;
    let header_raw: Value = serde_json::from_str(head).map_err(|e| malformed(1, e.to_string()))?;
    let header: Header = serde_json::from_value(header_raw.clone()).map_err(|e| malformed(1, e.to_string()))?;
    warn_unknown_fields(&header_raw, &header, path, 1);
    if header.format_version > FORMAT_VERSION {
        return Err(PersistError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: header.format_version,
        });
    }
    if header.kind != kind {
        return Err(PersistError::WrongKind {
            path: path.to_path_buf(),
            expected: kind,
            found: header.kind,
        });
    }
    let actual = content_hash(body);
    if actual != header.content_hash {
        return Err(PersistError::Corrupt {
            path: path.to_path_buf(),
            expected: header.content_hash,
            actual,
        });
    }
    let mut items = Vec::with_capacity(header.count);
    for (i, line) in body.lines().enumerate() {
        let raw: Value = serde_json::from_str(line).map_err(|e| malformed(i + 2, e.to_string()))?;
        let item: T = serde_json::from_value(raw.clone()).map_err(|e| malformed(i + 2, e.to_string()))?;
        warn_unknown_fields(&raw, &item, path, i + 2);
        items.push(item);
    }
    if items.len() != header.count {
        return Err(malformed(1, format!("header count {} but {} items", header.count, items.len())));
    }
    let provenance = Provenance {
        spec_hash: header.spec_hash,
        seed: header.seed,
    };
    Ok((provenance, items))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreLayout {
    root: PathBuf,
}

impl StoreLayout {
    /// Creates the root and one directory per object kind.
    pub fn init(root: impl Into<PathBuf>) -> Result<Self, PersistError> {
        let root = root.into();
        for kind in ObjectKind::ALL {
            let dir = root.join(kind.dir_name());
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, kind: ObjectKind, provenance: &Provenance) -> PathBuf {
        self.root
            .join(kind.dir_name())
            .join(&provenance.spec_hash)
            .join(format!("{}.ldj", provenance.seed))
    }

    /// Directory for recorded HTTP fixtures of one run.
    pub fn fixtures_dir(&self, provenance: &Provenance) -> PathBuf {
        self.root
            .join(ObjectKind::Fixtures.dir_name())
            .join(&provenance.spec_hash)
            .join(provenance.seed.to_string())
    }

    pub fn save<T: Serialize>(&self, kind: ObjectKind, provenance: &Provenance, items: &[T]) -> Result<PathBuf, PersistError> {
        let path = self.path(kind, provenance);
        write_atomic(&path, encode(kind, provenance, items).as_bytes())?;
        Ok(path)
    }

    pub fn load<T: Serialize + DeserializeOwned>(&self, kind: ObjectKind, provenance: &Provenance) -> Result<Vec<T>, PersistError> {
        let path = self.path(kind, provenance);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Ok(decode(kind, &text, &path)?.1)
    }

    pub fn save_conversation(&self, p: &Provenance, messages: &[Message]) -> Result<PathBuf, PersistError> {
        self.save(ObjectKind::Conversations, p, messages)
    }

    pub fn load_conversation(&self, p: &Provenance) -> Result<Vec<Message>, PersistError> {
        self.load(ObjectKind::Conversations, p)
    }

    /// Saves a profile version history, oldest first.
    pub fn save_profiles(&self, p: &Provenance, history: &[SemanticProfile]) -> Result<PathBuf, PersistError> {
        self.save(ObjectKind::Profiles, p, history)
    }

    pub fn load_profiles(&self, p: &Provenance) -> Result<Vec<SemanticProfile>, PersistError> {
        self.load(ObjectKind::Profiles, p)
    }

    pub fn save_index(&self, p: &Provenance, index: &ChunkIndex) -> Result<PathBuf, PersistError> {
        self.save(ObjectKind::Indices, p, &index.to_records())
    }

    pub fn load_index(&self, p: &Provenance, dim: usize) -> Result<ChunkIndex, PersistError> {
        let records: Vec<IndexEntry> = self.load(ObjectKind::Indices, p)?;
        Ok(ChunkIndex::from_records(dim, records)?)
    }

    pub fn save_records(&self, p: &Provenance, records: &[BenchmarkRecord]) -> Result<PathBuf, PersistError> {
        self.save(ObjectKind::Results, p, records)
    }

    pub fn load_records(&self, p: &Provenance) -> Result<Vec<BenchmarkRecord>, PersistError> {
        self.load(ObjectKind::Results, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::baseline_scenario;
    use crate::tokens::TokenCounter;

    fn prov() -> Provenance {
        Provenance {
            spec_hash: provenance_hash(&"baseline"),
            seed: 7,
        }
    }

    #[test]
    fn baseline_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = StoreLayout::init(dir.path()).unwrap();
        let log = baseline_scenario(&TokenCounter::default());
        let path = store.save_conversation(&prov(), &log).unwrap();
        assert!(path.ends_with(format!("conversations/{}/7.ldj", prov().spec_hash)));
        assert_eq!(store.load_conversation(&prov()).unwrap(), log);
    }

    #[test]
    fn tampered_body_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let store = StoreLayout::init(dir.path()).unwrap();
        let log = baseline_scenario(&TokenCounter::default());
        let path = store.save_conversation(&prov(), &log).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace("178 samples", "179 samples");
        fs::write(&path, text).unwrap();
        assert!(matches!(store.load_conversation(&prov()), Err(PersistError::Corrupt { .. })));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let text = encode(ObjectKind::Profiles, &prov(), &[SemanticProfile::empty()]);
        let r: Result<(Provenance, Vec<Message>), _> = decode(ObjectKind::Conversations, &text, Path::new("x"));
        assert!(matches!(r, Err(PersistError::WrongKind { .. })));
    }

    #[test]
    fn unknown_fields_are_tolerated() {
        let profile = SemanticProfile::empty();
        let mut v = serde_json::to_value(&profile).unwrap();
        v["future_field"] = Value::from(1);
        let body = format!("{v}\n");
        let header = Header {
            kind: ObjectKind::Profiles,
            format_version: FORMAT_VERSION,
            spec_hash: "h".into(),
            seed: 0,
            count: 1,
            content_hash: content_hash(&body),
        };
        let text = format!("{}\n{body}", serde_json::to_string(&header).unwrap());
        let (_, items): (_, Vec<SemanticProfile>) = decode(ObjectKind::Profiles, &text, Path::new("x")).unwrap();
        assert_eq!(items, vec![profile]);
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b/report.md");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
