//! Vector stores and the interchange formats that feed them.
//!
//! Three input formats are supported:
//!
//! * word2vec text: a `<count> <dimension>` header line followed by one
//!   `token v1 .. vd` line per entry;
//! * word2vec binary: the same text header, then records made of the token
//!   bytes, a single space, and `dimension` little-endian `f32` values. A
//!   newline after each record is optional;
//! * contextual NDJSON: one [`ContextualVectorRecord`] per line, as produced
//!   by the contextual extractor.
//!
//! Vectors are held as `f64`. Binary files carry `f32`, which widens
//! exactly, so a binary round trip is lossless.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Where a vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// One fixed vector per vocabulary token (word2vec, BioWordVec).
    Static,
    /// One vector per term occurrence in a template sentence.
    Contextual,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Static => "static",
            SourceKind::Contextual => "contextual",
        })
    }
}

/// How a contextual vector was pooled from encoder hidden states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    TermTokensMean,
    SentenceMean,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::TermTokensMean => "term_tokens_mean",
            Pooling::SentenceMean => "sentence_mean",
        })
    }
}

/// One line of the contextual NDJSON interchange file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextualVectorRecord {
    pub term: String,
    pub category: String,
    pub template_id: String,
    pub vector: Vec<f64>,
    pub pooling: Pooling,
}

/// Position of a problem inside an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    /// 1-based line number (text formats).
    Line(usize),
    /// 1-based record number (binary format; the header is not a record).
    Record(usize),
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Line(n) => write!(f, "line {n}"),
            Position::Record(n) => write!(f, "record {n}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header at line 1: {0}")]
    Header(String),
    #[error("line arity mismatch at line {line}: token '{token}' has {found} values, expected {expected}")]
    Arity {
        line: usize,
        token: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid float '{value}' at {at}")]
    InvalidFloat { at: Position, value: String },
    #[error("non-finite value for token '{token}' at {at}")]
    NonFinite { at: Position, token: String },
    #[error("duplicate token '{token}' at {at}")]
    DuplicateToken { at: Position, token: String },
    #[error("truncated record {record} for token '{token}'")]
    Truncated { record: usize, token: String },
    #[error("entry count mismatch: header declares {expected}, file holds {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("unexpected data after the {records} records declared in the header")]
    TrailingData { records: usize },
    #[error("invalid utf-8 in token at {at}")]
    InvalidUtf8 { at: Position },
    #[error("schema violation at line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("vector length mismatch at {at}: expected {expected}, found {found}")]
    DimensionMismatch {
        at: Position,
        expected: usize,
        found: usize,
    },
    #[error("vector store must hold at least one entry")]
    Empty,
    #[error("cannot merge stores: {0}")]
    Merge(String),
}

/// Why a single [`VectorStoreBuilder::push`] was refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PushError {
    Dimension { expected: usize, found: usize },
    Duplicate,
    NonFinite,
}

/// Immutable token → vector map with a fixed dimension.
///
/// Tokens are unique and case-sensitive; [`VectorStore::lookup`] adds a
/// lowercase fallback on a miss.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dimension: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    source_kind: SourceKind,
    metadata: BTreeMap<String, String>,
}

/// Accumulates entries and enforces the store invariants.
#[derive(Debug)]
pub struct VectorStoreBuilder {
    store: VectorStore,
}

impl VectorStoreBuilder {
    pub fn new(dimension: usize, source_kind: SourceKind) -> Self {
        VectorStoreBuilder {
            store: VectorStore {
                dimension,
                tokens: Vec::new(),
                index: HashMap::new(),
                data: Vec::new(),
                source_kind,
                metadata: BTreeMap::new(),
            },
        }
    }

    pub fn with_capacity(dimension: usize, source_kind: SourceKind, entries: usize) -> Self {
        let mut b = Self::new(dimension, source_kind);
        b.store.tokens.reserve(entries);
        b.store.index.reserve(entries);
        b.store.data.reserve(entries.saturating_mul(dimension));
        b
    }

    pub fn dimension(&self) -> usize {
        self.store.dimension
    }

    pub fn len(&self) -> usize {
        self.store.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.tokens.is_empty()
    }

    pub fn push(&mut self, token: impl Into<String>, vector: &[f64]) -> Result<(), PushError> {
        if vector.len() != self.store.dimension {
            return Err(PushError::Dimension {
                expected: self.store.dimension,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(PushError::NonFinite);
        }
        let token = token.into();
        if self.store.index.contains_key(&token) {
            return Err(PushError::Duplicate);
        }
        self.store
            .index
            .insert(token.clone(), self.store.tokens.len());
        self.store.tokens.push(token);
        self.store.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn metadata(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.store.metadata.insert(key.into(), value.into());
        self
    }

    pub fn finish(self) -> Result<VectorStore, EmbedError> {
        if self.store.dimension == 0 || self.store.tokens.is_empty() {
            return Err(EmbedError::Empty);
        }
        Ok(self.store)
    }
}

impl VectorStore {
    /// Builds a store from in-memory entries. Mostly useful for fixtures.
    pub fn from_entries<T, V>(
        source_kind: SourceKind,
        entries: impl IntoIterator<Item = (T, V)>,
    ) -> Result<VectorStore, EmbedError>
    where
        T: Into<String>,
        V: AsRef<[f64]>,
    {
        let mut builder: Option<VectorStoreBuilder> = None;
        for (i, (token, vector)) in entries.into_iter().enumerate() {
            let vector = vector.as_ref();
            let b =
                builder.get_or_insert_with(|| VectorStoreBuilder::new(vector.len(), source_kind));
            let token = token.into();
            b.push(token.clone(), vector)
                .map_err(|e| push_error(e, Position::Record(i + 1), token))?;
        }
        builder.ok_or(EmbedError::Empty)?.finish()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn source_kind(&self) -> SourceKind {
        self.source_kind
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Exact, case-sensitive lookup.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.vector_at(i))
    }

    /// Exact lookup, falling back to the lowercased token on a miss.
    /// Returns the token that matched alongside its vector.
    pub fn lookup<'a>(&'a self, token: &str) -> Option<(&'a str, &'a [f64])> {
        let hit = self.index.get(token).or_else(|| {
            let folded = token.to_lowercase();
            if folded == token {
                None
            } else {
                self.index.get(&folded)
            }
        })?;
        Some((self.tokens[*hit].as_str(), self.vector_at(*hit)))
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, &[f64])> + '_ {
        self.tokens
            .iter()
            .enumerate()
            .map(move |(i, t)| (t.as_str(), self.vector_at(i)))
    }

    fn vector_at(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Returns a copy with every component transformed by `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> VectorStore {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = f(*v);
        }
        out
    }

    /// Concatenates two stores of the same kind and dimension.
    pub fn merge(self, other: VectorStore) -> Result<VectorStore, EmbedError> {
        if self.dimension != other.dimension {
            return Err(EmbedError::Merge(format!(
                "dimension {} vs {}",
                self.dimension, other.dimension
            )));
        }
        if self.source_kind != other.source_kind {
            return Err(EmbedError::Merge(format!(
                "source kind {} vs {}",
                self.source_kind, other.source_kind
            )));
        }
        let mut metadata = self.metadata.clone();
        for (k, v) in &other.metadata {
            metadata
                .entry(k.clone())
                .and_modify(|existing| {
                    if existing != v {
                        let mut parts: BTreeSet<&str> = existing.split(',').collect();
                        parts.extend(v.split(','));
                        *existing = parts.into_iter().collect::<Vec<_>>().join(",");
                    }
                })
                .or_insert_with(|| v.clone());
        }
        let mut b = VectorStoreBuilder::with_capacity(
            self.dimension,
            self.source_kind,
            self.len() + other.len(),
        );
        for (i, (token, v)) in self.iter().chain(other.iter()).enumerate() {
            b.push(token, v)
                .map_err(|e| push_error(e, Position::Record(i + 1), token.to_string()))?;
        }
        b.store.metadata = metadata;
        b.finish()
    }
}

fn push_error(e: PushError, at: Position, token: String) -> EmbedError {
    match e {
        PushError::Dimension { expected, found } => EmbedError::DimensionMismatch {
            at,
            expected,
            found,
        },
        PushError::Duplicate => EmbedError::DuplicateToken { at, token },
        PushError::NonFinite => EmbedError::NonFinite { at, token },
    }
}

fn parse_header(line: &str) -> Result<(usize, usize), EmbedError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(EmbedError::Header(format!(
            "expected '<count> <dimension>', found '{}'",
            line.trim_end()
        )));
    }
    let count: usize = fields[0]
        .parse()
        .map_err(|_| EmbedError::Header(format!("invalid count '{}'", fields[0])))?;
    let dim: usize = fields[1]
        .parse()
        .map_err(|_| EmbedError::Header(format!("invalid dimension '{}'", fields[1])))?;
    if dim == 0 {
        return Err(EmbedError::Header("dimension must be at least 1".into()));
    }
    if count == 0 {
        return Err(EmbedError::Empty);
    }
    Ok((count, dim))
}

/// Parses word2vec text from any buffered reader.
pub fn read_word2vec_text<R: BufRead>(mut reader: R) -> Result<VectorStore, EmbedError> {
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Err(EmbedError::Header("empty file".into()));
    }
    let (count, dim) = parse_header(&line)?;
    // Cap the pre-allocation so a bogus header cannot exhaust memory up front.
    let mut builder =
        VectorStoreBuilder::with_capacity(dim, SourceKind::Static, count.min(1 << 20));
    let mut values = Vec::with_capacity(dim);
    let mut line_no = 1;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        if builder.len() == count {
            return Err(EmbedError::CountMismatch {
                expected: count,
                found: count + 1 + count_remaining_entries(&mut reader)?,
            });
        }
        values.clear();
        for field in fields {
            let v: f64 = field.parse().map_err(|_| EmbedError::InvalidFloat {
                at: Position::Line(line_no),
                value: field.to_string(),
            })?;
            values.push(v);
        }
        if values.len() != dim {
            return Err(EmbedError::Arity {
                line: line_no,
                token: token.to_string(),
                expected: dim,
                found: values.len(),
            });
        }
        builder
            .push(token, &values)
            .map_err(|e| push_error(e, Position::Line(line_no), token.to_string()))?;
    }
    if builder.len() != count {
        return Err(EmbedError::CountMismatch {
            expected: count,
            found: builder.len(),
        });
    }
    builder.finish()
}

fn count_remaining_entries<R: BufRead>(reader: &mut R) -> io::Result<usize> {
    let mut n = 0;
    let mut line = String::new();
    while reader.read_line(&mut line)? > 0 {
        if !line.trim().is_empty() {
            n += 1;
        }
        line.clear();
    }
    Ok(n)
}

pub fn load_word2vec_text(path: impl AsRef<Path>) -> Result<VectorStore, EmbedError> {
    let file = File::open(path)?;
    read_word2vec_text(BufReader::new(file))
}

/// Writes word2vec text. Each value uses the shortest decimal form that
/// parses back to the identical number; values that are exact `f32`s are
/// printed at `f32` precision.
pub fn write_word2vec_text<W: Write>(store: &VectorStore, writer: W) -> Result<(), EmbedError> {
    if store.is_empty() {
        return Err(EmbedError::Empty);
    }
    let mut w = BufWriter::new(writer);
    writeln!(w, "{} {}", store.len(), store.dimension())?;
    for (token, vector) in store.iter() {
        w.write_all(token.as_bytes())?;
        for &v in vector {
            let narrow = v as f32;
            if f64::from(narrow) == v {
                write!(w, " {narrow}")?;
            } else {
                write!(w, " {v}")?;
            }
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_word2vec_text(store: &VectorStore, path: impl AsRef<Path>) -> Result<(), EmbedError> {
    write_word2vec_text(store, File::create(path)?)
}

/// Reads bytes up to (not including) `delim`, skipping leading newlines.
/// Returns `None` when the stream ends before any token byte.
fn read_token<R: BufRead>(reader: &mut R, delim: u8) -> io::Result<Option<(Vec<u8>, bool)>> {
    let mut out = Vec::new();
    loop {
        let buf = reader.fill_buf()?;
        if buf.is_empty() {
            return Ok(if out.is_empty() {
                None
            } else {
                Some((out, false))
            });
        }
        let mut consumed = 0;
        let mut done = false;
        for &b in buf {
            consumed += 1;
            if out.is_empty() && (b == b'\n' || b == b'\r') {
                continue;
            }
            if b == delim {
                done = true;
                break;
            }
            out.push(b);
        }
        reader.consume(consumed);
        if done {
            return Ok(Some((out, true)));
        }
    }
}

/// Streams word2vec binary from a buffered reader.
pub fn read_word2vec_binary<R: BufRead>(mut reader: R) -> Result<VectorStore, EmbedError> {
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header)?;
    if header.is_empty() {
        return Err(EmbedError::Header("empty file".into()));
    }
    let header = std::str::from_utf8(&header)
        .map_err(|_| EmbedError::Header("header is not valid utf-8".into()))?;
    let (count, dim) = parse_header(header)?;
    let mut builder =
        VectorStoreBuilder::with_capacity(dim, SourceKind::Static, count.min(1 << 20));
    let mut raw = vec![0u8; dim * 4];
    let mut values = vec![0f64; dim];
    for record in 1..=count {
        let at = Position::Record(record);
        let Some((token, terminated)) = read_token(&mut reader, b' ')? else {
            return Err(EmbedError::CountMismatch {
                expected: count,
                found: record - 1,
            });
        };
        let token = String::from_utf8(token).map_err(|_| EmbedError::InvalidUtf8 { at })?;
        if !terminated {
            return Err(EmbedError::Truncated { record, token });
        }
        if let Err(e) = reader.read_exact(&mut raw) {
            return Err(match e.kind() {
                io::ErrorKind::UnexpectedEof => EmbedError::Truncated { record, token },
                _ => EmbedError::Io(e),
            });
        }
        for (v, chunk) in values.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f64::from(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
        }
        builder
            .push(token.clone(), &values)
            .map_err(|e| push_error(e, at, token))?;
    }
    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    if rest.iter().any(|b| !b.is_ascii_whitespace()) {
        return Err(EmbedError::TrailingData { records: count });
    }
    builder.finish()
}

pub fn load_word2vec_binary(path: impl AsRef<Path>) -> Result<VectorStore, EmbedError> {
    let file = File::open(path)?;
    read_word2vec_binary(BufReader::new(file))
}

/// Writes word2vec binary with a newline after every record. Values are
/// narrowed to `f32`; one that overflows `f32` is an error.
pub fn write_word2vec_binary<W: Write>(store: &VectorStore, writer: W) -> Result<(), EmbedError> {
    if store.is_empty() {
        return Err(EmbedError::Empty);
    }
    let mut w = BufWriter::new(writer);
    writeln!(w, "{} {}", store.len(), store.dimension())?;
    for (record, (token, vector)) in store.iter().enumerate() {
        w.write_all(token.as_bytes())?;
        w.write_all(b" ")?;
        for &v in vector {
            let narrow = v as f32;
            if !narrow.is_finite() {
                return Err(EmbedError::NonFinite {
                    at: Position::Record(record + 1),
                    token: token.to_string(),
                });
            }
            w.write_all(&narrow.to_le_bytes())?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_word2vec_binary(store: &VectorStore, path: impl AsRef<Path>) -> Result<(), EmbedError> {
    write_word2vec_binary(store, File::create(path)?)
}

/// Parses contextual NDJSON. Terms become tokens; a repeated term is an error.
///
/// The store records the pooling modes, template ids and categories seen
/// under the `pooling`, `template_ids` and `categories` metadata keys.
pub fn read_contextual_ndjson<R: BufRead>(reader: R) -> Result<VectorStore, EmbedError> {
    let mut builder: Option<VectorStoreBuilder> = None;
    let mut templates_of: HashMap<String, String> = HashMap::new();
    let mut poolings = BTreeSet::new();
    let mut template_ids = BTreeSet::new();
    let mut categories = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ContextualVectorRecord =
            serde_json::from_str(&line).map_err(|e| EmbedError::Schema {
                line: line_no,
                message: e.to_string(),
            })?;
        if record.term.trim().is_empty() {
            return Err(EmbedError::Schema {
                line: line_no,
                message: "term must be non-empty".into(),
            });
        }
        if record.vector.is_empty() {
            return Err(EmbedError::Schema {
                line: line_no,
                message: "vector must be non-empty".into(),
            });
        }
        if let Some(previous) = templates_of.get(&record.term) {
            let message = if *previous == record.template_id {
                format!(
                    "duplicate record for term '{}' and template '{}'",
                    record.term, record.template_id
                )
            } else {
                format!(
                    "term '{}' appears under templates '{}' and '{}'",
                    record.term, previous, record.template_id
                )
            };
            return Err(EmbedError::Schema {
                line: line_no,
                message,
            });
        }
        let vector = &record.vector;
        let b = builder
            .get_or_insert_with(|| VectorStoreBuilder::new(vector.len(), SourceKind::Contextual));
        b.push(record.term.clone(), vector)
            .map_err(|e| push_error(e, Position::Line(line_no), record.term.clone()))?;
        poolings.insert(record.pooling.to_string());
        template_ids.insert(record.template_id.clone());
        categories.insert(record.category.clone());
        templates_of.insert(record.term, record.template_id);
    }
    let mut builder = builder.ok_or(EmbedError::Empty)?;
    let join = |s: BTreeSet<String>| s.into_iter().collect::<Vec<_>>().join(",");
    builder
        .metadata("pooling", join(poolings))
        .metadata("template_ids", join(template_ids))
        .metadata("categories", join(categories));
    builder.finish()
}

pub fn load_contextual_ndjson(path: impl AsRef<Path>) -> Result<VectorStore, EmbedError> {
    let file = File::open(path)?;
    read_contextual_ndjson(BufReader::new(file))
}

/// On-disk format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreFormat {
    Word2VecText,
    Word2VecBinary,
    ContextualNdjson,
}

impl std::str::FromStr for StoreFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "w2v-text" => Ok(StoreFormat::Word2VecText),
            "w2v-bin" => Ok(StoreFormat::Word2VecBinary),
            "ndjson" => Ok(StoreFormat::ContextualNdjson),
            other => Err(format!(
                "unknown store format '{other}' (expected w2v-text, w2v-bin or ndjson)"
            )),
        }
    }
}

impl fmt::Display for StoreFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StoreFormat::Word2VecText => "w2v-text",
            StoreFormat::Word2VecBinary => "w2v-bin",
            StoreFormat::ContextualNdjson => "ndjson",
        })
    }
}

pub fn load_store(path: impl AsRef<Path>, format: StoreFormat) -> Result<VectorStore, EmbedError> {
    match format {
        StoreFormat::Word2VecText => load_word2vec_text(path),
        StoreFormat::Word2VecBinary => load_word2vec_binary(path),
        StoreFormat::ContextualNdjson => load_contextual_ndjson(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> Result<VectorStore, EmbedError> {
        read_word2vec_text(s.as_bytes())
    }

    fn binary_of(entries: &[(&str, &[f32])], dim: usize, newline: bool) -> Vec<u8> {
        let mut out = format!("{} {}\n", entries.len(), dim).into_bytes();
        for (t, v) in entries {
            out.extend_from_slice(t.as_bytes());
            out.push(b' ');
            for x in *v {
                out.extend_from_slice(&x.to_le_bytes());
            }
            if newline {
                out.push(b'\n');
            }
        }
        out
    }

    #[test]
    fn text_basic() {
        let s = text("2 3\na 1 0 0\nb 0 1 0").unwrap();
        assert_eq!(s.dimension(), 3);
        assert_eq!(s.len(), 2);
        assert_eq!(s.get("a").unwrap(), &[1.0, 0.0, 0.0]);
        assert_eq!(s.get("b").unwrap(), &[0.0, 1.0, 0.0]);
        assert_eq!(s.source_kind(), SourceKind::Static);
    }

    #[test]
    fn text_arity_error_names_line() {
        let err = text("1 2\na 1 0 0").unwrap_err();
        assert!(
            matches!(
                err,
                EmbedError::Arity {
                    line: 2,
                    found: 3,
                    expected: 2,
                    ..
                }
            ),
            "{err}"
        );
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn text_trailing_space_tolerated() {
        let s = text("1 2\nx 0.5 -0.25 \n").unwrap();
        assert_eq!(s.get("x").unwrap(), &[0.5, -0.25]);
    }

    #[test]
    fn text_rejects_bad_inputs() {
        assert!(matches!(text(""), Err(EmbedError::Header(_))));
        assert!(matches!(text("2\n"), Err(EmbedError::Header(_))));
        assert!(matches!(text("a b\n"), Err(EmbedError::Header(_))));
        assert!(matches!(text("1 0\n"), Err(EmbedError::Header(_))));
        assert!(matches!(text("0 2\n"), Err(EmbedError::Empty)));
        assert!(matches!(
            text("2 1\na 1\na 2\n"),
            Err(EmbedError::DuplicateToken {
                at: Position::Line(3),
                ..
            })
        ));
        assert!(matches!(
            text("1 2\na 1 NaN\n"),
            Err(EmbedError::NonFinite {
                at: Position::Line(2),
                ..
            })
        ));
        assert!(matches!(
            text("1 2\na 1 inf\n"),
            Err(EmbedError::NonFinite { .. })
        ));
        assert!(matches!(
            text("1 2\na 1 x\n"),
            Err(EmbedError::InvalidFloat {
                at: Position::Line(2),
                ..
            })
        ));
        assert!(matches!(
            text("3 1\na 1\nb 2\n"),
            Err(EmbedError::CountMismatch {
                expected: 3,
                found: 2
            })
        ));
        assert!(matches!(
            text("1 1\na 1\nb 2\nc 3\n"),
            Err(EmbedError::CountMismatch {
                expected: 1,
                found: 3
            })
        ));
    }

    #[test]
    fn case_fold_fallback() {
        let s = text("1 1\nhiv 1\n").unwrap();
        assert!(s.get("HIV").is_none());
        let (matched, v) = s.lookup("HIV").unwrap();
        assert_eq!(matched, "hiv");
        assert_eq!(v, &[1.0]);
        assert!(s.lookup("aids").is_none());
    }

    #[test]
    fn write_text_single() {
        let s = VectorStore::from_entries(SourceKind::Static, [("a", [0.0])]).unwrap();
        let mut out = Vec::new();
        write_word2vec_text(&s, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 1\na 0\n");
    }

    #[test]
    fn empty_store_is_rejected() {
        let empty: Vec<(&str, Vec<f64>)> = Vec::new();
        assert!(matches!(
            VectorStore::from_entries(SourceKind::Static, empty),
            Err(EmbedError::Empty)
        ));
        assert!(matches!(
            VectorStoreBuilder::new(2, SourceKind::Static).finish(),
            Err(EmbedError::Empty)
        ));
    }

    #[test]
    fn binary_basic_with_and_without_newlines() {
        for newline in [true, false] {
            let bytes = binary_of(&[("x", &[1.0, -1.0]), ("y", &[0.5, 2.0])], 2, newline);
            let s = read_word2vec_binary(&bytes[..]).unwrap();
            assert_eq!(s.get("x").unwrap(), &[1.0, -1.0]);
            assert_eq!(s.get("y").unwrap(), &[0.5, 2.0]);
        }
    }

    #[test]
    fn binary_truncated_names_token() {
        let mut bytes = binary_of(&[("x", &[1.0, -1.0]), ("heart", &[0.5, 2.0])], 2, true);
        bytes.truncate(bytes.len() - 4);
        let err = read_word2vec_binary(&bytes[..]).unwrap_err();
        match &err {
            EmbedError::Truncated { record, token } => {
                assert_eq!(*record, 2);
                assert_eq!(token, "heart");
            }
            other => panic!("unexpected {other}"),
        }
        assert!(err.to_string().contains("heart"));
    }

    #[test]
    fn binary_count_mismatch_and_trailing() {
        let mut bytes = binary_of(&[("x", &[1.0])], 1, true);
        bytes[0] = b'2';
        assert!(matches!(
            read_word2vec_binary(&bytes[..]),
            Err(EmbedError::CountMismatch {
                expected: 2,
                found: 1
            })
        ));
        let mut bytes = binary_of(&[("x", &[1.0])], 1, true);
        bytes.extend_from_slice(b"extra ");
        assert!(matches!(
            read_word2vec_binary(&bytes[..]),
            Err(EmbedError::TrailingData { records: 1 })
        ));
    }

    #[test]
    fn binary_non_finite() {
        let bytes = binary_of(&[("x", &[f32::NAN])], 1, true);
        assert!(matches!(
            read_word2vec_binary(&bytes[..]),
            Err(EmbedError::NonFinite {
                at: Position::Record(1),
                ..
            })
        ));
    }

    #[test]
    fn contextual_single_record() {
        let line = r#"{"term":"anxiety","category":"mental_disorders","template_id":"md","vector":[0.1,0.2],"pooling":"term_tokens_mean"}"#;
        let s = read_contextual_ndjson(line.as_bytes()).unwrap();
        assert_eq!(s.dimension(), 2);
        assert_eq!(s.source_kind(), SourceKind::Contextual);
        assert_eq!(s.get("anxiety").unwrap(), &[0.1, 0.2]);
        assert_eq!(s.metadata()["pooling"], "term_tokens_mean");
        assert_eq!(s.metadata()["template_ids"], "md");
    }

    #[test]
    fn contextual_duplicate_and_schema_errors() {
        let rec = r#"{"term":"anxiety","category":"mental_disorders","template_id":"md","vector":[0.1,0.2],"pooling":"term_tokens_mean"}"#;
        let dup = format!("{rec}\n{rec}\n");
        let err = read_contextual_ndjson(dup.as_bytes()).unwrap_err();
        assert!(matches!(err, EmbedError::Schema { line: 2, .. }));
        assert!(err.to_string().contains("duplicate"));

        let bad_pooling =
            r#"{"term":"a","category":"c","template_id":"t","vector":[1],"pooling":"max"}"#;
        assert!(matches!(
            read_contextual_ndjson(bad_pooling.as_bytes()),
            Err(EmbedError::Schema { line: 1, .. })
        ));
        let missing = r#"{"term":"a","category":"c","vector":[1],"pooling":"sentence_mean"}"#;
        assert!(matches!(
            read_contextual_ndjson(missing.as_bytes()),
            Err(EmbedError::Schema { line: 1, .. })
        ));
        let empty_term = r#"{"term":"","category":"c","template_id":"t","vector":[1],"pooling":"sentence_mean"}"#;
        assert!(matches!(
            read_contextual_ndjson(empty_term.as_bytes()),
            Err(EmbedError::Schema { line: 1, .. })
        ));
        let ragged = concat!(
            r#"{"term":"a","category":"c","template_id":"t","vector":[1,2],"pooling":"sentence_mean"}"#,
            "\n",
            r#"{"term":"b","category":"c","template_id":"t","vector":[1],"pooling":"sentence_mean"}"#
        );
        assert!(matches!(
            read_contextual_ndjson(ragged.as_bytes()),
            Err(EmbedError::DimensionMismatch {
                at: Position::Line(2),
                expected: 2,
                found: 1
            })
        ));
        assert!(matches!(
            read_contextual_ndjson(&b""[..]),
            Err(EmbedError::Empty)
        ));
    }

    #[test]
    fn merge_stores() {
        let a = VectorStore::from_entries(SourceKind::Static, [("a", [1.0])]).unwrap();
        let b = VectorStore::from_entries(SourceKind::Static, [("b", [2.0])]).unwrap();
        let m = a.clone().merge(b).unwrap();
        assert_eq!(m.tokens(), &["a".to_string(), "b".to_string()]);
        assert!(matches!(
            a.clone().merge(a),
            Err(EmbedError::DuplicateToken { .. })
        ));
        let c = VectorStore::from_entries(SourceKind::Static, [("c", [2.0, 1.0])]).unwrap();
        let a = VectorStore::from_entries(SourceKind::Static, [("a", [1.0])]).unwrap();
        assert!(matches!(a.merge(c), Err(EmbedError::Merge(_))));
    }
}
