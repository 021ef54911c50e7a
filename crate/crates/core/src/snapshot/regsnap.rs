//! The REGSNAP v1 text format.
//!
//! ```text
//! REGSNAP 1
//! hive SOFTWARE
//! captured 2009-03-02T14:16:38Z          (optional)
//! key Software\Microsoft<TAB>2009-03-02T14:16:38Z
//! val MRUListEx<TAB>REG_BINARY<TAB>AAAAAP////8=
//! ```
//!
//! `val` lines attach to the closest preceding `key` line. A key whose
//! ancestors have no line of their own gets them created with its timestamp;
//! a later explicit line for such an ancestor replaces that timestamp.
//! Blank lines and lines starting with `#` are ignored on input and never
//! written.

use std::collections::HashSet;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use super::{
    cmp_names, fold_case, illegal_name_char, RegistryPath, RegistrySnapshot, RegistryValue, Timestamp, ValueType,
};

pub const FORMAT_HEADER: &str = "REGSNAP 1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotError {
    #[error("line {line}: input is not valid UTF-8")]
    NotUtf8 { line: usize },
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: duplicate key path {path}")]
    DuplicateKeyPath { line: usize, path: String },
    #[error("line {line}: duplicate value name {name:?}")]
    DuplicateValueName { line: usize, name: String },
    #[error("line {line}: bad timestamp {text:?}")]
    BadTimestamp { line: usize, text: String },
    #[error("line {line}: bad base64 data: {reason}")]
    BadBase64 { line: usize, reason: String },
    #[error("line {line}: illegal character {ch:?} in name {name:?}")]
    IllegalCharacterInName { line: usize, name: String, ch: char },
    #[error("line {line}: empty key name")]
    EmptyKeyName { line: usize },
    #[error("line {line}: unknown value type {text:?}")]
    UnknownValueType { line: usize, text: String },
}

impl SnapshotError {
    pub fn line(&self) -> usize {
        match self {
            SnapshotError::NotUtf8 { line }
            | SnapshotError::MalformedHeader { line, .. }
            | SnapshotError::MalformedLine { line, .. }
            | SnapshotError::DuplicateKeyPath { line, .. }
            | SnapshotError::DuplicateValueName { line, .. }
            | SnapshotError::BadTimestamp { line, .. }
            | SnapshotError::BadBase64 { line, .. }
            | SnapshotError::IllegalCharacterInName { line, .. }
            | SnapshotError::EmptyKeyName { line }
            | SnapshotError::UnknownValueType { line, .. } => *line,
        }
    }
}

pub fn parse_snapshot(input: &[u8]) -> Result<RegistrySnapshot, SnapshotError> {
    let text = std::str::from_utf8(input).map_err(|e| SnapshotError::NotUtf8 {
        line: 1 + input[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count(),
    })?;
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l)).peekable();

    match lines.next() {
        Some((_, FORMAT_HEADER)) => {}
        Some((n, other)) => {
            return Err(SnapshotError::MalformedHeader {
                line: n,
                reason: format!("expected {FORMAT_HEADER:?}, found {other:?}"),
            })
        }
        None => unreachable!("split yields at least one item"),
    }
    let hive_name = match lines.next() {
        Some((n, l)) => {
            let name = l.strip_prefix("hive ").ok_or_else(|| SnapshotError::MalformedHeader {
                line: n,
                reason: "expected `hive <name>`".into(),
            })?;
            if name.is_empty() || name.chars().any(char::is_control) {
                return Err(SnapshotError::MalformedHeader {
                    line: n,
                    reason: format!("invalid hive name {name:?}"),
                });
            }
            name.to_string()
        }
        None => {
            return Err(SnapshotError::MalformedHeader {
                line: 2,
                reason: "missing `hive` line".into(),
            })
        }
    };

    let mut snapshot = RegistrySnapshot::new(hive_name);
    if let Some((n, l)) = lines.peek().copied() {
        if let Some(rest) = l.strip_prefix("captured ") {
            snapshot.captured_at = Some(parse_ts(n, rest)?);
            lines.next();
        }
    }

    let mut explicit: HashSet<RegistryPath> = HashSet::new();
    let mut current: Option<(RegistryPath, HashSet<String>)> = None;

    for (n, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("key ") {
            let (path_text, ts_text) = split_fields::<2>(n, rest)?.into();
            let path = parse_key_path(n, path_text)?;
            let ts = parse_ts(n, ts_text)?;
            if !explicit.insert(path.clone()) {
                return Err(SnapshotError::DuplicateKeyPath {
                    line: n,
                    path: path.to_string(),
                });
            }
            snapshot.upsert_key(&path, ts);
            current = Some((path, HashSet::new()));
        } else if let Some(rest) = line.strip_prefix("val ") {
            let [name, type_text, data_text] = split_fields::<3>(n, rest)?;
            let Some((path, seen)) = current.as_mut() else {
                return Err(SnapshotError::MalformedLine {
                    line: n,
                    reason: "`val` line before any `key` line".into(),
                });
            };
            if let Some(ch) = illegal_name_char(name) {
                return Err(SnapshotError::IllegalCharacterInName {
                    line: n,
                    name: name.to_string(),
                    ch,
                });
            }
            if !seen.insert(fold_case(name)) {
                return Err(SnapshotError::DuplicateValueName {
                    line: n,
                    name: name.to_string(),
                });
            }
            let value_type: ValueType = type_text.parse().map_err(|_| SnapshotError::UnknownValueType {
                line: n,
                text: type_text.to_string(),
            })?;
            let data = STANDARD.decode(data_text).map_err(|e| SnapshotError::BadBase64 {
                line: n,
                reason: e.to_string(),
            })?;
            let key = key_at_mut(&mut snapshot, path).expect("current key was just inserted");
            key.values.push(RegistryValue::new(name, value_type, data));
        } else {
            let word = line.split([' ', '\t']).next().unwrap_or_default();
            return Err(SnapshotError::MalformedLine {
                line: n,
                reason: format!("unknown directive {word:?}"),
            });
        }
    }

    snapshot.canonicalize();
    Ok(snapshot)
}

/// Canonical REGSNAP text. Structurally equal snapshots give identical bytes.
pub fn serialize_snapshot(snapshot: &RegistrySnapshot) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(FORMAT_HEADER);
    out.push('\n');
    out.push_str("hive ");
    out.push_str(&snapshot.hive_name);
    out.push('\n');
    if let Some(at) = snapshot.captured_at {
        out.push_str(&format!("captured {at}\n"));
    }
    for (path, key) in snapshot.keys() {
        out.push_str(&format!("key {}\t{}\n", path.to_relative_string(), key.last_modified));
        let mut values: Vec<&RegistryValue> = key.values.iter().collect();
        values.sort_by(|a, b| cmp_names(&a.name, &b.name));
        for v in values {
            out.push_str(&format!(
                "val {}\t{}\t{}\n",
                v.name,
                v.value_type,
                STANDARD.encode(&v.data)
            ));
        }
    }
    out.into_bytes()
}

fn split_fields<const N: usize>(line: usize, rest: &str) -> Result<[&str; N], SnapshotError> {
    let fields: Vec<&str> = rest.split('\t').collect();
    fields.try_into().map_err(|f: Vec<&str>| SnapshotError::MalformedLine {
        line,
        reason: format!("expected {N} tab-separated fields, found {}", f.len()),
    })
}

fn parse_ts(line: usize, text: &str) -> Result<Timestamp, SnapshotError> {
    Timestamp::parse(text).map_err(|_| SnapshotError::BadTimestamp {
        line,
        text: text.to_string(),
    })
}

fn parse_key_path(line: usize, text: &str) -> Result<RegistryPath, SnapshotError> {
    let text = text.strip_prefix('\\').unwrap_or(text);
    if text.is_empty() {
        return Err(SnapshotError::EmptyKeyName { line });
    }
    let mut path = RegistryPath::root();
    for seg in text.split('\\') {
        if seg.is_empty() {
            return Err(SnapshotError::EmptyKeyName { line });
        }
        if let Some(ch) = seg.chars().find(|c| c.is_control()) {
            return Err(SnapshotError::IllegalCharacterInName {
                line,
                name: seg.to_string(),
                ch,
            });
        }
        path = path.try_child(seg).expect("segment already checked");
    }
    Ok(path)
}

fn key_at_mut<'a>(snapshot: &'a mut RegistrySnapshot, path: &RegistryPath) -> Option<&'a mut super::RegistryKey> {
    let mut node = &mut snapshot.root;
    for seg in path.segments() {
        node = node.subkey_mut(seg)?;
    }
    Some(node)
}
