//! Registry snapshot model.
//!
//! A [`RegistrySnapshot`] is one hive captured at one moment: a tree of
//! named, timestamped keys holding typed values. Snapshots are immutable once
//! parsed and are the only input the diff engine needs.

mod axioms;
mod path;
mod regsnap;
mod timestamp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use axioms::{validate_axioms, AxiomViolation, AxiomViolationKind};
pub use path::{cmp_names, fold_case, illegal_name_char, names_equal, PathError, RegistryPath, RootAlias};
pub use regsnap::{parse_snapshot, serialize_snapshot, SnapshotError, FORMAT_HEADER};
pub use timestamp::{Timestamp, TimestampError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValueType {
    #[serde(rename = "REG_SZ")]
    Sz,
    #[serde(rename = "REG_EXPAND_SZ")]
    ExpandSz,
    #[serde(rename = "REG_BINARY")]
    Binary,
    #[serde(rename = "REG_DWORD")]
    Dword,
    #[serde(rename = "REG_QWORD")]
    Qword,
    #[serde(rename = "REG_MULTI_SZ")]
    MultiSz,
}

impl ValueType {
    pub const ALL: [ValueType; 6] = [
        ValueType::Sz,
        ValueType::ExpandSz,
        ValueType::Binary,
        ValueType::Dword,
        ValueType::Qword,
        ValueType::MultiSz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ValueType::Sz => "REG_SZ",
            ValueType::ExpandSz => "REG_EXPAND_SZ",
            ValueType::Binary => "REG_BINARY",
            ValueType::Dword => "REG_DWORD",
            ValueType::Qword => "REG_QWORD",
            ValueType::MultiSz => "REG_MULTI_SZ",
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ValueType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ValueType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown value type {s:?}"))
    }
}

/// A named, typed datum. The data bytes are never interpreted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegistryValue {
    /// Empty for the key's default value.
    pub name: String,
    #[serde(rename = "type")]
    pub value_type: ValueType,
    /// Standard base64 in serialized form.
    #[serde(with = "base64_bytes")]
    pub data: Vec<u8>,
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(data: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(data))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        STANDARD.decode(text).map_err(serde::de::Error::custom)
    }
}

impl RegistryValue {
    pub fn new(name: impl Into<String>, value_type: ValueType, data: impl Into<Vec<u8>>) -> Self {
        Self {
            name: name.into(),
            value_type,
            data: data.into(),
        }
    }

    /// A REG_SZ value holding `text` as UTF-16LE with a terminating NUL,
    /// which is how the registry stores strings.
    pub fn string(name: impl Into<String>, text: &str) -> Self {
        let mut data: Vec<u8> = text.encode_utf16().flat_map(u16::to_le_bytes).collect();
        data.extend_from_slice(&[0, 0]);
        Self::new(name, ValueType::Sz, data)
    }

    pub fn dword(name: impl Into<String>, v: u32) -> Self {
        Self::new(name, ValueType::Dword, v.to_le_bytes().to_vec())
    }

    /// Same name (case-insensitive), type and bytes.
    pub fn same_content(&self, other: &RegistryValue) -> bool {
        self.value_type == other.value_type && self.data == other.data
    }
}

/// A registry key. Exactly one timestamp per key is guaranteed by the type;
/// name and uniqueness constraints are checked by [`validate_axioms`] and by
/// the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryKey {
    pub name: String,
    pub last_modified: Timestamp,
    pub values: Vec<RegistryValue>,
    pub subkeys: Vec<RegistryKey>,
}

impl RegistryKey {
    pub fn new(name: impl Into<String>, last_modified: Timestamp) -> Self {
        Self {
            name: name.into(),
            last_modified,
            values: Vec::new(),
            subkeys: Vec::new(),
        }
    }

    /// The unnamed container at the top of a hive. It is not itself written
    /// to snapshot files, so its name and timestamp are fixed.
    pub fn root() -> Self {
        Self::new("", Timestamp::from_unix(0).expect("epoch"))
    }

    pub fn with_value(mut self, value: RegistryValue) -> Self {
        self.values.push(value);
        self
    }

    pub fn with_subkey(mut self, key: RegistryKey) -> Self {
        self.subkeys.push(key);
        self
    }

    pub fn subkey(&self, name: &str) -> Option<&RegistryKey> {
        self.subkeys.iter().find(|k| names_equal(&k.name, name))
    }

    pub fn subkey_mut(&mut self, name: &str) -> Option<&mut RegistryKey> {
        self.subkeys.iter_mut().find(|k| names_equal(&k.name, name))
    }

    pub fn value(&self, name: &str) -> Option<&RegistryValue> {
        self.values.iter().find(|v| names_equal(&v.name, name))
    }

    /// Sorts subkeys and values by case-folded name, recursively.
    pub fn canonicalize(&mut self) {
        self.values.sort_by(|a, b| cmp_names(&a.name, &b.name));
        self.subkeys.sort_by(|a, b| cmp_names(&a.name, &b.name));
        for k in &mut self.subkeys {
            k.canonicalize();
        }
    }

    /// Number of keys in this subtree, this key included.
    pub fn key_count(&self) -> usize {
        1 + self.subkeys.iter().map(RegistryKey::key_count).sum::<usize>()
    }
}

/// One hive as captured at one point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistrySnapshot {
    pub hive_name: String,
    /// Ordering key between snapshots of the same hive (restore-point time).
    pub captured_at: Option<Timestamp>,
    pub root: RegistryKey,
}

impl RegistrySnapshot {
    pub fn new(hive_name: impl Into<String>) -> Self {
        Self {
            hive_name: hive_name.into(),
            captured_at: None,
            root: RegistryKey::root(),
        }
    }

    pub fn captured(mut self, at: Timestamp) -> Self {
        self.captured_at = Some(at);
        self
    }

    /// Short identifier used to label comparisons.
    pub fn label(&self) -> String {
        match self.captured_at {
            Some(at) => format!("{}@{}", self.hive_name, at),
            None => self.hive_name.clone(),
        }
    }

    /// Inserts (or updates the timestamp of) the key at `path`, creating
    /// missing ancestors with the same timestamp.
    pub fn upsert_key(&mut self, path: &RegistryPath, last_modified: Timestamp) -> &mut RegistryKey {
        let mut node = &mut self.root;
        for seg in path.segments() {
            let idx = match node.subkeys.iter().position(|k| names_equal(&k.name, seg)) {
                Some(i) => i,
                None => {
                    node.subkeys.push(RegistryKey::new(seg.clone(), last_modified));
                    node.subkeys.len() - 1
                }
            };
            node = &mut node.subkeys[idx];
        }
        node.last_modified = last_modified;
        node
    }

    pub fn key_at(&self, path: &RegistryPath) -> Option<&RegistryKey> {
        key_at(self, path)
    }

    /// Every key except the root, with its full path, in canonical
    /// depth-first order.
    pub fn keys(&self) -> Vec<(RegistryPath, &RegistryKey)> {
        let mut out = Vec::new();
        collect_keys(&self.root, &RegistryPath::root(), &mut out);
        out
    }

    pub fn canonicalize(&mut self) {
        self.root.canonicalize();
    }

    /// Equality that ignores sibling and value order.
    pub fn structurally_eq(&self, other: &RegistrySnapshot) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.canonicalize();
        b.canonicalize();
        a == b
    }
}

fn collect_keys<'a>(key: &'a RegistryKey, path: &RegistryPath, out: &mut Vec<(RegistryPath, &'a RegistryKey)>) {
    let mut children: Vec<&RegistryKey> = key.subkeys.iter().collect();
    children.sort_by(|a, b| cmp_names(&a.name, &b.name));
    for child in children {
        let child_path = match path.try_child(child.name.clone()) {
            Ok(p) => p,
            // Unnamed or illegal keys are reported by validate_axioms; they
            // have no addressable path.
            Err(_) => continue,
        };
        out.push((child_path.clone(), child));
        collect_keys(child, &child_path, out);
    }
}

/// The key at `path` (case-insensitive), or `None`. Root aliases are ignored
/// because snapshots are hive-relative.
pub fn key_at<'a>(snapshot: &'a RegistrySnapshot, path: &RegistryPath) -> Option<&'a RegistryKey> {
    let mut node = &snapshot.root;
    for seg in path.segments() {
        node = node.subkey(seg)?;
    }
    Some(node)
}
