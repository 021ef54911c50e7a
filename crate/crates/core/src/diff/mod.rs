//! Snapshot comparison.
//!
//! Every key is compared on its own: a key is `Modified` when its own value
//! set differs, whatever happened to its subkeys. Keys present on one side
//! only are `Added` or `Removed`, one record per key of the subtree.

mod group;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::snapshot::{fold_case, names_equal, RegistryKey, RegistryPath, RegistrySnapshot, RegistryValue, Timestamp};

pub use group::{annotate_groups, group_diffs, DiffGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DiffState {
    Added,
    Removed,
    Modified,
}

impl DiffState {
    pub const ALL: [DiffState; 3] = [DiffState::Added, DiffState::Removed, DiffState::Modified];

    pub fn as_str(self) -> &'static str {
        match self {
            DiffState::Added => "Added",
            DiffState::Removed => "Removed",
            DiffState::Modified => "Modified",
        }
    }

    /// Prefix used in the plain-text listing.
    pub fn label(self) -> &'static str {
        match self {
            DiffState::Added => "ADDED: ",
            DiffState::Removed => "REM: ",
            DiffState::Modified => "MODIFIED: ",
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            DiffState::Added => DiffState::Removed,
            DiffState::Removed => DiffState::Added,
            DiffState::Modified => DiffState::Modified,
        }
    }
}

impl fmt::Display for DiffState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueChange {
    pub name: String,
    pub older: RegistryValue,
    pub newer: RegistryValue,
}

/// Value-level difference of one key. Each list is sorted by case-folded name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueDelta {
    pub added: Vec<RegistryValue>,
    pub removed: Vec<RegistryValue>,
    pub changed: Vec<ValueChange>,
}

impl ValueDelta {
    pub fn between(older: &[RegistryValue], newer: &[RegistryValue]) -> Self {
        let index = |vs: &[RegistryValue]| -> BTreeMap<String, RegistryValue> {
            let mut m = BTreeMap::new();
            for v in vs {
                m.entry(fold_case(&v.name)).or_insert_with(|| v.clone());
            }
            m
        };
        let (old, new) = (index(older), index(newer));
        let mut delta = ValueDelta::default();
        for (k, o) in &old {
            match new.get(k) {
                None => delta.removed.push(o.clone()),
                Some(n) if !o.same_content(n) => delta.changed.push(ValueChange {
                    name: n.name.clone(),
                    older: o.clone(),
                    newer: n.clone(),
                }),
                Some(_) => {}
            }
        }
        for (k, n) in &new {
            if !old.contains_key(k) {
                delta.added.push(n.clone());
            }
        }
        delta
    }

    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.changed.is_empty()
    }

    pub fn reversed(&self) -> Self {
        ValueDelta {
            added: self.removed.clone(),
            removed: self.added.clone(),
            changed: self
                .changed
                .iter()
                .map(|c| ValueChange {
                    name: c.older.name.clone(),
                    older: c.newer.clone(),
                    newer: c.older.clone(),
                })
                .collect(),
        }
    }
}

/// One compared key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffRecord {
    pub path: RegistryPath,
    pub state: DiffState,
    #[serde(rename = "valueDelta")]
    pub value_delta: ValueDelta,
    #[serde(rename = "olderTs")]
    pub older_timestamp: Option<Timestamp>,
    #[serde(rename = "newerTs")]
    pub newer_timestamp: Option<Timestamp>,
}

impl DiffRecord {
    /// The record as seen from a comparison with the arguments swapped.
    pub fn reversed(&self) -> Self {
        DiffRecord {
            path: self.path.clone(),
            state: self.state.reversed(),
            value_delta: self.value_delta.reversed(),
            older_timestamp: self.newer_timestamp,
            newer_timestamp: self.older_timestamp,
        }
    }

    /// The timestamp of the most recent version of the key.
    pub fn latest_timestamp(&self) -> Timestamp {
        self.newer_timestamp
            .or(self.older_timestamp)
            .expect("a record has at least one side")
    }

    pub fn text_line(&self) -> String {
        format!("{}{}", self.state.label(), self.path)
    }
}

/// All records of one comparison, in canonical path order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffSet {
    pub older: String,
    pub newer: String,
    pub records: Vec<DiffRecord>,
}

impl DiffSet {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn relabel(mut self, older: impl Into<String>, newer: impl Into<String>) -> Self {
        self.older = older.into();
        self.newer = newer.into();
        self
    }

    pub fn count(&self, state: DiffState) -> usize {
        self.records.iter().filter(|r| r.state == state).count()
    }

    /// One `ADDED: `/`MODIFIED: `/`REM: ` line per record.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.text_line());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiffOptions {
    /// Also report keys whose timestamp changed while their values did not.
    pub touch_as_modified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("keys {older:?} and {newer:?} do not share a path")]
    PathMismatch { older: String, newer: String },
    #[error("cannot compare hive {older:?} with hive {newer:?}")]
    HiveMismatch { older: String, newer: String },
    #[error("snapshot captured at {older} is not older than the one captured at {newer}")]
    ChronologyError { older: Timestamp, newer: Timestamp },
    #[error("a chain needs at least two snapshots, got {0}")]
    TooFewSnapshots(usize),
}

/// Compares two versions of the key at `path`.
///
/// Returns `Modified` when the own value sets differ (names compared
/// case-insensitively, type and bytes exactly). Subkeys are not looked at.
pub fn compare_keys(
    path: &RegistryPath,
    older: &RegistryKey,
    newer: &RegistryKey,
    options: DiffOptions,
) -> Result<Option<DiffRecord>, DiffError> {
    let expected = path.name().unwrap_or("");
    if !names_equal(&older.name, expected) || !names_equal(&newer.name, expected) {
        return Err(DiffError::PathMismatch {
            older: older.name.clone(),
            newer: newer.name.clone(),
        });
    }
    let delta = ValueDelta::between(&older.values, &newer.values);
    let touched = options.touch_as_modified && older.last_modified != newer.last_modified;
    if delta.is_empty() && !touched {
        return Ok(None);
    }
    Ok(Some(DiffRecord {
        path: path.clone(),
        state: DiffState::Modified,
        value_delta: delta,
        older_timestamp: Some(older.last_modified),
        newer_timestamp: Some(newer.last_modified),
    }))
}

fn check_pair(older: &RegistrySnapshot, newer: &RegistrySnapshot) -> Result<(), DiffError> {
    if !names_equal(&older.hive_name, &newer.hive_name) {
        return Err(DiffError::HiveMismatch {
            older: older.hive_name.clone(),
            newer: newer.hive_name.clone(),
        });
    }
    if let (Some(a), Some(b)) = (older.captured_at, newer.captured_at) {
        if a > b {
            return Err(DiffError::ChronologyError { older: a, newer: b });
        }
    }
    Ok(())
}

/// Compares two snapshots of the same hive.
pub fn compare_snapshots(
    older: &RegistrySnapshot,
    newer: &RegistrySnapshot,
    options: DiffOptions,
) -> Result<DiffSet, DiffError> {
    check_pair(older, newer)?;
    let mut records = Vec::new();
    walk_children(
        &RegistryPath::root(),
        Some(&older.root),
        Some(&newer.root),
        options,
        &mut records,
    )?;
    records.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(DiffSet {
        older: older.label(),
        newer: newer.label(),
        records,
    })
}

fn walk_children(
    path: &RegistryPath,
    older: Option<&RegistryKey>,
    newer: Option<&RegistryKey>,
    options: DiffOptions,
    out: &mut Vec<DiffRecord>,
) -> Result<(), DiffError> {
    let mut pairs: BTreeMap<String, (Option<&RegistryKey>, Option<&RegistryKey>)> = BTreeMap::new();
    for k in older.into_iter().flat_map(|k| &k.subkeys) {
        pairs.entry(fold_case(&k.name)).or_default().0.get_or_insert(k);
    }
    for k in newer.into_iter().flat_map(|k| &k.subkeys) {
        pairs.entry(fold_case(&k.name)).or_default().1.get_or_insert(k);
    }
    for (o, n) in pairs.into_values() {
        let name = n.or(o).map(|k| k.name.clone()).unwrap_or_default();
        // Unnamed or illegal keys have no path; validate_axioms reports them.
        let Ok(child) = path.try_child(name) else {
            continue;
        };
        match (o, n) {
            (Some(o), Some(n)) => {
                if let Some(r) = compare_keys(&child, o, n, options)? {
                    out.push(r);
                }
            }
            (Some(o), None) => out.push(DiffRecord {
                path: child.clone(),
                state: DiffState::Removed,
                value_delta: ValueDelta::between(&o.values, &[]),
                older_timestamp: Some(o.last_modified),
                newer_timestamp: None,
            }),
            (None, Some(n)) => out.push(DiffRecord {
                path: child.clone(),
                state: DiffState::Added,
                value_delta: ValueDelta::between(&[], &n.values),
                older_timestamp: None,
                newer_timestamp: Some(n.last_modified),
            }),
            (None, None) => unreachable!(),
        }
        walk_children(&child, o, n, options, out)?;
    }
    Ok(())
}

/// Compares each consecutive pair of a chronologically ordered series.
pub fn compare_chain(snapshots: &[RegistrySnapshot], options: DiffOptions) -> Result<Vec<DiffSet>, DiffError> {
    if snapshots.len() < 2 {
        return Err(DiffError::TooFewSnapshots(snapshots.len()));
    }
    for w in snapshots.windows(2) {
        check_pair(&w[0], &w[1])?;
    }
    snapshots
        .windows(2)
        .map(|w| compare_snapshots(&w[0], &w[1], options))
        .collect()
}
