//! Registry snapshot diffing with ontology-driven interpretation.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`snapshot`] parses and validates hive snapshots (REGSNAP text).
//! 2. [`diff`] compares chronologically ordered snapshots and groups the
//!    changed keys under common grouping keys.
//! 3. [`ontology`] holds the concept taxonomy and the fact store.
//! 4. [`kb`] ships the forensic knowledge base: concepts, key annotations,
//!    grouping conventions and the classification rules.
//! 5. [`rules`] runs Horn rules to a fixpoint over the facts and classifies
//!    the changes into activity concepts.

pub mod diff;
pub mod kb;
pub mod ontology;
pub mod rules;
pub mod snapshot;

pub use snapshot::{
    key_at, parse_snapshot, serialize_snapshot, validate_axioms, RegistryKey, RegistryPath, RegistrySnapshot,
    RegistryValue, Timestamp, ValueType,
};
