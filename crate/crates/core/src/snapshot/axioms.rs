use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{fold_case, illegal_name_char, RegistryKey, RegistrySnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxiomViolationKind {
    EmptyKeyName,
    IllegalCharacterInName,
    DuplicateSiblingName,
    DuplicateValueName,
}

/// A structural defect in a snapshot tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub kind: AxiomViolationKind,
    /// Backslash-joined path of the offending key (or of the parent, for
    /// duplicate siblings).
    pub path: String,
    pub name: String,
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at \\{}: {:?}", self.kind, self.path, self.name)
    }
}

/// Checks every key below the root against the registry-key axioms: a
/// non-empty legal name, unique sibling names and unique value names. The
/// one-timestamp axiom holds by construction of [`RegistryKey`].
///
/// The root is the hive container and is exempt.
pub fn validate_axioms(snapshot: &RegistrySnapshot) -> Vec<AxiomViolation> {
    let mut out = Vec::new();
    check_children(&snapshot.root, "", &mut out);
    out
}

fn join(parent: &str, name: &str) -> String {
    if parent.is_empty() {
        name.to_string()
    } else {
        format!("{parent}\\{name}")
    }
}

fn check_children(key: &RegistryKey, path: &str, out: &mut Vec<AxiomViolation>) {
    let mut seen: HashMap<String, usize> = HashMap::new();
    for child in &key.subkeys {
        let count = seen.entry(fold_case(&child.name)).or_default();
        *count += 1;
        if *count == 2 {
            out.push(AxiomViolation {
                kind: AxiomViolationKind::DuplicateSiblingName,
                path: path.to_string(),
                name: child.name.clone(),
            });
        }
    }
    for child in &key.subkeys {
        let child_path = join(path, &child.name);
        if child.name.is_empty() {
            out.push(AxiomViolation {
                kind: AxiomViolationKind::EmptyKeyName,
                path: child_path.clone(),
                name: String::new(),
            });
        } else if illegal_name_char(&child.name).is_some() {
            out.push(AxiomViolation {
                kind: AxiomViolationKind::IllegalCharacterInName,
                path: child_path.clone(),
                name: child.name.clone(),
            });
        }
        check_values(child, &child_path, out);
        check_children(child, &child_path, out);
    }
}

fn check_values(key: &RegistryKey, path: &str, out: &mut Vec<AxiomViolation>) {
    let mut seen: HashMap<String, usize> = HashMap::new();
    for v in &key.values {
        if illegal_name_char(&v.name).is_some() {
            out.push(AxiomViolation {
                kind: AxiomViolationKind::IllegalCharacterInName,
                path: path.to_string(),
                name: v.name.clone(),
            });
        }
        let count = seen.entry(fold_case(&v.name)).or_default();
        *count += 1;
        if *count == 2 {
            out.push(AxiomViolation {
                kind: AxiomViolationKind::DuplicateValueName,
                path: path.to_string(),
                name: v.name.clone(),
            });
        }
    }
}
