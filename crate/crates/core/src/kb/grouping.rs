use std::fmt;

use serde::{Deserialize, Serialize};

use crate::snapshot::RegistryPath;

/// How changed keys are gathered under a common key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GroupingKeySpec {
    /// Any key more than `prefix` deep groups under `prefix` plus its next
    /// `depth` segments. Shallower keys group under themselves.
    PrefixPattern { prefix: RegistryPath, depth: usize },
    /// Everything at or below `path` groups under `path`.
    ExplicitPath { path: RegistryPath },
}

impl GroupingKeySpec {
    pub fn prefix(prefix: RegistryPath, depth: usize) -> Self {
        GroupingKeySpec::PrefixPattern {
            prefix: prefix.hive_relative(),
            depth,
        }
    }

    pub fn explicit(path: RegistryPath) -> Self {
        GroupingKeySpec::ExplicitPath {
            path: path.hive_relative(),
        }
    }

    /// The common key this spec assigns to `path`, if any. Root aliases are
    /// ignored and the result is hive-relative.
    pub fn common_key_for(&self, path: &RegistryPath) -> Option<RegistryPath> {
        match self {
            GroupingKeySpec::PrefixPattern { prefix, depth } => {
                if path.len() > prefix.len() && prefix.is_prefix_of(path) {
                    Some(path.hive_relative().truncate(prefix.len() + depth))
                } else {
                    None
                }
            }
            GroupingKeySpec::ExplicitPath { path: p } => {
                if p.is_prefix_of(path) {
                    Some(path.hive_relative().truncate(p.len()))
                } else {
                    None
                }
            }
        }
    }
}

impl fmt::Display for GroupingKeySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupingKeySpec::PrefixPattern { prefix, depth } => write!(f, "{prefix}\\*{{{depth}}}"),
            GroupingKeySpec::ExplicitPath { path } => write!(f, "{path}"),
        }
    }
}

/// Longest match over all specs. Ties go to the earlier spec.
pub fn grouping_key_for(specs: &[GroupingKeySpec], path: &RegistryPath) -> Option<RegistryPath> {
    let mut best: Option<RegistryPath> = None;
    for spec in specs {
        if let Some(key) = spec.common_key_for(path) {
            if best.as_ref().is_none_or(|b| key.len() > b.len()) {
                best = Some(key);
            }
        }
    }
    best
}

/// The stock conventions: `Software\Manufacturer\Product`, plus the folder
/// view store and the Explorer file-extension settings.
pub fn default_grouping_specs() -> Vec<GroupingKeySpec> {
    let p = |s: &str| RegistryPath::parse(s).expect("static path");
    vec![
        GroupingKeySpec::prefix(p("Software"), 2),
        GroupingKeySpec::explicit(p("Software\\Microsoft\\Windows\\ShellNoRoam")),
        GroupingKeySpec::explicit(p("Software\\Microsoft\\Windows\\CurrentVersion\\Explorer\\FileExts")),
    ]
}
