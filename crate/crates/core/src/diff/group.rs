use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DiffRecord, DiffSet};
use crate::kb::{grouping_key_for, lookup_key, GroupingKeySpec, KeyAnnotation};
use crate::snapshot::RegistryPath;

/// Records sharing a common grouping key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffGroup {
    #[serde(rename = "commonKey")]
    pub common_key: RegistryPath,
    pub records: Vec<DiffRecord>,
    #[serde(rename = "owningSoftware")]
    pub owning_software: Option<String>,
}

/// Assigns each record to the longest matching grouping key. Groups come
/// back in canonical order of their common key; records that match no spec
/// are returned separately. Owning software is left empty, see
/// [`annotate_groups`].
pub fn group_diffs(diff: &DiffSet, specs: &[GroupingKeySpec]) -> (Vec<DiffGroup>, Vec<DiffRecord>) {
    let mut groups: BTreeMap<RegistryPath, Vec<DiffRecord>> = BTreeMap::new();
    let mut ungrouped = Vec::new();
    for r in &diff.records {
        match grouping_key_for(specs, &r.path) {
            Some(key) => groups.entry(key).or_default().push(r.clone()),
            None => ungrouped.push(r.clone()),
        }
    }
    let groups = groups
        .into_iter()
        .map(|(common_key, records)| DiffGroup {
            common_key,
            records,
            owning_software: None,
        })
        .collect();
    (groups, ungrouped)
}

/// Fills in each group's owning software from the annotation of its common
/// key (directly or through an annotated ancestor).
pub fn annotate_groups(groups: &mut [DiffGroup], annotations: &[KeyAnnotation]) {
    for g in groups {
        g.owning_software = lookup_key(annotations, &g.common_key).and_then(|a| a.owning_software);
    }
}
