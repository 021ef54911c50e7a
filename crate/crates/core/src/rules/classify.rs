use std::collections::{BTreeMap, BTreeSet};

use super::{infer, InferError, InferenceResult, Rule};
use crate::diff::{DiffGroup, DiffSet, DiffState};
use crate::kb::{lookup_key, KnowledgeBase};
use crate::ontology::{Assertion, FactStore};
use crate::snapshot::{RegistryPath, RegistrySnapshot};

/// Concepts a comparison unit can be classified into.
pub const ACTIVITY_CONCEPTS: [&str; 5] = [
    "SoftwareInstallationActivityObject",
    "SoftwareUninstallationActivityObject",
    "SoftwareConfigurationActivityObject",
    "UserFileActivityObject",
    "UserFolderActivityObject",
];

/// One comparison between two consecutive snapshots.
#[derive(Debug, Clone, Copy)]
pub struct Comparison<'a> {
    pub older: &'a RegistrySnapshot,
    pub newer: &'a RegistrySnapshot,
    pub diff: &'a DiffSet,
    pub groups: &'a [DiffGroup],
}

/// Individuals materialised for one group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupIndividuals {
    pub group: String,
    /// Individual standing for the common key.
    pub common_key: String,
    pub units: Vec<(DiffState, String)>,
}

#[derive(Debug, Clone)]
pub struct Classification {
    /// Knowledge-base facts plus the materialised comparison results.
    pub facts: FactStore,
    pub inference: InferenceResult,
    /// Per comparison, per group.
    pub groups: Vec<Vec<GroupIndividuals>>,
}

impl Classification {
    /// Activity concepts `individual` was asserted or derived into.
    pub fn activities_of(&self, individual: &str) -> BTreeSet<&'static str> {
        ACTIVITY_CONCEPTS
            .into_iter()
            .filter(|c| {
                let a = Assertion::concept(individual, *c);
                self.facts.contains(&a) || self.inference.derived.contains(&a)
            })
            .collect()
    }

    /// Objects of `property` on `subject` across input and derived facts.
    pub fn related(&self, subject: &str, property: &str) -> BTreeSet<String> {
        self.facts
            .assertions()
            .chain(&self.inference.derived)
            .filter_map(|a| match a {
                Assertion::Object {
                    subject: s,
                    property: p,
                    object,
                } if s == subject && p == property => Some(object.clone()),
                _ => None,
            })
            .collect()
    }
}

struct Materializer<'k> {
    kb: &'k KnowledgeBase,
    facts: FactStore,
    hives: BTreeMap<String, String>,
}

impl Materializer<'_> {
    fn hive(&mut self, snapshot: &RegistrySnapshot) -> String {
        let label = snapshot.label();
        if let Some(h) = self.hives.get(&label) {
            return h.clone();
        }
        let name = format!("hive_{}", self.hives.len() + 1);
        self.facts.insert(Assertion::concept(&name, "RegistryHiveObject"));
        self.facts
            .insert(Assertion::data(&name, "hasFileName", &snapshot.hive_name));
        self.facts.insert(Assertion::object("RPCompare", "takesAsInput", &name));
        self.hives.insert(label, name.clone());
        name
    }

    fn comparison(&mut self, pair: usize, c: &Comparison) -> Vec<GroupIndividuals> {
        let older_hive = self.hive(c.older);
        let newer_hive = self.hive(c.newer);

        // Every path that needs a key individual, with its latest timestamp
        // and the hive it was last seen in.
        let mut paths: BTreeMap<RegistryPath, (String, String)> = BTreeMap::new();
        for g in c.groups {
            for r in &g.records {
                let hive = if r.state == DiffState::Removed {
                    &older_hive
                } else {
                    &newer_hive
                };
                paths.insert(r.path.clone(), (r.latest_timestamp().to_string(), hive.clone()));
            }
        }
        for g in c.groups {
            if paths.contains_key(&g.common_key) {
                continue;
            }
            let seen = match c.newer.key_at(&g.common_key) {
                Some(k) => Some((k.last_modified, &newer_hive)),
                None => c.older.key_at(&g.common_key).map(|k| (k.last_modified, &older_hive)),
            };
            if let Some((ts, hive)) = seen {
                paths.insert(g.common_key.clone(), (ts.to_string(), hive.clone()));
            } else {
                paths.insert(g.common_key.clone(), (String::new(), newer_hive.clone()));
            }
        }

        let mut names: BTreeMap<RegistryPath, String> = BTreeMap::new();
        for (n, path) in paths.keys().enumerate() {
            names.insert(path.clone(), format!("key_{pair}_{}", n + 1));
        }
        for (path, (ts, hive)) in &paths {
            let key = &names[path];
            self.facts.insert(Assertion::concept(key, "RegistryKeyObject"));
            self.facts
                .insert(Assertion::data(key, "hasName", path.name().unwrap_or_default()));
            if !ts.is_empty() {
                self.facts.insert(Assertion::data(key, "hasLastModified", ts));
            }
            self.facts.insert(Assertion::data(key, "hasKeyPath", path.to_string()));
            self.facts.insert(Assertion::object(key, "isIn", hive));
            if let Some(a) = lookup_key(&self.kb.annotations, path) {
                for concept in &a.evidence_concepts {
                    self.facts.insert(Assertion::concept(key, concept));
                }
                if let Some(soft) = &a.owning_software {
                    self.facts.insert(Assertion::object(key, "belongsToSoftware", soft));
                }
            }
            if let Some(parent) = path.parent().and_then(|p| names.get(&p)) {
                self.facts.insert(Assertion::object(key, "hasParentKey", parent));
            }
        }

        let mut out = Vec::new();
        for (gi, g) in c.groups.iter().enumerate() {
            let group = format!("group_{pair}_{}", gi + 1);
            let common_key = names[&g.common_key].clone();
            self.facts.insert(Assertion::concept(&group, "RPCGroupObject"));
            self.facts
                .insert(Assertion::object(&group, "hasCommonKey", &common_key));
            self.facts
                .insert(Assertion::object("RPCompare", "returnsOutput", &group));
            self.facts
                .insert(Assertion::data(&group, "hasOlderSnapshot", &c.diff.older));
            self.facts
                .insert(Assertion::data(&group, "hasNewerSnapshot", &c.diff.newer));
            let mut units = Vec::new();
            for state in DiffState::ALL {
                let members: Vec<&RegistryPath> =
                    g.records.iter().filter(|r| r.state == state).map(|r| &r.path).collect();
                if members.is_empty() {
                    continue;
                }
                let unit = format!("unit_{pair}_{}_{}", gi + 1, state.as_str().to_lowercase());
                self.facts.insert(Assertion::concept(&unit, "RPCUnitObject"));
                self.facts
                    .insert(Assertion::data(&unit, "hasComparisonState", state.as_str()));
                self.facts.insert(Assertion::object(&group, "containsUnit", &unit));
                for p in members {
                    self.facts.insert(Assertion::object(&unit, "contains", &names[p]));
                }
                units.push((state, unit));
            }
            out.push(GroupIndividuals {
                group,
                common_key,
                units,
            });
        }
        out
    }
}

/// Turns grouped comparison results into facts and runs `rules` over them
/// together with the knowledge base. Comparisons are numbered from 1 in the
/// individual names; ungrouped records are left out.
pub fn classify_activity(
    kb: &KnowledgeBase,
    comparisons: &[Comparison],
    rules: &[Rule],
) -> Result<Classification, InferError> {
    let mut m = Materializer {
        kb,
        facts: kb.facts.clone(),
        hives: BTreeMap::new(),
    };
    let groups = comparisons
        .iter()
        .enumerate()
        .map(|(i, c)| m.comparison(i + 1, c))
        .collect();
    let inference = infer(&kb.graph, &m.facts, rules)?;
    Ok(Classification {
        facts: m.facts,
        inference,
        groups,
    })
}
