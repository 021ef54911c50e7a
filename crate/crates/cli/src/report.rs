use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use regdialog::diff::{annotate_groups, compare_chain, group_diffs, DiffGroup, DiffOptions, DiffRecord, DiffState};
use regdialog::kb::KnowledgeBase;
use regdialog::ontology::{check_consistency, Assertion, Violation};
use regdialog::rules::{classify_activity, Comparison, Rule};
use regdialog::{RegistryPath, RegistrySnapshot};

use crate::{Failure, SCHEMA};

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub case_id: String,
    pub tool: Tool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated: Option<String>,
    pub inputs: Vec<String>,
    pub comparisons: Vec<ComparisonReport>,
    pub derived: Vec<DerivedFact>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub older: String,
    pub newer: String,
    pub groups: Vec<GroupReport>,
    pub ungrouped: Vec<DiffRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub individual: String,
    pub common_key: RegistryPath,
    pub software: Option<String>,
    pub evidence_of: Vec<String>,
    pub records: Vec<DiffRecord>,
    pub units: Vec<UnitReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitReport {
    pub individual: String,
    pub state: DiffState,
    pub activities: Vec<String>,
    /// Derived object properties of the unit, by property.
    pub relations: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerivedFact {
    pub fact: String,
    pub rule: String,
}

/// Runs the whole pipeline over chronologically ordered snapshots.
pub fn analyze(
    snapshots: &[RegistrySnapshot],
    kb: &KnowledgeBase,
    rules: &[Rule],
    options: DiffOptions,
    case_id: &str,
) -> Result<Report, Failure> {
    let chain = compare_chain(snapshots, options).map_err(Failure::input)?;
    let grouped: Vec<(Vec<DiffGroup>, Vec<DiffRecord>)> = chain
        .iter()
        .map(|d| {
            let (mut groups, ungrouped) = group_diffs(d, &kb.grouping);
            annotate_groups(&mut groups, &kb.annotations);
            (groups, ungrouped)
        })
        .collect();
    let comparisons: Vec<Comparison> = chain
        .iter()
        .zip(&grouped)
        .enumerate()
        .map(|(i, (diff, (groups, _)))| Comparison {
            older: &snapshots[i],
            newer: &snapshots[i + 1],
            diff,
            groups,
        })
        .collect();
    let c = classify_activity(kb, &comparisons, rules).map_err(Failure::input)?;
    let violations = check_consistency(&kb.graph, &c.inference.closure(&c.facts));

    let derived_relations = |subject: &str| {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for a in &c.inference.derived {
            if let Assertion::Object {
                subject: s,
                property,
                object,
            } = a
            {
                if s == subject {
                    out.entry(property.clone()).or_default().push(object.clone());
                }
            }
        }
        out
    };

    let mut out = Vec::new();
    for ((diff, (groups, ungrouped)), individuals) in chain.iter().zip(&grouped).zip(&c.groups) {
        let groups = groups
            .iter()
            .zip(individuals)
            .map(|(g, ind)| GroupReport {
                individual: ind.group.clone(),
                common_key: g.common_key.clone(),
                software: g.owning_software.clone(),
                evidence_of: c.related(&ind.group, "isEvidenceOfSoftware").into_iter().collect(),
                records: g.records.clone(),
                units: ind
                    .units
                    .iter()
                    .map(|(state, u)| UnitReport {
                        individual: u.clone(),
                        state: *state,
                        activities: c.activities_of(u).into_iter().map(String::from).collect(),
                        relations: derived_relations(u),
                    })
                    .collect(),
            })
            .collect();
        out.push(ComparisonReport {
            older: diff.older.clone(),
            newer: diff.newer.clone(),
            groups,
            ungrouped: ungrouped.clone(),
        });
    }

    Ok(Report {
        schema: SCHEMA,
        case_id: case_id.to_string(),
        tool: Tool {
            name: "regdialog",
            version: env!("CARGO_PKG_VERSION"),
        },
        generated: None,
        inputs: snapshots.iter().map(RegistrySnapshot::label).collect(),
        comparisons: out,
        derived: c
            .inference
            .provenance
            .iter()
            .map(|(a, p)| DerivedFact {
                fact: a.to_string(),
                rule: p.rule.clone(),
            })
            .collect(),
        violations,
    })
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case: {}", self.case_id);
        if let Some(at) = &self.generated {
            let _ = writeln!(s, "generated: {at}");
        }
        for c in &self.comparisons {
            let _ = writeln!(s, "\n== {} vs {} ==", c.older, c.newer);
            for g in &c.groups {
                let _ = write!(s, "group {}", g.common_key);
                if let Some(sw) = &g.software {
                    let _ = write!(s, " [{sw}]");
                }
                s.push('\n');
                for r in &g.records {
                    let _ = writeln!(s, "  {}", r.text_line());
                }
                for u in &g.units {
                    let acts = if u.activities.is_empty() {
                        "-".to_string()
                    } else {
                        u.activities.join(", ")
                    };
                    let _ = write!(s, "  => {} {}: {acts}", u.individual, u.state);
                    for (p, objs) in &u.relations {
                        let _ = write!(s, " ({p} {})", objs.join(" "));
                    }
                    s.push('\n');
                }
            }
            if !c.ungrouped.is_empty() {
                s.push_str("ungrouped\n");
                for r in &c.ungrouped {
                    let _ = writeln!(s, "  {}", r.text_line());
                }
            }
        }
        let _ = writeln!(s, "\nderived facts: {}", self.derived.len());
        if self.violations.is_empty() {
            s.push_str("violations: none\n");
        } else {
            for v in &self.violations {
                let _ = writeln!(s, "violation: {v}");
            }
        }
        s
    }
}
