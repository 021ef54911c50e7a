use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Assertion, ConceptGraph, FactStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    DisjointnessViolation,
    CardinalityViolation,
    UndeclaredTerm,
    /// Never produced for a built [`ConceptGraph`], which rejects cycles.
    IsaCycle,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}: {}", self.kind, self.subject, self.detail)
    }
}

/// Checks the fact store against the terminology.
///
/// An individual belongs to every ancestor of each concept it is asserted
/// into. Disjointness is reported once per individual and declared pair;
/// cardinality once per individual and restriction, counting distinct
/// asserted values. The result is sorted.
pub fn check_consistency(graph: &ConceptGraph, facts: &FactStore) -> Vec<Violation> {
    let mut out = BTreeSet::new();
    for a in facts.assertions() {
        if let Err(e) = a.check(graph) {
            out.insert(Violation {
                kind: ViolationKind::UndeclaredTerm,
                subject: a.subject().to_string(),
                detail: format!("{e} in `{a}`"),
            });
        }
    }

    let typed: BTreeSet<&str> = facts
        .assertions()
        .filter_map(|a| match a {
            Assertion::Concept { individual, .. } => Some(individual.as_str()),
            _ => None,
        })
        .collect();

    for ind in typed {
        let closure: BTreeSet<&str> = facts
            .asserted_concepts(ind)
            .flat_map(|c| graph.ancestors(c).iter().map(String::as_str))
            .collect();
        for (x, y) in graph.disjoint_pairs() {
            if closure.contains(x) && closure.contains(y) {
                out.insert(Violation {
                    kind: ViolationKind::DisjointnessViolation,
                    subject: ind.to_string(),
                    detail: format!("member of disjoint concepts {x} and {y}"),
                });
            }
        }
        for r in graph.restrictions() {
            if !closure.contains(r.concept.as_str()) {
                continue;
            }
            let count = facts.values_of(ind, &r.property).collect::<BTreeSet<_>>().len();
            if !r.bound.admits(count) {
                out.insert(Violation {
                    kind: ViolationKind::CardinalityViolation,
                    subject: ind.to_string(),
                    detail: format!("{} {} required on {}, found {count}", r.property, r.bound, r.concept),
                });
            }
        }
    }
    out.into_iter().collect()
}
