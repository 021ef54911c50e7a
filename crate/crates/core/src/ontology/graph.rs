use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{OntologyError, Origin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyKind {
    Object,
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Min(u32),
    Max(u32),
    Exactly(u32),
}

impl Bound {
    pub fn admits(self, count: usize) -> bool {
        let count = count as u64;
        match self {
            Bound::Min(n) => count >= u64::from(n),
            Bound::Max(n) => count <= u64::from(n),
            Bound::Exactly(n) => count == u64::from(n),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Min(n) => write!(f, "min {n}"),
            Bound::Max(n) => write!(f, "max {n}"),
            Bound::Exactly(n) => write!(f, "exactly {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Restriction {
    pub concept: String,
    pub property: String,
    pub bound: Bound,
}

/// The terminology: concepts, is-a edges, disjointness and restrictions.
///
/// Immutable once built. Reflexive-transitive closures are precomputed, so
/// subsumption queries are set lookups.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptGraph {
    concepts: BTreeSet<String>,
    parents: BTreeMap<String, BTreeSet<String>>,
    disjoint: BTreeSet<(String, String)>,
    properties: BTreeMap<String, PropertyKind>,
    restrictions: BTreeSet<Restriction>,
    ancestors: BTreeMap<String, BTreeSet<String>>,
    descendants: BTreeMap<String, BTreeSet<String>>,
}

impl ConceptGraph {
    pub fn builder() -> ConceptGraphBuilder {
        ConceptGraphBuilder::default()
    }

    pub fn has_concept(&self, c: &str) -> bool {
        self.concepts.contains(c)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.concepts.iter().map(String::as_str)
    }

    /// Direct is-a edges as (child, parent).
    pub fn isa_edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parents
            .iter()
            .flat_map(|(c, ps)| ps.iter().map(move |p| (c.as_str(), p.as_str())))
    }

    pub fn parents_of(&self, c: &str) -> impl Iterator<Item = &str> {
        self.parents.get(c).into_iter().flatten().map(String::as_str)
    }

    pub fn disjoint_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.disjoint.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn property_kind(&self, p: &str) -> Option<PropertyKind> {
        self.properties.get(p).copied()
    }

    pub fn properties(&self) -> impl Iterator<Item = (&str, PropertyKind)> {
        self.properties.iter().map(|(p, k)| (p.as_str(), *k))
    }

    pub fn restrictions(&self) -> impl Iterator<Item = &Restriction> {
        self.restrictions.iter()
    }

    fn require(&self, c: &str) -> Result<(), OntologyError> {
        if self.has_concept(c) {
            Ok(())
        } else {
            Err(OntologyError::UndeclaredTerm {
                term: c.to_string(),
                origin: None,
            })
        }
    }

    /// True iff `descendant` reaches `ancestor` through zero or more is-a
    /// edges.
    pub fn subsumes(&self, ancestor: &str, descendant: &str) -> Result<bool, OntologyError> {
        self.require(ancestor)?;
        self.require(descendant)?;
        Ok(self.subsumes_unchecked(ancestor, descendant))
    }

    pub(crate) fn subsumes_unchecked(&self, ancestor: &str, descendant: &str) -> bool {
        self.ancestors.get(descendant).is_some_and(|a| a.contains(ancestor))
    }

    /// Reflexive ancestor set of a declared concept (empty if undeclared).
    pub fn ancestors(&self, c: &str) -> &BTreeSet<String> {
        static EMPTY: BTreeSet<String> = BTreeSet::new();
        self.ancestors.get(c).unwrap_or(&EMPTY)
    }

    /// Reflexive descendant set of a declared concept (empty if undeclared).
    pub fn descendants(&self, c: &str) -> &BTreeSet<String> {
        static EMPTY: BTreeSet<String> = BTreeSet::new();
        self.descendants.get(c).unwrap_or(&EMPTY)
    }

    /// Disjointness is inherited downwards from every declared pair.
    pub fn are_disjoint(&self, a: &str, b: &str) -> bool {
        let (aa, ba) = (self.ancestors(a), self.ancestors(b));
        self.disjoint
            .iter()
            .any(|(x, y)| (aa.contains(x) && ba.contains(y)) || (aa.contains(y) && ba.contains(x)))
    }
}

/// Accumulates declarations; [`ConceptGraphBuilder::build`] validates them all
/// at once so loading is atomic.
#[derive(Debug, Clone, Default)]
pub struct ConceptGraphBuilder {
    concepts: BTreeMap<String, Option<Origin>>,
    isa: Vec<(String, String, Option<Origin>)>,
    disjoint: Vec<(String, String, Option<Origin>)>,
    properties: Vec<(String, PropertyKind, Option<Origin>)>,
    restrictions: Vec<(Restriction, Option<Origin>)>,
}

impl ConceptGraphBuilder {
    pub fn concept(&mut self, c: impl Into<String>) -> &mut Self {
        self.concept_at(c, None)
    }

    pub fn isa(&mut self, child: impl Into<String>, parent: impl Into<String>) -> &mut Self {
        self.isa_at(child, parent, None)
    }

    pub fn disjoint(&mut self, a: impl Into<String>, b: impl Into<String>) -> &mut Self {
        self.disjoint_at(a, b, None)
    }

    pub fn property(&mut self, p: impl Into<String>, kind: PropertyKind) -> &mut Self {
        self.property_at(p, kind, None)
    }

    pub fn restrict(&mut self, c: impl Into<String>, p: impl Into<String>, bound: Bound) -> &mut Self {
        self.restrict_at(c, p, bound, None)
    }

    pub(crate) fn concept_at(&mut self, c: impl Into<String>, origin: Option<Origin>) -> &mut Self {
        self.concepts.entry(c.into()).or_insert(origin);
        self
    }

    pub(crate) fn isa_at(
        &mut self,
        child: impl Into<String>,
        parent: impl Into<String>,
        origin: Option<Origin>,
    ) -> &mut Self {
        self.isa.push((child.into(), parent.into(), origin));
        self
    }

    pub(crate) fn disjoint_at(
        &mut self,
        a: impl Into<String>,
        b: impl Into<String>,
        origin: Option<Origin>,
    ) -> &mut Self {
        self.disjoint.push((a.into(), b.into(), origin));
        self
    }

    pub(crate) fn property_at(
        &mut self,
        p: impl Into<String>,
        kind: PropertyKind,
        origin: Option<Origin>,
    ) -> &mut Self {
        self.properties.push((p.into(), kind, origin));
        self
    }

    pub(crate) fn restrict_at(
        &mut self,
        c: impl Into<String>,
        p: impl Into<String>,
        bound: Bound,
        origin: Option<Origin>,
    ) -> &mut Self {
        self.restrictions.push((
            Restriction {
                concept: c.into(),
                property: p.into(),
                bound,
            },
            origin,
        ));
        self
    }

    pub fn build(&self) -> Result<ConceptGraph, OntologyError> {
        let undeclared = |term: &str, origin: &Option<Origin>| OntologyError::UndeclaredTerm {
            term: term.to_string(),
            origin: origin.clone(),
        };

        let mut properties = BTreeMap::new();
        for (p, kind, origin) in &self.properties {
            if let Some(prev) = properties.insert(p.clone(), *kind) {
                if prev != *kind {
                    return Err(OntologyError::ConflictingProperty {
                        property: p.clone(),
                        origin: origin.clone(),
                    });
                }
            }
        }

        let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (child, parent, origin) in &self.isa {
            for c in [child, parent] {
                if !self.concepts.contains_key(c) {
                    return Err(undeclared(c, origin));
                }
            }
            parents.entry(child.clone()).or_default().insert(parent.clone());
        }
        for (a, b, origin) in &self.disjoint {
            for c in [a, b] {
                if !self.concepts.contains_key(c) {
                    return Err(undeclared(c, origin));
                }
            }
        }
        for (r, origin) in &self.restrictions {
            if !self.concepts.contains_key(&r.concept) {
                return Err(undeclared(&r.concept, origin));
            }
            if !properties.contains_key(&r.property) {
                return Err(undeclared(&r.property, origin));
            }
        }

        if let Some(cycle) = find_cycle(self.concepts.keys(), &parents) {
            return Err(OntologyError::IsaCycle { cycle });
        }

        let mut ancestors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for c in self.concepts.keys() {
            collect_ancestors(c, &parents, &mut ancestors);
        }
        let mut descendants: BTreeMap<String, BTreeSet<String>> =
            self.concepts.keys().map(|c| (c.clone(), BTreeSet::new())).collect();
        for (c, anc) in &ancestors {
            for a in anc {
                descendants.get_mut(a).expect("declared").insert(c.clone());
            }
        }

        let mut disjoint = BTreeSet::new();
        for (a, b, origin) in &self.disjoint {
            let invalid = |reason: String| OntologyError::InvalidDisjointness {
                a: a.clone(),
                b: b.clone(),
                reason,
                origin: origin.clone(),
            };
            if a == b {
                return Err(invalid("a concept cannot be disjoint with itself".into()));
            }
            if ancestors[a].contains(b) || ancestors[b].contains(a) {
                return Err(invalid("one concept subsumes the other".into()));
            }
            if let Some(shared) = descendants[a].intersection(&descendants[b]).next() {
                return Err(invalid(format!("{shared} is a descendant of both")));
            }
            let pair = if a < b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            disjoint.insert(pair);
        }

        Ok(ConceptGraph {
            concepts: self.concepts.keys().cloned().collect(),
            parents,
            disjoint,
            properties,
            restrictions: self.restrictions.iter().map(|(r, _)| r.clone()).collect(),
            ancestors,
            descendants,
        })
    }
}

fn collect_ancestors<'a>(
    c: &'a String,
    parents: &'a BTreeMap<String, BTreeSet<String>>,
    memo: &mut BTreeMap<String, BTreeSet<String>>,
) {
    if memo.contains_key(c) {
        return;
    }
    let mut set = BTreeSet::from([c.clone()]);
    for p in parents.get(c).into_iter().flatten() {
        collect_ancestors(p, parents, memo);
        set.extend(memo[p].iter().cloned());
    }
    memo.insert(c.clone(), set);
}

/// Depth-first search with colouring; returns the concepts on one cycle.
fn find_cycle<'a>(
    concepts: impl Iterator<Item = &'a String>,
    parents: &BTreeMap<String, BTreeSet<String>>,
) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        c: &String,
        parents: &BTreeMap<String, BTreeSet<String>>,
        marks: &mut BTreeMap<String, Mark>,
        stack: &mut Vec<String>,
    ) -> Option<Vec<String>> {
        match marks.get(c) {
            Some(Mark::Done) => return None,
            Some(Mark::Active) => {
                let start = stack.iter().position(|s| s == c).expect("on stack");
                let mut cycle = stack[start..].to_vec();
                cycle.push(c.clone());
                return Some(cycle);
            }
            None => {}
        }
        marks.insert(c.clone(), Mark::Active);
        stack.push(c.clone());
        for p in parents.get(c).into_iter().flatten() {
            if let Some(cycle) = visit(p, parents, marks, stack) {
                return Some(cycle);
            }
        }
        stack.pop();
        marks.insert(c.clone(), Mark::Done);
        None
    }

    let mut marks = BTreeMap::new();
    for c in concepts {
        if let Some(cycle) = visit(c, parents, &mut marks, &mut Vec::new()) {
            return Some(cycle);
        }
    }
    None
}
