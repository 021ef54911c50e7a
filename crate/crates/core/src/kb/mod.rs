//! The shipped forensic knowledge base.
//!
//! Terminology and seed individuals are ONTO-TXT files; registry key
//! annotations and grouping conventions live in an annotations file:
//!
//! ```text
//! anno <path>\t<hive>\t<Concept,Concept>\t<software|->\t<description>
//! group prefix <path>\t<depth>
//! group path <path>
//! ```
//!
//! Without any `group` lines the stock conventions apply.

mod grouping;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::ontology::{is_identifier, Assertion, ConceptGraph, FactStore, OntologyError, OntologyLoader};
use crate::snapshot::RegistryPath;

pub use grouping::{default_grouping_specs, grouping_key_for, GroupingKeySpec};

pub const SEED_TBOX: &str = include_str!("../../data/dialog.onto");
pub const SEED_INSTANCES: &str = include_str!("../../data/instances.onto");
pub const SEED_ANNOTATIONS: &str = include_str!("../../data/registry_keys.anno");

/// Concepts every annotation concept must fall under.
pub const ANNOTATION_ROOTS: [&str; 2] = ["EvidenceObject", "RegistryKeyObject"];

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("{path}: concept {concept} is not an evidence or registry key concept")]
    BadConcept { path: String, concept: String },
    #[error("{path}: unknown software individual {software}")]
    UnknownSoftware { path: String, software: String },
    #[error("{path} is annotated twice")]
    DuplicateAnnotation { path: String },
    #[error("invalid grouping spec: {0}")]
    InvalidGrouping(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}: no ontology files found")]
    Empty(String),
}

/// What the knowledge base knows about one registry key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyAnnotation {
    pub path: RegistryPath,
    pub hive: String,
    pub evidence_concepts: BTreeSet<String>,
    pub owning_software: Option<String>,
    pub description: String,
    /// Set when the entry was found on an ancestor of the queried path.
    #[serde(default)]
    pub inherited: bool,
}

/// Exact match (case-insensitive, root alias ignored), otherwise the nearest
/// annotated ancestor. An inherited entry keeps the owning software and
/// drops the evidence concepts.
pub fn lookup_key(annotations: &[KeyAnnotation], path: &RegistryPath) -> Option<KeyAnnotation> {
    if let Some(a) = annotations.iter().find(|a| a.path.same_key_as(path)) {
        return Some(a.clone());
    }
    let parent = annotations
        .iter()
        .filter(|a| a.path.len() < path.len() && a.path.is_prefix_of(path))
        .max_by_key(|a| a.path.len())?;
    Some(KeyAnnotation {
        evidence_concepts: BTreeSet::new(),
        inherited: true,
        ..parent.clone()
    })
}

/// Individual name used for the knowledge-base entry of `path`.
pub fn annotation_individual(path: &RegistryPath) -> String {
    let mut name = String::from("kb");
    for seg in path.segments() {
        name.push('_');
        name.extend(seg.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }));
    }
    name
}

/// Parses an annotations file. Concept and software names are checked later,
/// against the loaded ontology.
pub fn parse_annotations(source: &str, text: &str) -> Result<(Vec<KeyAnnotation>, Vec<GroupingKeySpec>), KbError> {
    let mut annotations = Vec::new();
    let mut specs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fail = |message: String| KbError::Parse {
            file: source.to_string(),
            line: i + 1,
            message,
        };
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_path = |s: &str| -> Result<RegistryPath, KbError> {
            let p = RegistryPath::parse(s).map_err(|e| fail(e.to_string()))?;
            if p.is_empty() {
                return Err(fail("empty path".into()));
            }
            Ok(p)
        };
        if let Some(rest) = line.strip_prefix("anno ") {
            let fields: Vec<&str> = rest.splitn(5, '\t').collect();
            let [path, hive, concepts, software, description] = fields[..] else {
                return Err(fail("anno needs five tab-separated fields".into()));
            };
            let evidence_concepts: BTreeSet<String> = concepts
                .split(',')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(String::from)
                .collect();
            if let Some(bad) = evidence_concepts.iter().find(|c| !is_identifier(c)) {
                return Err(fail(format!("invalid concept name {bad:?}")));
            }
            let owning_software = match software.trim() {
                "-" | "" => None,
                s if is_identifier(s) => Some(s.to_string()),
                s => return Err(fail(format!("invalid software name {s:?}"))),
            };
            annotations.push(KeyAnnotation {
                path: parse_path(path)?,
                hive: hive.to_string(),
                evidence_concepts,
                owning_software,
                description: description.to_string(),
                inherited: false,
            });
        } else if let Some(rest) = line.strip_prefix("group prefix ") {
            let (path, depth) = rest
                .split_once('\t')
                .ok_or_else(|| fail("group prefix needs <path>\\t<depth>".into()))?;
            let depth: usize = depth
                .trim()
                .parse()
                .map_err(|_| fail(format!("invalid depth {depth:?}")))?;
            if depth == 0 {
                return Err(fail("depth must be at least 1".into()));
            }
            specs.push(GroupingKeySpec::prefix(parse_path(path)?, depth));
        } else if let Some(rest) = line.strip_prefix("group path ") {
            specs.push(GroupingKeySpec::explicit(parse_path(rest.trim_end())?));
        } else {
            return Err(fail("expected anno, group prefix or group path".into()));
        }
    }
    Ok((annotations, specs))
}

/// Terminology, facts, key annotations and grouping conventions.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub graph: ConceptGraph,
    pub facts: FactStore,
    pub annotations: Vec<KeyAnnotation>,
    pub grouping: Vec<GroupingKeySpec>,
}

static SEED: LazyLock<KnowledgeBase> =
    LazyLock::new(|| KbSources::seed().load().expect("shipped knowledge base is valid"));

impl KnowledgeBase {
    pub fn seed() -> Self {
        SEED.clone()
    }

    /// Builds a knowledge base from named ONTO-TXT and annotation sources.
    pub fn from_sources(onto: &[(&str, &str)], anno: &[(&str, &str)]) -> Result<Self, KbError> {
        let mut loader = OntologyLoader::new();
        for (name, text) in onto {
            loader.add_source(name, text.as_bytes())?;
        }
        let (graph, mut facts) = loader.finish()?;

        let mut annotations: Vec<KeyAnnotation> = Vec::new();
        let mut grouping = Vec::new();
        for (name, text) in anno {
            let (a, g) = parse_annotations(name, text)?;
            annotations.extend(a);
            grouping.extend(g);
        }
        if grouping.is_empty() {
            grouping = default_grouping_specs();
        }
        for (i, spec) in grouping.iter().enumerate() {
            if let GroupingKeySpec::ExplicitPath { path } = spec {
                if grouping[..i]
                    .iter()
                    .any(|s| matches!(s, GroupingKeySpec::ExplicitPath { path: p } if p == path))
                {
                    return Err(KbError::InvalidGrouping(format!("{path} listed twice")));
                }
            }
        }

        for (i, a) in annotations.iter().enumerate() {
            if annotations[..i].iter().any(|b| b.path.same_key_as(&a.path)) {
                return Err(KbError::DuplicateAnnotation {
                    path: a.path.to_string(),
                });
            }
            for c in &a.evidence_concepts {
                let ok = graph.has_concept(c) && ANNOTATION_ROOTS.iter().any(|r| graph.subsumes_unchecked(r, c));
                if !ok {
                    return Err(KbError::BadConcept {
                        path: a.path.to_string(),
                        concept: c.clone(),
                    });
                }
            }
            if let Some(s) = &a.owning_software {
                if !facts.has_individual(s) {
                    return Err(KbError::UnknownSoftware {
                        path: a.path.to_string(),
                        software: s.clone(),
                    });
                }
            }
        }
        for a in &annotations {
            for f in annotation_facts(a) {
                facts.assert_fact(&graph, f)?;
            }
        }
        Ok(Self {
            graph,
            facts,
            annotations,
            grouping,
        })
    }

    /// Loads every `*.onto` and `*.anno` file in `dir`, in name order.
    pub fn load_dir(dir: &Path) -> Result<Self, KbError> {
        let src = KbSources::read_dir(dir)?;
        Self::from_sources(&src.onto_refs(), &src.anno_refs())
    }

    pub fn lookup(&self, path: &RegistryPath) -> Option<KeyAnnotation> {
        lookup_key(&self.annotations, path)
    }

    pub fn grouping_key_for(&self, path: &RegistryPath) -> Option<RegistryPath> {
        grouping_key_for(&self.grouping, path)
    }
}

/// Named source texts of a knowledge base, before loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KbSources {
    pub onto: Vec<(String, String)>,
    pub anno: Vec<(String, String)>,
}

impl KbSources {
    pub fn seed() -> Self {
        let own = |v: &[(&str, &str)]| v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        Self {
            onto: own(&[("dialog.onto", SEED_TBOX), ("instances.onto", SEED_INSTANCES)]),
            anno: own(&[("registry_keys.anno", SEED_ANNOTATIONS)]),
        }
    }

    /// Every `*.onto` and `*.anno` file in `dir`, in name order.
    pub fn read_dir(dir: &Path) -> Result<Self, KbError> {
        let io = |path: &Path, e: std::io::Error| KbError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let mut out = Self::default();
        for f in files {
            let target = match f.extension().and_then(|e| e.to_str()) {
                Some("onto") => &mut out.onto,
                Some("anno") => &mut out.anno,
                _ => continue,
            };
            let text = std::fs::read_to_string(&f).map_err(|e| io(&f, e))?;
            let name = f.file_name().unwrap_or_default().to_string_lossy().into_owned();
            target.push((name, text));
        }
        if out.onto.is_empty() {
            return Err(KbError::Empty(dir.display().to_string()));
        }
        Ok(out)
    }

    pub fn onto_refs(&self) -> Vec<(&str, &str)> {
        self.onto.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect()
    }

    pub fn anno_refs(&self) -> Vec<(&str, &str)> {
        self.anno.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect()
    }

    pub fn load(&self) -> Result<KnowledgeBase, KbError> {
        KnowledgeBase::from_sources(&self.onto_refs(), &self.anno_refs())
    }
}

/// Facts recorded for one annotation. The entry describes a key in general,
/// not a captured instance with a timestamp, so it is not itself asserted
/// as a `RegistryKeyObject`.
fn annotation_facts(a: &KeyAnnotation) -> Vec<Assertion> {
    let ind = annotation_individual(&a.path);
    let mut out: Vec<Assertion> = a
        .evidence_concepts
        .iter()
        .filter(|c| c.as_str() != "RegistryKeyObject")
        .map(|c| Assertion::concept(&ind, c))
        .collect();
    out.push(Assertion::data(&ind, "hasKeyPath", a.path.hive_relative().to_string()));
    if let Some(s) = &a.owning_software {
        out.push(Assertion::object(&ind, "belongsToSoftware", s));
    }
    out
}

/// The shipped knowledge base as its four parts.
pub fn seed_knowledge_base() -> (ConceptGraph, FactStore, Vec<KeyAnnotation>, Vec<GroupingKeySpec>) {
    let kb = KnowledgeBase::seed();
    (kb.graph, kb.facts, kb.annotations, kb.grouping)
}
