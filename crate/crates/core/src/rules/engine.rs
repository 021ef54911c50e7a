use std::collections::{BTreeMap, BTreeSet};

use super::{Atom, InferError, Rule, Term};
use crate::ontology::{Assertion, ConceptGraph, FactStore, OntologyError, PropertyKind, Value};

pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

pub type Binding = BTreeMap<String, Value>;

/// Which rule produced an assertion, and with which variable binding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub rule: String,
    pub binding: Binding,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InferenceResult {
    /// Assertions not present in the input store.
    pub derived: BTreeSet<Assertion>,
    /// Evaluation passes, counting the final pass that found nothing new.
    pub iterations: usize,
    pub provenance: BTreeMap<Assertion, Provenance>,
}

impl InferenceResult {
    /// Input facts plus everything derived.
    pub fn closure(&self, facts: &FactStore) -> FactStore {
        let mut out = facts.clone();
        for a in &self.derived {
            out.insert(a.clone());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sort {
    Individual,
    Literal,
}

fn undeclared(rule: &Rule, term: &str) -> InferError {
    InferError::UndeclaredTerm {
        rule: rule.name.clone(),
        source: Box::new(OntologyError::UndeclaredTerm {
            term: term.to_string(),
            origin: None,
        }),
    }
}

/// Vocabulary and sort check: concept arguments and property subjects are
/// individuals, objects follow the property's kind.
fn check_rule(graph: &ConceptGraph, rule: &Rule) -> Result<(), InferError> {
    let mut sorts: BTreeMap<String, Sort> = BTreeMap::new();
    let mut require = |term: &Term, sort: Sort| -> Result<(), InferError> {
        let ill = |what: String| InferError::IllTyped {
            rule: rule.name.clone(),
            message: what,
        };
        match (term, sort) {
            (Term::Var(v), _) => match sorts.insert(v.clone(), sort) {
                Some(prev) if prev != sort => Err(ill(format!("?{v} is used both as an individual and as a literal"))),
                _ => Ok(()),
            },
            (Term::Literal(l), Sort::Individual) => Err(ill(format!("literal {l:?} where an individual is expected"))),
            (Term::Individual(i), Sort::Literal) => Err(ill(format!("individual {i} where a literal is expected"))),
            _ => Ok(()),
        }
    };
    for atom in rule.body.iter().chain(&rule.head) {
        match atom {
            Atom::Concept { concept, term } => {
                if !graph.has_concept(concept) {
                    return Err(undeclared(rule, concept));
                }
                require(term, Sort::Individual)?;
            }
            Atom::Property {
                property,
                subject,
                object,
            } => {
                let kind = graph
                    .property_kind(property)
                    .ok_or_else(|| undeclared(rule, property))?;
                require(subject, Sort::Individual)?;
                require(
                    object,
                    match kind {
                        PropertyKind::Object => Sort::Individual,
                        PropertyKind::Data => Sort::Literal,
                    },
                )?;
            }
            Atom::Builtin { .. } => {}
        }
    }
    Ok(())
}

/// Lookup tables over one state of the fact store.
struct Index<'g> {
    graph: &'g ConceptGraph,
    /// asserted concept -> individuals
    members: BTreeMap<String, BTreeSet<String>>,
    /// property -> (subject, object)
    pairs: BTreeMap<String, Vec<(String, Value)>>,
}

impl<'g> Index<'g> {
    fn new(graph: &'g ConceptGraph, facts: &FactStore) -> Self {
        let mut idx = Index {
            graph,
            members: BTreeMap::new(),
            pairs: BTreeMap::new(),
        };
        for a in facts.assertions() {
            idx.add(a);
        }
        idx
    }

    fn add(&mut self, a: &Assertion) {
        match a {
            Assertion::Concept { individual, concept } => {
                self.members
                    .entry(concept.clone())
                    .or_default()
                    .insert(individual.clone());
            }
            Assertion::Object {
                subject,
                property,
                object,
            } => self
                .pairs
                .entry(property.clone())
                .or_default()
                .push((subject.clone(), Value::Individual(object.clone()))),
            Assertion::Data {
                subject,
                property,
                literal,
            } => self
                .pairs
                .entry(property.clone())
                .or_default()
                .push((subject.clone(), Value::Literal(literal.clone()))),
        }
    }

    /// Individuals asserted into `concept` or any concept below it.
    fn instances(&self, concept: &str) -> BTreeSet<&str> {
        self.graph
            .descendants(concept)
            .iter()
            .filter_map(|d| self.members.get(d))
            .flatten()
            .map(String::as_str)
            .collect()
    }

    fn is_instance(&self, individual: &str, concept: &str) -> bool {
        self.graph
            .descendants(concept)
            .iter()
            .any(|d| self.members.get(d).is_some_and(|m| m.contains(individual)))
    }
}

fn constant(term: &Term) -> Option<Value> {
    match term {
        Term::Var(_) => None,
        Term::Literal(l) => Some(Value::Literal(l.clone())),
        Term::Individual(i) => Some(Value::Individual(i.clone())),
    }
}

fn resolve(term: &Term, binding: &Binding) -> Option<Value> {
    match term {
        Term::Var(v) => binding.get(v).cloned(),
        other => constant(other),
    }
}

/// Tries to unify `term` with `value`, extending `binding`.
fn unify(term: &Term, value: &Value, binding: &mut Binding) -> bool {
    match term {
        Term::Var(v) => match binding.get(v) {
            Some(bound) => bound == value,
            None => {
                binding.insert(v.clone(), value.clone());
                true
            }
        },
        other => constant(other).as_ref() == Some(value),
    }
}

/// Body atoms reordered so each builtin runs once its variables are bound.
fn plan(rule: &Rule) -> Vec<&Atom> {
    fn flush<'r>(bound: &BTreeSet<&str>, pending: &mut Vec<&'r Atom>, out: &mut Vec<&'r Atom>) {
        pending.retain(|b| {
            let ready = b.vars().all(|v| bound.contains(v));
            if ready {
                out.push(b);
            }
            !ready
        });
    }
    let mut out: Vec<&Atom> = Vec::new();
    let mut bound: BTreeSet<&str> = BTreeSet::new();
    let mut pending: Vec<&Atom> = rule.body.iter().filter(|a| a.is_builtin()).collect();
    flush(&bound, &mut pending, &mut out);
    for atom in rule.body.iter().filter(|a| !a.is_builtin()) {
        out.push(atom);
        bound.extend(atom.vars());
        flush(&bound, &mut pending, &mut out);
    }
    // Unsafe rules are rejected at parse time; keep any leftovers last.
    out.extend(pending);
    out
}

fn solve(atoms: &[&Atom], idx: &Index, binding: &mut Binding, out: &mut Vec<Binding>) {
    let Some((atom, rest)) = atoms.split_first() else {
        out.push(binding.clone());
        return;
    };
    match atom {
        Atom::Concept { concept, term } => match resolve(term, binding) {
            Some(Value::Individual(i)) => {
                if idx.is_instance(&i, concept) {
                    solve(rest, idx, binding, out);
                }
            }
            Some(Value::Literal(_)) => {}
            None => {
                let var = term.as_var().expect("unbound term is a variable");
                for i in idx.instances(concept) {
                    binding.insert(var.to_string(), Value::Individual(i.to_string()));
                    solve(rest, idx, binding, out);
                }
                binding.remove(var);
            }
        },
        Atom::Property {
            property,
            subject,
            object,
        } => {
            let Some(pairs) = idx.pairs.get(property) else {
                return;
            };
            for (s, o) in pairs {
                let mut b = binding.clone();
                if unify(subject, &Value::Individual(s.clone()), &mut b) && unify(object, o, &mut b) {
                    solve(rest, idx, &mut b, out);
                }
            }
        }
        Atom::Builtin { builtin, args } => {
            let values: Option<Vec<Value>> = args.iter().map(|a| resolve(a, binding)).collect();
            if let Some(values) = values {
                let strs: Vec<&str> = values.iter().map(Value::as_str).collect();
                if builtin.eval(&strs) {
                    solve(rest, idx, binding, out);
                }
            }
        }
    }
}

fn instantiate(graph: &ConceptGraph, atom: &Atom, binding: &Binding) -> Option<Assertion> {
    let ind = |t: &Term| match resolve(t, binding)? {
        Value::Individual(i) => Some(i),
        Value::Literal(_) => None,
    };
    match atom {
        Atom::Concept { concept, term } => Some(Assertion::concept(ind(term)?, concept)),
        Atom::Property {
            property,
            subject,
            object,
        } => {
            let s = ind(subject)?;
            match (graph.property_kind(property)?, resolve(object, binding)?) {
                (PropertyKind::Object, Value::Individual(o)) => Some(Assertion::object(s, property, o)),
                (PropertyKind::Data, Value::Literal(l)) => Some(Assertion::data(s, property, l)),
                _ => None,
            }
        }
        Atom::Builtin { .. } => None,
    }
}

/// The head assertions `rule` produces under `binding`.
pub fn replay(graph: &ConceptGraph, rule: &Rule, binding: &Binding) -> Vec<Assertion> {
    rule.head
        .iter()
        .filter_map(|a| instantiate(graph, a, binding))
        .collect()
}

/// Every binding that satisfies the body of `rule` over `facts`.
pub fn solutions(graph: &ConceptGraph, facts: &FactStore, rule: &Rule) -> Vec<Binding> {
    let idx = Index::new(graph, facts);
    let mut out = Vec::new();
    solve(&plan(rule), &idx, &mut Binding::new(), &mut out);
    out
}

/// Forward chaining to the least fixpoint with the default pass limit.
pub fn infer(graph: &ConceptGraph, facts: &FactStore, rules: &[Rule]) -> Result<InferenceResult, InferError> {
    infer_with(graph, facts, rules, DEFAULT_MAX_ITERATIONS)
}

/// Naive evaluation: each pass applies every rule (in name order) to the
/// facts known at the start of the pass, then adds what it found.
pub fn infer_with(
    graph: &ConceptGraph,
    facts: &FactStore,
    rules: &[Rule],
    max_iterations: usize,
) -> Result<InferenceResult, InferError> {
    for r in rules {
        check_rule(graph, r)?;
    }
    let mut ordered: Vec<&Rule> = rules.iter().collect();
    ordered.sort_by(|a, b| a.name.cmp(&b.name));
    let plans: Vec<Vec<&Atom>> = ordered.iter().map(|r| plan(r)).collect();

    let mut result = InferenceResult::default();
    let mut idx = Index::new(graph, facts);
    let mut known: BTreeSet<Assertion> = facts.assertions().cloned().collect();
    loop {
        if result.iterations == max_iterations {
            return Err(InferError::IterationLimitExceeded(max_iterations));
        }
        result.iterations += 1;
        let mut fresh: BTreeMap<Assertion, Provenance> = BTreeMap::new();
        for (rule, plan) in ordered.iter().zip(&plans) {
            let mut bindings = Vec::new();
            solve(plan, &idx, &mut Binding::new(), &mut bindings);
            for b in bindings {
                for a in replay(graph, rule, &b) {
                    if !known.contains(&a) && !fresh.contains_key(&a) {
                        fresh.insert(
                            a,
                            Provenance {
                                rule: rule.name.clone(),
                                binding: b.clone(),
                            },
                        );
                    }
                }
            }
        }
        if fresh.is_empty() {
            return Ok(result);
        }
        for (a, p) in fresh {
            idx.add(&a);
            known.insert(a.clone());
            result.derived.insert(a.clone());
            result.provenance.insert(a, p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::load_ontology;
    use crate::rules::parse_rules;

    const TBOX: &[u8] = b"
concept Group
concept Special
isa Special Group
concept Marked
objprop hasCommonKey
objprop belongsToSoftware
objprop isEvidenceOfSoftware
objprop link
dataprop path
";

    fn setup(abox: &str) -> (ConceptGraph, FactStore) {
        let mut text = TBOX.to_vec();
        text.extend_from_slice(abox.as_bytes());
        load_ontology(&text).unwrap()
    }

    #[test]
    fn evidence_of_software_walkthrough() {
        let (g, f) = setup("ind G Group\nrel G hasCommonKey K\nrel K belongsToSoftware AcrobatReader\n");
        let rules = parse_rules(
            b"rule r: Group(?x) & hasCommonKey(?x, ?y) & belongsToSoftware(?y, ?soft) => isEvidenceOfSoftware(?x, ?soft)",
        )
        .unwrap();
        let res = infer(&g, &f, &rules).unwrap();
        let want = Assertion::object("G", "isEvidenceOfSoftware", "AcrobatReader");
        assert_eq!(res.derived, BTreeSet::from([want.clone()]));
        assert_eq!(res.iterations, 2);
        let p = &res.provenance[&want];
        assert_eq!(p.rule, "r");
        assert_eq!(p.binding["soft"], Value::Individual("AcrobatReader".into()));
    }

    #[test]
    fn taxonomy_aware_matching() {
        let (g, f) = setup("ind x Special\n");
        let rules = parse_rules(b"rule r: Group(?x) => Marked(?x)").unwrap();
        let res = infer(&g, &f, &rules).unwrap();
        assert!(res.derived.contains(&Assertion::concept("x", "Marked")));
    }

    #[test]
    fn empty_rule_list() {
        let (g, f) = setup("ind x Group\n");
        let res = infer(&g, &f, &[]).unwrap();
        assert!(res.derived.is_empty());
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn transitive_chain_needs_several_passes() {
        let (g, f) = setup("rel a link b\nrel b link c\nrel c link d\n");
        let rules = parse_rules(b"rule t: link(?x, ?y) & link(?y, ?z) => link(?x, ?z)").unwrap();
        let res = infer(&g, &f, &rules).unwrap();
        assert_eq!(res.derived.len(), 3);
        assert!(res.iterations <= res.derived.len() + 1);
        assert!(matches!(
            infer_with(&g, &f, &rules, 1),
            Err(InferError::IterationLimitExceeded(1))
        ));
    }

    #[test]
    fn builtins_filter_bindings() {
        let (g, f) = setup(
            "ind a Group\ndata a path \"\\\\Software\\\\Adobe\"\nind b Group\ndata b path \"\\\\SYSTEM\\\\Select\"\n",
        );
        let rules =
            parse_rules(b"rule r: Group(?x) & path(?x, ?p) & builtin:pathPrefixOf(\"Software\", ?p) => Marked(?x)")
                .unwrap();
        let res = infer(&g, &f, &rules).unwrap();
        assert_eq!(res.derived, BTreeSet::from([Assertion::concept("a", "Marked")]));
    }

    #[test]
    fn vocabulary_and_sorts_are_checked() {
        let (g, f) = setup("");
        for text in [
            &b"rule r: Nope(?x) => Marked(?x)"[..],
            b"rule r: Group(?x) => nope(?x, ?x)",
        ] {
            assert!(matches!(
                infer(&g, &f, &parse_rules(text).unwrap()),
                Err(InferError::UndeclaredTerm { .. })
            ));
        }
        for text in [
            &b"rule r: path(?x, ?p) => Marked(?p)"[..],
            b"rule r: Group(?x) => path(?x, ?x)",
            b"rule r: Group(\"lit\") => Marked(a)",
        ] {
            assert!(matches!(
                infer(&g, &f, &parse_rules(text).unwrap()),
                Err(InferError::IllTyped { .. })
            ));
        }
    }

    #[test]
    fn derived_excludes_initial_facts() {
        let (g, f) = setup("ind x Group\nind x Marked\n");
        let rules = parse_rules(b"rule r: Group(?x) => Marked(?x)").unwrap();
        assert!(infer(&g, &f, &rules).unwrap().derived.is_empty());
    }
}
