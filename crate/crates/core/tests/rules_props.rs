mod common;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use regdialog::ontology::{load_ontology, Assertion, ConceptGraph, FactStore, Value};
use regdialog::rules::{
    infer, infer_with, parse_rules, replay, solutions, Atom, Builtin, InferError, Rule, Term, DEFAULT_MAX_ITERATIONS,
};

use common::rng;

const CONCEPTS: usize = 5;
const IND_VARS: [&str; 3] = ["x", "y", "z"];

struct Case {
    graph: ConceptGraph,
    edges: Vec<(usize, usize)>,
    facts: Vec<Assertion>,
    rules: Vec<Rule>,
}

fn tbox(r: &mut impl Rng) -> (String, Vec<(usize, usize)>) {
    let mut text = String::new();
    for i in 0..CONCEPTS {
        text.push_str(&format!("concept C{i}\n"));
    }
    let mut edges = BTreeSet::new();
    for _ in 0..r.gen_range(0..5) {
        let a = r.gen_range(1..CONCEPTS);
        let b = r.gen_range(0..a);
        edges.insert((a, b));
    }
    for (a, b) in &edges {
        text.push_str(&format!("isa C{a} C{b}\n"));
    }
    text.push_str("objprop p\nobjprop q\ndataprop d\n");
    (text, edges.into_iter().collect())
}

fn ind(r: &mut impl Rng, n: usize) -> String {
    format!("i{}", r.gen_range(0..n))
}

fn lit(r: &mut impl Rng) -> String {
    ["a", "b", "\\Software\\a"].choose(r).unwrap().to_string()
}

fn ind_term(r: &mut impl Rng, n: usize, vars: &[&str]) -> Term {
    if r.gen_bool(0.85) {
        Term::var(*vars.choose(r).unwrap())
    } else {
        Term::Individual(ind(r, n))
    }
}

fn random_rule(r: &mut impl Rng, n: usize, idx: usize) -> Rule {
    let vars = &IND_VARS[..r.gen_range(1..=3)];
    let mut body = Vec::new();
    for _ in 0..r.gen_range(1..=3) {
        body.push(match r.gen_range(0..4) {
            0 => Atom::Concept {
                concept: format!("C{}", r.gen_range(0..CONCEPTS)),
                term: ind_term(r, n, vars),
            },
            1 | 2 => Atom::Property {
                property: ["p", "q"].choose(r).unwrap().to_string(),
                subject: ind_term(r, n, vars),
                object: ind_term(r, n, vars),
            },
            _ => Atom::Property {
                property: "d".into(),
                subject: ind_term(r, n, vars),
                object: if r.gen_bool(0.6) {
                    Term::var("v")
                } else {
                    Term::Literal(lit(r))
                },
            },
        });
    }
    let bound: Vec<String> = body
        .iter()
        .flat_map(|a| a.vars().map(str::to_string).collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let ind_bound: Vec<&str> = bound.iter().map(String::as_str).filter(|v| *v != "v").collect();
    if bound.iter().any(|v| v == "v") && r.gen_bool(0.5) {
        let b = *[Builtin::StateEquals, Builtin::PathPrefixOf].choose(r).unwrap();
        body.push(Atom::Builtin {
            builtin: b,
            args: vec![Term::var("v"), Term::Literal(lit(r))],
        });
    }
    let pick = |r: &mut dyn rand::RngCore| -> Term {
        if !ind_bound.is_empty() && r.gen_bool(0.9) {
            Term::var(*ind_bound.choose(r).unwrap())
        } else {
            Term::Individual(format!("i{}", r.gen_range(0..n)))
        }
    };
    let mut head = Vec::new();
    for _ in 0..r.gen_range(1..=2) {
        head.push(match r.gen_range(0..3) {
            0 => Atom::Concept {
                concept: format!("C{}", r.gen_range(0..CONCEPTS)),
                term: pick(r),
            },
            1 => Atom::Property {
                property: ["p", "q"].choose(r).unwrap().to_string(),
                subject: pick(r),
                object: pick(r),
            },
            _ => Atom::Property {
                property: "d".into(),
                subject: pick(r),
                object: if bound.iter().any(|v| v == "v") && r.gen_bool(0.5) {
                    Term::var("v")
                } else {
                    Term::Literal(lit(r))
                },
            },
        });
    }
    Rule {
        name: format!("r{idx}"),
        body,
        head,
    }
}

fn random_case(r: &mut impl Rng) -> Case {
    let (text, edges) = tbox(r);
    let (graph, _) = load_ontology(text.as_bytes()).unwrap();
    let n = r.gen_range(1..=8);
    let mut facts = Vec::new();
    for _ in 0..r.gen_range(0..14) {
        facts.push(match r.gen_range(0..3) {
            0 => Assertion::concept(ind(r, n), format!("C{}", r.gen_range(0..CONCEPTS))),
            1 => Assertion::object(ind(r, n), *["p", "q"].choose(r).unwrap(), ind(r, n)),
            _ => Assertion::data(ind(r, n), "d", lit(r)),
        });
    }
    let rules = (0..r.gen_range(0..=4)).map(|i| random_rule(r, n, i)).collect();
    Case {
        graph,
        edges,
        facts,
        rules,
    }
}

/// Reflexive-transitive is-a reachability, computed from the edge list.
fn below(edges: &[(usize, usize)], c: usize, d: usize) -> bool {
    let mut seen = BTreeSet::from([d]);
    let mut stack = vec![d];
    while let Some(x) = stack.pop() {
        for &(a, b) in edges {
            if a == x && seen.insert(b) {
                stack.push(b);
            }
        }
    }
    seen.contains(&c)
}

fn concept_index(c: &str) -> usize {
    c[1..].parse().unwrap()
}

/// Naive evaluation by enumerating every assignment of every variable to
/// every constant, pass after pass.
fn brute_force(case: &Case) -> BTreeSet<Assertion> {
    let mut known: BTreeSet<Assertion> = case.facts.iter().cloned().collect();
    let initial = known.clone();
    loop {
        let mut domain: BTreeSet<Value> = BTreeSet::new();
        for a in &known {
            match a {
                Assertion::Concept { individual, .. } => {
                    domain.insert(Value::Individual(individual.clone()));
                }
                Assertion::Object { subject, object, .. } => {
                    domain.insert(Value::Individual(subject.clone()));
                    domain.insert(Value::Individual(object.clone()));
                }
                Assertion::Data { subject, literal, .. } => {
                    domain.insert(Value::Individual(subject.clone()));
                    domain.insert(Value::Literal(literal.clone()));
                }
            }
        }
        let domain: Vec<Value> = domain.into_iter().collect();
        let mut fresh = BTreeSet::new();
        for rule in &case.rules {
            let vars: Vec<String> = rule
                .body
                .iter()
                .flat_map(|a| a.vars().map(str::to_string).collect::<Vec<_>>())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let mut choice = vec![0usize; vars.len()];
            if domain.is_empty() && !vars.is_empty() {
                continue;
            }
            loop {
                let b: BTreeMap<&str, &Value> = vars
                    .iter()
                    .map(String::as_str)
                    .zip(choice.iter().map(|&i| &domain[i]))
                    .collect();
                let val = |t: &Term| -> Value {
                    match t {
                        Term::Var(v) => b[v.as_str()].clone(),
                        Term::Literal(l) => Value::Literal(l.clone()),
                        Term::Individual(i) => Value::Individual(i.clone()),
                    }
                };
                let holds = rule.body.iter().all(|atom| match atom {
                    Atom::Concept { concept, term } => match val(term) {
                        Value::Individual(i) => known.iter().any(|a| match a {
                            Assertion::Concept { individual, concept: c } => {
                                *individual == i && below(&case.edges, concept_index(concept), concept_index(c))
                            }
                            _ => false,
                        }),
                        Value::Literal(_) => false,
                    },
                    Atom::Property {
                        property,
                        subject,
                        object,
                    } => {
                        let Value::Individual(s) = val(subject) else {
                            return false;
                        };
                        let a = match val(object) {
                            Value::Individual(o) if property != "d" => Assertion::object(s, property, o),
                            Value::Literal(l) if property == "d" => Assertion::data(s, property, l),
                            _ => return false,
                        };
                        known.contains(&a)
                    }
                    Atom::Builtin { builtin, args } => {
                        let vs: Vec<Value> = args.iter().map(val).collect();
                        let strs: Vec<&str> = vs.iter().map(Value::as_str).collect();
                        builtin.eval(&strs)
                    }
                });
                if holds {
                    for h in &rule.head {
                        let a = match h {
                            Atom::Concept { concept, term } => match val(term) {
                                Value::Individual(i) => Some(Assertion::concept(i, concept)),
                                _ => None,
                            },
                            Atom::Property {
                                property,
                                subject,
                                object,
                            } => match (val(subject), val(object)) {
                                (Value::Individual(s), Value::Individual(o)) if property != "d" => {
                                    Some(Assertion::object(s, property, o))
                                }
                                (Value::Individual(s), Value::Literal(l)) if property == "d" => {
                                    Some(Assertion::data(s, property, l))
                                }
                                _ => None,
                            },
                            Atom::Builtin { .. } => None,
                        };
                        if let Some(a) = a {
                            if !known.contains(&a) {
                                fresh.insert(a);
                            }
                        }
                    }
                }
                // next assignment
                let mut k = 0;
                loop {
                    if k == choice.len() {
                        break;
                    }
                    choice[k] += 1;
                    if choice[k] < domain.len() {
                        break;
                    }
                    choice[k] = 0;
                    k += 1;
                }
                if k == choice.len() {
                    break;
                }
            }
        }
        if fresh.is_empty() {
            return known.difference(&initial).cloned().collect();
        }
        known.extend(fresh);
    }
}

fn store(facts: &[Assertion]) -> FactStore {
    let mut f = FactStore::new();
    for a in facts {
        f.insert(a.clone());
    }
    f
}

#[test]
fn infer_matches_exhaustive_bindings() {
    let mut r = rng(30);
    let mut nontrivial = 0;
    for i in 0..400 {
        let case = random_case(&mut r);
        let facts = store(&case.facts);
        let res = infer(&case.graph, &facts, &case.rules).unwrap_or_else(|e| panic!("case {i}: {e}"));
        let oracle = brute_force(&case);
        assert_eq!(
            res.derived,
            oracle,
            "case {i}: {:#?}",
            case.rules.iter().map(Rule::to_string).collect::<Vec<_>>()
        );
        if !oracle.is_empty() {
            nontrivial += 1;
        }
        assert!(res.iterations <= res.derived.len() + 1);
        assert!(res.iterations <= DEFAULT_MAX_ITERATIONS);
        assert!(res.derived.iter().all(|a| !facts.contains(a)));
        assert_eq!(res.provenance.len(), res.derived.len());
    }
    assert!(nontrivial >= 100, "only {nontrivial} cases derived anything");
}

#[test]
fn permutation_invariance() {
    let mut r = rng(31);
    for _ in 0..200 {
        let case = random_case(&mut r);
        let base = infer(&case.graph, &store(&case.facts), &case.rules).unwrap();
        let mut facts = case.facts.clone();
        let mut rules = case.rules.clone();
        facts.shuffle(&mut r);
        rules.shuffle(&mut r);
        let again = infer(&case.graph, &store(&facts), &rules).unwrap();
        assert_eq!(again.derived, base.derived);
        assert_eq!(again.iterations, base.iterations);
    }
}

#[test]
fn monotone_in_facts() {
    let mut r = rng(32);
    for _ in 0..200 {
        let case = random_case(&mut r);
        let small = infer(&case.graph, &store(&case.facts), &case.rules).unwrap();
        let mut more = case.facts.clone();
        more.push(Assertion::concept("i0", format!("C{}", r.gen_range(0..CONCEPTS))));
        more.push(Assertion::object("i1", "p", "i0"));
        let big_facts = store(&more);
        let big = infer(&case.graph, &big_facts, &case.rules).unwrap();
        let closure = big.closure(&big_facts);
        for a in &small.derived {
            assert!(closure.contains(a));
        }
    }
}

#[test]
fn provenance_replays() {
    let mut r = rng(33);
    for _ in 0..200 {
        let case = random_case(&mut r);
        let facts = store(&case.facts);
        let res = infer(&case.graph, &facts, &case.rules).unwrap();
        let closure = res.closure(&facts);
        for (a, p) in &res.provenance {
            let rule = case.rules.iter().find(|x| x.name == p.rule).unwrap();
            assert!(replay(&case.graph, rule, &p.binding).contains(a));
            assert!(solutions(&case.graph, &closure, rule).contains(&p.binding));
        }
    }
}

#[test]
fn rules_print_and_reparse() {
    let mut r = rng(34);
    for _ in 0..500 {
        let n = r.gen_range(1..=8);
        let rules: Vec<Rule> = (0..r.gen_range(1..=4)).map(|i| random_rule(&mut r, n, i)).collect();
        let text: String = rules.iter().map(|x| format!("{x}\n")).collect();
        let back = parse_rules(text.as_bytes()).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(back, rules);
    }
}

#[test]
fn iteration_guard() {
    let (g, f) = load_ontology(b"concept C0\nobjprop p\nrel a p b\nrel b p c\nrel c p d\nrel d p e\n").unwrap();
    let rules = parse_rules(b"rule t: p(?x, ?y) & p(?y, ?z) => p(?x, ?z)").unwrap();
    assert!(matches!(
        infer_with(&g, &f, &rules, 2),
        Err(InferError::IterationLimitExceeded(2))
    ));
    let res = infer(&g, &f, &rules).unwrap();
    assert_eq!(res.derived.len(), 6);
}
