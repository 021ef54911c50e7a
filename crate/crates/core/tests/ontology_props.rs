mod common;

use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use regdialog::kb::KnowledgeBase;
use regdialog::ontology::{
    check_consistency, load_ontology, Assertion, ConceptGraph, FactStore, OntologyError, ViolationKind,
};

use common::rng;

/// Random DAG over `n` concepts: edges only go from a higher to a lower
/// index, so there are no cycles.
fn random_dag(r: &mut impl Rng, n: usize, edges: usize) -> Vec<(usize, usize)> {
    let mut out = BTreeSet::new();
    if n < 2 {
        return Vec::new();
    }
    for _ in 0..edges {
        let a = r.gen_range(1..n);
        let b = r.gen_range(0..a);
        out.insert((a, b));
    }
    out.into_iter().collect()
}

fn onto_text(n: usize, edges: &[(usize, usize)]) -> String {
    let mut text = String::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.reverse();
    for i in order {
        text.push_str(&format!("concept C{i}\n"));
    }
    for (a, b) in edges {
        text.push_str(&format!("isa C{a} C{b}\n"));
    }
    text
}

fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    reach
}

fn bfs(n: usize, edges: &[(usize, usize)], from: usize, to: usize) -> bool {
    let mut seen = vec![false; n];
    let mut q = VecDeque::from([from]);
    seen[from] = true;
    while let Some(x) = q.pop_front() {
        if x == to {
            return true;
        }
        for &(a, b) in edges {
            if a == x && !seen[b] {
                seen[b] = true;
                q.push_back(b);
            }
        }
    }
    false
}

#[test]
fn closure_matches_floyd_warshall() {
    let mut r = rng(10);
    for _ in 0..20 {
        let n = 30;
        let edges = random_dag(&mut r, n, 50);
        let (g, _) = load_ontology(onto_text(n, &edges).as_bytes()).unwrap();
        let reach = floyd_warshall(n, &edges);
        for (i, row) in reach.iter().enumerate() {
            for (j, &reachable) in row.iter().enumerate() {
                assert_eq!(g.subsumes(&format!("C{j}"), &format!("C{i}")).unwrap(), reachable);
            }
        }
    }
}

#[test]
fn subsumes_matches_bfs() {
    let mut r = rng(11);
    for _ in 0..100 {
        let n = r.gen_range(1..25);
        let m = r.gen_range(0..60);
        let edges = random_dag(&mut r, n, m);
        let mut b = ConceptGraph::builder();
        for i in 0..n {
            b.concept(format!("C{i}"));
        }
        for (x, y) in &edges {
            b.isa(format!("C{x}"), format!("C{y}"));
        }
        let g = b.build().unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(
                    g.subsumes(&format!("C{j}"), &format!("C{i}")).unwrap(),
                    bfs(n, &edges, i, j)
                );
            }
        }
    }
}

#[test]
fn partial_order() {
    let mut r = rng(12);
    for _ in 0..30 {
        let n = 15;
        let edges = random_dag(&mut r, n, 30);
        let (g, _) = load_ontology(onto_text(n, &edges).as_bytes()).unwrap();
        let c: Vec<String> = (0..n).map(|i| format!("C{i}")).collect();
        for a in &c {
            assert!(g.subsumes(a, a).unwrap());
            for b in &c {
                if a != b {
                    assert!(!(g.subsumes(a, b).unwrap() && g.subsumes(b, a).unwrap()));
                }
                for d in &c {
                    if g.subsumes(a, b).unwrap() && g.subsumes(b, d).unwrap() {
                        assert!(g.subsumes(a, d).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn cycles_are_rejected() {
    assert!(matches!(
        load_ontology(b"concept A\nisa A A\n"),
        Err(OntologyError::IsaCycle { .. })
    ));
    assert!(matches!(
        load_ontology(b"concept A\nconcept B\nconcept C\nisa A B\nisa B C\nisa C A\n"),
        Err(OntologyError::IsaCycle { .. })
    ));
}

#[test]
fn instances_of_matches_brute_force() {
    let mut r = rng(13);
    for _ in 0..100 {
        let n = r.gen_range(1..12);
        let edges = random_dag(&mut r, n, 20);
        let (g, _) = load_ontology(onto_text(n, &edges).as_bytes()).unwrap();
        let mut f = FactStore::new();
        for _ in 0..r.gen_range(0..30) {
            let ind = format!("i{}", r.gen_range(0..8));
            let c = format!("C{}", r.gen_range(0..n));
            f.assert_fact(&g, Assertion::concept(ind, c)).unwrap();
        }
        for c in 0..n {
            let c = format!("C{c}");
            let oracle: BTreeSet<String> = f
                .assertions()
                .filter_map(|a| match a {
                    Assertion::Concept { individual, concept } if g.subsumes(&c, concept).unwrap() => {
                        Some(individual.clone())
                    }
                    _ => None,
                })
                .collect();
            let got = f.instances_of(&g, &c).unwrap();
            assert_eq!(got, oracle);
            for p in g.ancestors(&c) {
                assert!(got.is_subset(&f.instances_of(&g, p).unwrap()));
            }
        }
    }
}

#[test]
fn random_asserts_have_set_semantics() {
    let (g, _) = load_ontology(b"concept A\nconcept B\nobjprop p\ndataprop d\n").unwrap();
    let mut r = rng(14);
    let mut f = FactStore::new();
    let mut oracle = BTreeSet::new();
    for _ in 0..1000 {
        let s = format!("i{}", r.gen_range(0..6));
        let a = match r.gen_range(0..3) {
            0 => Assertion::concept(s, *["A", "B"].choose(&mut r).unwrap()),
            1 => Assertion::object(s, "p", format!("i{}", r.gen_range(0..6))),
            _ => Assertion::data(s, "d", format!("{}", r.gen_range(0..4))),
        };
        oracle.insert(a.clone());
        f.assert_fact(&g, a).unwrap();
    }
    assert_eq!(f.len(), oracle.len());
    assert!(matches!(
        f.assert_fact(&g, Assertion::concept("x", "Nope")),
        Err(OntologyError::UndeclaredTerm { .. })
    ));
    assert_eq!(f.len(), oracle.len());
}

#[test]
fn disjointness_is_inherited_and_monotone() {
    let text = b"concept T\nconcept A\nconcept B\nconcept A1\nisa A T\nisa B T\nisa A1 A\ndisjoint A B\n";
    let (g, _) = load_ontology(text).unwrap();
    assert!(g.are_disjoint("A1", "B"));
    let mut f = FactStore::new();
    f.assert_fact(&g, Assertion::concept("x", "A1")).unwrap();
    f.assert_fact(&g, Assertion::concept("x", "B")).unwrap();
    let before = check_consistency(&g, &f);
    assert_eq!(before.len(), 1);
    assert_eq!(before[0].kind, ViolationKind::DisjointnessViolation);
    f.assert_fact(&g, Assertion::concept("x", "T")).unwrap();
    f.assert_fact(&g, Assertion::concept("y", "A")).unwrap();
    let after = check_consistency(&g, &f);
    assert!(before.iter().all(|v| after.contains(v)));

    assert!(matches!(
        load_ontology(b"concept A\nconcept B\nisa B A\ndisjoint A B\n"),
        Err(OntologyError::InvalidDisjointness { .. })
    ));
}

#[test]
fn seed_edges_and_violations() {
    let kb = KnowledgeBase::seed();
    let g = &kb.graph;
    for (anc, desc) in [
        ("IdentityTheftCase", "PhishingCase"),
        ("HackingCase", "CrackingCase"),
        ("DisruptiveCrimeCase", "CrackingCase"),
        ("TheftCase", "CyberTheftCase"),
        ("CyberCrimeCase", "CyberTheftCase"),
    ] {
        assert!(g.subsumes(anc, desc).unwrap(), "{anc} should subsume {desc}");
        assert!(!g.subsumes(desc, anc).unwrap());
    }
    assert!(g.parents_of("CrackingCase").any(|p| p == "HackingCase"));
    assert!(g.parents_of("CrackingCase").any(|p| p == "DisruptiveCrimeCase"));
    assert_eq!(check_consistency(g, &kb.facts), []);

    let mut f = kb.facts.clone();
    f.assert_fact(g, Assertion::concept("case1", "PropagationOfUnlawfulMaterialCase"))
        .unwrap();
    f.assert_fact(g, Assertion::concept("case1", "PossessionOfUnlawfulMaterialCase"))
        .unwrap();
    let v = check_consistency(g, &f);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::DisjointnessViolation);
    assert_eq!(v[0].subject, "case1");

    let mut f = kb.facts.clone();
    f.assert_fact(g, Assertion::concept("k", "RegistryKeyObject")).unwrap();
    f.assert_fact(g, Assertion::data("k", "hasName", "Run")).unwrap();
    let v = check_consistency(g, &f);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::CardinalityViolation);
    assert!(v[0].detail.contains("hasLastModified"));
}

#[test]
fn empty_store_is_consistent() {
    let kb = KnowledgeBase::seed();
    assert_eq!(check_consistency(&kb.graph, &FactStore::new()), []);
    assert!(FactStore::new()
        .instances_of(&kb.graph, "EvidenceObject")
        .unwrap()
        .is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_onto_text_round_trip(edges in prop::collection::btree_set((1usize..10, 0usize..10), 0..20)) {
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| b < a).collect();
        let (g, _) = load_ontology(onto_text(10, &edges).as_bytes()).unwrap();
        let mut f = FactStore::new();
        f.assert_fact(&g, Assertion::concept("x", "C0")).unwrap();
        f.assert_fact(&g, Assertion::concept("x", "C1")).unwrap();
        let mut text = onto_text(10, &edges);
        text.push_str(&f.to_onto_text());
        let (g2, f2) = load_ontology(text.as_bytes()).unwrap();
        prop_assert_eq!(g2, g);
        prop_assert_eq!(f2, f);
    }
}
