#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use labelflow::synth::{Condition, DerivedAttribute, FreeAttribute, Rule, RuleSpec};
use labelflow::{parse_dataset, Annotation, AnnotationSet, Document, LabelDecl, LabeledGraph, Node, Region};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn load(name: &str) -> AnnotationSet {
    let bytes = std::fs::read(data_path(name)).expect("golden file exists");
    parse_dataset(&bytes).expect("golden file is valid")
}

/// Name of the synthetic entity whose line ends a region: the text before
/// the first ':' on the region's last line.
pub fn entity_name(set: &AnnotationSet, node: &Node) -> String {
    let text = set.surface(node.region()).expect("region has text");
    let line = text.lines().last().unwrap_or_default();
    line.split(':').next().unwrap_or_default().to_string()
}

/// Classes as sets of entity names, order-free.
pub fn named_classes(set: &AnnotationSet, classes: &[Vec<Node>]) -> BTreeSet<BTreeSet<String>> {
    classes
        .iter()
        .map(|c| c.iter().map(|n| entity_name(set, n)).collect())
        .collect()
}

pub fn name_sets(classes: &[&[&str]]) -> BTreeSet<BTreeSet<String>> {
    classes
        .iter()
        .map(|c| c.iter().map(|s| s.to_string()).collect())
        .collect()
}

/// A stack of forward maps. `parents[k][i]` is the level-(k+1) element that
/// level-k element `i` maps to. Level k elements are nested strictly inside
/// their parents; every element gets its own region. Labels are `step0`,
/// `step1`, ...
pub fn layered_dataset(leaves: usize, parents: &[Vec<usize>]) -> (AnnotationSet, Vec<Vec<Node>>) {
    let mut sizes = vec![leaves];
    for p in parents {
        assert_eq!(p.len(), *sizes.last().unwrap());
        sizes.push(p.iter().copied().max().map_or(0, |m| m + 1));
    }
    let levels = sizes.len();
    // children of each element, level by level
    let mut children: Vec<Vec<Vec<usize>>> = vec![vec![]; levels];
    for k in 1..levels {
        children[k] = vec![vec![]; sizes[k]];
        for (child, &parent) in parents[k - 1].iter().enumerate() {
            children[k][parent].push(child);
        }
    }
    let mut spans: Vec<Vec<Option<(usize, usize)>>> = sizes.iter().map(|&n| vec![None; n]).collect();
    fn place(
        level: usize,
        index: usize,
        cursor: &mut usize,
        children: &[Vec<Vec<usize>>],
        spans: &mut [Vec<Option<(usize, usize)>>],
    ) {
        let start = *cursor;
        *cursor += 1;
        if level > 0 {
            for &child in &children[level][index] {
                place(level - 1, child, cursor, children, spans);
            }
        }
        *cursor += 1;
        spans[level][index] = Some((start, *cursor));
    }
    let mut cursor = 0;
    let top = levels - 1;
    for index in 0..sizes[top] {
        place(top, index, &mut cursor, &children, &mut spans);
    }
    let doc = "layers";
    let nodes: Vec<Vec<Node>> = spans
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|s| {
                    let (start, end) = s.expect("every element is placed");
                    Node(Region::new(doc, start, end).unwrap())
                })
                .collect()
        })
        .collect();
    let mut annotations = Vec::new();
    for (k, p) in parents.iter().enumerate() {
        for (i, &parent) in p.iter().enumerate() {
            annotations.push(Annotation::new(
                format!("step{k}"),
                nodes[k][i].region().clone(),
                nodes[k + 1][parent].region().clone(),
            ));
        }
    }
    let set = AnnotationSet {
        documents: vec![Document::new(doc, ".".repeat(cursor))],
        labels: (0..parents.len())
            .map(|k| LabelDecl::forward(format!("step{k}")))
            .collect(),
        annotations,
    };
    (set, nodes)
}

/// Random map from `0..n` into `0..m`.
pub fn random_map<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..m)).collect()
}

/// Random rule spec with at most 4 attributes of at most 4 values. Derived
/// rules are total by construction, written either as one conjunction per
/// combination or as one disjunction per value, sometimes with an extra
/// agreeing rule on top.
pub fn random_rulespec<R: Rng>(rng: &mut R) -> RuleSpec {
    let total = rng.gen_range(2..=4);
    let free_count = rng.gen_range(1..=total);
    let mut free = Vec::new();
    for a in 0..free_count {
        let n = rng.gen_range(1..=4);
        free.push(FreeAttribute {
            name: format!("a{a}"),
            values: (0..n).map(|v| format!("a{a}v{v}")).collect(),
        });
    }
    let mut known: Vec<(String, Vec<String>)> = free.iter().map(|f| (f.name.clone(), f.values.clone())).collect();
    let mut derived = Vec::new();
    for d in 0..(total - free_count) {
        let name = format!("d{d}");
        let inputs: Vec<usize> = (0..known.len()).filter(|_| rng.gen_bool(0.6)).collect();
        let outputs = rng.gen_range(1..=4);
        // enumerate input combinations
        let mut combos: Vec<Vec<usize>> = vec![vec![]];
        for &i in &inputs {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    (0..known[i].1.len()).map(move |v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        let assigned: Vec<usize> = combos.iter().map(|_| rng.gen_range(0..outputs)).collect();
        let value = |o: usize| format!("{name}v{o}");
        let conj = |combo: &Vec<usize>| {
            Condition::All(
                inputs
                    .iter()
                    .zip(combo)
                    .map(|(&i, &v)| Condition::is(&known[i].0, &known[i].1[v]))
                    .collect(),
            )
        };
        let mut rules: Vec<Rule> = if rng.gen_bool(0.5) {
            combos
                .iter()
                .zip(&assigned)
                .map(|(c, &o)| Rule {
                    when: conj(c),
                    then: value(o),
                })
                .collect()
        } else {
            (0..outputs)
                .filter(|o| assigned.contains(o))
                .map(|o| Rule {
                    when: Condition::Any(
                        combos
                            .iter()
                            .zip(&assigned)
                            .filter(|(_, &a)| a == o)
                            .map(|(c, _)| conj(c))
                            .collect(),
                    ),
                    then: value(o),
                })
                .collect()
        };
        if rng.gen_bool(0.3) {
            // an overlapping rule that agrees with the table
            let pick = rng.gen_range(0..combos.len());
            let mut when = vec![conj(&combos[pick])];
            if let Some(&i) = inputs.first() {
                let other = (combos[pick][0] + 1) % known[i].1.len();
                if other != combos[pick][0] {
                    when.push(Condition::not(&known[i].0, &known[i].1[other]));
                }
            }
            rules.push(Rule {
                when: Condition::All(when),
                then: value(assigned[pick]),
            });
        }
        rules.shuffle(rng);
        let attr = DerivedAttribute {
            name: name.clone(),
            rules,
        };
        known.push((name, attr.values()));
        derived.push(attr);
    }
    RuleSpec { free, derived }
}

/// All partitions of `0..n` as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for block in 0..=next {
            prefix.push(block);
            extend(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), n, &mut out);
    out
}

/// Independent distance oracle: enumerates every hop sequence of at most
/// `max_hops` hops from `from` and returns the cheapest total reaching `to`.
/// Costs are recomputed from the raw edge list.
pub fn brute_force_distance(graph: &LabeledGraph, from: &Node, to: &Node, max_hops: usize) -> f64 {
    if from == to {
        return 0.0;
    }
    let edges: Vec<(String, Node, Node)> = graph.edges().map(|e| (e.label, e.source, e.target)).collect();
    let labels: BTreeSet<String> = edges.iter().map(|e| e.0.clone()).collect();
    let target = |label: &str, n: &Node| -> Option<Node> {
        edges.iter().find(|e| e.0 == label && &e.1 == n).map(|e| e.2.clone())
    };
    fn depth(edges: &[(String, Node, Node)], label: &str, n: &Node) -> usize {
        edges
            .iter()
            .filter(|e| e.0 == label && &e.2 == n)
            .map(|e| depth(edges, label, &e.1) + 1)
            .max()
            .unwrap_or(0)
    }
    let junction = |f: &str, g: &str| -> f64 {
        let dom: Vec<Node> = edges
            .iter()
            .filter(|e| e.0 == f)
            .map(|e| e.1.clone())
            .filter(|n| target(g, n).is_some())
            .collect();
        let fclasses = group(&dom, |n| target(f, n).unwrap());
        let gclasses = group(&dom, |n| target(g, n).unwrap());
        let count = fclasses
            .iter()
            .filter(|a| gclasses.iter().any(|b| a.iter().all(|x| b.contains(x))))
            .count();
        if count == 0 {
            f64::INFINITY
        } else {
            (fclasses.len() as f64).ln() - (count as f64).ln()
        }
    };
    let mut best = f64::INFINITY;
    let mut stack: Vec<(Node, Option<BTreeSet<Node>>, f64, usize)> = vec![(from.clone(), None, 0.0, 0)];
    while let Some((node, context, cost, hops)) = stack.pop() {
        if node == *to {
            best = best.min(cost);
            continue;
        }
        if hops == max_hops {
            continue;
        }
        for label in &labels {
            if let Some(next) = target(label, &node) {
                let level: BTreeSet<Node> = match &context {
                    Some(level) => level.iter().filter(|n| target(label, n).is_some()).cloned().collect(),
                    None => {
                        let d = depth(&edges, label, &node);
                        edges
                            .iter()
                            .filter(|e| &e.0 == label && depth(&edges, label, &e.1) == d)
                            .map(|e| e.1.clone())
                            .collect()
                    }
                };
                let image: BTreeSet<Node> = level.iter().map(|n| target(label, n).unwrap()).collect();
                let step = (level.len() as f64).ln() - (image.len() as f64).ln();
                stack.push((next, Some(image), cost + step, hops + 1));
            }
        }
        for (f, via, _) in edges.iter().filter(|e| e.2 == node) {
            for (g, _, next) in edges.iter().filter(|e| &e.1 == via && &e.0 != f) {
                let loss = junction(f, g);
                if loss.is_finite() {
                    stack.push((next.clone(), None, cost + loss, hops + 1));
                }
            }
        }
    }
    best
}

fn group<K: PartialEq>(items: &[Node], key: impl Fn(&Node) -> K) -> Vec<Vec<Node>> {
    let mut keys: Vec<K> = Vec::new();
    let mut out: Vec<Vec<Node>> = Vec::new();
    for item in items {
        let k = key(item);
        match keys.iter().position(|x| *x == k) {
            Some(i) => out[i].push(item.clone()),
            None => {
                keys.push(k);
                out.push(vec![item.clone()]);
            }
        }
    }
    out
}

/// Random small graph on one document: random nested region pairs under a
/// few labels of random direction. Annotations that would break a map are
/// skipped.
pub fn random_graph<R: Rng>(rng: &mut R, labels: usize, annotations: usize) -> LabeledGraph {
    let decls: Vec<LabelDecl> = (0..labels)
        .map(|i| {
            if rng.gen_bool(0.5) {
                LabelDecl::forward(format!("l{i}"))
            } else {
                LabelDecl::backward(format!("l{i}"))
            }
        })
        .collect();
    let mut graph = LabeledGraph::with_labels(decls).unwrap();
    // a small pool of regions so that nodes get shared
    let mut pool: Vec<Region> = Vec::new();
    for _ in 0..10 {
        let start = rng.gen_range(0..12);
        let end = rng.gen_range(start + 1..=14);
        pool.push(Region::new("g", start, end).unwrap());
    }
    let pairs: Vec<(Region, Region)> = pool
        .iter()
        .flat_map(|outer| {
            pool.iter()
                .filter(|inner| outer.contains(inner))
                .map(move |inner| (inner.clone(), outer.clone()))
        })
        .collect();
    if pairs.is_empty() {
        return graph;
    }
    for _ in 0..annotations {
        let (mention, entity) = pairs[rng.gen_range(0..pairs.len())].clone();
        let label = format!("l{}", rng.gen_range(0..labels));
        let _ = graph.add_annotation(&Annotation::new(label, mention, entity));
    }
    graph
}

/// Node -> class index, for comparing partitions against plain labelings.
pub fn labeling(classes: &[Vec<Node>]) -> BTreeMap<Node, usize> {
    classes
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |n| (n.clone(), i)))
        .collect()
}
