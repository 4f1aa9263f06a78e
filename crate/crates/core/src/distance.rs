//! Entropy distance between two nodes of a map graph.
//!
//! A route is a sequence of hops. A map hop follows an edge from source to
//! target and costs the information the map loses at that point of the
//! chain: the level set of nodes the chain currently ranges over is mapped
//! forward and the loss is `ln |level| - ln |image|`. Consecutive map hops
//! carry the level set along, so a pure chain costs exactly its composite
//! loss. A chain that starts fresh at `u` under label `l` ranges over the
//! nodes of `dom l` at the same depth as `u` (depth = longest run of `l`
//! edges ending at the node).
//!
//! A junction hop `x <-f- z -g-> y` goes against one map and along another.
//! It costs the dependency loss of `f`'s fibers against `g`'s fibers on the
//! common domain of `f` and `g`, and restarts the chain context at `y`.
//! Junctions whose dependency loss is infinite are not traversable.
//!
//! The distance is the minimum total cost; ties go to the lexicographically
//! smallest sequence of label names.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::infoflow::dependency;
use crate::model::{LabeledGraph, Node};
use crate::partition::{common_domain, fibers};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistanceError {
    #[error("node {0} is not in the graph")]
    UnknownNode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hop {
    Map {
        label: String,
        from: String,
        to: String,
        loss: f64,
    },
    Junction {
        inverse_label: String,
        via: String,
        label: String,
        from: String,
        to: String,
        loss: f64,
    },
}

impl Hop {
    pub fn loss(&self) -> f64 {
        match self {
            Hop::Map { loss, .. } | Hop::Junction { loss, .. } => *loss,
        }
    }

    fn push_labels(&self, out: &mut Vec<String>) {
        match self {
            Hop::Map { label, .. } => out.push(label.clone()),
            Hop::Junction {
                inverse_label, label, ..
            } => {
                out.push(inverse_label.clone());
                out.push(label.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distance {
    /// Total loss in nats; infinite when the nodes are not connected.
    pub nats: f64,
    pub path: Vec<Hop>,
}

impl Distance {
    pub fn is_finite(&self) -> bool {
        self.nats.is_finite()
    }
}

/// `ln a - ln b` with exact zero for equal counts.
fn step_loss(level: usize, image: usize) -> f64 {
    if level == image {
        0.0
    } else {
        (level as f64).ln() - (image as f64).ln()
    }
}

/// Depth of every node of `label`'s domain.
pub fn label_depths(graph: &LabeledGraph, label: &str) -> BTreeMap<Node, usize> {
    let Some(map) = graph.map(label) else {
        return BTreeMap::new();
    };
    let mut incoming: BTreeMap<&Node, Vec<&Node>> = BTreeMap::new();
    for (s, t) in map {
        incoming.entry(t).or_default().push(s);
    }
    // each label's edges move strictly between nested regions, so they form a forest
    fn depth<'a>(
        node: &'a Node,
        incoming: &BTreeMap<&'a Node, Vec<&'a Node>>,
        memo: &mut BTreeMap<&'a Node, usize>,
    ) -> usize {
        if let Some(&d) = memo.get(node) {
            return d;
        }
        let d = incoming
            .get(node)
            .map(|sources| sources.iter().map(|s| depth(s, incoming, memo) + 1).max().unwrap_or(0))
            .unwrap_or(0);
        memo.insert(node, d);
        d
    }
    let mut memo = BTreeMap::new();
    map.keys()
        .map(|node| (node.clone(), depth(node, &incoming, &mut memo)))
        .collect()
}

type Context = Option<BTreeSet<Node>>;

#[derive(Debug)]
struct Entry {
    cost: f64,
    labels: Vec<String>,
    node: Node,
    context: Context,
    path: Vec<Hop>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.labels.cmp(&self.labels))
            .then_with(|| other.node.cmp(&self.node))
            .then_with(|| other.context.cmp(&self.context))
    }
}

struct Junctions {
    losses: BTreeMap<(String, String), f64>,
}

impl Junctions {
    fn new(graph: &LabeledGraph) -> Self {
        let labels: Vec<String> = graph.labels().map(|l| l.name).collect();
        let mut losses = BTreeMap::new();
        for f in &labels {
            for g in &labels {
                if f == g {
                    continue;
                }
                let (domain, _) = common_domain(graph, &[f, g]).expect("labels exist");
                if domain.is_empty() {
                    continue;
                }
                let pf = fibers(graph, f, &domain).expect("domain is common");
                let pg = fibers(graph, g, &domain).expect("domain is common");
                let loss = dependency(&pf, &pg).expect("same universe").loss;
                losses.insert((f.clone(), g.clone()), loss);
            }
        }
        Junctions { losses }
    }
}

/// Minimum-loss route from `from` to `to`.
pub fn path_distance(graph: &LabeledGraph, from: &Node, to: &Node) -> Result<Distance, DistanceError> {
    for node in [from, to] {
        if !graph.contains_node(node) {
            return Err(DistanceError::UnknownNode(node.key()));
        }
    }
    if from == to {
        return Ok(Distance {
            nats: 0.0,
            path: vec![],
        });
    }

    let labels: Vec<String> = graph.labels().map(|l| l.name).collect();
    let depths: BTreeMap<&str, BTreeMap<Node, usize>> =
        labels.iter().map(|l| (l.as_str(), label_depths(graph, l))).collect();
    let junctions = Junctions::new(graph);

    let mut heap = BinaryHeap::new();
    let mut settled: HashSet<(Node, Context)> = HashSet::new();
    heap.push(Entry {
        cost: 0.0,
        labels: vec![],
        node: from.clone(),
        context: None,
        path: vec![],
    });

    while let Some(entry) = heap.pop() {
        if entry.node == *to {
            return Ok(Distance {
                nats: entry.cost,
                path: entry.path,
            });
        }
        if !settled.insert((entry.node.clone(), entry.context.clone())) {
            continue;
        }
        let mut push = |hop: Hop, node: Node, context: Context| {
            let mut labels = entry.labels.clone();
            hop.push_labels(&mut labels);
            let mut path = entry.path.clone();
            let cost = entry.cost + hop.loss();
            path.push(hop);
            heap.push(Entry {
                cost,
                labels,
                node,
                context,
                path,
            });
        };

        for edge in graph.out_edges(&entry.node) {
            let map = graph.map(&edge.label).expect("edge label exists");
            let level: BTreeSet<Node> = match &entry.context {
                Some(level) => level.iter().filter(|n| map.contains_key(*n)).cloned().collect(),
                None => {
                    let depths = &depths[edge.label.as_str()];
                    let here = depths[&entry.node];
                    depths
                        .iter()
                        .filter(|(_, &d)| d == here)
                        .map(|(n, _)| n.clone())
                        .collect()
                }
            };
            let image: BTreeSet<Node> = level.iter().map(|n| map[n].clone()).collect();
            let hop = Hop::Map {
                label: edge.label.clone(),
                from: entry.node.key(),
                to: edge.target.key(),
                loss: step_loss(level.len(), image.len()),
            };
            push(hop, edge.target, Some(image));
        }

        for incoming in graph.in_edges(&entry.node) {
            let via = &incoming.source;
            for outgoing in graph.out_edges(via) {
                if outgoing.label == incoming.label {
                    continue;
                }
                let Some(&loss) = junctions.losses.get(&(incoming.label.clone(), outgoing.label.clone())) else {
                    continue;
                };
                if !loss.is_finite() {
                    continue;
                }
                let hop = Hop::Junction {
                    inverse_label: incoming.label.clone(),
                    via: via.key(),
                    label: outgoing.label.clone(),
                    from: entry.node.key(),
                    to: outgoing.target.key(),
                    loss,
                };
                push(hop, outgoing.target, None);
            }
        }
    }

    Ok(Distance {
        nats: f64::INFINITY,
        path: vec![],
    })
}
