//! Documents, regions, labels and the map graph they induce.
//!
//! A label is a map between a mention (a region) and an entity (a strictly
//! larger region containing it). Forward labels map mention to entity,
//! backward labels map entity to mention. Regions are identified by exact
//! `(doc, start, end)` equality, which is how chains of maps get stitched
//! together: the entity of one annotation is the mention of the next.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("empty or inverted span {0}")]
    EmptySpan(Region),
    #[error("label `{0}` is not declared")]
    UnknownLabel(String),
    #[error("label `{0}` is declared twice")]
    DuplicateLabel(String),
    #[error("label name must not be empty")]
    EmptyLabelName,
    #[error("mention {mention} is not strictly contained in entity {entity}")]
    BadNesting { mention: Region, entity: Region },
    #[error(
        "map `{}` is not well defined: {} already maps to {}, not {}",
        .0.label,
        .0.source_node,
        .0.existing,
        .0.conflicting
    )]
    MapNotWellDefined(Box<MapConflict>),
}

/// Two targets for one source under the same label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapConflict {
    pub label: String,
    pub source_node: Node,
    pub existing: Node,
    pub conflicting: Node,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    /// Surface text of a region, if it lies on this document at char boundaries.
    pub fn slice(&self, region: &Region) -> Option<&str> {
        if region.doc != self.id {
            return None;
        }
        self.text.get(region.start..region.end)
    }
}

/// Half-open byte span `[start, end)` on a document.
///
/// Ordering is `(doc, start, end)`, which gives deterministic iteration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Region {
    pub doc: String,
    pub start: usize,
    pub end: usize,
}

impl Region {
    pub fn new(doc: impl Into<String>, start: usize, end: usize) -> Result<Self, ModelError> {
        let region = Region {
            doc: doc.into(),
            start,
            end,
        };
        if start < end {
            Ok(region)
        } else {
            Err(ModelError::EmptySpan(region))
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// Strict containment: same document, `self` covers `inner`, and they differ.
    pub fn contains(&self, inner: &Region) -> bool {
        self.doc == inner.doc && self.start <= inner.start && inner.end <= self.end && self != inner
    }

    /// True when the spans share at least one byte.
    pub fn overlaps(&self, other: &Region) -> bool {
        self.doc == other.doc && self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.doc, self.start, self.end)
    }
}

pub fn region_contains(outer: &Region, inner: &Region) -> bool {
    outer.contains(inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Mention to entity (small region to large region).
    Forward,
    /// Entity to mention (large region to small region).
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Forward => f.write_str("forward"),
            Direction::Backward => f.write_str("backward"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelDecl {
    pub name: String,
    pub direction: Direction,
}

impl LabelDecl {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        LabelDecl {
            name: name.into(),
            direction,
        }
    }

    pub fn forward(name: impl Into<String>) -> Self {
        Self::new(name, Direction::Forward)
    }

    pub fn backward(name: impl Into<String>) -> Self {
        Self::new(name, Direction::Backward)
    }
}

/// One instance of a label: a mention region inside an entity region.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Annotation {
    pub label: String,
    pub mention: Region,
    pub entity: Region,
}

impl Annotation {
    pub fn new(label: impl Into<String>, mention: Region, entity: Region) -> Self {
        Annotation {
            label: label.into(),
            mention,
            entity,
        }
    }

    pub fn check_nesting(&self) -> Result<(), ModelError> {
        if self.mention.is_empty() {
            return Err(ModelError::EmptySpan(self.mention.clone()));
        }
        if self.entity.is_empty() {
            return Err(ModelError::EmptySpan(self.entity.clone()));
        }
        if self.entity.contains(&self.mention) {
            Ok(())
        } else {
            Err(ModelError::BadNesting {
                mention: self.mention.clone(),
                entity: self.entity.clone(),
            })
        }
    }

    /// `(source, target)` of the edge this annotation induces.
    pub fn orient(&self, direction: Direction) -> (Node, Node) {
        let mention = Node::from(self.mention.clone());
        let entity = Node::from(self.entity.clone());
        match direction {
            Direction::Forward => (mention, entity),
            Direction::Backward => (entity, mention),
        }
    }
}

/// A graph node. Identity is region identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node(pub Region);

impl Node {
    pub fn region(&self) -> &Region {
        &self.0
    }

    /// Stable textual key, `doc:start-end`.
    pub fn key(&self) -> String {
        self.0.to_string()
    }
}

impl From<Region> for Node {
    fn from(region: Region) -> Self {
        Node(region)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid node key `{0}`, expected doc:start-end")]
pub struct NodeKeyError(pub String);

impl FromStr for Node {
    type Err = NodeKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NodeKeyError(s.to_string());
        // document ids may contain ':' themselves, so split at the last one
        let (doc, span) = s.rsplit_once(':').ok_or_else(bad)?;
        let (start, end) = span.split_once('-').ok_or_else(bad)?;
        let start = start.parse().map_err(|_| bad())?;
        let end = end.parse().map_err(|_| bad())?;
        if doc.is_empty() {
            return Err(bad());
        }
        Region::new(doc, start, end).map(Node).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MapEdge {
    pub label: String,
    pub source: Node,
    pub target: Node,
}

/// Nodes and map edges induced by a set of annotations.
///
/// Every label is a partial function on nodes; `add_annotation` refuses any
/// edge that would give a source two targets under one label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledGraph {
    labels: BTreeMap<String, Direction>,
    nodes: BTreeSet<Node>,
    maps: BTreeMap<String, BTreeMap<Node, Node>>,
}

impl LabeledGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_labels<I: IntoIterator<Item = LabelDecl>>(labels: I) -> Result<Self, ModelError> {
        let mut graph = Self::new();
        for decl in labels {
            graph.declare_label(decl)?;
        }
        Ok(graph)
    }

    pub fn declare_label(&mut self, decl: LabelDecl) -> Result<(), ModelError> {
        if decl.name.is_empty() {
            return Err(ModelError::EmptyLabelName);
        }
        if self.labels.contains_key(&decl.name) {
            return Err(ModelError::DuplicateLabel(decl.name));
        }
        self.maps.insert(decl.name.clone(), BTreeMap::new());
        self.labels.insert(decl.name, decl.direction);
        Ok(())
    }

    /// Adds the edge for `ann`. Returns `false` when the identical edge was
    /// already present.
    pub fn add_annotation(&mut self, ann: &Annotation) -> Result<bool, ModelError> {
        let direction = self
            .direction(&ann.label)
            .ok_or_else(|| ModelError::UnknownLabel(ann.label.clone()))?;
        ann.check_nesting()?;
        let (source, target) = ann.orient(direction);
        let map = self.maps.get_mut(&ann.label).expect("declared label has a map");
        if let Some(existing) = map.get(&source) {
            if *existing == target {
                return Ok(false);
            }
            return Err(ModelError::MapNotWellDefined(Box::new(MapConflict {
                label: ann.label.clone(),
                source_node: source,
                existing: existing.clone(),
                conflicting: target,
            })));
        }
        self.nodes.insert(source.clone());
        self.nodes.insert(target.clone());
        map.insert(source, target);
        Ok(true)
    }

    pub fn direction(&self, label: &str) -> Option<Direction> {
        self.labels.get(label).copied()
    }

    pub fn labels(&self) -> impl Iterator<Item = LabelDecl> + '_ {
        self.labels
            .iter()
            .map(|(name, &direction)| LabelDecl::new(name.clone(), direction))
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.labels.contains_key(label)
    }

    pub fn nodes(&self) -> &BTreeSet<Node> {
        &self.nodes
    }

    pub fn contains_node(&self, node: &Node) -> bool {
        self.nodes.contains(node)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.maps.values().map(BTreeMap::len).sum()
    }

    /// All edges, ordered by `(label, source)`.
    pub fn edges(&self) -> impl Iterator<Item = MapEdge> + '_ {
        self.maps.iter().flat_map(|(label, map)| {
            map.iter().map(move |(source, target)| MapEdge {
                label: label.clone(),
                source: source.clone(),
                target: target.clone(),
            })
        })
    }

    /// The map a label denotes, as source -> target.
    pub fn map(&self, label: &str) -> Option<&BTreeMap<Node, Node>> {
        self.maps.get(label)
    }

    pub fn target(&self, label: &str, source: &Node) -> Option<&Node> {
        self.maps.get(label)?.get(source)
    }

    /// Nodes on which `label` is defined.
    pub fn domain(&self, label: &str) -> BTreeSet<Node> {
        self.maps
            .get(label)
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn image(&self, label: &str) -> BTreeSet<Node> {
        self.maps
            .get(label)
            .map(|m| m.values().cloned().collect())
            .unwrap_or_default()
    }

    /// Sources mapped onto `target` by `label`.
    pub fn preimage(&self, label: &str, target: &Node) -> Vec<Node> {
        self.maps
            .get(label)
            .map(|m| m.iter().filter(|(_, t)| *t == target).map(|(s, _)| s.clone()).collect())
            .unwrap_or_default()
    }

    pub fn out_edges<'a>(&'a self, node: &'a Node) -> impl Iterator<Item = MapEdge> + 'a {
        self.maps.iter().filter_map(move |(label, map)| {
            map.get(node).map(|target| MapEdge {
                label: label.clone(),
                source: node.clone(),
                target: target.clone(),
            })
        })
    }

    pub fn in_edges<'a>(&'a self, node: &'a Node) -> impl Iterator<Item = MapEdge> + 'a {
        self.maps.iter().flat_map(move |(label, map)| {
            map.iter().filter(move |(_, t)| *t == node).map(move |(s, t)| MapEdge {
                label: label.clone(),
                source: s.clone(),
                target: t.clone(),
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(doc: &str, start: usize, end: usize) -> Region {
        Region::new(doc, start, end).unwrap()
    }

    #[test]
    fn containment_is_strict_and_per_document() {
        assert!(region_contains(&r("d1", 0, 100), &r("d1", 10, 20)));
        assert!(!region_contains(&r("d1", 10, 20), &r("d1", 10, 20)));
        assert!(!region_contains(&r("d1", 0, 100), &r("d2", 5, 9)));
        assert!(!region_contains(&r("d1", 10, 20), &r("d1", 0, 100)));
        assert!(region_contains(&r("d1", 0, 20), &r("d1", 0, 19)));
    }

    #[test]
    fn empty_region_rejected() {
        assert!(matches!(Region::new("d", 3, 3), Err(ModelError::EmptySpan(_))));
        assert!(matches!(Region::new("d", 4, 3), Err(ModelError::EmptySpan(_))));
    }

    #[test]
    fn node_key_round_trip() {
        let node = Node(r("a:b", 3, 17));
        assert_eq!(node.key(), "a:b:3-17");
        assert_eq!(node.key().parse::<Node>().unwrap(), node);
        assert!("nodoc".parse::<Node>().is_err());
        assert!("d:5-5".parse::<Node>().is_err());
        assert!("d:x-5".parse::<Node>().is_err());
        assert!(":1-2".parse::<Node>().is_err());
    }

    #[test]
    fn forward_edge_points_from_mention_to_entity() {
        let mut g = LabeledGraph::with_labels([LabelDecl::forward("class")]).unwrap();
        let dog = r("d", 4, 7);
        let para = r("d", 0, 40);
        assert!(g
            .add_annotation(&Annotation::new("class", dog.clone(), para.clone()))
            .unwrap());
        let edge = g.edges().next().unwrap();
        assert_eq!(edge.source, Node(dog));
        assert_eq!(edge.target, Node(para));
    }

    #[test]
    fn backward_edges_may_share_a_target() {
        let mut g = LabeledGraph::with_labels([LabelDecl::backward("color")]).unwrap();
        let red = r("d", 10, 13);
        let bag1 = r("d", 0, 20);
        let bag2 = r("d", 5, 30);
        g.add_annotation(&Annotation::new("color", red.clone(), bag1.clone()))
            .unwrap();
        g.add_annotation(&Annotation::new("color", red.clone(), bag2.clone()))
            .unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.target("color", &Node(bag1)), Some(&Node(red.clone())));
        assert_eq!(g.target("color", &Node(bag2)), Some(&Node(red.clone())));
        assert_eq!(g.preimage("color", &Node(red)).len(), 2);
    }

    #[test]
    fn second_target_under_same_label_is_rejected() {
        let mut g = LabeledGraph::with_labels([LabelDecl::forward("class")]).unwrap();
        let dog = r("d", 4, 7);
        g.add_annotation(&Annotation::new("class", dog.clone(), r("d", 0, 40)))
            .unwrap();
        let err = g
            .add_annotation(&Annotation::new("class", dog, r("d", 2, 50)))
            .unwrap_err();
        assert!(matches!(err, ModelError::MapNotWellDefined(_)));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn duplicate_annotation_is_idempotent() {
        let mut g = LabeledGraph::with_labels([LabelDecl::forward("class")]).unwrap();
        let ann = Annotation::new("class", r("d", 4, 7), r("d", 0, 40));
        assert!(g.add_annotation(&ann).unwrap());
        let before = g.clone();
        assert!(!g.add_annotation(&ann).unwrap());
        assert_eq!(g, before);
    }

    #[test]
    fn undeclared_label_and_bad_nesting() {
        let mut g = LabeledGraph::with_labels([LabelDecl::forward("class")]).unwrap();
        let err = g
            .add_annotation(&Annotation::new("kind", r("d", 4, 7), r("d", 0, 40)))
            .unwrap_err();
        assert_eq!(err, ModelError::UnknownLabel("kind".into()));
        let err = g
            .add_annotation(&Annotation::new("class", r("d", 5, 30), r("d", 10, 40)))
            .unwrap_err();
        assert!(matches!(err, ModelError::BadNesting { .. }));
        let err = g
            .add_annotation(&Annotation::new("class", r("d", 5, 30), r("d", 5, 30)))
            .unwrap_err();
        assert!(matches!(err, ModelError::BadNesting { .. }));
        assert_eq!(g.node_count(), 0);
    }

    #[test]
    fn label_declarations_are_checked() {
        let mut g = LabeledGraph::new();
        assert_eq!(g.declare_label(LabelDecl::forward("")), Err(ModelError::EmptyLabelName));
        g.declare_label(LabelDecl::forward("a")).unwrap();
        assert_eq!(
            g.declare_label(LabelDecl::backward("a")),
            Err(ModelError::DuplicateLabel("a".into()))
        );
    }

    #[test]
    fn in_and_out_edges() {
        let mut g = LabeledGraph::with_labels([LabelDecl::forward("owning"), LabelDecl::backward("color")]).unwrap();
        let bag = r("d", 0, 50);
        g.add_annotation(&Annotation::new("owning", r("d", 2, 7), bag.clone()))
            .unwrap();
        g.add_annotation(&Annotation::new("color", r("d", 20, 25), bag.clone()))
            .unwrap();
        let bag = Node(bag);
        assert_eq!(g.in_edges(&bag).count(), 1);
        assert_eq!(g.out_edges(&bag).count(), 1);
    }
}
