//! Quotient sets of a finite universe.
//!
//! A map `f` defined on a universe `X` splits it into fibers, the classes of
//! `a ~ b iff f(a) = f(b)`. The resulting [`Partition`] is what entropy and
//! dependency measures are computed on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{LabeledGraph, Node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("label `{label}` (step {step}) is undefined on {}", .nodes.join(", "))]
    DomainGap {
        step: usize,
        label: String,
        nodes: Vec<String>,
    },
    #[error("label `{0}` is not declared")]
    UnknownLabel(String),
    #[error("label path is empty")]
    EmptyPath,
    #[error("partitions are over different universes ({left} and {right} elements)")]
    UniverseMismatch { left: usize, right: usize },
    #[error("classes are not a partition: {0}")]
    NotAPartition(String),
}

/// A partition of `universe` into non-empty disjoint classes.
///
/// Canonical form: elements sorted within each class, classes sorted by their
/// smallest element. Two partitions of the same universe are equal iff they
/// have the same classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition<T> {
    universe: Vec<T>,
    classes: Vec<Vec<T>>,
}

impl<T: Ord + Clone> Partition<T> {
    /// Groups `universe` by `key`.
    pub fn by_key<K, I, F>(universe: I, mut key: F) -> Self
    where
        K: Ord,
        I: IntoIterator<Item = T>,
        F: FnMut(&T) -> K,
    {
        let elements: BTreeSet<T> = universe.into_iter().collect();
        let mut groups: BTreeMap<K, Vec<T>> = BTreeMap::new();
        for element in &elements {
            groups.entry(key(element)).or_default().push(element.clone());
        }
        Self::canonical(elements.into_iter().collect(), groups.into_values().collect())
    }

    pub fn from_classes<I, C>(classes: I) -> Result<Self, PartitionError>
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = T>,
    {
        let mut universe = BTreeSet::new();
        let mut out = Vec::new();
        for class in classes {
            let class: Vec<T> = class.into_iter().collect();
            if class.is_empty() {
                return Err(PartitionError::NotAPartition("empty class".into()));
            }
            for element in &class {
                if !universe.insert(element.clone()) {
                    return Err(PartitionError::NotAPartition(
                        "an element appears in two classes".into(),
                    ));
                }
            }
            out.push(class);
        }
        Ok(Self::canonical(universe.into_iter().collect(), out))
    }

    /// Every element in its own class.
    pub fn discrete<I: IntoIterator<Item = T>>(universe: I) -> Self {
        let elements: BTreeSet<T> = universe.into_iter().collect();
        let classes = elements.iter().map(|e| vec![e.clone()]).collect();
        Self::canonical(elements.into_iter().collect(), classes)
    }

    /// A single class holding everything (none for an empty universe).
    pub fn trivial<I: IntoIterator<Item = T>>(universe: I) -> Self {
        let elements: Vec<T> = universe.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let classes = if elements.is_empty() {
            vec![]
        } else {
            vec![elements.clone()]
        };
        Self::canonical(elements, classes)
    }

    fn canonical(universe: Vec<T>, mut classes: Vec<Vec<T>>) -> Self {
        for class in &mut classes {
            class.sort();
        }
        classes.sort_by(|a, b| a[0].cmp(&b[0]));
        let partition = Partition { universe, classes };
        debug_assert!(partition.check().is_ok());
        partition
    }

    pub fn universe(&self) -> &[T] {
        &self.universe
    }

    pub fn universe_size(&self) -> usize {
        self.universe.len()
    }

    pub fn classes(&self) -> &[Vec<T>] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Disjointness, coverage, non-emptiness and canonical order.
    pub fn check(&self) -> Result<(), PartitionError> {
        let bad = |why: &str| Err(PartitionError::NotAPartition(why.to_string()));
        if self.universe.windows(2).any(|w| w[0] >= w[1]) {
            return bad("universe is not strictly sorted");
        }
        let mut seen = BTreeSet::new();
        for class in &self.classes {
            if class.is_empty() {
                return bad("empty class");
            }
            if class.windows(2).any(|w| w[0] >= w[1]) {
                return bad("class is not strictly sorted");
            }
            for element in class {
                if !seen.insert(element) {
                    return bad("classes overlap");
                }
            }
        }
        if self.classes.windows(2).any(|w| w[0][0] >= w[1][0]) {
            return bad("classes are not ordered by their minimum");
        }
        if seen.len() != self.universe.len() || !self.universe.iter().all(|e| seen.contains(e)) {
            return bad("classes do not cover the universe");
        }
        Ok(())
    }

    /// Class index for every element.
    fn class_index(&self) -> BTreeMap<&T, usize> {
        self.classes
            .iter()
            .enumerate()
            .flat_map(|(i, class)| class.iter().map(move |e| (e, i)))
            .collect()
    }

    pub fn class_of(&self, element: &T) -> Option<&[T]> {
        self.classes
            .iter()
            .find(|class| class.binary_search(element).is_ok())
            .map(Vec::as_slice)
    }

    fn same_universe(&self, other: &Self) -> Result<(), PartitionError> {
        if self.universe == other.universe {
            Ok(())
        } else {
            Err(PartitionError::UniverseMismatch {
                left: self.universe.len(),
                right: other.universe.len(),
            })
        }
    }

    /// Coarsest common refinement: classes are the non-empty intersections of
    /// a class of `self` with a class of `other`.
    pub fn meet(&self, other: &Self) -> Result<Self, PartitionError> {
        self.same_universe(other)?;
        let left = self.class_index();
        let right = other.class_index();
        Ok(Self::by_key(self.universe.iter().cloned(), |e| (left[e], right[e])))
    }

    /// Number of classes of `self` wholly contained in some class of `other`.
    ///
    /// Asymmetric: `A` ranges over `self`, `B` over `other`.
    pub fn directed_intersection_count(&self, other: &Self) -> Result<usize, PartitionError> {
        self.same_universe(other)?;
        let right = other.class_index();
        Ok(self
            .classes
            .iter()
            .filter(|class| {
                let home = right[&class[0]];
                class.iter().all(|e| right[e] == home)
            })
            .count())
    }

    /// True when every class of `self` lies inside a class of `other`.
    pub fn refines(&self, other: &Self) -> Result<bool, PartitionError> {
        Ok(self.directed_intersection_count(other)? == self.class_count())
    }
}

impl<T: fmt::Display> Partition<T> {
    pub fn to_json(&self) -> PartitionJson {
        PartitionJson {
            universe_size: self.universe.len(),
            classes: self
                .classes
                .iter()
                .map(|class| class.iter().map(ToString::to_string).collect())
                .collect(),
        }
    }
}

/// Report form: `{ "universe_size": n, "classes": [["doc:start-end", ...], ...] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionJson {
    pub universe_size: usize,
    pub classes: Vec<Vec<String>>,
}

fn label_map<'g>(graph: &'g LabeledGraph, label: &str) -> Result<&'g BTreeMap<Node, Node>, PartitionError> {
    graph
        .map(label)
        .ok_or_else(|| PartitionError::UnknownLabel(label.to_string()))
}

/// Fibers of `label` over `universe`.
pub fn fibers(graph: &LabeledGraph, label: &str, universe: &BTreeSet<Node>) -> Result<Partition<Node>, PartitionError> {
    composite_partition(graph, &[label], universe)
}

/// Fibers of the composite of `path` (applied first to last), pulled back to
/// `universe`: two nodes share a class iff the whole path takes them to the
/// same final node.
pub fn composite_partition<S: AsRef<str>>(
    graph: &LabeledGraph,
    path: &[S],
    universe: &BTreeSet<Node>,
) -> Result<Partition<Node>, PartitionError> {
    let images = composite_images(graph, path, universe)?;
    Ok(Partition::by_key(universe.iter().cloned(), |node| images[node].clone()))
}

/// Final node reached by each universe element along `path`.
pub(crate) fn composite_images<'a, S: AsRef<str>>(
    graph: &LabeledGraph,
    path: &[S],
    universe: &'a BTreeSet<Node>,
) -> Result<BTreeMap<&'a Node, Node>, PartitionError> {
    if path.is_empty() {
        return Err(PartitionError::EmptyPath);
    }
    let maps = path
        .iter()
        .map(|label| label_map(graph, label.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut current: BTreeMap<&Node, Node> = universe.iter().map(|n| (n, n.clone())).collect();
    for (step, (label, map)) in path.iter().zip(maps).enumerate() {
        let level: BTreeSet<&Node> = current.values().collect();
        let gap: Vec<String> = level
            .iter()
            .filter(|n| !map.contains_key(*n))
            .map(|n| n.key())
            .collect();
        if !gap.is_empty() {
            return Err(PartitionError::DomainGap {
                step,
                label: label.as_ref().to_string(),
                nodes: gap,
            });
        }
        for image in current.values_mut() {
            *image = map[&*image].clone();
        }
    }
    Ok(current)
}

/// Universe elements on which the whole composite of `path` is defined.
pub fn composite_domain<S: AsRef<str>>(graph: &LabeledGraph, path: &[S]) -> Result<BTreeSet<Node>, PartitionError> {
    let Some(first) = path.first() else {
        return Err(PartitionError::EmptyPath);
    };
    let maps = path
        .iter()
        .map(|label| label_map(graph, label.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(label_map(graph, first.as_ref())?
        .keys()
        .filter(|start| {
            let mut node = (*start).clone();
            for map in &maps {
                match map.get(&node) {
                    Some(next) => node = next.clone(),
                    None => return false,
                }
            }
            true
        })
        .cloned()
        .collect())
}

/// Nodes in the domain of every label, plus how many nodes lie in the domain
/// of some but not all of them.
pub fn common_domain<S: AsRef<str>>(
    graph: &LabeledGraph,
    labels: &[S],
) -> Result<(BTreeSet<Node>, usize), PartitionError> {
    let mut domains = labels
        .iter()
        .map(|label| label_map(graph, label.as_ref()).map(|m| m.keys().cloned().collect::<BTreeSet<_>>()));
    let Some(first) = domains.next() else {
        return Err(PartitionError::EmptyPath);
    };
    let first = first?;
    let mut common = first.clone();
    let mut union = first;
    for domain in domains {
        let domain = domain?;
        common = common.intersection(&domain).cloned().collect();
        union.extend(domain);
    }
    let excluded = union.len() - common.len();
    Ok((common, excluded))
}

/// Meet of the fibers of several labels over a shared universe.
pub fn product_partition<S: AsRef<str>>(
    graph: &LabeledGraph,
    labels: &[S],
    universe: &BTreeSet<Node>,
) -> Result<Partition<Node>, PartitionError> {
    let mut parts = labels.iter().map(|label| fibers(graph, label.as_ref(), universe));
    let Some(first) = parts.next() else {
        return Err(PartitionError::EmptyPath);
    };
    parts.try_fold(first?, |acc, next| acc.meet(&next?))
}
