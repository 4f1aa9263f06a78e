//! Entropy of quotient sets and the information lost or propagated by maps.
//!
//! All quantities are in nats. Entropy of a partition is `ln |classes|`;
//! the loss of a map over universe `X` is `ln |X| - ln |classes|`, and
//! `exp(-loss)` is the surviving fraction `|classes| / |X|`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{LabeledGraph, Node};
use crate::partition::{composite_images, composite_partition, Partition, PartitionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InfoError {
    #[error("entropy of an empty universe is undefined")]
    EmptyUniverse,
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

pub fn entropy<T: Ord + Clone>(p: &Partition<T>) -> Result<f64, InfoError> {
    if p.class_count() == 0 {
        return Err(InfoError::EmptyUniverse);
    }
    Ok((p.class_count() as f64).ln())
}

pub fn entropy_loss<T: Ord + Clone>(p: &Partition<T>) -> Result<f64, InfoError> {
    if p.universe_size() == 0 {
        return Err(InfoError::EmptyUniverse);
    }
    Ok(log_ratio(p.universe_size(), p.class_count()))
}

/// `ln(larger) - ln(smaller)`, computed as a single log so that equal counts
/// give exactly zero.
fn log_ratio(larger: usize, smaller: usize) -> f64 {
    if smaller == 0 {
        f64::INFINITY
    } else if larger == smaller {
        0.0
    } else {
        (larger as f64).ln() - (smaller as f64).ln()
    }
}

/// `exp(-loss)`; zero for an infinite loss.
pub fn propagation_probability(loss: f64) -> f64 {
    (-loss).exp()
}

/// Outcome of comparing two partitions of one universe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dependency {
    pub from_classes: usize,
    pub to_classes: usize,
    pub intersection_count: usize,
    /// `ln |from| - ln |from ->∩ to|`, infinite when nothing intersects.
    pub loss: f64,
}

impl Dependency {
    /// `ln` of the intersection count; `-inf` when it is zero.
    pub fn entropy(&self) -> f64 {
        if self.intersection_count == 0 {
            f64::NEG_INFINITY
        } else {
            (self.intersection_count as f64).ln()
        }
    }

    /// Fraction of the `from` property that carries over to `to`.
    pub fn ratio(&self) -> f64 {
        propagation_probability(self.loss)
    }

    /// No class of `from` lies inside a class of `to`.
    pub fn terminated(&self) -> bool {
        self.intersection_count == 0
    }

    pub fn relevancy(&self) -> Option<f64> {
        relevancy_score(self.intersection_count)
    }
}

pub fn dependency<T: Ord + Clone>(from: &Partition<T>, to: &Partition<T>) -> Result<Dependency, InfoError> {
    let count = from.directed_intersection_count(to)?;
    if from.class_count() == 0 {
        return Err(InfoError::EmptyUniverse);
    }
    Ok(Dependency {
        from_classes: from.class_count(),
        to_classes: to.class_count(),
        intersection_count: count,
        loss: log_ratio(from.class_count(), count),
    })
}

pub fn dependency_loss<T: Ord + Clone>(from: &Partition<T>, to: &Partition<T>) -> Result<f64, InfoError> {
    dependency(from, to).map(|d| d.loss)
}

/// `(1/n) ln n` for `n >= 1`; `None` when `n = 0`.
pub fn relevancy_score(count: usize) -> Option<f64> {
    match count {
        0 => None,
        1 => Some(0.0),
        n => Some((n as f64).ln() / n as f64),
    }
}

/// Loss of the composite map along `path` over `universe`.
pub fn composite_loss<S: AsRef<str>>(
    graph: &LabeledGraph,
    path: &[S],
    universe: &BTreeSet<Node>,
) -> Result<f64, InfoError> {
    entropy_loss(&composite_partition(graph, path, universe)?)
}

/// Loss contributed by each step of `path`: the first is `ln |X| - ln |C_1|`,
/// step `i` is `ln |C_{i-1}| - ln |C_i|`. They sum to [`composite_loss`].
pub fn incremental_losses<S: AsRef<str>>(
    graph: &LabeledGraph,
    path: &[S],
    universe: &BTreeSet<Node>,
) -> Result<Vec<f64>, InfoError> {
    if universe.is_empty() {
        return Err(InfoError::EmptyUniverse);
    }
    // validates the full path once, so prefixes below cannot fail
    composite_images(graph, path, universe)?;
    let mut previous = universe.len();
    let mut steps = Vec::with_capacity(path.len());
    for end in 1..=path.len() {
        let classes = composite_partition(graph, &path[..end], universe)?.class_count();
        steps.push(log_ratio(previous, classes));
        previous = classes;
    }
    Ok(steps)
}

/// Summary numbers for one partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoReport {
    pub universe_size: usize,
    pub class_count: usize,
    pub entropy: f64,
    pub entropy_loss: f64,
    pub propagation: f64,
    pub relevancy: Option<f64>,
}

impl InfoReport {
    pub fn of<T: Ord + Clone>(p: &Partition<T>) -> Result<Self, InfoError> {
        let entropy = entropy(p)?;
        let entropy_loss = entropy_loss(p)?;
        Ok(InfoReport {
            universe_size: p.universe_size(),
            class_count: p.class_count(),
            entropy,
            entropy_loss,
            propagation: propagation_probability(entropy_loss),
            relevancy: relevancy_score(p.class_count()),
        })
    }
}
