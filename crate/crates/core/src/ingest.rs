//! Dataset JSON: parsing, validation, canonical serialization and graph
//! construction.
//!
//! ```json
//! {
//!   "documents":   [ { "id": "d", "text": "..." } ],
//!   "labels":      [ { "name": "class", "direction": "forward" } ],
//!   "annotations": [ { "doc": "d", "label": "class",
//!                      "mention": [4, 7], "entity": [0, 40] } ]
//! }
//! ```
//!
//! Offsets are byte offsets, half-open.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Annotation, Document, LabelDecl, LabeledGraph, MapConflict, ModelError, Node, Region};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invalid dataset: {}", summarize(.0))]
    Invalid(Vec<Finding>),
    #[error("map `{label}` is not well defined: annotations {first} and {second} give {source_node} two targets")]
    MapNotWellDefined {
        label: String,
        source_node: Node,
        first: usize,
        second: usize,
    },
}

fn summarize(findings: &[Finding]) -> String {
    match findings {
        [] => "no findings".to_string(),
        [one] => one.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more)", rest.len()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    MalformedInput,
    DuplicateDocId,
    DuplicateLabelName,
    EmptyLabelName,
    UnknownDocument,
    UnknownLabel,
    EmptySpan,
    SpanOutOfBounds,
    BadNesting,
    MapNotWellDefined,
}

/// One validation problem. `annotations` holds input indices of the
/// annotations involved (empty for document/label level problems).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub annotations: Vec<usize>,
    pub message: String,
}

impl Finding {
    fn new(kind: FindingKind, annotations: Vec<usize>, message: impl Into<String>) -> Self {
        Finding {
            kind,
            annotations,
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = serde_json::to_value(self.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        write!(f, "{kind}: {}", self.message)
    }
}

/// Documents, label declarations and annotations, as read from a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    pub documents: Vec<Document>,
    pub labels: Vec<LabelDecl>,
    pub annotations: Vec<Annotation>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireDataset {
    documents: Vec<Document>,
    labels: Vec<LabelDecl>,
    annotations: Vec<WireAnnotation>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireAnnotation {
    doc: String,
    label: String,
    mention: [usize; 2],
    entity: [usize; 2],
}

impl From<WireDataset> for AnnotationSet {
    fn from(wire: WireDataset) -> Self {
        let annotations = wire
            .annotations
            .into_iter()
            .map(|a| {
                let region = |[start, end]: [usize; 2]| Region {
                    doc: a.doc.clone(),
                    start,
                    end,
                };
                Annotation::new(a.label.clone(), region(a.mention), region(a.entity))
            })
            .collect();
        AnnotationSet {
            documents: wire.documents,
            labels: wire.labels,
            annotations,
        }
    }
}

impl From<&AnnotationSet> for WireDataset {
    fn from(set: &AnnotationSet) -> Self {
        WireDataset {
            documents: set.documents.clone(),
            labels: set.labels.clone(),
            annotations: set
                .annotations
                .iter()
                .map(|a| WireAnnotation {
                    doc: a.mention.doc.clone(),
                    label: a.label.clone(),
                    mention: [a.mention.start, a.mention.end],
                    entity: [a.entity.start, a.entity.end],
                })
                .collect(),
        }
    }
}

fn canonical_annotation_key(a: &Annotation) -> (&str, usize, usize, &str, usize, usize) {
    (
        &a.mention.doc,
        a.mention.start,
        a.mention.end,
        &a.label,
        a.entity.start,
        a.entity.end,
    )
}

impl AnnotationSet {
    /// Sorted copy: documents by id, labels by name, annotations by
    /// `(doc, mention.start, mention.end, label)` with exact duplicates removed.
    pub fn canonical(&self) -> AnnotationSet {
        let mut set = self.clone();
        set.documents.sort_by(|a, b| a.id.cmp(&b.id));
        set.labels.sort_by(|a, b| a.name.cmp(&b.name));
        set.annotations
            .sort_by(|a, b| canonical_annotation_key(a).cmp(&canonical_annotation_key(b)));
        set.annotations.dedup();
        set
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Surface text of a region, when its document is present.
    pub fn surface(&self, region: &Region) -> Option<&str> {
        self.document(&region.doc)?.slice(region)
    }
}

/// Deserializes a dataset without validating it.
pub fn parse_unchecked(input: &[u8]) -> Result<AnnotationSet, IngestError> {
    let wire: WireDataset = serde_json::from_slice(input).map_err(|e| IngestError::Malformed(e.to_string()))?;
    Ok(wire.into())
}

/// Parses and validates a dataset. Map functionality is not checked here;
/// that is `build_graph`'s job.
pub fn parse_dataset(input: &[u8]) -> Result<AnnotationSet, IngestError> {
    let set = parse_unchecked(input)?;
    let findings = structural_findings(&set);
    if findings.is_empty() {
        Ok(set)
    } else {
        Err(IngestError::Invalid(findings))
    }
}

/// Canonical JSON text for a dataset.
pub fn serialize(set: &AnnotationSet) -> String {
    let canonical = set.canonical();
    let mut out =
        serde_json::to_string_pretty(&WireDataset::from(&canonical)).expect("dataset serialization is infallible");
    out.push('\n');
    out
}

/// Every problem in the set, in deterministic order. Empty iff
/// [`build_graph`] succeeds.
pub fn validate(set: &AnnotationSet) -> Vec<Finding> {
    let mut findings = structural_findings(set);
    let checked: BTreeSet<usize> = findings.iter().flat_map(|f| f.annotations.iter().copied()).collect();
    findings.extend(functionality_findings(set, &checked));
    findings
}

fn structural_findings(set: &AnnotationSet) -> Vec<Finding> {
    let mut findings = Vec::new();

    let mut docs: HashMap<&str, &Document> = HashMap::new();
    for doc in &set.documents {
        if docs.insert(&doc.id, doc).is_some() {
            findings.push(Finding::new(
                FindingKind::DuplicateDocId,
                vec![],
                format!("document id `{}` appears more than once", doc.id),
            ));
        }
    }

    let mut labels: HashMap<&str, &LabelDecl> = HashMap::new();
    for decl in &set.labels {
        if decl.name.is_empty() {
            findings.push(Finding::new(
                FindingKind::EmptyLabelName,
                vec![],
                "label name must not be empty",
            ));
        } else if labels.insert(&decl.name, decl).is_some() {
            findings.push(Finding::new(
                FindingKind::DuplicateLabelName,
                vec![],
                format!("label `{}` is declared more than once", decl.name),
            ));
        }
    }

    for (index, ann) in set.annotations.iter().enumerate() {
        let mut spans_ok = true;
        if !labels.contains_key(ann.label.as_str()) {
            findings.push(Finding::new(
                FindingKind::UnknownLabel,
                vec![index],
                format!("annotation {index}: label `{}` is not declared", ann.label),
            ));
        }
        let Some(doc) = docs.get(ann.mention.doc.as_str()) else {
            findings.push(Finding::new(
                FindingKind::UnknownDocument,
                vec![index],
                format!("annotation {index}: document `{}` does not exist", ann.mention.doc),
            ));
            continue;
        };
        for (role, region) in [("mention", &ann.mention), ("entity", &ann.entity)] {
            if region.is_empty() {
                spans_ok = false;
                findings.push(Finding::new(
                    FindingKind::EmptySpan,
                    vec![index],
                    format!(
                        "annotation {index}: {role} span [{}, {}) is empty",
                        region.start, region.end
                    ),
                ));
            } else if region.end > doc.len() {
                spans_ok = false;
                findings.push(Finding::new(
                    FindingKind::SpanOutOfBounds,
                    vec![index],
                    format!(
                        "annotation {index}: {role} span [{}, {}) exceeds document `{}` of {} bytes",
                        region.start,
                        region.end,
                        doc.id,
                        doc.len()
                    ),
                ));
            }
        }
        if spans_ok {
            if let Err(ModelError::BadNesting { mention, entity }) = ann.check_nesting() {
                findings.push(Finding::new(
                    FindingKind::BadNesting,
                    vec![index],
                    format!(
                        "annotation {index}: mention [{}, {}) is not strictly inside entity [{}, {})",
                        mention.start, mention.end, entity.start, entity.end
                    ),
                ));
            }
        }
    }
    findings
}

/// One finding per `(label, source)` that is sent to more than one target.
/// Annotations already flagged structurally are skipped.
fn functionality_findings(set: &AnnotationSet, skip: &BTreeSet<usize>) -> Vec<Finding> {
    let directions: HashMap<&str, _> = set.labels.iter().map(|l| (l.name.as_str(), l.direction)).collect();
    let mut groups: BTreeMap<(String, Node), BTreeMap<Node, Vec<usize>>> = BTreeMap::new();
    for (index, ann) in set.annotations.iter().enumerate() {
        if skip.contains(&index) {
            continue;
        }
        let Some(&direction) = directions.get(ann.label.as_str()) else {
            continue;
        };
        let (source, target) = ann.orient(direction);
        groups
            .entry((ann.label.clone(), source))
            .or_default()
            .entry(target)
            .or_default()
            .push(index);
    }
    let mut findings: Vec<Finding> = groups
        .into_iter()
        .filter(|(_, targets)| targets.len() > 1)
        .map(|((label, source), targets)| {
            let mut involved: Vec<usize> = targets.values().flatten().copied().collect();
            involved.sort_unstable();
            let listed = targets.keys().map(Node::key).collect::<Vec<_>>().join(", ");
            let indices = involved.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
            Finding::new(
                FindingKind::MapNotWellDefined,
                involved,
                format!("annotations {indices}: label `{label}` maps {source} to several targets ({listed})"),
            )
        })
        .collect();
    findings.sort_by(|a, b| a.annotations.cmp(&b.annotations));
    findings
}

/// Builds the map graph from a validated set, adding annotations in input order.
pub fn build_graph(set: &AnnotationSet) -> Result<LabeledGraph, IngestError> {
    let structural = structural_findings(set);
    if !structural.is_empty() {
        return Err(IngestError::Invalid(structural));
    }
    let mut graph = LabeledGraph::with_labels(set.labels.iter().cloned()).map_err(|e| {
        IngestError::Invalid(vec![Finding::new(
            FindingKind::DuplicateLabelName,
            vec![],
            e.to_string(),
        )])
    })?;
    let mut first_use: HashMap<(String, Node), usize> = HashMap::new();
    for (index, ann) in set.annotations.iter().enumerate() {
        match graph.add_annotation(ann) {
            Ok(_) => {
                let direction = graph.direction(&ann.label).expect("label checked above");
                let (source, _) = ann.orient(direction);
                first_use.entry((ann.label.clone(), source)).or_insert(index);
            }
            Err(ModelError::MapNotWellDefined(conflict)) => {
                let MapConflict { label, source_node, .. } = *conflict;
                let first = first_use[&(label.clone(), source_node.clone())];
                return Err(IngestError::MapNotWellDefined {
                    label,
                    source_node,
                    first,
                    second: index,
                });
            }
            Err(other) => {
                return Err(IngestError::Invalid(vec![Finding::new(
                    FindingKind::BadNesting,
                    vec![index],
                    other.to_string(),
                )]))
            }
        }
    }
    Ok(graph)
}
