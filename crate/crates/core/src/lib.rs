//! Labels on text as maps between regions, and the information they carry.
//!
//! A label maps a mention (a text region) to the entity it belongs to (a
//! larger region containing it), or the other way round. Annotations build
//! a [`LabeledGraph`]; the fibers of each label partition its domain, and
//! counting classes gives entropy, information loss, dependency between
//! properties and distances along chains of maps.

pub mod cli;
pub mod distance;
pub mod infoflow;
pub mod ingest;
pub mod model;
pub mod partition;
pub mod report;
pub mod synth;

pub use distance::{path_distance, Distance, DistanceError, Hop};
pub use infoflow::{
    composite_loss, dependency, dependency_loss, entropy, entropy_loss, incremental_losses, propagation_probability,
    relevancy_score, Dependency, InfoError, InfoReport,
};
pub use ingest::{build_graph, parse_dataset, serialize, validate, AnnotationSet, Finding, FindingKind, IngestError};
pub use model::{
    region_contains, Annotation, Direction, Document, LabelDecl, LabeledGraph, MapConflict, MapEdge, ModelError, Node,
    Region,
};
pub use partition::{
    common_domain, composite_domain, composite_partition, fibers, product_partition, Partition, PartitionError,
};
pub use synth::{generate_universe, oracle_counts, RuleSpec, SynthError};
