//! `labelflow` command line.
//!
//! Every command prints one JSON document on stdout. Exit codes: 0 success,
//! 1 validation failure (details in the payload), 2 usage error, 3 internal
//! error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::distance::{path_distance, DistanceError};
use crate::infoflow::{dependency, incremental_losses, InfoReport};
use crate::ingest::{
    build_graph, parse_unchecked, serialize, validate, AnnotationSet, Finding, FindingKind, IngestError,
};
use crate::model::{LabeledGraph, Node};
use crate::partition::{
    common_domain, composite_domain, composite_partition, fibers, product_partition, PartitionError,
};
use crate::report;
use crate::synth::{entity_table, generate_universe, RuleSpec, SynthError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "labelflow",
    version,
    about = "Information flow through labels on text regions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a dataset and list every problem found.
    Validate {
        /// Annotation dataset (JSON).
        dataset: PathBuf,
    },
    /// Export the map graph.
    Graph {
        /// Annotation dataset (JSON).
        dataset: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value_t = GraphFormat::Json)]
        format: GraphFormat,
    },
    /// Entropy and information loss of one label or a composite path.
    Entropy(EntropyArgs),
    /// How much one property (or a product of several) determines another.
    Depend {
        /// Annotation dataset (JSON).
        dataset: PathBuf,
        /// Determining label, or a comma-separated list whose product is used.
        #[arg(long, value_delimiter = ',', required = true)]
        from: Vec<String>,
        /// Determined label.
        #[arg(long)]
        to: String,
    },
    /// Minimum information loss between two nodes, given as doc:start-end.
    Distance {
        /// Annotation dataset (JSON).
        dataset: PathBuf,
        /// Start node key, e.g. `doc:12-17`.
        #[arg(long)]
        from: String,
        /// End node key.
        #[arg(long)]
        to: String,
    },
    /// Generate a dataset from a rule spec.
    Synth {
        /// Rule spec (JSON).
        rulespec: PathBuf,
        /// Where to write the generated dataset.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct EntropyArgs {
    /// Annotation dataset (JSON).
    dataset: PathBuf,
    /// Single label whose fibers are measured.
    #[arg(long, conflicts_with = "path", required_unless_present = "path")]
    label: Option<String>,
    /// Comma-separated labels applied in order, first label first.
    #[arg(long, value_delimiter = ',')]
    path: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphFormat {
    Json,
    Dot,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandResult {
    fn json(exit_code: i32, payload: Value) -> Self {
        let mut stdout = serde_json::to_string_pretty(&payload).expect("payload serializes");
        stdout.push('\n');
        CommandResult {
            exit_code,
            stdout,
            stderr: String::new(),
        }
    }

    fn text(exit_code: i32, stdout: String) -> Self {
        CommandResult {
            exit_code,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(exit_code: i32, kind: &str, message: impl Into<String>) -> Self {
        let message = message.into();
        let mut result = Self::json(exit_code, report::error(kind, message.clone()));
        result.stderr = format!("labelflow: {message}\n");
        result
    }

    fn with_diagnostic(mut self, message: impl AsRef<str>) -> Self {
        self.stderr.push_str(&format!("labelflow: {}\n", message.as_ref()));
        self
    }
}

/// Runs one command. `args` includes the program name.
pub fn run<I, T>(args: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let rendered = err.render().to_string();
            return if err.use_stderr() {
                CommandResult {
                    exit_code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: rendered,
                }
            } else {
                CommandResult::text(EXIT_OK, rendered)
            };
        }
    };
    match cli.command {
        Command::Validate { dataset } => cmd_validate(&dataset),
        Command::Graph { dataset, format } => cmd_graph(&dataset, format),
        Command::Entropy(args) => match (args.label, args.path) {
            (Some(label), None) => cmd_entropy(&args.dataset, &[label], false),
            (None, Some(path)) => cmd_entropy(&args.dataset, &path, true),
            _ => CommandResult::fail(EXIT_USAGE, "usage", "give exactly one of --label or --path"),
        },
        Command::Depend { dataset, from, to } => cmd_depend(&dataset, &from, &to),
        Command::Distance { dataset, from, to } => cmd_distance(&dataset, &from, &to),
        Command::Synth { rulespec, out } => cmd_synth(&rulespec, &out),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CommandResult> {
    fs::read(path).map_err(|e| {
        CommandResult::fail(
            EXIT_USAGE,
            "unreadable_file",
            format!("cannot read {}: {e}", path.display()),
        )
    })
}

fn malformed(message: String) -> Vec<Finding> {
    vec![Finding {
        kind: FindingKind::MalformedInput,
        annotations: vec![],
        message,
    }]
}

/// Parses and validates, producing findings on failure.
fn load_checked(path: &Path) -> Result<Result<AnnotationSet, Vec<Finding>>, CommandResult> {
    let bytes = read(path)?;
    let set = match parse_unchecked(&bytes) {
        Ok(set) => set,
        Err(IngestError::Malformed(message)) => return Ok(Err(malformed(message))),
        Err(other) => return Ok(Err(malformed(other.to_string()))),
    };
    let found = validate(&set);
    Ok(if found.is_empty() { Ok(set) } else { Err(found) })
}

fn invalid(found: &[Finding]) -> CommandResult {
    CommandResult::json(EXIT_INVALID, report::findings(found))
        .with_diagnostic(format!("dataset has {} problem(s)", found.len()))
}

fn load_graph(path: &Path) -> Result<(AnnotationSet, LabeledGraph), CommandResult> {
    let set = match load_checked(path)? {
        Ok(set) => set,
        Err(found) => return Err(invalid(&found)),
    };
    match build_graph(&set) {
        Ok(graph) => Ok((set, graph)),
        Err(e) => Err(CommandResult::fail(EXIT_INTERNAL, "internal", e.to_string())),
    }
}

pub fn cmd_validate(path: &Path) -> CommandResult {
    match load_checked(path) {
        Err(result) => result,
        Ok(Ok(_)) => CommandResult::json(EXIT_OK, json!([])),
        Ok(Err(found)) => invalid(&found),
    }
}

fn cmd_graph(path: &Path, format: GraphFormat) -> CommandResult {
    let (set, graph) = match load_graph(path) {
        Ok(loaded) => loaded,
        Err(result) => return result,
    };
    match format {
        GraphFormat::Json => CommandResult::json(EXIT_OK, report::graph_json(&graph, &set)),
        GraphFormat::Dot => CommandResult::text(EXIT_OK, report::graph_dot(&graph, &set)),
    }
}

fn check_labels(graph: &LabeledGraph, labels: &[String]) -> Result<(), CommandResult> {
    match labels.iter().find(|l| !graph.has_label(l)) {
        Some(l) => Err(CommandResult::fail(
            EXIT_USAGE,
            "unknown_label",
            format!("label `{l}` is not declared"),
        )),
        None => Ok(()),
    }
}

fn partition_failure(err: PartitionError) -> CommandResult {
    match err {
        PartitionError::DomainGap { step, label, nodes } => {
            let message = format!("label `{label}` is undefined on {} node(s) at step {step}", nodes.len());
            CommandResult::json(
                EXIT_INVALID,
                json!({ "error": "domain_gap", "message": message, "step": step, "label": label, "nodes": nodes }),
            )
            .with_diagnostic(message)
        }
        PartitionError::UnknownLabel(label) => {
            CommandResult::fail(EXIT_USAGE, "unknown_label", format!("label `{label}` is not declared"))
        }
        other => CommandResult::fail(EXIT_INTERNAL, "internal", other.to_string()),
    }
}

fn empty_universe(message: String) -> CommandResult {
    CommandResult::json(EXIT_INVALID, report::error("empty_universe", message.clone())).with_diagnostic(message)
}

/// Report for a single label (`composite = false`) over its whole domain, or
/// for a composite path over the nodes where the whole path is defined.
fn cmd_entropy(path: &Path, labels: &[String], composite: bool) -> CommandResult {
    let (_, graph) = match load_graph(path) {
        Ok(loaded) => loaded,
        Err(result) => return result,
    };
    if labels.is_empty() || labels.iter().any(String::is_empty) {
        return CommandResult::fail(EXIT_USAGE, "usage", "label path is empty");
    }
    if let Err(result) = check_labels(&graph, labels) {
        return result;
    }
    let first_domain = graph.domain(&labels[0]);
    let universe = match composite_domain(&graph, labels) {
        Ok(u) => u,
        Err(e) => return partition_failure(e),
    };
    if universe.is_empty() {
        if first_domain.is_empty() {
            return empty_universe(format!("label `{}` has no edges", labels[0]));
        }
        // nothing survives the whole path: report where it breaks
        return match composite_partition(&graph, labels, &first_domain) {
            Err(e) => partition_failure(e),
            Ok(_) => CommandResult::fail(EXIT_INTERNAL, "internal", "inconsistent composite domain"),
        };
    }
    let excluded = first_domain.len() - universe.len();
    let partition = match composite_partition(&graph, labels, &universe) {
        Ok(p) => p,
        Err(e) => return partition_failure(e),
    };
    let info = match InfoReport::of(&partition) {
        Ok(info) => info,
        Err(e) => return CommandResult::fail(EXIT_INTERNAL, "internal", e.to_string()),
    };
    let query = if composite {
        json!({ "path": labels })
    } else {
        json!({ "label": labels[0] })
    };
    let mut payload = report::info(query, &info, excluded);
    if composite {
        let steps = incremental_losses(&graph, labels, &universe).unwrap_or_default();
        payload.insert(
            "step_losses_nats".into(),
            Value::Array(steps.into_iter().map(report::real).collect()),
        );
    }
    payload.insert("partition".into(), report::partition(&partition));
    CommandResult::json(EXIT_OK, Value::Object(payload))
}

fn cmd_depend(path: &Path, from: &[String], to: &str) -> CommandResult {
    let (_, graph) = match load_graph(path) {
        Ok(loaded) => loaded,
        Err(result) => return result,
    };
    let mut all: Vec<String> = from.to_vec();
    all.push(to.to_string());
    if all.iter().any(String::is_empty) {
        return CommandResult::fail(EXIT_USAGE, "usage", "empty label name");
    }
    if let Err(result) = check_labels(&graph, &all) {
        return result;
    }
    let (universe, excluded) = match common_domain(&graph, &all) {
        Ok(found) => found,
        Err(e) => return partition_failure(e),
    };
    if universe.is_empty() {
        return empty_universe(format!("labels {} share no source nodes", all.join(", ")));
    }
    let parts = product_partition(&graph, from, &universe)
        .and_then(|p_from| fibers(&graph, to, &universe).map(|p_to| (p_from, p_to)));
    let (p_from, p_to) = match parts {
        Ok(parts) => parts,
        Err(e) => return partition_failure(e),
    };
    let dep = match dependency(&p_from, &p_to) {
        Ok(dep) => dep,
        Err(e) => return CommandResult::fail(EXIT_INTERNAL, "internal", e.to_string()),
    };
    let query = json!({ "from": from, "to": to });
    let payload = report::dependency(query, universe.len(), &dep, excluded);
    CommandResult::json(EXIT_OK, Value::Object(payload))
}

fn cmd_distance(path: &Path, from: &str, to: &str) -> CommandResult {
    let (_, graph) = match load_graph(path) {
        Ok(loaded) => loaded,
        Err(result) => return result,
    };
    let mut nodes = Vec::with_capacity(2);
    for key in [from, to] {
        match key.parse::<Node>() {
            Ok(node) => nodes.push(node),
            Err(e) => return CommandResult::fail(EXIT_USAGE, "bad_node_key", e.to_string()),
        }
    }
    match path_distance(&graph, &nodes[0], &nodes[1]) {
        Ok(d) => CommandResult::json(EXIT_OK, report::distance(&nodes[0], &nodes[1], &d)),
        Err(DistanceError::UnknownNode(key)) => {
            CommandResult::fail(EXIT_USAGE, "unknown_node", format!("node {key} is not in the graph"))
        }
    }
}

fn cmd_synth(spec_path: &Path, out: &Path) -> CommandResult {
    let bytes = match read(spec_path) {
        Ok(bytes) => bytes,
        Err(result) => return result,
    };
    let spec = match RuleSpec::from_json(&bytes) {
        Ok(spec) => spec,
        Err(e) => return CommandResult::fail(EXIT_USAGE, "malformed_rulespec", e.to_string()),
    };
    let generated = generate_universe(&spec).and_then(|set| entity_table(&spec).map(|t| (set, t.entities.len())));
    let (set, entities) = match generated {
        Ok(done) => done,
        Err(e) => {
            let (kind, combination) = match &e {
                SynthError::IncompleteRules { combination, .. } => ("incomplete_rules", Some(combination.clone())),
                SynthError::ContradictoryRules { combination, .. } => {
                    ("contradictory_rules", Some(combination.clone()))
                }
                SynthError::InvalidSpec(_) => ("invalid_rulespec", None),
            };
            return CommandResult::json(
                EXIT_INVALID,
                json!({ "error": kind, "message": e.to_string(), "combination": combination }),
            )
            .with_diagnostic(e.to_string());
        }
    };
    if let Err(e) = fs::write(out, serialize(&set)) {
        return CommandResult::fail(
            EXIT_INTERNAL,
            "write_failed",
            format!("cannot write {}: {e}", out.display()),
        );
    }
    CommandResult::json(
        EXIT_OK,
        json!({
            "out": out.display().to_string(),
            "entities": entities,
            "labels": set.labels.len(),
            "annotations": set.canonical().annotations.len(),
        }),
    )
}
