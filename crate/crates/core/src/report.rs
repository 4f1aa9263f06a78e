//! JSON payloads for the command-line reports.
//!
//! Reals are rounded to 12 significant digits. Infinite losses are written
//! as `"inf"` (and an empty intersection's entropy as `"-inf"`); an undefined
//! relevancy as `"undefined"`.

use serde_json::{json, Map, Value};

use crate::distance::{Distance, Hop};
use crate::infoflow::{Dependency, InfoReport};
use crate::ingest::{AnnotationSet, Finding};
use crate::model::LabeledGraph;
use crate::model::Node;
use crate::partition::Partition;

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// A real as JSON: a number, or `"inf"` / `"-inf"`.
pub fn real(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::from("inf")
    } else if x == f64::NEG_INFINITY {
        Value::from("-inf")
    } else {
        // -0.0 prints as "-0.0"; normalize
        let x = round_significant(x) + 0.0;
        serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
    }
}

pub fn relevancy(x: Option<f64>) -> Value {
    x.map_or_else(|| Value::from("undefined"), real)
}

/// Reads back a real written by [`real`].
pub fn parse_real(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) if s == "inf" => Some(f64::INFINITY),
        Value::String(s) if s == "-inf" => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

pub fn findings(findings: &[Finding]) -> Value {
    serde_json::to_value(findings).expect("findings serialize")
}

pub fn error(kind: &str, message: impl Into<String>) -> Value {
    json!({ "error": kind, "message": message.into() })
}

pub fn partition(p: &Partition<Node>) -> Value {
    serde_json::to_value(p.to_json()).expect("partition serializes")
}

pub fn info(query: Value, report: &InfoReport, excluded: usize) -> Map<String, Value> {
    let mut out = Map::new();
    out.insert("query".into(), query);
    out.insert("universe_size".into(), report.universe_size.into());
    out.insert("class_count".into(), report.class_count.into());
    out.insert("entropy_nats".into(), real(report.entropy));
    out.insert("entropy_loss_nats".into(), real(report.entropy_loss));
    out.insert("propagation".into(), real(report.propagation));
    out.insert("relevancy_nats".into(), relevancy(report.relevancy));
    out.insert("excluded_nodes".into(), excluded.into());
    out
}

pub fn dependency(query: Value, universe_size: usize, dep: &Dependency, excluded: usize) -> Map<String, Value> {
    let mut out = Map::new();
    out.insert("query".into(), query);
    out.insert("universe_size".into(), universe_size.into());
    out.insert("class_count".into(), dep.from_classes.into());
    out.insert("to_class_count".into(), dep.to_classes.into());
    out.insert("intersection_count".into(), dep.intersection_count.into());
    out.insert("entropy_nats".into(), real(dep.entropy()));
    out.insert("entropy_loss_nats".into(), real(dep.loss));
    out.insert("propagation".into(), real(dep.ratio()));
    out.insert("relevancy_nats".into(), relevancy(dep.relevancy()));
    out.insert("terminated".into(), dep.terminated().into());
    out.insert("excluded_nodes".into(), excluded.into());
    out
}

fn hop(h: &Hop) -> Value {
    match h {
        Hop::Map { label, from, to, loss } => {
            json!({ "kind": "map", "label": label, "from": from, "to": to, "loss_nats": real(*loss) })
        }
        Hop::Junction {
            inverse_label,
            via,
            label,
            from,
            to,
            loss,
        } => json!({
            "kind": "junction",
            "inverse_label": inverse_label,
            "via": via,
            "label": label,
            "from": from,
            "to": to,
            "loss_nats": real(*loss),
        }),
    }
}

pub fn distance(from: &Node, to: &Node, d: &Distance) -> Value {
    json!({
        "query": { "from": from.key(), "to": to.key() },
        "distance_nats": real(d.nats),
        "path": d.path.iter().map(hop).collect::<Vec<_>>(),
    })
}

pub fn graph_json(graph: &LabeledGraph, set: &AnnotationSet) -> Value {
    let nodes: Vec<Value> = graph
        .nodes()
        .iter()
        .map(|n| {
            let r = n.region();
            json!({
                "key": n.key(),
                "doc": r.doc,
                "start": r.start,
                "end": r.end,
                "text": set.surface(r),
            })
        })
        .collect();
    let edges: Vec<Value> = graph
        .edges()
        .map(|e| {
            json!({
                "label": e.label,
                "direction": graph.direction(&e.label).map(|d| d.to_string()),
                "source": e.source.key(),
                "target": e.target.key(),
            })
        })
        .collect();
    json!({ "nodes": nodes, "edges": edges })
}

const DOT_LABEL_WIDTH: usize = 40;

fn dot_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' | '\r' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

fn short(text: &str) -> String {
    let mut chars = text.chars();
    let head: String = chars.by_ref().take(DOT_LABEL_WIDTH).collect();
    if chars.next().is_some() {
        format!("{head}...")
    } else {
        head
    }
}

pub fn graph_dot(graph: &LabeledGraph, set: &AnnotationSet) -> String {
    let mut out = String::from("digraph labels {\n");
    for node in graph.nodes() {
        let text = set.surface(node.region()).map(short).unwrap_or_else(|| node.key());
        out.push_str(&format!(
            "  \"{}\" [label=\"{}\"];\n",
            dot_escape(&node.key()),
            dot_escape(&text)
        ));
    }
    for edge in graph.edges() {
        let direction = graph.direction(&edge.label).map(|d| d.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [label=\"{} ({})\"];\n",
            dot_escape(&edge.source.key()),
            dot_escape(&edge.target.key()),
            dot_escape(&edge.label),
            direction
        ));
    }
    out.push_str("}\n");
    out
}
