//! Rule-driven synthetic universes.
//!
//! A [`RuleSpec`] lists free attributes (every combination of their values is
//! one entity) and derived attributes whose value is fixed by rules over the
//! attributes declared before them. [`generate_universe`] renders the
//! entities into one document where every attribute value is a single shared
//! mention and every attribute is a backward label from entity to value.
//!
//! [`oracle_counts`] and [`brute_force_intersection_count`] recompute class
//! and intersection counts straight from the entity table, with no graph or
//! partition machinery, for cross-checking.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::AnnotationSet;
use crate::model::{Annotation, Document, LabelDecl, Region};

pub const SYNTHETIC_DOC_ID: &str = "synthetic";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid rule spec: {0}")]
    InvalidSpec(String),
    #[error("no rule for `{attribute}` matches {combination}")]
    IncompleteRules { attribute: String, combination: String },
    #[error("rules for `{attribute}` assign {values:?} to {combination}")]
    ContradictoryRules {
        attribute: String,
        combination: String,
        values: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeAttribute {
    pub name: String,
    pub values: Vec<String>,
}

/// Condition tree: `{"all": [..]}`, `{"any": [..]}`, `{"is": [attr, value]}`,
/// `{"not": [attr, value]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    All(Vec<Condition>),
    Any(Vec<Condition>),
    Is(String, String),
    Not(String, String),
}

impl Condition {
    pub fn is(attr: &str, value: &str) -> Self {
        Condition::Is(attr.into(), value.into())
    }

    pub fn not(attr: &str, value: &str) -> Self {
        Condition::Not(attr.into(), value.into())
    }

    fn eval(&self, row: &HashMap<&str, &str>) -> bool {
        match self {
            Condition::All(parts) => parts.iter().all(|c| c.eval(row)),
            Condition::Any(parts) => parts.iter().any(|c| c.eval(row)),
            Condition::Is(a, v) => row.get(a.as_str()) == Some(&v.as_str()),
            Condition::Not(a, v) => row.get(a.as_str()) != Some(&v.as_str()),
        }
    }

    fn atoms(&self, out: &mut Vec<(String, String)>) {
        match self {
            Condition::All(parts) | Condition::Any(parts) => parts.iter().for_each(|c| c.atoms(out)),
            Condition::Is(a, v) | Condition::Not(a, v) => out.push((a.clone(), v.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub when: Condition,
    pub then: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedAttribute {
    pub name: String,
    pub rules: Vec<Rule>,
}

impl DerivedAttribute {
    /// Values in order of first appearance among the rules.
    pub fn values(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for rule in &self.rules {
            if !out.contains(&rule.then) {
                out.push(rule.then.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub free: Vec<FreeAttribute>,
    #[serde(default)]
    pub derived: Vec<DerivedAttribute>,
}

impl RuleSpec {
    pub fn from_json(input: &[u8]) -> Result<Self, SynthError> {
        serde_json::from_slice(input).map_err(|e| SynthError::InvalidSpec(e.to_string()))
    }

    /// Attribute names in declaration order, free first.
    pub fn attribute_names(&self) -> Vec<&str> {
        self.free
            .iter()
            .map(|a| a.name.as_str())
            .chain(self.derived.iter().map(|a| a.name.as_str()))
            .collect()
    }

    /// `(name, values)` for every attribute, free first.
    pub fn domains(&self) -> Vec<(String, Vec<String>)> {
        self.free
            .iter()
            .map(|a| (a.name.clone(), a.values.clone()))
            .chain(self.derived.iter().map(|a| (a.name.clone(), a.values())))
            .collect()
    }

    fn check(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.free.is_empty() {
            return bad("at least one free attribute is required".into());
        }
        let mut known: HashMap<&str, &[String]> = HashMap::new();
        for attr in &self.free {
            if attr.name.is_empty() {
                return bad("attribute names must not be empty".into());
            }
            if attr.values.is_empty() {
                return bad(format!("attribute `{}` has no values", attr.name));
            }
            for (i, v) in attr.values.iter().enumerate() {
                if v.is_empty() || v.contains(char::is_whitespace) {
                    return bad(format!("value {v:?} of `{}` must be a non-empty token", attr.name));
                }
                if attr.values[..i].contains(v) {
                    return bad(format!("value `{v}` repeated in `{}`", attr.name));
                }
            }
            if known.insert(&attr.name, &attr.values).is_some() {
                return bad(format!("attribute `{}` declared twice", attr.name));
            }
        }
        let derived_values: Vec<Vec<String>> = self.derived.iter().map(DerivedAttribute::values).collect();
        for (attr, values) in self.derived.iter().zip(&derived_values) {
            if attr.name.is_empty() {
                return bad("attribute names must not be empty".into());
            }
            if attr.rules.is_empty() {
                return bad(format!("derived attribute `{}` has no rules", attr.name));
            }
            if let Some(v) = values.iter().find(|v| v.is_empty() || v.contains(char::is_whitespace)) {
                return bad(format!("value {v:?} of `{}` must be a non-empty token", attr.name));
            }
            for rule in &attr.rules {
                let mut atoms = Vec::new();
                rule.when.atoms(&mut atoms);
                for (a, v) in atoms {
                    match known.get(a.as_str()) {
                        None => {
                            return bad(format!(
                                "rule for `{}` refers to `{a}`, which is not declared before it",
                                attr.name
                            ))
                        }
                        Some(domain) if !domain.contains(&v) => return bad(format!("`{v}` is not a value of `{a}`")),
                        Some(_) => {}
                    }
                }
            }
            if known.insert(&attr.name, values).is_some() {
                return bad(format!("attribute `{}` declared twice", attr.name));
            }
        }
        Ok(())
    }
}

/// One entity: its value index for every attribute, in [`RuleSpec::domains`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub values: Vec<usize>,
}

/// Every free-attribute combination with its derived values filled in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityTable {
    pub domains: Vec<(String, Vec<String>)>,
    pub free_count: usize,
    pub entities: Vec<Entity>,
}

impl EntityTable {
    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.domains.iter().position(|(n, _)| n == name)
    }

    /// Dotted free values, e.g. `red.small`.
    pub fn entity_name(&self, entity: &Entity) -> String {
        (0..self.free_count)
            .map(|a| self.domains[a].1[entity.values[a]].as_str())
            .collect::<Vec<_>>()
            .join(".")
    }

    pub fn value(&self, entity: &Entity, attr: usize) -> &str {
        &self.domains[attr].1[entity.values[attr]]
    }
}

impl fmt::Display for EntityTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for entity in &self.entities {
            writeln!(f, "{}", self.entity_name(entity))?;
        }
        Ok(())
    }
}

/// Enumerates the free cross product (first attribute outermost) and applies
/// the rules, checking totality and consistency on every combination.
pub fn entity_table(spec: &RuleSpec) -> Result<EntityTable, SynthError> {
    spec.check()?;
    let domains = spec.domains();
    let free_count = spec.free.len();
    let total: usize = spec.free.iter().map(|a| a.values.len()).product();
    let mut entities = Vec::with_capacity(total);
    for mut n in 0..total {
        let mut values = vec![0; free_count];
        for a in (0..free_count).rev() {
            let size = spec.free[a].values.len();
            values[a] = n % size;
            n /= size;
        }
        entities.push(Entity { values });
    }

    let mut table = EntityTable {
        domains,
        free_count,
        entities,
    };
    for (offset, attr) in spec.derived.iter().enumerate() {
        let index = free_count + offset;
        let values = &table.domains[index].1;
        let mut assigned = Vec::with_capacity(table.entities.len());
        for entity in &table.entities {
            let row: HashMap<&str, &str> = (0..index)
                .map(|a| (table.domains[a].0.as_str(), table.value(entity, a)))
                .collect();
            let mut fired: Vec<&String> = attr
                .rules
                .iter()
                .filter(|r| r.when.eval(&row))
                .map(|r| &r.then)
                .collect();
            fired.dedup();
            let mut distinct = fired.clone();
            distinct.sort();
            distinct.dedup();
            match distinct.len() {
                0 => {
                    return Err(SynthError::IncompleteRules {
                        attribute: attr.name.clone(),
                        combination: table.entity_name(entity),
                    })
                }
                1 => {}
                _ => {
                    return Err(SynthError::ContradictoryRules {
                        attribute: attr.name.clone(),
                        combination: table.entity_name(entity),
                        values: distinct.into_iter().cloned().collect(),
                    })
                }
            }
            // checked above that all fired rules agree; take the first match
            let value = fired[0];
            assigned.push(values.iter().position(|v| v == value).expect("value is in domain"));
        }
        for (entity, value) in table.entities.iter_mut().zip(assigned) {
            entity.values.push(value);
        }
    }
    Ok(table)
}

/// Renders the spec's entities into a single-document dataset.
///
/// The text starts with one header line per attribute listing its values;
/// each value token there is the one mention shared by all entities that
/// carry it. Then comes one line per entity. An entity's region runs from
/// the start of the document to the end of its own line, so it contains
/// every value mention.
pub fn generate_universe(spec: &RuleSpec) -> Result<AnnotationSet, SynthError> {
    let table = entity_table(spec)?;
    let mut text = String::new();
    let mut value_regions: Vec<Vec<(usize, usize)>> = Vec::new();
    for (name, values) in &table.domains {
        text.push_str(name);
        text.push(':');
        let mut regions = Vec::new();
        for value in values {
            text.push(' ');
            regions.push((text.len(), text.len() + value.len()));
            text.push_str(value);
        }
        text.push('\n');
        value_regions.push(regions);
    }

    let mut annotations = Vec::new();
    for entity in &table.entities {
        text.push_str(&table.entity_name(entity));
        text.push(':');
        for (a, (name, _)) in table.domains.iter().enumerate() {
            text.push_str(&format!(" {name}={}", table.value(entity, a)));
        }
        let entity_region = Region {
            doc: SYNTHETIC_DOC_ID.into(),
            start: 0,
            end: text.len(),
        };
        text.push('\n');
        for (a, (name, _)) in table.domains.iter().enumerate() {
            let (start, end) = value_regions[a][entity.values[a]];
            let mention = Region {
                doc: SYNTHETIC_DOC_ID.into(),
                start,
                end,
            };
            annotations.push(Annotation::new(name.clone(), mention, entity_region.clone()));
        }
    }

    Ok(AnnotationSet {
        documents: vec![Document::new(SYNTHETIC_DOC_ID, text)],
        labels: table
            .domains
            .iter()
            .map(|(name, _)| LabelDecl::backward(name.clone()))
            .collect(),
        annotations,
    })
}

/// Number of classes of `from` contained in some class of `to`, by scanning
/// every pair of classes. Elements are indices, `from[i]` and `to[i]` the
/// class labels of element `i`.
pub fn brute_force_intersection_count<A: PartialEq, B: PartialEq>(from: &[A], to: &[B]) -> usize {
    assert_eq!(from.len(), to.len(), "labelings must cover the same elements");
    let from_classes = group_indices(from);
    let to_classes = group_indices(to);
    from_classes
        .iter()
        .filter(|a| to_classes.iter().any(|b| a.iter().all(|x| b.contains(x))))
        .count()
}

fn group_indices<L: PartialEq>(labels: &[L]) -> Vec<Vec<usize>> {
    let mut reps: Vec<&L> = Vec::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        match reps.iter().position(|r| *r == label) {
            Some(c) => classes[c].push(i),
            None => {
                reps.push(label);
                classes.push(vec![i]);
            }
        }
    }
    classes
}

/// `(|C_from|, |C_from ->∩ C_to|)` computed directly from the entity table.
/// Several `from` attributes are combined into one tuple-valued property.
pub fn oracle_counts<S: AsRef<str>>(
    spec: &RuleSpec,
    from_attrs: &[S],
    to_attr: &str,
) -> Result<(usize, usize), SynthError> {
    let table = entity_table(spec)?;
    let index = |name: &str| {
        table
            .attribute_index(name)
            .ok_or_else(|| SynthError::InvalidSpec(format!("unknown attribute `{name}`")))
    };
    if from_attrs.is_empty() {
        return Err(SynthError::InvalidSpec("no source attributes".into()));
    }
    let from_idx = from_attrs
        .iter()
        .map(|a| index(a.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let to_idx = index(to_attr)?;
    let from_labels: Vec<Vec<usize>> = table
        .entities
        .iter()
        .map(|e| from_idx.iter().map(|&a| e.values[a]).collect())
        .collect();
    let to_labels: Vec<usize> = table.entities.iter().map(|e| e.values[to_idx]).collect();
    Ok((
        group_indices(&from_labels).len(),
        brute_force_intersection_count(&from_labels, &to_labels),
    ))
}

/// Color/size/price with price fixed by size alone.
pub fn size_rules_example() -> RuleSpec {
    RuleSpec {
        free: vec![
            free("color", &["red", "black", "blue"]),
            free("size", &["small", "large"]),
        ],
        derived: vec![DerivedAttribute {
            name: "price".into(),
            rules: vec![
                Rule {
                    when: Condition::is("size", "small"),
                    then: "inexpensive".into(),
                },
                Rule {
                    when: Condition::is("size", "large"),
                    then: "expensive".into(),
                },
            ],
        }],
    }
}

/// Color/size/price where red is expensive whatever its size.
pub fn red_exception_example() -> RuleSpec {
    RuleSpec {
        free: vec![
            free("color", &["red", "black", "blue"]),
            free("size", &["small", "large"]),
        ],
        derived: vec![DerivedAttribute {
            name: "price".into(),
            rules: vec![
                Rule {
                    when: Condition::All(vec![Condition::is("size", "small"), Condition::not("color", "red")]),
                    then: "inexpensive".into(),
                },
                Rule {
                    when: Condition::Any(vec![Condition::is("size", "large"), Condition::is("color", "red")]),
                    then: "expensive".into(),
                },
            ],
        }],
    }
}

fn free(name: &str, values: &[&str]) -> FreeAttribute {
    FreeAttribute {
        name: name.into(),
        values: values.iter().map(|v| v.to_string()).collect(),
    }
}

/// Entity names grouped by the value of `attr`, for eyeballing.
pub fn classes_by_attribute(table: &EntityTable, attr: &str) -> Option<BTreeMap<String, Vec<String>>> {
    let a = table.attribute_index(attr)?;
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for entity in &table.entities {
        out.entry(table.value(entity, a).to_string())
            .or_default()
            .push(table.entity_name(entity));
    }
    Some(out)
}
