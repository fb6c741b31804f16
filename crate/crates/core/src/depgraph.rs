//! Concept dependency graphs for navigation.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::arg::Arg;
use crate::assessment::{Color, Judgment, TraceNode};
use crate::helpgen::Granularity;
use crate::ontology::{Concept, Ontology};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    /// Concept name.
    pub label: String,
    /// What the node shows at its current granularity.
    pub text: String,
    pub expanded: bool,
    pub granularity: Granularity,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
}

/// Immutable dependency graph; operations return new graphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptGraph {
    pub root: String,
    /// Argument the node texts are instantiated with, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arg: Option<Arg>,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("node `{0}` is not in the graph")]
    UnknownNode(String),
    #[error("malformed graph: {0}")]
    Format(String),
}

/// Renders a concept's node text at a granularity.
pub type Describe<'a> = dyn Fn(&Concept, Granularity) -> String + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl std::str::FromStr for GraphFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            _ => Err(format!("unknown graph format `{s}` (dot or json)")),
        }
    }
}

fn concept<'o>(ontology: &'o Ontology, id: &str) -> Result<&'o Concept, GraphError> {
    ontology.concept(id).ok_or_else(|| GraphError::UnknownConcept(id.to_string()))
}

fn new_node(concept: &Concept, depth: usize, describe: &Describe) -> GraphNode {
    GraphNode {
        id: concept.id.clone(),
        label: concept.name.clone(),
        text: describe(concept, Granularity::Label),
        expanded: false,
        granularity: Granularity::Label,
        depth,
        color: None,
    }
}

impl ConceptGraph {
    pub fn node(&self, id: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn node_mut(&mut self, id: &str) -> Result<&mut GraphNode, GraphError> {
        self.nodes
            .iter_mut()
            .find(|n| n.id == id)
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|(a, b)| a == from && b == to)
    }

    fn expand_in_place(&mut self, ontology: &Ontology, id: &str, describe: &Describe) -> Result<(), GraphError> {
        let node = self.node_mut(id)?;
        if node.expanded {
            return Ok(());
        }
        node.expanded = true;
        let depth = node.depth + 1;
        for child in &concept(ontology, id)?.depends_on {
            if self.node(child).is_none() {
                self.nodes.push(new_node(concept(ontology, child)?, depth, describe));
            }
            if !self.has_edge(id, child) {
                self.edges.push((id.to_string(), child.clone()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph concepts {\n");
        out.push_str("  node [shape=box, style=filled, fillcolor=white];\n");
        for n in &self.nodes {
            let _ = write!(out, "  {} [label={}", quote(&n.id), quote(&n.text));
            if let Some(c) = n.color {
                let _ = write!(out, ", fillcolor={c}");
            }
            out.push_str("];\n");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  {} -> {};", quote(a), quote(b));
        }
        out.push_str("}\n");
        out
    }

    pub fn export(&self, format: GraphFormat) -> String {
        match format {
            GraphFormat::Dot => self.to_dot(),
            GraphFormat::Json => self.to_json(),
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Breadth-first closure over `depends_on`, `levels` steps deep.
pub fn graph_root(ontology: &Ontology, root: &str, levels: usize, describe: &Describe) -> Result<ConceptGraph, GraphError> {
    let mut graph = ConceptGraph {
        root: root.to_string(),
        arg: None,
        nodes: vec![new_node(concept(ontology, root)?, 0, describe)],
        edges: Vec::new(),
    };
    let mut queue = VecDeque::from([root.to_string()]);
    while let Some(id) = queue.pop_front() {
        let depth = graph.node(&id).map_or(0, |n| n.depth);
        if depth >= levels {
            continue;
        }
        let before = graph.nodes.len();
        graph.expand_in_place(ontology, &id, describe)?;
        queue.extend(graph.nodes[before..].iter().map(|n| n.id.clone()));
    }
    Ok(graph)
}

/// Adds the node's direct dependencies; expanding twice changes nothing.
pub fn expand(ontology: &Ontology, graph: &ConceptGraph, node: &str, describe: &Describe) -> Result<ConceptGraph, GraphError> {
    let mut out = graph.clone();
    out.expand_in_place(ontology, node, describe)?;
    Ok(out)
}

pub fn set_granularity(
    ontology: &Ontology,
    graph: &ConceptGraph,
    node: &str,
    granularity: Granularity,
    describe: &Describe,
) -> Result<ConceptGraph, GraphError> {
    let mut out = graph.clone();
    let text = describe(concept(ontology, node)?, granularity);
    let n = out.node_mut(node)?;
    n.granularity = granularity;
    n.text = text;
    Ok(out)
}

/// The trace as a graph, each node colored by its judgment. A concept reached
/// along several paths appears once, with the worst judgment seen.
pub fn from_trace(ontology: &Ontology, trace: &TraceNode, describe: &Describe) -> Result<ConceptGraph, GraphError> {
    let mut graph = ConceptGraph {
        root: trace.concept_id.clone(),
        arg: Some(trace.arg.clone()),
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let mut judgments: BTreeMap<String, Judgment> = BTreeMap::new();
    let mut queue = VecDeque::from([(trace, 0usize)]);
    while let Some((t, depth)) = queue.pop_front() {
        judgments
            .entry(t.concept_id.clone())
            .and_modify(|j| *j = j.combine(t.judgment))
            .or_insert(t.judgment);
        if graph.node(&t.concept_id).is_none() {
            graph.nodes.push(new_node(concept(ontology, &t.concept_id)?, depth, describe));
        }
        if !t.children.is_empty() {
            graph.node_mut(&t.concept_id)?.expanded = true;
        }
        for child in &t.children {
            if !graph.has_edge(&t.concept_id, &child.concept_id) {
                graph.edges.push((t.concept_id.clone(), child.concept_id.clone()));
            }
            queue.push_back((child, depth + 1));
        }
    }
    for n in &mut graph.nodes {
        n.color = judgments.get(&n.id).map(|j| j.color());
    }
    Ok(graph)
}
