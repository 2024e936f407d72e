//! Interview scripts: topic-tagged questions linked into a graph.
//!
//! A scenario file is JSON:
//!
//! ```json
//! {
//!   "topics": ["motivation", "skills"],
//!   "entry": "q1",
//!   "nodes": [
//!     {"id": "q1", "text": "Tell me about yourself.", "topics": ["motivation"],
//!      "difficulty": 0.2, "stage": "opening", "next": ["q2"]},
//!     {"id": "q2", "text": "Any weaknesses?", "topics": ["skills"],
//!      "difficulty": 0.9, "expected_performance": -0.4, "stage": "core", "next": []}
//!   ]
//! }
//! ```
//!
//! When `expected_performance` is omitted it defaults to `1 - 1.6 d`,
//! clamped to [-1, 1], where `d` is the difficulty.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::user_model::{ExpectedCueProfile, ProfileOverrides};

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub node: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(node) = &self.node {
            write!(f, "node '{node}': ")?;
        }
        f.write_str(&self.message)
    }
}

/// Every problem found in a scenario, not just the first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario:\n{0}")]
    Invalid(ValidationReport),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TopicId(pub usize);

/// The ordered set of interview topics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicSet {
    names: Vec<String>,
}

impl TopicSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Option<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let unique: BTreeSet<&String> = names.iter().collect();
        (!names.is_empty() && unique.len() == names.len()).then_some(TopicSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<TopicId> {
        self.names.iter().position(|n| n == name).map(TopicId)
    }

    pub fn name(&self, id: TopicId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> impl Iterator<Item = TopicId> {
        (0..self.names.len()).map(TopicId)
    }
}

/// Expected performance for a question of difficulty `d` when the author
/// gives none.
pub fn default_expected_performance(difficulty: f64) -> f64 {
    (1.0 - 1.6 * difficulty).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioNode {
    pub id: String,
    pub text: String,
    pub topics: Vec<TopicId>,
    pub difficulty: f64,
    pub expected_performance: f64,
    pub stage: String,
    pub next: Vec<String>,
    pub profile: Option<ProfileOverrides>,
    declared_expected_performance: bool,
}

impl ScenarioNode {
    pub fn is_terminal(&self) -> bool {
        self.next.is_empty()
    }
}

/// On-disk form of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub topics: Vec<String>,
    pub entry: String,
    pub nodes: Vec<NodeDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub topics: Vec<String>,
    pub difficulty: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_performance: Option<f64>,
    #[serde(default)]
    pub stage: String,
    #[serde(default)]
    pub next: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileOverrides>,
}

/// A validated interview graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    topics: TopicSet,
    entry: usize,
    nodes: Vec<ScenarioNode>,
    index: BTreeMap<String, usize>,
}

/// Line of the `"id": "<id>"` entry for a node, for error messages.
fn locate_node(source: &str, id: &str) -> Option<usize> {
    let quoted = serde_json::to_string(id).ok()?;
    source
        .lines()
        .position(|line| {
            line.find("\"id\"").is_some_and(|at| {
                let rest = line[at + 4..].trim_start();
                rest.strip_prefix(':')
                    .is_some_and(|r| r.trim_start().starts_with(&quoted))
            })
        })
        .map(|i| i + 1)
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(source: &str) -> Result<Self, ScenarioError> {
        let doc: ScenarioDocument =
            serde_json::from_str(source).map_err(|e| ScenarioError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        Self::from_document_with_source(doc, Some(source))
    }

    pub fn from_document(doc: ScenarioDocument) -> Result<Self, ScenarioError> {
        Self::from_document_with_source(doc, None)
    }

    fn from_document_with_source(
        doc: ScenarioDocument,
        source: Option<&str>,
    ) -> Result<Self, ScenarioError> {
        let mut report = ValidationReport::default();
        let mut issue = |node: Option<&str>, message: String| {
            report.issues.push(Issue {
                node: node.map(String::from),
                line: node.zip(source).and_then(|(n, s)| locate_node(s, n)),
                message,
            });
        };

        let topics = TopicSet::new(doc.topics.iter().cloned());
        if doc.topics.is_empty() {
            issue(None, "at least one topic is required".into());
        } else if topics.is_none() {
            issue(None, "topic names must be unique".into());
        }
        if doc.nodes.is_empty() {
            issue(None, "scenario has no nodes".into());
        }

        let mut index = BTreeMap::new();
        for (i, n) in doc.nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                issue(Some(&n.id), "duplicate node id".into());
            }
        }

        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for n in &doc.nodes {
            let id = Some(n.id.as_str());
            if !(0.0..=1.0).contains(&n.difficulty) {
                issue(id, format!("difficulty {} outside [0, 1]", n.difficulty));
            }
            if let Some(pe) = n.expected_performance {
                if !(-1.0..=1.0).contains(&pe) {
                    issue(id, format!("expected_performance {pe} outside [-1, 1]"));
                }
            }
            let mut node_topics = Vec::new();
            for t in &n.topics {
                match topics.as_ref().and_then(|ts| ts.id(t)) {
                    Some(tid) if node_topics.contains(&tid) => {
                        issue(id, format!("topic '{t}' listed twice"))
                    }
                    Some(tid) => node_topics.push(tid),
                    None => issue(id, format!("unknown topic '{t}'")),
                }
            }
            for succ in &n.next {
                if !index.contains_key(succ) {
                    issue(id, format!("successor '{succ}' does not exist"));
                }
            }
            if let Some(o) = &n.profile {
                if let Err(e) = ExpectedCueProfile::default().with(o).validate() {
                    issue(id, e.to_string());
                }
            }
            nodes.push(ScenarioNode {
                id: n.id.clone(),
                text: n.text.clone(),
                topics: node_topics,
                difficulty: n.difficulty,
                expected_performance: n
                    .expected_performance
                    .unwrap_or_else(|| default_expected_performance(n.difficulty)),
                stage: n.stage.clone(),
                next: n.next.clone(),
                profile: n.profile.clone(),
                declared_expected_performance: n.expected_performance.is_some(),
            });
        }

        match index.get(&doc.entry) {
            None if !doc.nodes.is_empty() => {
                issue(None, format!("entry node '{}' does not exist", doc.entry))
            }
            Some(&entry) => {
                // Some terminal node must be reachable from the entry.
                let mut seen = vec![false; nodes.len()];
                let mut queue = VecDeque::from([entry]);
                let mut terminal = false;
                while let Some(i) = queue.pop_front() {
                    if std::mem::replace(&mut seen[i], true) {
                        continue;
                    }
                    terminal |= nodes[i].is_terminal();
                    queue.extend(nodes[i].next.iter().filter_map(|s| index.get(s).copied()));
                }
                if !terminal {
                    issue(None, "no terminal node is reachable from the entry".into());
                }
            }
            None => {}
        }

        if !report.issues.is_empty() {
            return Err(ScenarioError::Invalid(report));
        }
        Ok(Scenario {
            topics: topics.expect("validated"),
            entry: index[&doc.entry],
            nodes,
            index,
        })
    }

    pub fn topics(&self) -> &TopicSet {
        &self.topics
    }

    pub fn entry(&self) -> &ScenarioNode {
        &self.nodes[self.entry]
    }

    pub fn nodes(&self) -> &[ScenarioNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&ScenarioNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    /// Successors of `current` in declared order; empty at a terminal node.
    pub fn feasible_next(&self, current: &str) -> Result<Vec<&ScenarioNode>, ScenarioError> {
        let node = self
            .node(current)
            .ok_or_else(|| ScenarioError::UnknownNode(current.into()))?;
        Ok(node
            .next
            .iter()
            .map(|s| &self.nodes[self.index[s]])
            .collect())
    }

    /// Position of a node in declaration order.
    pub fn declaration_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn to_document(&self) -> ScenarioDocument {
        ScenarioDocument {
            topics: self.topics.names().to_vec(),
            entry: self.entry().id.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDocument {
                    id: n.id.clone(),
                    text: n.text.clone(),
                    topics: n
                        .topics
                        .iter()
                        .map(|&t| self.topics.name(t).to_string())
                        .collect(),
                    difficulty: n.difficulty,
                    expected_performance: n
                        .declared_expected_performance
                        .then_some(n.expected_performance),
                    stage: n.stage.clone(),
                    next: n.next.clone(),
                    profile: n.profile.clone(),
                })
                .collect(),
        }
    }
}
