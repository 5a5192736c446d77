//! Discrete Bayesian networks: data model, validation, JSON I/O and exact
//! joint probabilities.
//!
//! A network is a list of nodes in document order. Each node has its own
//! value domain, an ordered parent list and a conditional probability table
//! whose rows enumerate parent configurations row-major, with the last listed
//! parent varying fastest.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for CPT row normalization.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ValueId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("syntax error: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("network has no nodes")]
    Empty,
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("node `{0}` has an empty value domain")]
    EmptyDomain(String),
    #[error("node `{node}` declares value `{value}` twice")]
    DuplicateValue { node: String, value: String },
    #[error("node `{node}` references unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },
    #[error("node `{node}` lists parent `{parent}` twice")]
    DuplicateParent { node: String, parent: String },
    #[error("node `{node}`: expected {expected} CPT rows, found {found}")]
    RowCount {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("node `{node}`, row {row}: expected {expected} entries, found {found}")]
    RowWidth {
        node: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("node `{node}`, row {row}: entry {entry} is outside [0, 1]")]
    EntryOutOfRange { node: String, row: usize, entry: f64 },
    #[error("node `{node}`, row {row}: entries sum to {sum}, not 1")]
    NotNormalized { node: String, row: usize, sum: f64 },
    #[error("cycle detected through node `{0}`")]
    Cycle(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvidenceError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has no value `{value}`")]
    UnknownValue { node: String, value: String },
    #[error("node `{0}` appears more than once in the evidence")]
    DuplicateNode(String),
    #[error("malformed finding `{0}`, expected name=value")]
    Malformed(String),
}

/// Conditional probability table for one node.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    parent_domain_sizes: Vec<usize>,
    own_domain_size: usize,
    entries: Vec<f64>,
}

impl Cpt {
    /// Builds a table without validating normalization; shape is checked by
    /// the caller ([`BeliefNetwork::new`]).
    fn from_rows(parent_domain_sizes: Vec<usize>, own_domain_size: usize, rows: &[Vec<f64>]) -> Self {
        let entries = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Cpt {
            parent_domain_sizes,
            own_domain_size,
            entries,
        }
    }

    pub fn parent_domain_sizes(&self) -> &[usize] {
        &self.parent_domain_sizes
    }

    pub fn own_domain_size(&self) -> usize {
        self.own_domain_size
    }

    /// Number of parent configurations.
    pub fn row_count(&self) -> usize {
        self.parent_domain_sizes.iter().product()
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let m = self.own_domain_size;
        &self.entries[row * m..(row + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.own_domain_size)
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    /// Row index of a parent configuration (last parent fastest).
    pub fn row_index(&self, parent_values: &[ValueId]) -> usize {
        debug_assert_eq!(parent_values.len(), self.parent_domain_sizes.len());
        parent_values
            .iter()
            .zip(&self.parent_domain_sizes)
            .fold(0, |acc, (v, size)| acc * size + v.0)
    }

    /// Inverse of [`Cpt::row_index`].
    pub fn parent_tuple(&self, mut row: usize) -> Vec<ValueId> {
        let mut tuple = vec![ValueId(0); self.parent_domain_sizes.len()];
        for (slot, size) in tuple.iter_mut().zip(&self.parent_domain_sizes).rev() {
            *slot = ValueId(row % size);
            row /= size;
        }
        tuple
    }

    pub fn probability(&self, parent_values: &[ValueId], value: ValueId) -> f64 {
        self.row(self.row_index(parent_values))[value.0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub name: String,
    pub values: Vec<String>,
    pub parents: Vec<NodeId>,
    pub cpt: Cpt,
}

impl Node {
    pub fn domain_size(&self) -> usize {
        self.values.len()
    }

    pub fn is_root(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn value_id(&self, name: &str) -> Option<ValueId> {
        self.values.iter().position(|v| v == name).map(ValueId)
    }
}

/// Unvalidated node description, as read from a document or produced by a
/// generator. Parents are referenced by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub values: Vec<String>,
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    nodes: Vec<NodeSpec>,
}

/// A validated discrete Bayesian network. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefNetwork {
    nodes: Vec<Node>,
    children: Vec<Vec<NodeId>>,
}

impl BeliefNetwork {
    /// Validates node specs and builds the network. Node ids follow the
    /// order of `specs`.
    pub fn new(specs: Vec<NodeSpec>) -> Result<Self, NetworkError> {
        if specs.is_empty() {
            return Err(NetworkError::Empty);
        }
        let mut index = BTreeMap::new();
        for (i, spec) in specs.iter().enumerate() {
            if index.insert(spec.name.clone(), NodeId(i)).is_some() {
                return Err(NetworkError::DuplicateNode(spec.name.clone()));
            }
            if spec.values.is_empty() {
                return Err(NetworkError::EmptyDomain(spec.name.clone()));
            }
            for (j, v) in spec.values.iter().enumerate() {
                if spec.values[..j].contains(v) {
                    return Err(NetworkError::DuplicateValue {
                        node: spec.name.clone(),
                        value: v.clone(),
                    });
                }
            }
        }

        let mut nodes = Vec::with_capacity(specs.len());
        for spec in &specs {
            let mut parents = Vec::with_capacity(spec.parents.len());
            for p in &spec.parents {
                let id = *index.get(p).ok_or_else(|| NetworkError::UnknownParent {
                    node: spec.name.clone(),
                    parent: p.clone(),
                })?;
                if parents.contains(&id) {
                    return Err(NetworkError::DuplicateParent {
                        node: spec.name.clone(),
                        parent: p.clone(),
                    });
                }
                parents.push(id);
            }
            let parent_sizes: Vec<usize> = parents.iter().map(|p| specs[p.0].values.len()).collect();
            let expected_rows: usize = parent_sizes.iter().product();
            if spec.cpt.len() != expected_rows {
                return Err(NetworkError::RowCount {
                    node: spec.name.clone(),
                    expected: expected_rows,
                    found: spec.cpt.len(),
                });
            }
            let m = spec.values.len();
            for (r, row) in spec.cpt.iter().enumerate() {
                if row.len() != m {
                    return Err(NetworkError::RowWidth {
                        node: spec.name.clone(),
                        row: r,
                        expected: m,
                        found: row.len(),
                    });
                }
                if let Some(&bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(NetworkError::EntryOutOfRange {
                        node: spec.name.clone(),
                        row: r,
                        entry: bad,
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(NetworkError::NotNormalized {
                        node: spec.name.clone(),
                        row: r,
                        sum,
                    });
                }
            }
            nodes.push(Node {
                name: spec.name.clone(),
                values: spec.values.clone(),
                parents,
                cpt: Cpt::from_rows(parent_sizes, m, &spec.cpt),
            });
        }

        let mut children = vec![Vec::new(); nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            for p in &node.parents {
                children[p.0].push(NodeId(i));
            }
        }
        let net = BeliefNetwork { nodes, children };
        net.check_acyclic()?;
        Ok(net)
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let doc: NetworkDocument = serde_json::from_str(text)?;
        Self::new(doc.nodes)
    }

    pub fn to_specs(&self) -> Vec<NodeSpec> {
        self.nodes
            .iter()
            .map(|n| NodeSpec {
                name: n.name.clone(),
                values: n.values.clone(),
                parents: n.parents.iter().map(|p| self.nodes[p.0].name.clone()).collect(),
                cpt: n.cpt.rows().map(<[f64]>::to_vec).collect(),
            })
            .collect()
    }

    /// Serializes to the network JSON schema.
    pub fn to_json(&self) -> String {
        let doc = NetworkDocument { nodes: self.to_specs() };
        serde_json::to_string_pretty(&doc).expect("network serialization cannot fail")
    }

    fn check_acyclic(&self) -> Result<(), NetworkError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.nodes.len()];
        for start in 0..self.nodes.len() {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start] = 1;
            while let Some((v, next)) = stack.last_mut() {
                let v = *v;
                if let Some(&c) = self.children[v].get(*next) {
                    *next += 1;
                    match state[c.0] {
                        0 => {
                            state[c.0] = 1;
                            stack.push((c.0, 0));
                        }
                        1 => return Err(NetworkError::Cycle(self.nodes[c.0].name.clone())),
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.0]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.nodes.iter().map(Node::domain_size).collect()
    }

    /// Product of the CPT entries selected by a total assignment.
    pub fn joint_probability(&self, assignment: &Assignment) -> f64 {
        let mut parent_values = Vec::new();
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                parent_values.clear();
                parent_values.extend(node.parents.iter().map(|p| assignment.get(*p)));
                node.cpt.probability(&parent_values, assignment.get(NodeId(i)))
            })
            .product()
    }

    /// Parents before children, ties broken by ascending id.
    pub fn topological_order(&self) -> Vec<NodeId> {
        let mut indegree: Vec<usize> = self.nodes.iter().map(|n| n.parents.len()).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse(v)) = ready.pop() {
            order.push(NodeId(v));
            for c in &self.children[v] {
                indegree[c.0] -= 1;
                if indegree[c.0] == 0 {
                    ready.push(Reverse(c.0));
                }
            }
        }
        debug_assert_eq!(order.len(), self.nodes.len());
        order
    }

    /// Connected components of the underlying undirected graph, each sorted
    /// by id, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(NodeId(v));
                for n in self.neighbors(NodeId(v)) {
                    if !seen[n.0] {
                        seen[n.0] = true;
                        stack.push(n.0);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    /// Parents followed by children.
    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[id.0].parents.iter().chain(&self.children[id.0]).copied()
    }

    /// True iff the underlying undirected graph is a forest.
    pub fn is_polytree(&self) -> bool {
        let edges: usize = self.nodes.iter().map(|n| n.parents.len()).sum();
        edges + self.components().len() == self.nodes.len()
    }

    /// Ancestors of the given nodes, including the nodes themselves.
    pub fn ancestral_closure(&self, seeds: impl IntoIterator<Item = NodeId>) -> Vec<bool> {
        let mut marked = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = seeds.into_iter().collect();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut marked[v.0], true) {
                continue;
            }
            stack.extend(self.nodes[v.0].parents.iter().copied());
        }
        marked
    }

    /// Number of total assignments, saturating.
    pub fn assignment_count(&self) -> u128 {
        self.nodes
            .iter()
            .fold(1u128, |acc, n| acc.saturating_mul(n.domain_size() as u128))
    }
}

/// Hard findings: node → observed value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Evidence {
    findings: BTreeMap<NodeId, ValueId>,
}

impl Evidence {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds evidence from id pairs, checking range and duplicates.
    pub fn new(
        net: &BeliefNetwork,
        findings: impl IntoIterator<Item = (NodeId, ValueId)>,
    ) -> Result<Self, EvidenceError> {
        let mut map = BTreeMap::new();
        for (node, value) in findings {
            if node.0 >= net.len() {
                return Err(EvidenceError::UnknownNode(node.to_string()));
            }
            let n = net.node(node);
            if value.0 >= n.domain_size() {
                return Err(EvidenceError::UnknownValue {
                    node: n.name.clone(),
                    value: format!("#{}", value.0),
                });
            }
            if map.insert(node, value).is_some() {
                return Err(EvidenceError::DuplicateNode(n.name.clone()));
            }
        }
        Ok(Evidence { findings: map })
    }

    /// Parses comma-separated `name=value` findings. Blank input yields
    /// empty evidence.
    pub fn parse(text: &str, net: &BeliefNetwork) -> Result<Self, EvidenceError> {
        let mut pairs = Vec::new();
        let mut seen = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| EvidenceError::Malformed(item.to_string()))?;
            let (name, value) = (name.trim(), value.trim());
            let node = net
                .node_id(name)
                .ok_or_else(|| EvidenceError::UnknownNode(name.to_string()))?;
            let v = net
                .node(node)
                .value_id(value)
                .ok_or_else(|| EvidenceError::UnknownValue {
                    node: name.to_string(),
                    value: value.to_string(),
                })?;
            if seen.contains(&node) {
                return Err(EvidenceError::DuplicateNode(name.to_string()));
            }
            seen.push(node);
            pairs.push((node, v));
        }
        Evidence::new(net, pairs)
    }

    pub fn get(&self, node: NodeId) -> Option<ValueId> {
        self.findings.get(&node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, ValueId)> + '_ {
        self.findings.iter().map(|(n, v)| (*n, *v))
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.findings.keys().copied()
    }

    /// True iff a total assignment agrees with every finding.
    pub fn is_consistent(&self, assignment: &Assignment) -> bool {
        self.iter().all(|(n, v)| assignment.get(n) == v)
    }
}

/// Total assignment of a value to every network node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Assignment {
    values: Vec<ValueId>,
}

impl Assignment {
    pub fn new(values: Vec<ValueId>) -> Self {
        Assignment { values }
    }

    pub fn get(&self, node: NodeId) -> ValueId {
        self.values[node.0]
    }

    pub fn values(&self) -> &[ValueId] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates every total assignment of `net` in lexicographic
    /// (NodeId, ValueId) order.
    pub fn enumerate(net: &BeliefNetwork) -> AssignmentIter {
        AssignmentIter {
            sizes: net.domain_sizes(),
            next: Some(vec![ValueId(0); net.len()]),
        }
    }
}

pub struct AssignmentIter {
    sizes: Vec<usize>,
    next: Option<Vec<ValueId>>,
}

impl Iterator for AssignmentIter {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carry = true;
        for (slot, size) in succ.iter_mut().zip(&self.sizes).rev() {
            slot.0 += 1;
            if slot.0 < *size {
                carry = false;
                break;
            }
            slot.0 = 0;
        }
        if !carry {
            self.next = Some(succ);
        }
        Some(Assignment::new(current))
    }
}

/// Assignment that may leave nodes unset.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PartialAssignment {
    values: Vec<Option<ValueId>>,
}

impl PartialAssignment {
    pub fn unset(len: usize) -> Self {
        PartialAssignment {
            values: vec![None; len],
        }
    }

    pub fn get(&self, node: NodeId) -> Option<ValueId> {
        self.values[node.0]
    }

    pub fn set(&mut self, node: NodeId, value: ValueId) {
        self.values[node.0] = Some(value);
    }

    pub fn values(&self) -> &[Option<ValueId>] {
        &self.values
    }

    pub fn assigned(&self) -> impl Iterator<Item = (NodeId, ValueId)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (NodeId(i), v)))
    }

    pub fn is_total(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn to_total(&self) -> Option<Assignment> {
        self.values
            .iter()
            .copied()
            .collect::<Option<Vec<_>>>()
            .map(Assignment::new)
    }

    /// True iff every assigned node has all its parents assigned.
    pub fn is_parent_closed(&self, net: &BeliefNetwork) -> bool {
        self.assigned()
            .all(|(n, _)| net.node(n).parents.iter().all(|p| self.values[p.0].is_some()))
    }
}

impl From<Assignment> for PartialAssignment {
    fn from(a: Assignment) -> Self {
        PartialAssignment {
            values: a.values.into_iter().map(Some).collect(),
        }
    }
}
