//! Compilation of a Bayesian network plus evidence into a weighted
//! boolean-function DAG, and the declarative semantics of that DAG:
//! label evaluation, models, satisfaction, cost and the induced network
//! assignment.
//!
//! Every network node `v` becomes a gadget:
//!
//! * root `v` with `m` values: `m` choice roots (cost of `T` is `-ln P(v=i)`)
//!   feeding an exclusive-or image node;
//! * non-root `v`: one cost root and one selector per (own value, parent
//!   configuration) pair. A selector reads the parents' images and its cost
//!   root and is `T` only when the cost root is `T` and the parents carry the
//!   selector's configuration. The image is the exclusive-or of the
//!   selectors.
//!
//! A single evidence sink conjoins the evidence images. Node ids are
//! allocated so that every parent precedes its children.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::network::{Assignment, BeliefNetwork, Evidence, NodeId, PartialAssignment, ValueId};

/// Cost assigned to `T` on a zero-probability cost root when zero entries
/// are kept in the DAG. The search never commits such roots.
pub const ZERO_PROBABILITY_PENALTY: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct WbfNodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum WbfValue {
    Domain(ValueId),
    T,
    F,
    U,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    ChoiceRoot {
        bn_node: NodeId,
        value: ValueId,
    },
    CostRoot {
        bn_node: NodeId,
        own_value: ValueId,
        parent_tuple: Vec<ValueId>,
    },
    Selector {
        bn_node: NodeId,
        own_value: ValueId,
        parent_tuple: Vec<ValueId>,
    },
    Image {
        bn_node: NodeId,
    },
    EvidenceAnd,
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::ChoiceRoot { .. } => "ChoiceRoot",
            NodeKind::CostRoot { .. } => "CostRoot",
            NodeKind::Selector { .. } => "Selector",
            NodeKind::Image { .. } => "Image",
            NodeKind::EvidenceAnd => "EvidenceAnd",
        }
    }

    pub fn is_root(&self) -> bool {
        matches!(self, NodeKind::ChoiceRoot { .. } | NodeKind::CostRoot { .. })
    }
}

/// Node label, kept as data so the DAG can be inspected and printed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Label {
    /// Domain value of the single `T` parent when every other parent is `F`;
    /// `U` otherwise. `value_of_branch[i]` is the value carried by parent `i`.
    XorImage {
        value_of_branch: Vec<ValueId>,
    },
    /// `T` iff the cost parent (when present) is `T` and image parent `i`
    /// holds `required_tuple[i]`.
    SelectorMatch {
        required_tuple: Vec<ValueId>,
        cost_parent_position: Option<usize>,
    },
    /// `T` iff every listed parent position holds its value.
    EvidenceMatch {
        required: Vec<(usize, ValueId)>,
    },
    ConstTrue,
}

impl Label {
    pub fn arity(&self) -> usize {
        match self {
            Label::XorImage { value_of_branch } => value_of_branch.len(),
            Label::SelectorMatch {
                required_tuple,
                cost_parent_position,
            } => required_tuple.len() + usize::from(cost_parent_position.is_some()),
            Label::EvidenceMatch { required } => required.len(),
            Label::ConstTrue => 0,
        }
    }

    fn apply(&self, inputs: &[WbfValue]) -> WbfValue {
        match self {
            Label::XorImage { value_of_branch } => {
                let mut chosen = None;
                for (i, v) in inputs.iter().enumerate() {
                    match v {
                        WbfValue::T if chosen.is_none() => chosen = Some(i),
                        WbfValue::F => {}
                        _ => return WbfValue::U,
                    }
                }
                chosen.map_or(WbfValue::U, |i| WbfValue::Domain(value_of_branch[i]))
            }
            Label::SelectorMatch {
                required_tuple,
                cost_parent_position,
            } => {
                let cost_ok = cost_parent_position.is_none_or(|p| inputs[p] == WbfValue::T);
                let tuple_ok = required_tuple
                    .iter()
                    .zip(inputs)
                    .all(|(want, got)| *got == WbfValue::Domain(*want));
                bool_value(cost_ok && tuple_ok)
            }
            Label::EvidenceMatch { required } => {
                bool_value(required.iter().all(|(pos, v)| inputs[*pos] == WbfValue::Domain(*v)))
            }
            Label::ConstTrue => WbfValue::T,
        }
    }
}

fn bool_value(b: bool) -> WbfValue {
    if b {
        WbfValue::T
    } else {
        WbfValue::F
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WbfNode {
    pub kind: NodeKind,
    pub parents: Vec<WbfNodeId>,
    /// `None` for roots.
    pub label: Option<Label>,
    /// Cost of `T` on a root; zero elsewhere.
    pub cost_true: f64,
    /// Root whose probability is zero, kept only when pruning is off.
    pub forbidden: bool,
}

impl WbfNode {
    pub fn is_root(&self) -> bool {
        self.kind.is_root()
    }
}

/// One way of giving a network node a value: the choice root of a root
/// node, or the (cost root, selector) pair of a non-root node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GadgetEntry {
    pub own_value: ValueId,
    pub parent_tuple: Vec<ValueId>,
    pub selector: Option<WbfNodeId>,
    /// Choice root for roots; cost root for non-roots. `None` when a
    /// probability-one cost root was pruned away.
    pub cost_root: Option<WbfNodeId>,
    /// Cost incurred by selecting this entry.
    pub cost: f64,
    /// Original CPT probability.
    pub probability: f64,
    pub forbidden: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gadget {
    pub image: WbfNodeId,
    pub parents: Vec<NodeId>,
    pub entries: Vec<GadgetEntry>,
    by_value: Vec<Vec<usize>>,
}

impl Gadget {
    /// Indices of the entries with the given own value.
    pub fn entries_for(&self, value: ValueId) -> &[usize] {
        &self.by_value[value.0]
    }

    pub fn is_root(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn domain_size(&self) -> usize {
        self.by_value.len()
    }

    /// Smallest cost among selectable entries; zero if none are selectable.
    pub fn min_cost(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| !e.forbidden)
            .map(|e| e.cost)
            .min_by(f64::total_cmp)
            .unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CompileOptions {
    /// Omit gadget parts for probability 0 and 1 entries.
    pub prune01: bool,
    /// Zero the cost of every non-prior cost root (partial MAP over roots).
    pub zero_nonprior: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            prune01: true,
            zero_nonprior: false,
        }
    }
}

impl CompileOptions {
    pub fn unpruned() -> Self {
        CompileOptions {
            prune01: false,
            zero_nonprior: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CompileError {
    #[error("evidence references unknown node {0}")]
    UnknownEvidenceNode(NodeId),
    #[error("evidence assigns out-of-range value {value:?} to node {node}")]
    UnknownEvidenceValue { node: NodeId, value: ValueId },
    #[error("node {node:?} expects {expected} inputs, got {found}")]
    Arity {
        node: WbfNodeId,
        expected: usize,
        found: usize,
    },
    #[error("node {0:?} is a root and has no label")]
    NoLabel(WbfNodeId),
    #[error("image of network node {0} holds U")]
    UndefinedImage(NodeId),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub choice_roots: usize,
    pub cost_roots: usize,
    pub selectors: usize,
    pub images: usize,
    pub evidence: usize,
}

impl KindCounts {
    pub fn total(&self) -> usize {
        self.choice_roots + self.cost_roots + self.selectors + self.images + self.evidence
    }
}

/// The compiled DAG. Immutable after [`compile`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WbfDag {
    nodes: Vec<WbfNode>,
    gadgets: Vec<Gadget>,
    sink: WbfNodeId,
    evidence: (WbfNodeId, WbfValue),
    findings: Vec<(NodeId, ValueId)>,
    topological: Vec<NodeId>,
    evidence_ancestors: Vec<bool>,
    options: CompileOptions,
}

impl WbfDag {
    pub fn nodes(&self) -> &[WbfNode] {
        &self.nodes
    }

    pub fn node(&self, id: WbfNodeId) -> &WbfNode {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn gadgets(&self) -> &[Gadget] {
        &self.gadgets
    }

    pub fn gadget(&self, bn_node: NodeId) -> &Gadget {
        &self.gadgets[bn_node.0]
    }

    pub fn image(&self, bn_node: NodeId) -> WbfNodeId {
        self.gadgets[bn_node.0].image
    }

    /// Network node whose image is `id`, if `id` is an image.
    pub fn image_of(&self, id: WbfNodeId) -> Option<NodeId> {
        match self.nodes[id.0].kind {
            NodeKind::Image { bn_node } => Some(bn_node),
            _ => None,
        }
    }

    pub fn sink(&self) -> WbfNodeId {
        self.sink
    }

    /// The (sink, required value) pair.
    pub fn evidence(&self) -> (WbfNodeId, WbfValue) {
        self.evidence
    }

    pub fn findings(&self) -> &[(NodeId, ValueId)] {
        &self.findings
    }

    pub fn bn_len(&self) -> usize {
        self.gadgets.len()
    }

    /// Topological order of the underlying network.
    pub fn bn_topological_order(&self) -> &[NodeId] {
        &self.topological
    }

    /// True for evidence nodes and their ancestors.
    pub fn is_evidence_ancestor(&self, bn_node: NodeId) -> bool {
        self.evidence_ancestors[bn_node.0]
    }

    pub fn options(&self) -> CompileOptions {
        self.options
    }

    /// Cost of giving `node` the value `value`.
    pub fn cost(&self, node: WbfNodeId, value: WbfValue) -> f64 {
        let n = &self.nodes[node.0];
        if n.is_root() && value == WbfValue::T {
            n.cost_true
        } else {
            0.0
        }
    }

    pub fn kind_counts(&self) -> KindCounts {
        let mut c = KindCounts::default();
        for n in &self.nodes {
            match n.kind {
                NodeKind::ChoiceRoot { .. } => c.choice_roots += 1,
                NodeKind::CostRoot { .. } => c.cost_roots += 1,
                NodeKind::Selector { .. } => c.selectors += 1,
                NodeKind::Image { .. } => c.images += 1,
                NodeKind::EvidenceAnd => c.evidence += 1,
            }
        }
        c
    }

    /// Edge counts grouped by the kind of the child node.
    pub fn edge_counts(&self) -> KindCounts {
        let mut c = KindCounts::default();
        for n in &self.nodes {
            let k = n.parents.len();
            match n.kind {
                NodeKind::ChoiceRoot { .. } => c.choice_roots += k,
                NodeKind::CostRoot { .. } => c.cost_roots += k,
                NodeKind::Selector { .. } => c.selectors += k,
                NodeKind::Image { .. } => c.images += k,
                NodeKind::EvidenceAnd => c.evidence += k,
            }
        }
        c
    }

    /// Applies the label of `node` to its parent values.
    pub fn evaluate_label(&self, node: WbfNodeId, parent_values: &[WbfValue]) -> Result<WbfValue, CompileError> {
        evaluate_label(node, &self.nodes[node.0], parent_values)
    }

    /// Every assigned root holds `T` or `F`; every assigned non-root has all
    /// parents assigned and equals its label applied to them.
    pub fn is_model(&self, f: &WbfAssignment) -> bool {
        let mut inputs = Vec::new();
        f.iter().all(|(id, value)| {
            let node = &self.nodes[id.0];
            if node.is_root() {
                return matches!(value, WbfValue::T | WbfValue::F);
            }
            inputs.clear();
            for p in &node.parents {
                match f.get(*p) {
                    Some(v) => inputs.push(v),
                    None => return false,
                }
            }
            self.evaluate_label(id, &inputs) == Ok(value)
        })
    }

    pub fn is_satisfying(&self, f: &WbfAssignment) -> bool {
        let (sink, required) = self.evidence;
        f.get(sink) == Some(required)
    }

    /// Sum of costs over assigned nodes.
    pub fn model_cost(&self, f: &WbfAssignment) -> f64 {
        f.iter().map(|(id, v)| self.cost(id, v)).sum()
    }

    /// Network assignment read off the image nodes that hold domain values.
    pub fn induced_assignment(&self, f: &WbfAssignment) -> Result<PartialAssignment, CompileError> {
        let mut out = PartialAssignment::unset(self.gadgets.len());
        for (i, g) in self.gadgets.iter().enumerate() {
            match f.get(g.image) {
                Some(WbfValue::Domain(v)) => out.set(NodeId(i), v),
                Some(WbfValue::U) => return Err(CompileError::UndefinedImage(NodeId(i))),
                _ => {}
            }
        }
        Ok(out)
    }

    /// Extends an assignment of roots to a full model: unassigned roots
    /// become `F` and every other node takes its label value. Values given
    /// for non-roots are ignored.
    pub fn complete(&self, roots: &WbfAssignment) -> WbfAssignment {
        let mut values: Vec<WbfValue> = Vec::with_capacity(self.nodes.len());
        let mut inputs = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let v = if node.is_root() {
                roots.get(WbfNodeId(i)).unwrap_or(WbfValue::F)
            } else {
                inputs.clear();
                inputs.extend(node.parents.iter().map(|p| values[p.0]));
                node.label.as_ref().expect("non-root nodes carry labels").apply(&inputs)
            };
            values.push(v);
        }
        WbfAssignment::from_dense(values)
    }

    /// Drops every node holding `U`, and then every non-root with a dropped
    /// parent. The result is still a model when `f` is.
    pub fn defined_part(&self, f: &WbfAssignment) -> WbfAssignment {
        let mut out = WbfAssignment::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let id = WbfNodeId(i);
            let Some(v) = f.get(id) else { continue };
            if v != WbfValue::U && node.parents.iter().all(|p| out.get(*p).is_some()) {
                out.set(id, v);
            }
        }
        out
    }

    /// Model obtained by selecting, for each network node, the gadget entry
    /// at the given index (or nothing).
    pub fn model_from_entries(&self, chosen: &[Option<usize>]) -> WbfAssignment {
        let mut roots = WbfAssignment::new();
        for (g, choice) in self.gadgets.iter().zip(chosen) {
            if let Some(root) = choice.and_then(|e| g.entries[e].cost_root) {
                roots.set(root, WbfValue::T);
            }
        }
        self.complete(&roots)
    }

    /// The canonical satisfying model for a total network assignment, or
    /// `None` when some entry it needs is absent or forbidden.
    pub fn model_for_assignment(&self, a: &Assignment) -> Option<WbfAssignment> {
        let mut chosen = Vec::with_capacity(self.gadgets.len());
        for (i, g) in self.gadgets.iter().enumerate() {
            let tuple: Vec<ValueId> = g.parents.iter().map(|p| a.get(*p)).collect();
            let idx = g
                .entries_for(a.get(NodeId(i)))
                .iter()
                .copied()
                .find(|e| g.entries[*e].parent_tuple == tuple && !g.entries[*e].forbidden)?;
            chosen.push(Some(idx));
        }
        Some(self.model_from_entries(&chosen))
    }
}

/// Applies `node`'s label to its parent values.
pub fn evaluate_label(id: WbfNodeId, node: &WbfNode, parent_values: &[WbfValue]) -> Result<WbfValue, CompileError> {
    let label = node.label.as_ref().ok_or(CompileError::NoLabel(id))?;
    if parent_values.len() != label.arity() || parent_values.len() != node.parents.len() {
        return Err(CompileError::Arity {
            node: id,
            expected: node.parents.len(),
            found: parent_values.len(),
        });
    }
    Ok(label.apply(parent_values))
}

/// Partial assignment of values to DAG nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct WbfAssignment {
    values: BTreeMap<WbfNodeId, WbfValue>,
}

impl WbfAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    fn from_dense(values: Vec<WbfValue>) -> Self {
        WbfAssignment {
            values: values.into_iter().enumerate().map(|(i, v)| (WbfNodeId(i), v)).collect(),
        }
    }

    pub fn get(&self, node: WbfNodeId) -> Option<WbfValue> {
        self.values.get(&node).copied()
    }

    pub fn set(&mut self, node: WbfNodeId, value: WbfValue) -> Option<WbfValue> {
        self.values.insert(node, value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (WbfNodeId, WbfValue)> + '_ {
        self.values.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

struct Builder {
    nodes: Vec<WbfNode>,
}

impl Builder {
    fn push(&mut self, node: WbfNode) -> WbfNodeId {
        self.nodes.push(node);
        WbfNodeId(self.nodes.len() - 1)
    }

    fn root(&mut self, kind: NodeKind, cost_true: f64, forbidden: bool) -> WbfNodeId {
        self.push(WbfNode {
            kind,
            parents: Vec::new(),
            label: None,
            cost_true,
            forbidden,
        })
    }
}

fn neg_ln(p: f64) -> f64 {
    // -ln(1) is -0.0; keep costs non-negative zero
    if p >= 1.0 {
        0.0
    } else {
        -p.ln()
    }
}

/// Builds the DAG for `net` under `evidence`.
pub fn compile(net: &BeliefNetwork, evidence: &Evidence, options: CompileOptions) -> Result<WbfDag, CompileError> {
    for (node, value) in evidence.iter() {
        if node.0 >= net.len() {
            return Err(CompileError::UnknownEvidenceNode(node));
        }
        if value.0 >= net.node(node).domain_size() {
            return Err(CompileError::UnknownEvidenceValue { node, value });
        }
    }

    let topological = net.topological_order();
    let mut b = Builder { nodes: Vec::new() };
    let mut gadgets: Vec<Option<Gadget>> = vec![None; net.len()];

    for &v in &topological {
        let node = net.node(v);
        let m = node.domain_size();
        let mut entries = Vec::new();
        if node.is_root() {
            let row = node.cpt.row(0);
            for (i, &p) in row.iter().enumerate() {
                if p == 0.0 && options.prune01 {
                    continue;
                }
                let forbidden = p == 0.0;
                let cost = if forbidden { ZERO_PROBABILITY_PENALTY } else { neg_ln(p) };
                let id = b.root(
                    NodeKind::ChoiceRoot {
                        bn_node: v,
                        value: ValueId(i),
                    },
                    cost,
                    forbidden,
                );
                entries.push(GadgetEntry {
                    own_value: ValueId(i),
                    parent_tuple: Vec::new(),
                    selector: None,
                    cost_root: Some(id),
                    cost,
                    probability: p,
                    forbidden,
                });
            }
        } else {
            let parent_images: Vec<WbfNodeId> = node
                .parents
                .iter()
                .map(|p| gadgets[p.0].as_ref().expect("parents compiled first").image)
                .collect();
            for row in 0..node.cpt.row_count() {
                let tuple = node.cpt.parent_tuple(row);
                for (d0, &p) in node.cpt.row(row).iter().enumerate() {
                    let own = ValueId(d0);
                    if options.prune01 && p == 0.0 {
                        continue;
                    }
                    let forbidden = p == 0.0;
                    let base = if forbidden { ZERO_PROBABILITY_PENALTY } else { neg_ln(p) };
                    let cost = if options.zero_nonprior && !forbidden { 0.0 } else { base };
                    let cost_root = if options.prune01 && p == 1.0 {
                        None
                    } else {
                        Some(b.root(
                            NodeKind::CostRoot {
                                bn_node: v,
                                own_value: own,
                                parent_tuple: tuple.clone(),
                            },
                            cost,
                            forbidden,
                        ))
                    };
                    let mut parents = parent_images.clone();
                    let cost_parent_position = cost_root.map(|c| {
                        parents.push(c);
                        parents.len() - 1
                    });
                    let selector = b.push(WbfNode {
                        kind: NodeKind::Selector {
                            bn_node: v,
                            own_value: own,
                            parent_tuple: tuple.clone(),
                        },
                        parents,
                        label: Some(Label::SelectorMatch {
                            required_tuple: tuple.clone(),
                            cost_parent_position,
                        }),
                        cost_true: 0.0,
                        forbidden: false,
                    });
                    entries.push(GadgetEntry {
                        own_value: own,
                        parent_tuple: tuple.clone(),
                        selector: Some(selector),
                        cost_root,
                        cost,
                        probability: p,
                        forbidden,
                    });
                }
            }
        }
        // root branches are the choice roots themselves
        let image_parents: Vec<WbfNodeId> = entries
            .iter()
            .map(|e| e.selector.or(e.cost_root).expect("every entry has a branch node"))
            .collect();
        let image_branches = entries.iter().map(|e| e.own_value).collect();

        let image = b.push(WbfNode {
            kind: NodeKind::Image { bn_node: v },
            parents: image_parents,
            label: Some(Label::XorImage {
                value_of_branch: image_branches,
            }),
            cost_true: 0.0,
            forbidden: false,
        });
        let mut by_value = vec![Vec::new(); m];
        for (i, e) in entries.iter().enumerate() {
            by_value[e.own_value.0].push(i);
        }
        gadgets[v.0] = Some(Gadget {
            image,
            parents: node.parents.clone(),
            entries,
            by_value,
        });
    }
    let gadgets: Vec<Gadget> = gadgets.into_iter().map(|g| g.expect("every node compiled")).collect();

    let findings: Vec<(NodeId, ValueId)> = evidence.iter().collect();
    let label = if findings.is_empty() {
        Label::ConstTrue
    } else {
        Label::EvidenceMatch {
            required: findings.iter().enumerate().map(|(i, (_, v))| (i, *v)).collect(),
        }
    };
    let sink = b.push(WbfNode {
        kind: NodeKind::EvidenceAnd,
        parents: findings.iter().map(|(n, _)| gadgets[n.0].image).collect(),
        label: Some(label),
        cost_true: 0.0,
        forbidden: false,
    });

    Ok(WbfDag {
        nodes: b.nodes,
        gadgets,
        sink,
        evidence: (sink, WbfValue::T),
        evidence_ancestors: net.ancestral_closure(evidence.nodes()),
        findings,
        topological,
        options,
    })
}

/// Node count of the unpruned DAG.
pub fn unpruned_size(net: &BeliefNetwork) -> usize {
    1 + net
        .nodes()
        .iter()
        .map(|n| {
            if n.is_root() {
                1 + n.domain_size()
            } else {
                2 * n.cpt.entry_count() + 1
            }
        })
        .sum::<usize>()
}
