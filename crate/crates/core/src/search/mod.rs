//! Best-first search for minimum-cost satisfying models of a compiled DAG.
//!
//! A search state is a partial solution: a set of committed node values, a
//! queue of open demands and the accumulated cost. Search starts at the
//! evidence sink and works towards the roots. An image demand branches over
//! the gadget entries that can produce the demanded value; a conjunction
//! demand adds all of its inputs as new demands. A state with no open
//! demands is completed into a full model and emitted as a goal.
//!
//! Continuing past the first goal enumerates models, and hence network
//! assignments, in order of non-decreasing cost.

mod heuristic;
mod polytree;

pub use heuristic::{heuristic_min_entry, heuristic_zero, Heuristic, HeuristicKind, MinEntryHeuristic, ZeroHeuristic};
pub use polytree::solve_map_polytree;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::compile::{CompileError, NodeKind, WbfAssignment, WbfDag, WbfNodeId, WbfValue};
use crate::network::{PartialAssignment, ValueId};

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("no satisfying model exists")]
    NoModel,
    #[error("network is not a polytree")]
    NotPolytree,
    #[error("state has no open demand")]
    NothingToExpand,
    #[error("internal search error: {0}")]
    Internal(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Which image nodes the search must resolve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum SearchMode {
    /// Every image receives a domain value; results are total assignments.
    #[default]
    Complete,
    /// Only the evidence and its ancestors are resolved.
    Ancestral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Demand {
    /// The node must take exactly this value.
    Value(WbfValue),
    /// The image must take some domain value.
    AnyDomain,
}

/// A best-first search state.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSolution {
    committed: WbfAssignment,
    open: VecDeque<(WbfNodeId, Demand)>,
    g: f64,
    seq: u64,
}

impl PartialSolution {
    pub fn committed(&self) -> &WbfAssignment {
        &self.committed
    }

    pub fn open(&self) -> impl Iterator<Item = (WbfNodeId, Demand)> + '_ {
        self.open.iter().copied()
    }

    pub fn is_goal(&self) -> bool {
        self.open.is_empty()
    }

    /// Accumulated cost of the committed values.
    pub fn cost(&self) -> f64 {
        self.g
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    fn commit(&mut self, node: WbfNodeId, value: WbfValue) {
        let previous = self.committed.set(node, value);
        debug_assert!(previous.is_none() || previous == Some(value));
    }

    fn push_front_all(&mut self, demands: impl DoubleEndedIterator<Item = (WbfNodeId, Demand)>) {
        for d in demands.rev() {
            self.open.push_front(d);
        }
    }
}

/// The state the search starts from: the evidence sink must hold its
/// required value and, in complete mode, every image some domain value
/// (seeded in network topological order).
pub fn initial_state(dag: &WbfDag, mode: SearchMode) -> PartialSolution {
    let (sink, required) = dag.evidence();
    let mut open = VecDeque::new();
    open.push_back((sink, Demand::Value(required)));
    if mode == SearchMode::Complete {
        open.extend(
            dag.bn_topological_order()
                .iter()
                .map(|v| (dag.image(*v), Demand::AnyDomain)),
        );
    }
    PartialSolution {
        committed: WbfAssignment::new(),
        open,
        g: 0.0,
        seq: 0,
    }
}

/// Resolves the front demand of `state`, returning its successors in
/// creation order.
pub fn expand(dag: &WbfDag, state: &PartialSolution) -> Result<Vec<PartialSolution>, SearchError> {
    let mut base = state.clone();
    let (node, demand) = base.open.pop_front().ok_or(SearchError::NothingToExpand)?;

    match dag.node(node).kind {
        NodeKind::EvidenceAnd => {
            let (_, required) = dag.evidence();
            if demand != Demand::Value(required) {
                return Err(SearchError::Internal(format!("evidence sink demanded {demand:?}")));
            }
            match base.committed.get(node) {
                Some(v) if v == required => return Ok(vec![base]),
                Some(_) => return Ok(Vec::new()),
                None => {}
            }
            base.commit(node, required);
            let demands: Vec<_> = dag
                .findings()
                .iter()
                .map(|(n, v)| (dag.image(*n), Demand::Value(WbfValue::Domain(*v))))
                .collect();
            base.push_front_all(demands.into_iter());
            Ok(vec![base])
        }
        NodeKind::Image { bn_node } => {
            let target = match demand {
                Demand::Value(WbfValue::Domain(d)) => Some(d),
                Demand::AnyDomain => None,
                Demand::Value(v) => {
                    return Err(SearchError::Internal(format!("image demanded non-domain value {v:?}")));
                }
            };
            match base.committed.get(node) {
                Some(WbfValue::Domain(current)) => {
                    return Ok(if target.is_none_or(|d| d == current) {
                        vec![base]
                    } else {
                        Vec::new()
                    });
                }
                Some(other) => {
                    return Err(SearchError::Internal(format!("image committed to {other:?}")));
                }
                None => {}
            }

            let gadget = dag.gadget(bn_node);
            let values: Vec<ValueId> = match target {
                Some(d) => vec![d],
                None => (0..gadget.domain_size()).map(ValueId).collect(),
            };
            let mut out = Vec::new();
            for d in values {
                for &idx in gadget.entries_for(d) {
                    let entry = &gadget.entries[idx];
                    if entry.forbidden {
                        continue;
                    }
                    let clash = gadget.parents.iter().zip(&entry.parent_tuple).any(|(p, want)| {
                        matches!(base.committed.get(dag.image(*p)), Some(WbfValue::Domain(c)) if c != *want)
                    });
                    if clash {
                        continue;
                    }
                    let mut next = base.clone();
                    next.commit(node, WbfValue::Domain(d));
                    if let Some(root) = entry.cost_root {
                        next.commit(root, WbfValue::T);
                    }
                    next.g += entry.cost;
                    match entry.selector {
                        Some(sel) => {
                            next.commit(sel, WbfValue::T);
                            let demands: Vec<_> = gadget
                                .parents
                                .iter()
                                .zip(&entry.parent_tuple)
                                .map(|(p, v)| (dag.image(*p), Demand::Value(WbfValue::Domain(*v))))
                                .collect();
                            next.push_front_all(demands.into_iter());
                        }
                        None => {
                            // root gadget: the other choices are false
                            for (j, sibling) in gadget.entries.iter().enumerate() {
                                if j != idx {
                                    if let Some(r) = sibling.cost_root {
                                        next.commit(r, WbfValue::F);
                                    }
                                }
                            }
                        }
                    }
                    out.push(next);
                }
            }
            Ok(out)
        }
        _ => Err(SearchError::Internal(format!(
            "demand on {} node {node:?}",
            dag.node(node).kind.name()
        ))),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// States popped and expanded (for the polytree solver: gadget entries
    /// resolved).
    pub expansions: u64,
    pub generated: u64,
    pub peak_queue: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverResult {
    pub assignment: PartialAssignment,
    pub cost: f64,
    pub probability: f64,
    pub stats: SearchStats,
    #[serde(skip)]
    pub model: WbfAssignment,
}

struct Queued {
    f: f64,
    state: PartialSolution,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // max-heap: smaller f, then older seq, is greater
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.state.seq.cmp(&self.state.seq))
    }
}

/// Best-first search over partial solutions; yields goals in order of
/// non-decreasing cost.
pub struct BestFirst<'a> {
    dag: &'a WbfDag,
    heuristic: &'a dyn Heuristic,
    queue: BinaryHeap<Queued>,
    next_seq: u64,
    stats: SearchStats,
}

impl<'a> BestFirst<'a> {
    pub fn new(dag: &'a WbfDag, heuristic: &'a dyn Heuristic, mode: SearchMode) -> Self {
        Self::from_state(dag, heuristic, initial_state(dag, mode))
    }

    /// Starts the search from an arbitrary state.
    pub fn from_state(dag: &'a WbfDag, heuristic: &'a dyn Heuristic, state: PartialSolution) -> Self {
        let mut search = BestFirst {
            dag,
            heuristic,
            queue: BinaryHeap::new(),
            next_seq: 0,
            stats: SearchStats::default(),
        };
        search.push(state);
        search
    }

    fn push(&mut self, mut state: PartialSolution) {
        state.seq = self.next_seq;
        self.next_seq += 1;
        self.stats.generated += 1;
        let f = state.g + self.heuristic.estimate(self.dag, &state);
        self.queue.push(Queued { f, state });
        self.stats.peak_queue = self.stats.peak_queue.max(self.queue.len());
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    /// Runs until the next goal; `Ok(None)` once the space is exhausted.
    pub fn next_goal(&mut self) -> Result<Option<SolverResult>, SearchError> {
        while let Some(Queued { state, .. }) = self.queue.pop() {
            if state.is_goal() {
                return self.finish(state).map(Some);
            }
            self.stats.expansions += 1;
            for succ in expand(self.dag, &state)? {
                self.push(succ);
            }
        }
        Ok(None)
    }

    fn finish(&self, state: PartialSolution) -> Result<SolverResult, SearchError> {
        let dag = self.dag;
        let mut roots = WbfAssignment::new();
        for (id, v) in state.committed.iter() {
            if dag.node(id).is_root() {
                roots.set(id, v);
            }
        }
        let model = dag.defined_part(&dag.complete(&roots));
        for (id, v) in state.committed.iter() {
            if model.get(id) != Some(v) {
                return Err(SearchError::Internal(format!(
                    "committed {v:?} at {id:?} but the completed model holds {:?}",
                    model.get(id)
                )));
            }
        }
        if !dag.is_satisfying(&model) {
            return Err(SearchError::Internal("goal does not satisfy the evidence".into()));
        }
        let assignment = dag.induced_assignment(&model)?;
        Ok(SolverResult {
            assignment,
            cost: state.g,
            probability: (-state.g).exp(),
            stats: self.stats,
            model,
        })
    }
}

/// Minimum-cost satisfying model.
pub fn solve_map(dag: &WbfDag, heuristic: &dyn Heuristic, mode: SearchMode) -> Result<SolverResult, SearchError> {
    BestFirst::new(dag, heuristic, mode)
        .next_goal()?
        .ok_or(SearchError::NoModel)
}

/// Up to `k` best models, in order of non-decreasing cost.
pub fn solve_kbest(
    dag: &WbfDag,
    k: usize,
    heuristic: &dyn Heuristic,
    mode: SearchMode,
) -> Result<Vec<SolverResult>, SearchError> {
    let mut search = BestFirst::new(dag, heuristic, mode);
    let mut out: Vec<SolverResult> = Vec::with_capacity(k);
    let mut seen = HashSet::new();
    while out.len() < k {
        let Some(result) = search.next_goal()? else { break };
        if !seen.insert(result.assignment.clone()) {
            return Err(SearchError::Internal("two goals induced the same assignment".into()));
        }
        out.push(result);
    }
    Ok(out)
}

/// Cost of the cheapest goal reachable from `state`, minus what `state` has
/// already paid. `None` if no goal is reachable.
pub fn remaining_cost(dag: &WbfDag, state: &PartialSolution) -> Result<Option<f64>, SearchError> {
    let h = ZeroHeuristic;
    let mut search = BestFirst::from_state(dag, &h, state.clone());
    Ok(search.next_goal()?.map(|r| r.cost - state.g))
}
