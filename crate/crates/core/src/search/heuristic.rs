use serde::Serialize;

use super::{PartialSolution, SearchMode};
use crate::compile::WbfDag;
use crate::network::NodeId;

/// Lower bound on the cost still to be paid to turn a state into a goal.
pub trait Heuristic {
    fn estimate(&self, dag: &WbfDag, state: &PartialSolution) -> f64;
}

/// Scores a state by the cost collected so far.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroHeuristic;

impl Heuristic for ZeroHeuristic {
    fn estimate(&self, _: &WbfDag, _: &PartialSolution) -> f64 {
        0.0
    }
}

pub fn heuristic_zero() -> ZeroHeuristic {
    ZeroHeuristic
}

/// Sums, over every gadget that must still be resolved, the cheapest entry
/// that gadget could select. Each resolved gadget pays for exactly one
/// entry, so the sum never overestimates.
#[derive(Clone, Debug)]
pub struct MinEntryHeuristic {
    terms: Vec<(NodeId, f64)>,
}

impl MinEntryHeuristic {
    /// Gadgets counted are those the given mode resolves: all of them in
    /// complete mode, evidence ancestors in ancestral mode.
    pub fn for_mode(dag: &WbfDag, mode: SearchMode) -> Self {
        let terms = (0..dag.bn_len())
            .map(NodeId)
            .filter(|v| mode == SearchMode::Complete || dag.is_evidence_ancestor(*v))
            .map(|v| (v, dag.gadget(v).min_cost()))
            .filter(|(_, c)| *c > 0.0)
            .collect();
        MinEntryHeuristic { terms }
    }
}

impl Heuristic for MinEntryHeuristic {
    fn estimate(&self, dag: &WbfDag, state: &PartialSolution) -> f64 {
        self.terms
            .iter()
            .filter(|(v, _)| state.committed.get(dag.image(*v)).is_none())
            .map(|(_, c)| c)
            .sum()
    }
}

pub fn heuristic_min_entry(dag: &WbfDag) -> MinEntryHeuristic {
    MinEntryHeuristic::for_mode(dag, SearchMode::Complete)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum HeuristicKind {
    #[default]
    Zero,
    MinEntry,
}

impl HeuristicKind {
    pub fn build(self, dag: &WbfDag, mode: SearchMode) -> Box<dyn Heuristic> {
        match self {
            HeuristicKind::Zero => Box::new(ZeroHeuristic),
            HeuristicKind::MinEntry => Box::new(MinEntryHeuristic::for_mode(dag, mode)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile, CompileOptions};
    use crate::network::{BeliefNetwork, Evidence};
    use crate::search::{expand, initial_state};

    #[test]
    fn zero_is_zero_everywhere() {
        let net = BeliefNetwork::from_json(crate::network::tests::CHAIN2).unwrap();
        let dag = compile(&net, &Evidence::parse("B=t", &net).unwrap(), CompileOptions::default()).unwrap();
        let mut state = initial_state(&dag, SearchMode::Complete);
        assert_eq!(heuristic_zero().estimate(&dag, &state), 0.0);
        while !state.is_goal() {
            state = expand(&dag, &state).unwrap().remove(0);
            assert_eq!(heuristic_zero().estimate(&dag, &state), 0.0);
        }
    }

    #[test]
    fn min_entry_drops_resolved_gadgets() {
        let net = BeliefNetwork::from_json(crate::network::tests::CHAIN2).unwrap();
        let dag = compile(&net, &Evidence::parse("B=t", &net).unwrap(), CompileOptions::default()).unwrap();
        let h = heuristic_min_entry(&dag);
        let mut state = initial_state(&dag, SearchMode::Complete);
        while !state.is_goal() {
            state = expand(&dag, &state).unwrap().remove(0);
        }
        assert_eq!(h.estimate(&dag, &state), 0.0);
    }

    #[test]
    fn deterministic_gadget_contributes_nothing() {
        let net = BeliefNetwork::from_json(
            &crate::network::tests::CHAIN2.replace("[0.9,0.1],[0.5,0.5]", "[1.0,0.0],[0.0,1.0]"),
        )
        .unwrap();
        let dag = compile(&net, &Evidence::empty(), CompileOptions::default()).unwrap();
        assert_eq!(dag.gadget(NodeId(1)).min_cost(), 0.0);
        let h = heuristic_min_entry(&dag);
        let init = initial_state(&dag, SearchMode::Complete);
        assert!((h.estimate(&dag, &init) + 0.8f64.ln()).abs() < 1e-15);
    }
}
