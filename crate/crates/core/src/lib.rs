//! Most probable assignments (MAP) of discrete Bayesian networks.
//!
//! A network and its evidence are compiled into a weighted boolean-function
//! DAG ([`compile`]) in which every satisfying model corresponds to one
//! network assignment and costs `-ln` of its probability. Best-first search
//! ([`search`]) then finds the cheapest satisfying model, and can keep going
//! to enumerate the next-best ones. [`oracle`] holds brute-force reference
//! answers for small networks.
//!
//! ```
//! use wbfmap::{compile, heuristic_zero, solve_map, BeliefNetwork, CompileOptions, Evidence, SearchMode};
//!
//! let net = BeliefNetwork::from_json(r#"{"nodes":[
//!     {"name":"A","values":["t","f"],"parents":[],"cpt":[[0.8,0.2]]},
//!     {"name":"B","values":["t","f"],"parents":["A"],"cpt":[[0.9,0.1],[0.5,0.5]]}]}"#).unwrap();
//! let ev = Evidence::parse("B=t", &net).unwrap();
//! let dag = compile(&net, &ev, CompileOptions::default()).unwrap();
//! let best = solve_map(&dag, &heuristic_zero(), SearchMode::Complete).unwrap();
//! assert!((best.probability - 0.72).abs() < 1e-12);
//! ```

pub mod cli;
pub mod compile;
pub mod dot;
pub mod generate;
pub mod network;
pub mod oracle;
pub mod search;

pub use compile::{compile, CompileError, CompileOptions, WbfAssignment, WbfDag, WbfNodeId, WbfValue};
pub use network::{Assignment, BeliefNetwork, Evidence, NetworkError, NodeId, PartialAssignment, ValueId};
pub use oracle::{kbest_oracle, map_oracle, partial_roots_oracle, RankedAssignment};
pub use search::{
    heuristic_min_entry, heuristic_zero, solve_kbest, solve_map, solve_map_polytree, Heuristic, SearchError,
    SearchMode, SolverResult,
};
