#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wbfmap::generate::{random_evidence, random_network, GeneratorConfig};
use wbfmap::{BeliefNetwork, Evidence};

pub const CHAIN2: &str = r#"{"nodes":[{"name":"A","values":["t","f"],"parents":[],"cpt":[[0.8,0.2]]},{"name":"B","values":["t","f"],"parents":["A"],"cpt":[[0.9,0.1],[0.5,0.5]]}]}"#;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random network with 1..=max_nodes nodes, <= 3 values, in-degree <= 3, and
/// evidence on 0..=2 nodes.
pub fn instance(seed: u64, max_nodes: usize, deterministic_fraction: f64) -> (BeliefNetwork, Evidence) {
    let mut r = rng(seed);
    let cfg = GeneratorConfig {
        nodes: 1 + (seed as usize % max_nodes),
        min_values: 2,
        max_values: 3,
        max_in_degree: 3,
        deterministic_fraction,
        polytree: false,
    };
    let net = random_network(&cfg, &mut r);
    let ev = random_evidence(&net, 2, &mut r);
    (net, ev)
}

pub fn polytree_instance(seed: u64, nodes: usize) -> (BeliefNetwork, Evidence) {
    let mut r = rng(seed);
    let cfg = GeneratorConfig {
        nodes,
        polytree: true,
        ..GeneratorConfig::default()
    };
    let net = random_network(&cfg, &mut r);
    let ev = random_evidence(&net, 2, &mut r);
    (net, ev)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
