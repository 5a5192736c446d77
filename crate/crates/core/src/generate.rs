//! Seeded random networks and evidence for property tests and the `gen`
//! command.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::network::{BeliefNetwork, Evidence, NodeId, NodeSpec, ValueId};

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub nodes: usize,
    pub min_values: usize,
    pub max_values: usize,
    pub max_in_degree: usize,
    /// Probability that a CPT row is one-hot (entries 0 and 1).
    pub deterministic_fraction: f64,
    /// Generate a connected polytree instead of a general DAG.
    pub polytree: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            nodes: 8,
            min_values: 2,
            max_values: 3,
            max_in_degree: 3,
            deterministic_fraction: 0.0,
            polytree: false,
        }
    }
}

/// Random valid network. Node `i` is named `X{i}`, its values `v0`, `v1`, ...
/// Nodes are listed parents first.
pub fn random_network<R: Rng + ?Sized>(config: &GeneratorConfig, rng: &mut R) -> BeliefNetwork {
    assert!(config.nodes >= 1, "need at least one node");
    assert!(config.min_values >= 1 && config.min_values <= config.max_values);
    let n = config.nodes;
    let parents = if config.polytree {
        polytree_parents(n, config.max_in_degree, rng)
    } else {
        dag_parents(n, config.max_in_degree, rng)
    };
    let sizes: Vec<usize> = (0..n)
        .map(|_| rng.gen_range(config.min_values..=config.max_values))
        .collect();

    let specs = (0..n)
        .map(|i| {
            let rows: usize = parents[i].iter().map(|p| sizes[*p]).product();
            NodeSpec {
                name: format!("X{i}"),
                values: (0..sizes[i]).map(|v| format!("v{v}")).collect(),
                parents: parents[i].iter().map(|p| format!("X{p}")).collect(),
                cpt: (0..rows)
                    .map(|_| random_row(sizes[i], config.deterministic_fraction, rng))
                    .collect(),
            }
        })
        .collect();
    BeliefNetwork::new(specs).expect("generated networks are valid")
}

fn random_row<R: Rng + ?Sized>(m: usize, deterministic_fraction: f64, rng: &mut R) -> Vec<f64> {
    if rng.gen_bool(deterministic_fraction.clamp(0.0, 1.0)) {
        let hot = rng.gen_range(0..m);
        return (0..m).map(|i| if i == hot { 1.0 } else { 0.0 }).collect();
    }
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Parents drawn among earlier nodes, so document order is topological.
fn dag_parents<R: Rng + ?Sized>(n: usize, max_in_degree: usize, rng: &mut R) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| {
            let k = rng.gen_range(0..=i.min(max_in_degree));
            let mut chosen: Vec<usize> = (0..i).collect::<Vec<_>>().choose_multiple(rng, k).copied().collect();
            chosen.sort_unstable();
            chosen
        })
        .collect()
}

/// Random tree with random edge directions, relabelled so parents precede
/// children.
fn polytree_parents<R: Rng + ?Sized>(n: usize, max_in_degree: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let j_into_i = parents[i].len() < max_in_degree;
        let i_into_j = parents[j].len() < max_in_degree;
        let forward = match (j_into_i, i_into_j) {
            (true, true) => rng.gen_bool(0.5),
            (true, false) => true,
            (false, true) => false,
            (false, false) => unreachable!("node {i} has no parents yet"),
        };
        if forward {
            parents[i].push(j);
        } else {
            parents[j].push(i);
        }
    }
    // Kahn with smallest-index tie-break
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|i| indegree[*i] == 0).collect();
    while let Some(v) = ready.iter().copied().min() {
        ready.retain(|x| *x != v);
        order.push(v);
        for (c, ps) in parents.iter().enumerate() {
            if ps.contains(&v) {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
    }
    let mut position = vec![0; n];
    for (pos, v) in order.iter().enumerate() {
        position[*v] = pos;
    }
    order
        .iter()
        .map(|v| {
            let mut ps: Vec<usize> = parents[*v].iter().map(|p| position[*p]).collect();
            ps.sort_unstable();
            ps
        })
        .collect()
}

/// Evidence on `0..=max_findings` distinct random nodes with random values.
pub fn random_evidence<R: Rng + ?Sized>(net: &BeliefNetwork, max_findings: usize, rng: &mut R) -> Evidence {
    let k = rng.gen_range(0..=max_findings.min(net.len()));
    let ids: Vec<usize> = (0..net.len()).collect();
    let findings: Vec<(NodeId, ValueId)> = ids
        .choose_multiple(rng, k)
        .map(|i| {
            (
                NodeId(*i),
                ValueId(rng.gen_range(0..net.node(NodeId(*i)).domain_size())),
            )
        })
        .collect();
    Evidence::new(net, findings).expect("generated evidence is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = GeneratorConfig {
            nodes: 10,
            ..GeneratorConfig::default()
        };
        for _ in 0..50 {
            let net = random_network(&cfg, &mut rng);
            assert_eq!(net.len(), 10);
            for n in net.nodes() {
                assert!(n.parents.len() <= 3);
                assert!((2..=3).contains(&n.domain_size()));
            }
        }
    }

    #[test]
    fn polytrees_are_polytrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for nodes in [1, 2, 5, 16, 40] {
            let cfg = GeneratorConfig {
                nodes,
                polytree: true,
                ..GeneratorConfig::default()
            };
            let net = random_network(&cfg, &mut rng);
            assert!(net.is_polytree());
            assert_eq!(net.components().len(), 1);
            assert!(net.nodes().iter().all(|n| n.parents.len() <= 3));
        }
    }

    #[test]
    fn same_seed_same_network() {
        let cfg = GeneratorConfig {
            deterministic_fraction: 0.3,
            ..GeneratorConfig::default()
        };
        let a = random_network(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_network(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a.to_json(), b.to_json());
    }
}
