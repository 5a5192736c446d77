//! Memoized MAP for polytrees.
//!
//! On a polytree the underlying undirected graph of each component is a
//! tree, so demands arriving at an image through different neighbours never
//! share ancestors. For every (image, value) pair the solver keeps the
//! cheapest completion of the part of the tree hanging below that image and
//! reuses it instead of searching that part again. Every gadget entry is
//! resolved exactly once, which makes the work linear in the total CPT size.
//!
//! Each component is rooted at its smallest node. For a node `x` whose tree
//! parent `p` is one of its network parents, `x`'s own gadget couples `x` to
//! `p` and is resolved in `via_parent[x]`, a table over `p`'s values.
//! Otherwise `x`'s gadget lies inside its subtree and is resolved in
//! `below[x]`.

use super::{SearchError, SearchStats, SolverResult};
use crate::compile::{WbfDag, WbfValue};
use crate::network::{BeliefNetwork, Evidence, NodeId, ValueId};

/// Best cost and the gadget entry realizing it.
type Cell = Option<(f64, Option<usize>)>;

fn add(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? + b?)
}

fn cost(cell: &Cell) -> Option<f64> {
    cell.map(|(c, _)| c)
}

fn improve(cell: &mut Cell, candidate: f64, entry: Option<usize>) {
    if cell.is_none_or(|(best, _)| candidate < best) {
        *cell = Some((candidate, entry));
    }
}

/// Summed subtree costs of the parents carrying `tuple`, skipping position
/// `skip`.
fn parents_cost(below: &[Vec<Cell>], parents: &[NodeId], tuple: &[ValueId], skip: Option<usize>) -> Option<f64> {
    parents
        .iter()
        .zip(tuple)
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .try_fold(0.0, |acc, (_, (u, t))| Some(acc + cost(&below[u.0][t.0])?))
}

/// MAP over every node of a polytree network, equal in cost to
/// [`super::solve_map`] in complete mode. `stats.expansions` counts the
/// gadget entries resolved.
pub fn solve_map_polytree(net: &BeliefNetwork, evidence: &Evidence, dag: &WbfDag) -> Result<SolverResult, SearchError> {
    if !net.is_polytree() {
        return Err(SearchError::NotPolytree);
    }
    let n = net.len();
    if dag.bn_len() != n {
        return Err(SearchError::Internal("DAG was compiled from another network".into()));
    }

    // tree structure, one DFS per component
    let mut tree_parent: Vec<Option<NodeId>> = vec![None; n];
    let mut preorder = Vec::with_capacity(n);
    let mut roots = Vec::new();
    let mut seen = vec![false; n];
    for comp in net.components() {
        let r = comp[0];
        roots.push(r);
        seen[r.0] = true;
        let mut stack = vec![r];
        while let Some(x) = stack.pop() {
            preorder.push(x);
            for y in net.neighbors(x) {
                if !seen[y.0] {
                    seen[y.0] = true;
                    tree_parent[y.0] = Some(x);
                    stack.push(y);
                }
            }
        }
    }
    let family_inside = |x: NodeId| tree_parent[x.0].is_none_or(|p| !net.node(x).parents.contains(&p));
    let allowed = |x: NodeId, d: ValueId| evidence.get(x).is_none_or(|e| e == d);

    let mut below: Vec<Vec<Cell>> = net.nodes().iter().map(|nd| vec![None; nd.domain_size()]).collect();
    let mut via_parent: Vec<Vec<Cell>> = vec![Vec::new(); n];
    let mut resolved = 0u64;

    for &x in preorder.iter().rev() {
        let node = net.node(x);
        let gadget = dag.gadget(x);
        let m = node.domain_size();
        let from_children: Vec<Option<f64>> = (0..m)
            .map(|d| {
                net.children(x)
                    .iter()
                    .filter(|c| Some(**c) != tree_parent[x.0])
                    .try_fold(0.0, |acc, c| Some(acc + cost(&via_parent[c.0][d])?))
            })
            .collect();

        if family_inside(x) {
            let mut cells: Vec<Cell> = vec![None; m];
            for (idx, e) in gadget.entries.iter().enumerate() {
                if e.forbidden {
                    continue;
                }
                resolved += 1;
                let d = e.own_value;
                if !allowed(x, d) {
                    continue;
                }
                if let Some(c) = add(
                    parents_cost(&below, &node.parents, &e.parent_tuple, None),
                    from_children[d.0],
                ) {
                    improve(&mut cells[d.0], c + e.cost, Some(idx));
                }
            }
            below[x.0] = cells;
        } else {
            let p = tree_parent[x.0].expect("non-root of the tree");
            let pos = node
                .parents
                .iter()
                .position(|u| *u == p)
                .expect("tree parent is a network parent");
            below[x.0] = (0..m)
                .map(|d| {
                    if allowed(x, ValueId(d)) {
                        from_children[d].map(|c| (c, None))
                    } else {
                        None
                    }
                })
                .collect();
            let mut cells: Vec<Cell> = vec![None; net.node(p).domain_size()];
            for (idx, e) in gadget.entries.iter().enumerate() {
                if e.forbidden {
                    continue;
                }
                resolved += 1;
                let own = cost(&below[x.0][e.own_value.0]);
                if let Some(c) = add(parents_cost(&below, &node.parents, &e.parent_tuple, Some(pos)), own) {
                    improve(&mut cells[e.parent_tuple[pos].0], c + e.cost, Some(idx));
                }
            }
            via_parent[x.0] = cells;
        }
    }

    // read back the arg-min choices, root first
    let mut chosen: Vec<Option<usize>> = vec![None; n];
    let mut work: Vec<(NodeId, ValueId)> = Vec::new();
    for &r in &roots {
        let best = below[r.0]
            .iter()
            .enumerate()
            .filter_map(|(d, cell)| cell.map(|(c, _)| (c, d)))
            .fold(None::<(f64, usize)>, |acc, (c, d)| match acc {
                Some((b, _)) if b <= c => acc,
                _ => Some((c, d)),
            });
        let (_, d) = best.ok_or(SearchError::NoModel)?;
        work.push((r, ValueId(d)));
    }
    while let Some((x, d)) = work.pop() {
        let gadget = dag.gadget(x);
        if family_inside(x) {
            let idx = below[x.0][d.0].and_then(|(_, e)| e).ok_or(SearchError::NoModel)?;
            chosen[x.0] = Some(idx);
            for (u, t) in net.node(x).parents.iter().zip(&gadget.entries[idx].parent_tuple) {
                work.push((*u, *t));
            }
        }
        for &c in net.children(x) {
            if Some(c) == tree_parent[x.0] {
                continue;
            }
            let idx = via_parent[c.0][d.0].and_then(|(_, e)| e).ok_or(SearchError::NoModel)?;
            chosen[c.0] = Some(idx);
            let entry = &dag.gadget(c).entries[idx];
            work.push((c, entry.own_value));
            for (u, t) in net.node(c).parents.iter().zip(&entry.parent_tuple) {
                if *u != x {
                    work.push((*u, *t));
                }
            }
        }
    }

    let model = dag.model_from_entries(&chosen);
    if !dag.is_satisfying(&model) {
        return Err(SearchError::Internal(
            "polytree model does not satisfy the evidence".into(),
        ));
    }
    for (i, c) in chosen.iter().enumerate() {
        let e = &dag.gadget(NodeId(i)).entries[c.expect("every node chosen")];
        if model.get(dag.image(NodeId(i))) != Some(WbfValue::Domain(e.own_value)) {
            return Err(SearchError::Internal("polytree choices are inconsistent".into()));
        }
    }
    let assignment = dag.induced_assignment(&model)?;
    let total = dag.model_cost(&model);
    Ok(SolverResult {
        assignment,
        cost: total,
        probability: (-total).exp(),
        stats: SearchStats {
            expansions: resolved,
            generated: resolved,
            peak_queue: 0,
        },
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile, CompileOptions};
    use crate::network::tests::{diamond, CHAIN2};
    use crate::search::{heuristic_zero, solve_map, SearchMode};

    #[test]
    fn chain2_matches_best_first() {
        let net = BeliefNetwork::from_json(CHAIN2).unwrap();
        let ev = Evidence::parse("B=t", &net).unwrap();
        let dag = compile(&net, &ev, CompileOptions::default()).unwrap();
        let fast = solve_map_polytree(&net, &ev, &dag).unwrap();
        let slow = solve_map(&dag, &heuristic_zero(), SearchMode::Complete).unwrap();
        assert_eq!(fast.assignment, slow.assignment);
        assert!((fast.cost - slow.cost).abs() < 1e-12);
        // 2 choice roots + 4 selectors
        assert_eq!(fast.stats.expansions, 6);
    }

    #[test]
    fn diamond_is_rejected() {
        let net = diamond();
        let dag = compile(&net, &Evidence::empty(), CompileOptions::default()).unwrap();
        assert_eq!(
            solve_map_polytree(&net, &Evidence::empty(), &dag),
            Err(SearchError::NotPolytree)
        );
    }

    #[test]
    fn impossible_evidence() {
        let net = BeliefNetwork::from_json(&CHAIN2.replace("[0.9,0.1],[0.5,0.5]", "[0.0,1.0],[0.0,1.0]")).unwrap();
        let ev = Evidence::parse("B=t", &net).unwrap();
        let dag = compile(&net, &ev, CompileOptions::default()).unwrap();
        assert_eq!(solve_map_polytree(&net, &ev, &dag), Err(SearchError::NoModel));
    }
}
