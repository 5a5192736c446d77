//! Graphviz rendering of a compiled DAG.

use std::fmt::Write;

use crate::compile::{NodeKind, WbfDag, WbfValue};
use crate::network::{BeliefNetwork, NodeId, ValueId};

fn shape(kind: &NodeKind) -> &'static str {
    match kind {
        NodeKind::ChoiceRoot { .. } => "box",
        NodeKind::CostRoot { .. } => "diamond",
        NodeKind::Selector { .. } => "ellipse",
        NodeKind::Image { .. } => "doubleoctagon",
        NodeKind::EvidenceAnd => "house",
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn conditional(net: &BeliefNetwork, v: NodeId, own: ValueId, tuple: &[ValueId]) -> String {
    let node = net.node(v);
    let given: Vec<String> = node
        .parents
        .iter()
        .zip(tuple)
        .map(|(p, t)| format!("{}={}", net.node(*p).name, net.node(*p).values[t.0]))
        .collect();
    format!("{}={} | {}", node.name, node.values[own.0], given.join(","))
}

/// DOT text for `dag`, using `net` for node and value names. Edges point
/// from parent to child.
pub fn to_dot(dag: &WbfDag, net: &BeliefNetwork) -> String {
    let mut out = String::from("digraph wbfdag {\n  rankdir=TB;\n");
    for (i, node) in dag.nodes().iter().enumerate() {
        let detail = match &node.kind {
            NodeKind::ChoiceRoot { bn_node, value } => {
                let n = net.node(*bn_node);
                format!("{}={}", n.name, n.values[value.0])
            }
            NodeKind::CostRoot {
                bn_node,
                own_value,
                parent_tuple,
            }
            | NodeKind::Selector {
                bn_node,
                own_value,
                parent_tuple,
            } => conditional(net, *bn_node, *own_value, parent_tuple),
            NodeKind::Image { bn_node } => net.node(*bn_node).name.clone(),
            NodeKind::EvidenceAnd => dag
                .findings()
                .iter()
                .map(|(n, v)| format!("{}={}", net.node(*n).name, net.node(*n).values[v.0]))
                .collect::<Vec<_>>()
                .join(","),
        };
        let cost = dag.cost(crate::compile::WbfNodeId(i), WbfValue::T);
        let _ = writeln!(
            out,
            "  n{i} [shape={}, label=\"{}\\n{}\\ncost(T)={:.6}\"];",
            shape(&node.kind),
            node.kind.name(),
            escape(&detail),
            cost
        );
    }
    for (i, node) in dag.nodes().iter().enumerate() {
        for p in &node.parents {
            let _ = writeln!(out, "  n{} -> n{i};", p.0);
        }
    }
    out.push_str("}\n");
    out
}
