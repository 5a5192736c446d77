//! Brute-force reference answers by enumerating every total assignment.
//! Only usable on small networks; guarded by [`ORACLE_LIMIT`].

use std::cmp::Ordering;

use thiserror::Error;

use crate::network::{Assignment, BeliefNetwork, Evidence};

/// Largest number of total assignments the oracle will enumerate.
pub const ORACLE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("network has {0} total assignments, more than the oracle limit")]
    TooLarge(u128),
}

/// An assignment and its score. For [`map_oracle`] and [`kbest_oracle`] the
/// score is the joint probability; for [`partial_roots_oracle`] it is the
/// product of the root priors.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedAssignment {
    pub assignment: Assignment,
    pub probability: f64,
}

fn guarded(net: &BeliefNetwork) -> Result<(), OracleError> {
    let count = net.assignment_count();
    if count > ORACLE_LIMIT {
        Err(OracleError::TooLarge(count))
    } else {
        Ok(())
    }
}

/// Assignments consistent with the evidence, paired with `score`, zero
/// scores dropped, in lexicographic order.
fn scored<'a>(
    net: &'a BeliefNetwork,
    evidence: &'a Evidence,
    score: impl Fn(&Assignment) -> f64 + 'a,
) -> impl Iterator<Item = RankedAssignment> + 'a {
    Assignment::enumerate(net)
        .filter(|a| evidence.is_consistent(a))
        .map(move |a| {
            let probability = score(&a);
            RankedAssignment {
                assignment: a,
                probability,
            }
        })
        .filter(|r| r.probability > 0.0)
}

/// First maximum in enumeration order, so ties go to the lexicographically
/// smallest assignment.
fn first_max(it: impl Iterator<Item = RankedAssignment>) -> Option<RankedAssignment> {
    it.fold(None, |best: Option<RankedAssignment>, r| match best {
        Some(b) if b.probability >= r.probability => Some(b),
        _ => Some(r),
    })
}

/// Most probable total assignment consistent with the evidence, or `None`
/// if every consistent assignment has probability zero.
pub fn map_oracle(net: &BeliefNetwork, evidence: &Evidence) -> Result<Option<RankedAssignment>, OracleError> {
    guarded(net)?;
    Ok(first_max(scored(net, evidence, |a| net.joint_probability(a))))
}

/// The `k` most probable consistent assignments, by decreasing probability
/// with lexicographic tie-breaking.
pub fn kbest_oracle(net: &BeliefNetwork, evidence: &Evidence, k: usize) -> Result<Vec<RankedAssignment>, OracleError> {
    guarded(net)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut all: Vec<RankedAssignment> = scored(net, evidence, |a| net.joint_probability(a)).collect();
    // stable: equal probabilities keep enumeration order
    all.sort_by(|a, b| b.probability.partial_cmp(&a.probability).unwrap_or(Ordering::Equal));
    all.truncate(k);
    Ok(all)
}

/// Among consistent assignments that use only nonzero CPT entries, the one
/// maximizing the product of root priors.
pub fn partial_roots_oracle(net: &BeliefNetwork, evidence: &Evidence) -> Result<Option<RankedAssignment>, OracleError> {
    guarded(net)?;
    let root_score = |a: &Assignment| {
        if net.joint_probability(a) == 0.0 {
            return 0.0;
        }
        net.node_ids()
            .filter(|v| net.node(*v).is_root())
            .map(|v| net.node(v).cpt.row(0)[a.get(v).0])
            .product()
    };
    Ok(first_max(scored(net, evidence, root_score)))
}
