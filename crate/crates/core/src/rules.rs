//! Godfrey-Chapman geometric rules: four graph-structural quantities that any
//! pair of indistinguishable models must share. They are necessary conditions
//! only, so they serve as a cheap filter in front of the symbolic comparison.

use serde::Serialize;
use thiserror::Error;

use crate::model::{Compartment, ModelSpec};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RulesError {
    #[error("incomparable io cardinalities: {a_inputs}x{a_outputs} vs {b_inputs}x{b_outputs}")]
    IncomparableIo {
        a_inputs: usize,
        a_outputs: usize,
        b_inputs: usize,
        b_outputs: usize,
    },
}

/// Outcome of one rule with the witnessing quantities from both models.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleOutcome<T> {
    pub passed: bool,
    pub a: T,
    pub b: T,
}

impl<T: PartialEq> RuleOutcome<T> {
    fn compare(a: T, b: T) -> Self {
        RuleOutcome {
            passed: a == b,
            a,
            b,
        }
    }
}

/// Per-rule results. Quantities are compared as sorted multisets, since
/// indistinguishable models need not share compartment labels. `None` in a
/// distance list marks an unreachable input-output pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleReport {
    /// Shortest input-to-output distances.
    pub rule1_distances: RuleOutcome<Vec<Option<usize>>>,
    /// Number of compartments with a path to each output.
    pub rule2_reach_to_output: RuleOutcome<Vec<usize>>,
    /// Number of compartments reachable from each input.
    pub rule3_reach_from_input: RuleOutcome<Vec<usize>>,
    /// Number of traps.
    pub rule4_trap_count: RuleOutcome<usize>,
}

impl RuleReport {
    pub fn overall(&self) -> bool {
        self.rule1_distances.passed
            && self.rule2_reach_to_output.passed
            && self.rule3_reach_from_input.passed
            && self.rule4_trap_count.passed
    }
}

/// Check the four geometric rules between two models.
pub fn godfrey_rules(a: &ModelSpec, b: &ModelSpec) -> Result<RuleReport, RulesError> {
    if a.inputs().len() != b.inputs().len() || a.outputs().len() != b.outputs().len() {
        return Err(RulesError::IncomparableIo {
            a_inputs: a.inputs().len(),
            a_outputs: a.outputs().len(),
            b_inputs: b.inputs().len(),
            b_outputs: b.outputs().len(),
        });
    }
    let ia = a.graph_invariants();
    let ib = b.graph_invariants();

    // Option<usize> sorts None first, which is fine for multiset equality.
    let dists = |inv: &crate::model::GraphInvariants| {
        let mut v: Vec<Option<usize>> = inv.shortest_dist.values().copied().collect();
        v.sort_unstable();
        v
    };
    let sorted = |m: &std::collections::BTreeMap<Compartment, usize>| {
        let mut v: Vec<usize> = m.values().copied().collect();
        v.sort_unstable();
        v
    };

    Ok(RuleReport {
        rule1_distances: RuleOutcome::compare(dists(&ia), dists(&ib)),
        rule2_reach_to_output: RuleOutcome::compare(
            sorted(&ia.reach_to_output),
            sorted(&ib.reach_to_output),
        ),
        rule3_reach_from_input: RuleOutcome::compare(
            sorted(&ia.reach_from_input),
            sorted(&ib.reach_from_input),
        ),
        rule4_trap_count: RuleOutcome::compare(ia.traps.len(), ib.traps.len()),
    })
}

/// Predicted number of nonzero, nonmonic right-hand-side coefficients for one
/// input-output pair: with n the size of the output-reachable subgraph, n - 1
/// when input = output and n - dist(input, output) otherwise. `reachable =
/// false` flags pairs where the input does not reach the output (count 0).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RhsCount {
    pub input: Compartment,
    pub output: Compartment,
    pub count: usize,
    pub reachable: bool,
}

/// Apply the shortest-path coefficient-count formula to every (input, output)
/// pair of the model.
pub fn rhs_coefficient_count(m: &ModelSpec) -> Vec<RhsCount> {
    let mut out = Vec::new();
    for &o in m.outputs() {
        let h = m.reaches_to(o);
        let n_h = h.len();
        for &i in m.inputs() {
            if !h.contains(&i) {
                out.push(RhsCount {
                    input: i,
                    output: o,
                    count: 0,
                    reachable: false,
                });
                continue;
            }
            let count = if i == o {
                n_h - 1
            } else {
                let dist = m.distances_from(i)[o]
                    .expect("input in the output-reachable subgraph reaches the output");
                n_h - dist
            };
            out.push(RhsCount {
                input: i,
                output: o,
                count,
                reachable: true,
            });
        }
    }
    out
}
