//! Random model generators for the randomized test suites. All generators
//! take the RNG by argument so suites stay reproducible under a fixed seed.

use std::collections::BTreeSet;

use rand::Rng;

use crate::model::{Compartment, ModelSpec};
use crate::poly::{MPoly, OpMatrix, OperatorPoly};

/// Path model 1 -> 2 -> ... -> n with one leak at a random position below n.
pub fn random_path_leak_model(rng: &mut impl Rng, n: usize) -> ModelSpec {
    assert!(n >= 2);
    let leak = rng.gen_range(1..n);
    path_model(n, Some(leak))
}

/// Path model with an optional leak.
pub fn path_model(n: usize, leak: Option<usize>) -> ModelSpec {
    ModelSpec::new(n, (1..n).map(|i| (i, i + 1)), [1], [n], leak, None)
        .expect("path models are valid")
}

/// Detour model: the path 1..n plus a detour on vertices n+1..n+d with an
/// off-ramp at path position `i < n-1` and an on-ramp at position `j` in
/// i..=n-1. The detour interior is a directed chain from the off-ramp target
/// to the on-ramp source plus random extra internal edges; leaks land on
/// detour vertices only.
pub fn random_detour_model(rng: &mut impl Rng, n: usize, d: usize) -> ModelSpec {
    assert!(n >= 3 && d >= 1);
    let i = rng.gen_range(1..n - 1);
    let j = rng.gen_range(i..n);
    let mut detour: Vec<Compartment> = (n + 1..=n + d).collect();
    // Random chain order through the detour.
    for k in (1..detour.len()).rev() {
        detour.swap(k, rng.gen_range(0..=k));
    }
    let s = detour[0];
    let t = *detour.last().unwrap();
    let mut edges: Vec<(Compartment, Compartment)> = (1..n).map(|v| (v, v + 1)).collect();
    edges.push((i, s));
    edges.push((t, j));
    for w in detour.windows(2) {
        edges.push((w[0], w[1]));
    }
    // Extra internal detour edges.
    for &a in &detour {
        for &b in &detour {
            if a != b && !edges.contains(&(a, b)) && rng.gen_bool(0.25) {
                edges.push((a, b));
            }
        }
    }
    let leaks: Vec<Compartment> = detour
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(0.3))
        .collect();
    ModelSpec::new(n + d, edges, [1], [n], leaks, None).expect("detour models are valid")
}

/// Random model in which every compartment has a path to the single output
/// `n`: a random spanning in-tree toward the output plus extra random edges.
pub fn random_output_connectable(rng: &mut impl Rng, n: usize, num_inputs: usize) -> ModelSpec {
    assert!(n >= 2);
    let mut edges: BTreeSet<(Compartment, Compartment)> = BTreeSet::new();
    // Connect each vertex to some vertex already linked to the output.
    let mut connected: Vec<Compartment> = vec![n];
    let mut pending: Vec<Compartment> = (1..n).collect();
    for k in (1..pending.len()).rev() {
        pending.swap(k, rng.gen_range(0..=k));
    }
    for v in pending {
        let target = connected[rng.gen_range(0..connected.len())];
        edges.insert((v, target));
        connected.push(v);
    }
    for from in 1..=n {
        for to in 1..=n {
            if from != to && rng.gen_bool(0.15) {
                edges.insert((from, to));
            }
        }
    }
    let mut inputs = BTreeSet::new();
    while inputs.len() < num_inputs.clamp(1, n) {
        inputs.insert(rng.gen_range(1..=n));
    }
    let leaks: Vec<Compartment> = (1..=n).filter(|_| rng.gen_bool(0.2)).collect();
    ModelSpec::new(n, edges, inputs, [n], leaks, None).expect("generated model is valid")
}

/// Sink model: `branches` disjoint path branches feeding one shared output,
/// each branch head an input. Returns the model and the branch vertex sets
/// (output excluded). At most one leak per branch, never on the output.
pub fn random_sink_model(
    rng: &mut impl Rng,
    branches: usize,
    max_branch_len: usize,
) -> (ModelSpec, Vec<BTreeSet<Compartment>>) {
    assert!(branches >= 1 && max_branch_len >= 1);
    let lens: Vec<usize> = (0..branches)
        .map(|_| rng.gen_range(1..=max_branch_len))
        .collect();
    let n: usize = lens.iter().sum::<usize>() + 1;
    let output = n;
    let mut edges = Vec::new();
    let mut inputs = Vec::new();
    let mut leaks = Vec::new();
    let mut branch_sets = Vec::new();
    let mut next = 1;
    for &len in &lens {
        let verts: Vec<Compartment> = (next..next + len).collect();
        next += len;
        inputs.push(verts[0]);
        for w in verts.windows(2) {
            edges.push((w[0], w[1]));
        }
        edges.push((*verts.last().unwrap(), output));
        if rng.gen_bool(0.5) {
            leaks.push(verts[rng.gen_range(0..verts.len())]);
        }
        branch_sets.push(verts.into_iter().collect());
    }
    let model =
        ModelSpec::new(n, edges, inputs, [output], leaks, None).expect("sink model is valid");
    (model, branch_sets)
}

/// Random operator matrix with entries of degree at most one, about
/// `density` of them nonzero.
pub fn random_op_matrix(rng: &mut impl Rng, n: usize, density: f64) -> OpMatrix {
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        if !rng.gen_bool(density) {
            entries.push(OperatorPoly::zero());
            continue;
        }
        let var = MPoly::var(crate::model::Param::edge(
            rng.gen_range(1..=4),
            rng.gen_range(5..=8),
        ));
        let base = if rng.gen_bool(0.5) {
            var + MPoly::from_int(rng.gen_range(-2..=2))
        } else {
            MPoly::from_int(rng.gen_range(-3..=3))
        };
        let e = if rng.gen_bool(0.5) {
            OperatorPoly::d_plus(base)
        } else {
            OperatorPoly::constant(base)
        };
        entries.push(e);
    }
    OpMatrix::from_entries(n, entries)
}
