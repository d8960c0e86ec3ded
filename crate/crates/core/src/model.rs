//! Model representation: the directed graph, its parameter set, the
//! compartmental matrix, and the graph algorithms the analyses consume.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{MPoly, Var};

/// Compartments are indexed 1..=n everywhere visible to callers.
pub type Compartment = usize;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("compartment count must be positive")]
    NonPositiveCount,
    #[error("self-loop at {0}")]
    SelfLoop(Compartment),
    #[error("{context} index {index} out of range 1..={n}")]
    OutOfRange {
        context: &'static str,
        index: i64,
        n: usize,
    },
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: Compartment, to: Compartment },
    #[error("empty inputs")]
    EmptyInputs,
    #[error("empty outputs")]
    EmptyOutputs,
    #[error("{0} is not an output compartment")]
    NotAnOutput(Compartment),
}

/// One independent rate parameter: `a_{ij}` for the edge j -> i, or `a_{0i}`
/// for the leak out of compartment i.
///
/// The ordering (leaks ascending, then edges lexicographic by `(to, from)`)
/// is the canonical parameter order used for parameter vectors, Jacobian
/// columns, and monomial comparison.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Param {
    Leak(Compartment),
    Edge { to: Compartment, from: Compartment },
}

impl Param {
    pub fn edge(to: Compartment, from: Compartment) -> Self {
        Param::Edge { to, from }
    }

    /// Canonical symbol: `a01`, `a21`, ... Indices above 9 are separated by
    /// an underscore (`a10_2`) so the rendering stays unambiguous.
    pub fn symbol(&self) -> String {
        let (to, from) = match self {
            Param::Leak(i) => (0, *i),
            Param::Edge { to, from } => (*to, *from),
        };
        if to <= 9 && from <= 9 {
            format!("a{to}{from}")
        } else {
            format!("a{to}_{from}")
        }
    }
}

impl Var for Param {
    fn symbol(&self) -> String {
        Param::symbol(self)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}

/// A linear compartmental model: directed graph plus input, output, and leak
/// compartment sets. Immutable after construction; all invariants (index
/// ranges, no self-loops, no duplicate edges) hold by construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModelSpec {
    n: usize,
    edges: Vec<(Compartment, Compartment)>, // (from, to), sorted, duplicate-free
    inputs: BTreeSet<Compartment>,
    outputs: BTreeSet<Compartment>,
    leaks: BTreeSet<Compartment>,
    name: Option<String>,
}

/// Serde mirror of the model file format.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    n: i64,
    edges: Vec<[i64; 2]>,
    inputs: Vec<i64>,
    outputs: Vec<i64>,
    leaks: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

impl ModelSpec {
    /// Validated constructor. Inputs and outputs may be empty here (restricted
    /// submodels legitimately lose them); `parse_model` and the analysis entry
    /// points reject empty input/output sets.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (Compartment, Compartment)>,
        inputs: impl IntoIterator<Item = Compartment>,
        outputs: impl IntoIterator<Item = Compartment>,
        leaks: impl IntoIterator<Item = Compartment>,
        name: Option<String>,
    ) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::NonPositiveCount);
        }
        let in_range = |context: &'static str, i: Compartment| {
            if i < 1 || i > n {
                Err(ModelError::OutOfRange {
                    context,
                    index: i as i64,
                    n,
                })
            } else {
                Ok(())
            }
        };
        let mut edge_vec: Vec<(Compartment, Compartment)> = Vec::new();
        let mut seen = BTreeSet::new();
        for (from, to) in edges {
            in_range("edge endpoint", from)?;
            in_range("edge endpoint", to)?;
            if from == to {
                return Err(ModelError::SelfLoop(from));
            }
            if !seen.insert((from, to)) {
                return Err(ModelError::DuplicateEdge { from, to });
            }
            edge_vec.push((from, to));
        }
        edge_vec.sort_unstable();
        let collect = |context: &'static str,
                       it: &mut dyn Iterator<Item = Compartment>|
         -> Result<BTreeSet<Compartment>, ModelError> {
            let mut set = BTreeSet::new();
            for i in it {
                in_range(context, i)?;
                set.insert(i);
            }
            Ok(set)
        };
        Ok(ModelSpec {
            n,
            edges: edge_vec,
            inputs: collect("input", &mut inputs.into_iter())?,
            outputs: collect("output", &mut outputs.into_iter())?,
            leaks: collect("leak", &mut leaks.into_iter())?,
            name,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as (from, to) pairs, sorted.
    pub fn edges(&self) -> &[(Compartment, Compartment)] {
        &self.edges
    }

    pub fn inputs(&self) -> &BTreeSet<Compartment> {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<Compartment> {
        &self.outputs
    }

    pub fn leaks(&self) -> &BTreeSet<Compartment> {
        &self.leaks
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn has_edge(&self, from: Compartment, to: Compartment) -> bool {
        self.edges.binary_search(&(from, to)).is_ok()
    }

    /// All rate parameters in canonical order: leaks ascending, then edges
    /// lexicographic by (to, from).
    pub fn params(&self) -> Vec<Param> {
        let mut ps: Vec<Param> = self.leaks.iter().map(|&i| Param::Leak(i)).collect();
        let mut edge_params: Vec<Param> = self
            .edges
            .iter()
            .map(|&(from, to)| Param::edge(to, from))
            .collect();
        edge_params.sort_unstable();
        ps.extend(edge_params);
        ps
    }

    /// Out-neighbour adjacency, 1-based (index 0 unused).
    pub(crate) fn out_adjacency(&self) -> Vec<Vec<Compartment>> {
        let mut adj = vec![Vec::new(); self.n + 1];
        for &(from, to) in &self.edges {
            adj[from].push(to);
        }
        adj
    }

    /// In-neighbour adjacency, 1-based.
    pub(crate) fn in_adjacency(&self) -> Vec<Vec<Compartment>> {
        let mut adj = vec![Vec::new(); self.n + 1];
        for &(from, to) in &self.edges {
            adj[to].push(from);
        }
        adj
    }

    /// The compartmental matrix A(G): entry (i, j) is `a_{ij}` for an edge
    /// j -> i, the diagonal is minus the leak (if any) minus the sum of
    /// outgoing rates, and zero otherwise.
    pub fn compartmental_matrix(&self) -> SymbolicMatrix {
        let n = self.n;
        let mut entries = vec![MPoly::zero(); n * n];
        for &(from, to) in &self.edges {
            entries[(to - 1) * n + (from - 1)] += MPoly::var(Param::edge(to, from));
        }
        for i in 1..=n {
            let mut diag = MPoly::zero();
            if self.leaks.contains(&i) {
                diag -= MPoly::var(Param::Leak(i));
            }
            for &(from, to) in &self.edges {
                if from == i {
                    diag -= MPoly::var(Param::edge(to, from));
                }
            }
            entries[(i - 1) * n + (i - 1)] = diag;
        }
        SymbolicMatrix { n, entries }
    }

    /// Set of compartments with a directed path to `target` (target included).
    pub fn reaches_to(&self, target: Compartment) -> BTreeSet<Compartment> {
        bfs_closure(target, &self.in_adjacency())
    }

    /// Set of compartments reachable from `source` (source included).
    pub fn reachable_from(&self, source: Compartment) -> BTreeSet<Compartment> {
        bfs_closure(source, &self.out_adjacency())
    }

    /// Shortest directed distance (edge count) from `source` to every
    /// compartment; `None` marks unreachable.
    pub fn distances_from(&self, source: Compartment) -> Vec<Option<usize>> {
        let adj = self.out_adjacency();
        let mut dist = vec![None; self.n + 1];
        dist[source] = Some(0);
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &w in &adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Strongly connected components (Tarjan), each sorted ascending; the
    /// list is sorted by smallest member.
    pub fn sccs(&self) -> Vec<BTreeSet<Compartment>> {
        let adj = self.out_adjacency();
        let mut state = TarjanState {
            index: 0,
            indices: vec![None; self.n + 1],
            lowlinks: vec![0; self.n + 1],
            on_stack: vec![false; self.n + 1],
            stack: Vec::new(),
            sccs: Vec::new(),
        };
        for v in 1..=self.n {
            if state.indices[v].is_none() {
                strongconnect(&adj, &mut state, v);
            }
        }
        let mut sccs: Vec<BTreeSet<Compartment>> = state
            .sccs
            .into_iter()
            .map(|c| c.into_iter().collect())
            .collect();
        sccs.sort_by_key(|c| *c.iter().next().unwrap());
        sccs
    }

    /// Restriction of the model to the compartments with a directed path to
    /// `out` (out included). Compartments are relabelled 1..=k in ascending
    /// original order; the returned map gives the original label of each new
    /// one.
    pub fn output_reachable(&self, out: Compartment) -> Result<Restriction, ModelError> {
        if !self.outputs.contains(&out) {
            return Err(ModelError::NotAnOutput(out));
        }
        let kept: Vec<Compartment> = self.reaches_to(out).into_iter().collect();
        let new_of_old: BTreeMap<Compartment, Compartment> = kept
            .iter()
            .enumerate()
            .map(|(pos, &old)| (old, pos + 1))
            .collect();
        let relabel = |set: &BTreeSet<Compartment>| {
            set.iter()
                .filter_map(|old| new_of_old.get(old).copied())
                .collect::<Vec<_>>()
        };
        let edges = self
            .edges
            .iter()
            .filter_map(|&(from, to)| Some((*new_of_old.get(&from)?, *new_of_old.get(&to)?)))
            .collect::<Vec<_>>();
        let model = ModelSpec::new(
            kept.len(),
            edges,
            relabel(&self.inputs),
            relabel(&self.outputs),
            relabel(&self.leaks),
            self.name.clone(),
        )
        .expect("restriction of a valid model is valid");
        Ok(Restriction {
            model,
            old_of_new: kept,
        })
    }

    /// Reversed model: every edge flipped, inputs and outputs swapped, leaks
    /// unchanged. The second component maps each original parameter `a_{ij}`
    /// to the reverse model's `a_{ji}` (leaks map to themselves).
    pub fn reversed(&self) -> (ModelSpec, Vec<(Param, Param)>) {
        let model = ModelSpec::new(
            self.n,
            self.edges.iter().map(|&(from, to)| (to, from)),
            self.outputs.iter().copied(),
            self.inputs.iter().copied(),
            self.leaks.iter().copied(),
            self.name.clone(),
        )
        .expect("reversal of a valid model is valid");
        let mut map: Vec<(Param, Param)> = self
            .leaks
            .iter()
            .map(|&i| (Param::Leak(i), Param::Leak(i)))
            .collect();
        map.extend(
            self.edges
                .iter()
                .map(|&(from, to)| (Param::edge(to, from), Param::edge(from, to))),
        );
        map.sort_unstable();
        (model, map)
    }

    /// Graph quantities behind the structural comparison rules.
    pub fn graph_invariants(&self) -> GraphInvariants {
        let mut shortest_dist = BTreeMap::new();
        for &i in &self.inputs {
            let dist = self.distances_from(i);
            for &o in &self.outputs {
                shortest_dist.insert((i, o), dist[o]);
            }
        }
        let reach_to_output: BTreeMap<Compartment, usize> = self
            .outputs
            .iter()
            .map(|&o| (o, self.reaches_to(o).len()))
            .collect();
        let reach_from_input: BTreeMap<Compartment, usize> = self
            .inputs
            .iter()
            .map(|&i| (i, self.reachable_from(i).len()))
            .collect();

        // A trap is an SCC with no leak member and no edge leaving it.
        let traps: Vec<BTreeSet<Compartment>> = self
            .sccs()
            .into_iter()
            .filter(|scc| {
                scc.iter().all(|v| !self.leaks.contains(v))
                    && self
                        .edges
                        .iter()
                        .all(|(from, to)| !scc.contains(from) || scc.contains(to))
            })
            .collect();

        let output_connectable = (1..=self.n).all(|v| {
            self.outputs
                .iter()
                .any(|&o| self.reaches_to(o).contains(&v))
        });
        let input_connectable = (1..=self.n).all(|v| {
            self.inputs
                .iter()
                .any(|&i| self.reachable_from(i).contains(&v))
        });

        GraphInvariants {
            shortest_dist,
            reach_to_output,
            reach_from_input,
            traps,
            input_connectable,
            output_connectable,
        }
    }

    /// Serialize in the model file format.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            n: self.n as i64,
            edges: self
                .edges
                .iter()
                .map(|&(from, to)| [from as i64, to as i64])
                .collect(),
            inputs: self.inputs.iter().map(|&i| i as i64).collect(),
            outputs: self.outputs.iter().map(|&i| i as i64).collect(),
            leaks: self.leaks.iter().map(|&i| i as i64).collect(),
            name: self.name.clone(),
        };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }
}

/// Output-reachable restriction with its relabelling (new label k has
/// original label `old_of_new[k-1]`).
#[derive(Clone, Debug)]
pub struct Restriction {
    pub model: ModelSpec,
    pub old_of_new: Vec<Compartment>,
}

impl Restriction {
    pub fn new_of_old(&self, old: Compartment) -> Option<Compartment> {
        self.old_of_new
            .iter()
            .position(|&v| v == old)
            .map(|p| p + 1)
    }
}

/// Quantities used by the structural comparison rules: shortest input-output
/// distances (`None` = unreachable), reach counts, traps, connectability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphInvariants {
    pub shortest_dist: BTreeMap<(Compartment, Compartment), Option<usize>>,
    pub reach_to_output: BTreeMap<Compartment, usize>,
    pub reach_from_input: BTreeMap<Compartment, usize>,
    pub traps: Vec<BTreeSet<Compartment>>,
    pub input_connectable: bool,
    pub output_connectable: bool,
}

/// Parse the documented model file format: a JSON object with fields `n`,
/// `edges` (array of `[from, to]` pairs), `inputs`, `outputs`, `leaks`, and
/// an optional `name`. Inputs and outputs must be nonempty.
pub fn parse_model(text: &str) -> Result<ModelSpec, ModelError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.n <= 0 {
        return Err(ModelError::NonPositiveCount);
    }
    let n = file.n as usize;
    let check = |context: &'static str, raw: i64| -> Result<Compartment, ModelError> {
        if raw < 1 || raw > n as i64 {
            Err(ModelError::OutOfRange {
                context,
                index: raw,
                n,
            })
        } else {
            Ok(raw as Compartment)
        }
    };
    let mut edges = Vec::new();
    for [from, to] in file.edges {
        edges.push((check("edge endpoint", from)?, check("edge endpoint", to)?));
    }
    let lift = |context: &'static str, raw: Vec<i64>| -> Result<Vec<Compartment>, ModelError> {
        raw.into_iter().map(|i| check(context, i)).collect()
    };
    let inputs = lift("input", file.inputs)?;
    let outputs = lift("output", file.outputs)?;
    let leaks = lift("leak", file.leaks)?;
    if inputs.is_empty() {
        return Err(ModelError::EmptyInputs);
    }
    if outputs.is_empty() {
        return Err(ModelError::EmptyOutputs);
    }
    ModelSpec::new(n, edges, inputs, outputs, leaks, file.name)
}

/// Square grid of polynomials in the rate parameters; the entries of A(G)
/// are linear.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicMatrix {
    n: usize,
    entries: Vec<MPoly<Param>>, // row-major
}

impl SymbolicMatrix {
    pub fn from_entries(n: usize, entries: Vec<MPoly<Param>>) -> Self {
        assert_eq!(entries.len(), n * n, "entry count must be n*n");
        SymbolicMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry at row `r`, column `c` (1-based).
    pub fn entry(&self, r: usize, c: usize) -> &MPoly<Param> {
        &self.entries[(r - 1) * self.n + (c - 1)]
    }

    /// Principal submatrix on the given 1-based index set (ascending).
    ///
    /// This retains the full diagonal entries, so outflows toward removed
    /// compartments stay visible as leak-like terms; that is the reading of
    /// the restricted matrix under which the derived equations describe the
    /// true dynamics.
    pub fn principal_submatrix(&self, keep: &[usize]) -> SymbolicMatrix {
        let entries = keep
            .iter()
            .flat_map(|&r| keep.iter().map(move |&c| self.entry(r, c).clone()))
            .collect();
        SymbolicMatrix {
            n: keep.len(),
            entries,
        }
    }
}

fn bfs_closure(start: Compartment, adj: &[Vec<Compartment>]) -> BTreeSet<Compartment> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

struct TarjanState {
    index: usize,
    indices: Vec<Option<usize>>,
    lowlinks: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<Compartment>,
    sccs: Vec<Vec<Compartment>>,
}

fn strongconnect(adj: &[Vec<Compartment>], state: &mut TarjanState, v: Compartment) {
    state.indices[v] = Some(state.index);
    state.lowlinks[v] = state.index;
    state.index += 1;
    state.stack.push(v);
    state.on_stack[v] = true;

    for &w in &adj[v] {
        if state.indices[w].is_none() {
            strongconnect(adj, state, w);
            state.lowlinks[v] = state.lowlinks[v].min(state.lowlinks[w]);
        } else if state.on_stack[w] {
            state.lowlinks[v] = state.lowlinks[v].min(state.indices[w].unwrap());
        }
    }

    if state.lowlinks[v] == state.indices[v].unwrap() {
        let mut scc = Vec::new();
        loop {
            let w = state.stack.pop().unwrap();
            state.on_stack[w] = false;
            scc.push(w);
            if w == v {
                break;
            }
        }
        state.sccs.push(scc);
    }
}
