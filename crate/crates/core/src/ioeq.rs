//! Input-output equations, coefficient maps, and structure signatures.
//!
//! The equation in the output `y_j` is obtained from the output-reachable
//! restriction H of the model as
//!
//! ```text
//! det(DI - A_H) y_j = sum over inputs i in H of (-1)^(i+j) det((DI - A_H)^{i,j}) u_i
//! ```
//!
//! where the superscript denotes deletion of input row i and output column j
//! and the signs use the positions of i and j inside H (ascending original
//! order). The right-hand sides are stored exactly as the formula produces
//! them, signs included.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{Compartment, ModelError, ModelSpec, Param};
use crate::poly::{MPoly, OpMatrix, OperatorPoly};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum IoeqError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model has no input compartments")]
    NoInputs,
    #[error("model has no output compartments")]
    NoOutputs,
    #[error("no input reaches output {0}")]
    NoInputReachesOutput(Compartment),
}

/// The input-output equation for one output: a monic operator polynomial
/// applied to `y_output` on the left, and one signed operator polynomial per
/// reachable input applied to `u_i` on the right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IoEquation {
    pub output: Compartment,
    /// Vertices of the output-reachable subgraph, ascending original labels.
    pub subgraph: Vec<Compartment>,
    pub lhs: OperatorPoly,
    pub rhs: BTreeMap<Compartment, OperatorPoly>,
}

/// Derive the input-output equation for `out`.
pub fn io_equation(m: &ModelSpec, out: Compartment) -> Result<IoEquation, IoeqError> {
    if m.inputs().is_empty() {
        return Err(IoeqError::NoInputs);
    }
    if m.outputs().is_empty() {
        return Err(IoeqError::NoOutputs);
    }
    let restriction = m.output_reachable(out)?;
    let vertices = restriction.old_of_new.clone();
    let inputs_in_h: Vec<Compartment> = m
        .inputs()
        .iter()
        .copied()
        .filter(|i| vertices.contains(i))
        .collect();
    if inputs_in_h.is_empty() {
        return Err(IoeqError::NoInputReachesOutput(out));
    }

    // The restricted state matrix is the principal submatrix of A(G), which
    // keeps outflows toward pruned compartments on the diagonal.
    let a_h = m.compartmental_matrix().principal_submatrix(&vertices);
    let di_a = OpMatrix::d_identity_minus(&a_h);
    let lhs = di_a.det();

    let pos = |v: Compartment| vertices.iter().position(|&x| x == v).unwrap() + 1;
    let out_pos = pos(out);
    let mut rhs = BTreeMap::new();
    for &i in &inputs_in_h {
        let i_pos = pos(i);
        let minor = di_a
            .minor(i_pos, out_pos)
            .expect("positions are inside the restriction");
        let det = minor.det();
        let signed = if (i_pos + out_pos) % 2 == 0 {
            det
        } else {
            -det
        };
        rhs.insert(i, signed);
    }
    Ok(IoEquation {
        output: out,
        subgraph: vertices,
        lhs,
        rhs,
    })
}

impl IoEquation {
    pub fn order(&self) -> usize {
        self.lhs.degree().expect("lhs of an io equation is monic")
    }
}

impl fmt::Display for IoEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut lhs_terms = Vec::new();
        let d = self.order();
        for k in (0..=d).rev() {
            let c = self.lhs.coeff(k);
            if c.is_zero() {
                continue;
            }
            lhs_terms.push(render_term(&c, k, 'y', self.output));
        }
        let mut rhs_terms = Vec::new();
        for (&i, poly) in &self.rhs {
            if poly.is_zero() {
                continue;
            }
            for k in (0..=poly.degree().unwrap_or(0)).rev() {
                let c = poly.coeff(k);
                if c.is_zero() {
                    continue;
                }
                rhs_terms.push(render_term(&c, k, 'u', i));
            }
        }
        let rhs = if rhs_terms.is_empty() {
            "0".to_string()
        } else {
            rhs_terms.join(" + ")
        };
        write!(f, "{} = {}", lhs_terms.join(" + "), rhs)
    }
}

fn render_term(c: &MPoly<Param>, order: usize, kind: char, comp: Compartment) -> String {
    let var = match order {
        0 => format!("{kind}{comp}"),
        1 => format!("D {kind}{comp}"),
        k => format!("D^{k} {kind}{comp}"),
    };
    if c.is_one() {
        var
    } else {
        format!("({c}) {var}")
    }
}

/// One differential monomial: a derivative of an output or input variable.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum VarKind {
    Output,
    Input,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DiffMonomial {
    pub kind: VarKind,
    pub compartment: Compartment,
    pub order: usize,
}

impl DiffMonomial {
    pub fn y(compartment: Compartment, order: usize) -> Self {
        DiffMonomial {
            kind: VarKind::Output,
            compartment,
            order,
        }
    }

    pub fn u(compartment: Compartment, order: usize) -> Self {
        DiffMonomial {
            kind: VarKind::Input,
            compartment,
            order,
        }
    }
}

impl fmt::Display for DiffMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            VarKind::Output => 'y',
            VarKind::Input => 'u',
        };
        match self.order {
            0 => write!(f, "{kind}{}", self.compartment),
            1 => write!(f, "D {kind}{}", self.compartment),
            k => write!(f, "D^{k} {kind}{}", self.compartment),
        }
    }
}

/// Canonical position order inside one equation: output derivatives
/// descending, then inputs ascending with derivatives descending.
impl PartialOrd for DiffMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DiffMonomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self.kind, other.kind) {
            (VarKind::Output, VarKind::Input) => Ordering::Less,
            (VarKind::Input, VarKind::Output) => Ordering::Greater,
            (VarKind::Output, VarKind::Output) => {
                // Single output per equation; higher derivative first.
                self.compartment
                    .cmp(&other.compartment)
                    .then(other.order.cmp(&self.order))
            }
            (VarKind::Input, VarKind::Input) => self
                .compartment
                .cmp(&other.compartment)
                .then(other.order.cmp(&self.order)),
        }
    }
}

/// Key of one coefficient-map component: the equation it belongs to (tagged
/// by its output) and the differential monomial the coefficient multiplies.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct CmapKey {
    pub output: Compartment,
    pub monomial: DiffMonomial,
}

impl fmt::Display for CmapKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[y{}] {}", self.output, self.monomial)
    }
}

/// The coefficient map: the ordered vector of all nonzero, nonmonic
/// coefficients of the input-output equations, over all outputs ascending.
/// Monic coefficients (the constant 1) and identically zero coefficients are
/// excluded; a coefficient that is a nonzero polynomial is kept even if it
/// can vanish at special parameter values.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CoefficientMap {
    entries: Vec<(CmapKey, MPoly<Param>)>,
}

impl CoefficientMap {
    pub fn from_entries(entries: Vec<(CmapKey, MPoly<Param>)>) -> Self {
        CoefficientMap { entries }
    }

    pub fn entries(&self) -> &[(CmapKey, MPoly<Param>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &CmapKey> {
        self.entries.iter().map(|(k, _)| k)
    }

    pub fn polys(&self) -> impl Iterator<Item = &MPoly<Param>> {
        self.entries.iter().map(|(_, p)| p)
    }

    /// Union of the parameters appearing in the coefficients.
    pub fn parameters(&self) -> BTreeSet<Param> {
        self.polys().flat_map(|p| p.variables()).collect()
    }
}

/// Assemble the coefficient map of a model.
pub fn coefficient_map(m: &ModelSpec) -> Result<CoefficientMap, IoeqError> {
    let mut entries = Vec::new();
    for &out in m.outputs() {
        let eq = io_equation(m, out)?;
        let d = eq.order();
        for k in (0..d).rev() {
            let c = eq.lhs.coeff(k);
            if !c.is_zero() {
                entries.push((
                    CmapKey {
                        output: out,
                        monomial: DiffMonomial::y(out, k),
                    },
                    c,
                ));
            }
        }
        for (&i, poly) in &eq.rhs {
            if poly.is_zero() {
                continue;
            }
            for k in (0..=poly.degree().unwrap()).rev() {
                let c = poly.coeff(k);
                if c.is_zero() || c.is_one() {
                    continue;
                }
                entries.push((
                    CmapKey {
                        output: out,
                        monomial: DiffMonomial::u(i, k),
                    },
                    c,
                ));
            }
        }
    }
    Ok(CoefficientMap { entries })
}

/// The set of differential monomials appearing with nonzero coefficient in
/// each equation, monic terms included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureSignature {
    pub per_output: BTreeMap<Compartment, BTreeSet<DiffMonomial>>,
}

pub fn structure_signature(m: &ModelSpec) -> Result<StructureSignature, IoeqError> {
    let mut per_output = BTreeMap::new();
    for &out in m.outputs() {
        let eq = io_equation(m, out)?;
        let mut set = BTreeSet::new();
        for k in 0..=eq.order() {
            if !eq.lhs.coeff(k).is_zero() {
                set.insert(DiffMonomial::y(out, k));
            }
        }
        for (&i, poly) in &eq.rhs {
            if let Some(d) = poly.degree() {
                for k in 0..=d {
                    if !poly.coeff(k).is_zero() {
                        set.insert(DiffMonomial::u(i, k));
                    }
                }
            }
        }
        per_output.insert(out, set);
    }
    Ok(StructureSignature { per_output })
}

impl StructureSignature {
    /// Monomials present in `self` but not in `other`, flattened.
    pub fn difference(&self, other: &StructureSignature) -> Vec<(Compartment, DiffMonomial)> {
        let mut out = Vec::new();
        for (o, set) in &self.per_output {
            match other.per_output.get(o) {
                Some(their) => out.extend(set.difference(their).map(|&m| (*o, m))),
                None => out.extend(set.iter().map(|&m| (*o, m))),
            }
        }
        out
    }
}
