//! Decision support: certify or search for parameter renamings, compare two
//! models end to end, test generic local identifiability, and compute the
//! dependency relations among coefficient-map components.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational, Zero};
use rand::Rng;
use thiserror::Error;

use crate::groebner::{elimination_ideal, CoeffSym, RelVar};
use crate::ioeq::{coefficient_map, structure_signature, CoefficientMap, IoeqError};
use crate::model::{Compartment, ModelSpec, Param};
use crate::poly::MPoly;
use crate::rules::{godfrey_rules, RuleReport, RulesError};
use crate::transforms::{apply_bijection, ParamBijection, TransformError};

/// Default cap on the backtracking search over parameter assignments.
pub const SEARCH_PARAM_CAP: usize = 12;
/// Cost caps for the elimination-ideal computation.
pub const RELATION_PARAM_CAP: usize = 6;
pub const RELATION_COEFF_CAP: usize = 8;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error(transparent)]
    Ioeq(#[from] IoeqError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Rules(#[from] RulesError),
    #[error("search refused: {params} parameters exceed the cap of {cap}")]
    SearchRefused { params: usize, cap: usize },
    #[error(
        "relations refused: {params} parameters / {coeffs} coefficients exceed caps {param_cap}/{coeff_cap}"
    )]
    RelationsRefused {
        params: usize,
        coeffs: usize,
        param_cap: usize,
        coeff_cap: usize,
    },
}

/// Outcome of a pairwise model comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Distinguishable(DistinguishReason),
    PermutationIndistinguishable(ParamBijection),
    Inconclusive { notes: Vec<String> },
}

/// Machine-checkable witness for a `Distinguishable` verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DistinguishReason {
    /// Differential monomials present in only one of the equations.
    StructureMismatch {
        only_in_a: Vec<String>,
        only_in_b: Vec<String>,
    },
    RuleViolated(RuleReport),
    /// A dependency relation of one model that the other's coefficients
    /// violate symbolically.
    RelationMismatch {
        relation: String,
        holds_in: char,
        residue: String,
    },
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Distinguishable(_) => "distinguishable",
            Verdict::PermutationIndistinguishable(_) => "permutation-indistinguishable",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// True iff the renamed coefficient map of `a` equals the coefficient map of
/// `b`, component for component. The bijection must map `a`'s parameter set
/// onto `b`'s.
pub fn verify_permutation(
    a: &ModelSpec,
    b: &ModelSpec,
    phi: &ParamBijection,
) -> Result<bool, VerifyError> {
    let a_params: BTreeSet<Param> = a.params().into_iter().collect();
    let b_params: BTreeSet<Param> = b.params().into_iter().collect();
    phi.check_total(&a_params, &b_params)
        .map_err(VerifyError::Transform)?;
    let ca = coefficient_map(a)?;
    let cb = coefficient_map(b)?;
    if ca.keys().ne(cb.keys()) {
        return Ok(false);
    }
    let mapped = apply_bijection(&ca, phi)?;
    Ok(mapped == cb)
}

/// Occurrence profile of one parameter across the coefficient map: for every
/// component and every term containing the parameter, the component index,
/// the exponent, the term degree, and the rational coefficient. A renaming
/// can only map parameters with identical profiles onto each other.
fn occurrence_profile(cmap: &CoefficientMap, p: &Param) -> Vec<(usize, u32, u32, BigRational)> {
    let mut v = Vec::new();
    for (k, (_, poly)) in cmap.entries().iter().enumerate() {
        for (m, c) in poly.terms() {
            let e = m.exponent(p);
            if e > 0 {
                v.push((k, e, m.degree(), c.clone()));
            }
        }
    }
    v.sort();
    v
}

/// Complete backtracking search for a renaming that maps `a`'s coefficient
/// map onto `b`'s. `None` means no renaming exists within the searched space;
/// it does not by itself prove the models distinguishable.
pub fn search_permutation(
    a: &ModelSpec,
    b: &ModelSpec,
) -> Result<Option<ParamBijection>, VerifyError> {
    search_permutation_capped(a, b, SEARCH_PARAM_CAP)
}

pub fn search_permutation_capped(
    a: &ModelSpec,
    b: &ModelSpec,
    cap: usize,
) -> Result<Option<ParamBijection>, VerifyError> {
    let a_params = a.params();
    let b_params = b.params();
    if a_params.len() != b_params.len() {
        return Ok(None);
    }
    if structure_signature(a)? != structure_signature(b)? {
        return Ok(None);
    }
    if a_params.len() > cap {
        return Err(VerifyError::SearchRefused {
            params: a_params.len(),
            cap,
        });
    }
    let ca = coefficient_map(a)?;
    let cb = coefficient_map(b)?;
    if ca.keys().ne(cb.keys()) {
        return Ok(None);
    }

    let profiles_b: BTreeMap<Param, Vec<(usize, u32, u32, BigRational)>> = b_params
        .iter()
        .map(|q| (*q, occurrence_profile(&cb, q)))
        .collect();
    let mut candidates: Vec<(Param, Vec<Param>)> = Vec::new();
    for p in &a_params {
        let prof = occurrence_profile(&ca, p);
        let cands: Vec<Param> = b_params
            .iter()
            .copied()
            .filter(|q| profiles_b[q] == prof)
            .collect();
        if cands.is_empty() {
            return Ok(None);
        }
        candidates.push((*p, cands));
    }
    candidates.sort_by_key(|(_, cands)| cands.len());

    let mut assignment: BTreeMap<Param, Param> = BTreeMap::new();
    let mut used: BTreeSet<Param> = BTreeSet::new();
    if backtrack(&candidates, 0, &ca, &cb, &mut assignment, &mut used) {
        let phi = ParamBijection::from_pairs(assignment.into_iter().collect::<Vec<_>>())
            .map_err(VerifyError::Transform)?;
        debug_assert_eq!(verify_permutation(a, b, &phi), Ok(true));
        Ok(Some(phi))
    } else {
        Ok(None)
    }
}

fn backtrack(
    candidates: &[(Param, Vec<Param>)],
    depth: usize,
    ca: &CoefficientMap,
    cb: &CoefficientMap,
    assignment: &mut BTreeMap<Param, Param>,
    used: &mut BTreeSet<Param>,
) -> bool {
    if depth == candidates.len() {
        return fully_consistent(ca, cb, assignment);
    }
    let (p, cands) = &candidates[depth];
    for q in cands {
        if used.contains(q) {
            continue;
        }
        assignment.insert(*p, *q);
        used.insert(*q);
        if partially_consistent(ca, cb, assignment)
            && backtrack(candidates, depth + 1, ca, cb, assignment, used)
        {
            return true;
        }
        assignment.remove(p);
        used.remove(q);
    }
    false
}

/// Every fully-assigned term of `a`'s coefficients must appear in `b`'s with
/// the same rational coefficient.
fn partially_consistent(
    ca: &CoefficientMap,
    cb: &CoefficientMap,
    assignment: &BTreeMap<Param, Param>,
) -> bool {
    for ((_, pa), (_, pb)) in ca.entries().iter().zip(cb.entries()) {
        for (m, c) in pa.terms() {
            let mut image = Vec::with_capacity(m.factors().len());
            let mut complete = true;
            for (v, e) in m.factors() {
                match assignment.get(v) {
                    Some(w) => image.push((*w, *e)),
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if complete {
                let mono = crate::poly::Monomial::from_powers(image);
                if pb.coefficient(&mono) != *c {
                    return false;
                }
            }
        }
    }
    true
}

fn fully_consistent(
    ca: &CoefficientMap,
    cb: &CoefficientMap,
    assignment: &BTreeMap<Param, Param>,
) -> bool {
    for ((_, pa), (_, pb)) in ca.entries().iter().zip(cb.entries()) {
        let mapped = pa.try_map_vars(|v| assignment.get(v).copied());
        match mapped {
            Ok(image) => {
                if image != *pb {
                    return false;
                }
            }
            Err(_) => return false,
        }
    }
    true
}

/// Options for the comparison pipeline.
#[derive(Clone, Debug)]
pub struct CompareOptions {
    pub search_cap: usize,
    pub relation_param_cap: usize,
    pub relation_coeff_cap: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            search_cap: SEARCH_PARAM_CAP,
            relation_param_cap: RELATION_PARAM_CAP,
            relation_coeff_cap: RELATION_COEFF_CAP,
        }
    }
}

/// Pairwise comparison pipeline: structure signatures, then the geometric
/// rules, then dependency relations (within cost caps), then the renaming
/// search. `Inconclusive` is an honest third verdict: indistinguishability
/// beyond parameter renamings exists and is out of reach of this pipeline.
pub fn compare(a: &ModelSpec, b: &ModelSpec) -> Result<Verdict, VerifyError> {
    compare_with(a, b, &CompareOptions::default())
}

pub fn compare_with(
    a: &ModelSpec,
    b: &ModelSpec,
    opts: &CompareOptions,
) -> Result<Verdict, VerifyError> {
    let sig_a = structure_signature(a)?;
    let sig_b = structure_signature(b)?;
    if sig_a != sig_b {
        let fmt = |v: Vec<(Compartment, crate::ioeq::DiffMonomial)>| {
            v.into_iter()
                .map(|(o, m)| format!("[y{o}] {m}"))
                .collect::<Vec<_>>()
        };
        return Ok(Verdict::Distinguishable(
            DistinguishReason::StructureMismatch {
                only_in_a: fmt(sig_a.difference(&sig_b)),
                only_in_b: fmt(sig_b.difference(&sig_a)),
            },
        ));
    }

    let report = godfrey_rules(a, b)?;
    if !report.overall() {
        return Ok(Verdict::Distinguishable(DistinguishReason::RuleViolated(
            report,
        )));
    }

    let mut notes = Vec::new();
    match cross_relation_check(a, b, opts) {
        Ok(Some(reason)) => return Ok(Verdict::Distinguishable(reason)),
        Ok(None) => {}
        Err(VerifyError::RelationsRefused { .. }) => {
            notes.push("dependency relations skipped: cost caps exceeded".to_string());
        }
        Err(e) => return Err(e),
    }

    match search_permutation_capped(a, b, opts.search_cap) {
        Ok(Some(phi)) => Ok(Verdict::PermutationIndistinguishable(phi)),
        Ok(None) => {
            notes.push(
                "no parameter renaming maps one coefficient map onto the other; \
                 indistinguishability may still hold via the solve-and-check-constraints route"
                    .to_string(),
            );
            Ok(Verdict::Inconclusive { notes })
        }
        Err(VerifyError::SearchRefused { params, cap }) => {
            notes.push(format!(
                "renaming search refused: {params} parameters exceed the cap of {cap}"
            ));
            Ok(Verdict::Inconclusive { notes })
        }
        Err(e) => Err(e),
    }
}

/// Substitute each model's coefficient polynomials into the other's
/// dependency relations; a symbolically nonzero residue distinguishes them.
fn cross_relation_check(
    a: &ModelSpec,
    b: &ModelSpec,
    opts: &CompareOptions,
) -> Result<Option<DistinguishReason>, VerifyError> {
    let rel_a = coefficient_relations_capped(a, opts.relation_param_cap, opts.relation_coeff_cap)?;
    let rel_b = coefficient_relations_capped(b, opts.relation_param_cap, opts.relation_coeff_cap)?;
    let ca = coefficient_map(a)?;
    let cb = coefficient_map(b)?;
    for rel in &rel_a {
        let residue = substitute_coeffs(rel, &cb);
        if !residue.is_zero() {
            return Ok(Some(DistinguishReason::RelationMismatch {
                relation: rel.to_string(),
                holds_in: 'a',
                residue: residue.to_string(),
            }));
        }
    }
    for rel in &rel_b {
        let residue = substitute_coeffs(rel, &ca);
        if !residue.is_zero() {
            return Ok(Some(DistinguishReason::RelationMismatch {
                relation: rel.to_string(),
                holds_in: 'b',
                residue: residue.to_string(),
            }));
        }
    }
    Ok(None)
}

/// Evaluate a relation in `c1..ck` at the coefficient polynomials of a model.
pub fn substitute_coeffs(rel: &MPoly<CoeffSym>, cmap: &CoefficientMap) -> MPoly<Param> {
    let polys: Vec<&MPoly<Param>> = cmap.polys().collect();
    let mut acc: MPoly<Param> = MPoly::zero();
    for (m, coeff) in rel.terms() {
        let mut term = MPoly::constant(coeff.clone());
        for (CoeffSym(k), e) in m.factors() {
            for _ in 0..*e {
                term = &term * polys[*k];
            }
        }
        acc += term;
    }
    acc
}

/// Generators of the dependency relations among the coefficient-map
/// components, as polynomials in fresh symbols `c1..ck`: the elimination
/// ideal of `<c_k - f_k(p)>`. Generators are normalized to primitive integer
/// coefficients with positive leading sign.
pub fn coefficient_relations(m: &ModelSpec) -> Result<Vec<MPoly<CoeffSym>>, VerifyError> {
    coefficient_relations_capped(m, RELATION_PARAM_CAP, RELATION_COEFF_CAP)
}

pub fn coefficient_relations_capped(
    m: &ModelSpec,
    param_cap: usize,
    coeff_cap: usize,
) -> Result<Vec<MPoly<CoeffSym>>, VerifyError> {
    let cmap = coefficient_map(m)?;
    let params = m.params();
    if params.len() > param_cap || cmap.len() > coeff_cap {
        return Err(VerifyError::RelationsRefused {
            params: params.len(),
            coeffs: cmap.len(),
            param_cap,
            coeff_cap,
        });
    }
    let gens: Vec<MPoly<RelVar>> = cmap
        .polys()
        .enumerate()
        .map(|(k, f)| {
            let lifted = f.map_vars(|p| RelVar::Par(*p));
            MPoly::var(RelVar::Coeff(CoeffSym(k))) - lifted
        })
        .collect();
    Ok(elimination_ideal(&gens))
}

/// Identifiability verdict from the generic rank of the coefficient-map
/// Jacobian.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentifiabilityResult {
    pub verdict: IdentVerdict,
    pub rank: usize,
    pub param_count: usize,
    pub coefficient_count: usize,
    pub sample_points_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdentVerdict {
    GenericallyLocallyIdentifiable,
    Unidentifiable,
}

impl IdentVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            IdentVerdict::GenericallyLocallyIdentifiable => "generically-locally-identifiable",
            IdentVerdict::Unidentifiable => "unidentifiable",
        }
    }
}

/// Generic local identifiability via the Jacobian of the coefficient map:
/// exact symbolic partial derivatives evaluated at random integer points in
/// [1, 10^6], taking the maximum rank over at least three draws.
pub fn local_identifiability(
    m: &ModelSpec,
    rng: &mut impl Rng,
) -> Result<IdentifiabilityResult, VerifyError> {
    local_identifiability_sampled(m, rng, 3)
}

pub fn local_identifiability_sampled(
    m: &ModelSpec,
    rng: &mut impl Rng,
    min_samples: usize,
) -> Result<IdentifiabilityResult, VerifyError> {
    let cmap = coefficient_map(m)?;
    let params = m.params();
    let jacobian: Vec<Vec<MPoly<Param>>> = cmap
        .polys()
        .map(|f| params.iter().map(|p| f.partial_derivative(p)).collect())
        .collect();

    let samples = min_samples.max(3);
    let mut best_rank = 0;
    for _ in 0..samples {
        let assignment: BTreeMap<Param, BigRational> = params
            .iter()
            .map(|p| {
                (
                    *p,
                    BigRational::from_integer(BigInt::from(rng.gen_range(1..=1_000_000i64))),
                )
            })
            .collect();
        let matrix: Vec<Vec<BigRational>> = jacobian
            .iter()
            .map(|row| row.iter().map(|e| e.eval(&assignment)).collect())
            .collect();
        best_rank = best_rank.max(rational_rank(matrix));
        if best_rank == params.len() {
            break;
        }
    }
    let verdict = if best_rank == params.len() {
        IdentVerdict::GenericallyLocallyIdentifiable
    } else {
        IdentVerdict::Unidentifiable
    };
    Ok(IdentifiabilityResult {
        verdict,
        rank: best_rank,
        param_count: params.len(),
        coefficient_count: cmap.len(),
        sample_points_used: samples,
    })
}

/// Rank over the rationals by Gaussian elimination.
fn rational_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let Some(pivot) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, pivot);
        let inv = m[row][col].clone();
        for r in row + 1..rows {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &inv;
            let pivot_row = m[row].clone();
            for (c, pivot_entry) in pivot_row.iter().enumerate().skip(col) {
                let delta = &factor * pivot_entry;
                m[r][c] -= delta;
            }
        }
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}
