//! Symbolic analysis of linear compartmental models.
//!
//! A linear compartmental model is a directed graph whose vertices are
//! compartments and whose edges carry independent flow-rate parameters,
//! together with designated input, output, and leak compartments. This crate
//! derives the exact input-output equations of such models by symbolic
//! determinant expansion, compares models for indistinguishability, applies
//! graph-structural transforms that provably preserve the input-output
//! behaviour (emitting the explicit parameter renaming), and runs local
//! identifiability and coefficient-dependency analyses.
//!
//! All symbolic computation is exact: coefficients are arbitrary-precision
//! rationals and no floating point is used anywhere. Every value is immutable
//! after construction and every operation is a pure function, so the whole
//! API is safe to call from concurrent contexts without coordination.

pub mod gen;
pub mod groebner;
pub mod ioeq;
pub mod model;
pub mod poly;
pub mod rules;
pub mod transforms;
pub mod verify;

pub use ioeq::{coefficient_map, io_equation, structure_signature, CoefficientMap, IoEquation};
pub use model::{ModelSpec, Param};
pub use poly::{MPoly, OpMatrix, OperatorPoly};
pub use rules::{godfrey_rules, rhs_coefficient_count, RuleReport};
pub use transforms::{
    apply_bijection, enumerate_family, leak_to_terminal_cycle, match_skeletal_path, move_leak,
    shift_detour, ParamBijection,
};
pub use verify::{compare, local_identifiability, search_permutation, verify_permutation, Verdict};
