//! Shared fixture models, built through the parser so every test also
//! exercises the documented file format.
#![allow(dead_code)]

pub mod golden;

use compind::model::{parse_model, ModelSpec};

pub fn model(json: &str) -> ModelSpec {
    parse_model(json).expect("fixture must parse")
}

/// Two compartments exchanging material, input at 1, output at 2, leak at 1.
pub fn exchange_leak1() -> ModelSpec {
    model(r#"{"n":2,"edges":[[1,2],[2,1]],"inputs":[1],"outputs":[2],"leaks":[1]}"#)
}

/// Same graph with the leak at the observed compartment.
pub fn exchange_leak2() -> ModelSpec {
    model(r#"{"n":2,"edges":[[1,2],[2,1]],"inputs":[1],"outputs":[2],"leaks":[2]}"#)
}

/// One-way chain with leaks at both compartments.
pub fn chain_leak_both() -> ModelSpec {
    model(r#"{"n":2,"edges":[[1,2]],"inputs":[1],"outputs":[2],"leaks":[1,2]}"#)
}

/// Three-compartment path with a leak at the given compartment.
pub fn path3_leak(leak: usize) -> ModelSpec {
    model(&format!(
        r#"{{"n":3,"edges":[[1,2],[2,3]],"inputs":[1],"outputs":[3],"leaks":[{leak}]}}"#
    ))
}

/// Three-compartment path with a terminal cycle instead of a leak.
pub fn path3_terminal_cycle() -> ModelSpec {
    model(r#"{"n":3,"edges":[[1,2],[2,3],[3,2]],"inputs":[1],"outputs":[3],"leaks":[]}"#)
}

/// Observed upstream compartment fed by a draining one; leak upstream.
pub fn fed_observer_leak1() -> ModelSpec {
    model(r#"{"n":2,"edges":[[2,1]],"inputs":[1],"outputs":[1],"leaks":[1]}"#)
}

/// Same graph with the leak on the feeder.
pub fn fed_observer_leak2() -> ModelSpec {
    model(r#"{"n":2,"edges":[[2,1]],"inputs":[1],"outputs":[1],"leaks":[2]}"#)
}

/// Three-compartment path with inputs at 1 and 2 and a leak at `leak`.
pub fn two_input_chain(leak: usize) -> ModelSpec {
    model(&format!(
        r#"{{"n":3,"edges":[[1,2],[2,3]],"inputs":[1,2],"outputs":[3],"leaks":[{leak}]}}"#
    ))
}

/// Path 1-2-3-4 with a one-vertex detour between positions 2 and 3.
pub fn detour_low() -> ModelSpec {
    model(
        r#"{"n":5,"edges":[[1,2],[2,3],[3,4],[2,5],[5,3]],"inputs":[1],"outputs":[4],"leaks":[]}"#,
    )
}

/// The same detour shifted one position down the path.
pub fn detour_high() -> ModelSpec {
    model(
        r#"{"n":5,"edges":[[1,2],[2,3],[3,4],[3,5],[5,4]],"inputs":[1],"outputs":[4],"leaks":[]}"#,
    )
}

/// Five-compartment sink model: branch 1-2 with a side loop through 4, plus
/// the branch 5, all feeding output 3.
pub fn sink_low() -> ModelSpec {
    model(
        r#"{"n":5,"edges":[[1,2],[2,3],[1,4],[4,2],[5,3]],"inputs":[1,5],"outputs":[3],"leaks":[]}"#,
    )
}

/// The sink partner with the side loop shifted toward the output.
pub fn sink_high() -> ModelSpec {
    model(
        r#"{"n":5,"edges":[[1,2],[2,3],[2,4],[4,3],[5,3]],"inputs":[1,5],"outputs":[3],"leaks":[]}"#,
    )
}
