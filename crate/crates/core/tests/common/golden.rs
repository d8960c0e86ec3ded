//! Frozen expected input-output equations for the worked example models,
//! spelled as explicit operator products.

use compind::model::{ModelSpec, Param};
use compind::poly::{MPoly, OperatorPoly};

use super::*;

pub struct GoldenCase {
    pub name: &'static str,
    pub model: ModelSpec,
    pub output: usize,
    pub lhs: OperatorPoly,
    pub rhs: Vec<(usize, OperatorPoly)>,
}

fn p(param: Param) -> MPoly<Param> {
    MPoly::var(param)
}

fn leak(i: usize) -> MPoly<Param> {
    p(Param::Leak(i))
}

fn edge(to: usize, from: usize) -> MPoly<Param> {
    p(Param::edge(to, from))
}

fn dp(q: MPoly<Param>) -> OperatorPoly {
    OperatorPoly::d_plus(q)
}

fn konst(q: MPoly<Param>) -> OperatorPoly {
    OperatorPoly::constant(q)
}

fn d() -> OperatorPoly {
    OperatorPoly::d()
}

pub fn golden_cases() -> Vec<GoldenCase> {
    vec![
        GoldenCase {
            name: "two-compartment exchange, leak upstream",
            model: exchange_leak1(),
            output: 2,
            lhs: dp(leak(1) + edge(2, 1)) * dp(edge(1, 2)) - konst(edge(1, 2) * edge(2, 1)),
            rhs: vec![(1, konst(edge(2, 1)))],
        },
        GoldenCase {
            name: "three-compartment path, leak at 1",
            model: path3_leak(1),
            output: 3,
            lhs: dp(leak(1) + edge(2, 1)) * dp(edge(3, 2)) * d(),
            rhs: vec![(1, konst(edge(2, 1) * edge(3, 2)))],
        },
        GoldenCase {
            name: "three-compartment path, leak at 2",
            model: path3_leak(2),
            output: 3,
            lhs: dp(edge(2, 1)) * dp(leak(2) + edge(3, 2)) * d(),
            rhs: vec![(1, konst(edge(2, 1) * edge(3, 2)))],
        },
        GoldenCase {
            name: "three-compartment path with terminal cycle",
            model: path3_terminal_cycle(),
            output: 3,
            lhs: dp(edge(2, 1)) * dp(edge(2, 3) + edge(3, 2)) * d(),
            rhs: vec![(1, konst(edge(2, 1) * edge(3, 2)))],
        },
        GoldenCase {
            name: "fed observer, leak on the observed compartment",
            model: fed_observer_leak1(),
            output: 1,
            lhs: dp(leak(1)) * dp(edge(1, 2)),
            rhs: vec![(1, dp(edge(1, 2)))],
        },
        GoldenCase {
            name: "fed observer, leak on the feeder",
            model: fed_observer_leak2(),
            output: 1,
            lhs: d() * dp(leak(2) + edge(1, 2)),
            rhs: vec![(1, dp(leak(2) + edge(1, 2)))],
        },
        GoldenCase {
            name: "two-input chain, leak at 1",
            model: two_input_chain(1),
            output: 3,
            lhs: dp(leak(1) + edge(2, 1)) * dp(edge(3, 2)) * d(),
            rhs: vec![
                (1, konst(edge(2, 1) * edge(3, 2))),
                (2, konst(edge(3, 2)) * dp(leak(1) + edge(2, 1))),
            ],
        },
        GoldenCase {
            name: "two-input chain, leak at 2",
            model: two_input_chain(2),
            output: 3,
            lhs: dp(edge(2, 1)) * dp(leak(2) + edge(3, 2)) * d(),
            rhs: vec![
                (1, konst(edge(2, 1) * edge(3, 2))),
                (2, konst(edge(3, 2)) * dp(edge(2, 1))),
            ],
        },
        GoldenCase {
            name: "three-compartment path, leak at the output",
            model: path3_leak(3),
            output: 3,
            lhs: dp(edge(2, 1)) * dp(edge(3, 2)) * dp(leak(3)),
            rhs: vec![(1, konst(edge(2, 1) * edge(3, 2)))],
        },
        GoldenCase {
            name: "detour between positions 2 and 3",
            model: detour_low(),
            output: 4,
            lhs: dp(edge(2, 1))
                * dp(edge(3, 2) + edge(5, 2))
                * dp(edge(4, 3))
                * d()
                * dp(edge(3, 5)),
            rhs: vec![(
                1,
                konst(edge(2, 1) * edge(4, 3))
                    * (konst(edge(3, 2)) * dp(edge(3, 5)) + konst(edge(3, 5) * edge(5, 2))),
            )],
        },
        GoldenCase {
            name: "detour between positions 3 and 4",
            model: detour_high(),
            output: 4,
            lhs: dp(edge(2, 1))
                * dp(edge(3, 2))
                * dp(edge(4, 3) + edge(5, 3))
                * d()
                * dp(edge(4, 5)),
            rhs: vec![(
                1,
                konst(edge(2, 1) * edge(3, 2))
                    * (konst(edge(4, 3)) * dp(edge(4, 5)) + konst(edge(4, 5) * edge(5, 3))),
            )],
        },
        GoldenCase {
            name: "sink with side loop at 1",
            model: sink_low(),
            output: 3,
            lhs: dp(edge(2, 1) + edge(4, 1))
                * dp(edge(3, 2))
                * d()
                * dp(edge(2, 4))
                * dp(edge(3, 5)),
            rhs: vec![
                (
                    1,
                    konst(edge(3, 2))
                        * dp(edge(3, 5))
                        * (konst(edge(2, 1)) * dp(edge(2, 4)) + konst(edge(2, 4) * edge(4, 1))),
                ),
                (
                    5,
                    konst(edge(3, 5))
                        * dp(edge(2, 1) + edge(4, 1))
                        * dp(edge(3, 2))
                        * dp(edge(2, 4)),
                ),
            ],
        },
        GoldenCase {
            name: "sink with side loop at 2",
            model: sink_high(),
            output: 3,
            lhs: dp(edge(2, 1))
                * dp(edge(3, 2) + edge(4, 2))
                * d()
                * dp(edge(3, 4))
                * dp(edge(3, 5)),
            rhs: vec![
                (
                    1,
                    konst(edge(2, 1))
                        * dp(edge(3, 5))
                        * (konst(edge(3, 2)) * dp(edge(3, 4)) + konst(edge(3, 4) * edge(4, 2))),
                ),
                (
                    5,
                    konst(edge(3, 5))
                        * dp(edge(2, 1))
                        * dp(edge(3, 2) + edge(4, 2))
                        * dp(edge(3, 4)),
                ),
            ],
        },
        GoldenCase {
            name: "exchange, leak on the observed compartment",
            model: exchange_leak2(),
            output: 2,
            lhs: dp(edge(2, 1)) * dp(leak(2) + edge(1, 2)) - konst(edge(1, 2) * edge(2, 1)),
            rhs: vec![(1, konst(edge(2, 1)))],
        },
        GoldenCase {
            name: "chain with leaks at both compartments",
            model: chain_leak_both(),
            output: 2,
            lhs: dp(leak(1) + edge(2, 1)) * dp(leak(2)),
            rhs: vec![(1, konst(edge(2, 1)))],
        },
    ]
}
