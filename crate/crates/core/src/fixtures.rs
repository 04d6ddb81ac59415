use crate::circuit::{CapacitanceInput, CircuitSpec};

pub fn q7_input() -> CapacitanceInput {
    let mut input = CapacitanceInput::default();
    for (node, v) in [(1, 16.07), (2, 16.19), (3, 71.19), (4, 4.19)] {
        input.set_diagonal(node, v);
    }
    for (i, j, v) in [(1, 2, 3.27), (2, 4, 0.35), (1, 4, 0.34), (2, 3, 5.65), (1, 3, 5.61), (3, 4, 2.07)] {
        input.set_pair(i, j, v);
    }
    input
}

pub fn q7() -> CircuitSpec {
    let (capacitances, warnings) = q7_input().resolve(true).unwrap();
    assert!(warnings.is_empty());
    CircuitSpec {
        name: "q7".into(),
        capacitances,
        cj_ff: 1.85,
        lq_nh: 39.06,
        lr_nh: 11.73,
        dk_nh: 0.28,
        ej_ghz: 4.83,
    }
}
