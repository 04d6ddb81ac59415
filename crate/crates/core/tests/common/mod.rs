#![allow(dead_code)]

use kicq_core::circuit::{CapacitanceInput, CircuitSpec};

/// `(Lr, Lq, Dk, EJ, CJ)` and the capacitance row
/// `C11 C22 C33 C44 C12 C24 C14 C23 C13 C34` (fF).
pub const DEVICES: [(&str, [f64; 5], [f64; 10]); 9] = [
    ("q1", [15.03, 13.61, -0.07, 13.44, 4.82], [33.42, 33.28, 99.36, 2.92, 11.77, 0.29, 0.29, 8.63, 8.67, 0.84]),
    ("q2", [6.53, 16.34, -0.24, 13.74, 6.01], [32.45, 32.39, 76.93, 3.03, 3.22, 0.36, 0.32, 6.30, 6.34, 0.72]),
    ("q3", [29.36, 40.35, 0.69, 13.72, 3.78], [16.47, 16.51, 68.69, 4.78, 3.38, 0.61, 0.60, 5.60, 5.59, 1.89]),
    ("q4", [30.14, 47.07, 0.64, 13.89, 5.01], [16.44, 16.48, 68.89, 4.75, 3.40, 0.49, 0.48, 5.62, 5.61, 2.12]),
    ("q5", [11.90, 33.38, 0.39, 9.88, 4.02], [33.84, 33.76, 74.27, 4.94, 4.20, 0.58, 0.57, 6.73, 6.76, 2.01]),
    ("q6", [7.40, 46.96, 0.36, 6.77, 3.34], [33.59, 33.58, 76.00, 5.41, 4.29, 0.48, 0.48, 6.77, 6.79, 2.56]),
    ("q7", [11.73, 39.06, 0.28, 4.83, 1.85], [16.07, 16.19, 71.19, 4.19, 3.27, 0.35, 0.34, 5.65, 5.61, 2.07]),
    ("q8", [0.55, 16.25, 0.20, 3.09, 2.58], [53.37, 53.39, 126.97, 14.17, 5.67, 2.15, 2.13, 28.42, 28.44, 4.86]),
    ("q9", [18.89, 26.91, 0.17, 1.28, 1.86], [17.30, 17.23, 73.67, 5.39, 3.72, 0.56, 0.57, 6.03, 6.04, 2.34]),
];

pub fn device(name: &str) -> CircuitSpec {
    let (_, l, c) = DEVICES.iter().find(|d| d.0 == name).expect("known device");
    let mut input = CapacitanceInput::default();
    for (node, v) in [(1, c[0]), (2, c[1]), (3, c[2]), (4, c[3])] {
        input.set_diagonal(node, v);
    }
    for (i, j, v) in [(1, 2, c[4]), (2, 4, c[5]), (1, 4, c[6]), (2, 3, c[7]), (1, 3, c[8]), (3, 4, c[9])] {
        input.set_pair(i, j, v);
    }
    let (capacitances, _) = input.resolve(true).expect("table resolves");
    CircuitSpec {
        name: name.into(),
        capacitances,
        cj_ff: l[4],
        lq_nh: l[1],
        lr_nh: l[0],
        dk_nh: l[2],
        ej_ghz: l[3],
    }
}
