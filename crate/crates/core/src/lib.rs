//! Circuit model, truncated Fock-space spectrum, parameter fitting and
//! readout analysis for kinetic-inductance coupled qubit-resonator devices.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod calibration;
pub mod circuit;
pub mod fit;
pub mod fock;
pub mod linalg;
pub mod optimize;
pub mod readout;
pub mod units;

#[cfg(test)]
mod fixtures;
