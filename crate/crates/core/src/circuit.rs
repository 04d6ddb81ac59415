//! Lumped-element circuit model: capacitance and inverse inductance
//! matrices, normal modes, coupling coefficients and the reduction to the
//! idealized two-node inductively coupled circuit.
//!
//! Nodes are numbered as on the device layout: `0` is ground, `1` and `2`
//! are the junction electrodes, `3` is the readout island and `4` the
//! inner node joining the three inductors.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;
use thiserror::Error;

use crate::linalg::{inverse_sqrt_spd, is_positive_definite, sorted_symmetric_eigen, symmetrize};
use crate::units::{f_to_af, ff_to_f, nh_to_h, HBAR, PHI0};

/// Number of circuit nodes excluding ground.
pub const NODES: usize = 4;

/// A mode is treated as the zero mode when `omega^2 < ZERO_MODE_TOL * max omega^2`.
pub const ZERO_MODE_TOL: f64 = 1e-6;

/// Relative tolerance on `C10 == C20` accepted by the idealized reduction.
pub const GROUND_SYMMETRY_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("capacitance pair C{0}{1} is required but missing")]
    MissingPair(usize, usize),
    #[error("capacitance C{i}{j} = {value} fF is negative")]
    NegativeCapacitance { i: usize, j: usize, value: f64 },
    #[error("ground capacitance C{node}0 given as {given} fF but the diagonal implies {derived} fF")]
    InconsistentGround { node: usize, given: f64, derived: f64 },
    #[error("capacitance matrix is not positive definite")]
    NonPositiveDefinite,
    #[error("branch inductance L_q/2 - |Delta_k| = {0} nH is not positive")]
    BranchNonPositive(f64),
    #[error("invalid circuit parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("qubit and readout sorting criteria both select mode {0}")]
    DegenerateSorting(usize),
    #[error("found {found} zero modes, expected {expected}")]
    ZeroModeAmbiguous { found: usize, expected: usize },
    #[error("ground capacitances C10 = {c10} fF and C20 = {c20} fF differ; idealized model does not apply")]
    AsymmetricGround { c10: f64, c20: f64 },
}

pub type Result<T, E = CircuitError> = core::result::Result<T, E>;

/// Symmetric table of pairwise capacitances (fF) over ground and nodes 1..=4.
///
/// Entry `(i, j)` with `i != j` is the mutual capacitance between the two
/// nodes, `(i, 0)` the capacitance of node `i` to ground. The diagonal is
/// not stored; it follows from the pairwise values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitanceTable {
    pairs: [[f64; NODES + 1]; NODES + 1],
}

impl Default for CapacitanceTable {
    fn default() -> Self {
        Self { pairs: [[0.0; NODES + 1]; NODES + 1] }
    }
}

impl CapacitanceTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pairs[i][j]
    }

    /// Sets `C_ij = C_ji`. Setting a diagonal entry is a no-op.
    pub fn set(&mut self, i: usize, j: usize, value_ff: f64) {
        if i != j {
            self.pairs[i][j] = value_ff;
            self.pairs[j][i] = value_ff;
        }
    }

    pub fn with(mut self, i: usize, j: usize, value_ff: f64) -> Self {
        self.set(i, j, value_ff);
        self
    }

    /// Sum of every capacitance attached to `node`, ground included.
    pub fn total(&self, node: usize) -> f64 {
        (0..=NODES).filter(|&j| j != node).map(|j| self.pairs[node][j]).sum()
    }

    /// `(C13 - C23) / 2`, in aF.
    pub fn capacitive_asymmetry_af(&self) -> f64 {
        f_to_af(ff_to_f((self.get(1, 3) - self.get(2, 3)) / 2.0))
    }

    /// Shifts `C13` up and `C23` down by `delta_af`, which moves the
    /// capacitive asymmetry by the same amount.
    pub fn perturb_asymmetry(&mut self, delta_af: f64) {
        let d = delta_af * 1e-3;
        self.set(1, 3, self.get(1, 3) + d);
        self.set(2, 3, self.get(2, 3) - d);
    }

    /// Mirror image under exchange of nodes 1 and 2.
    pub fn swapped_junction_nodes(&self) -> Self {
        let perm = [0, 2, 1, 3, 4];
        let mut out = Self::default();
        for i in 0..=NODES {
            for j in 0..=NODES {
                out.pairs[perm[i]][perm[j]] = self.pairs[i][j];
            }
        }
        out
    }

    /// Replaces every 1/2 pair by its mean so the table is mirror symmetric.
    pub fn symmetrized(&self) -> Self {
        let other = self.swapped_junction_nodes();
        let mut out = *self;
        for i in 0..=NODES {
            for j in 0..=NODES {
                out.pairs[i][j] = 0.5 * (self.pairs[i][j] + other.pairs[i][j]);
            }
        }
        out
    }

    fn check_nonnegative(&self) -> Result<()> {
        for i in 0..=NODES {
            for j in (i + 1)..=NODES {
                let v = self.pairs[i][j];
                if !(v >= 0.0) {
                    return Err(CircuitError::NegativeCapacitance { i, j, value: v });
                }
            }
        }
        Ok(())
    }
}

/// Issues noticed while completing a partially specified table.
#[derive(Debug, Clone, PartialEq)]
pub enum TableWarning {
    /// Pair was absent and defaulted to 0 fF.
    DefaultedToZero(usize, usize),
}

/// Capacitance data as it appears in simulation tables: self capacitances
/// `C_ii` and pairwise entries, any of which may be absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CapacitanceInput {
    pub diagonal: [Option<f64>; NODES],
    pairs: [[Option<f64>; NODES + 1]; NODES + 1],
}

impl CapacitanceInput {
    pub fn set_diagonal(&mut self, node: usize, value_ff: f64) {
        self.diagonal[node - 1] = Some(value_ff);
    }

    pub fn set_pair(&mut self, i: usize, j: usize, value_ff: f64) {
        self.pairs[i][j] = Some(value_ff);
        self.pairs[j][i] = Some(value_ff);
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<f64> {
        self.pairs[i][j]
    }

    /// Completes the table.
    ///
    /// With `diagonal_is_total` the listed `C_ii` is the full self
    /// capacitance and the ground term is `C_ii - sum_j C_ij`; otherwise
    /// `C_ii` is read as the ground capacitance itself. Missing mutual
    /// pairs default to zero with a warning; ground terms of nodes 1..=3
    /// are required.
    pub fn resolve(&self, diagonal_is_total: bool) -> Result<(CapacitanceTable, Vec<TableWarning>)> {
        let mut table = CapacitanceTable::default();
        let mut warnings = Vec::new();
        for i in 1..=NODES {
            for j in (i + 1)..=NODES {
                match self.pairs[i][j] {
                    Some(v) => table.set(i, j, v),
                    None => warnings.push(TableWarning::DefaultedToZero(i, j)),
                }
            }
        }
        for node in 1..=NODES {
            let given = self.pairs[node][0];
            let from_diag = self.diagonal[node - 1].map(|d| {
                if diagonal_is_total {
                    d - (1..=NODES).filter(|&j| j != node).map(|j| table.get(node, j)).sum::<f64>()
                } else {
                    d
                }
            });
            let ground = match (given, from_diag) {
                (Some(g), Some(d)) => {
                    if (g - d).abs() > 1e-6 * (1.0 + d.abs()) {
                        return Err(CircuitError::InconsistentGround { node, given: g, derived: d });
                    }
                    g
                }
                (Some(g), None) => g,
                (None, Some(d)) => d,
                (None, None) if node <= 3 => return Err(CircuitError::MissingPair(node, 0)),
                (None, None) => {
                    warnings.push(TableWarning::DefaultedToZero(node, 0));
                    0.0
                }
            };
            table.set(node, 0, ground);
        }
        table.check_nonnegative()?;
        Ok((table, warnings))
    }
}

/// Full lumped-element description of one device.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    pub name: String,
    pub capacitances: CapacitanceTable,
    /// Junction capacitance (fF).
    pub cj_ff: f64,
    /// Total qubit loop inductance (nH).
    pub lq_nh: f64,
    /// Readout inductance (nH).
    pub lr_nh: f64,
    /// Kinetic asymmetry: branch 1 is `lq/2 + dk`, branch 2 is `lq/2 - dk` (nH).
    pub dk_nh: f64,
    /// Josephson energy E_J/h (GHz).
    pub ej_ghz: f64,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("C_J", self.cj_ff),
            ("L_q", self.lq_nh),
            ("L_r", self.lr_nh),
            ("E_J", self.ej_ghz),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(CircuitError::InvalidParameter { name, value });
            }
        }
        if !self.dk_nh.is_finite() {
            return Err(CircuitError::InvalidParameter { name: "Delta_k", value: self.dk_nh });
        }
        let branch = self.lq_nh / 2.0 - self.dk_nh.abs();
        if !(branch > 0.0) {
            return Err(CircuitError::BranchNonPositive(branch));
        }
        self.capacitances.check_nonnegative()
    }

    /// Mirror image: nodes 1 and 2 exchanged and `dk` negated.
    pub fn mirrored(&self) -> Self {
        Self {
            capacitances: self.capacitances.swapped_junction_nodes(),
            dk_nh: -self.dk_nh,
            ..self.clone()
        }
    }

    pub fn capacitive_asymmetry_af(&self) -> f64 {
        self.capacitances.capacitive_asymmetry_af()
    }
}

/// `(C13 - C23) / 2` of a device, in aF.
pub fn capacitive_asymmetry(spec: &CircuitSpec) -> f64 {
    spec.capacitive_asymmetry_af()
}

/// 4x4 Maxwell capacitance matrix in farads.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitanceMatrix(pub DMatrix<f64>);

/// 4x4 inverse inductance matrix in 1/H.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseInductanceMatrix(pub DMatrix<f64>);

pub fn assemble_capacitance_matrix(spec: &CircuitSpec) -> Result<CapacitanceMatrix> {
    spec.validate()?;
    let table = &spec.capacitances;
    let mut m = DMatrix::zeros(NODES, NODES);
    for i in 1..=NODES {
        for j in 1..=NODES {
            m[(i - 1, j - 1)] = if i == j { table.total(i) } else { -table.get(i, j) };
        }
    }
    m[(0, 0)] += spec.cj_ff;
    m[(1, 1)] += spec.cj_ff;
    m[(0, 1)] -= spec.cj_ff;
    m[(1, 0)] -= spec.cj_ff;
    let m = m.map(ff_to_f);
    if !is_positive_definite(&m) {
        return Err(CircuitError::NonPositiveDefinite);
    }
    Ok(CapacitanceMatrix(m))
}

pub fn assemble_inverse_inductance_matrix(spec: &CircuitSpec) -> Result<InverseInductanceMatrix> {
    let branch = spec.lq_nh / 2.0 - spec.dk_nh.abs();
    if !(branch > 0.0) {
        return Err(CircuitError::BranchNonPositive(branch));
    }
    if !(spec.lr_nh > 0.0) {
        return Err(CircuitError::InvalidParameter { name: "L_r", value: spec.lr_nh });
    }
    let a = 1.0 / nh_to_h(spec.lq_nh / 2.0 + spec.dk_nh);
    let b = 1.0 / nh_to_h(spec.lq_nh / 2.0 - spec.dk_nh);
    let r = 1.0 / nh_to_h(spec.lr_nh);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        a,   0.0, 0.0, -a,
        0.0, b,   0.0, -b,
        0.0, 0.0, r,   -r,
        -a,  -b,  -r,  a + b + r,
    ]);
    Ok(InverseInductanceMatrix(m))
}

/// How the junction phase and the common mode are read off node fluxes.
///
/// For node coordinates the junction phase is `phi_2 - phi_1` and the
/// common mode `phi_1 + phi_2`; other coordinate systems supply their own
/// projections.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionProjection {
    pub differential: Vec<f64>,
    pub common: Vec<f64>,
}

impl JunctionProjection {
    pub fn node_basis(n: usize) -> Self {
        let mut differential = vec![0.0; n];
        let mut common = vec![0.0; n];
        differential[0] = -1.0;
        differential[1] = 1.0;
        common[0] = 1.0;
        common[1] = 1.0;
        Self { differential, common }
    }

    fn project(v: &[f64], m: &DMatrix<f64>, col: usize) -> f64 {
        v.iter().enumerate().map(|(r, w)| w * m[(r, col)]).sum()
    }
}

/// Normal modes of the linearized circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDecomposition {
    /// Angular frequencies (rad/s), ascending.
    pub omegas: Vec<f64>,
    /// Orthogonal eigenvectors of `C^-1/2 L^-1 C^-1/2`, one column per mode.
    pub s: DMatrix<f64>,
    /// Back-transformation `C^-1/2 S` to node fluxes.
    pub s_prime: DMatrix<f64>,
    pub qubit_index: usize,
    pub readout_index: usize,
    pub zero_index: Option<usize>,
    /// Dimensionless coupling of the readout mode to the junction phase.
    pub lambda_r: f64,
    /// Dimensionless coupling of the qubit mode to the junction phase.
    pub lambda_q: f64,
    /// `(C13 - C23)/2` read from the capacitance matrix (aF); zero for
    /// reduced coordinate systems.
    pub delta_c_af: f64,
}

impl ModeDecomposition {
    pub fn omega_r(&self) -> f64 {
        self.omegas[self.readout_index]
    }

    pub fn omega_q(&self) -> f64 {
        self.omegas[self.qubit_index]
    }

    pub fn f_r_ghz(&self) -> f64 {
        crate::units::omega_to_ghz(self.omega_r())
    }

    pub fn f_q_ghz(&self) -> f64 {
        crate::units::omega_to_ghz(self.omega_q())
    }

    pub fn params(&self) -> ModeParams {
        ModeParams {
            f_r_ghz: self.f_r_ghz(),
            f_q_ghz: self.f_q_ghz(),
            lambda_r: self.lambda_r,
            lambda_q: self.lambda_q,
        }
    }

    /// Modes that are neither zero, qubit nor readout (island 4 for the
    /// four-node circuit). Reported only; the Hamiltonian ignores them.
    pub fn spectator_modes_ghz(&self) -> Vec<f64> {
        (0..self.omegas.len())
            .filter(|&j| Some(j) != self.zero_index && j != self.qubit_index && j != self.readout_index)
            .map(|j| crate::units::omega_to_ghz(self.omegas[j]))
            .collect()
    }
}

/// The four numbers the two-mode Hamiltonian needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    pub f_r_ghz: f64,
    pub f_q_ghz: f64,
    pub lambda_r: f64,
    pub lambda_q: f64,
}

/// Normal modes of the four-node circuit.
pub fn decompose_modes(c: &CapacitanceMatrix, linv: &InverseInductanceMatrix) -> Result<ModeDecomposition> {
    decompose_modes_tol(c, linv, ZERO_MODE_TOL)
}

pub fn decompose_modes_tol(
    c: &CapacitanceMatrix,
    linv: &InverseInductanceMatrix,
    zero_tol: f64,
) -> Result<ModeDecomposition> {
    let mut modes = decompose_with(&c.0, &linv.0, &JunctionProjection::node_basis(NODES), 1, zero_tol)?;
    modes.delta_c_af = f_to_af((-c.0[(0, 2)] + c.0[(1, 2)]) / 2.0);
    Ok(modes)
}

/// Normal modes of a device description.
pub fn decompose_circuit(spec: &CircuitSpec) -> Result<ModeDecomposition> {
    decompose_circuit_tol(spec, ZERO_MODE_TOL)
}

pub fn decompose_circuit_tol(spec: &CircuitSpec, zero_tol: f64) -> Result<ModeDecomposition> {
    let c = assemble_capacitance_matrix(spec)?;
    let l = assemble_inverse_inductance_matrix(spec)?;
    decompose_modes_tol(&c, &l, zero_tol)
}

/// Solves `C^-1/2 L^-1 C^-1/2 eta = omega^2 eta` for any coordinate system.
///
/// The qubit mode maximizes `|differential . S_j|` and the readout mode
/// `|common . S_j|` over the non-zero modes. Eigenvector signs are fixed
/// so that the qubit's differential and the readout's common amplitudes
/// are positive; remaining modes have their largest component positive.
pub fn decompose_with(
    c: &DMatrix<f64>,
    linv: &DMatrix<f64>,
    projection: &JunctionProjection,
    expected_zero_modes: usize,
    zero_tol: f64,
) -> Result<ModeDecomposition> {
    let n = c.nrows();
    let c_inv_sqrt = inverse_sqrt_spd(c).ok_or(CircuitError::NonPositiveDefinite)?;
    let k = symmetrize(&(&c_inv_sqrt * linv * &c_inv_sqrt));
    let (w2, mut s) = sorted_symmetric_eigen(k);

    let w2_max = w2.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let zero: Vec<usize> = (0..n).filter(|&j| w2[j] < zero_tol * w2_max).collect();
    if zero.len() != expected_zero_modes {
        return Err(CircuitError::ZeroModeAmbiguous { found: zero.len(), expected: expected_zero_modes });
    }
    let active: Vec<usize> = (0..n).filter(|j| !zero.contains(j)).collect();

    let argmax = |weights: &[f64]| {
        // strict comparison keeps the lower-frequency mode on ties
        let mut best = active[0];
        for &j in &active[1..] {
            if JunctionProjection::project(weights, &s, j).abs()
                > JunctionProjection::project(weights, &s, best).abs()
            {
                best = j;
            }
        }
        best
    };
    let qubit = argmax(&projection.differential);
    let readout = argmax(&projection.common);
    if qubit == readout {
        return Err(CircuitError::DegenerateSorting(qubit));
    }

    for j in 0..n {
        let sign_ref = if j == qubit {
            JunctionProjection::project(&projection.differential, &s, j)
        } else if j == readout {
            JunctionProjection::project(&projection.common, &s, j)
        } else {
            let col = s.column(j);
            let mut best = 0.0f64;
            for &v in col.iter() {
                if v.abs() > best.abs() {
                    best = v;
                }
            }
            best
        };
        if sign_ref < 0.0 {
            let mut col = s.column_mut(j);
            col.neg_mut();
        }
    }

    let omegas: Vec<f64> = w2.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let s_prime = &c_inv_sqrt * &s;
    let lambda = |j: usize| {
        2.0 * PI / PHI0 * (HBAR / (2.0 * omegas[j])).sqrt()
            * JunctionProjection::project(&projection.differential, &s_prime, j)
    };
    Ok(ModeDecomposition {
        lambda_r: lambda(readout),
        lambda_q: lambda(qubit),
        omegas,
        s,
        s_prime,
        qubit_index: qubit,
        readout_index: readout,
        zero_index: zero.first().copied(),
        delta_c_af: 0.0,
    })
}

/// Effective parameters of the idealized inductively coupled circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealizedParams {
    pub lq_eff_nh: f64,
    pub lr_eff_nh: f64,
    /// Shared inductance, identical to the kinetic asymmetry.
    pub ls_nh: f64,
    pub cr_eff_ff: f64,
    pub cq_eff_ff: f64,
    /// `L_r L_q + L_q^2/4 - Delta_k^2` (nH^2).
    pub sigma_l_nh2: f64,
    /// Loop parameters the reduction started from (nH).
    pub lq_nh: f64,
    pub lr_nh: f64,
    pub dk_nh: f64,
}

/// Eliminates island 4 and the ground node.
///
/// `C_r` is the mean of `C13` and `C23`, the shunt includes the junction
/// capacitance, and `C_J0` is the mean of the two electrode ground terms.
pub fn reduce_to_idealized(spec: &CircuitSpec) -> Result<IdealizedParams> {
    spec.validate()?;
    let t = &spec.capacitances;
    let (c10, c20) = (t.get(1, 0), t.get(2, 0));
    let mean = 0.5 * (c10 + c20);
    if (c10 - c20).abs() > GROUND_SYMMETRY_TOL * mean {
        return Err(CircuitError::AsymmetricGround { c10, c20 });
    }
    let (lq, lr, dk) = (spec.lq_nh, spec.lr_nh, spec.dk_nh);
    let cr = 0.5 * (t.get(1, 3) + t.get(2, 3));
    let csh = t.get(1, 2) + spec.cj_ff;
    let cj0 = mean;
    let c30 = t.get(3, 0);
    let series = if cj0 > 0.0 && c30 > 0.0 { 1.0 / (1.0 / (2.0 * cj0) + 1.0 / c30) } else { 0.0 };
    Ok(IdealizedParams {
        lq_eff_nh: lq - dk,
        lr_eff_nh: lr + lq / 4.0 - dk,
        ls_nh: dk,
        cr_eff_ff: 2.0 * cr + series,
        cq_eff_ff: cr / 2.0 + csh + cj0 / 2.0,
        sigma_l_nh2: lr * lq + lq * lq / 4.0 - dk * dk,
        lq_nh: lq,
        lr_nh: lr,
        dk_nh: dk,
    })
}

impl IdealizedParams {
    /// Capacitance (F) and inverse inductance (1/H) matrices in the
    /// `(phi_R, phi_Q)` basis, with `phi_Q` the junction phase.
    pub fn matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let c = DMatrix::from_row_slice(2, 2, &[ff_to_f(self.cr_eff_ff), 0.0, 0.0, ff_to_f(self.cq_eff_ff)]);
        let sigma = self.sigma_l_nh2 * 1e-9; // nH^2 / nH -> H when dividing nH entries
        #[rustfmt::skip]
        let l = DMatrix::from_row_slice(2, 2, &[
            self.lq_nh / sigma, -self.dk_nh / sigma,
            -self.dk_nh / sigma, (self.lr_nh + self.lq_nh / 4.0) / sigma,
        ]);
        (c, l)
    }

    /// The same inverse inductance written with the effective inductances.
    pub fn effective_inverse_inductance(&self) -> DMatrix<f64> {
        let (lr, lq, ls) = (self.lr_eff_nh, self.lq_eff_nh, self.ls_nh);
        let det = (lr * lq + lr * ls + lq * ls) * 1e-9;
        DMatrix::from_row_slice(2, 2, &[(lq + ls) / det, -ls / det, -ls / det, (lr + ls) / det])
    }

    pub fn decompose(&self) -> Result<ModeDecomposition> {
        let (c, l) = self.matrices();
        let projection = JunctionProjection { differential: vec![0.0, 1.0], common: vec![1.0, 0.0] };
        decompose_with(&c, &l, &projection, 0, ZERO_MODE_TOL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q7() -> CircuitSpec {
        crate::fixtures::q7()
    }

    fn q7_input() -> CapacitanceInput {
        crate::fixtures::q7_input()
    }

    #[test]
    fn junction_pair_includes_cj() {
        let c = assemble_capacitance_matrix(&q7()).unwrap();
        assert!((c.0[(0, 1)] + ff_to_f(3.27 + 1.85)).abs() < 1e-27);
        // diagonal is the tabulated total plus C_J
        assert!((c.0[(0, 0)] - ff_to_f(16.07 + 1.85)).abs() < 1e-27);
        assert!((c.0[(2, 2)] - ff_to_f(71.19)).abs() < 1e-27);
    }

    #[test]
    fn diagonal_only_table_gives_scaled_identity() {
        let mut t = CapacitanceTable::default();
        for n in 1..=4 {
            t.set(n, 0, 10.0);
        }
        let spec = CircuitSpec { name: "diag".into(), capacitances: t, cj_ff: 1e-9, lq_nh: 40.0, lr_nh: 10.0, dk_nh: 0.0, ej_ghz: 1.0 };
        let c = assemble_capacitance_matrix(&spec).unwrap();
        let expected = DMatrix::<f64>::identity(4, 4) * ff_to_f(10.0);
        assert!((c.0[(2, 2)] - expected[(2, 2)]).abs() < 1e-30);
        assert!((c.0[(2, 3)]).abs() == 0.0);
    }

    #[test]
    fn missing_ground_pair_is_an_error() {
        let mut input = CapacitanceInput::default();
        input.set_pair(1, 2, 1.0);
        assert_eq!(input.resolve(true).unwrap_err(), CircuitError::MissingPair(1, 0));
    }

    #[test]
    fn missing_mutual_pairs_default_with_warning() {
        let mut input = CapacitanceInput::default();
        for n in 1..=3 {
            input.set_pair(n, 0, 5.0);
        }
        let (table, warnings) = input.resolve(true).unwrap();
        assert_eq!(table.get(1, 2), 0.0);
        assert!(warnings.contains(&TableWarning::DefaultedToZero(1, 2)));
        assert!(warnings.contains(&TableWarning::DefaultedToZero(4, 0)));
    }

    #[test]
    fn diagonal_interpretations_differ() {
        let (total, _) = q7_input().resolve(true).unwrap();
        let (augmented, _) = q7_input().resolve(false).unwrap();
        assert!((total.get(1, 0) - (16.07 - 3.27 - 0.34 - 5.61)).abs() < 1e-12);
        assert_eq!(augmented.get(1, 0), 16.07);
    }

    #[test]
    fn inconsistent_ground_rejected() {
        let mut input = q7_input();
        input.set_pair(1, 0, 7.5);
        assert!(matches!(input.resolve(true), Err(CircuitError::InconsistentGround { node: 1, .. })));
    }

    #[test]
    fn inverse_inductance_symmetric_case() {
        let mut spec = q7();
        spec.lq_nh = 40.0;
        spec.lr_nh = 10.0;
        spec.dk_nh = 0.0;
        let l = assemble_inverse_inductance_matrix(&spec).unwrap().0 * 1e-9; // 1/nH
        assert!((l[(0, 0)] - 1.0 / 20.0).abs() < 1e-15);
        assert!((l[(1, 1)] - 1.0 / 20.0).abs() < 1e-15);
        assert!((l[(2, 2)] - 1.0 / 10.0).abs() < 1e-15);
        assert!((l[(3, 3)] - (2.0 / 20.0 + 1.0 / 10.0)).abs() < 1e-15);
    }

    #[test]
    fn inverse_inductance_q7_branch() {
        let l = assemble_inverse_inductance_matrix(&q7()).unwrap().0;
        assert!((l[(0, 0)] * 19.81e-9 - 1.0).abs() < 1e-12);
        for r in 0..4 {
            assert!(l.row(r).sum().abs() < 1e-6 * l[(3, 3)]);
        }
    }

    #[test]
    fn branch_must_stay_positive() {
        let mut spec = q7();
        spec.dk_nh = 19.53;
        assert!(matches!(assemble_inverse_inductance_matrix(&spec), Err(CircuitError::BranchNonPositive(_))));
        spec.dk_nh = -25.0;
        assert!(matches!(spec.validate(), Err(CircuitError::BranchNonPositive(_))));
    }

    #[test]
    fn asymmetry_arithmetic() {
        let t = CapacitanceTable::default().with(1, 3, 5.0).with(2, 3, 5.0);
        assert_eq!(t.capacitive_asymmetry_af(), 0.0);
        let t = CapacitanceTable::default().with(1, 3, 5.65).with(2, 3, 5.61);
        assert!((t.capacitive_asymmetry_af() - 20.0).abs() < 1e-9);
        let t = CapacitanceTable::default().with(1, 3, 8.67).with(2, 3, 8.63);
        assert!((t.capacitive_asymmetry_af() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn perturbation_moves_asymmetry() {
        let mut t = CapacitanceTable::default().with(1, 3, 5.0).with(2, 3, 5.0);
        t.perturb_asymmetry(25.0);
        assert!((t.capacitive_asymmetry_af() - 25.0).abs() < 1e-9);
    }

    #[test]
    fn idealized_q7_and_q5_arithmetic() {
        let p = reduce_to_idealized(&q7()).unwrap();
        assert!((p.lq_eff_nh - 38.78).abs() < 1e-12);
        assert_eq!(p.ls_nh, 0.28);
        let mut q5 = q7();
        q5.lq_nh = 33.38;
        q5.lr_nh = 11.90;
        q5.dk_nh = 0.39;
        let p = reduce_to_idealized(&q5).unwrap();
        assert!((p.lr_eff_nh - 19.855).abs() < 1e-12);
    }

    #[test]
    fn idealized_zero_asymmetry() {
        let mut spec = q7();
        spec.dk_nh = 0.0;
        let p = reduce_to_idealized(&spec).unwrap();
        assert_eq!(p.ls_nh, 0.0);
        assert!((p.sigma_l_nh2 - (11.73 * 39.06 + 39.06 * 39.06 / 4.0)).abs() < 1e-9);
    }

    #[test]
    fn effective_inductances_reproduce_loop_matrix() {
        let p = reduce_to_idealized(&q7()).unwrap();
        let direct = p.matrices().1;
        assert!((direct - p.effective_inverse_inductance()).abs().max() < 1e-9 * p.matrices().1.abs().max());
    }

    #[test]
    fn idealized_rejects_asymmetric_ground() {
        let mut spec = q7();
        spec.capacitances.set(2, 0, spec.capacitances.get(1, 0) * 1.5);
        assert!(matches!(reduce_to_idealized(&spec), Err(CircuitError::AsymmetricGround { .. })));
    }

    #[test]
    fn q7_modes_are_sorted_and_orthogonal() {
        let m = decompose_circuit(&q7()).unwrap();
        let sts = m.s.transpose() * &m.s;
        assert!((sts - DMatrix::identity(4, 4)).abs().max() < 1e-10);
        assert_eq!(m.zero_index, Some(0));
        assert_ne!(m.qubit_index, m.readout_index);
        assert!(m.lambda_q > 0.0);
        assert!((m.delta_c_af + 20.0).abs() < 1e-6);
        assert_eq!(m.spectator_modes_ghz().len(), 1);
    }

    #[test]
    fn symmetric_circuit_decouples_readout() {
        let mut spec = q7();
        spec.capacitances = spec.capacitances.symmetrized();
        spec.dk_nh = 0.0;
        let m = decompose_circuit(&spec).unwrap();
        assert!(m.lambda_r.abs() < 1e-10, "{}", m.lambda_r);
    }
}
