//! Two-mode Hamiltonian in a truncated Fock basis: construction,
//! diagonalization, level labeling and derived quantities.
//!
//! Energies are in GHz (E/h). Basis index of `|n_R, n_Q>` is
//! `n_R * nQ + n_Q`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;
use thiserror::Error;

use crate::circuit::{decompose_circuit_tol, CircuitError, CircuitSpec, IdealizedParams, ModeParams};
use crate::linalg::{cos_sin_of_symmetric, kron, ladder_sum, rayleigh_quotient, sorted_symmetric_eigen, symmetrize};
use crate::units::{ghz_to_joule, H, KB};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("truncation {n_r}x{n_q} exceeds the cap of {max} basis states")]
    TruncationOverflow { n_r: usize, n_q: usize, max: usize },
    #[error("level ({0}, {1}) could not be labeled with confidence above 0.5")]
    LabelingFailed(usize, usize),
    #[error("level ({0}, {1}) is outside the kept spectrum")]
    LevelMissing(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type Result<T, E = FockError> = core::result::Result<T, E>;

/// Overlaps below this are never considered when labeling.
const OVERLAP_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    pub n_r: usize,
    pub n_q: usize,
    /// Relative zero-mode tolerance handed to the mode decomposition.
    pub zero_tol: f64,
    pub max_dim: usize,
    /// Labels with `n_R > n_r - guard_r` are discarded.
    pub guard_r: usize,
    /// Labels with `n_Q > n_q - guard_q` are discarded.
    pub guard_q: usize,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self { n_r: 15, n_q: 30, zero_tol: crate::circuit::ZERO_MODE_TOL, max_dim: 10_000, guard_r: 5, guard_q: 10 }
    }
}

impl FockConfig {
    pub fn new(n_r: usize, n_q: usize) -> Self {
        Self { n_r, n_q, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r < 2 || self.n_q < 2 {
            return Err(FockError::InvalidArgument("truncations must be at least 2"));
        }
        if self.n_r.saturating_mul(self.n_q) > self.max_dim {
            return Err(FockError::TruncationOverflow { n_r: self.n_r, n_q: self.n_q, max: self.max_dim });
        }
        if self.n_r <= self.guard_r || self.n_q < self.guard_q + 3 {
            return Err(FockError::InvalidArgument("guard bands leave no room for the levels of interest"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n_r * self.n_q
    }

    fn max_label(&self) -> (usize, usize) {
        (self.n_r - self.guard_r, self.n_q - self.guard_q)
    }
}

/// Dense Hamiltonian together with what labeling needs to know about it.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub matrix: DMatrix<f64>,
    /// Qubit Hamiltonian with the readout coupling switched off; its
    /// eigenstates form the reference basis for labels.
    pub qubit_block: DMatrix<f64>,
    pub n_r: usize,
    pub n_q: usize,
    pub flux_phi0: f64,
}

fn reduce_flux(flux: f64) -> f64 {
    let r = flux % 1.0;
    if r < 0.0 {
        r + 1.0
    } else {
        r
    }
}

/// Builds `H/h = f_R (n_R + 1/2) + f_Q (n_Q + 1/2) - E_J cos(A)`.
///
/// The cosine is exact on the truncated space: `A` is a sum of commuting
/// terms, so `cos(A)` expands into products of single-mode cosines and
/// sines, each obtained from the eigendecomposition of `a + a^dagger`.
pub fn build_hamiltonian(modes: &ModeParams, ej_ghz: f64, flux_phi0: f64, cfg: &FockConfig) -> Result<Hamiltonian> {
    cfg.validate()?;
    let finite = [modes.f_r_ghz, modes.f_q_ghz, modes.lambda_r, modes.lambda_q, ej_ghz, flux_phi0];
    if finite.iter().any(|x| !x.is_finite()) {
        return Err(FockError::InvalidArgument("non-finite mode parameter or flux"));
    }
    let (n_r, n_q) = (cfg.n_r, cfg.n_q);
    let phase = 2.0 * PI * reduce_flux(flux_phi0);
    let (cp, sp) = (phase.cos(), phase.sin());

    let (ca, sa) = cos_sin_of_symmetric(&ladder_sum(n_r), modes.lambda_r);
    let (cb, sb) = cos_sin_of_symmetric(&ladder_sum(n_q), modes.lambda_q);

    // cos(a + b - p) = cos p [CaCb - SaSb] + sin p [SaCb + CaSb]
    let mut cos_a = kron(&ca, &cb) * cp - kron(&sa, &sb) * cp;
    if sp != 0.0 {
        cos_a += (kron(&sa, &cb) + kron(&ca, &sb)) * sp;
    }
    let mut h = cos_a * (-ej_ghz);
    for r in 0..n_r {
        for q in 0..n_q {
            let i = r * n_q + q;
            h[(i, i)] += modes.f_r_ghz * (r as f64 + 0.5) + modes.f_q_ghz * (q as f64 + 0.5);
        }
    }

    let mut qubit_block = (cb * cp + sb * sp) * (-ej_ghz);
    for q in 0..n_q {
        qubit_block[(q, q)] += modes.f_q_ghz * (q as f64 + 0.5);
    }

    Ok(Hamiltonian {
        matrix: symmetrize(&h),
        qubit_block: symmetrize(&qubit_block),
        n_r,
        n_q,
        flux_phi0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub n_r: usize,
    pub n_q: usize,
    /// E/h in GHz.
    pub energy: f64,
    /// Squared overlap with the reference state of the assigned label.
    pub confidence: f64,
    pub ambiguous: bool,
}

/// Eigenvalues of the Hamiltonian with `(n_R, n_Q)` labels, ascending in
/// energy. `states` holds the matching eigenvectors column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSpectrum {
    pub flux_phi0: f64,
    pub levels: Vec<Level>,
    pub states: DMatrix<f64>,
}

impl LabeledSpectrum {
    pub fn index_of(&self, n_r: usize, n_q: usize) -> Option<usize> {
        self.levels.iter().position(|l| l.n_r == n_r && l.n_q == n_q)
    }

    pub fn level(&self, n_r: usize, n_q: usize) -> Result<&Level> {
        self.index_of(n_r, n_q).map(|i| &self.levels[i]).ok_or(FockError::LevelMissing(n_r, n_q))
    }

    pub fn energy(&self, n_r: usize, n_q: usize) -> Result<f64> {
        self.level(n_r, n_q).map(|l| l.energy)
    }
}

/// Diagonalizes `h` and labels each eigenvector.
///
/// Reference states are `|n_R> (x) |q_k>`, with `|q_k>` the eigenstates of
/// the qubit block; when `E_J = 0` these are plain Fock states. Pairs of
/// (reference, eigenvector) are taken greedily by descending squared
/// overlap, ties broken by reference index then eigen index, each side used
/// once. Levels with confidence at or below 0.5 are flagged ambiguous.
pub fn diagonalize_and_label(h: &Hamiltonian, cfg: &FockConfig) -> Result<LabeledSpectrum> {
    cfg.validate()?;
    let (n_r, n_q) = (h.n_r, h.n_q);
    let dim = n_r * n_q;
    if h.matrix.nrows() != dim || h.qubit_block.nrows() != n_q {
        return Err(FockError::InvalidArgument("Hamiltonian shape does not match its truncation"));
    }
    let (energies, vectors) = sorted_symmetric_eigen(h.matrix.clone());
    let (_, u) = sorted_symmetric_eigen(h.qubit_block.clone());
    let ut = u.transpose();

    let mut entries: Vec<(f64, usize, usize)> = Vec::new();
    for r in 0..n_r {
        let block = &ut * vectors.rows(r * n_q, n_q);
        for k in 0..n_q {
            for e in 0..dim {
                let ov = block[(k, e)] * block[(k, e)];
                if ov >= OVERLAP_FLOOR {
                    entries.push((ov, r * n_q + k, e));
                }
            }
        }
    }
    entries.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut ref_used = alloc::vec![false; dim];
    let mut label_of: Vec<Option<(usize, f64)>> = alloc::vec![None; dim];
    let mut assigned = 0;
    for (ov, b, e) in entries {
        if ref_used[b] || label_of[e].is_some() {
            continue;
        }
        ref_used[b] = true;
        label_of[e] = Some((b, ov));
        assigned += 1;
        if assigned == dim {
            break;
        }
    }

    let (max_r, max_q) = cfg.max_label();
    let mut levels = Vec::new();
    let mut keep = Vec::new();
    for (e, label) in label_of.iter().enumerate() {
        if let Some((b, ov)) = *label {
            let (lr, lq) = (b / n_q, b % n_q);
            if lr <= max_r && lq <= max_q {
                // chi cancels most of the eigenvalue, so the levels that
                // enter the transition table get a refined energy.
                let mut energy = energies[e];
                if lr <= 1 && lq <= 2 {
                    let refined = rayleigh_quotient(&h.matrix, vectors.column(e).as_slice());
                    if refined.is_finite() {
                        energy = refined;
                    }
                }
                levels.push(Level { n_r: lr, n_q: lq, energy, confidence: ov, ambiguous: ov <= 0.5 });
                keep.push(e);
            }
        }
    }
    let states = DMatrix::from_fn(dim, keep.len(), |row, col| vectors[(row, keep[col])]);
    let spectrum = LabeledSpectrum { flux_phi0: h.flux_phi0, levels, states };

    for (lr, lq) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        match spectrum.level(lr, lq) {
            Ok(l) if !l.ambiguous => {}
            _ => return Err(FockError::LabelingFailed(lr, lq)),
        }
    }
    let lowest = &spectrum.levels[0];
    if (lowest.n_r, lowest.n_q) != (0, 0) {
        return Err(FockError::LabelingFailed(0, 0));
    }
    Ok(spectrum)
}

/// Transition frequencies at one flux point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionTable {
    pub flux_phi0: f64,
    pub fq01_ghz: f64,
    pub fq02_ghz: f64,
    pub fr0_ghz: f64,
    pub fr1_ghz: f64,
    pub chi_mhz: f64,
    /// Set when a level entering the table was labeled with low confidence.
    pub ambiguous: bool,
}

pub fn transitions(spectrum: &LabeledSpectrum) -> Result<TransitionTable> {
    let e00 = spectrum.energy(0, 0)?;
    let e01 = spectrum.energy(0, 1)?;
    let e10 = spectrum.energy(1, 0)?;
    let e11 = spectrum.energy(1, 1)?;
    let l02 = spectrum.level(0, 2)?;
    let fr0 = e10 - e00;
    let fr1 = e11 - e01;
    Ok(TransitionTable {
        flux_phi0: spectrum.flux_phi0,
        fq01_ghz: e01 - e00,
        fq02_ghz: l02.energy - e00,
        fr0_ghz: fr0,
        fr1_ghz: fr1,
        chi_mhz: ((e11 - e10) - (e01 - e00)) * 1e3,
        ambiguous: l02.ambiguous,
    })
}

pub fn solve_modes(modes: &ModeParams, ej_ghz: f64, flux_phi0: f64, cfg: &FockConfig) -> Result<LabeledSpectrum> {
    let h = build_hamiltonian(modes, ej_ghz, flux_phi0, cfg)?;
    diagonalize_and_label(&h, cfg)
}

pub fn transitions_for_modes(modes: &ModeParams, ej_ghz: f64, flux_phi0: f64, cfg: &FockConfig) -> Result<TransitionTable> {
    transitions(&solve_modes(modes, ej_ghz, flux_phi0, cfg)?)
}

pub fn device_modes(spec: &CircuitSpec, cfg: &FockConfig) -> Result<ModeParams> {
    Ok(decompose_circuit_tol(spec, cfg.zero_tol)?.params())
}

pub fn device_transitions(spec: &CircuitSpec, flux_phi0: f64, cfg: &FockConfig) -> Result<TransitionTable> {
    transitions_for_modes(&device_modes(spec, cfg)?, spec.ej_ghz, flux_phi0, cfg)
}

/// `chi = (E11 - E01) - (E10 - E00)` in MHz.
pub fn dispersive_shift(spec: &CircuitSpec, flux_phi0: f64, cfg: &FockConfig) -> Result<f64> {
    Ok(device_transitions(spec, flux_phi0, cfg)?.chi_mhz)
}

/// Transitions of the idealized two-node circuit, through the same
/// Hamiltonian engine.
pub fn idealized_transitions(
    params: &IdealizedParams,
    ej_ghz: f64,
    flux_phi0: f64,
    cfg: &FockConfig,
) -> Result<TransitionTable> {
    transitions_for_modes(&params.decompose()?.params(), ej_ghz, flux_phi0, cfg)
}

/// Evaluates a function on every grid point. Implementations decide how
/// the points are scheduled; output order follows the grid.
pub trait Sweeper {
    fn map<T, F>(&self, grid: &[f64], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(f64) -> T + Sync + Send;
}

/// Evaluates points one after another.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Sweeper for Serial {
    fn map<T, F>(&self, grid: &[f64], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(f64) -> T + Sync + Send,
    {
        grid.iter().map(|&x| f(x)).collect()
    }
}

/// Transition table at each flux point; failures are reported per point.
pub fn flux_sweep(spec: &CircuitSpec, grid: &[f64], cfg: &FockConfig) -> Result<Vec<Result<TransitionTable>>> {
    flux_sweep_with(&Serial, spec, grid, cfg)
}

pub fn flux_sweep_with<S: Sweeper>(
    sweeper: &S,
    spec: &CircuitSpec,
    grid: &[f64],
    cfg: &FockConfig,
) -> Result<Vec<Result<TransitionTable>>> {
    if grid.is_empty() {
        return Err(FockError::InvalidArgument("empty flux grid"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(FockError::InvalidArgument("non-finite flux value"));
    }
    cfg.validate()?;
    let modes = device_modes(spec, cfg)?;
    let ej = spec.ej_ghz;
    Ok(sweeper.map(grid, |flux| transitions_for_modes(&modes, ej, flux, cfg)))
}

/// `|<0|phi|1>|` with `phi = (lambda_Q X_Q + lambda_R X_R) / 2 pi`, taken
/// between the labeled `(0,0)` and `(0,1)` states.
pub fn matrix_element_for_modes(modes: &ModeParams, ej_ghz: f64, flux_phi0: f64, cfg: &FockConfig) -> Result<f64> {
    let spectrum = solve_modes(modes, ej_ghz, flux_phi0, cfg)?;
    let g = spectrum.states.column(spectrum.index_of(0, 0).ok_or(FockError::LevelMissing(0, 0))?);
    let e = spectrum.states.column(spectrum.index_of(0, 1).ok_or(FockError::LevelMissing(0, 1))?);
    let (n_r, n_q) = (cfg.n_r, cfg.n_q);
    let xr = ladder_sum(n_r);
    let xq = ladder_sum(n_q);
    let mut phi_e = DMatrix::<f64>::zeros(n_r * n_q, 1);
    for r in 0..n_r {
        for q in 0..n_q {
            let mut acc = 0.0;
            for q2 in 0..n_q {
                acc += modes.lambda_q * xq[(q, q2)] * e[r * n_q + q2];
            }
            for r2 in 0..n_r {
                acc += modes.lambda_r * xr[(r, r2)] * e[r2 * n_q + q];
            }
            phi_e[(r * n_q + q, 0)] = acc / (2.0 * PI);
        }
    }
    Ok(g.dot(&phi_e.column(0)).abs())
}

pub fn flux_matrix_element(spec: &CircuitSpec, flux_phi0: f64, cfg: &FockConfig) -> Result<f64> {
    matrix_element_for_modes(&device_modes(spec, cfg)?, spec.ej_ghz, flux_phi0, cfg)
}

fn t1_prefactor(el_ghz: f64, matel: f64, fq_ghz: f64, temperature_k: f64) -> Result<f64> {
    if !(el_ghz > 0.0) || !(fq_ghz > 0.0) || !(matel > 0.0) || !(temperature_k >= 0.0) {
        return Err(FockError::InvalidArgument("E_L, f_q and the matrix element must be positive, T non-negative"));
    }
    let x = H * fq_ghz * 1e9 / (2.0 * KB * temperature_k);
    let coth = 1.0 / x.tanh();
    Ok(8.0 * PI.powi(3) * ghz_to_joule(el_ghz) / H * matel * matel * (1.0 + coth))
}

/// Inductive-loss limited T1 (s).
pub fn inductive_t1(el_ghz: f64, q_ind: f64, matel: f64, fq_ghz: f64, temperature_k: f64) -> Result<f64> {
    if !(q_ind > 0.0) {
        return Err(FockError::InvalidArgument("Q_ind must be positive"));
    }
    Ok(q_ind / t1_prefactor(el_ghz, matel, fq_ghz, temperature_k)?)
}

/// Inductive quality factor implied by a measured T1 (s).
pub fn q_ind_from_t1(el_ghz: f64, t1_s: f64, matel: f64, fq_ghz: f64, temperature_k: f64) -> Result<f64> {
    if !(t1_s > 0.0) {
        return Err(FockError::InvalidArgument("T1 must be positive"));
    }
    Ok(t1_s * t1_prefactor(el_ghz, matel, fq_ghz, temperature_k)?)
}
