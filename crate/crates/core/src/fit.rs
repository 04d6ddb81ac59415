//! Weighted least-squares fit of circuit parameters to spectroscopy data.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;
use thiserror::Error;

use crate::circuit::{CapacitanceTable, CircuitSpec};
use crate::fock::{device_modes, transitions_for_modes, FockConfig, FockError, Serial, Sweeper, TransitionTable};
use crate::optimize::{minimize, NelderMeadOptions};
use crate::units::{ff_to_f, nh_to_h};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid fit problem: {0}")]
    InvalidProblem(&'static str),
    #[error("parameter {0} lies outside its bounds")]
    OutOfBounds(&'static str),
}

pub type Result<T, E = FitError> = core::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Transition {
    R,
    Q01,
    Q02,
}

impl Transition {
    pub fn default_weight(self) -> f64 {
        match self {
            Transition::R => 4.0,
            _ => 1.0,
        }
    }

    pub fn model(self, t: &TransitionTable) -> f64 {
        match self {
            Transition::R => t.fr0_ghz,
            Transition::Q01 => t.fq01_ghz,
            Transition::Q02 => t.fq02_ghz,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Transition::R => "R",
            Transition::Q01 => "Q01",
            Transition::Q02 => "Q02",
        }
    }
}

impl core::str::FromStr for Transition {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" => Ok(Transition::R),
            "Q01" | "q01" => Ok(Transition::Q01),
            "Q02" | "q02" => Ok(Transition::Q02),
            _ => Err(FitError::InvalidProblem("transition must be R, Q01 or Q02")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectroscopyPoint {
    pub flux_phi0: f64,
    pub freq_ghz: f64,
    pub transition: Transition,
    pub weight: f64,
}

impl SpectroscopyPoint {
    /// Point with the default weight of its transition.
    pub fn new(flux_phi0: f64, freq_ghz: f64, transition: Transition) -> Self {
        Self { flux_phi0, freq_ghz, transition, weight: transition.default_weight() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.freq_ghz > 0.0) || !self.flux_phi0.is_finite() {
            return Err(FitError::InvalidProblem("points need finite flux and positive frequency"));
        }
        if !(self.weight >= 0.0) || !self.weight.is_finite() {
            return Err(FitError::InvalidProblem("weights must be finite and non-negative"));
        }
        Ok(())
    }
}

/// `(Lr nH, Lq nH, Dk nH, EJ GHz, CJ fF)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    pub lr_nh: f64,
    pub lq_nh: f64,
    pub dk_nh: f64,
    pub ej_ghz: f64,
    pub cj_ff: f64,
}

pub const THETA_NAMES: [&str; 5] = ["Lr", "Lq", "Dk", "EJ", "CJ"];

impl Theta {
    pub fn to_array(&self) -> [f64; 5] {
        [self.lr_nh, self.lq_nh, self.dk_nh, self.ej_ghz, self.cj_ff]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self { lr_nh: x[0], lq_nh: x[1], dk_nh: x[2], ej_ghz: x[3], cj_ff: x[4] }
    }

    pub fn of(spec: &CircuitSpec) -> Self {
        Self { lr_nh: spec.lr_nh, lq_nh: spec.lq_nh, dk_nh: spec.dk_nh, ej_ghz: spec.ej_ghz, cj_ff: spec.cj_ff }
    }

    pub fn spec(&self, capacitances: CapacitanceTable) -> CircuitSpec {
        CircuitSpec {
            name: "fit".into(),
            capacitances,
            cj_ff: self.cj_ff,
            lq_nh: self.lq_nh,
            lr_nh: self.lr_nh,
            dk_nh: self.dk_nh,
            ej_ghz: self.ej_ghz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: Theta,
    pub hi: Theta,
}

impl Bounds {
    /// A box from a fifth to five times each positive parameter, with
    /// `Dk` symmetric and kept inside `(-Lq/2, Lq/2)` for every allowed `Lq`.
    pub fn around(theta: &Theta) -> Self {
        let lq_lo = theta.lq_nh / 5.0;
        let dk = (4.0 * theta.dk_nh.abs()).max(1.0).min(0.45 * lq_lo);
        Self {
            lo: Theta {
                lr_nh: theta.lr_nh / 5.0,
                lq_nh: lq_lo,
                dk_nh: -dk,
                ej_ghz: theta.ej_ghz / 5.0,
                cj_ff: theta.cj_ff / 5.0,
            },
            hi: Theta {
                lr_nh: theta.lr_nh * 5.0,
                lq_nh: theta.lq_nh * 5.0,
                dk_nh: dk,
                ej_ghz: theta.ej_ghz * 5.0,
                cj_ff: theta.cj_ff * 5.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.lo.to_array(), self.hi.to_array());
        for i in 0..5 {
            if !(lo[i] < hi[i]) {
                return Err(FitError::InvalidProblem("every lower bound must be below its upper bound"));
            }
            if i != 2 && !(lo[i] > 0.0) {
                return Err(FitError::InvalidProblem("Lr, Lq, EJ and CJ bounds must be positive"));
            }
        }
        if (self.lo.dk_nh + self.hi.dk_nh).abs() > 1e-12 * self.hi.dk_nh.abs() {
            return Err(FitError::InvalidProblem("Dk bounds must be symmetric about zero"));
        }
        if !(self.hi.dk_nh < self.lo.lq_nh / 2.0) {
            return Err(FitError::InvalidProblem("Dk bound must stay below Lq/2"));
        }
        Ok(())
    }

    pub fn contains(&self, theta: &Theta) -> Result<()> {
        let (lo, hi, x) = (self.lo.to_array(), self.hi.to_array(), theta.to_array());
        for i in 0..5 {
            if !(x[i] >= lo[i] && x[i] <= hi[i]) {
                return Err(FitError::OutOfBounds(THETA_NAMES[i]));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub data: Vec<SpectroscopyPoint>,
    /// Capacitance table held fixed during the fit.
    pub fixed: CapacitanceTable,
    pub theta0: Theta,
    pub bounds: Bounds,
    pub cfg: FockConfig,
    pub options: NelderMeadOptions,
    /// Residual (GHz, before weighting) charged for points whose model
    /// value is unavailable or ambiguously labeled.
    pub penalty_ghz: f64,
}

impl FitProblem {
    pub fn new(data: Vec<SpectroscopyPoint>, fixed: CapacitanceTable, theta0: Theta) -> Self {
        Self {
            data,
            fixed,
            theta0,
            bounds: Bounds::around(&theta0),
            cfg: FockConfig::default(),
            options: NelderMeadOptions::default(),
            penalty_ghz: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.is_empty() {
            return Err(FitError::InvalidProblem("no spectroscopy points"));
        }
        for p in &self.data {
            p.validate()?;
        }
        self.bounds.validate()?;
        self.bounds.contains(&self.theta0)?;
        self.cfg.validate().map_err(|_| FitError::InvalidProblem("invalid Fock truncation"))?;
        Ok(())
    }
}

/// Why a point was charged the penalty instead of a model residual.
#[derive(Debug, Clone, PartialEq)]
pub enum PointIssue {
    Ambiguous,
    ModelFailure(FockError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `(model - measured) * sqrt(weight)` in GHz, one per point.
    pub values: Vec<f64>,
    pub issues: Vec<(usize, PointIssue)>,
}

impl Residuals {
    pub fn rss(&self) -> f64 {
        self.values.iter().map(|r| r * r).sum()
    }
}

/// Weighted residuals, evaluating each distinct flux value once.
pub fn residuals(theta: &Theta, problem: &FitProblem) -> Result<Residuals> {
    residuals_with(&Serial, theta, problem)
}

pub fn residuals_with<S: Sweeper>(sweeper: &S, theta: &Theta, problem: &FitProblem) -> Result<Residuals> {
    problem.bounds.contains(theta)?;
    let spec = theta.spec(problem.fixed);
    let cfg = problem.cfg;

    let mut fluxes: Vec<f64> = problem.data.iter().map(|p| p.flux_phi0).collect();
    fluxes.sort_by(|a, b| a.total_cmp(b));
    fluxes.dedup();
    let tables: Vec<core::result::Result<TransitionTable, FockError>> = match device_modes(&spec, &cfg) {
        Ok(modes) => sweeper.map(&fluxes, |flux| transitions_for_modes(&modes, theta.ej_ghz, flux, &cfg)),
        Err(e) => fluxes.iter().map(|_| Err(e.clone())).collect(),
    };
    let by_flux: BTreeMap<u64, usize> = fluxes.iter().enumerate().map(|(i, f)| (f.to_bits(), i)).collect();

    let mut values = Vec::with_capacity(problem.data.len());
    let mut issues = Vec::new();
    for (i, p) in problem.data.iter().enumerate() {
        let sw = p.weight.sqrt();
        match &tables[by_flux[&p.flux_phi0.to_bits()]] {
            Ok(t) if p.transition == Transition::Q02 && t.ambiguous => {
                values.push(problem.penalty_ghz * sw);
                issues.push((i, PointIssue::Ambiguous));
            }
            Ok(t) => values.push((p.transition.model(t) - p.freq_ghz) * sw),
            Err(e) => {
                values.push(problem.penalty_ghz * sw);
                issues.push((i, PointIssue::ModelFailure(e.clone())));
            }
        }
    }
    Ok(Residuals { values, issues })
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// Fewer than five weighted points or only one transition type.
    Underdetermined,
    /// Tolerances were not met within the evaluation budget.
    NotConverged,
    /// Points charged the penalty at the returned parameters.
    PenalizedPoints(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta: Theta,
    pub rss: f64,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub evals: usize,
    /// Best RSS after each optimizer iteration.
    pub history: Vec<f64>,
    pub warnings: Vec<FitWarning>,
}

fn underdetermined(data: &[SpectroscopyPoint]) -> bool {
    let informative: Vec<&SpectroscopyPoint> = data.iter().filter(|p| p.weight > 0.0).collect();
    let mut kinds: Vec<Transition> = informative.iter().map(|p| p.transition).collect();
    kinds.sort();
    kinds.dedup();
    informative.len() < 5 || kinds.len() < 2
}

pub fn fit_parameters(problem: &FitProblem) -> Result<FitResult> {
    fit_parameters_with(&Serial, problem)
}

/// Bounded simplex descent on the weighted RSS.
///
/// Failing to converge is not an error: the best point found is returned
/// with a [`FitWarning::NotConverged`] flag.
pub fn fit_parameters_with<S: Sweeper>(sweeper: &S, problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let lo = problem.bounds.lo.to_array();
    let hi = problem.bounds.hi.to_array();
    let objective = |x: &[f64]| match residuals_with(sweeper, &Theta::from_slice(x), problem) {
        Ok(r) => r.rss(),
        Err(_) => f64::INFINITY,
    };
    let m = minimize(objective, &problem.theta0.to_array(), &lo, &hi, &problem.options);
    let theta = Theta::from_slice(&m.x);
    let res = residuals_with(sweeper, &theta, problem)?;

    let mut warnings = Vec::new();
    if underdetermined(&problem.data) {
        warnings.push(FitWarning::Underdetermined);
    }
    if !m.converged {
        warnings.push(FitWarning::NotConverged);
    }
    if !res.issues.is_empty() {
        warnings.push(FitWarning::PenalizedPoints(res.issues.len()));
    }
    Ok(FitResult {
        theta,
        rss: res.rss(),
        residuals: res.values,
        converged: m.converged,
        evals: m.evals,
        history: m.history,
        warnings,
    })
}

/// Rough starting point from data and the capacitance table.
///
/// `CJ` starts at 2 fF and `Dk` at zero. The readout branch uses the
/// idealized effective capacitance `C_R` and the median measured resonator
/// frequency: `L_R = 1/(omega^2 C_R)`, `Lr = L_R - Lq/4`. `EJ` follows
/// from the highest measured `Q01` point treated as a plasma frequency of
/// the junction in parallel with `L_Q`: `f^2 = f_Q^2 (1 + EJ/E_L)`.
pub fn initial_guess(data: &[SpectroscopyPoint], table: &CapacitanceTable, lq_nh: f64) -> Theta {
    let cj = 2.0;
    let cr = 0.5 * (table.get(1, 3) + table.get(2, 3));
    let cj0 = 0.5 * (table.get(1, 0) + table.get(2, 0));
    let c30 = table.get(3, 0);
    let series = if cj0 > 0.0 && c30 > 0.0 { 1.0 / (1.0 / (2.0 * cj0) + 1.0 / c30) } else { 0.0 };
    let c_r = ff_to_f(2.0 * cr + series).max(ff_to_f(1.0));
    let c_q = ff_to_f(cr / 2.0 + table.get(1, 2) + cj + cj0 / 2.0);

    let mut fr: Vec<f64> = data.iter().filter(|p| p.transition == Transition::R).map(|p| p.freq_ghz).collect();
    fr.sort_by(|a, b| a.total_cmp(b));
    let lr = match fr.get(fr.len() / 2) {
        Some(&f) => {
            let w = 2.0 * PI * f * 1e9;
            (1.0 / (w * w * c_r) * 1e9 - lq_nh / 4.0).max(0.1)
        }
        None => 10.0,
    };

    let l_q = nh_to_h(lq_nh);
    let f_q = 1.0 / (2.0 * PI * (l_q * c_q).sqrt()) * 1e-9;
    let el = crate::units::inductive_energy_ghz(lq_nh);
    let top = data.iter().filter(|p| p.transition == Transition::Q01).map(|p| p.freq_ghz).fold(0.0f64, f64::max);
    let ej = if top > 0.0 { (el * (top * top / (f_q * f_q) - 1.0)).clamp(0.5, 20.0) } else { el };
    Theta { lr_nh: lr, lq_nh, dk_nh: 0.0, ej_ghz: ej, cj_ff: cj }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::q7;

    fn small_cfg() -> FockConfig {
        FockConfig::new(7, 20)
    }

    #[test]
    fn residual_of_offset_resonator_point() {
        let spec = q7();
        let cfg = small_cfg();
        let t = crate::fock::device_transitions(&spec, 0.5, &cfg).unwrap();
        let mut problem = FitProblem::new(
            alloc::vec![SpectroscopyPoint::new(0.5, t.fr0_ghz + 0.010, Transition::R)],
            spec.capacitances,
            Theta::of(&spec),
        );
        problem.cfg = cfg;
        let r = residuals(&Theta::of(&spec), &problem).unwrap();
        assert!((r.values[0].abs() - 0.020).abs() < 1e-9);
        assert!(r.values[0] < 0.0);
    }

    #[test]
    fn exact_data_has_zero_residuals() {
        let spec = q7();
        let cfg = small_cfg();
        let mut data = Vec::new();
        for flux in [0.3, 0.45, 0.5] {
            let t = crate::fock::device_transitions(&spec, flux, &cfg).unwrap();
            data.push(SpectroscopyPoint::new(flux, t.fr0_ghz, Transition::R));
            data.push(SpectroscopyPoint::new(flux, t.fq01_ghz, Transition::Q01));
        }
        let mut problem = FitProblem::new(data, spec.capacitances, Theta::of(&spec));
        problem.cfg = cfg;
        let r = residuals(&Theta::of(&spec), &problem).unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-6));
        assert!(r.issues.is_empty());
    }

    #[test]
    fn theta_outside_bounds_rejected() {
        let spec = q7();
        let problem = FitProblem::new(
            alloc::vec![SpectroscopyPoint::new(0.5, 7.0, Transition::R)],
            spec.capacitances,
            Theta::of(&spec),
        );
        let mut theta = Theta::of(&spec);
        theta.lq_nh *= 10.0;
        assert_eq!(residuals(&theta, &problem).unwrap_err(), FitError::OutOfBounds("Lq"));
    }

    #[test]
    fn bounds_rules() {
        let spec = q7();
        let b = Bounds::around(&Theta::of(&spec));
        b.validate().unwrap();
        let mut skew = b;
        skew.lo.dk_nh *= 0.5;
        assert!(skew.validate().is_err());
        let mut neg = b;
        neg.lo.ej_ghz = -1.0;
        assert!(neg.validate().is_err());
    }

    #[test]
    fn resonator_only_data_warns() {
        let spec = q7();
        let cfg = small_cfg();
        let data: Vec<SpectroscopyPoint> = [0.2, 0.3]
            .iter()
            .map(|&f| {
                let t = crate::fock::device_transitions(&spec, f, &cfg).unwrap();
                SpectroscopyPoint::new(f, t.fr0_ghz, Transition::R)
            })
            .collect();
        let mut problem = FitProblem::new(data, spec.capacitances, Theta::of(&spec));
        problem.cfg = cfg;
        problem.options.max_evals = 40;
        problem.options.restarts = 0;
        let fit = fit_parameters(&problem).unwrap();
        assert!(fit.warnings.contains(&FitWarning::Underdetermined));
    }

    #[test]
    fn transition_names_round_trip() {
        for t in [Transition::R, Transition::Q01, Transition::Q02] {
            assert_eq!(t.as_str().parse::<Transition>().unwrap(), t);
        }
        assert!("Q12".parse::<Transition>().is_err());
    }

    #[test]
    fn initial_guess_is_inside_default_box() {
        let spec = q7();
        let data = alloc::vec![
            SpectroscopyPoint::new(0.0, 7.3, Transition::R),
            SpectroscopyPoint::new(0.0, 9.0, Transition::Q01),
            SpectroscopyPoint::new(0.5, 4.6, Transition::Q01),
        ];
        let g = initial_guess(&data, &spec.capacitances, 40.0);
        assert!(g.lr_nh > 0.0 && g.ej_ghz > 0.0);
        Bounds::around(&g).validate().unwrap();
    }
}
