//! JSON documents written by the command-line tool. Key names carry their
//! units, matching the device file convention.
#![allow(non_snake_case)]

use std::collections::BTreeMap;

use kicq_core::calibration::{PiPulseFit, StarkFit};
use kicq_core::circuit::{IdealizedParams, ModeDecomposition};
use kicq_core::fit::{FitResult, FitWarning, Theta};
use kicq_core::fock::TransitionTable;
use kicq_core::readout::{GmmModel, ReadoutStats};
use kicq_core::units::omega_to_ghz;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Modes {
    pub name: String,
    /// All normal-mode frequencies, ascending, zero mode included.
    pub frequencies_GHz: Vec<f64>,
    pub f_R_GHz: f64,
    pub f_Q_GHz: f64,
    pub lambda_R: f64,
    pub lambda_Q: f64,
    pub readout_index: usize,
    pub qubit_index: usize,
    pub zero_index: Option<usize>,
    pub spectator_GHz: Vec<f64>,
    pub delta_C_aF: f64,
}

impl Modes {
    pub fn new(name: &str, m: &ModeDecomposition) -> Self {
        Modes {
            name: name.into(),
            frequencies_GHz: m.omegas.iter().map(|&w| omega_to_ghz(w)).collect(),
            f_R_GHz: m.f_r_ghz(),
            f_Q_GHz: m.f_q_ghz(),
            lambda_R: m.lambda_r,
            lambda_Q: m.lambda_q,
            readout_index: m.readout_index,
            qubit_index: m.qubit_index,
            zero_index: m.zero_index,
            spectator_GHz: m.spectator_modes_ghz(),
            delta_C_aF: m.delta_c_af,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Transitions {
    pub flux_Phi0: f64,
    pub fQ01_GHz: f64,
    pub fQ02_GHz: f64,
    pub fR0_GHz: f64,
    pub fR1_GHz: f64,
    pub chi_MHz: f64,
    pub ambiguous: bool,
}

impl From<&TransitionTable> for Transitions {
    fn from(t: &TransitionTable) -> Self {
        Transitions {
            flux_Phi0: t.flux_phi0,
            fQ01_GHz: t.fq01_ghz,
            fQ02_GHz: t.fq02_ghz,
            fR0_GHz: t.fr0_ghz,
            fR1_GHz: t.fr1_ghz,
            chi_MHz: t.chi_mhz,
            ambiguous: t.ambiguous,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Chi {
    pub name: String,
    pub nR: usize,
    pub nQ: usize,
    pub delta_C_aF: f64,
    #[serde(flatten)]
    pub transitions: Transitions,
}

#[derive(Debug, Serialize)]
pub struct Idealized {
    pub L_Q_nH: f64,
    pub L_R_nH: f64,
    pub L_S_nH: f64,
    pub C_R_fF: f64,
    pub C_Q_fF: f64,
    pub Sigma_L_nH2: f64,
}

impl From<&IdealizedParams> for Idealized {
    fn from(p: &IdealizedParams) -> Self {
        Idealized {
            L_Q_nH: p.lq_eff_nh,
            L_R_nH: p.lr_eff_nh,
            L_S_nH: p.ls_nh,
            C_R_fF: p.cr_eff_ff,
            C_Q_fF: p.cq_eff_ff,
            Sigma_L_nH2: p.sigma_l_nh2,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ModelValues {
    pub fR0_GHz: f64,
    pub fQ01_GHz: f64,
    pub chi_MHz: f64,
}

impl From<&TransitionTable> for ModelValues {
    fn from(t: &TransitionTable) -> Self {
        ModelValues { fR0_GHz: t.fr0_ghz, fQ01_GHz: t.fq01_ghz, chi_MHz: t.chi_mhz }
    }
}

#[derive(Debug, Serialize)]
pub struct ComparisonRow {
    pub Delta_k_nH: f64,
    pub extended: Option<ModelValues>,
    pub idealized: Option<ModelValues>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct IdealizedReport {
    pub name: String,
    /// Reduction of the device as given.
    pub params: Idealized,
    pub flux_Phi0: f64,
    /// Sweep over the kinetic asymmetry with symmetrized capacitances.
    pub comparison: Vec<ComparisonRow>,
}

#[derive(Debug, Serialize)]
pub struct ThetaJson {
    pub L_r_nH: f64,
    pub L_q_nH: f64,
    pub Delta_k_nH: f64,
    pub E_J_GHz: f64,
    pub C_J_fF: f64,
}

impl From<&Theta> for ThetaJson {
    fn from(t: &Theta) -> Self {
        ThetaJson { L_r_nH: t.lr_nh, L_q_nH: t.lq_nh, Delta_k_nH: t.dk_nh, E_J_GHz: t.ej_ghz, C_J_fF: t.cj_ff }
    }
}

#[derive(Debug, Serialize)]
pub struct Fit {
    pub name: String,
    pub n_points: usize,
    pub initial: ThetaJson,
    pub theta: ThetaJson,
    pub rss: f64,
    pub converged: bool,
    pub evals: usize,
    pub warnings: Vec<String>,
    pub residuals: Vec<f64>,
    pub history: Vec<f64>,
}

impl Fit {
    pub fn new(name: &str, n_points: usize, theta0: &Theta, r: &FitResult) -> Self {
        Fit {
            name: name.into(),
            n_points,
            initial: theta0.into(),
            theta: (&r.theta).into(),
            rss: r.rss,
            converged: r.converged,
            evals: r.evals,
            warnings: r
                .warnings
                .iter()
                .map(|w| match w {
                    FitWarning::Underdetermined => "underdetermined: fewer than five points or a single transition type".into(),
                    FitWarning::NotConverged => "optimizer stopped before meeting its tolerances".into(),
                    FitWarning::PenalizedPoints(n) => format!("{n} points charged the label penalty"),
                })
                .collect(),
            residuals: r.residuals.clone(),
            history: r.history.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Model {
    pub means: Vec<[f64; 2]>,
    pub covariances: Vec<[[f64; 2]; 2]>,
    pub weights: Vec<f64>,
    pub states: Vec<String>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&GmmModel> for Model {
    fn from(m: &GmmModel) -> Self {
        Model {
            means: m.means.clone(),
            covariances: m.covariances.clone(),
            weights: m.weights.clone(),
            states: m.state_map.iter().map(|s| s.label().to_string()).collect(),
            log_likelihood: m.log_lik,
            iterations: m.history.len(),
            converged: m.converged,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Jumps {
    pub n_samples: usize,
    pub populations: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, usize>,
    pub P00: Option<f64>,
    pub P11: Option<f64>,
    pub snr: f64,
    pub model: Model,
}

impl Jumps {
    pub fn new(model: &GmmModel, stats: &ReadoutStats) -> Self {
        let labels = ["0", "1", "2+"];
        Jumps {
            n_samples: stats.counts.iter().sum(),
            populations: labels.iter().map(|l| l.to_string()).zip(stats.populations).collect(),
            counts: labels.iter().map(|l| l.to_string()).zip(stats.counts).collect(),
            P00: stats.p00,
            P11: stats.p11,
            snr: stats.snr,
            model: model.into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PiPulse {
    pub a: f64,
    pub o: f64,
    pub f: f64,
    pub gamma: f64,
    pub Fpi: f64,
    pub Fpi_no_decay: f64,
    pub rss: f64,
    pub evals: usize,
}

impl From<&PiPulseFit> for PiPulse {
    fn from(p: &PiPulseFit) -> Self {
        PiPulse {
            a: p.a,
            o: p.o,
            f: p.f,
            gamma: p.gamma,
            Fpi: p.fpi,
            Fpi_no_decay: p.fpi_no_decay,
            rss: p.rss,
            evals: p.evals,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StarkPoint {
    pub power: f64,
    pub deltaF_MHz: f64,
    pub n_bar: f64,
}

#[derive(Debug, Serialize)]
pub struct Stark {
    pub intercept_mode: &'static str,
    pub slope_MHz_per_power: f64,
    pub intercept_MHz: f64,
    pub chi_MHz: f64,
    pub photons_per_power: f64,
    pub records: Vec<StarkPoint>,
}

impl Stark {
    pub fn new(fit: &StarkFit, chi_mhz: f64, records: Vec<StarkPoint>) -> Self {
        Stark {
            intercept_mode: match fit.mode {
                kicq_core::calibration::InterceptMode::Zero => "zero",
                kicq_core::calibration::InterceptMode::Free => "free",
            },
            slope_MHz_per_power: fit.slope,
            intercept_MHz: fit.intercept,
            chi_MHz: chi_mhz,
            photons_per_power: fit.slope / chi_mhz,
            records,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct T1 {
    pub name: String,
    pub flux_Phi0: f64,
    pub fQ01_GHz: f64,
    pub matrix_element: f64,
    pub E_L_GHz: f64,
    pub temperature_K: f64,
    pub T1_us: f64,
    pub Q_ind: f64,
}
