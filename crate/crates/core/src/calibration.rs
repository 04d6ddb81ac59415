//! Pi-pulse train model and AC-Stark photon-number calibration.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;
use thiserror::Error;

use crate::optimize::{minimize, NelderMeadOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("pi-pulse fit did not converge within {0} evaluations")]
    NotConverged(usize),
    #[error("need at least two distinct drive powers")]
    DegenerateFit,
    #[error("dispersive shift must be non-zero")]
    ZeroChi,
    #[error("{got} records given, at least {need} required")]
    TooFewRecords { got: usize, need: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T, E = CalibrationError> = core::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiPulseRecord {
    pub n: u32,
    pub population: f64,
}

/// `P(n) = a (1/2 - 1/2 cos(pi n + 2 pi f n)) exp(-gamma n) + o`.
pub fn pipulse_population(n: u32, a: f64, o: f64, f: f64, gamma: f64) -> f64 {
    let n = n as f64;
    a * (0.5 - 0.5 * (PI * n + 2.0 * PI * f * n).cos()) * (-gamma * n).exp() + o
}

/// Single-pulse fidelity `(1/2 - 1/2 cos(pi + 2 pi f)) exp(-gamma)`.
pub fn pi_fidelity(f: f64, gamma: f64) -> f64 {
    (0.5 - 0.5 * (PI + 2.0 * PI * f).cos()) * (-gamma).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiPulseFit {
    pub a: f64,
    pub o: f64,
    pub f: f64,
    pub gamma: f64,
    pub fpi: f64,
    pub fpi_no_decay: f64,
    pub rss: f64,
    pub evals: usize,
}

/// `(a, o)` minimizing the squared error for fixed `f` and `gamma`; the
/// model is linear in both.
fn linear_amplitudes(records: &[PiPulseRecord], f: f64, gamma: f64) -> (f64, f64, f64) {
    let n = records.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for r in records {
        let x = pipulse_population(r.n, 1.0, 0.0, f, gamma);
        sx += x;
        sy += r.population;
        sxx += x * x;
        sxy += x * r.population;
    }
    let den = n * sxx - sx * sx;
    let (a, o) = if den.abs() > 1e-300 { ((n * sxy - sx * sy) / den, (sy * sxx - sx * sxy) / den) } else { (0.0, sy / n) };
    let rss = records.iter().map(|r| (pipulse_population(r.n, a, o, f, gamma) - r.population).powi(2)).sum();
    (a, o, rss)
}

fn rss(records: &[PiPulseRecord], p: &[f64]) -> f64 {
    records.iter().map(|r| (pipulse_population(r.n, p[0], p[1], p[2], p[3]) - r.population).powi(2)).sum()
}

/// Least-squares fit of `(a, o, f, gamma)` with `f` in `[0, 1/2]` and
/// `gamma >= 0`.
///
/// A grid over `(f, gamma)` with `a`, `o` solved in closed form picks the
/// start; the simplex then refines all four.
pub fn fit_pipulse(records: &[PiPulseRecord]) -> Result<PiPulseFit> {
    if records.len() < 8 {
        return Err(CalibrationError::TooFewRecords { got: records.len(), need: 8 });
    }
    if records.iter().any(|r| !r.population.is_finite()) {
        return Err(CalibrationError::InvalidArgument("non-finite population"));
    }
    let n_max = records.iter().map(|r| r.n).max().unwrap_or(1).max(1) as f64;
    let gamma_hi = 20.0 / n_max;

    let mut best = (f64::INFINITY, [1.0, 0.0, 0.0, 0.0]);
    for i in 0..=200 {
        let f = 0.5 * i as f64 / 200.0;
        for j in 0..=20 {
            let gamma = gamma_hi * (j as f64 / 20.0).powi(2) / 4.0;
            let (a, o, r) = linear_amplitudes(records, f, gamma);
            if r < best.0 {
                best = (r, [a, o, f, gamma]);
            }
        }
    }

    let x0 = best.1;
    let lo = [x0[0].min(0.0) - 2.0, x0[1].min(0.0) - 2.0, 0.0, 0.0];
    let hi = [x0[0].max(0.0) + 2.0, x0[1].max(0.0) + 2.0, 0.5, gamma_hi];
    let opts = NelderMeadOptions { max_evals: 20_000, x_tol: 1e-10, f_tol: 1e-14, initial_step: 0.01, ..Default::default() };
    let m = minimize(|p| rss(records, p), &x0, &lo, &hi, &opts);
    if !m.converged {
        return Err(CalibrationError::NotConverged(m.evals));
    }
    let [a, o, f, gamma] = [m.x[0], m.x[1], m.x[2], m.x[3]];
    Ok(PiPulseFit {
        a,
        o,
        f,
        gamma,
        fpi: pi_fidelity(f, gamma),
        fpi_no_decay: pi_fidelity(f, 0.0),
        rss: m.fx,
        evals: m.evals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkRecord {
    pub power: f64,
    pub delta_f_mhz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterceptMode {
    /// Line through the origin, as `n ~ P` implies.
    #[default]
    Zero,
    /// Ordinary least squares with a free intercept.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkFit {
    /// MHz per power unit.
    pub slope: f64,
    /// MHz; identically zero in [`InterceptMode::Zero`].
    pub intercept: f64,
    pub mode: InterceptMode,
}

pub fn fit_stark(records: &[StarkRecord], mode: InterceptMode) -> Result<StarkFit> {
    if records.iter().any(|r| !r.power.is_finite() || !r.delta_f_mhz.is_finite()) {
        return Err(CalibrationError::InvalidArgument("non-finite Stark record"));
    }
    let mut powers: Vec<f64> = records.iter().map(|r| r.power).collect();
    powers.sort_by(|a, b| a.total_cmp(b));
    powers.dedup();
    if powers.len() < 2 {
        return Err(CalibrationError::DegenerateFit);
    }
    let n = records.len() as f64;
    match mode {
        InterceptMode::Zero => {
            let sxy: f64 = records.iter().map(|r| r.power * r.delta_f_mhz).sum();
            let sxx: f64 = records.iter().map(|r| r.power * r.power).sum();
            Ok(StarkFit { slope: sxy / sxx, intercept: 0.0, mode })
        }
        InterceptMode::Free => {
            let mx = records.iter().map(|r| r.power).sum::<f64>() / n;
            let my = records.iter().map(|r| r.delta_f_mhz).sum::<f64>() / n;
            let sxy: f64 = records.iter().map(|r| (r.power - mx) * (r.delta_f_mhz - my)).sum();
            let sxx: f64 = records.iter().map(|r| (r.power - mx).powi(2)).sum();
            let slope = sxy / sxx;
            Ok(StarkFit { slope, intercept: my - slope * mx, mode })
        }
    }
}

/// `n = slope * power / chi`.
pub fn photons_from_power(slope_mhz: f64, chi_mhz: f64, power: f64) -> Result<f64> {
    if chi_mhz == 0.0 || !chi_mhz.is_finite() {
        return Err(CalibrationError::ZeroChi);
    }
    Ok(slope_mhz * power / chi_mhz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_closed_forms() {
        assert_eq!(pipulse_population(0, 0.7, 0.12, 0.03, 0.2), 0.12);
        assert!((pipulse_population(1, 1.0, 0.0, 0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!(pipulse_population(2, 1.0, 0.0, 0.0, 0.0).abs() < 1e-15);
        let expect = (0.5 - 0.5 * (1.1 * PI).cos()) * (-0.01f64).exp();
        assert!((pipulse_population(1, 1.0, 0.0, 0.05, 0.01) - expect).abs() < 1e-15);
        assert!((expect - 0.9658).abs() < 5e-5);
    }

    #[test]
    fn perfect_pulse_has_unit_fidelity() {
        assert_eq!(pi_fidelity(0.0, 0.0), 1.0);
    }

    #[test]
    fn fidelity_even_in_f_and_decreasing_in_gamma() {
        for f in [0.01, 0.05, 0.1] {
            assert!((pi_fidelity(f, 0.02) - pi_fidelity(-f, 0.02)).abs() < 1e-15);
            assert!(pi_fidelity(f, 0.01) > pi_fidelity(f, 0.02));
        }
    }

    #[test]
    fn pipulse_round_trip() {
        let (a, o, f, g) = (0.92, 0.04, 0.05, 0.01);
        let records: Vec<PiPulseRecord> =
            (0..60).map(|n| PiPulseRecord { n, population: pipulse_population(n, a, o, f, g) }).collect();
        let fit = fit_pipulse(&records).unwrap();
        for (got, want) in [(fit.a, a), (fit.o, o), (fit.f, f), (fit.gamma, g)] {
            assert!((got / want - 1.0).abs() < 1e-2, "{got} vs {want}");
        }
        assert!(fit.fpi_no_decay >= fit.fpi);
    }

    #[test]
    fn exact_data_converges() {
        let records: Vec<PiPulseRecord> =
            (0..40).map(|n| PiPulseRecord { n, population: pipulse_population(n, 0.9, 0.05, 0.04, 0.02) }).collect();
        let fit = fit_pipulse(&records).unwrap();
        assert!((fit.f - 0.04).abs() < 1e-8 && (fit.gamma - 0.02).abs() < 1e-8, "{fit:?}");
    }

    #[test]
    fn pipulse_needs_records() {
        let records: Vec<PiPulseRecord> = (0..5).map(|n| PiPulseRecord { n, population: 0.5 }).collect();
        assert!(matches!(fit_pipulse(&records), Err(CalibrationError::TooFewRecords { .. })));
    }

    #[test]
    fn photon_number_arithmetic() {
        assert_eq!(photons_from_power(0.5, 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(photons_from_power(0.02, 0.5, 0.0).unwrap(), 0.0);
        assert_eq!(photons_from_power(0.02, 0.0, 1.0), Err(CalibrationError::ZeroChi));
    }

    #[test]
    fn stark_line_to_photons() {
        let records: Vec<StarkRecord> =
            (0..6).map(|i| StarkRecord { power: 20.0 * i as f64, delta_f_mhz: 0.02 * 20.0 * i as f64 }).collect();
        let fit = fit_stark(&records, InterceptMode::default()).unwrap();
        let n = photons_from_power(fit.slope, 0.5, 100.0).unwrap();
        assert!((n - 4.0).abs() < 1e-12);
        let free = fit_stark(&records, InterceptMode::Free).unwrap();
        assert!((free.slope - 0.02).abs() < 1e-15 && free.intercept.abs() < 1e-12);
    }

    #[test]
    fn stark_slope_ignores_power_offset() {
        let records: Vec<StarkRecord> =
            (0..6).map(|i| StarkRecord { power: i as f64, delta_f_mhz: 0.3 * i as f64 + 0.01 * (i * i) as f64 }).collect();
        let shifted: Vec<StarkRecord> = records.iter().map(|r| StarkRecord { power: r.power + 7.5, ..*r }).collect();
        let a = fit_stark(&records, InterceptMode::Free).unwrap();
        let b = fit_stark(&shifted, InterceptMode::Free).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-10);
    }

    #[test]
    fn stark_needs_two_powers() {
        let records = [StarkRecord { power: 1.0, delta_f_mhz: 0.1 }, StarkRecord { power: 1.0, delta_f_mhz: 0.2 }];
        assert_eq!(fit_stark(&records, InterceptMode::Zero), Err(CalibrationError::DegenerateFit));
    }
}
