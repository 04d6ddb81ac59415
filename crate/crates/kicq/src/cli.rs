//! `kicq` command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use kicq_core::calibration::{fit_pipulse, fit_stark, photons_from_power, InterceptMode};
use kicq_core::circuit::{decompose_circuit_tol, reduce_to_idealized};
use kicq_core::fit::{fit_parameters_with, initial_guess, FitProblem, Theta};
use kicq_core::fock::{
    device_transitions, flux_matrix_element, flux_sweep_with, idealized_transitions, q_ind_from_t1, inductive_t1,
    FockConfig, Sweeper,
};
use kicq_core::optimize::NelderMeadOptions;
use kicq_core::readout::{analyze, assign_states, stats_for, GmmOptions, IqSample};
use kicq_core::units::inductive_energy_ghz;

use crate::device::{load_spec, DeviceFile};
use crate::error::{Error, Result};
use crate::parallel::Pool;
use crate::{io, report};

const FORMATS: &str = "\
Device JSON:
  { \"name\": str, \"L_r_nH\": num, \"L_q_nH\": num, \"Delta_k_nH\": num, \"E_J_GHz\": num,
    \"C_J_fF\": num, \"capacitances_fF\": { \"C11\": num, ..., \"C34\": num, \"C10\": num, ... },
    \"diagonal_is_total\": bool (optional, default true) }
CSV inputs:
  spectroscopy  flux_phi0,freq_GHz,transition[,weight]   (transition: R, Q01, Q02)
  trace         t_index,I,Q
  pipulse       n,population
  stark         power,deltaF_MHz";

#[derive(Debug, Parser)]
#[command(name = "kicq", version, about = "Spectrum, fitting and readout analysis for kinetic-inductance coupled qubits")]
#[command(after_help = FORMATS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Resonator Fock states.
    #[arg(long = "nR", global = true, default_value_t = 15, value_name = "INT")]
    pub n_r: usize,
    /// Qubit Fock states.
    #[arg(long = "nQ", global = true, default_value_t = 30, value_name = "INT")]
    pub n_q: usize,
    /// Highest resonator states excluded from labeling.
    #[arg(long = "guard-r", global = true, value_name = "INT")]
    pub guard_r: Option<usize>,
    /// Highest qubit states excluded from labeling.
    #[arg(long = "guard-q", global = true, value_name = "INT")]
    pub guard_q: Option<usize>,
    #[arg(long, global = true, default_value_t = 0, value_name = "INT")]
    pub seed: u64,
    /// Worker threads for sweeps and fits (default: available parallelism).
    #[arg(long, global = true, value_name = "INT")]
    pub threads: Option<usize>,
    /// Capacitive misalignment: C13 += delta, C23 -= delta.
    #[arg(long = "delta-c-aF", global = true, default_value_t = 0.0, allow_negative_numbers = true, value_name = "FLOAT")]
    pub delta_c_af: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normal modes of the linearized circuit.
    Modes {
        #[arg(long, value_parser = existing_file)]
        device: PathBuf,
    },
    /// Transition frequencies over a flux grid, as CSV.
    Spectrum {
        #[arg(long, value_parser = existing_file)]
        device: PathBuf,
        #[arg(long = "flux-grid", default_value = "0:1:101", value_parser = parse_grid, value_name = "LO:HI:N")]
        flux_grid: FluxGrid,
    },
    /// Dispersive shift and transitions at one flux point.
    Chi {
        #[arg(long, value_parser = existing_file)]
        device: PathBuf,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        flux: f64,
    },
    /// Effective two-node parameters and an extended-vs-idealized comparison.
    Idealized {
        #[arg(long, value_parser = existing_file)]
        device: PathBuf,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        flux: f64,
        /// Points of the Delta_k sweep over [-1, 1] nH.
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Fit loop parameters to spectroscopy data.
    Fit {
        /// Device file; loop parameters present in it seed the fit.
        #[arg(long, value_parser = existing_file)]
        device: PathBuf,
        #[arg(long, value_parser = existing_file)]
        data: PathBuf,
        #[arg(long = "max-evals", default_value_t = 2000)]
        max_evals: usize,
        /// Optimizer starts; extra starts jitter the initial point.
        #[arg(long, default_value_t = 1)]
        starts: usize,
    },
    /// State assignment and jump statistics of an IQ trace.
    Jumps {
        #[arg(long, value_parser = existing_file)]
        data: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Trace recorded with the qubit prepared in |0>.
        #[arg(long = "ground-ref", value_parser = existing_file, requires = "excited_ref")]
        ground_ref: Option<PathBuf>,
        /// Trace recorded with the qubit prepared in |1>.
        #[arg(long = "excited-ref", value_parser = existing_file, requires = "ground_ref")]
        excited_ref: Option<PathBuf>,
        /// Also write a 2-D IQ histogram (CSV) here.
        #[arg(long, value_name = "PATH")]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        bins: usize,
    },
    /// Fit a pi-pulse train.
    Pipulse {
        #[arg(long, value_parser = existing_file)]
        data: PathBuf,
    },
    /// Photon number from AC-Stark shifts.
    Stark {
        #[arg(long, value_parser = existing_file)]
        data: PathBuf,
        /// Dispersive shift; computed from --device when omitted.
        #[arg(long = "chi-MHz", allow_negative_numbers = true, required_unless_present = "device")]
        chi_mhz: Option<f64>,
        #[arg(long, value_parser = existing_file)]
        device: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        flux: f64,
        #[arg(long, value_enum, default_value_t = Intercept::Zero)]
        intercept: Intercept,
    },
    /// Inductive-loss T1 and quality factor.
    T1 {
        #[arg(long, value_parser = existing_file)]
        device: PathBuf,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        flux: f64,
        /// Measured T1; reports the implied Q_ind.
        #[arg(long = "t1-us", conflicts_with = "q_ind", required_unless_present = "q_ind")]
        t1_us: Option<f64>,
        /// Inductive quality factor; reports the implied T1.
        #[arg(long = "q-ind")]
        q_ind: Option<f64>,
        #[arg(long = "temperature-mK", default_value_t = 10.0)]
        temperature_mk: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Intercept {
    Zero,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FluxGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }
}

fn parse_grid(s: &str) -> std::result::Result<FluxGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err("expected LO:HI:N".into());
    };
    let lo: f64 = lo.trim().parse().map_err(|e| format!("LO: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("HI: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("N: {e}"))?;
    if !lo.is_finite() || !hi.is_finite() || n == 0 {
        return Err("bounds must be finite and N positive".into());
    }
    Ok(FluxGrid { lo, hi, n })
}

fn existing_file(s: &str) -> std::result::Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

enum Output {
    Json(String),
    Text(Vec<u8>),
}

fn json<T: serde::Serialize>(value: &T) -> Output {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    Output::Json(s)
}

impl Common {
    fn fock(&self) -> Result<FockConfig> {
        let mut cfg = FockConfig::new(self.n_r, self.n_q);
        if let Some(g) = self.guard_r {
            cfg.guard_r = g;
        }
        if let Some(g) = self.guard_q {
            cfg.guard_q = g;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn pool(&self) -> Result<Pool> {
        Pool::new(self.threads).map_err(|e| Error::Device(format!("thread pool: {e}")))
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let c = &cli.common;
    match &cli.command {
        Command::Modes { device } => {
            let spec = load_spec(device, c.delta_c_af)?;
            let cfg = c.fock()?;
            Ok(json(&report::Modes::new(&spec.name, &decompose_circuit_tol(&spec, cfg.zero_tol)?)))
        }
        Command::Spectrum { device, flux_grid } => {
            let spec = load_spec(device, c.delta_c_af)?;
            let grid = flux_grid.points();
            let rows = flux_sweep_with(&c.pool()?, &spec, &grid, &c.fock()?)?;
            for (flux, r) in grid.iter().zip(&rows) {
                if let Err(e) = r {
                    log::warn!("flux {flux}: {e}");
                }
            }
            let mut buf = Vec::new();
            io::write_sweep(&mut buf, &grid, &rows).map_err(|e| Error::io("<sweep>", e))?;
            Ok(Output::Text(buf))
        }
        Command::Chi { device, flux } => {
            let spec = load_spec(device, c.delta_c_af)?;
            let t = device_transitions(&spec, *flux, &c.fock()?)?;
            Ok(json(&report::Chi {
                name: spec.name.clone(),
                nR: c.n_r,
                nQ: c.n_q,
                delta_C_aF: spec.capacitive_asymmetry_af(),
                transitions: (&t).into(),
            }))
        }
        Command::Idealized { device, flux, points } => {
            let spec = load_spec(device, c.delta_c_af)?;
            let cfg = c.fock()?;
            let params = reduce_to_idealized(&spec)?;
            let grid: Vec<f64> = match *points {
                0 => Vec::new(),
                1 => vec![0.0],
                n => (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(),
            };
            let mut sym = spec.clone();
            sym.capacitances = sym.capacitances.symmetrized();
            let rows = c.pool()?.map(&grid, |dk| {
                let mut s = sym.clone();
                s.dk_nh = dk;
                let both = device_transitions(&s, *flux, &cfg).map_err(Error::from).and_then(|ext| {
                    let p = reduce_to_idealized(&s)?;
                    Ok((ext, idealized_transitions(&p, s.ej_ghz, *flux, &cfg)?))
                });
                match both {
                    Ok((e, i)) => report::ComparisonRow {
                        Delta_k_nH: dk,
                        extended: Some((&e).into()),
                        idealized: Some((&i).into()),
                        error: None,
                    },
                    Err(e) => report::ComparisonRow { Delta_k_nH: dk, extended: None, idealized: None, error: Some(e.to_string()) },
                }
            });
            Ok(json(&report::IdealizedReport { name: spec.name.clone(), params: (&params).into(), flux_Phi0: *flux, comparison: rows }))
        }
        Command::Fit { device, data, max_evals, starts } => {
            let file = DeviceFile::load(device)?;
            let (mut table, _) = file.table()?;
            if c.delta_c_af != 0.0 {
                table.perturb_asymmetry(c.delta_c_af);
            }
            let points = io::read_spectroscopy(data)?;
            let given = file.partial_theta();
            let lq = given[1].ok_or_else(|| Error::Device("fit needs L_q_nH in the device file".into()))?;
            let guess = initial_guess(&points, &table, lq).to_array();
            let theta0: Vec<f64> = given.iter().zip(guess).map(|(g, d)| g.unwrap_or(d)).collect();
            let theta0 = Theta::from_slice(&theta0);
            let mut problem = FitProblem::new(points, table, theta0);
            problem.cfg = c.fock()?;
            problem.options = NelderMeadOptions { max_evals: *max_evals, starts: *starts, seed: c.seed, ..Default::default() };
            let result = fit_parameters_with(&c.pool()?, &problem)?;
            Ok(json(&report::Fit::new(&file.name, problem.data.len(), &theta0, &result)))
        }
        Command::Jumps { data, k, ground_ref, excited_ref, histogram, bins } => {
            let samples = io::read_trace(data)?;
            let opts = GmmOptions { k: *k, seed: c.seed, ..Default::default() };
            let (mut model, _, mut stats) = analyze(&samples, &opts)?;
            if let (Some(g), Some(e)) = (ground_ref, excited_ref) {
                model.calibrate_state_map(&io::read_trace(g)?, &io::read_trace(e)?)?;
                stats = stats_for(&model, &assign_states(&model, &samples))?;
            }
            if let Some(path) = histogram {
                let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
                write_histogram(file, &samples, (*bins).max(1)).map_err(|e| Error::io(path, e))?;
            }
            Ok(json(&report::Jumps::new(&model, &stats)))
        }
        Command::Pipulse { data } => {
            let records = io::read_pipulse(data)?;
            Ok(json(&report::PiPulse::from(&fit_pipulse(&records)?)))
        }
        Command::Stark { data, chi_mhz, device, flux, intercept } => {
            let records = io::read_stark(data)?;
            let chi = match (chi_mhz, device) {
                (Some(chi), _) => *chi,
                (None, Some(d)) => device_transitions(&load_spec(d, c.delta_c_af)?, *flux, &c.fock()?)?.chi_mhz,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let mode = match intercept {
                Intercept::Zero => InterceptMode::Zero,
                Intercept::Free => InterceptMode::Free,
            };
            let fit = fit_stark(&records, mode)?;
            let points = records
                .iter()
                .map(|r| {
                    Ok(report::StarkPoint { power: r.power, deltaF_MHz: r.delta_f_mhz, n_bar: photons_from_power(fit.slope, chi, r.power)? })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(json(&report::Stark::new(&fit, chi, points)))
        }
        Command::T1 { device, flux, t1_us, q_ind, temperature_mk } => {
            let spec = load_spec(device, c.delta_c_af)?;
            let cfg = c.fock()?;
            let t = device_transitions(&spec, *flux, &cfg)?;
            let m = flux_matrix_element(&spec, *flux, &cfg)?;
            let el = inductive_energy_ghz(spec.lq_nh);
            let temp = temperature_mk * 1e-3;
            let (t1, q) = match (t1_us, q_ind) {
                (Some(t1), _) => (*t1, q_ind_from_t1(el, t1 * 1e-6, m, t.fq01_ghz, temp)?),
                (None, Some(q)) => (inductive_t1(el, *q, m, t.fq01_ghz, temp)? * 1e6, *q),
                (None, None) => unreachable!("clap requires one of them"),
            };
            Ok(json(&report::T1 {
                name: spec.name.clone(),
                flux_Phi0: *flux,
                fQ01_GHz: t.fq01_ghz,
                matrix_element: m,
                E_L_GHz: el,
                temperature_K: temp,
                T1_us: t1,
                Q_ind: q,
            }))
        }
    }
}

/// Square-binned IQ counts over the data range: `I, Q, count` per bin centre.
fn write_histogram<W: Write>(out: W, samples: &[IqSample], bins: usize) -> std::io::Result<()> {
    let range = |f: fn(&IqSample) -> f64| {
        samples.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (ilo, ihi) = range(|s| s.i);
    let (qlo, qhi) = range(|s| s.q);
    let width = |lo: f64, hi: f64| if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let (wi, wq) = (width(ilo, ihi), width(qlo, qhi));
    let mut counts = vec![0usize; bins * bins];
    for s in samples {
        let a = (((s.i - ilo) / wi) as usize).min(bins - 1);
        let b = (((s.q - qlo) / wq) as usize).min(bins - 1);
        counts[a * bins + b] += 1;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["I", "Q", "count"])?;
    for a in 0..bins {
        for b in 0..bins {
            let (i, q) = (ilo + (a as f64 + 0.5) * wi, qlo + (b as f64 + 0.5) * wq);
            w.write_record([i.to_string(), q.to_string(), counts[a * bins + b].to_string()])?;
        }
    }
    w.flush()
}

fn emit(output: Output, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let bytes = match &output {
        Output::Json(s) => s.as_bytes(),
        Output::Text(b) => b.as_slice(),
    };
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Error::io(path, e)),
        None => stdout.write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

/// Runs one invocation; returns the process exit code (0 success,
/// 1 domain error, 2 usage error).
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    0
                }
                _ => {
                    let _ = writeln!(stderr, "{}\n{FORMATS}", rendered.trim_end());
                    2
                }
            };
        }
    };
    match execute(&cli).and_then(|o| emit(o, cli.common.out.as_deref(), stdout)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:101").unwrap().points().len(), 101);
        assert_eq!(parse_grid("0.2:0.4:3").unwrap().points(), vec![0.2, 0.30000000000000004, 0.4]);
        assert_eq!(parse_grid("-0.5:0.5:1").unwrap().points(), vec![-0.5]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a:1:3").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
