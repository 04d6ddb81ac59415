//! CSV formats.
//!
//! | file          | columns                                         |
//! |---------------|-------------------------------------------------|
//! | spectroscopy  | `flux_phi0, freq_GHz, transition[, weight]`     |
//! | trace         | `t_index, I, Q`                                 |
//! | pi-pulse      | `n, population`                                 |
//! | Stark         | `power, deltaF_MHz`                             |
//! | sweep (out)   | `flux_phi0, fQ01_GHz, fQ02_GHz, fR0_GHz, fR1_GHz, chi_MHz, ambiguous` |

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use kicq_core::calibration::{PiPulseRecord, StarkRecord};
use kicq_core::fit::{SpectroscopyPoint, Transition};
use kicq_core::fock::{FockError, TransitionTable};
use kicq_core::readout::IqSample;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};

fn read_rows<T: DeserializeOwned, R: Read>(reader: R, path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(|source| Error::Csv { path: path.into(), source })).collect()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct SpectroscopyRow {
    #[serde(alias = "flux")]
    flux_phi0: f64,
    #[serde(rename = "freq_GHz", alias = "freq_ghz", alias = "frequency_GHz")]
    freq_ghz: f64,
    transition: String,
    #[serde(default)]
    weight: Option<f64>,
}

pub fn parse_spectroscopy<R: Read>(reader: R, path: &Path) -> Result<Vec<SpectroscopyPoint>> {
    let rows: Vec<SpectroscopyRow> = read_rows(reader, path)?;
    rows.into_iter()
        .enumerate()
        .map(|(k, r)| {
            let transition: Transition = r.transition.parse().map_err(|e: kicq_core::fit::FitError| Error::Record {
                path: path.into(),
                record: k + 1,
                message: e.to_string(),
            })?;
            let mut p = SpectroscopyPoint::new(r.flux_phi0, r.freq_ghz, transition);
            if let Some(w) = r.weight {
                p.weight = w;
            }
            Ok(p)
        })
        .collect()
}

pub fn read_spectroscopy(path: &Path) -> Result<Vec<SpectroscopyPoint>> {
    parse_spectroscopy(open(path)?, path)
}

pub fn write_spectroscopy<W: Write>(out: W, points: &[SpectroscopyPoint]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["flux_phi0", "freq_GHz", "transition", "weight"])?;
    for p in points {
        w.write_record([
            p.flux_phi0.to_string(),
            p.freq_ghz.to_string(),
            p.transition.as_str().to_string(),
            p.weight.to_string(),
        ])?;
    }
    w.flush()
}

#[derive(Deserialize)]
struct TraceRow {
    #[serde(alias = "t")]
    t_index: u64,
    #[serde(rename = "I", alias = "i")]
    i: f64,
    #[serde(rename = "Q", alias = "q")]
    q: f64,
}

pub fn parse_trace<R: Read>(reader: R, path: &Path) -> Result<Vec<IqSample>> {
    let rows: Vec<TraceRow> = read_rows(reader, path)?;
    Ok(rows.into_iter().map(|r| IqSample::new(r.t_index, r.i, r.q)).collect())
}

pub fn read_trace(path: &Path) -> Result<Vec<IqSample>> {
    parse_trace(open(path)?, path)
}

pub fn write_trace<W: Write>(out: W, samples: &[IqSample]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_index", "I", "Q"])?;
    for s in samples {
        w.write_record([s.t.to_string(), s.i.to_string(), s.q.to_string()])?;
    }
    w.flush()
}

#[derive(Deserialize)]
struct PiPulseRow {
    n: u32,
    population: f64,
}

pub fn read_pipulse(path: &Path) -> Result<Vec<PiPulseRecord>> {
    let rows: Vec<PiPulseRow> = read_rows(open(path)?, path)?;
    Ok(rows.into_iter().map(|r| PiPulseRecord { n: r.n, population: r.population }).collect())
}

#[derive(Deserialize)]
struct StarkRow {
    power: f64,
    #[serde(rename = "deltaF_MHz", alias = "delta_f_MHz", alias = "delta_f_mhz")]
    delta_f_mhz: f64,
}

pub fn read_stark(path: &Path) -> Result<Vec<StarkRecord>> {
    let rows: Vec<StarkRow> = read_rows(open(path)?, path)?;
    Ok(rows.into_iter().map(|r| StarkRecord { power: r.power, delta_f_mhz: r.delta_f_mhz }).collect())
}

/// Sweep table; points that failed are written with empty frequency
/// fields and `ambiguous = error`.
pub fn write_sweep<W: Write>(out: W, grid: &[f64], rows: &[std::result::Result<TransitionTable, FockError>]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["flux_phi0", "fQ01_GHz", "fQ02_GHz", "fR0_GHz", "fR1_GHz", "chi_MHz", "ambiguous"])?;
    for (flux, row) in grid.iter().zip(rows) {
        match row {
            Ok(t) => w.write_record([
                flux.to_string(),
                t.fq01_ghz.to_string(),
                t.fq02_ghz.to_string(),
                t.fr0_ghz.to_string(),
                t.fr1_ghz.to_string(),
                t.chi_mhz.to_string(),
                t.ambiguous.to_string(),
            ])?,
            Err(_) => w.write_record([flux.to_string(), "".into(), "".into(), "".into(), "".into(), "".into(), "error".into()])?,
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectroscopy_default_and_explicit_weights() {
        let text = "flux_phi0,freq_GHz,transition,weight\n0.5,5.77,R,\n0.5,1.38,Q01,2.5\n";
        let pts = parse_spectroscopy(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(pts[0].weight, 4.0);
        assert_eq!(pts[1].weight, 2.5);
        assert_eq!(pts[1].transition, Transition::Q01);
    }

    #[test]
    fn spectroscopy_without_weight_column() {
        let text = "flux_phi0,freq_GHz,transition\n# comment\n0.1,4.2,Q02\n";
        let pts = parse_spectroscopy(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].weight, 1.0);
    }

    #[test]
    fn bad_transition_names_record() {
        let text = "flux_phi0,freq_GHz,transition\n0.1,4.2,Q12\n";
        let err = parse_spectroscopy(text.as_bytes(), Path::new("data.csv")).unwrap_err();
        assert!(matches!(err, Error::Record { record: 1, .. }), "{err}");
    }

    #[test]
    fn trace_round_trip() {
        let samples = vec![IqSample::new(0, 0.25, -1.5), IqSample::new(1, 1e-12, 3.0)];
        let mut buf = Vec::new();
        write_trace(&mut buf, &samples).unwrap();
        assert_eq!(parse_trace(buf.as_slice(), Path::new("mem")).unwrap(), samples);
    }

    #[test]
    fn sweep_marks_failures() {
        let t = TransitionTable {
            flux_phi0: 0.5,
            fq01_ghz: 1.0,
            fq02_ghz: 3.0,
            fr0_ghz: 5.0,
            fr1_ghz: 5.001,
            chi_mhz: 1.0,
            ambiguous: false,
        };
        let mut buf = Vec::new();
        write_sweep(&mut buf, &[0.5, 0.6], &[Ok(t), Err(FockError::LabelingFailed(1, 1))]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "flux_phi0,fQ01_GHz,fQ02_GHz,fR0_GHz,fR1_GHz,chi_MHz,ambiguous");
        assert_eq!(lines[1], "0.5,1,3,5,5.001,1,false");
        assert_eq!(lines[2], "0.6,,,,,,error");
    }
}
