//! Device description files.
//!
//! ```json
//! { "name": "q7", "L_r_nH": 11.73, "L_q_nH": 39.06, "Delta_k_nH": 0.28,
//!   "E_J_GHz": 4.83, "C_J_fF": 1.85,
//!   "capacitances_fF": { "C11": 16.07, "C12": 3.27, "C13": 5.61, ... } }
//! ```
//!
//! Capacitance keys are `Cij` with node indices `0..=4`; `Cii` is a self
//! capacitance and `Ci0` a ground term. With `diagonal_is_total` (the
//! default) `Cii` includes every counterpart, so the ground terms follow
//! from the table.

use std::collections::BTreeMap;
use std::path::Path;

use kicq_core::circuit::{CapacitanceInput, CapacitanceTable, CircuitSpec, TableWarning};
use kicq_core::fit::Theta;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub name: String,
    #[serde(rename = "L_r_nH", default, skip_serializing_if = "Option::is_none")]
    pub lr_nh: Option<f64>,
    #[serde(rename = "L_q_nH", default, skip_serializing_if = "Option::is_none")]
    pub lq_nh: Option<f64>,
    #[serde(rename = "Delta_k_nH", default, skip_serializing_if = "Option::is_none")]
    pub dk_nh: Option<f64>,
    #[serde(rename = "E_J_GHz", default, skip_serializing_if = "Option::is_none")]
    pub ej_ghz: Option<f64>,
    #[serde(rename = "C_J_fF", default, skip_serializing_if = "Option::is_none")]
    pub cj_ff: Option<f64>,
    #[serde(rename = "capacitances_fF")]
    pub capacitances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal_is_total: Option<bool>,
}

/// JSON keys of the loop parameters, in [`Theta`] order.
pub const THETA_KEYS: [&str; 5] = ["L_r_nH", "L_q_nH", "Delta_k_nH", "E_J_GHz", "C_J_fF"];

fn parse_key(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix('C')?;
    let b = rest.as_bytes();
    if b.len() != 2 || !b.iter().all(|c| (b'0'..=b'4').contains(c)) {
        return None;
    }
    let (i, j) = ((b[0] - b'0') as usize, (b[1] - b'0') as usize);
    (i != 0 || j != 0).then_some((i, j))
}

impl DeviceFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
    }

    pub fn from_spec(spec: &CircuitSpec) -> Self {
        let t = &spec.capacitances;
        let mut caps = BTreeMap::new();
        for i in 1..=4 {
            caps.insert(format!("C{i}{i}"), t.total(i));
            caps.insert(format!("C{i}0"), t.get(i, 0));
            for j in (i + 1)..=4 {
                caps.insert(format!("C{i}{j}"), t.get(i, j));
            }
        }
        DeviceFile {
            name: spec.name.clone(),
            lr_nh: Some(spec.lr_nh),
            lq_nh: Some(spec.lq_nh),
            dk_nh: Some(spec.dk_nh),
            ej_ghz: Some(spec.ej_ghz),
            cj_ff: Some(spec.cj_ff),
            capacitances: caps,
            diagonal_is_total: None,
        }
    }

    pub fn table(&self) -> Result<(CapacitanceTable, Vec<TableWarning>)> {
        let mut input = CapacitanceInput::default();
        let mut seen = BTreeMap::new();
        for (key, &value) in &self.capacitances {
            let (i, j) = parse_key(key).ok_or_else(|| Error::Device(format!("unknown capacitance key {key:?}")))?;
            if !value.is_finite() {
                return Err(Error::Device(format!("{key} is not finite")));
            }
            let pair = (i.min(j), i.max(j));
            if let Some(prev) = seen.insert(pair, value) {
                if prev != value {
                    return Err(Error::Device(format!("{key} disagrees with its transpose")));
                }
            }
            if i == j {
                input.set_diagonal(i, value);
            } else {
                input.set_pair(i, j, value);
            }
        }
        Ok(input.resolve(self.diagonal_is_total.unwrap_or(true))?)
    }

    /// Loop parameters present in the file; absent ones are `None`.
    pub fn partial_theta(&self) -> [Option<f64>; 5] {
        [self.lr_nh, self.lq_nh, self.dk_nh, self.ej_ghz, self.cj_ff]
    }

    pub fn spec(&self) -> Result<(CircuitSpec, Vec<TableWarning>)> {
        let mut theta = [0.0; 5];
        for (k, v) in self.partial_theta().into_iter().enumerate() {
            theta[k] = v.ok_or_else(|| Error::Device(format!("{} missing for {}", THETA_KEYS[k], self.name)))?;
        }
        let (table, warnings) = self.table()?;
        let spec = CircuitSpec { name: self.name.clone(), ..Theta::from_slice(&theta).spec(table) };
        spec.validate()?;
        Ok((spec, warnings))
    }
}

/// Reads a device file and applies the capacitive misalignment `delta_c_af`
/// (`C13 += delta`, `C23 -= delta`).
pub fn load_spec(path: &Path, delta_c_af: f64) -> Result<CircuitSpec> {
    let (mut spec, warnings) = DeviceFile::load(path)?.spec()?;
    for w in warnings {
        match w {
            TableWarning::DefaultedToZero(i, j) => log::warn!("{}: C{i}{j} absent, using 0 fF", path.display()),
        }
    }
    if delta_c_af != 0.0 {
        spec.capacitances.perturb_asymmetry(delta_c_af);
        spec.validate()?;
    }
    Ok(spec)
}
