//! Flat key–value configuration in γ-units.
//!
//! The file is a TOML document without tables:
//!
//! ```toml
//! n_atoms = 40
//! eta = 50.0
//! sweep_eta = [10, 20, 30]
//! scheme = "semi-implicit"
//! ```
//!
//! Unknown keys are rejected. `--set key=value` overrides are parsed with the
//! same value syntax; a value that is not valid TOML is taken as a string.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::NoiseMode;
use crate::error::{Error, Result};
use crate::integrator::{InitMode, Scheme};
use crate::meanfield::DEFAULT_GRID;
use crate::model::{CavityDetuning, PhysicalParams, RB85_OMEGA_REC};

use super::experiment::{AnalysisKind, ExperimentSpec, Hold, SweepAxis, SweepParam};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub gamma: f64,
    pub g: f64,
    pub kappa: f64,
    pub delta_a: f64,
    pub eta: f64,
    pub n_atoms: usize,
    pub kt: f64,
    pub omega_rec: f64,
    pub u2_x: f64,
    pub u2_z: f64,
    /// Absent: Δ_C = N·U₀ − κ.
    pub delta_c: Option<f64>,

    pub duration: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    pub noise: NoiseMode,

    pub init: InitMode,
    /// Defaults to `kt`.
    pub kt_init: Option<f64>,
    pub cell: u32,
    pub ensemble: usize,
    /// Seeds above `i64::MAX` are written as strings.
    #[serde(with = "seed_repr")]
    pub seed: u64,

    pub sweep_eta: Vec<f64>,
    pub sweep_n_atoms: Vec<usize>,
    pub sweep_g: Vec<f64>,
    pub sweep_kappa: Vec<f64>,
    pub sweep_delta_a: Vec<f64>,
    pub sweep_kt: Vec<f64>,
    pub hold: Hold,
    /// Defaults to `[init]`.
    pub init_modes: Vec<InitMode>,
    pub detector_threshold: f64,
    pub analysis: AnalysisKind,

    pub grid: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed_amplitude: f64,
    pub seed_phase: f64,
    /// Number density N/V in m⁻³ for the pump power estimate.
    pub density: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        let p = PhysicalParams::default();
        Self {
            gamma: p.gamma,
            g: p.g,
            kappa: p.kappa,
            delta_a: p.delta_a,
            eta: p.eta,
            n_atoms: p.n_atoms,
            kt: p.kt,
            omega_rec: RB85_OMEGA_REC,
            u2_x: p.u2_x,
            u2_z: p.u2_z,
            delta_c: None,
            duration: 1000.0,
            dt: 0.05,
            scheme: Scheme::SemiImplicit,
            record_every: 200,
            noise: NoiseMode::Full,
            init: InitMode::Uniform,
            kt_init: None,
            cell: 1,
            ensemble: 25,
            seed: 0,
            sweep_eta: Vec::new(),
            sweep_n_atoms: Vec::new(),
            sweep_g: Vec::new(),
            sweep_kappa: Vec::new(),
            sweep_delta_a: Vec::new(),
            sweep_kt: Vec::new(),
            hold: Hold::None,
            init_modes: Vec::new(),
            detector_threshold: 0.25,
            analysis: AnalysisKind::None,
            grid: DEFAULT_GRID,
            max_iter: 100_000,
            tol: 1e-12,
            seed_amplitude: 0.01,
            seed_phase: 0.0,
            density: None,
        }
    }
}

impl Config {
    /// Reads `path` (if any) and applies the `key=value` overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                parse_table(&text)?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, value) = parse_override(item)?;
            table.insert(key, value);
        }
        Self::from_table(table)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_table(parse_table(text)?)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        if let Some((key, _)) = table.iter().find(|(_, v)| v.is_table()) {
            return Err(Error::Config(format!(
                "`{key}`: tables are not allowed, the file is flat"
            )));
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_owned()))
    }

    pub fn physical(&self) -> PhysicalParams {
        PhysicalParams {
            gamma: self.gamma,
            g: self.g,
            kappa: self.kappa,
            delta_a: self.delta_a,
            eta: self.eta,
            n_atoms: self.n_atoms,
            kt: self.kt,
            omega_rec: self.omega_rec,
            u2_x: self.u2_x,
            u2_z: self.u2_z,
            delta_c: match self.delta_c {
                Some(dc) => CavityDetuning::Explicit(dc),
                None => CavityDetuning::Prescribed,
            },
        }
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let mut axes = Vec::new();
        if !self.sweep_n_atoms.is_empty() {
            axes.push(SweepAxis {
                param: SweepParam::NAtoms,
                values: self.sweep_n_atoms.iter().map(|&n| n as f64).collect(),
            });
        }
        for (param, values) in [
            (SweepParam::G, &self.sweep_g),
            (SweepParam::Kappa, &self.sweep_kappa),
            (SweepParam::DeltaA, &self.sweep_delta_a),
            (SweepParam::Kt, &self.sweep_kt),
            (SweepParam::Eta, &self.sweep_eta),
        ] {
            if !values.is_empty() {
                axes.push(SweepAxis {
                    param,
                    values: values.clone(),
                });
            }
        }
        let init_modes = if self.init_modes.is_empty() {
            vec![self.init]
        } else {
            self.init_modes.clone()
        };
        let spec = ExperimentSpec {
            base: self.physical(),
            axes,
            hold: self.hold,
            init_modes,
            kt_init: self.kt_init,
            cell: self.cell,
            ensemble: self.ensemble,
            master_seed: self.seed,
            duration: self.duration,
            dt: self.dt,
            record_every: self.record_every,
            scheme: self.scheme,
            noise: self.noise,
            detector_threshold: self.detector_threshold,
            analysis: self.analysis,
        };
        spec.validate()?;
        Ok(spec)
    }
}

mod seed_repr {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        struct Seed;
        impl Visitor<'_> for Seed {
            type Value = u64;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a non-negative integer or a decimal string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<u64, E> {
                u64::try_from(v)
                    .map_err(|_| E::custom(format!("seed must be non-negative, got {v}")))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<u64, E> {
                Ok(v)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
                v.parse()
                    .map_err(|_| E::custom(format!("`{v}` is not a valid seed")))
            }
        }
        d.deserialize_any(Seed)
    }
}

fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| Error::Config(e.message().to_owned()))
}

/// `key=value` with the value in TOML syntax, or a bare string.
pub fn parse_override(item: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{item}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    Ok((key.to_owned(), value))
}
