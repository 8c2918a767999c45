//! Reports built from sweep aggregates: observed hysteresis thresholds and
//! atom-number scaling laws.

use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::error::{Error, Result};
use crate::integrator::InitMode;
use crate::meanfield::critical_pump_strength;
use crate::model::derive_params;
use crate::stats::{power_law_fit, prefactor_fit, LinearFit};

use super::experiment::{run_sweep, ExperimentSpec, SweepParam, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Linearly interpolated η of the first downward crossing.
    pub eta: Option<f64>,
    /// More than one crossing, or the curve starts below the threshold.
    pub non_monotone: bool,
}

/// First η at which `curve` (sorted by η) falls from ≥ `threshold` to below
/// it.
pub fn detect_transition(curve: &[(f64, f64)], threshold: f64) -> Transition {
    let mut crossings = curve
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0].1 >= threshold) != (w[1].1 >= threshold));
    let first = crossings.clone().find(|(_, w)| w[0].1 >= threshold);
    let count = crossings.by_ref().count();
    let starts_below = curve.first().is_some_and(|p| p.1 < threshold);
    let eta = first.map(|(_, w)| {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        x0 + (y0 - threshold) / (y0 - y1) * (x1 - x0)
    });
    Transition {
        eta,
        non_monotone: count > 1 || starts_below,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub eta: f64,
    pub defect_ratio: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisBranch {
    pub n_atoms: usize,
    pub g: f64,
    pub up: Vec<CurvePoint>,
    pub down: Vec<CurvePoint>,
    pub eta_up_obs: Option<f64>,
    pub eta_down_obs: Option<f64>,
    pub up_non_monotone: bool,
    pub down_non_monotone: bool,
    pub eta_star: f64,
    pub eta_up_pred: f64,
    pub eta_down_pred: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisReport {
    pub detector_threshold: f64,
    pub duration: f64,
    pub ensemble: usize,
    pub branches: Vec<HysteresisBranch>,
}

pub fn hysteresis_experiment(spec: &ExperimentSpec) -> Result<HysteresisReport> {
    hysteresis_report(&run_sweep(spec)?)
}

/// Groups the η-curves of uniform ("up") and organized ("down") starts by
/// atom number and locates both transitions.
pub fn hysteresis_report(result: &SweepResult) -> Result<HysteresisReport> {
    let spec = &result.spec;
    let up_mode = InitMode::Uniform;
    let down_mode = spec
        .init_modes
        .iter()
        .copied()
        .find(|m| *m != InitMode::Uniform)
        .ok_or_else(|| {
            Error::param(
                "init_modes",
                "hysteresis needs a uniform and an organized start",
            )
        })?;
    if !spec.init_modes.contains(&up_mode) {
        return Err(Error::param(
            "init_modes",
            "hysteresis needs a uniform and an organized start",
        ));
    }
    if !spec.axes.iter().any(|a| a.param == SweepParam::Eta) {
        return Err(Error::param("sweep_eta", "hysteresis needs an eta axis"));
    }
    let points = spec.points();
    let mut atom_numbers: Vec<usize> = points.iter().map(|p| p.n_atoms).collect();
    atom_numbers.sort_unstable();
    atom_numbers.dedup();
    let mut branches = Vec::new();
    for n in atom_numbers {
        let curve = |mode: InitMode| -> Vec<CurvePoint> {
            let mut c: Vec<CurvePoint> = points
                .iter()
                .enumerate()
                .filter(|(_, p)| p.n_atoms == n)
                .filter_map(|(i, p)| {
                    let a = result.aggregate(i, mode)?;
                    (a.completed > 0).then_some(CurvePoint {
                        eta: p.eta,
                        defect_ratio: a.mean.defect_ratio_2d,
                        std_error: a.std_error.defect_ratio_2d,
                    })
                })
                .collect();
            c.sort_by(|a, b| a.eta.total_cmp(&b.eta));
            c
        };
        let up = curve(up_mode);
        let down = curve(down_mode);
        let xy = |c: &[CurvePoint]| {
            c.iter()
                .map(|p| (p.eta, p.defect_ratio))
                .collect::<Vec<_>>()
        };
        let t_up = detect_transition(&xy(&up), spec.detector_threshold);
        let t_down = detect_transition(&xy(&down), spec.detector_threshold);
        let p = points
            .iter()
            .find(|p| p.n_atoms == n)
            .expect("atom number from points");
        let d = derive_params(p)?;
        branches.push(HysteresisBranch {
            n_atoms: n,
            g: p.g,
            eta_up_obs: t_up.eta,
            eta_down_obs: t_down.eta,
            up_non_monotone: t_up.non_monotone,
            down_non_monotone: t_down.non_monotone,
            eta_star: critical_pump_strength(p, &d, p.kt),
            eta_up_pred: analytics::up_threshold(p, p.kt),
            eta_down_pred: analytics::down_threshold(p, &d, p.kt),
            up,
            down,
        });
    }
    Ok(HysteresisReport {
        detector_threshold: spec.detector_threshold,
        duration: spec.duration,
        ensemble: spec.ensemble,
        branches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n_atoms: usize,
    pub g: f64,
    pub photon_number: f64,
    pub photon_number_se: f64,
    pub defect_count: f64,
    pub defect_count_se: f64,
    pub psv_z: f64,
    pub psv_z_se: f64,
    pub loc_z: f64,
    pub loc_z_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub duration: f64,
    pub ensemble: usize,
    pub points: Vec<ScalingPoint>,
    /// ln |α|² against ln N.
    pub photon_fit: LinearFit,
    /// A in |α|² = A N².
    pub photon_prefactor: f64,
    /// ln D_z against ln N.
    pub localization_fit: LinearFit,
    /// Atom number with the fewest defects.
    pub defect_minimum_at: usize,
}

/// Minimum number of atom numbers for a scaling study.
pub const MIN_SCALING_POINTS: usize = 4;

pub fn scaling_experiment(spec: &ExperimentSpec) -> Result<ScalingReport> {
    scaling_report(&run_sweep(spec)?)
}

pub fn scaling_report(result: &SweepResult) -> Result<ScalingReport> {
    let spec = &result.spec;
    let mode = spec.init_modes[0];
    let mut points: Vec<ScalingPoint> = spec
        .points()
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let a = result.aggregate(i, mode)?;
            (a.completed > 0).then_some(ScalingPoint {
                n_atoms: p.n_atoms,
                g: p.g,
                photon_number: a.mean.photon_number,
                photon_number_se: a.std_error.photon_number,
                defect_count: a.defect_count_mean,
                defect_count_se: a.defect_count_se,
                psv_z: a.mean.psv_z,
                psv_z_se: a.std_error.psv_z,
                loc_z: a.mean.loc_z,
                loc_z_se: a.std_error.loc_z,
            })
        })
        .collect();
    points.sort_by_key(|p| p.n_atoms);
    points.dedup_by_key(|p| p.n_atoms);
    if points.len() < MIN_SCALING_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_SCALING_POINTS,
            got: points.len(),
        });
    }
    let photons: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.n_atoms as f64, p.photon_number))
        .collect();
    let loc: Vec<(f64, f64)> = points.iter().map(|p| (p.n_atoms as f64, p.loc_z)).collect();
    let defect_minimum_at = points
        .iter()
        .min_by(|a, b| a.defect_count.total_cmp(&b.defect_count))
        .map(|p| p.n_atoms)
        .unwrap_or(0);
    Ok(ScalingReport {
        duration: spec.duration,
        ensemble: spec.ensemble,
        photon_fit: power_law_fit(&photons)?,
        photon_prefactor: prefactor_fit(&photons, 2.0)?,
        localization_fit: power_law_fit(&loc)?,
        defect_minimum_at,
        points,
    })
}
