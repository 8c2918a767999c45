//! Experiment specifications, seeded run plans and the parallel sweep runner.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::NoiseMode;
use crate::error::{Error, Result};
use crate::integrator::{
    init_ensemble, init_rng, run_trajectory, InitMode, InitSpec, IntegratorConfig, Scheme,
};
use crate::model::{derive_params, PhysicalParams};
use crate::observables::ObservableSample;
use crate::stats::Welford;

/// Environment variable that overrides the number of worker threads.
pub const WORKERS_ENV: &str = "SELFORG_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Eta,
    NAtoms,
    G,
    Kappa,
    DeltaA,
    Kt,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Eta => "eta",
            Self::NAtoms => "n_atoms",
            Self::G => "g",
            Self::Kappa => "kappa",
            Self::DeltaA => "delta_a",
            Self::Kt => "kt",
        }
    }

    pub fn get(self, p: &PhysicalParams) -> f64 {
        match self {
            Self::Eta => p.eta,
            Self::NAtoms => p.n_atoms as f64,
            Self::G => p.g,
            Self::Kappa => p.kappa,
            Self::DeltaA => p.delta_a,
            Self::Kt => p.kt,
        }
    }
}

/// Quantity kept fixed when the atom number changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hold {
    /// g unchanged.
    #[default]
    None,
    /// N·g² fixed.
    Ng2,
    /// N·g⁴ fixed.
    Ng4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    #[default]
    None,
    Hysteresis,
    Scaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base: PhysicalParams,
    /// Applied in order; the last axis varies fastest.
    pub axes: Vec<SweepAxis>,
    pub hold: Hold,
    pub init_modes: Vec<InitMode>,
    /// Temperature of the initial momenta; `None` uses the point's k_BT.
    pub kt_init: Option<f64>,
    pub cell: u32,
    pub ensemble: usize,
    pub master_seed: u64,
    pub duration: f64,
    pub dt: f64,
    pub record_every: usize,
    pub scheme: Scheme,
    pub noise: NoiseMode,
    pub detector_threshold: f64,
    pub analysis: AnalysisKind,
}

impl ExperimentSpec {
    /// A spec that runs `ensemble` trajectories at `base` from uniform
    /// thermal initial conditions.
    pub fn single_point(
        base: PhysicalParams,
        duration: f64,
        ensemble: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            base,
            axes: Vec::new(),
            hold: Hold::None,
            init_modes: vec![InitMode::Uniform],
            kt_init: None,
            cell: 1,
            ensemble,
            master_seed,
            duration,
            dt: 0.05,
            record_every: 200,
            scheme: Scheme::SemiImplicit,
            noise: NoiseMode::Full,
            detector_threshold: 0.25,
            analysis: AnalysisKind::None,
        }
    }

    pub fn with_axis(mut self, param: SweepParam, values: Vec<f64>) -> Self {
        self.axes.push(SweepAxis { param, values });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.ensemble == 0 {
            return Err(Error::param("ensemble", "must be at least 1"));
        }
        if self.init_modes.is_empty() {
            return Err(Error::param(
                "init_modes",
                "at least one initial condition is needed",
            ));
        }
        if !(0.0..=1.0).contains(&self.detector_threshold) {
            return Err(Error::param("detector_threshold", "must lie in [0, 1]"));
        }
        if let Some(kt) = self.kt_init {
            if !(kt >= 0.0 && kt.is_finite()) {
                return Err(Error::param("kt_init", "must be non-negative"));
            }
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::param(
                    "sweep",
                    format!("axis `{}` is empty", axis.param.name()),
                ));
            }
            if axis.param == SweepParam::NAtoms
                && axis.values.iter().any(|&n| n < 1.0 || n.fract() != 0.0)
            {
                return Err(Error::param(
                    "sweep_n_atoms",
                    "atom numbers must be positive integers",
                ));
            }
        }
        for point in self.points() {
            point.validate()?;
            let d = derive_params(&point)?;
            self.integrator(&point, 0, 0).validate(&point, &d)?;
        }
        Ok(())
    }

    /// Parameter sets of the Cartesian product of the axes.
    pub fn points(&self) -> Vec<PhysicalParams> {
        let mut points = vec![self.base.clone()];
        for axis in &self.axes {
            points = points
                .iter()
                .flat_map(|p| {
                    axis.values
                        .iter()
                        .map(move |&v| self.apply(p, axis.param, v))
                })
                .collect();
        }
        points
    }

    fn apply(&self, p: &PhysicalParams, param: SweepParam, v: f64) -> PhysicalParams {
        let mut q = p.clone();
        match param {
            SweepParam::Eta => q.eta = v,
            SweepParam::G => q.g = v,
            SweepParam::Kappa => q.kappa = v,
            SweepParam::DeltaA => q.delta_a = v,
            SweepParam::Kt => q.kt = v,
            SweepParam::NAtoms => {
                let n = v as usize;
                q = match self.hold {
                    Hold::None => PhysicalParams { n_atoms: n, ..q },
                    Hold::Ng2 => q.with_atoms_holding(n, 2),
                    Hold::Ng4 => q.with_atoms_holding(n, 4),
                };
            }
        }
        q
    }

    fn integrator(&self, _p: &PhysicalParams, seed: u64, stream: u64) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            scheme: self.scheme,
            seed,
            stream,
            record_every: self.record_every,
            duration: self.duration,
            noise: self.noise,
            frozen_atoms: false,
        }
    }

    /// One plan per (point, initial condition, ensemble member), in that
    /// nesting order. Run `i` uses stream `i` of the master seed.
    pub fn plans(&self) -> Vec<RunPlan> {
        let mut plans = Vec::new();
        for (point, params) in self.points().into_iter().enumerate() {
            for &mode in &self.init_modes {
                for member in 0..self.ensemble {
                    let index = plans.len();
                    plans.push(RunPlan {
                        index,
                        point,
                        member,
                        integrator: self.integrator(&params, self.master_seed, index as u64),
                        init: InitSpec {
                            mode,
                            kt_init: self.kt_init.unwrap_or(params.kt),
                            cell: self.cell,
                        },
                        params: params.clone(),
                    });
                }
            }
        }
        plans
    }
}

/// Everything needed to reproduce one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub index: usize,
    pub point: usize,
    pub member: usize,
    pub params: PhysicalParams,
    pub integrator: IntegratorConfig,
    pub init: InitSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub sample: ObservableSample,
    /// defect_ratio_2d · N.
    pub defect_count: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub plan: RunPlan,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<ObservableSample>,
    pub summary: Option<FinalSummary>,
    pub error: Option<String>,
    /// Seconds; not part of the reproducible content.
    pub wall_clock_s: f64,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// Record without the wall-clock field, for comparisons.
    pub fn reproducible(&self) -> RunRecord {
        RunRecord {
            wall_clock_s: 0.0,
            ..self.clone()
        }
    }
}

pub fn execute(plan: &RunPlan) -> RunRecord {
    let start = Instant::now();
    let outcome = (|| {
        let d = derive_params(&plan.params)?;
        let mut rng = init_rng(plan.integrator.seed, plan.integrator.stream);
        let init = init_ensemble(&plan.init, &plan.params, &mut rng)?;
        run_trajectory(&init, &plan.integrator, &plan.params, &d)
    })();
    let wall_clock_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok(traj) => {
            let sample = traj.samples.last().cloned().unwrap_or_default();
            RunRecord {
                plan: plan.clone(),
                summary: Some(FinalSummary {
                    defect_count: sample.defect_ratio_2d * plan.params.n_atoms as f64,
                    alpha_re: traj.final_state.alpha.re,
                    alpha_im: traj.final_state.alpha.im,
                    sample,
                }),
                samples: traj.samples,
                error: None,
                wall_clock_s,
            }
        }
        Err(e) => RunRecord {
            plan: plan.clone(),
            samples: Vec::new(),
            summary: None,
            error: Some(e.to_string()),
            wall_clock_s,
        },
    }
}

/// Mean and standard error of the final observables over the successful
/// members of one (point, initial condition) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAggregate {
    pub point: usize,
    pub init_mode: InitMode,
    pub params: PhysicalParams,
    pub completed: usize,
    pub failed: usize,
    pub mean: ObservableSample,
    pub std_error: ObservableSample,
    pub defect_count_mean: f64,
    pub defect_count_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: ExperimentSpec,
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<PointAggregate>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.ok()).count()
    }

    pub fn aggregate(&self, point: usize, mode: InitMode) -> Option<&PointAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.point == point && a.init_mode == mode)
    }
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    run_sweep_with_workers(spec, workers_from_env())
}

/// Runs every plan on a pool of `workers` threads (rayon's default when
/// `None`). Results are kept in plan order, so the output does not depend on
/// the scheduling.
pub fn run_sweep_with_workers(
    spec: &ExperimentSpec,
    workers: Option<usize>,
) -> Result<SweepResult> {
    spec.validate()?;
    let plans = spec.plans();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| plans.par_iter().map(execute).collect());
    for r in records.iter().filter(|r| !r.ok()) {
        log::warn!(
            "run {} failed: {}",
            r.plan.index,
            r.error.as_deref().unwrap_or("")
        );
    }
    let aggregates = aggregate(spec, &records);
    Ok(SweepResult {
        spec: spec.clone(),
        records,
        aggregates,
    })
}

/// Streaming per-cell statistics, accumulated in plan order.
pub fn aggregate(spec: &ExperimentSpec, records: &[RunRecord]) -> Vec<PointAggregate> {
    let points = spec.points();
    let mut out = Vec::new();
    for (point, params) in points.iter().enumerate() {
        for &mode in &spec.init_modes {
            let mut columns = [Welford::new(); ObservableSample::COLUMNS.len()];
            let mut defects = Welford::new();
            let mut failed = 0;
            for r in records
                .iter()
                .filter(|r| r.plan.point == point && r.plan.init.mode == mode)
            {
                match &r.summary {
                    Some(s) => {
                        for (w, v) in columns.iter_mut().zip(s.sample.values()) {
                            w.push(v);
                        }
                        defects.push(s.defect_count);
                    }
                    None => failed += 1,
                }
            }
            out.push(PointAggregate {
                point,
                init_mode: mode,
                params: params.clone(),
                completed: defects.count as usize,
                failed,
                mean: ObservableSample::from_values(columns.map(|w| w.mean)),
                std_error: ObservableSample::from_values(columns.map(|w| w.std_error())),
                defect_count_mean: defects.mean,
                defect_count_se: defects.std_error(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(ensemble: usize) -> ExperimentSpec {
        ExperimentSpec {
            record_every: 50,
            ..ExperimentSpec::single_point(
                PhysicalParams {
                    n_atoms: 6,
                    ..PhysicalParams::default()
                },
                20.0,
                ensemble,
                11,
            )
        }
    }

    #[test]
    fn cartesian_order_last_axis_fastest() {
        let spec = small(1)
            .with_axis(SweepParam::NAtoms, vec![4.0, 8.0])
            .with_axis(SweepParam::Eta, vec![10.0, 20.0, 30.0]);
        let pts = spec.points();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[0].n_atoms, pts[0].eta), (4, 10.0));
        assert_eq!((pts[2].n_atoms, pts[2].eta), (4, 30.0));
        assert_eq!((pts[3].n_atoms, pts[3].eta), (8, 10.0));
    }

    #[test]
    fn hold_constraints() {
        for (hold, power) in [(Hold::Ng2, 2), (Hold::Ng4, 4)] {
            let spec = ExperimentSpec {
                hold,
                ..small(1).with_axis(SweepParam::NAtoms, vec![50.0, 200.0, 800.0])
            };
            let c = spec.base.n_atoms as f64 * spec.base.g.powi(power);
            for p in spec.points() {
                let got = p.n_atoms as f64 * p.g.powi(power);
                assert!((got - c).abs() <= 4.0 * f64::EPSILON * c, "{got} vs {c}");
            }
        }
    }

    #[test]
    fn plans_have_distinct_streams() {
        let spec = ExperimentSpec {
            init_modes: vec![InitMode::Uniform, InitMode::OrganizedEven],
            ..small(3).with_axis(SweepParam::Eta, vec![10.0, 20.0])
        };
        let plans = spec.plans();
        assert_eq!(plans.len(), 12);
        for (i, p) in plans.iter().enumerate() {
            assert_eq!(p.index, i);
            assert_eq!(p.integrator.stream, i as u64);
            assert_eq!(p.integrator.seed, 11);
        }
        assert_eq!(plans[3].init.mode, InitMode::OrganizedEven);
        assert_eq!(plans[6].point, 1);
    }

    #[test]
    fn invalid_specs() {
        assert!(small(0).validate().is_err());
        assert!(small(1)
            .with_axis(SweepParam::NAtoms, vec![0.0])
            .validate()
            .is_err());
        assert!(small(1)
            .with_axis(SweepParam::Eta, vec![])
            .validate()
            .is_err());
        assert!(small(1)
            .with_axis(SweepParam::Kappa, vec![-1.0])
            .validate()
            .is_err());
        let spec = ExperimentSpec {
            init_modes: vec![],
            ..small(1)
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn degenerate_sweep_matches_direct_trajectory() {
        let spec = small(1).with_axis(SweepParam::Eta, vec![40.0]);
        let res = run_sweep_with_workers(&spec, Some(1)).unwrap();
        assert_eq!(res.records.len(), 1);
        let plan = &res.records[0].plan;
        let d = derive_params(&plan.params).unwrap();
        let init = init_ensemble(&plan.init, &plan.params, &mut init_rng(11, 0)).unwrap();
        let direct = run_trajectory(&init, &plan.integrator, &plan.params, &d).unwrap();
        assert_eq!(res.records[0].samples, direct.samples);
        assert_eq!(res.aggregates[0].mean, *direct.samples.last().unwrap());
        assert_eq!(res.aggregates[0].completed, 1);
    }

    #[test]
    fn failures_are_recorded_and_the_sweep_continues() {
        let spec = ExperimentSpec {
            scheme: Scheme::Explicit,
            dt: 1.0,
            noise: NoiseMode::Off,
            duration: 200.0,
            base: PhysicalParams {
                delta_c: crate::model::CavityDetuning::Explicit(-1e3),
                ..small(1).base
            },
            ..small(1)
        }
        .with_axis(SweepParam::Eta, vec![0.0, 50.0]);
        let res = run_sweep_with_workers(&spec, Some(2)).unwrap();
        assert_eq!(res.records.len(), 2);
        assert!(res.records[0].ok());
        assert!(!res.records[1].ok());
        assert_eq!(res.failures(), 1);
        assert_eq!(res.aggregates[1].failed, 1);
        assert_eq!(res.aggregates[1].completed, 0);
    }

    #[test]
    fn aggregation_is_the_batch_mean() {
        let spec = small(5);
        let res = run_sweep_with_workers(&spec, Some(2)).unwrap();
        let finals: Vec<f64> = res
            .records
            .iter()
            .map(|r| r.summary.as_ref().unwrap().sample.photon_number)
            .collect();
        let batch = finals.iter().sum::<f64>() / finals.len() as f64;
        let streamed = res.aggregates[0].mean.photon_number;
        assert!((streamed - batch).abs() <= 1e-12 * batch.abs().max(1e-300));
    }
}
