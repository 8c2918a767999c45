//! Seeded time stepping of the Itô equations and initial-ensemble preparation.
//!
//! One step draws the Langevin increments from a structured factor of the
//! noise covariance: every atom owns a unit complex Gaussian `w_j` that enters
//! the field as √Γ₀ cos kz_j · w_j and the force as 2 Re(A_n w_j), the cavity
//! loss adds an independent √κ term, and spontaneous recoil adds two real
//! kicks per atom. Summed up, these reproduce every correlation returned by
//! [`crate::dynamics::noise_covariance`] at O(N) cost.

use log::warn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{AtomLocal, Couplings, NoiseMode, SystemState};
use crate::error::{Error, Result};
use crate::model::{DerivedParams, PhysicalParams};
use crate::observables::{self, ObservableSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Plain Euler–Maruyama; positions move with the momentum at step start.
    #[default]
    Explicit,
    /// Exact exponential propagation of the linear field term, then a
    /// momentum kick followed by a position drift with the new momentum.
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Step in 1/γ.
    pub dt: f64,
    pub scheme: Scheme,
    pub seed: u64,
    /// Independent stream under the same seed, one per ensemble member.
    pub stream: u64,
    /// Steps between recorded samples.
    pub record_every: usize,
    /// Total time in 1/γ.
    pub duration: f64,
    pub noise: NoiseMode,
    /// Test hook: atoms stay where they are and feel no deterministic force;
    /// their momenta still receive the Langevin kicks.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub frozen_atoms: bool,
}

impl IntegratorConfig {
    /// 10⁻³ · min(1/κ, 1/|Δ_C − N U₀|).
    pub fn default_dt(p: &PhysicalParams, d: &DerivedParams) -> f64 {
        let shift = (d.delta_c - p.n_atoms as f64 * d.u0).abs();
        let slow = if shift > 0.0 {
            1.0 / shift
        } else {
            f64::INFINITY
        };
        1e-3 * (1.0 / p.kappa).min(slow)
    }

    pub fn new(p: &PhysicalParams, d: &DerivedParams, duration: f64, seed: u64) -> Self {
        Self {
            dt: Self::default_dt(p, d),
            scheme: Scheme::default(),
            seed,
            stream: 0,
            record_every: 1000,
            duration,
            noise: NoiseMode::Full,
            frozen_atoms: false,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self, p: &PhysicalParams, d: &DerivedParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::param("duration", "must be non-negative"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        if self.dt * p.kappa > 0.1 {
            warn!(
                "dt·kappa = {:.3} exceeds 0.1; the field step is coarse",
                self.dt * p.kappa
            );
        }
        let shift = (d.delta_c - p.n_atoms as f64 * d.u0).abs();
        if self.dt * shift > 0.5 {
            warn!("dt·|delta_c − N·u0| = {:.3} exceeds 0.5", self.dt * shift);
        }
        Ok(())
    }
}

/// Generator for the Langevin increments of one trajectory.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(2));
    rng
}

/// Generator for the initial positions and momenta, disjoint from
/// [`trajectory_rng`] for the same (seed, stream).
pub fn init_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(2).wrapping_add(1));
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Uniform positions over the cell.
    #[default]
    Uniform,
    /// kz = 2nπ, kx = 2mπ.
    OrganizedEven,
    /// kz = (2n+1)π, kx = 2mπ.
    OrganizedOdd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub mode: InitMode,
    /// Thermal energy of the initial momenta in ħγ.
    pub kt_init: f64,
    /// Cell edge in wavelengths.
    pub cell: u32,
}

impl InitSpec {
    pub fn thermal(mode: InitMode, kt_init: f64) -> Self {
        Self {
            mode,
            kt_init,
            cell: 1,
        }
    }
}

/// Empty cavity, Maxwell momenta with ⟨p²⟩ = m k_B T per axis, positions
/// according to `spec.mode`. Organized atoms are assigned to the cell's
/// sites round-robin.
pub fn init_ensemble<R: Rng + ?Sized>(
    spec: &InitSpec,
    p: &PhysicalParams,
    rng: &mut R,
) -> Result<SystemState> {
    if spec.kt_init.is_nan() || spec.kt_init <= 0.0 {
        return Err(Error::param("kt_init", "must be positive"));
    }
    if spec.cell == 0 {
        return Err(Error::param("cell", "must span at least one wavelength"));
    }
    let span = 2.0 * std::f64::consts::PI * spec.cell as f64;
    let sigma = (spec.kt_init / (2.0 * p.omega_rec)).sqrt();
    let mut pos = Vec::with_capacity(p.n_atoms);
    let mut mom = Vec::with_capacity(p.n_atoms);
    for j in 0..p.n_atoms {
        let q = match spec.mode {
            InitMode::Uniform => [rng.random::<f64>() * span, rng.random::<f64>() * span],
            InitMode::OrganizedEven | InitMode::OrganizedOdd => {
                let cells = spec.cell as usize;
                let site = 2.0 * std::f64::consts::PI * (j % cells) as f64;
                let row = 2.0 * std::f64::consts::PI * ((j / cells) % cells) as f64;
                let offset = if spec.mode == InitMode::OrganizedOdd {
                    std::f64::consts::PI
                } else {
                    0.0
                };
                [row, site + offset]
            }
        };
        pos.push(q);
        let px: f64 = rng.sample(StandardNormal);
        let pz: f64 = rng.sample(StandardNormal);
        mom.push([sigma * px, sigma * pz]);
    }
    Ok(SystemState::new(Complex64::new(0.0, 0.0), pos, mom))
}

/// Precomputed step data for one parameter set.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: IntegratorConfig,
    c: Couplings,
    n_atoms: usize,
    sqrt_dt: f64,
}

impl Stepper {
    pub fn new(cfg: &IntegratorConfig, p: &PhysicalParams, d: &DerivedParams) -> Result<Self> {
        cfg.validate(p, d)?;
        Ok(Self {
            cfg: cfg.clone(),
            c: Couplings::new(p, d),
            n_atoms: p.n_atoms,
            sqrt_dt: cfg.dt.sqrt(),
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    /// Advances `s` by one step of `dt` in place.
    pub fn step<R: Rng + ?Sized>(&self, s: &mut SystemState, rng: &mut R) -> Result<()> {
        if s.pos.len() != self.n_atoms || s.mom.len() != self.n_atoms {
            return Err(Error::ArityMismatch {
                expected: self.n_atoms,
                got: s.pos.len().min(s.mom.len()),
            });
        }
        let c = &self.c;
        let dt = self.cfg.dt;
        let noise = self.cfg.noise;
        let alpha = s.alpha;
        let alpha_sq = alpha.norm_sqr();
        let interference = c.interference(alpha);
        let vel = 2.0 * c.omega_rec * dt;
        let semi = self.cfg.scheme == Scheme::SemiImplicit;

        let mut source = 0.0;
        let mut bunch = 0.0;
        let mut xi_alpha = Complex64::new(0.0, 0.0);
        if noise != NoiseMode::Off {
            xi_alpha += unit_complex(rng) * c.kappa.sqrt();
        }

        for (q, m) in s.pos.iter_mut().zip(s.mom.iter_mut()) {
            let a = AtomLocal::new(*q);
            source += a.cz * a.cx;
            bunch += a.cz * a.cz;

            let mut kick = [0.0; 2];
            if noise != NoiseMode::Off {
                let w = unit_complex(rng);
                xi_alpha += w * (c.sqrt_gamma0 * a.cz);
                let amps = a.source_amplitudes(c, alpha);
                let w_mom = match noise {
                    NoiseMode::NoCross => unit_complex(rng),
                    _ => w,
                };
                let recoil = a.recoil_std(c, alpha);
                for n in 0..2 {
                    let r: f64 = rng.sample(StandardNormal);
                    kick[n] = 2.0 * (amps[n] * w_mom).re + recoil[n] * r;
                }
            }

            if self.cfg.frozen_atoms {
                m[0] += kick[0] * self.sqrt_dt;
                m[1] += kick[1] * self.sqrt_dt;
                continue;
            }
            let f = a.force(c, alpha_sq, interference);
            let old = *m;
            m[0] += f[0] * dt + kick[0] * self.sqrt_dt;
            m[1] += f[1] * dt + kick[1] * self.sqrt_dt;
            let v = if semi { *m } else { old };
            q[0] += vel * v[0];
            q[1] += vel * v[1];
        }

        let rate = Complex64::new(-(c.kappa + c.gamma0 * bunch), c.delta_c - c.u0 * bunch);
        let pump = -c.eta_eff * source;
        s.alpha = if semi {
            let e = (rate * dt).exp();
            alpha * e + pump * (e - 1.0) / rate
        } else {
            alpha + (rate * alpha + pump) * dt
        } + xi_alpha * self.sqrt_dt;
        s.t += dt;

        if !s.alpha.re.is_finite() || !s.alpha.im.is_finite() {
            return Err(Error::NonFinite {
                t: s.t,
                what: "cavity amplitude",
            });
        }
        Ok(())
    }
}

/// Complex Gaussian with ⟨|w|²⟩ = 1 and ⟨w²⟩ = 0.
#[inline]
fn unit_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One step from `s`, returning the new state.
pub fn step<R: Rng + ?Sized>(
    s: &SystemState,
    cfg: &IntegratorConfig,
    p: &PhysicalParams,
    d: &DerivedParams,
    rng: &mut R,
) -> Result<SystemState> {
    let mut next = s.clone();
    Stepper::new(cfg, p, d)?.step(&mut next, rng)?;
    Ok(next)
}

/// Recorded samples of one run and the state it ended in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<ObservableSample>,
    pub final_state: SystemState,
}

/// Integrates from `init` for `cfg.duration`, sampling the observables at the
/// start, every `record_every` steps and at the end. The outcome depends only
/// on (`init`, `cfg`, `p`).
pub fn run_trajectory(
    init: &SystemState,
    cfg: &IntegratorConfig,
    p: &PhysicalParams,
    d: &DerivedParams,
) -> Result<Trajectory> {
    let stepper = Stepper::new(cfg, p, d)?;
    let mut rng = trajectory_rng(cfg.seed, cfg.stream);
    let mut s = init.clone();
    let t0 = s.t;
    let n_steps = cfg.n_steps();
    let mut samples = Vec::with_capacity(n_steps / cfg.record_every + 2);
    samples.push(observables::sample(&s, p));
    for k in 1..=n_steps {
        stepper.step(&mut s, &mut rng)?;
        s.t = t0 + k as f64 * cfg.dt;
        if k % cfg.record_every == 0 || k == n_steps {
            let obs = observables::sample(&s, p);
            if !obs.is_finite() {
                return Err(Error::NonFinite {
                    t: s.t,
                    what: "atomic coordinates",
                });
            }
            samples.push(obs);
        }
    }
    Ok(Trajectory {
        samples,
        final_state: s,
    })
}
