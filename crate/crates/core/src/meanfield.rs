//! One-dimensional self-consistent mean-field model along the cavity axis.
//!
//! Atoms at kx = 0 move in the potential V(z) = U₂ cos²kz + U₁ cos kz whose
//! depths depend on the density itself through Θ = ⟨cos kz⟩ and
//! B = ⟨cos² kz⟩. The canonical density ρ ∝ exp(−V/k_BT) is iterated to a
//! fixed point, and the instability of the uniform density marks the
//! threshold of self-organization.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_params, DerivedParams, PhysicalParams, UnitSystem};
use crate::stats::linear_fit;

/// Default number of grid points over one wavelength.
pub const DEFAULT_GRID: usize = 512;

/// Density per unit kz on M equally spaced points of [0, 2π), normalized so
/// that the trapezoidal integral over one wavelength is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub values: Vec<f64>,
}

impl DensityProfile {
    pub fn uniform(m: usize) -> Self {
        Self {
            values: vec![1.0 / TAU; m],
        }
    }

    /// (1 + ε cos(kz − φ))/(2π).
    pub fn cosine(m: usize, epsilon: f64, phase: f64) -> Self {
        Self::from_fn(m, |kz| 1.0 + epsilon * (kz - phase).cos())
    }

    /// Samples `f` on the grid and normalizes.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Self {
        let mut p = Self {
            values: (0..m).map(|i| f(Self::node(m, i))).collect(),
        };
        p.normalize();
        p
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(m: usize, i: usize) -> f64 {
        TAU * i as f64 / m as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.len();
        (0..m).map(move |i| Self::node(m, i))
    }

    fn weight(&self) -> f64 {
        TAU / self.len() as f64
    }

    /// ∫ f(kz) ρ(kz) dkz by the periodic trapezoidal rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.weight()
            * self
                .grid()
                .zip(&self.values)
                .map(|(kz, r)| f(kz) * r)
                .sum::<f64>()
    }

    pub fn total(&self) -> f64 {
        self.weight() * self.values.iter().sum::<f64>()
    }

    fn normalize(&mut self) {
        let z = self.total();
        for v in &mut self.values {
            *v /= z;
        }
    }

    /// (Θ, B) by quadrature.
    pub fn moments(&self) -> (f64, f64) {
        (
            self.integrate(f64::cos),
            self.integrate(|kz| kz.cos().powi(2)),
        )
    }

    /// Fraction of the density within a quarter wavelength of the odd sites
    /// kz = (2n+1)π.
    pub fn odd_fraction(&self) -> f64 {
        self.integrate(|kz| if kz.cos() < 0.0 { 1.0 } else { 0.0 })
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.weight()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
    }

    /// Profile shifted by half a wavelength, kz → kz + π. Requires even M.
    pub fn shifted_by_half(&self) -> Self {
        let m = self.len();
        Self {
            values: (0..m).map(|i| self.values[(i + m / 2) % m]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldCoefficients {
    pub theta: f64,
    pub bunching: f64,
    /// Photons scattered per atom into the cavity at full coupling.
    pub i0: f64,
    /// Depth of the λ-periodic interference term.
    pub u1: f64,
    /// Depth of the λ/2-periodic cavity term.
    pub u2: f64,
}

/// I₀ = |η_eff|²/([κ + NΓ₀B]² + [Δ_C − NU₀B]²), U₂ = N²Θ² I₀ U₀,
/// U₁ = 2NΘ I₀ (Δ_C − NU₀B).
pub fn coefficients(
    theta: f64,
    bunching: f64,
    p: &PhysicalParams,
    d: &DerivedParams,
) -> MeanFieldCoefficients {
    let n = p.n_atoms as f64;
    let loss = p.kappa + n * d.gamma0 * bunching;
    let shift = d.delta_c - n * d.u0 * bunching;
    let i0 = d.eta_eff.norm_sqr() / (loss * loss + shift * shift);
    MeanFieldCoefficients {
        theta,
        bunching,
        i0,
        u1: 2.0 * n * theta * i0 * shift,
        u2: n * n * theta * theta * i0 * d.u0,
    }
}

/// V(z) = U₂ cos²kz + U₁ cos kz.
pub fn potential(kz: f64, c: &MeanFieldCoefficients) -> f64 {
    let cz = kz.cos();
    c.u2 * cz * cz + c.u1 * cz
}

/// One application of ρ ↦ exp(−V[ρ]/k_BT)/Z.
pub fn canonical_update(
    rho: &DensityProfile,
    p: &PhysicalParams,
    d: &DerivedParams,
    kt: f64,
) -> DensityProfile {
    let (theta, bunching) = rho.moments();
    let c = coefficients(theta, bunching, p, d);
    let energies: Vec<f64> = rho.grid().map(|kz| potential(kz, &c)).collect();
    let v_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = DensityProfile {
        values: energies.iter().map(|v| (-(v - v_min) / kt).exp()).collect(),
    };
    out.normalize();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub profile: DensityProfile,
    pub iterations: usize,
    pub converged: bool,
    /// Θ after each iteration, starting with the initial profile.
    pub theta_history: Vec<f64>,
}

/// Iterates [`canonical_update`] until the L¹ change drops below `tol` or
/// `max_iter` updates were made. Non-convergence is reported, not an error.
pub fn solve_self_consistent(
    p: &PhysicalParams,
    d: &DerivedParams,
    kt: f64,
    init: &DensityProfile,
    max_iter: usize,
    tol: f64,
) -> SolveResult {
    let mut rho = init.clone();
    let mut theta_history = vec![rho.moments().0];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = canonical_update(&rho, p, d, kt);
        iterations += 1;
        let change = next.l1_distance(&rho);
        rho = next;
        theta_history.push(rho.moments().0);
        if change < tol {
            converged = true;
            break;
        }
    }
    SolveResult {
        profile: rho,
        iterations,
        converged,
        theta_history,
    }
}

/// η* = √(k_BT/ħκ) · κ|Δ_A|/(√N g) · √2, the far-detuned threshold.
pub fn critical_pump_strength(p: &PhysicalParams, _d: &DerivedParams, kt: f64) -> f64 {
    (kt / p.kappa).sqrt() * p.kappa * p.delta_a.abs() / ((p.n_atoms as f64).sqrt() * p.g)
        * 2f64.sqrt()
}

/// Linear gain of a cos kz perturbation of the uniform density under one
/// canonical update: −N I₀ (Δ_C − NU₀/2)/k_BT with I₀ taken at B = ½.
/// With the prescribed detuning this is N I₀ (N|U₀|/2 + κ)/k_BT.
pub fn uniform_gain(p: &PhysicalParams, d: &DerivedParams, kt: f64) -> f64 {
    let n = p.n_atoms as f64;
    let c = coefficients(0.0, 0.5, p, d);
    -n * c.i0 * (d.delta_c - 0.5 * n * d.u0) / kt
}

/// Pump strength at which [`uniform_gain`] reaches one, without the
/// far-detuned approximation. Infinite when the detuning gives no positive
/// feedback.
pub fn instability_threshold_exact(p: &PhysicalParams, d: &DerivedParams, kt: f64) -> f64 {
    // the gain is proportional to η²; evaluate it at η = 1
    let unit = PhysicalParams {
        eta: 1.0,
        ..p.clone()
    };
    let du = DerivedParams {
        eta_eff: Complex64::new(p.g, 0.0) / Complex64::new(p.gamma, -p.delta_a),
        ..*d
    };
    let gain = uniform_gain(&unit, &du, kt);
    if gain > 0.0 {
        (1.0 / gain).sqrt()
    } else {
        f64::INFINITY
    }
}

/// Ratio Θ'/Θ after one canonical update of (1 + ε cos kz)/(2π).
pub fn perturbation_growth(
    p: &PhysicalParams,
    d: &DerivedParams,
    kt: f64,
    grid: usize,
    epsilon: f64,
) -> f64 {
    let rho = DensityProfile::cosine(grid, epsilon, 0.0);
    let theta0 = rho.moments().0;
    let next = canonical_update(&rho, p, d, kt);
    next.moments().0 / theta0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdLocation {
    pub eta_c: f64,
    pub grid: usize,
    pub bisection_steps: usize,
    /// Closed-form η* for comparison.
    pub eta_star: f64,
    /// η_c/η*.
    pub ratio_to_eta_star: f64,
}

/// Bisection in η on the sign of (growth − 1) of a small cos kz seed.
/// `bracket` must enclose the threshold.
pub fn locate_threshold(
    p: &PhysicalParams,
    kt: f64,
    grid: usize,
    bracket: (f64, f64),
    rel_tol: f64,
) -> Result<ThresholdLocation> {
    const SEED: f64 = 1e-4;
    let growth_minus_one = |eta: f64| -> Result<f64> {
        let q = PhysicalParams { eta, ..p.clone() };
        let d = derive_params(&q)?;
        Ok(perturbation_growth(&q, &d, kt, grid, SEED) - 1.0)
    };
    let (mut lo, mut hi) = bracket;
    let f_lo = growth_minus_one(lo)?;
    let f_hi = growth_minus_one(hi)?;
    if f_lo >= 0.0 || f_hi <= 0.0 {
        return Err(Error::param(
            "bracket",
            format!("[{lo}, {hi}] does not enclose the threshold (growth−1: {f_lo:e}, {f_hi:e})"),
        ));
    }
    let mut steps = 0;
    while (hi - lo) > rel_tol * hi && steps < 200 {
        let mid = 0.5 * (lo + hi);
        if growth_minus_one(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let eta_c = 0.5 * (lo + hi);
    let d = derive_params(p)?;
    let eta_star = critical_pump_strength(p, &d, kt);
    Ok(ThresholdLocation {
        eta_c,
        grid,
        bisection_steps: steps,
        eta_star,
        ratio_to_eta_star: eta_c / eta_star,
    })
}

/// Least-squares slope of ln|Θ| against ln δ for points (δ, Θ).
pub fn critical_exponent_fit(points: &[(f64, f64)]) -> Result<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(delta, theta)| *delta > 0.0 && *theta != 0.0)
        .map(|&(delta, theta)| (delta.ln(), theta.abs().ln()))
        .collect();
    if logs.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: logs.len(),
        });
    }
    Ok(linear_fit(&logs)?.slope)
}

/// Transverse pump power above which the uniform gas is unstable,
/// k_BT (Δ_A/γ)² κ · 4k³/(3 N/V), evaluated in SI with `density` in m⁻³.
pub fn pump_power_threshold(
    p: &PhysicalParams,
    _d: &DerivedParams,
    kt: f64,
    density: f64,
    units: &UnitSystem,
) -> Result<f64> {
    if density.is_nan() || density <= 0.0 {
        return Err(Error::param("density", "must be positive"));
    }
    let k = units.wavenumber_si();
    let kt_si = units.energy_to_joules(kt);
    let kappa_si = p.kappa * units.gamma_si;
    let detuning = p.delta_a / p.gamma;
    Ok(kt_si * detuning * detuning * kappa_si * 4.0 * k.powi(3) / (3.0 * density))
}

/// Θ for ρ = (1 + ε cos kz)/(2π) is ε/2.
pub fn theta_of_cosine_seed(epsilon: f64) -> f64 {
    0.5 * epsilon
}

/// Grid spacing in kz.
pub fn spacing(grid: usize) -> f64 {
    2.0 * PI / grid as f64
}
