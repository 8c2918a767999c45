//! Unit convention, physical inputs and the derived atom–cavity couplings.
//!
//! Everything inside the crate is dimensionless: rates and detunings are in
//! units of the atomic half-linewidth γ, lengths in units of 1/k (so positions
//! are stored as the phases kx, kz), momenta in units of ħk and energies in
//! units of ħγ, with ħ = 1. SI values only appear at I/O boundaries through
//! [`UnitSystem`].

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant [J s].
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Atomic mass unit [kg].
pub const AMU_SI: f64 = 1.660_539_066_60e-27;
/// Mass of ⁸⁵Rb [u].
pub const RB85_MASS_U: f64 = 84.911_789_738;
/// Vacuum wavelength of the ⁸⁵Rb D2 line [m].
pub const RB85_D2_WAVELENGTH_SI: f64 = 780.241_209e-9;
/// Half-linewidth of the ⁸⁵Rb D2 line, 2π × 3.0333 MHz [1/s].
pub const RB85_D2_GAMMA_SI: f64 = 2.0 * std::f64::consts::PI * 3.0333e6;

/// Recoil frequency ħk²/(2m) of ⁸⁵Rb on the D2 line in units of its
/// half-linewidth, i.e. `recoil_frequency(RB85_D2_WAVELENGTH_SI,
/// RB85_MASS_U * AMU_SI, RB85_D2_GAMMA_SI)`. Frozen here so configs can refer
/// to it without recomputing.
pub const RB85_OMEGA_REC: f64 = 1.272_435_589_804_017_4e-3;

/// ħk²/(2m) in units of `gamma_si`.
pub fn recoil_frequency(wavelength_si: f64, mass_kg: f64, gamma_si: f64) -> f64 {
    let k = 2.0 * std::f64::consts::PI / wavelength_si;
    HBAR_SI * k * k / (2.0 * mass_kg) / gamma_si
}

/// Anchors the dimensionless units to SI for input and output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// γ in 1/s.
    pub gamma_si: f64,
    /// λ = 2π/k in m.
    pub wavelength_si: f64,
}

impl Default for UnitSystem {
    /// γ = 20/µs as used for the rubidium simulations, λ = 780 nm.
    fn default() -> Self {
        Self {
            gamma_si: 2.0e7,
            wavelength_si: RB85_D2_WAVELENGTH_SI,
        }
    }
}

impl UnitSystem {
    pub fn micros_to_internal(&self, us: f64) -> f64 {
        us * 1e-6 * self.gamma_si
    }

    pub fn internal_to_micros(&self, t: f64) -> f64 {
        t / self.gamma_si * 1e6
    }

    pub fn wavenumber_si(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength_si
    }

    /// Energy in units of ħγ → joules.
    pub fn energy_to_joules(&self, e: f64) -> f64 {
        e * HBAR_SI * self.gamma_si
    }
}

/// How the pump–cavity detuning Δ_C is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CavityDetuning {
    /// Δ_C = N·U₀ − κ, the positive-feedback choice.
    Prescribed,
    Explicit(f64),
}

/// Experiment inputs in γ-units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Atomic half-linewidth; 1 in the internal convention but kept explicit
    /// so the whole parameter set can be rescaled.
    pub gamma: f64,
    /// Single-photon Rabi frequency.
    pub g: f64,
    /// Cavity half-linewidth.
    pub kappa: f64,
    /// Pump–atom detuning, negative for red detuning.
    pub delta_a: f64,
    /// Pump Rabi frequency ("pumping strength").
    pub eta: f64,
    pub n_atoms: usize,
    /// Thermal energy k_B T in ħγ.
    pub kt: f64,
    /// ħk²/(2m) in γ.
    pub omega_rec: f64,
    /// Second moments of the spontaneous-emission recoil direction along x, z.
    pub u2_x: f64,
    pub u2_z: f64,
    pub delta_c: CavityDetuning,
}

impl Default for PhysicalParams {
    /// Rubidium example: g = 2.5γ, κ = γ/2, Δ_A = −500γ, η = 50γ, N = 40,
    /// k_B T = ħκ.
    fn default() -> Self {
        Self {
            gamma: 1.0,
            g: 2.5,
            kappa: 0.5,
            delta_a: -500.0,
            eta: 50.0,
            n_atoms: 40,
            kt: 0.5,
            omega_rec: RB85_OMEGA_REC,
            u2_x: 1.0 / 3.0,
            u2_z: 1.0 / 3.0,
            delta_c: CavityDetuning::Prescribed,
        }
    }
}

impl PhysicalParams {
    /// Parameters of the mean-field study: κ = γ/2, Δ_A = −500γ,
    /// N·g² = 200γ², k_B T = ħκ, with `n_atoms` atoms.
    pub fn mean_field_example(n_atoms: usize, eta: f64) -> Self {
        Self {
            g: (200.0 / n_atoms as f64).sqrt(),
            n_atoms,
            eta,
            ..Self::default()
        }
    }

    /// Copy with `n_atoms` replaced and g rescaled so that N·g^`power` is
    /// unchanged (power 2 keeps the density fixed, power 4 the laboratory
    /// threshold).
    pub fn with_atoms_holding(&self, n_atoms: usize, power: i32) -> Self {
        let c = self.n_atoms as f64 * self.g.powi(power);
        Self {
            n_atoms,
            g: (c / n_atoms as f64).powf(1.0 / power as f64),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(
                    name,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        let non_negative = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be non-negative, got {v}")))
            }
        };
        non_negative("gamma", self.gamma)?;
        non_negative("g", self.g)?;
        positive("kappa", self.kappa)?;
        non_negative("eta", self.eta)?;
        positive("kt", self.kt)?;
        positive("omega_rec", self.omega_rec)?;
        if !self.delta_a.is_finite() {
            return Err(Error::param("delta_a", "must be finite"));
        }
        if self.n_atoms == 0 {
            return Err(Error::param("n_atoms", "must be at least 1"));
        }
        for (name, u2) in [("u2_x", self.u2_x), ("u2_z", self.u2_z)] {
            if !(0.0..=1.0).contains(&u2) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {u2}")));
            }
        }
        if let CavityDetuning::Explicit(dc) = self.delta_c {
            if !dc.is_finite() {
                return Err(Error::param("delta_c", "must be finite"));
            }
        }
        if self.delta_a.abs() < 10.0 * self.gamma {
            warn!(
                "|delta_a| = {} is not large compared with gamma = {}; \
                 adiabatic elimination of the excited state is questionable",
                self.delta_a.abs(),
                self.gamma
            );
        }
        Ok(())
    }
}

/// Couplings derived from [`PhysicalParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Dispersive cavity shift per atom U₀.
    pub u0: f64,
    /// Absorptive broadening per atom Γ₀.
    pub gamma0: f64,
    /// Effective cavity pump η_eff = ηg/(γ − iΔ_A).
    pub eta_eff: Complex64,
    /// Resolved pump–cavity detuning Δ_C.
    pub delta_c: f64,
}

/// U₀ = g²Δ_A/(Δ_A²+γ²), Γ₀ = g²γ/(Δ_A²+γ²), η_eff = ηg/(γ − iΔ_A).
pub fn derive_params(p: &PhysicalParams) -> Result<DerivedParams> {
    let denom = p.delta_a * p.delta_a + p.gamma * p.gamma;
    if denom == 0.0 {
        return Err(Error::param(
            "delta_a",
            "delta_a = 0 together with gamma = 0 leaves the couplings undefined",
        ));
    }
    let g2 = p.g * p.g;
    let u0 = g2 * p.delta_a / denom;
    let gamma0 = g2 * p.gamma / denom;
    let eta_eff = Complex64::new(p.eta * p.g, 0.0) / Complex64::new(p.gamma, -p.delta_a);
    let delta_c = match p.delta_c {
        CavityDetuning::Prescribed => p.n_atoms as f64 * u0 - p.kappa,
        CavityDetuning::Explicit(dc) => dc,
    };
    Ok(DerivedParams {
        u0,
        gamma0,
        eta_eff,
        delta_c,
    })
}

/// Advisory regime indicators; every flag is a plain inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// |Δ_A| > N g²/κ: the collective cavity shift stays below the linewidth.
    pub far_detuned: bool,
    /// N g² > κ|Δ_A|: stable defect atoms are possible.
    pub defects_possible: bool,
    /// g exceeds both κ and γ.
    pub strong_coupling: bool,
    /// |Δ_A| ≥ 10γ, the excited state can be eliminated.
    pub adiabatic: bool,
}

pub fn validate_regime(p: &PhysicalParams, _d: &DerivedParams) -> RegimeFlags {
    let ng2 = p.n_atoms as f64 * p.g * p.g;
    let shift_scale = p.kappa * p.delta_a.abs();
    RegimeFlags {
        far_detuned: ng2 < shift_scale,
        defects_possible: p.g > 0.0 && ng2 > shift_scale,
        strong_coupling: p.g > 0.0 && p.g > p.kappa && p.g > p.gamma,
        adiabatic: p.delta_a.abs() >= 10.0 * p.gamma,
    }
}
