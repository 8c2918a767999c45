//! Deterministic drift and Langevin noise of the coupled atom–field equations.
//!
//! The state is the complex cavity amplitude α together with the positions
//! (kx, kz) and momenta (p_x, p_z) of every atom. The equations of motion are
//!
//! ```text
//! dα/dt   = [i(Δ_C − U₀ Σ cos²kz) − (κ + Γ₀ Σ cos²kz)] α − η_eff Σ cos kz cos kx + ξ_α
//! dp_x/dt = −U₀ (η/g)² ∂_x cos²kx + 2 Im(η_eff* α) ∂_x (cos kx cos kz) + ξ_x
//! dp_z/dt = −U₀ |α|²   ∂_z cos²kz + 2 Im(η_eff* α) ∂_z (cos kx cos kz) + ξ_z
//! d(kx)/dt = 2 ω_rec p_x,   d(kz)/dt = 2 ω_rec p_z
//! ```
//!
//! with the local field E(r) = α cos kz + (η/g) cos kx entering the noise.
//! Combinations such as U₀(η/g)² and Γ₀(η/g)² are evaluated in forms that stay
//! finite at g = 0, where the pump lattice and pump scattering remain.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DerivedParams, PhysicalParams};

/// Snapshot of the stochastic variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub t: f64,
    pub alpha: Complex64,
    /// (kx, kz) per atom, never folded.
    pub pos: Vec<[f64; 2]>,
    /// (p_x, p_z) per atom in ħk.
    pub mom: Vec<[f64; 2]>,
}

impl SystemState {
    pub fn new(alpha: Complex64, pos: Vec<[f64; 2]>, mom: Vec<[f64; 2]>) -> Self {
        assert_eq!(pos.len(), mom.len(), "positions and momenta must pair up");
        Self {
            t: 0.0,
            alpha,
            pos,
            mom,
        }
    }

    /// Atoms at rest at the given positions, empty cavity.
    pub fn at_rest(pos: Vec<[f64; 2]>) -> Self {
        let mom = vec![[0.0; 2]; pos.len()];
        Self::new(Complex64::new(0.0, 0.0), pos, mom)
    }

    pub fn n_atoms(&self) -> usize {
        self.pos.len()
    }

    pub(crate) fn check_arity(&self, p: &PhysicalParams) -> Result<()> {
        if self.pos.len() != p.n_atoms || self.mom.len() != p.n_atoms {
            return Err(Error::ArityMismatch {
                expected: p.n_atoms,
                got: self.pos.len().min(self.mom.len()),
            });
        }
        Ok(())
    }
}

/// Right-hand side of the equations of motion without the noise terms.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftVector {
    pub d_alpha: Complex64,
    /// d(kx)/dt, d(kz)/dt.
    pub d_pos: Vec<[f64; 2]>,
    /// dp_x/dt, dp_z/dt in ħkγ.
    pub d_mom: Vec<[f64; 2]>,
}

/// Which parts of the Langevin noise are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// All correlations, including the momentum–field cross terms.
    #[default]
    Full,
    /// Cross terms dropped; field and momenta sampled independently.
    NoCross,
    Off,
}

/// Per-atom block of the noise correlations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomNoise {
    /// ⟨ξ_n ξ_m⟩ for n, m ∈ {x, z} in ħ²k²γ.
    pub mom: [[f64; 2]; 2],
    /// ⟨ξ_n ξ_α⟩ for n ∈ {x, z}.
    pub cross: [Complex64; 2],
}

/// Second-order noise correlations at one state. Correlations between
/// different atoms vanish; ⟨ξ_α ξ_α⟩ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariance {
    /// ⟨ξ_α* ξ_α⟩.
    pub field_var: f64,
    pub atoms: Vec<AtomNoise>,
}

impl NoiseCovariance {
    /// Real covariance matrix over (Re ξ_α, Im ξ_α, ξ_x1, ξ_z1, …, ξ_xN, ξ_zN).
    ///
    /// The field variance is split evenly between the quadratures and, since
    /// the ξ_n are real, ⟨ξ_n Re ξ_α⟩ = Re⟨ξ_n ξ_α⟩ and
    /// ⟨ξ_n Im ξ_α⟩ = Im⟨ξ_n ξ_α⟩.
    pub fn assemble(&self) -> DMatrix<f64> {
        let n = 2 + 2 * self.atoms.len();
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = 0.5 * self.field_var;
        m[(1, 1)] = 0.5 * self.field_var;
        for (j, a) in self.atoms.iter().enumerate() {
            let o = 2 + 2 * j;
            for r in 0..2 {
                for c in 0..2 {
                    m[(o + r, o + c)] = a.mom[r][c];
                }
                m[(o + r, 0)] = a.cross[r].re;
                m[(0, o + r)] = a.cross[r].re;
                m[(o + r, 1)] = a.cross[r].im;
                m[(1, o + r)] = a.cross[r].im;
            }
        }
        m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.assemble();
        m.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Absolute PSD tolerance, scaled by the largest diagonal entry when that
/// exceeds one.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// Coupling constants shared by drift, noise and the integrator.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Couplings {
    pub kappa: f64,
    pub delta_c: f64,
    pub u0: f64,
    pub gamma0: f64,
    pub eta_eff: Complex64,
    /// U₀(η/g)² = η²Δ_A/(Δ_A²+γ²): depth scale of the pump lattice.
    pub pump_lattice: f64,
    /// √Γ₀.
    pub sqrt_gamma0: f64,
    /// √Γ₀ η/g = η √(γ/(Δ_A²+γ²)).
    pub pump_amp: f64,
    pub omega_rec: f64,
    pub u2: [f64; 2],
}

impl Couplings {
    pub fn new(p: &PhysicalParams, d: &DerivedParams) -> Self {
        let denom = p.delta_a * p.delta_a + p.gamma * p.gamma;
        Self {
            kappa: p.kappa,
            delta_c: d.delta_c,
            u0: d.u0,
            gamma0: d.gamma0,
            eta_eff: d.eta_eff,
            pump_lattice: p.eta * p.eta * p.delta_a / denom,
            sqrt_gamma0: d.gamma0.sqrt(),
            pump_amp: p.eta * (p.gamma / denom).sqrt(),
            omega_rec: p.omega_rec,
            u2: [p.u2_x, p.u2_z],
        }
    }

    /// 2 Im(η_eff* α), the amplitude of the interference force.
    #[inline]
    pub fn interference(&self, alpha: Complex64) -> f64 {
        2.0 * (self.eta_eff.conj() * alpha).im
    }
}

/// Trigonometric data of one atom, computed once per evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AtomLocal {
    pub sx: f64,
    pub cx: f64,
    pub sz: f64,
    pub cz: f64,
}

impl AtomLocal {
    #[inline]
    pub fn new(pos: [f64; 2]) -> Self {
        let (sx, cx) = pos[0].sin_cos();
        let (sz, cz) = pos[1].sin_cos();
        Self { sx, cx, sz, cz }
    }

    /// Deterministic force (dp_x/dt, dp_z/dt).
    #[inline]
    pub fn force(&self, c: &Couplings, alpha_sq: f64, interference: f64) -> [f64; 2] {
        [
            2.0 * c.pump_lattice * self.cx * self.sx - interference * self.sx * self.cz,
            2.0 * c.u0 * alpha_sq * self.cz * self.sz - interference * self.cx * self.sz,
        ]
    }

    /// √Γ₀·E(r).
    #[inline]
    pub fn scaled_field(&self, c: &Couplings, alpha: Complex64) -> Complex64 {
        alpha * (c.sqrt_gamma0 * self.cz) + c.pump_amp * self.cx
    }

    /// √Γ₀·∂_n E(r) for n = x, z (derivatives with respect to kx, kz).
    #[inline]
    pub fn scaled_gradient(&self, c: &Couplings, alpha: Complex64) -> [Complex64; 2] {
        [
            Complex64::new(-c.pump_amp * self.sx, 0.0),
            alpha * (-c.sqrt_gamma0 * self.sz),
        ]
    }

    /// Amplitudes A_n such that, for a unit complex Gaussian w shared with the
    /// field noise √Γ₀ cos kz · w, the real force noise 2 Re(A_n w) carries
    /// exactly the cross correlation iΓ₀ ∂_nE cos kz and the gradient part
    /// of the momentum correlations.
    #[inline]
    pub fn source_amplitudes(&self, c: &Couplings, alpha: Complex64) -> [Complex64; 2] {
        let grad = self.scaled_gradient(c, alpha);
        let minus_i = Complex64::new(0.0, -1.0);
        [minus_i * grad[0].conj(), minus_i * grad[1].conj()]
    }

    /// Standard deviations of the spontaneous-recoil kicks along x, z.
    #[inline]
    pub fn recoil_std(&self, c: &Couplings, alpha: Complex64) -> [f64; 2] {
        let e2 = self.scaled_field(c, alpha).norm_sqr();
        [(2.0 * e2 * c.u2[0]).sqrt(), (2.0 * e2 * c.u2[1]).sqrt()]
    }
}

/// Deterministic part of the equations of motion.
pub fn drift(s: &SystemState, p: &PhysicalParams, d: &DerivedParams) -> Result<DriftVector> {
    s.check_arity(p)?;
    let c = Couplings::new(p, d);
    let alpha_sq = s.alpha.norm_sqr();
    let interference = c.interference(s.alpha);
    let mut source = 0.0;
    let mut bunch = 0.0;
    let mut d_mom = Vec::with_capacity(s.n_atoms());
    for &pos in &s.pos {
        let a = AtomLocal::new(pos);
        source += a.cz * a.cx;
        bunch += a.cz * a.cz;
        d_mom.push(a.force(&c, alpha_sq, interference));
    }
    let d_pos = s
        .mom
        .iter()
        .map(|m| [2.0 * c.omega_rec * m[0], 2.0 * c.omega_rec * m[1]])
        .collect();
    let rate = Complex64::new(-(c.kappa + c.gamma0 * bunch), c.delta_c - c.u0 * bunch);
    Ok(DriftVector {
        d_alpha: rate * s.alpha - c.eta_eff * source,
        d_pos,
        d_mom,
    })
}

/// Noise correlations evaluated at `s`, with the assembled real covariance
/// checked for positive semidefiniteness. The check diagonalizes a
/// (2+2N)-dimensional matrix; the integrator samples through
/// [`crate::integrator`]'s structured factor and does not call this.
pub fn noise_covariance(
    s: &SystemState,
    p: &PhysicalParams,
    d: &DerivedParams,
    mode: NoiseMode,
) -> Result<NoiseCovariance> {
    let cov = noise_covariance_unchecked(s, p, d, mode)?;
    let scale = cov
        .atoms
        .iter()
        .flat_map(|a| [a.mom[0][0], a.mom[1][1]])
        .fold(0.5 * cov.field_var, f64::max)
        .max(1.0);
    let min_eig = cov.min_eigenvalue();
    if min_eig < -PSD_TOLERANCE * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: min_eig,
        });
    }
    Ok(cov)
}

/// As [`noise_covariance`] without the eigenvalue check.
pub fn noise_covariance_unchecked(
    s: &SystemState,
    p: &PhysicalParams,
    d: &DerivedParams,
    mode: NoiseMode,
) -> Result<NoiseCovariance> {
    s.check_arity(p)?;
    let c = Couplings::new(p, d);
    if mode == NoiseMode::Off {
        return Ok(NoiseCovariance {
            field_var: 0.0,
            atoms: vec![
                AtomNoise {
                    mom: [[0.0; 2]; 2],
                    cross: [Complex64::new(0.0, 0.0); 2],
                };
                s.n_atoms()
            ],
        });
    }
    let mut field_var = c.kappa;
    let atoms = s
        .pos
        .iter()
        .map(|&pos| {
            let a = AtomLocal::new(pos);
            field_var += c.gamma0 * a.cz * a.cz;
            let e2 = a.scaled_field(&c, s.alpha).norm_sqr();
            let grad = a.scaled_gradient(&c, s.alpha);
            let mut mom = [[0.0; 2]; 2];
            for n in 0..2 {
                for m in 0..2 {
                    mom[n][m] = 2.0 * (grad[n].conj() * grad[m]).re;
                }
                mom[n][n] += 2.0 * e2 * c.u2[n];
            }
            let i = Complex64::new(0.0, 1.0);
            let cross = match mode {
                NoiseMode::Full => [
                    i * grad[0] * (c.sqrt_gamma0 * a.cz),
                    i * grad[1] * (c.sqrt_gamma0 * a.cz),
                ],
                _ => [Complex64::new(0.0, 0.0); 2],
            };
            AtomNoise { mom, cross }
        })
        .collect();
    Ok(NoiseCovariance { field_var, atoms })
}

/// Field amplitude that makes dα/dt vanish for frozen atoms and no noise.
/// An empty position list gives zero.
pub fn steady_state_field(
    positions: &[[f64; 2]],
    p: &PhysicalParams,
    d: &DerivedParams,
) -> Complex64 {
    let mut source = 0.0;
    let mut bunch = 0.0;
    for &pos in positions {
        let a = AtomLocal::new(pos);
        source += a.cz * a.cx;
        bunch += a.cz * a.cz;
    }
    let denom = Complex64::new(p.kappa + d.gamma0 * bunch, -(d.delta_c - d.u0 * bunch));
    -d.eta_eff * source / denom
}
