//! Harmonic-trap unit system and level spectrum.
//!
//! Energies are measured in units of `ħω` from the trap ground state, so the
//! isotropic level `n = 1, 2, ...` sits at `E_n = n - 1` with degeneracy
//! `n(n+1)/2`. Temperatures are `k_B T / ħω` and times are in units of the
//! boson-fermion collision time `τ₀`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;

/// Riemann ζ(3), the Bose-Einstein function g₃(1).
pub const ZETA3: f64 = 1.202_056_903_159_594_2;

/// Prefactor convention for the s-wave cross sections.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaConvention {
    /// `σ_bb = 8πa_b²`, `σ_bf = 4πa_bf²`.
    #[default]
    Standard,
    /// `σ_bb = 8π²a_b²`, `σ_bf = 4π²a_bf²`.
    PaperLiteral,
}

/// Physical parameters of the trap and the two species.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSpec {
    /// Atomic mass (kg), shared by both species.
    pub mass: f64,
    /// Geometric mean angular trap frequency (rad/s).
    pub omega: f64,
    /// Boson-boson s-wave scattering length (m).
    pub a_b: f64,
    /// Boson-fermion s-wave scattering length (m).
    pub a_bf: f64,
    #[serde(default)]
    pub sigma_convention: SigmaConvention,
}

impl TrapSpec {
    pub fn new(mass: f64, omega: f64, a_b: f64, a_bf: f64, sigma_convention: SigmaConvention) -> Result<Self> {
        let spec = TrapSpec {
            mass,
            omega,
            a_b,
            a_bf,
            sigma_convention,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::domain(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::domain(format!("omega must be positive, got {}", self.omega)));
        }
        if !self.a_b.is_finite() || !self.a_bf.is_finite() {
            return Err(Error::domain("scattering lengths must be finite"));
        }
        if self.a_bf == 0.0 {
            return Err(Error::domain("a_bf = 0 leaves the collision time undefined"));
        }
        Ok(())
    }

    fn sigma_prefactor(&self) -> f64 {
        match self.sigma_convention {
            SigmaConvention::Standard => std::f64::consts::PI,
            SigmaConvention::PaperLiteral => std::f64::consts::PI * std::f64::consts::PI,
        }
    }

    /// Boson-boson cross section (m²).
    pub fn sigma_bb(&self) -> f64 {
        8.0 * self.sigma_prefactor() * self.a_b * self.a_b
    }

    /// Boson-fermion cross section (m²).
    pub fn sigma_bf(&self) -> f64 {
        4.0 * self.sigma_prefactor() * self.a_bf * self.a_bf
    }

    /// Ratio `σ_bb / σ_bf` weighting the boson-boson collision channel.
    pub fn alpha_b(&self) -> f64 {
        self.sigma_bb() / self.sigma_bf()
    }

    /// `ħω` in joules.
    pub fn energy_quantum(&self) -> f64 {
        HBAR * self.omega
    }

    /// Oscillator length `√(ħ/mω)` in metres.
    pub fn oscillator_length(&self) -> f64 {
        (HBAR / (self.mass * self.omega)).sqrt()
    }

    /// Converts a dimensionless temperature to kelvin.
    pub fn kelvin(&self, t_bar: f64) -> f64 {
        t_bar * self.energy_quantum() / K_B
    }

    /// Converts dimensionless time to seconds.
    pub fn seconds(&self, tau: f64) -> f64 {
        tau * tau0(self)
    }
}

/// Collision time `τ₀ = π²ħ³ / ((ħω)² m σ_bf)` in seconds.
pub fn tau0(spec: &TrapSpec) -> f64 {
    let hw = spec.energy_quantum();
    std::f64::consts::PI.powi(2) * HBAR.powi(3) / (hw * hw * spec.mass * spec.sigma_bf())
}

/// Names accepted by [`trap_preset`].
pub const TRAP_PRESETS: &[&str] = &["K40-K39"];

/// Named parameter sets.
///
/// `K40-K39`: ⁴⁰K fermions with ³⁹K bosons, `a_b = 4.3 nm`, `a_bf = 2.5 nm`,
/// `m = 6.6e-26 kg`, `ω = 400 rad/s`.
pub fn trap_preset(name: &str) -> Option<TrapSpec> {
    match name {
        "K40-K39" => Some(TrapSpec {
            mass: 6.6e-26,
            omega: 400.0,
            a_b: 4.3e-9,
            a_bf: 2.5e-9,
            sigma_convention: SigmaConvention::Standard,
        }),
        _ => None,
    }
}

/// Degeneracy of the 0-based level `e` (energy `e`).
#[inline]
pub(crate) fn level_degeneracy(e: usize) -> f64 {
    let e = e as f64;
    0.5 * (e + 1.0) * (e + 2.0)
}

/// Degeneracy `n(n+1)/2` of the 1-based level `n`.
pub fn degeneracy(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("level index starts at 1"));
    }
    Ok(level_degeneracy(n - 1))
}

/// Semiclassical density of states `E²/2` per unit `ħω`.
pub fn density_of_states(energy: f64) -> Result<f64> {
    if !(energy >= 0.0) {
        return Err(Error::domain(format!("energy must be nonnegative, got {energy}")));
    }
    Ok(0.5 * energy * energy)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FermiConvention {
    /// `(6N)^{1/3}` from the continuum density of states.
    Continuum,
    /// Shell filling of the discrete spectrum, interpolated within the
    /// partially filled shell.
    #[default]
    Discrete,
}

/// Dimensionless Fermi temperature `T̄_F` of `n_f` fermions.
pub fn fermi_level(n_f: f64, convention: FermiConvention) -> Result<f64> {
    if !(n_f >= 1.0) {
        return Err(Error::domain(format!("fermi_level needs N_f >= 1, got {n_f}")));
    }
    Ok(match convention {
        FermiConvention::Continuum => (6.0 * n_f).cbrt(),
        FermiConvention::Discrete => filled_shells(n_f) - 1.0,
    })
}

/// Real root `n` of `n(n+1)(n+2)/6 = count`.
///
/// With `x = n + 1` the equation is the depressed cubic `x³ - x = 6 count`,
/// solved by Cardano's formula (one real root for `count > 0`).
pub(crate) fn filled_shells(count: f64) -> f64 {
    let q = 3.0 * count;
    let disc = (q * q - 1.0 / 27.0).sqrt();
    // The two cube roots multiply to 1/3; avoid the cancelling one.
    let u = (q + disc).cbrt();
    let mut x = u + 1.0 / (3.0 * u);
    x -= (x * x * x - x - 6.0 * count) / (3.0 * x * x - 1.0);
    x - 1.0
}

/// Dimensionless condensation temperature `(N_b/ζ(3))^{1/3}`.
///
/// The conventional rounded constant 1.202 is used for ζ(3).
pub fn critical_temperature(n_b: f64) -> Result<f64> {
    if !(n_b >= 1.0) {
        return Err(Error::domain(format!("critical_temperature needs N_b >= 1, got {n_b}")));
    }
    Ok((n_b / 1.202).cbrt())
}

/// Truncated, equally spaced level spectrum `E = 0, 1, ..., n_max - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyGrid {
    n_max: usize,
}

impl EnergyGrid {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::domain("energy grid needs at least one level"));
        }
        Ok(EnergyGrid { n_max })
    }

    /// Grid wide enough that a gas of `count` particles at temperature
    /// `t_bar` leaves less than 1e-8 of its weight outside it.
    ///
    /// The cutoff is the degenerate filling energy plus 30 `T̄`; the
    /// Boltzmann tail beyond `x T̄` carries `Γ(3, x)/2` of the weight, below
    /// 1e-9 for `x = 30`.
    pub fn covering(count: f64, t_bar: f64) -> Self {
        let fill = if count >= 1.0 { filled_shells(count) } else { 1.0 };
        let top = fill + 30.0 * t_bar.max(0.0) + 8.0;
        EnergyGrid { n_max: top.ceil() as usize }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Energy of the 0-based level `e`.
    #[inline]
    pub fn energy(&self, e: usize) -> f64 {
        e as f64
    }

    /// Degeneracy of the 0-based level `e`.
    #[inline]
    pub fn degeneracy(&self, e: usize) -> f64 {
        level_degeneracy(e)
    }

    /// Total number of single-particle states on the grid.
    pub fn capacity(&self) -> f64 {
        cumulative_states(self.n_max)
    }
}

/// `Σ_{n≤m} g_n = m(m+1)(m+2)/6`.
pub fn cumulative_states(m: usize) -> f64 {
    let m = m as f64;
    m * (m + 1.0) * (m + 2.0) / 6.0
}
