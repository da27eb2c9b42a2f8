//! Zero-temperature mean-field density profiles: a Thomas–Fermi condensate
//! and the fermion cloud in its mean field.
//!
//! Computed in oscillator units (energies in ħω, lengths in
//! `a_ho = √(ħ/Mω)`, densities in `a_ho⁻³`); [`MeanFieldInput`] converts.
//! The boson coupling is `g = 4πħ²a_b/M`, i.e. `4π a_b/a_ho` in these
//! units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trap::HBAR;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldInput {
    pub n_b: f64,
    pub n_f: f64,
    /// Boson-boson scattering length (m).
    pub a_b: f64,
    /// Boson-fermion scattering length (m).
    pub a_bf: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Trap angular frequency (rad/s).
    pub omega: f64,
}

impl MeanFieldInput {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_b >= 0.0 && self.n_f >= 0.0) {
            return Err(Error::domain("particle numbers must be nonnegative"));
        }
        if !(self.mass > 0.0 && self.omega > 0.0) {
            return Err(Error::domain("mass and trap frequency must be positive"));
        }
        if !(self.a_b > 0.0) {
            return Err(Error::Unsupported(format!(
                "a_b = {} m: an attractive or free condensate has no Thomas-Fermi profile",
                self.a_b
            )));
        }
        if self.a_bf < -self.a_b {
            return Err(Error::Unsupported(format!(
                "a_bf = {} m is more attractive than -a_b; the mixture may be unstable",
                self.a_bf
            )));
        }
        Ok(())
    }

    pub fn oscillator_length(&self) -> f64 {
        (HBAR / (self.mass * self.omega)).sqrt()
    }

    /// `a_b/a_ho`.
    pub fn a_tilde(&self) -> f64 {
        self.a_b / self.oscillator_length()
    }

    /// `a_bf/a_b`.
    pub fn beta(&self) -> f64 {
        self.a_bf / self.a_b
    }

    pub fn energy_quantum(&self) -> f64 {
        HBAR * self.omega
    }
}

/// Thomas–Fermi chemical potential in units of ħω,
/// `μ = (15 N_b a_b/a_ho)^{2/5}/2`.
pub fn tf_mu(input: &MeanFieldInput) -> Result<f64> {
    input.validate()?;
    if !(input.n_b > 0.0) {
        return Err(Error::domain("the Thomas-Fermi profile needs N_b > 0"));
    }
    Ok(0.5 * (15.0 * input.n_b * input.a_tilde()).powf(0.4))
}

/// Thomas–Fermi radius `√(2μ)` in oscillator lengths.
pub fn tf_radius(mu: f64) -> f64 {
    (2.0 * mu).sqrt()
}

/// Condensate density `max(0, μ - r²/2)/g` at radius `r`.
pub fn tf_density(input: &MeanFieldInput, mu: f64, r: f64) -> f64 {
    (mu - 0.5 * r * r).max(0.0) / (4.0 * std::f64::consts::PI * input.a_tilde())
}

/// Ideal Fermi energy `(6N_f)^{1/3}` in ħω.
pub fn ideal_fermi_energy(n_f: f64) -> f64 {
    (6.0 * n_f).cbrt()
}

/// Fermion cloud in the condensate's mean field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermionMeanField {
    pub mu: f64,
    pub beta: f64,
    /// Fermi energy fixed by the fermion number, in ħω.
    pub e_fermi: f64,
    /// `R_F = √(2E_F)` of the ideal gas, the length unit of scaled output.
    pub r_fermi_ideal: f64,
    /// Set when `a_bf ≥ a_b`: the condensate pushes fermions out of the
    /// centre.
    pub inverted: bool,
}

impl FermionMeanField {
    /// Potential seen by the fermions. Inside the condensate it is
    /// `(1-β)V + βμ`; for `β < 1` that form is used everywhere, for `β ≥ 1`
    /// the condensate term is dropped outside the Thomas–Fermi radius.
    fn potential(&self, r: f64) -> f64 {
        let v = 0.5 * r * r;
        if self.inverted {
            v + self.beta * (self.mu - v).max(0.0)
        } else {
            (1.0 - self.beta) * v + self.beta * self.mu
        }
    }

    /// Local-density fermion density `(2(E_F - V))^{3/2}/6π²`.
    pub fn density(&self, r: f64) -> f64 {
        local_density(self.e_fermi, self.potential(r))
    }

    /// Radius beyond which the density vanishes.
    pub fn support_radius(&self) -> f64 {
        if self.inverted {
            (2.0 * self.e_fermi).sqrt()
        } else {
            (2.0 * (self.e_fermi - self.beta * self.mu).max(0.0) / (1.0 - self.beta)).sqrt()
        }
    }
}

fn local_density(e_fermi: f64, v: f64) -> f64 {
    let k = 2.0 * (e_fermi - v);
    if k <= 0.0 {
        0.0
    } else {
        k.powf(1.5) / (6.0 * std::f64::consts::PI * std::f64::consts::PI)
    }
}

/// 8-point Gauss–Legendre nodes and weights on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// `4π∫r²n(r)dr` over `[lo, hi]` on `panels` Gauss–Legendre panels.
pub fn radial_integral(n: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for &(x, w) in &GL8 {
            let r = mid + 0.5 * h * x;
            total += w * r * r * n(r);
        }
    }
    4.0 * std::f64::consts::PI * total * 0.5 * h
}

fn fermion_number(field: &FermionMeanField) -> f64 {
    let edge = field.support_radius();
    if field.inverted {
        // The potential has a kink at the Thomas-Fermi radius.
        let r_tf = tf_radius(field.mu).min(edge);
        radial_integral(|r| field.density(r), 0.0, r_tf, 2000)
            + radial_integral(|r| field.density(r), r_tf, edge, 2000)
    } else {
        radial_integral(|r| field.density(r), 0.0, edge, 4000)
    }
}

/// Fermion profile in the condensate mean field with `E_F` fixed by
/// `∫n_f = N_f` (bisection on `[0, 10·E_F⁰]`).
pub fn mf_fermion_profile(input: &MeanFieldInput) -> Result<FermionMeanField> {
    let mu = tf_mu(input)?;
    if !(input.n_f > 0.0) {
        return Err(Error::domain("the fermion profile needs N_f > 0"));
    }
    let beta = input.beta();
    let e0 = ideal_fermi_energy(input.n_f);
    let mut field = FermionMeanField {
        mu,
        beta,
        e_fermi: e0,
        r_fermi_ideal: (2.0 * e0).sqrt(),
        inverted: beta >= 1.0,
    };
    let (mut lo, mut hi) = (0.0, 10.0 * e0.max(mu));
    field.e_fermi = hi;
    if fermion_number(&field) < input.n_f {
        return Err(Error::NoConvergence {
            iterations: 0,
            detail: "fermi energy bracket too small".into(),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * hi {
            break;
        }
        field.e_fermi = mid;
        if fermion_number(&field) < input.n_f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    field.e_fermi = 0.5 * (lo + hi);
    Ok(field)
}

/// The broadened profile's bracket
/// `1 - β·μ/E_F - (1-β)x²` at `x = r/R_F`, and its zero `x²`.
pub fn molmer_bracket(beta: f64, mu_over_ef: f64, x: f64) -> f64 {
    1.0 - beta * mu_over_ef - (1.0 - beta) * x * x
}

/// Squared scaled radius where [`molmer_bracket`] vanishes (`β < 1`).
pub fn molmer_support_sq(beta: f64, mu_over_ef: f64) -> Result<f64> {
    if beta >= 1.0 {
        return Err(Error::domain("the bracket has no outer zero for a_bf >= a_b"));
    }
    Ok((1.0 - beta * mu_over_ef) / (1.0 - beta))
}

/// Ratio of the condensate mean-field energy to the level spacing,
/// `(1/√π)(a_b/l)N₀` with `l = √(ħ/2Mω)`.
pub fn mf_ratio(n0: f64, a_b: f64, mass: f64, omega: f64) -> Result<f64> {
    if !(n0 >= 0.0) {
        return Err(Error::domain(format!("condensate number must be nonnegative, got {n0}")));
    }
    if !(mass > 0.0 && omega > 0.0) {
        return Err(Error::domain("mass and trap frequency must be positive"));
    }
    let l = (HBAR / (2.0 * mass * omega)).sqrt();
    Ok(a_b / l * n0 / std::f64::consts::PI.sqrt())
}

/// Overlay of the three zero-temperature profiles on a common radial grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub mu: f64,
    pub fermions: FermionMeanField,
    /// Radii in oscillator lengths.
    pub radii: Vec<f64>,
    pub n_b_tf: Vec<f64>,
    pub n_f_ideal: Vec<f64>,
    pub n_f_mf: Vec<f64>,
}

pub fn overlay(input: &MeanFieldInput, points: usize) -> Result<Overlay> {
    if points < 2 {
        return Err(Error::domain("an overlay needs at least two points"));
    }
    let fermions = mf_fermion_profile(input)?;
    let mu = fermions.mu;
    let r_max = 1.5 * fermions.support_radius().max(tf_radius(mu)).max(fermions.r_fermi_ideal);
    let radii: Vec<f64> = (0..points).map(|k| r_max * k as f64 / (points - 1) as f64).collect();
    let e0 = ideal_fermi_energy(input.n_f);
    Ok(Overlay {
        mu,
        n_b_tf: radii.iter().map(|&r| tf_density(input, mu, r)).collect(),
        n_f_ideal: radii.iter().map(|&r| local_density(e0, 0.5 * r * r)).collect(),
        n_f_mf: radii.iter().map(|&r| fermions.density(r)).collect(),
        fermions,
        radii,
    })
}
