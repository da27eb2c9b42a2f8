//! Reporting quantities derived from occupations: entropy, condensate
//! fraction, occupancy curves and semiclassical density profiles.
//!
//! Lengths are in oscillator units `√(ħ/Mω)`, energies in `ħω`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qbe::MixtureState;
use crate::statmech::Species;
use crate::trap::level_degeneracy;

/// `Σ g[(1+b)ln(1+b) - b ln b] + Σ g[-f ln f - (1-f)ln(1-f)]`.
pub fn entropy(state: &MixtureState) -> f64 {
    let bose: f64 = state
        .b
        .iter()
        .enumerate()
        .filter(|(_, &b)| b > 0.0)
        .map(|(e, &b)| level_degeneracy(e) * (b.ln_1p() + b * (1.0 / b).ln_1p()))
        .sum();
    let fermi: f64 = state
        .f
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0.0 && f < 1.0)
        .map(|(e, &f)| level_degeneracy(e) * (-f * f.ln() - (1.0 - f) * (-f).ln_1p()))
        .sum();
    bose + fermi
}

/// Share of the bosons in the ground level.
pub fn condensate_fraction(state: &MixtureState) -> f64 {
    let n = state.n_b();
    if n > 0.0 {
        state.b[0] / n
    } else {
        0.0
    }
}

/// `(E_n, occupation per state)` for one species.
pub fn occupancy_curve(state: &MixtureState, species: Species) -> Vec<(f64, f64)> {
    let occ = match species {
        Species::Bose => &state.b,
        Species::Fermi => &state.f,
    };
    occ.iter().enumerate().map(|(e, &o)| (e as f64, o)).collect()
}

/// Semiclassical density of atoms whose occupation per state depends on
/// energy only.
///
/// Level `e` is placed at its full energy `e + 3/2` above the trap bottom.
/// Between levels the occupation is interpolated linearly; below the lowest
/// level it is held at the ground value and past the highest level it falls
/// to zero over one level spacing. The density of states of this continuous
/// occupation is `E²/2`; the result is rescaled so the integrated density
/// equals `Σ g_n F_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiclassicalDensity {
    /// Segment start energies and linear coefficients `F = α + βE`.
    segments: Vec<(f64, f64, f64, f64)>,
    scale: f64,
    number: f64,
}

const ZERO_POINT: f64 = 1.5;

impl SemiclassicalDensity {
    pub fn new(occupations: &[f64]) -> Result<Self> {
        if occupations.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::domain("occupations must be nonnegative and finite"));
        }
        let number: f64 = occupations
            .iter()
            .enumerate()
            .map(|(e, &o)| level_degeneracy(e) * o)
            .sum();
        let last = occupations.iter().rposition(|&x| x > 0.0);
        let mut segments = Vec::new();
        if let Some(last) = last {
            let knot = |e: usize| e as f64 + ZERO_POINT;
            segments.push((0.0, knot(0), occupations[0], 0.0));
            for e in 0..last {
                let (e0, e1) = (knot(e), knot(e + 1));
                let (f0, f1) = (occupations[e], occupations[e + 1]);
                let beta = (f1 - f0) / (e1 - e0);
                segments.push((e0, e1, f0 - beta * e0, beta));
            }
            let e0 = knot(last);
            let f0 = occupations[last];
            segments.push((e0, e0 + 1.0, f0 + f0 * e0, -f0));
        }
        // ∫ (E²/2)(α + βE) dE over every segment.
        let dos_integral: f64 = segments
            .iter()
            .map(|&(lo, hi, a, b)| {
                let prim = |e: f64| a * e.powi(3) / 6.0 + b * e.powi(4) / 8.0;
                prim(hi) - prim(lo)
            })
            .sum();
        let scale = if dos_integral > 0.0 { number / dos_integral } else { 0.0 };
        Ok(SemiclassicalDensity {
            segments,
            scale,
            number,
        })
    }

    /// `Σ g_n F_n`, the integral of the density.
    pub fn number(&self) -> f64 {
        self.number
    }

    /// Largest energy with nonzero occupation.
    pub fn energy_top(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.1)
    }

    /// Density at radius `r`.
    pub fn density(&self, r: f64) -> f64 {
        let v = 0.5 * r * r;
        let mut total = 0.0;
        for &(lo, hi, a, b) in &self.segments {
            if hi <= v {
                continue;
            }
            // ∫ √u (α + βV + βu) du with u = E - V.
            let c = a + b * v;
            let prim = |u: f64| c * (2.0 / 3.0) * u.powf(1.5) + b * 0.4 * u.powf(2.5);
            total += prim(hi - v) - prim((lo - v).max(0.0));
        }
        let pref = std::f64::consts::SQRT_2 / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
        (self.scale * pref * total).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialProfile {
    pub species: Species,
    /// Radii in oscillator lengths.
    pub radii: Vec<f64>,
    /// Radii in units of `R_F`.
    pub radii_scaled: Vec<f64>,
    pub density: Vec<f64>,
    /// `n·R_F³/N`.
    pub density_scaled: Vec<f64>,
    /// Integrated atom number.
    pub number: f64,
    /// `R_F = √(2E_F)` with `E_F = (6N)^{1/3}` of the current number.
    pub r_fermi: f64,
}

pub const PROFILE_POINTS: usize = 200;

/// Radial profile on `points` uniform radii over
/// `[0, 1.5·max(R_F, thermal radius)]`.
pub fn spatial_profile(occupations: &[f64], species: Species, points: usize) -> Result<SpatialProfile> {
    if points < 2 {
        return Err(Error::domain("a profile needs at least two points"));
    }
    let dens = SemiclassicalDensity::new(occupations)?;
    let n = dens.number();
    let r_fermi = if n > 0.0 { (2.0 * (6.0 * n).cbrt()).sqrt() } else { f64::NAN };
    let mean_e = if n > 0.0 {
        occupations
            .iter()
            .enumerate()
            .map(|(e, &o)| level_degeneracy(e) * e as f64 * o)
            .sum::<f64>()
            / n
    } else {
        0.0
    };
    let thermal = (2.0 * (mean_e + ZERO_POINT)).sqrt();
    let r_max = 1.5 * r_fermi.max(thermal);
    let radii: Vec<f64> = (0..points).map(|k| r_max * k as f64 / (points - 1) as f64).collect();
    let density: Vec<f64> = radii.iter().map(|&r| dens.density(r)).collect();
    Ok(SpatialProfile {
        species,
        radii_scaled: radii.iter().map(|r| r / r_fermi).collect(),
        density_scaled: density.iter().map(|d| d * r_fermi.powi(3) / n).collect(),
        radii,
        density,
        number: n,
        r_fermi,
    })
}

/// Zero-temperature Fermi profile in scaled units,
/// `n R_F³/N = (8/π²)(1 - x²)^{3/2}` for `x = r/R_F < 1`.
pub fn fermi_sea_profile(x: f64) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    if x.abs() >= 1.0 {
        0.0
    } else {
        8.0 / pi2 * (1.0 - x * x).powf(1.5)
    }
}
