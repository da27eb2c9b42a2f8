//! Ideal-gas equilibrium on the discrete level spectrum.
//!
//! All sums run directly over the grid levels; no continuum polylogarithms.
//! Fugacities are carried as `ln z`, which keeps a nearly condensed Bose gas
//! (`z = 1 - 1/N₀`) resolvable.

mod equilibrium;
mod fit;

pub use equilibrium::{
    approx_t_classical, approx_t_degenerate, equilibrium_temperature, EquilibriumMethod, EquilibriumOptions,
    EquilibriumResult, G4_AT_ONE,
};
pub use fit::fit_thermo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trap::{level_degeneracy, EnergyGrid};

/// Bracket width at which the bisection solvers stop.
pub(crate) const BISECTION_WIDTH: f64 = 1e-12;
const MAX_BISECTION: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Bose,
    Fermi,
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Species::Bose => "bose",
            Species::Fermi => "fermi",
        })
    }
}

/// Fugacity `z`, stored as `ln z`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Fugacity(f64);

impl Fugacity {
    pub fn new(z: f64) -> Result<Self> {
        if !(z > 0.0) {
            return Err(Error::domain(format!("fugacity must be positive, got {z}")));
        }
        Ok(Fugacity(z.ln()))
    }

    pub const fn from_ln(ln_z: f64) -> Self {
        Fugacity(ln_z)
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }
}

/// Equilibrium label `(z, T̄)` for one species.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoFit {
    pub species: Species,
    pub z: Fugacity,
    pub t_bar: f64,
    /// Atoms in excess of what the excited levels hold at `z = 1`; zero for
    /// fermions and for bosons above condensation.
    pub condensate_number: f64,
}

/// Bose-Einstein occupation `1/(z⁻¹e^{E/T} - 1)`.
#[inline]
pub fn bose_occupation(energy: f64, ln_z: f64, t_bar: f64) -> f64 {
    1.0 / (energy / t_bar - ln_z).exp_m1()
}

/// Fermi-Dirac occupation `1/(z⁻¹e^{E/T} + 1)`.
#[inline]
pub fn fermi_occupation(energy: f64, ln_z: f64, t_bar: f64) -> f64 {
    logistic(energy / t_bar - ln_z)
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x > 0.0 {
        let t = (-x).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Occupation of level `e` for either statistics.
#[inline]
pub fn occupation(species: Species, energy: f64, z: Fugacity, t_bar: f64) -> f64 {
    match species {
        Species::Bose => bose_occupation(energy, z.ln(), t_bar),
        Species::Fermi => fermi_occupation(energy, z.ln(), t_bar),
    }
}

/// Particle number and total energy of an equilibrium distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupancySums {
    pub number: f64,
    pub energy: f64,
    /// Set for bosons at `z = 1`: the divergent ground level was left out
    /// and `number` counts the excited levels only.
    pub ground_excluded: bool,
}

/// Direct summation of `Σ g n(E)` and `Σ g E n(E)` over the grid.
pub fn occupancy_sums(species: Species, z: Fugacity, t_bar: f64, grid: &EnergyGrid) -> Result<OccupancySums> {
    if !(t_bar > 0.0) {
        return Err(Error::domain(format!("temperature must be positive, got {t_bar}")));
    }
    match species {
        Species::Fermi => {
            let (number, energy) = fermi_moments(z.ln(), t_bar, grid.n_max());
            Ok(OccupancySums {
                number,
                energy,
                ground_excluded: false,
            })
        }
        Species::Bose => {
            if z.ln() > 0.0 {
                return Err(Error::domain(format!("bose fugacity must not exceed 1, got {}", z.value())));
            }
            if z.ln() == 0.0 {
                let (number, energy) = bose_moments_from(1, 0.0, t_bar, grid.n_max());
                return Ok(OccupancySums {
                    number,
                    energy,
                    ground_excluded: true,
                });
            }
            let (number, energy) = bose_moments_from(0, -z.ln(), t_bar, grid.n_max());
            Ok(OccupancySums {
                number,
                energy,
                ground_excluded: false,
            })
        }
    }
}

/// `(N, E)` of a Fermi-Dirac distribution on the first `levels` levels.
pub(crate) fn fermi_moments(ln_z: f64, t_bar: f64, levels: usize) -> (f64, f64) {
    let mut n = 0.0;
    let mut e_sum = 0.0;
    for e in 0..levels {
        let x = e as f64 / t_bar - ln_z;
        if x > 746.0 {
            break;
        }
        let occ = level_degeneracy(e) * logistic(x);
        n += occ;
        e_sum += occ * e as f64;
    }
    (n, e_sum)
}

/// `(N, E)` of a Bose-Einstein distribution with `z = e^{-eps}`, summed
/// from level `first`.
pub(crate) fn bose_moments_from(first: usize, eps: f64, t_bar: f64, levels: usize) -> (f64, f64) {
    let mut n = 0.0;
    let mut e_sum = 0.0;
    for e in first..levels {
        let x = e as f64 / t_bar + eps;
        if x > 746.0 {
            break;
        }
        let occ = level_degeneracy(e) / x.exp_m1();
        n += occ;
        e_sum += occ * e as f64;
    }
    (n, e_sum)
}

/// Particles the excited levels hold at `z = 1`.
pub(crate) fn bose_excited_capacity(t_bar: f64, levels: usize) -> f64 {
    if t_bar <= 0.0 {
        return 0.0;
    }
    bose_moments_from(1, 0.0, t_bar, levels).0
}

/// Bisection on a monotone increasing function: returns `x` in `[lo, hi]`
/// with `f(x) ≈ 0`. Stops when the bracket is narrower than `width`
/// (relative to `max(1, |x|)`).
pub(crate) fn bisect_increasing(mut lo: f64, mut hi: f64, width: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width * mid.abs().max(1.0) || mid == lo || mid == hi {
            return mid;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `N_F(z, T̄) = n_f` on the grid.
pub fn solve_fermi_fugacity(n_f: f64, t_bar: f64, grid: &EnergyGrid) -> Result<Fugacity> {
    fermi_ln_z(n_f, t_bar, grid.n_max()).map(Fugacity::from_ln)
}

pub(crate) fn fermi_ln_z(n_f: f64, t_bar: f64, levels: usize) -> Result<f64> {
    if !(n_f > 0.0) || !n_f.is_finite() {
        return Err(Error::domain(format!("fermion number must be positive, got {n_f}")));
    }
    if !(t_bar > 0.0) || !t_bar.is_finite() {
        return Err(Error::domain(format!("temperature must be positive, got {t_bar}")));
    }
    let capacity = crate::trap::cumulative_states(levels);
    if n_f >= capacity {
        return Err(Error::infeasible(format!(
            "{n_f} fermions exceed the {capacity} states of a {levels}-level grid"
        )));
    }
    let count = |ln_z: f64| fermi_moments(ln_z, t_bar, levels).0 - n_f;
    let (lo, hi) = expand_bracket(n_f.ln() - 3.0 * t_bar.ln(), count);
    let ln_z = bisect_increasing(lo, hi, BISECTION_WIDTH, count);
    Ok(polish(ln_z, |x| {
        let (n, slope) = fermi_number_slope(x, t_bar, levels);
        (n - n_f, slope)
    }))
}

/// A few Newton steps after bisection, each kept only if it shrinks the
/// residual. `f` returns the residual and its derivative.
fn polish(mut x: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    let (mut r, mut d) = f(x);
    for _ in 0..4 {
        if r == 0.0 || !(d != 0.0) {
            break;
        }
        let trial = x - r / d;
        let (rt, dt) = f(trial);
        if !(rt.abs() < r.abs()) {
            break;
        }
        x = trial;
        r = rt;
        d = dt;
    }
    x
}

/// `N` and `dN/d ln z` of a Fermi-Dirac distribution.
fn fermi_number_slope(ln_z: f64, t_bar: f64, levels: usize) -> (f64, f64) {
    let mut n = 0.0;
    let mut slope = 0.0;
    for e in 0..levels {
        let x = e as f64 / t_bar - ln_z;
        if x > 746.0 {
            break;
        }
        let occ = logistic(x);
        let g = level_degeneracy(e);
        n += g * occ;
        slope += g * occ * logistic(-x);
    }
    (n, slope)
}

/// `N` and `dN/d eps` of a Bose-Einstein distribution with `z = e^{-eps}`.
fn bose_number_slope(eps: f64, t_bar: f64, levels: usize) -> (f64, f64) {
    let mut n = 0.0;
    let mut slope = 0.0;
    for e in 0..levels {
        let x = e as f64 / t_bar + eps;
        if x > 746.0 {
            break;
        }
        let occ = 1.0 / x.exp_m1();
        let g = level_degeneracy(e);
        n += g * occ;
        slope -= g * occ * (1.0 + occ);
    }
    (n, slope)
}

/// Grows a bracket around `guess` until `f` changes sign. `f` must be
/// increasing.
fn expand_bracket(guess: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut lo = guess - 1.0;
    let mut hi = guess + 1.0;
    let mut step = 2.0;
    while f(lo) > 0.0 {
        hi = lo;
        lo -= step;
        step *= 2.0;
    }
    step = 2.0;
    while f(hi) < 0.0 {
        lo = hi;
        hi += step;
        step *= 2.0;
    }
    (lo, hi)
}

/// `eps = -ln z > 0` such that the full Bose sum (ground level included)
/// holds `n_b` atoms.
pub(crate) fn bose_eps(n_b: f64, t_bar: f64, levels: usize) -> f64 {
    let count = |eps: f64| bose_moments_from(0, eps, t_bar, levels).0;
    // N(eps) decreases in eps; bracket in ln eps.
    let mut lo = (1.0 / n_b).ln() - 2.0;
    while count(lo.exp()) < n_b {
        lo -= 4.0;
    }
    let mut hi = lo + 4.0;
    while count(hi.exp()) > n_b {
        lo = hi;
        hi += 4.0;
    }
    let ln_eps = bisect_increasing(lo, hi, BISECTION_WIDTH, |x| n_b - count(x.exp()));
    polish(ln_eps.exp(), |eps| {
        if eps <= 0.0 {
            return (f64::INFINITY, 1.0);
        }
        let (n, slope) = bose_number_slope(eps, t_bar, levels);
        (n - n_b, slope)
    })
}

/// What fixes the Bose state besides the particle number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoseTarget {
    Temperature(f64),
    /// Total energy, solved by alternating the energy and number equations.
    Energy(f64),
}

/// Equilibrium Bose gas of `n_b` atoms at a given temperature or energy.
pub fn solve_bose_state(n_b: f64, target: BoseTarget, grid: &EnergyGrid) -> Result<ThermoFit> {
    if !(n_b >= 1.0) || !n_b.is_finite() {
        return Err(Error::domain(format!("boson number must be at least 1, got {n_b}")));
    }
    let levels = grid.n_max();
    match target {
        BoseTarget::Temperature(t_bar) => {
            if !(t_bar >= 0.0) || !t_bar.is_finite() {
                return Err(Error::domain(format!("temperature must be nonnegative, got {t_bar}")));
            }
            if t_bar == 0.0 {
                return Ok(fully_condensed(n_b));
            }
            let eps = bose_eps(n_b, t_bar, levels);
            Ok(bose_label(n_b, eps, t_bar, levels))
        }
        BoseTarget::Energy(energy) => {
            let (t_bar, eps, _) = bose_from_energy(n_b, energy, levels, 1e-7, 10_000, None)?;
            if t_bar == 0.0 {
                return Ok(fully_condensed(n_b));
            }
            Ok(bose_label(n_b, eps, t_bar, levels))
        }
    }
}

fn fully_condensed(n_b: f64) -> ThermoFit {
    ThermoFit {
        species: Species::Bose,
        z: Fugacity::from_ln(0.0),
        t_bar: 0.0,
        condensate_number: n_b,
    }
}

pub(crate) fn bose_label(n_b: f64, eps: f64, t_bar: f64, levels: usize) -> ThermoFit {
    ThermoFit {
        species: Species::Bose,
        z: Fugacity::from_ln(-eps),
        t_bar,
        condensate_number: (n_b - bose_excited_capacity(t_bar, levels)).max(0.0),
    }
}

/// Alternates "T̄ from the energy at fixed z" and "z from the number at
/// fixed T̄" until both residuals fall below `tol`.
///
/// Returns `(T̄, eps, iterations)`.
pub(crate) fn bose_from_energy(
    n_b: f64,
    energy: f64,
    levels: usize,
    tol: f64,
    max_iterations: usize,
    start: Option<(f64, f64)>,
) -> Result<(f64, f64, usize)> {
    if !(energy >= 0.0) || !energy.is_finite() {
        return Err(Error::infeasible(format!("boson energy must be nonnegative, got {energy}")));
    }
    if energy == 0.0 {
        return Ok((0.0, 0.0, 0));
    }
    let e_max = uniform_energy(n_b, levels);
    if energy >= e_max {
        return Err(Error::infeasible(format!(
            "energy {energy} exceeds the infinite-temperature limit {e_max} of the grid"
        )));
    }
    let (mut t_bar, mut eps) = match start {
        Some((t, e)) if t > 0.0 && e > 0.0 => (t, e),
        _ => {
            let t = (energy / (3.0 * n_b)).max(1e-3);
            (t, bose_eps(n_b, t, levels))
        }
    };
    for it in 1..=max_iterations {
        // Energy is increasing in T̄ at fixed eps; bracket in ln T̄.
        let e_at = |ln_t: f64| bose_moments_from(0, eps, ln_t.exp(), levels).1;
        let mut lo = t_bar.ln() - 1.0;
        while e_at(lo) > energy {
            lo -= 2.0;
        }
        let mut hi = t_bar.ln() + 1.0;
        while e_at(hi) < energy {
            if hi > 60.0 {
                return Err(Error::infeasible(format!(
                    "energy {energy} unreachable at fugacity e^-{eps}"
                )));
            }
            hi += 2.0;
        }
        t_bar = bisect_increasing(lo, hi, BISECTION_WIDTH, |x| e_at(x) - energy).exp();
        eps = bose_eps(n_b, t_bar, levels);
        let (n, e) = bose_moments_from(0, eps, t_bar, levels);
        if ((n - n_b) / n_b).abs() < tol && ((e - energy) / energy).abs() < tol {
            return Ok((t_bar, eps, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        detail: format!("bose (T, z) iteration for N = {n_b}, E = {energy}"),
    })
}

/// Energy of `count` particles spread uniformly over the states of the
/// first `levels` levels (the infinite-temperature limit on a finite grid).
pub(crate) fn uniform_energy(count: f64, levels: usize) -> f64 {
    let mut g_sum = 0.0;
    let mut ge_sum = 0.0;
    for e in 0..levels {
        let g = level_degeneracy(e);
        g_sum += g;
        ge_sum += g * e as f64;
    }
    count * ge_sum / g_sum
}

/// Energy of `count` fermions packed into the lowest states.
pub(crate) fn fermi_ground_energy(count: f64, levels: usize) -> f64 {
    let mut left = count;
    let mut energy = 0.0;
    for e in 0..levels {
        if left <= 0.0 {
            break;
        }
        let take = level_degeneracy(e).min(left);
        energy += take * e as f64;
        left -= take;
    }
    energy
}

/// Occupation vector of an equilibrium state of `number` atoms on the
/// first `levels` levels.
pub fn equilibrium_occupations(fit: &ThermoFit, number: f64, levels: usize) -> Vec<f64> {
    if fit.t_bar == 0.0 {
        return match fit.species {
            Species::Bose => {
                let mut occ = vec![0.0; levels];
                if levels > 0 {
                    occ[0] = number;
                }
                occ
            }
            Species::Fermi => fermi_sea(number, levels),
        };
    }
    (0..levels)
        .map(|e| occupation(fit.species, e as f64, fit.z, fit.t_bar))
        .collect()
}

/// Zero-temperature Fermi sea of `n_f` atoms on `levels` levels.
pub fn fermi_sea(n_f: f64, levels: usize) -> Vec<f64> {
    let mut occ = vec![0.0; levels];
    let mut left = n_f;
    for (e, o) in occ.iter_mut().enumerate() {
        if left <= 0.0 {
            break;
        }
        let g = level_degeneracy(e);
        *o = (left / g).min(1.0);
        left -= g;
    }
    occ
}
