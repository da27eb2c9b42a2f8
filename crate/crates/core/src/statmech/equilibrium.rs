use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trap::EnergyGrid;

use super::{
    bisect_increasing, bose_excited_capacity, bose_from_energy, bose_moments_from, fermi_ground_energy, fermi_ln_z,
    fermi_moments, solve_bose_state, BoseTarget, Fugacity,
};

/// `g₄(1) = ζ(4) = π⁴/90`.
pub const G4_AT_ONE: f64 = std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI / 90.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumOptions {
    /// Relative tolerance of the inner Bose `(T̄, z)` iteration.
    pub inner_tol: f64,
    /// Stop when `|T_f - T_b|/T_f` falls below this.
    pub outer_tol: f64,
    pub max_iterations: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            inner_tol: 1e-7,
            outer_tol: 1e-4,
            max_iterations: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumMethod {
    /// Alternating update `T_f ← T_b`, `T_b ← T_b(E_tot - E_f(T_f))`.
    FixedPoint,
    /// Bisection on `T_b(E_tot - E_f(T)) - T`, used when the alternating
    /// update does not contract.
    Bisection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub t_infinity: f64,
    pub t_b: f64,
    pub t_f: f64,
    pub z_b: Fugacity,
    pub z_f: Fugacity,
    pub condensate_number: f64,
    pub iterations: usize,
    /// Relative error of the boson number at the final state.
    pub residual_n_b: f64,
    /// Relative error of the total energy against the initial energy.
    pub residual_energy: f64,
    /// `|T_f - T_b| / T_f`.
    pub residual_t: f64,
    pub method: EquilibriumMethod,
}

fn fermi_energy_at(n_f: f64, t: f64, levels: usize) -> Result<f64> {
    if t == 0.0 {
        return Ok(fermi_ground_energy(n_f, levels));
    }
    let ln_z = fermi_ln_z(n_f, t, levels)?;
    Ok(fermi_moments(ln_z, t, levels).1)
}

fn bose_energy_at(n_b: f64, t: f64, grid: &EnergyGrid) -> Result<f64> {
    let fit = solve_bose_state(n_b, BoseTarget::Temperature(t), grid)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(bose_moments_from(0, -fit.z.ln(), t, grid.n_max()).1)
}

/// Common temperature reached when a Bose gas at `t_b0` and a Fermi gas at
/// `t_f0` exchange energy in the same trap until equilibrium.
///
/// Runs the alternating iteration: set `T_f = T_b`, solve the Fermi
/// fugacity, hand the remaining energy to the bosons and solve their
/// `(T̄, z)`, repeat. The update map has slope `-C_f/C_b` and diverges when the
/// fermions carry the larger heat capacity; in that case the same fixed
/// point is found by bisection.
pub fn equilibrium_temperature(
    n_b: f64,
    n_f: f64,
    t_b0: f64,
    t_f0: f64,
    grid: &EnergyGrid,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumResult> {
    for (name, v) in [("N_b", n_b), ("N_f", n_f)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    for (name, v) in [("T_b0", t_b0), ("T_f0", t_f0)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} must be nonnegative, got {v}")));
        }
    }
    if t_b0 == 0.0 && t_f0 == 0.0 {
        return Err(Error::domain("at least one initial temperature must be positive"));
    }
    let levels = grid.n_max();
    let e_tot = bose_energy_at(n_b, t_b0, grid)? + fermi_energy_at(n_f, t_f0, levels)?;

    match fixed_point(n_b, n_f, t_b0, e_tot, grid, opts)? {
        Some(res) => Ok(res),
        None => bisection(n_b, n_f, t_b0, t_f0, e_tot, grid, opts),
    }
}

/// Boson temperature and `eps = -ln z` holding `energy`; `None` if the
/// energy is out of reach.
fn bose_temperature(
    n_b: f64,
    energy: f64,
    levels: usize,
    opts: &EquilibriumOptions,
    start: Option<(f64, f64)>,
) -> Result<Option<(f64, f64)>> {
    match bose_from_energy(n_b, energy, levels, opts.inner_tol, opts.max_iterations, start) {
        Ok((t, eps, _)) => Ok(Some((t, eps))),
        Err(Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn fixed_point(
    n_b: f64,
    n_f: f64,
    t_b0: f64,
    e_tot: f64,
    grid: &EnergyGrid,
    opts: &EquilibriumOptions,
) -> Result<Option<EquilibriumResult>> {
    let levels = grid.n_max();
    let mut t_b = t_b0;
    let mut start = None;
    let mut last_delta = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let t_f = t_b;
        if t_f == 0.0 {
            return Ok(None);
        }
        let e_f = fermi_energy_at(n_f, t_f, levels)?;
        let Some((t_new, eps)) = bose_temperature(n_b, e_tot - e_f, levels, opts, start)? else {
            return Ok(None);
        };
        let delta = (t_f - t_new).abs() / t_f;
        if delta < opts.outer_tol {
            return Ok(Some(finish(n_b, n_f, t_f, t_new, eps, e_tot, it, EquilibriumMethod::FixedPoint, grid)?));
        }
        if it > 2 && delta >= last_delta {
            return Ok(None);
        }
        last_delta = delta;
        t_b = t_new;
        start = Some((t_new, eps));
    }
    Ok(None)
}

fn bisection(
    n_b: f64,
    n_f: f64,
    t_b0: f64,
    t_f0: f64,
    e_tot: f64,
    grid: &EnergyGrid,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumResult> {
    let levels = grid.n_max();
    // F(T) = T_b(E_tot - E_f(T)) - T decreases in T; an out-of-reach boson
    // energy means T is too high.
    let f = |t: f64| -> Result<Option<(f64, f64, f64)>> {
        let e_f = fermi_energy_at(n_f, t, levels)?;
        Ok(bose_temperature(n_b, e_tot - e_f, levels, opts, None)?.map(|(tb, eps)| (tb - t, tb, eps)))
    };
    let hi0 = t_b0.max(t_f0);
    let mut lo = t_b0.min(t_f0).max(1e-9 * hi0);
    let mut hi = hi0;
    for it in 1..=opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        match f(mid)? {
            Some((v, tb, eps)) => {
                if v.abs() / mid < opts.outer_tol || (hi - lo) < 1e-13 * hi {
                    return finish(n_b, n_f, mid, tb, eps, e_tot, it, EquilibriumMethod::Bisection, grid);
                }
                if v > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            None => hi = mid,
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        detail: format!("equilibrium temperature bracket [{lo}, {hi}] for N_b = {n_b}, N_f = {n_f}"),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    n_b: f64,
    n_f: f64,
    t_f: f64,
    t_b: f64,
    eps: f64,
    e_tot: f64,
    iterations: usize,
    method: EquilibriumMethod,
    grid: &EnergyGrid,
) -> Result<EquilibriumResult> {
    let levels = grid.n_max();
    let ln_z_f = fermi_ln_z(n_f, t_f, levels)?;
    let e_f = fermi_moments(ln_z_f, t_f, levels).1;
    let (n, e_b) = bose_moments_from(0, eps, t_b, levels);
    Ok(EquilibriumResult {
        t_infinity: 0.5 * (t_f + t_b),
        t_b,
        t_f,
        z_b: Fugacity::from_ln(-eps),
        z_f: Fugacity::from_ln(ln_z_f),
        condensate_number: (n_b - bose_excited_capacity(t_b, levels)).max(0.0),
        iterations,
        residual_n_b: ((n - n_b) / n_b).abs(),
        residual_energy: ((e_b + e_f - e_tot) / e_tot).abs(),
        residual_t: (t_f - t_b).abs() / t_f,
        method,
    })
}

/// Equilibrium temperature in units of `t_fermi` for a degenerate Fermi gas
/// and a condensed Bose gas, from the quartic
/// `g₄(1)x⁴ + x/6 = g₄(1)(T_b0/T_F)⁴ + T_f0/(6T_F)`.
pub fn approx_t_degenerate(t_fermi: f64, t_b0: f64, t_f0: f64) -> Result<f64> {
    if !(t_fermi > 0.0) {
        return Err(Error::domain(format!("fermi temperature must be positive, got {t_fermi}")));
    }
    if !(t_b0 >= 0.0 && t_f0 >= 0.0) {
        return Err(Error::domain("initial temperatures must be nonnegative"));
    }
    let b = t_b0 / t_fermi;
    let f = t_f0 / t_fermi;
    let lhs = |x: f64| G4_AT_ONE * x.powi(4) + x / 6.0;
    let rhs = lhs(b) - b / 6.0 + f / 6.0;
    if rhs == 0.0 {
        return Ok(0.0);
    }
    Ok(bisect_increasing(0.0, b.max(f), 1e-15, |x| lhs(x) - rhs))
}

/// Number-weighted mean of the initial temperatures, valid when both gases
/// are classical.
pub fn approx_t_classical(n_b: f64, n_f: f64, t_b0: f64, t_f0: f64) -> Result<f64> {
    if !(n_b >= 0.0 && n_f >= 0.0) || n_b + n_f == 0.0 {
        return Err(Error::domain("particle numbers must be nonnegative and not both zero"));
    }
    Ok((n_f * t_f0 + n_b * t_b0) / (n_f + n_b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g4_value() {
        assert!((G4_AT_ONE - 1.082323).abs() < 1e-6);
    }

    #[test]
    fn equal_temperatures_are_a_fixed_point() {
        let g = EnergyGrid::new(1500).unwrap();
        let r = equilibrium_temperature(1e5, 1e3, 50.0, 50.0, &g, &EquilibriumOptions::default()).unwrap();
        assert!((r.t_infinity - 50.0).abs() / 50.0 < 1e-4);
        assert_eq!(r.method, EquilibriumMethod::FixedPoint);
    }

    #[test]
    fn quartic_examples() {
        assert_eq!(approx_t_degenerate(1.0, 0.0, 0.0).unwrap(), 0.0);
        let x = approx_t_degenerate(1.0, 0.1, 0.5).unwrap();
        // Independent Newton solve of the same quartic.
        let rhs = G4_AT_ONE * 1e-4 + 0.5 / 6.0;
        let mut y: f64 = 0.5;
        for _ in 0..60 {
            y -= (G4_AT_ONE * y.powi(4) + y / 6.0 - rhs) / (4.0 * G4_AT_ONE * y.powi(3) + 1.0 / 6.0);
        }
        assert!((x - y).abs() < 1e-12);
        assert!((x - 0.374).abs() < 1e-3, "{x}");
        // Scale invariance.
        let x2 = approx_t_degenerate(20.0, 2.0, 10.0).unwrap();
        assert!((x - x2).abs() < 1e-12);
    }

    #[test]
    fn classical_mean() {
        assert_eq!(approx_t_classical(10.0, 10.0, 1.0, 2.0).unwrap(), 1.5);
        assert_eq!(approx_t_classical(10.0, 0.0, 3.0, 7.0).unwrap(), 3.0);
    }
}
