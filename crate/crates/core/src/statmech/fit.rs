use crate::error::{Error, Result};
use crate::trap::EnergyGrid;

use super::{
    bisect_increasing, bose_eps, bose_label, bose_moments_from, fermi_ground_energy, fermi_ln_z, fermi_moments,
    uniform_energy, Fugacity, Species, ThermoFit, BISECTION_WIDTH,
};

/// Equilibrium `(z, T̄)` with the given particle number and mean energy
/// per particle on the grid.
///
/// The temperature is found by bisection on `ln T̄` with the fugacity solved
/// at every trial temperature. A mean energy at the ground-state value gives
/// `T̄ = 0`.
pub fn fit_thermo(species: Species, number: f64, mean_energy: f64, grid: &EnergyGrid) -> Result<ThermoFit> {
    if !(number > 0.0) || !number.is_finite() {
        return Err(Error::domain(format!("particle number must be positive, got {number}")));
    }
    if !mean_energy.is_finite() {
        return Err(Error::domain(format!("mean energy must be finite, got {mean_energy}")));
    }
    let levels = grid.n_max();
    let energy = mean_energy * number;
    let e_min = match species {
        Species::Bose => 0.0,
        Species::Fermi => fermi_ground_energy(number, levels),
    };
    let e_max = uniform_energy(number, levels);
    let slack = 1e-12 * e_max;
    if energy < e_min - slack {
        return Err(Error::infeasible(format!(
            "mean energy {mean_energy} is below the ground-state value {}",
            e_min / number
        )));
    }
    if energy >= e_max {
        return Err(Error::infeasible(format!(
            "mean energy {mean_energy} reaches the infinite-temperature limit {}",
            e_max / number
        )));
    }
    if species == Species::Fermi && number >= crate::trap::cumulative_states(levels) {
        return Err(Error::infeasible(format!("{number} fermions do not fit on {levels} levels")));
    }
    if energy <= e_min + slack {
        return Ok(ThermoFit {
            species,
            z: Fugacity::from_ln(match species {
                Species::Bose => 0.0,
                Species::Fermi => f64::INFINITY,
            }),
            t_bar: 0.0,
            condensate_number: match species {
                Species::Bose => number,
                Species::Fermi => 0.0,
            },
        });
    }

    let energy_at = |ln_t: f64| -> f64 {
        let t = ln_t.exp();
        match species {
            Species::Bose => bose_moments_from(0, bose_eps(number, t, levels), t, levels).1,
            Species::Fermi => match fermi_ln_z(number, t, levels) {
                Ok(ln_z) => fermi_moments(ln_z, t, levels).1,
                Err(_) => f64::INFINITY,
            },
        }
    };
    let guess = (mean_energy / 3.0).max(1e-3).ln();
    let mut lo = guess - 1.0;
    while energy_at(lo) > energy {
        lo -= 2.0;
    }
    let mut hi = guess + 1.0;
    while energy_at(hi) < energy {
        hi += 2.0;
    }
    let t_bar = bisect_increasing(lo, hi, BISECTION_WIDTH, |x| energy_at(x) - energy).exp();
    Ok(match species {
        Species::Bose => bose_label(number, bose_eps(number, t_bar, levels), t_bar, levels),
        Species::Fermi => ThermoFit {
            species,
            z: Fugacity::from_ln(fermi_ln_z(number, t_bar, levels)?),
            t_bar,
            condensate_number: 0.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statmech::{occupancy_sums, solve_bose_state, solve_fermi_fugacity, BoseTarget};

    #[test]
    fn fermi_fit_recovers_temperature() {
        let g = EnergyGrid::new(800).unwrap();
        for &t in &[3.0, 16.0, 50.0] {
            let z = solve_fermi_fugacity(1e3, t, &g).unwrap();
            let s = occupancy_sums(Species::Fermi, z, t, &g).unwrap();
            let fit = fit_thermo(Species::Fermi, 1e3, s.energy / 1e3, &g).unwrap();
            assert!((fit.t_bar - t).abs() / t < 1e-9, "{t} -> {}", fit.t_bar);
            assert!((fit.z.ln() - z.ln()).abs() < 1e-7 * z.ln().abs().max(1.0));
        }
    }

    #[test]
    fn bose_fit_recovers_temperature_across_condensation() {
        let g = EnergyGrid::new(2000).unwrap();
        for &t in &[15.0, 40.0, 43.0, 60.0] {
            let state = solve_bose_state(1e5, BoseTarget::Temperature(t), &g).unwrap();
            let s = occupancy_sums(Species::Bose, state.z, t, &g).unwrap();
            let fit = fit_thermo(Species::Bose, 1e5, s.energy / 1e5, &g).unwrap();
            assert!((fit.t_bar - t).abs() / t < 1e-8, "{t} -> {}", fit.t_bar);
            assert!((fit.condensate_number - state.condensate_number).abs() < 1e-3 * 1e5);
        }
    }

    #[test]
    fn ground_state_energy_gives_zero_temperature() {
        let g = EnergyGrid::new(50).unwrap();
        let fit = fit_thermo(Species::Bose, 100.0, 0.0, &g).unwrap();
        assert_eq!(fit.t_bar, 0.0);
        assert_eq!(fit.condensate_number, 100.0);
        let e0 = fermi_ground_energy(20.0, 50) / 20.0;
        let fit = fit_thermo(Species::Fermi, 20.0, e0, &g).unwrap();
        assert_eq!(fit.t_bar, 0.0);
        assert!(fit_thermo(Species::Fermi, 20.0, e0 - 0.1, &g).is_err());
    }

    #[test]
    fn energy_beyond_grid_is_infeasible() {
        let g = EnergyGrid::new(10).unwrap();
        assert!(matches!(fit_thermo(Species::Bose, 10.0, 9.0, &g), Err(Error::Infeasible(_))));
    }
}
