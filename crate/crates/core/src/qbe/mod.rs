//! Quantum Boltzmann dynamics of the mixture on the discrete level grid.
//!
//! Occupations are per quantum state; the level `e` holds `g(e)·b[e]`
//! bosons. A species is trapped on levels `E ≤ E_cut`. Collisions whose
//! products all stay trapped redistribute atoms; collisions that send one
//! product to `E_cut < E < 2E_cut` remove it from the trap.

mod engine;
pub mod fast;
pub mod reference;
pub mod stiff;

pub use engine::{run, run_observed, step, Engine, OccupationRecord, RunOutput, Snapshot};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statmech::{bose_eps, equilibrium_occupations, fermi_ln_z, fermi_sea, Fugacity, Species, ThermoFit};
use crate::trap::{level_degeneracy, TrapSpec};

/// Occupations and evaporation bookkeeping at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureState {
    pub tau: f64,
    /// Boson occupation per state, one entry per grid level.
    pub b: Vec<f64>,
    /// Fermion occupation per state, one entry per grid level.
    pub f: Vec<f64>,
    pub lost_n_b: f64,
    pub lost_n_f: f64,
    pub lost_e_b: f64,
    pub lost_e_f: f64,
}

fn number(occ: &[f64]) -> f64 {
    occ.iter().enumerate().map(|(e, &o)| level_degeneracy(e) * o).sum()
}

fn energy(occ: &[f64]) -> f64 {
    occ.iter().enumerate().map(|(e, &o)| level_degeneracy(e) * e as f64 * o).sum()
}

impl MixtureState {
    pub fn vacuum(n_max: usize) -> Self {
        MixtureState {
            tau: 0.0,
            b: vec![0.0; n_max],
            f: vec![0.0; n_max],
            lost_n_b: 0.0,
            lost_n_f: 0.0,
            lost_e_b: 0.0,
            lost_e_f: 0.0,
        }
    }

    pub fn n_max(&self) -> usize {
        self.b.len()
    }

    pub fn n_b(&self) -> f64 {
        number(&self.b)
    }

    pub fn n_f(&self) -> f64 {
        number(&self.f)
    }

    /// Total boson energy in units of ħω above the ground level.
    pub fn energy_b(&self) -> f64 {
        energy(&self.b)
    }

    pub fn energy_f(&self) -> f64 {
        energy(&self.f)
    }

    /// First violated occupation bound, if any.
    pub fn bound_violation(&self) -> Option<String> {
        if let Some((e, v)) = self.b.iter().enumerate().find(|(_, &v)| !(v >= 0.0)) {
            return Some(format!("boson occupation {v} at level {e}"));
        }
        if let Some((e, v)) = self.f.iter().enumerate().find(|(_, &v)| !(0.0..=1.0).contains(&v)) {
            return Some(format!("fermion occupation {v} at level {e}"));
        }
        None
    }
}

/// Evaporation cutoff of one species: constant `initial_cut` until
/// `hold_until`, then `e0·exp(-gamma·(τ - hold_until))` if `e0` is set.
/// No `initial_cut` means no cutoff; the grid top then acts as a wall.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSchedule {
    #[serde(default)]
    pub initial_cut: Option<f64>,
    #[serde(default)]
    pub hold_until: f64,
    #[serde(default)]
    pub e0: Option<f64>,
    #[serde(default)]
    pub gamma: f64,
}

impl CutoffSchedule {
    pub const NONE: CutoffSchedule = CutoffSchedule {
        initial_cut: None,
        hold_until: 0.0,
        e0: None,
        gamma: 0.0,
    };

    pub fn constant(cut: f64) -> Self {
        CutoffSchedule {
            initial_cut: Some(cut),
            ..Self::NONE
        }
    }

    pub fn ramp(initial_cut: f64, hold_until: f64, e0: f64, gamma: f64) -> Self {
        CutoffSchedule {
            initial_cut: Some(initial_cut),
            hold_until,
            e0: Some(e0),
            gamma,
        }
    }

    pub fn validate(&self, n_max: usize) -> Result<()> {
        let top = (n_max - 1) as f64;
        for (name, v) in [("initial_cut", self.initial_cut), ("e0", self.e0)] {
            if let Some(v) = v {
                if !(v > 0.0 && v <= top) {
                    return Err(Error::Config(format!("{name} = {v} must lie in (0, {top}]")));
                }
            }
        }
        if self.e0.is_some() && self.initial_cut.is_none() {
            return Err(Error::Config("a ramp needs an initial_cut".into()));
        }
        if !(self.hold_until >= 0.0) || !self.hold_until.is_finite() {
            return Err(Error::Config(format!("hold_until = {} must be nonnegative", self.hold_until)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma = {} must be nonnegative", self.gamma)));
        }
        Ok(())
    }

    fn ramping(&self, tau: f64) -> Option<f64> {
        match self.e0 {
            Some(e0) if tau >= self.hold_until => Some(e0),
            _ => None,
        }
    }
}

/// Cutoff energy at time `tau`; infinite without a cutoff.
pub fn cutoff(schedule: &CutoffSchedule, tau: f64) -> f64 {
    match (schedule.initial_cut, schedule.ramping(tau)) {
        (None, _) => f64::INFINITY,
        (Some(_), Some(e0)) => e0 * (-schedule.gamma * (tau - schedule.hold_until)).exp(),
        (Some(cut), None) => cut,
    }
}

/// Next time after `tau` at which the trap window of this species can
/// change: the end of the hold, or `2·E_cut` crossing an integer.
pub(crate) fn next_window_change(schedule: &CutoffSchedule, tau: f64) -> Option<f64> {
    let e0 = schedule.e0?;
    schedule.initial_cut?;
    if tau < schedule.hold_until {
        return Some(schedule.hold_until);
    }
    if schedule.gamma == 0.0 {
        return None;
    }
    let mut x = 2.0 * cutoff(schedule, tau);
    let r = x.round();
    if (x - r).abs() < 1e-9 * r.max(1.0) {
        x = r;
    }
    let n = x.ceil() - 1.0;
    if n < 1.0 {
        return None;
    }
    Some(schedule.hold_until + (2.0 * e0 / n).ln() / schedule.gamma)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaporationSchedule {
    #[serde(default = "no_cut")]
    pub boson: CutoffSchedule,
    #[serde(default = "no_cut")]
    pub fermion: CutoffSchedule,
}

fn no_cut() -> CutoffSchedule {
    CutoffSchedule::NONE
}

impl EvaporationSchedule {
    pub const NONE: EvaporationSchedule = EvaporationSchedule {
        boson: CutoffSchedule::NONE,
        fermion: CutoffSchedule::NONE,
    };
}

impl Default for EvaporationSchedule {
    fn default() -> Self {
        Self::NONE
    }
}

/// Trapped levels `0..m` of each species and the range `m..=top` a
/// collision product may be evaporated into. The range is empty
/// (`top < m`) for a species without cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub m_b: usize,
    pub m_f: usize,
    pub top_b: usize,
    pub top_f: usize,
}

impl Window {
    /// Both species confined to their full grids, no evaporation.
    pub fn closed(m_b: usize, m_f: usize) -> Self {
        Window {
            m_b,
            m_f,
            top_b: m_b.saturating_sub(1),
            top_f: m_f.saturating_sub(1),
        }
    }

    pub fn from_cuts(cut_b: f64, cut_f: f64, n_max: usize) -> Self {
        let (m_b, top_b) = Self::species(cut_b, n_max);
        let (m_f, top_f) = Self::species(cut_f, n_max);
        Window { m_b, m_f, top_b, top_f }
    }

    fn species(cut: f64, n_max: usize) -> (usize, usize) {
        if cut.is_infinite() {
            return (n_max, n_max.saturating_sub(1));
        }
        let m = ((cut.floor() as usize) + 1).min(n_max);
        let top = ((2.0 * cut).ceil() as usize).saturating_sub(1);
        (m, top.max(m.saturating_sub(1)))
    }

    pub fn evaporating(&self) -> bool {
        self.top_b >= self.m_b || self.top_f >= self.m_f
    }
}

/// Time derivatives of the trapped occupations plus the rates at which
/// atoms and energy leave the trap.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rates {
    pub db: Vec<f64>,
    pub df: Vec<f64>,
    pub loss: LossRates,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossRates {
    pub n_b: f64,
    pub n_f: f64,
    pub e_b: f64,
    pub e_f: f64,
}

/// In-trap collision derivatives of a state, grid top as a wall.
pub fn collision_rhs(state: &MixtureState, alpha_b: f64) -> Rates {
    reference::collision_rhs(&state.b, &state.f, alpha_b)
}

/// Evaporation derivatives and loss rates of a state at the given cutoffs.
pub fn evaporation_rhs(state: &MixtureState, cut_b: f64, cut_f: f64, alpha_b: f64) -> Rates {
    let w = Window::from_cuts(cut_b, cut_f, state.n_max());
    reference::evaporation_rhs(&state.b[..w.m_b], &state.f[..w.m_f], &w, alpha_b)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    #[default]
    Fast,
    Reference,
}

/// Either a registered trap preset or explicit parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrapRef {
    Preset(String),
    Custom(TrapSpec),
}

impl TrapRef {
    pub fn resolve(&self) -> Result<TrapSpec> {
        match self {
            TrapRef::Preset(name) => {
                crate::trap::trap_preset(name).ok_or_else(|| Error::Config(format!("unknown trap preset '{name}'")))
            }
            TrapRef::Custom(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub trap: Option<TrapRef>,
    pub n_b: f64,
    pub n_f: f64,
    pub t_b0: f64,
    pub t_f0: f64,
    pub n_max: usize,
    /// `σ_bb/σ_bf`; taken from the trap when absent, else 1.
    #[serde(default)]
    pub alpha_b: Option<f64>,
    #[serde(default)]
    pub schedule: EvaporationSchedule,
    pub t_end: f64,
    pub snapshot_every: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default)]
    pub kernel: KernelChoice,
    /// Keep full occupation vectors at every snapshot.
    #[serde(default)]
    pub store_occupations: bool,
}

fn default_rtol() -> f64 {
    1e-8
}

fn default_atol() -> f64 {
    1e-12
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must be positive and finite")))
            }
        };
        let nonnegative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must be nonnegative and finite")))
            }
        };
        nonnegative("n_b", self.n_b)?;
        nonnegative("n_f", self.n_f)?;
        nonnegative("t_b0", self.t_b0)?;
        nonnegative("t_f0", self.t_f0)?;
        nonnegative("t_end", self.t_end)?;
        positive("snapshot_every", self.snapshot_every)?;
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        if self.n_max < 2 {
            return Err(Error::Config(format!("n_max = {} must be at least 2", self.n_max)));
        }
        if let Some(a) = self.alpha_b {
            nonnegative("alpha_b", a)?;
        }
        self.schedule.boson.validate(self.n_max)?;
        self.schedule.fermion.validate(self.n_max)?;
        if let Some(t) = &self.trap {
            t.resolve()?;
        }
        Ok(())
    }

    pub fn trap_spec(&self) -> Result<Option<TrapSpec>> {
        self.trap.as_ref().map(TrapRef::resolve).transpose()
    }

    pub fn alpha_b(&self) -> Result<f64> {
        if let Some(a) = self.alpha_b {
            return Ok(a);
        }
        Ok(self.trap_spec()?.map(|t| t.alpha_b()).unwrap_or(1.0))
    }

    pub fn window_at(&self, tau: f64) -> Window {
        Window::from_cuts(
            cutoff(&self.schedule.boson, tau),
            cutoff(&self.schedule.fermion, tau),
            self.n_max,
        )
    }
}

/// Equilibrium occupations at the initial temperatures, restricted to the
/// levels inside the initial cutoffs. The fugacities are solved on that
/// truncated grid, so the totals come out exact.
pub fn init_state(config: &ScenarioConfig) -> Result<MixtureState> {
    config.validate()?;
    let w = config.window_at(0.0);
    let mut state = MixtureState::vacuum(config.n_max);
    if config.n_b > 0.0 {
        let occ = if config.t_b0 == 0.0 {
            let mut v = vec![0.0; w.m_b];
            v[0] = config.n_b;
            v
        } else {
            let eps = bose_eps(config.n_b, config.t_b0, w.m_b);
            let fit = ThermoFit {
                species: Species::Bose,
                z: Fugacity::from_ln(-eps),
                t_bar: config.t_b0,
                condensate_number: 0.0,
            };
            equilibrium_occupations(&fit, config.n_b, w.m_b)
        };
        state.b[..w.m_b].copy_from_slice(&occ);
    }
    if config.n_f > 0.0 {
        let occ = if config.t_f0 == 0.0 {
            if config.n_f > crate::trap::cumulative_states(w.m_f) {
                return Err(Error::infeasible(format!(
                    "{} fermions do not fit below the initial cutoff",
                    config.n_f
                )));
            }
            fermi_sea(config.n_f, w.m_f)
        } else {
            let ln_z = fermi_ln_z(config.n_f, config.t_f0, w.m_f)?;
            let fit = ThermoFit {
                species: Species::Fermi,
                z: Fugacity::from_ln(ln_z),
                t_bar: config.t_f0,
                condensate_number: 0.0,
            };
            equilibrium_occupations(&fit, config.n_f, w.m_f)
        };
        state.f[..w.m_f].copy_from_slice(&occ);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_schedule_values() {
        let s = CutoffSchedule::ramp(500.0, 0.04, 500.0, 1.0);
        assert_eq!(cutoff(&s, 0.0), 500.0);
        assert_eq!(cutoff(&s, 0.039), 500.0);
        assert!((cutoff(&s, 0.04 + 2f64.ln()) - 250.0).abs() < 1e-12);
        let k = CutoffSchedule::ramp(1000.0, 0.04, 1000.0, 100.0);
        assert!((cutoff(&k, 0.064) - 1000.0 * (-2.4f64).exp()).abs() < 1e-9);
        assert!((cutoff(&k, 0.064) - 90.7).abs() < 0.05);
        assert_eq!(cutoff(&CutoffSchedule::NONE, 3.0), f64::INFINITY);
        assert_eq!(cutoff(&CutoffSchedule::constant(7.5), 3.0), 7.5);
    }

    #[test]
    fn window_change_times() {
        let s = CutoffSchedule::ramp(10.0, 1.0, 10.0, 1.0);
        assert_eq!(next_window_change(&s, 0.0), Some(1.0));
        // At the hold end 2·cut = 20 exactly; next crossing is 19.
        let t = next_window_change(&s, 1.0).unwrap();
        assert!((cutoff(&s, t) - 9.5).abs() < 1e-12);
        let t2 = next_window_change(&s, t).unwrap();
        assert!((cutoff(&s, t2) - 9.0).abs() < 1e-12);
        assert_eq!(next_window_change(&CutoffSchedule::constant(4.0), 0.0), None);
    }

    #[test]
    fn windows_from_cuts() {
        let w = Window::from_cuts(3.5, f64::INFINITY, 6);
        assert_eq!((w.m_b, w.top_b), (4, 6));
        assert_eq!((w.m_f, w.top_f), (6, 5));
        let w = Window::from_cuts(500.0, 1000.0, 1001);
        assert_eq!((w.m_b, w.top_b, w.m_f, w.top_f), (501, 999, 1001, 1999));
        assert!(w.evaporating());
        assert!(!Window::closed(5, 5).evaporating());
    }

    fn config(n_b: f64, n_f: f64, t_b0: f64, t_f0: f64, n_max: usize) -> ScenarioConfig {
        ScenarioConfig {
            trap: None,
            n_b,
            n_f,
            t_b0,
            t_f0,
            n_max,
            alpha_b: None,
            schedule: EvaporationSchedule::NONE,
            t_end: 0.01,
            snapshot_every: 0.01,
            rtol: 1e-8,
            atol: 1e-12,
            kernel: KernelChoice::Fast,
            store_occupations: false,
        }
    }

    #[test]
    fn init_totals_are_exact() {
        let cfg = config(1e5, 1e3, 43.7, 81.8, 1500);
        let s = init_state(&cfg).unwrap();
        assert!((s.n_b() - 1e5).abs() / 1e5 < 1e-12, "{}", s.n_b());
        assert!((s.n_f() - 1e3).abs() / 1e3 < 1e-12, "{}", s.n_f());
        assert!(s.bound_violation().is_none());
    }

    #[test]
    fn init_respects_cutoff() {
        let mut cfg = config(1e4, 1e3, 20.0, 30.0, 200);
        cfg.schedule.boson = CutoffSchedule::constant(50.0);
        let s = init_state(&cfg).unwrap();
        assert!(s.b[51..].iter().all(|&x| x == 0.0));
        assert!(s.b[50] > 0.0);
        assert!((s.n_b() - 1e4).abs() / 1e4 < 1e-12);
    }

    #[test]
    fn zero_temperature_fermions_fill_shells() {
        let cfg = config(0.0, 20.0, 0.0, 0.0, 10);
        let s = init_state(&cfg).unwrap();
        assert_eq!(&s.f[..4], &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(s.f[4], 0.0);
        assert_eq!(s.n_b(), 0.0);
    }

    #[test]
    fn alpha_defaults() {
        let mut cfg = config(1.0, 1.0, 1.0, 1.0, 10);
        assert_eq!(cfg.alpha_b().unwrap(), 1.0);
        cfg.trap = Some(TrapRef::Preset("K40-K39".into()));
        assert!((cfg.alpha_b().unwrap() - 5.9168).abs() < 1e-3);
        cfg.alpha_b = Some(2.0);
        assert_eq!(cfg.alpha_b().unwrap(), 2.0);
    }
}
