use serde::{Deserialize, Serialize};

use super::fast::{FastKernel, Parts};
use super::stiff::condensate_jacobian;
use super::{cutoff, init_state, next_window_change, reference, KernelChoice, MixtureState, ScenarioConfig, Window};
use crate::error::{Error, Result};
use crate::observables::entropy;
use crate::ode::{Dopri5, OdeError, RosenbrockW, StepStats};
use crate::statmech::{fit_thermo, Species, ThermoFit};
use crate::trap::{critical_temperature, fermi_level, level_degeneracy, EnergyGrid, FermiConvention};

/// One row of the run time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tau: f64,
    pub n_b: f64,
    pub n_f: f64,
    /// Mean energy per atom.
    pub mean_e_b: f64,
    pub mean_e_f: f64,
    pub t_b: f64,
    pub z_b: f64,
    pub t_f: f64,
    pub z_f: f64,
    /// Atoms beyond what the excited levels hold at `z = 1` and the fitted
    /// temperature.
    pub condensate_number: f64,
    /// Ground-level share of the bosons.
    pub ground_fraction: f64,
    /// `T̄_f` over the discrete Fermi level of the current fermion number.
    pub t_f_over_t_fermi: f64,
    /// `T̄_b` over the continuum condensation temperature of the current
    /// boson number.
    pub t_b_over_t_c: f64,
    pub cut_b: f64,
    pub cut_f: f64,
    pub lost_n_b: f64,
    pub lost_n_f: f64,
    pub lost_e_b: f64,
    pub lost_e_f: f64,
    pub entropy: f64,
}

/// Occupations at one snapshot time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationRecord {
    pub tau: f64,
    pub b: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub occupations: Vec<OccupationRecord>,
    pub final_state: MixtureState,
    pub stats: StepStats,
    /// Accepted steps whose occupations were checked against the bounds.
    pub checked_steps: usize,
    pub bound_violations: usize,
}

pub struct Engine {
    config: ScenarioConfig,
    alpha_b: f64,
    state: MixtureState,
    window: Window,
    kernel: FastKernel,
    solver: Dopri5,
    stiff_solver: RosenbrockW,
    /// Whether the linearly implicit integrator is active. The explicit one
    /// hands over when its steps become stability-limited, the implicit one
    /// hands back when an explicit step of its size would be stable.
    stiff: bool,
    h: f64,
    y: Vec<f64>,
    checked_steps: usize,
    bound_violations: usize,
}

const LOST: usize = 4;


impl Engine {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        let state = init_state(&config)?;
        Self::from_state(config, state)
    }

    pub fn from_state(config: ScenarioConfig, state: MixtureState) -> Result<Self> {
        config.validate()?;
        if state.n_max() != config.n_max || state.f.len() != config.n_max {
            return Err(Error::Config(format!(
                "state has {} levels but the configuration asks for {}",
                state.n_max(),
                config.n_max
            )));
        }
        if let Some(v) = state.bound_violation() {
            return Err(Error::domain(format!("initial state out of bounds: {v}")));
        }
        let alpha_b = config.alpha_b()?;
        let window = config.window_at(state.tau);
        let mut solver = Dopri5::new(0, config.rtol, config.atol);
        solver.stiffness_exit = true;
        let mut stiff_solver = RosenbrockW::new(config.rtol, config.atol);
        stiff_solver.nonstiffness_exit = true;
        Ok(Engine {
            config,
            alpha_b,
            state,
            window,
            kernel: FastKernel::new(),
            solver,
            stiff_solver,
            stiff: false,
            h: 0.0,
            y: Vec::new(),
            checked_steps: 0,
            bound_violations: 0,
        })
    }

    pub fn state(&self) -> &MixtureState {
        &self.state
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn alpha_b(&self) -> f64 {
        self.alpha_b
    }

    /// Accepted steps whose occupations were checked against the bounds.
    pub fn checked_steps(&self) -> usize {
        self.checked_steps
    }

    pub fn bound_violations(&self) -> usize {
        self.bound_violations
    }

    /// Step statistics of both integrators combined.
    pub fn stats(&self) -> StepStats {
        let (a, b) = (self.solver.stats, self.stiff_solver.stats);
        StepStats {
            accepted: a.accepted + b.accepted,
            rejected: a.rejected + b.rejected,
            inadmissible: a.inadmissible + b.inadmissible,
            evaluations: a.evaluations + b.evaluations,
            jacobians: a.jacobians + b.jacobians,
            factorizations: a.factorizations + b.factorizations,
        }
    }

    /// Moves atoms on levels outside the window into the lost counters.
    fn dump_untrapped(&mut self) {
        let s = &mut self.state;
        for e in self.window.m_b..s.b.len() {
            let n = level_degeneracy(e) * s.b[e];
            s.lost_n_b += n;
            s.lost_e_b += n * e as f64;
            s.b[e] = 0.0;
        }
        for e in self.window.m_f..s.f.len() {
            let n = level_degeneracy(e) * s.f[e];
            s.lost_n_f += n;
            s.lost_e_f += n * e as f64;
            s.f[e] = 0.0;
        }
    }

    /// Integrates to `tau_end`, splitting the interval wherever a cutoff
    /// moves past a level.
    pub fn advance_to(&mut self, tau_end: f64) -> Result<()> {
        while self.state.tau < tau_end {
            let tau = self.state.tau;
            let mut next = tau_end;
            for sched in [&self.config.schedule.boson, &self.config.schedule.fermion] {
                if let Some(t) = next_window_change(sched, tau) {
                    if t > tau && t < next {
                        next = t;
                    }
                }
            }
            self.window = self.config.window_at(0.5 * (tau + next));
            self.dump_untrapped();
            self.integrate(next)?;
        }
        Ok(())
    }

    fn integrate(&mut self, t_end: f64) -> Result<()> {
        let Window { m_b, m_f, .. } = self.window;
        let window = self.window;
        let alpha = self.alpha_b;
        let s = &self.state;
        self.y.clear();
        self.y.extend_from_slice(&s.b[..m_b]);
        self.y.extend_from_slice(&s.f[..m_f]);
        self.y.extend_from_slice(&[s.lost_n_b, s.lost_n_f, s.lost_e_b, s.lost_e_f]);

        let kernel = &mut self.kernel;
        let choice = self.config.kernel;
        let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
            let (b, rest) = y.split_at(m_b);
            let f = &rest[..m_f];
            let (db, rest) = dy.split_at_mut(m_b);
            let (df, dl) = rest.split_at_mut(m_f);
            let loss = match choice {
                KernelChoice::Fast => kernel.evaluate(b, f, &window, alpha, Parts::ALL, db, df),
                KernelChoice::Reference => {
                    let c = reference::collision_rhs(b, f, alpha);
                    let e = reference::evaporation_rhs(b, f, &window, alpha);
                    for i in 0..m_b {
                        db[i] = c.db[i] + e.db[i];
                    }
                    for i in 0..m_f {
                        df[i] = c.df[i] + e.df[i];
                    }
                    e.loss
                }
            };
            dl.copy_from_slice(&[loss.n_b, loss.n_f, loss.e_b, loss.e_f]);
        };
        let admissible = |y: &[f64]| in_bounds(&y[..m_b], &y[m_b..m_b + m_f]);
        let checked = &mut self.checked_steps;
        let violations = &mut self.bound_violations;
        let accepted = |_: f64, y: &[f64]| {
            *checked += 1;
            if !in_bounds(&y[..m_b], &y[m_b..m_b + m_f]) {
                *violations += 1;
            }
        };
        let mut rhs = rhs;
        let (mut admissible, mut accepted) = (admissible, accepted);
        let dim = m_b + m_f;
        let mut t = self.state.tau;
        let result = loop {
            let r = if self.stiff {
                self.stiff_solver.advance_observed(
                    &mut t,
                    &mut self.y,
                    t_end,
                    &mut self.h,
                    |y, dy| rhs(0.0, y, dy),
                    |y, w| condensate_jacobian(&y[..m_b], &y[m_b..dim], alpha, w.submatrix_mut(0, 0, dim, dim)),
                    &mut admissible,
                    &mut accepted,
                )
            } else {
                self.solver
                    .advance_observed(&mut t, &mut self.y, t_end, &mut self.h, &mut rhs, &mut admissible, &mut accepted)
            };
            if r.is_err() || t >= t_end {
                break r;
            }
            // Early return: the integrator asked to hand over.
            self.stiff = !self.stiff;
            self.solver.reset_stiffness();
            self.stiff_solver.reset_stiffness();
        };

        let s = &mut self.state;
        s.tau = t;
        s.b[..m_b].copy_from_slice(&self.y[..m_b]);
        s.f[..m_f].copy_from_slice(&self.y[m_b..m_b + m_f]);
        let lost = &self.y[m_b + m_f..m_b + m_f + LOST];
        s.lost_n_b = lost[0];
        s.lost_n_f = lost[1];
        s.lost_e_b = lost[2];
        s.lost_e_f = lost[3];

        match result {
            Ok(()) => Ok(()),
            Err(OdeError::Underflow { t, h }) => Err(Error::StepUnderflow { t, h }),
            Err(OdeError::Inadmissible { t, h }) => Err(Error::InvariantViolation {
                tau: t,
                detail: format!("occupation bounds violated by every step down to h = {h:e}"),
                state: Box::new(self.state.clone()),
            }),
        }
    }

    /// Diagnostics of the current state. Temperatures are fitted on the
    /// trapped levels; a fit that does not exist is reported as NaN.
    pub fn snapshot(&self) -> Snapshot {
        let s = &self.state;
        let cut_b = cutoff(&self.config.schedule.boson, s.tau);
        let cut_f = cutoff(&self.config.schedule.fermion, s.tau);
        let (n_b, n_f) = (s.n_b(), s.n_f());
        let mean_e_b = s.energy_b() / n_b;
        let mean_e_f = s.energy_f() / n_f;
        let fit = |species, n: f64, e: f64, m: usize| -> Option<ThermoFit> {
            if !(n > 0.0) {
                return None;
            }
            let grid = EnergyGrid::new(m).ok()?;
            fit_thermo(species, n, e, &grid).ok()
        };
        let fb = fit(Species::Bose, n_b, mean_e_b, self.window.m_b);
        let ff = fit(Species::Fermi, n_f, mean_e_f, self.window.m_f);
        let t_b = fb.map_or(f64::NAN, |x| x.t_bar);
        let t_f = ff.map_or(f64::NAN, |x| x.t_bar);
        let t_fermi = fermi_level(n_f, FermiConvention::Discrete).unwrap_or(f64::NAN);
        let t_c = critical_temperature(n_b).unwrap_or(f64::NAN);
        Snapshot {
            tau: s.tau,
            n_b,
            n_f,
            mean_e_b,
            mean_e_f,
            t_b,
            z_b: fb.map_or(f64::NAN, |x| x.z.value()),
            t_f,
            z_f: ff.map_or(f64::NAN, |x| x.z.value()),
            condensate_number: fb.map_or(f64::NAN, |x| x.condensate_number),
            ground_fraction: if n_b > 0.0 { s.b[0] / n_b } else { f64::NAN },
            t_f_over_t_fermi: t_f / t_fermi,
            t_b_over_t_c: t_b / t_c,
            cut_b,
            cut_f,
            lost_n_b: s.lost_n_b,
            lost_n_f: s.lost_n_f,
            lost_e_b: s.lost_e_b,
            lost_e_f: s.lost_e_f,
            entropy: entropy(s),
        }
    }
}

fn in_bounds(b: &[f64], f: &[f64]) -> bool {
    b.iter().all(|&x| x >= 0.0) && f.iter().all(|&x| (0.0..=1.0).contains(&x))
}

/// Advances a state by `dtau` under the given scenario.
pub fn step(state: &MixtureState, config: &ScenarioConfig, dtau: f64) -> Result<MixtureState> {
    let mut engine = Engine::from_state(config.clone(), state.clone())?;
    engine.advance_to(state.tau + dtau)?;
    Ok(engine.state)
}

/// Runs a scenario from its equilibrium initial state to `t_end`, with a
/// snapshot at every multiple of `snapshot_every` and at the end.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    run_observed(config, |_, _| {})
}

/// [`run`], calling `observe` with the engine and each snapshot as it is
/// taken, so callers can stream output or report progress.
pub fn run_observed(config: &ScenarioConfig, mut observe: impl FnMut(&Engine, &Snapshot)) -> Result<RunOutput> {
    let mut engine = Engine::new(config.clone())?;
    let first = engine.snapshot();
    observe(&engine, &first);
    let mut snapshots = vec![first];
    let mut occupations = Vec::new();
    let record = |e: &Engine, occ: &mut Vec<OccupationRecord>| {
        if e.config.store_occupations {
            occ.push(OccupationRecord {
                tau: e.state.tau,
                b: e.state.b.clone(),
                f: e.state.f.clone(),
            });
        }
    };
    record(&engine, &mut occupations);
    let mut k = 1usize;
    while engine.state.tau < config.t_end {
        let target = (k as f64 * config.snapshot_every).min(config.t_end);
        // Avoid a sliver interval from rounding just below t_end.
        let target = if config.t_end - target < 1e-12 * config.t_end {
            config.t_end
        } else {
            target
        };
        engine.advance_to(target)?;
        let snap = engine.snapshot();
        observe(&engine, &snap);
        snapshots.push(snap);
        record(&engine, &mut occupations);
        k += 1;
    }
    Ok(RunOutput {
        snapshots,
        occupations,
        stats: engine.stats(),
        checked_steps: engine.checked_steps,
        bound_violations: engine.bound_violations,
        final_state: engine.state,
    })
}
