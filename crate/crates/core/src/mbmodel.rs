//! Two-temperature relaxation of a classical Bose–Fermi mixture.
//!
//! Both gases stay Maxwell–Boltzmann with `z = N/T̄³`, so the state is just
//! the pair of temperatures. Time is in units of τ₀.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeError};

/// Slope of [`pfun`] at `r = 1`.
const P_SLOPE_AT_ONE: f64 = -0.5;

/// Heat-exchange function `P(r)` with `r = T̄_f/T̄_b`.
pub fn pfun(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("temperature ratio must be positive and finite, got {r}")));
    }
    Ok(pfun_unchecked(r))
}

fn pfun_unchecked(r: f64) -> f64 {
    let d = r - 1.0;
    if d.abs() < 1e-6 {
        return P_SLOPE_AT_ONE * d;
    }
    let r2 = r * r;
    let r3 = r2 * r;
    let num = 1.0 + 3.0 * r + 2.0 * r2 - 2.0 * r3 - 3.0 * r2 * r2 - r2 * r3;
    num / (1.0 + r).powi(5)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoTempState {
    pub t_bar_f: f64,
    pub t_bar_b: f64,
    pub n_f: f64,
    pub n_b: f64,
}

impl TwoTempState {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_bar_f > 0.0 && self.t_bar_b > 0.0) || !self.t_bar_f.is_finite() || !self.t_bar_b.is_finite() {
            return Err(Error::domain("temperatures must be positive and finite"));
        }
        if !(self.n_f >= 0.0 && self.n_b >= 0.0) || !self.n_f.is_finite() || !self.n_b.is_finite() {
            return Err(Error::domain("particle numbers must be nonnegative and finite"));
        }
        Ok(())
    }

    /// Number-weighted mean temperature, the conserved asymptote.
    pub fn asymptote(&self) -> f64 {
        (self.n_f * self.t_bar_f + self.n_b * self.t_bar_b) / (self.n_f + self.n_b)
    }

    /// `T̄_b/N_f`, the characteristic relaxation time in τ₀.
    pub fn relaxation_time_estimate(&self) -> f64 {
        self.t_bar_b / self.n_f
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub tau: f64,
    pub t_bar_f: f64,
    pub t_bar_b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MbOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for MbOptions {
    fn default() -> Self {
        MbOptions { rtol: 1e-9, atol: 1e-12 }
    }
}

fn rhs(n_f: f64, n_b: f64) -> impl Fn(f64, &[f64], &mut [f64]) {
    move |_, y, dy| {
        let p = pfun_unchecked(y[0] / y[1]);
        dy[0] = n_b / 3.0 * p;
        dy[1] = -n_f / 3.0 * p;
    }
}

fn map_ode(e: OdeError) -> Error {
    match e {
        OdeError::Underflow { t, h } | OdeError::Inadmissible { t, h } => Error::StepUnderflow { t, h },
    }
}

/// Integrates the temperature pair to `t_end`, sampling every `dt_sample`
/// (plus the endpoint).
pub fn integrate_two_temperature(
    state0: &TwoTempState,
    t_end: f64,
    dt_sample: f64,
    opts: &MbOptions,
) -> Result<Vec<TrajectoryPoint>> {
    state0.validate()?;
    if !(t_end >= 0.0) || !(dt_sample > 0.0) {
        return Err(Error::domain("t_end must be nonnegative and dt_sample positive"));
    }
    let mut solver = Dopri5::new(2, opts.rtol, opts.atol);
    let f = rhs(state0.n_f, state0.n_b);
    let mut y = [state0.t_bar_f, state0.t_bar_b];
    let mut t = 0.0;
    let mut h = 0.0;
    let mut out = vec![TrajectoryPoint {
        tau: 0.0,
        t_bar_f: y[0],
        t_bar_b: y[1],
    }];
    let samples = (t_end / dt_sample).ceil() as usize;
    for k in 1..=samples {
        let target = (k as f64 * dt_sample).min(t_end);
        solver
            .advance(&mut t, &mut y, target, &mut h, &f, |y| y[0] > 0.0 && y[1] > 0.0)
            .map_err(map_ode)?;
        out.push(TrajectoryPoint {
            tau: t,
            t_bar_f: y[0],
            t_bar_b: y[1],
        });
    }
    Ok(out)
}

/// Time for `|T̄_f - T̄_b|` to fall to `1/e` of its initial value.
pub fn efold_time(state0: &TwoTempState, opts: &MbOptions) -> Result<f64> {
    state0.validate()?;
    let gap0 = (state0.t_bar_f - state0.t_bar_b).abs();
    if gap0 == 0.0 {
        return Err(Error::domain("temperatures are already equal"));
    }
    let f = rhs(state0.n_f, state0.n_b);
    let mut dy = [0.0; 2];
    let mut y = [state0.t_bar_f, state0.t_bar_b];
    f(0.0, &y, &mut dy);
    let rate0 = (dy[0] - dy[1]).abs() / gap0;
    if rate0 == 0.0 {
        return Err(Error::domain("no heat exchange: particle numbers vanish"));
    }
    // Sample finely on the initial decay scale and interpolate ln|gap|.
    let dt = 0.01 / rate0;
    let target = gap0 / std::f64::consts::E;
    let mut solver = Dopri5::new(2, opts.rtol, opts.atol);
    let mut t = 0.0;
    let mut h = 0.0;
    let mut prev = (0.0, gap0);
    for k in 1..=1_000_000usize {
        solver
            .advance(&mut t, &mut y, k as f64 * dt, &mut h, &f, |y| y[0] > 0.0 && y[1] > 0.0)
            .map_err(map_ode)?;
        let gap = (y[0] - y[1]).abs();
        if gap <= target {
            let (t0, g0) = prev;
            let w = (g0.ln() - target.ln()) / (g0.ln() - gap.ln());
            return Ok(t0 + w * (t - t0));
        }
        prev = (t, gap);
    }
    Err(Error::NoConvergence {
        iterations: 1_000_000,
        detail: "temperature gap did not decay by 1/e".into(),
    })
}

/// Mean collision rate per particle of a classical gas, in units of 1/τ₀.
pub fn collision_rate(n: f64, t_bar: f64) -> Result<f64> {
    if !(n >= 0.0) || !(t_bar > 0.0) {
        return Err(Error::domain(format!("need N >= 0 and T > 0, got N = {n}, T = {t_bar}")));
    }
    Ok(n / (2.0 * t_bar))
}
