//! Four-stage Rosenbrock-W method of order 3 with an embedded order-2
//! solution (ROS34PW2 of Rang and Angermann).
//!
//! A W-method keeps its order for any matrix `W` in place of the exact
//! Jacobian, so the caller may supply only the stiff part. Stability then
//! depends on `W` covering the large eigenvalues.
//!
//! The method is linearly implicit: every linear invariant `u` with
//! `uᵀF = 0` and `uᵀW = 0` is conserved up to rounding.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatMut};

use super::{OdeError, StepStats, MAX_FACTOR, MIN_FACTOR, SAFETY};

const GAMMA: f64 = 4.358_665_215_084_59e-1;
const ALPHA: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [8.717_330_430_169_18e-1, 0.0, 0.0],
    [8.445_706_001_536_942e-1, -1.129_906_423_648_418_5e-1, 0.0],
    [0.0, 0.0, 1.0],
];
const GAMMA_OFF: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [-8.717_330_430_169_18e-1, 0.0, 0.0],
    [-9.033_805_701_304_408e-1, 5.418_067_238_809_533e-2, 0.0],
    [2.421_238_070_609_534_6e-1, -1.223_250_583_904_514_7, 5.452_602_553_351_021e-1],
];
const B: [f64; 4] = [
    2.421_238_070_609_534_6e-1,
    -1.223_250_583_904_514_7,
    1.545_260_255_335_102,
    4.358_665_215_084_59e-1,
];
const B_HAT: [f64; 4] = [
    3.781_090_314_581_937e-1,
    -9.604_229_221_242_318e-2,
    0.5,
    2.179_332_607_542_295e-1,
];

#[derive(Clone, Debug)]
pub struct RosenbrockW {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub stats: StepStats,
    w: Mat<f64>,
    m: Mat<f64>,
    /// Factorisation of `I - hγW` and the step it was built for.
    lu: Option<PartialPivLu<f64>>,
    lu_h: f64,
    /// Accepted steps since `W` was last evaluated.
    w_age: usize,
    k: [Vec<f64>; 4],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    f: Vec<f64>,
    acc: Vec<f64>,
    /// Return early, before `t_end`, once an explicit method would be
    /// stable at the current step size.
    pub nonstiffness_exit: bool,
    /// Spectral radius estimate of the current `W`.
    rho: f64,
    nonstiff_count: usize,
}

/// Consecutive steps with `h·ρ(W)` below [`EXPLICIT_STABLE`] that end a
/// stiff stretch.
const NONSTIFF_STEPS: usize = 15;
const EXPLICIT_STABLE: f64 = 1.0;
const POWER_ITERATIONS: usize = 12;
/// A proposed step up to this factor above the factorised one reuses the
/// factorisation at the old step.
const LU_SLACK: f64 = 1.5;
/// Accepted steps before `W` is evaluated afresh.
const W_MAX_AGE: usize = 8;

impl RosenbrockW {
    pub fn new(rtol: f64, atol: f64) -> Self {
        RosenbrockW {
            rtol,
            atol,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            stats: StepStats::default(),
            w: Mat::zeros(0, 0),
            m: Mat::zeros(0, 0),
            lu: None,
            lu_h: f64::NAN,
            w_age: 0,
            k: Default::default(),
            y_stage: Vec::new(),
            y_new: Vec::new(),
            f: Vec::new(),
            acc: Vec::new(),
            nonstiffness_exit: false,
            rho: 0.0,
            nonstiff_count: 0,
        }
    }

    pub fn nonstiffness_detected(&self) -> bool {
        self.nonstiff_count >= NONSTIFF_STEPS
    }

    pub fn reset_stiffness(&mut self) {
        self.nonstiff_count = 0;
    }

    /// Power iteration for `ρ(W)`, using `f` and `acc` as scratch.
    fn spectral_radius(&mut self) -> f64 {
        let n = self.f.len();
        if n == 0 {
            return 0.0;
        }
        self.f.fill(1.0 / (n as f64).sqrt());
        let mut rho = 0.0;
        for _ in 0..POWER_ITERATIONS {
            self.acc.fill(0.0);
            for j in 0..n {
                let c = self.f[j];
                if c != 0.0 {
                    let col = self.w.col_as_slice(j);
                    for i in 0..n {
                        self.acc[i] += col[i] * c;
                    }
                }
            }
            let norm = self.acc.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return 0.0;
            }
            rho = norm;
            for i in 0..n {
                self.f[i] = self.acc[i] / norm;
            }
        }
        rho
    }

    fn resize(&mut self, n: usize) {
        if self.y_new.len() != n {
            self.w = Mat::zeros(n, n);
            self.m = Mat::zeros(n, n);
            self.lu = None;
            for k in &mut self.k {
                k.resize(n, 0.0);
            }
            self.y_stage.resize(n, 0.0);
            self.y_new.resize(n, 0.0);
            self.f.resize(n, 0.0);
            self.acc.resize(n, 0.0);
        }
    }

    /// Advances `y` from `*t` to `t_end` with the autonomous right-hand
    /// side `rhs`. `jac` fills `W` (zeroed beforehand); `W` and the
    /// factorisation are kept over a few steps while the step size allows. `admissible` and `accepted` work as for
    /// [`super::Dopri5::advance_observed`].
    #[allow(clippy::too_many_arguments)]
    pub fn advance_observed<F, J, V, A>(
        &mut self,
        t: &mut f64,
        y: &mut [f64],
        t_end: f64,
        h: &mut f64,
        mut rhs: F,
        mut jac: J,
        mut admissible: V,
        mut accepted: A,
    ) -> Result<(), OdeError>
    where
        F: FnMut(&[f64], &mut [f64]),
        J: FnMut(&[f64], MatMut<'_, f64>),
        V: FnMut(&[f64]) -> bool,
        A: FnMut(f64, &[f64]),
    {
        let n = y.len();
        self.resize(n);
        if *t >= t_end {
            return Ok(());
        }
        if !(*h > 0.0) {
            rhs(y, &mut self.f);
            self.stats.evaluations += 1;
            *h = self.initial_step(y, t_end - *t);
        }
        // Each call starts from a fresh W: y may have been changed outside.
        let mut stale = true;
        loop {
            if stale || self.w_age >= W_MAX_AGE {
                self.w.fill(0.0);
                jac(y, self.w.as_mut());
                self.stats.jacobians += 1;
                self.lu = None;
                self.w_age = 0;
                stale = false;
                if self.nonstiffness_exit {
                    self.rho = self.spectral_radius();
                }
            }
            let remaining = t_end - *t;
            let mut step = h.min(self.h_max);
            if self.lu.is_some() && step >= self.lu_h && step <= LU_SLACK * self.lu_h {
                step = self.lu_h;
            }
            let last = step >= remaining * (1.0 - 1e-12);
            if last {
                step = remaining;
            }
            if self.lu.is_none() || step != self.lu_h {
                self.factor(step);
            }
            let err = self.trial(y, step, &mut rhs);
            if !(err <= 1.0) {
                self.stats.rejected += 1;
                // An old W may be what failed; retry with a current one.
                stale = self.w_age > 0;
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(-1.0 / 3.0)).max(MIN_FACTOR)
                } else {
                    MIN_FACTOR
                };
                *h = step * factor;
                if *h < self.h_min {
                    return Err(OdeError::Underflow { t: *t, h: *h });
                }
                continue;
            }
            if !admissible(&self.y_new) {
                self.stats.inadmissible += 1;
                stale = self.w_age > 0;
                *h = 0.5 * step;
                if *h < self.h_min {
                    return Err(OdeError::Inadmissible { t: *t, h: *h });
                }
                continue;
            }
            self.stats.accepted += 1;
            if self.nonstiffness_exit {
                if step * self.rho < EXPLICIT_STABLE {
                    self.nonstiff_count += 1;
                } else {
                    self.nonstiff_count = 0;
                }
            }
            y.copy_from_slice(&self.y_new);
            self.w_age += 1;
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-1.0 / 3.0)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            let proposal = step * factor;
            if last {
                *t = t_end;
                accepted(*t, y);
                if step >= *h {
                    *h = proposal;
                }
                return Ok(());
            }
            *t += step;
            *h = proposal;
            accepted(*t, y);
            if self.nonstiffness_exit && self.nonstiffness_detected() {
                return Ok(());
            }
        }
    }

    fn initial_step(&self, y: &[f64], span: f64) -> f64 {
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..y.len() {
            let scale = self.atol + self.rtol * y[i].abs();
            d0 += (y[i] / scale).powi(2);
            d1 += (self.f[i] / scale).powi(2);
        }
        let h = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6 * span
        } else {
            0.01 * (d0 / d1).sqrt()
        };
        h.min(span).max(self.h_min)
    }

    /// Factorises `I - hγW` for steps of size `h`.
    fn factor(&mut self, h: f64) {
        let n = self.w.nrows();
        for j in 0..n {
            for i in 0..n {
                self.m[(i, j)] = -h * GAMMA * self.w[(i, j)];
            }
            self.m[(j, j)] += 1.0;
        }
        self.lu = Some(self.m.partial_piv_lu());
        self.lu_h = h;
        self.stats.factorizations += 1;
    }

    /// One trial step of size `h` with the current factorisation, which
    /// must be for the same `h`. Leaves the result in `y_new` and returns
    /// the scaled error norm.
    fn trial<F>(&mut self, y: &[f64], h: f64, rhs: &mut F) -> f64
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let n = y.len();
        let lu = self.lu.as_ref().expect("factorised before the trial step");
        for s in 0..4 {
            self.y_stage.copy_from_slice(y);
            self.acc.fill(0.0);
            for j in 0..s {
                let (a, g) = (ALPHA[s][j], GAMMA_OFF[s][j]);
                for i in 0..n {
                    self.y_stage[i] += a * self.k[j][i];
                    self.acc[i] += g * self.k[j][i];
                }
            }
            rhs(&self.y_stage, &mut self.f);
            self.stats.evaluations += 1;
            // r = h·F(stage) + h·W·Σγ_sj k_j
            let r = &mut self.k[s];
            for i in 0..n {
                r[i] = h * self.f[i];
            }
            for j in 0..n {
                let c = h * self.acc[j];
                if c != 0.0 {
                    let col = self.w.col_as_slice(j);
                    for i in 0..n {
                        r[i] += col[i] * c;
                    }
                }
            }
            lu.solve_in_place(MatMut::from_column_major_slice_mut(&mut r[..], n, 1));
        }
        let mut sum = 0.0;
        for i in 0..n {
            let mut ynew = y[i];
            let mut err = 0.0;
            for s in 0..4 {
                ynew += B[s] * self.k[s][i];
                err += (B[s] - B_HAT[s]) * self.k[s][i];
            }
            self.y_new[i] = ynew;
            let scale = self.atol + self.rtol * y[i].abs().max(ynew.abs());
            sum += (err / scale).powi(2);
        }
        if n == 0 {
            0.0
        } else {
            (sum / n as f64).sqrt()
        }
    }
}
