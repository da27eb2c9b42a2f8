//! Dormand–Prince 5(4) with an admissibility hook, and a linearly implicit
//! companion for stiff stretches ([`RosenbrockW`]).
//!
//! Besides the usual error test, every trial step is passed to a caller
//! predicate; an inadmissible result is rejected and the step halved, never
//! projected back.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

mod rosw;

pub use rosw::RosenbrockW;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OdeError {
    /// The error test kept failing down to the minimum step.
    Underflow { t: f64, h: f64 },
    /// Trial steps stayed inadmissible down to the minimum step.
    Inadmissible { t: f64, h: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub inadmissible: usize,
    pub evaluations: usize,
    pub jacobians: usize,
    pub factorizations: usize,
}

#[derive(Clone, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    pub stats: StepStats,
    /// Return early, before `t_end`, once the step size looks limited by
    /// stability rather than accuracy.
    pub stiffness_exit: bool,
    stiff_count: usize,
    nonstiff_count: usize,
}

/// Consecutive stability-limited steps that count as stiffness.
const STIFF_STEPS: usize = 15;

impl Dopri5 {
    pub fn new(dim: usize, rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
            stats: StepStats::default(),
            stiffness_exit: false,
            stiff_count: 0,
            nonstiff_count: 0,
        }
    }

    /// True once [`STIFF_STEPS`] accepted steps in a row (tolerating short
    /// interruptions) sat on the stability boundary.
    pub fn stiff_detected(&self) -> bool {
        self.stiff_count >= STIFF_STEPS
    }

    pub fn reset_stiffness(&mut self) {
        self.stiff_count = 0;
        self.nonstiff_count = 0;
    }

    /// Hairer's test: `h·|λ|` estimated from the last two stages, which
    /// share the time `t + h`.
    fn track_stiffness(&mut self, h: f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.y_new.len() {
            num += (self.k[6][i] - self.k[5][i]).powi(2);
            den += (self.y_new[i] - self.y_stage[i]).powi(2);
        }
        if den > 0.0 && h * (num / den).sqrt() > 3.25 {
            self.nonstiff_count = 0;
            self.stiff_count += 1;
        } else {
            self.nonstiff_count += 1;
            if self.nonstiff_count == 6 {
                self.stiff_count = 0;
            }
        }
    }

    fn resize(&mut self, dim: usize) {
        if self.y_new.len() != dim {
            for k in &mut self.k {
                k.resize(dim, 0.0);
            }
            self.y_stage.resize(dim, 0.0);
            self.y_new.resize(dim, 0.0);
        }
    }

    fn error_norm(&self, y: &[f64], h: f64) -> f64 {
        let mut sum = 0.0;
        for i in 0..y.len() {
            let err = h * (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7);
            let scale = self.atol + self.rtol * y[i].abs().max(self.y_new[i].abs());
            let r = err / scale;
            sum += r * r;
        }
        if y.is_empty() {
            0.0
        } else {
            (sum / y.len() as f64).sqrt()
        }
    }

    /// Advances `y` from `*t` to `t_end`. `h` carries the step proposal in
    /// and out; a nonpositive value asks for an automatic initial step.
    ///
    /// `admissible` sees each trial solution and returns `false` to reject it.
    pub fn advance<F, V>(
        &mut self,
        t: &mut f64,
        y: &mut [f64],
        t_end: f64,
        h: &mut f64,
        rhs: F,
        admissible: V,
    ) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        V: FnMut(&[f64]) -> bool,
    {
        self.advance_observed(t, y, t_end, h, rhs, admissible, |_, _| {})
    }

    /// As [`Dopri5::advance`], calling `accepted` with every accepted
    /// `(t, y)`.
    #[allow(clippy::too_many_arguments)]
    pub fn advance_observed<F, V, A>(
        &mut self,
        t: &mut f64,
        y: &mut [f64],
        t_end: f64,
        h: &mut f64,
        mut rhs: F,
        mut admissible: V,
        mut accepted: A,
    ) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        V: FnMut(&[f64]) -> bool,
        A: FnMut(f64, &[f64]),
    {
        let n = y.len();
        self.resize(n);
        if *t >= t_end {
            return Ok(());
        }
        rhs(*t, y, &mut self.k[0]);
        self.stats.evaluations += 1;
        if !(*h > 0.0) {
            *h = self.initial_step(y, t_end - *t);
        }
        loop {
            let remaining = t_end - *t;
            let last = *h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h.min(self.h_max) };
            self.trial(*t, y, step, &mut rhs);
            let err = self.error_norm(y, step);
            if !(err <= 1.0) {
                self.stats.rejected += 1;
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(-0.2)).max(MIN_FACTOR)
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
                *h = 0.5 * step;
                if *h < self.h_min {
                    return Err(OdeError::Inadmissible { t: *t, h: *h });
                }
                continue;
            }
            self.stats.accepted += 1;
            if self.stiffness_exit {
                self.track_stiffness(step);
            }
            y.copy_from_slice(&self.y_new);
            // First-same-as-last: the final stage is the next first stage.
            let (first, rest) = self.k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            let proposal = step * factor;
            if last {
                *t = t_end;
                accepted(*t, y);
                // A step shortened to hit t_end says little about the next one.
                if step >= *h {
                    *h = proposal;
                }
                return Ok(());
            }
            *t += step;
            *h = proposal;
            accepted(*t, y);
            if self.stiffness_exit && self.stiff_detected() {
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
            d1 += (self.k[0][i] / scale).powi(2);
        }
        let h = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6 * span
        } else {
            0.01 * (d0 / d1).sqrt()
        };
        h.min(span).max(self.h_min)
    }

    fn trial<F>(&mut self, t: f64, y: &[f64], h: f64, rhs: &mut F)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ys = &mut self.y_stage;
        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, ys, k2);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, ys, k3);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, ys, k4);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, ys, k5);
        for i in 0..n {
            ys[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, ys, k6);
        let yn = &mut self.y_new;
        for i in 0..n {
            yn[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, yn, k7);
        self.stats.evaluations += 6;
    }
}
