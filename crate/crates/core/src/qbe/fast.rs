//! O(n²) evaluation of the collision and evaporation sums.
//!
//! Every term depends on the colliding pair only through its energy sum
//! `s` and on the partner pair through `g(min)`. For each `s` the partner
//! pairs are tabulated once as
//!
//! `H_s(a) = Σ_{c<a} g(c)·P_s(c) + g(a)·Σ_{c≥a} P_s(c)`,
//!
//! where `P_s(c)` sums the pair factor over pairs with sum `s` and smaller
//! index `c`. A colliding pair with smaller index `a` then reads `H_s(a)`.
//! Evaporation losses sum over one free index only and use prefix sums.

use super::{LossRates, Rates, Window};
use crate::trap::level_degeneracy;

/// Which parts of the right-hand side to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parts {
    pub collisions: bool,
    pub evaporation: bool,
}

impl Parts {
    pub const ALL: Parts = Parts {
        collisions: true,
        evaporation: true,
    };
}

/// Reusable scratch space for the fast kernel.
#[derive(Clone, Debug, Default)]
pub struct FastKernel {
    g: Vec<f64>,
    p: [Vec<f64>; 4],
    h: [Vec<f64>; 4],
    suffix: Vec<f64>,
    bose_s0: Vec<f64>,
    bose_s1: Vec<f64>,
    fermi_s0: Vec<f64>,
    fermi_s1: Vec<f64>,
}

/// Σ over `l` in `lo..=hi` of `g(min(a, l))·y_l` from prefix sums
/// `s0[t] = Σ_{l<t} y_l` and `s1[t] = Σ_{l<t} g(l)·y_l`.
#[inline]
fn range_sum(s0: &[f64], s1: &[f64], g: &[f64], lo: i64, hi: i64, a: usize) -> f64 {
    if lo > hi {
        return 0.0;
    }
    let (lo, hi, a) = (lo as usize, hi as usize, a);
    let mut total = 0.0;
    if a > lo {
        total += s1[(hi + 1).min(a)] - s1[lo];
    }
    let mid = lo.max(a);
    if mid <= hi {
        total += g[a] * (s0[hi + 1] - s0[mid]);
    }
    total
}

impl FastKernel {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, b: &[f64], f: &[f64]) {
        let m = b.len().max(f.len()) + 2;
        if self.g.len() < m {
            self.g = (0..m).map(level_degeneracy).collect();
        }
        let half = m + 2;
        for v in self.p.iter_mut().chain(self.h.iter_mut()) {
            if v.len() < half {
                v.resize(half, 0.0);
            }
        }
        if self.suffix.len() < half {
            self.suffix.resize(half, 0.0);
        }
        prefix(&mut self.bose_s0, &mut self.bose_s1, &self.g, b.iter().map(|&x| 1.0 + x));
        prefix(&mut self.fermi_s0, &mut self.fermi_s1, &self.g, f.iter().map(|&x| 1.0 - x));
    }

    /// Fills `H_s` for both channels; returns the table length (`s/2 + 2`).
    fn tables(&mut self, s: usize, b: &[f64], f: &[f64]) -> usize {
        let (m_b, m_f) = (b.len(), f.len());
        let c_hi = s / 2;
        let len = c_hi + 2;
        for p in self.p.iter_mut() {
            p[..len].fill(0.0);
        }
        let [pg_bb, pl_bb, pg_bf, pl_bf] = &mut self.p;
        for c in s.saturating_sub(m_b - 1)..=c_hi.min(m_b - 1) {
            let d = s - c;
            if d >= m_b {
                continue;
            }
            let mult = if c == d { 1.0 } else { 2.0 };
            pg_bb[c] = mult * b[c] * b[d];
            pl_bb[c] = mult * (1.0 + b[c]) * (1.0 + b[d]);
        }
        for c in 0..=c_hi {
            let d = s - c;
            // Boson c, fermion d.
            if c < m_b && d < m_f {
                pg_bf[c] += b[c] * f[d];
                pl_bf[c] += (1.0 + b[c]) * (1.0 - f[d]);
            }
            // Boson d, fermion c.
            if c != d && d < m_b && c < m_f {
                pg_bf[c] += b[d] * f[c];
                pl_bf[c] += (1.0 + b[d]) * (1.0 - f[c]);
            }
        }
        let g = &self.g;
        for (p, h) in self.p.iter().zip(self.h.iter_mut()) {
            let suffix = &mut self.suffix;
            suffix[len - 1] = 0.0;
            for c in (0..=c_hi).rev() {
                suffix[c] = suffix[c + 1] + p[c];
            }
            let mut below = 0.0;
            for a in 0..len {
                h[a] = below + g[a] * suffix[a];
                if a <= c_hi {
                    below += g[a] * p[a];
                }
            }
        }
        len
    }

    /// Right-hand side per state written into `db` (length `window.m_b`)
    /// and `df` (length `window.m_f`); returns the evaporation loss rates.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        &mut self,
        b: &[f64],
        f: &[f64],
        window: &Window,
        alpha_b: f64,
        parts: Parts,
        db: &mut [f64],
        df: &mut [f64],
    ) -> LossRates {
        let Window { m_b, m_f, top_b, top_f } = *window;
        assert!(m_b >= 1 && m_f >= 1);
        assert_eq!(b.len(), m_b);
        assert_eq!(f.len(), m_f);
        assert_eq!(db.len(), m_b);
        assert_eq!(df.len(), m_f);
        db.fill(0.0);
        df.fill(0.0);
        self.prepare(b, f);
        let evap = parts.evaporation && window.evaporating();
        let mut rates = LossRates::default();
        let (mb, mf, tb, tf) = (m_b as i64, m_f as i64, top_b as i64, top_f as i64);
        let s_top = (m_b - 1) + (m_b - 1).max(m_f - 1);

        for s in 0..=s_top {
            self.tables(s, b, f);
            let si = s as i64;
            let [hg_bb, hl_bb, hg_bf, hl_bf] = &self.h;
            let g = &self.g;
            let (bs0, bs1, fs0, fs1) = (&self.bose_s0, &self.bose_s1, &self.fermi_s0, &self.fermi_s1);
            // Partner sums for evaporation losses at this s: the lost atom is
            // never the lowest of the four, so only min(a, partner) matters.
            let lbb = |a: usize| range_sum(bs0, bs1, g, (si - tb).max(0), (mb - 1).min(si - mb), a);
            let lost_boson_fermi_partner = |a: usize| range_sum(fs0, fs1, g, (si - tb).max(0), (mf - 1).min(si - mb), a);
            let lost_fermion_boson_partner = |a: usize| range_sum(bs0, bs1, g, (si - tf).max(0), (mb - 1).min(si - mf), a);

            // Boson i + boson j, both trapped.
            for i in s.saturating_sub(m_b - 1)..=s.min(m_b - 1) {
                let j = s - i;
                let a = i.min(j);
                let mut acc = 0.0;
                if parts.collisions {
                    acc += alpha_b * ((1.0 + b[i]) * (1.0 + b[j]) * hg_bb[a] - b[i] * b[j] * hl_bb[a]);
                }
                if evap {
                    acc -= 2.0 * alpha_b * b[i] * b[j] * lbb(a);
                }
                db[i] += acc;
            }
            // Boson i + fermion j, both trapped.
            for i in s.saturating_sub(m_f - 1)..=s.min(m_b - 1) {
                let j = s - i;
                let a = i.min(j);
                let mut acc = 0.0;
                if parts.collisions {
                    acc += (1.0 + b[i]) * (1.0 - f[j]) * hg_bf[a] - b[i] * f[j] * hl_bf[a];
                }
                if evap {
                    acc -= b[i] * f[j] * (lost_boson_fermi_partner(a) + lost_fermion_boson_partner(a));
                }
                db[i] += acc;
            }
            // Fermion i + boson j, both trapped.
            for i in s.saturating_sub(m_b - 1)..=s.min(m_f - 1) {
                let j = s - i;
                let a = i.min(j);
                let mut acc = 0.0;
                if parts.collisions {
                    acc += (1.0 - f[i]) * (1.0 + b[j]) * hg_bf[a] - f[i] * b[j] * hl_bf[a];
                }
                if evap {
                    acc -= f[i] * b[j] * (lost_boson_fermi_partner(a) + lost_fermion_boson_partner(a));
                }
                df[i] += acc;
            }
            if !evap {
                continue;
            }
            // Trapped pair -> trapped i + lost j = s - i.
            let gains = |lo: i64, hi: i64| (lo.max(0), hi);
            let (lo, hi) = gains(si - tb, (mb - 1).min(si - mb));
            for i in lo..=hi {
                let i = i as usize;
                let a = i.min(s - i);
                let r = alpha_b * (1.0 + b[i]) * hg_bb[a];
                db[i] += r;
                rates.n_b += r;
                rates.e_b += r * (s - i) as f64;
            }
            let (lo, hi) = gains(si - tf, (mb - 1).min(si - mf));
            for i in lo..=hi {
                let i = i as usize;
                let a = i.min(s - i);
                let r = (1.0 + b[i]) * hg_bf[a];
                db[i] += r;
                rates.n_f += r;
                rates.e_f += r * (s - i) as f64;
            }
            let (lo, hi) = gains(si - tb, (mf - 1).min(si - mb));
            for i in lo..=hi {
                let i = i as usize;
                let a = i.min(s - i);
                let r = (1.0 - f[i]) * hg_bf[a];
                df[i] += r;
                rates.n_b += r;
                rates.e_b += r * (s - i) as f64;
            }
        }
        for (i, x) in db.iter_mut().enumerate() {
            *x /= self.g[i];
        }
        for (i, x) in df.iter_mut().enumerate() {
            *x /= self.g[i];
        }
        rates
    }

    fn rates(&mut self, b: &[f64], f: &[f64], window: &Window, alpha_b: f64, parts: Parts) -> Rates {
        let mut db = vec![0.0; window.m_b];
        let mut df = vec![0.0; window.m_f];
        let loss = self.evaluate(b, f, window, alpha_b, parts, &mut db, &mut df);
        Rates { db, df, loss }
    }

    /// Same contract as [`super::reference::collision_rhs`].
    pub fn collision_rhs(&mut self, b: &[f64], f: &[f64], alpha_b: f64) -> Rates {
        let w = Window::closed(b.len(), f.len());
        self.rates(
            b,
            f,
            &w,
            alpha_b,
            Parts {
                collisions: true,
                evaporation: false,
            },
        )
    }

    /// Same contract as [`super::reference::evaporation_rhs`].
    pub fn evaporation_rhs(&mut self, b: &[f64], f: &[f64], window: &Window, alpha_b: f64) -> Rates {
        self.rates(
            b,
            f,
            window,
            alpha_b,
            Parts {
                collisions: false,
                evaporation: true,
            },
        )
    }

    pub fn total_rhs(&mut self, b: &[f64], f: &[f64], window: &Window, alpha_b: f64) -> Rates {
        self.rates(b, f, window, alpha_b, Parts::ALL)
    }
}

fn prefix(s0: &mut Vec<f64>, s1: &mut Vec<f64>, g: &[f64], y: impl Iterator<Item = f64>) {
    s0.clear();
    s1.clear();
    s0.push(0.0);
    s1.push(0.0);
    let (mut a0, mut a1) = (0.0, 0.0);
    for (l, v) in y.enumerate() {
        a0 += v;
        a1 += g[l] * v;
        s0.push(a0);
        s1.push(a1);
    }
}
