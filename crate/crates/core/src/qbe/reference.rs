//! Direct O(n³) evaluation of the collision and evaporation sums.
//!
//! Slow but literal; the fast kernel is checked against it.

use super::{LossRates, Rates, Window};
use crate::trap::level_degeneracy as g;

/// Gain and loss parts of a right-hand side, both nonnegative.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Terms {
    pub gain: Rates,
    pub loss: Rates,
}

impl Terms {
    fn new(m_b: usize, m_f: usize) -> Self {
        let zero = || Rates {
            db: vec![0.0; m_b],
            df: vec![0.0; m_f],
            loss: LossRates::default(),
        };
        Terms {
            gain: zero(),
            loss: zero(),
        }
    }

    pub fn net(&self) -> Rates {
        Rates {
            db: self.gain.db.iter().zip(&self.loss.db).map(|(a, b)| a - b).collect(),
            df: self.gain.df.iter().zip(&self.loss.df).map(|(a, b)| a - b).collect(),
            loss: self.gain.loss,
        }
    }

    /// Largest per-state gain or loss rate, the natural scale of the net
    /// derivative.
    pub fn gross_scale(&self) -> f64 {
        self.gain
            .db
            .iter()
            .chain(&self.gain.df)
            .chain(&self.loss.db)
            .chain(&self.loss.df)
            .fold(0.0, |m, &x| m.max(x.abs()))
    }

    fn per_state(&mut self) {
        for r in [&mut self.gain, &mut self.loss] {
            for (i, x) in r.db.iter_mut().enumerate() {
                *x /= g(i);
            }
            for (i, x) in r.df.iter_mut().enumerate() {
                *x /= g(i);
            }
        }
    }
}

fn w4(i: usize, j: usize, k: usize, l: usize) -> f64 {
    g(i.min(j).min(k).min(l))
}

/// Index `i + j - k` if it lies in `lo..hi`.
fn partner(i: usize, j: usize, k: usize, lo: usize, hi: usize) -> Option<usize> {
    let l = (i + j).checked_sub(k)?;
    (lo <= l && l < hi).then_some(l)
}

/// In-trap collisions with every participant on levels `0..b.len()`
/// (bosons) or `0..f.len()` (fermions).
pub fn collision_terms(b: &[f64], f: &[f64], alpha_b: f64) -> Terms {
    let (m_b, m_f) = (b.len(), f.len());
    let mut t = Terms::new(m_b, m_f);
    for i in 0..m_b {
        let (mut gain, mut loss) = (0.0, 0.0);
        for j in 0..m_b {
            for k in 0..m_b {
                if let Some(l) = partner(i, j, k, 0, m_b) {
                    let w = alpha_b * w4(i, j, k, l);
                    gain += w * b[k] * b[l] * (1.0 + b[i]) * (1.0 + b[j]);
                    loss += w * b[i] * b[j] * (1.0 + b[k]) * (1.0 + b[l]);
                }
            }
        }
        // Boson i + fermion j <-> boson k + fermion l.
        for j in 0..m_f {
            for k in 0..m_b {
                if let Some(l) = partner(i, j, k, 0, m_f) {
                    let w = w4(i, j, k, l);
                    gain += w * b[k] * f[l] * (1.0 + b[i]) * (1.0 - f[j]);
                    loss += w * b[i] * f[j] * (1.0 + b[k]) * (1.0 - f[l]);
                }
            }
        }
        t.gain.db[i] = gain;
        t.loss.db[i] = loss;
    }
    // Fermion i + boson j <-> fermion k + boson l.
    for i in 0..m_f {
        let (mut gain, mut loss) = (0.0, 0.0);
        for j in 0..m_b {
            for k in 0..m_f {
                if let Some(l) = partner(i, j, k, 0, m_b) {
                    let w = w4(i, j, k, l);
                    gain += w * b[l] * f[k] * (1.0 - f[i]) * (1.0 + b[j]);
                    loss += w * f[i] * b[j] * (1.0 - f[k]) * (1.0 + b[l]);
                }
            }
        }
        t.gain.df[i] = gain;
        t.loss.df[i] = loss;
    }
    t.per_state();
    t
}

pub fn collision_rhs(b: &[f64], f: &[f64], alpha_b: f64) -> Rates {
    collision_terms(b, f, alpha_b).net()
}

/// Collisions of trapped atoms that send exactly one product into the
/// evaporation range of its species. `b` and `f` hold the trapped levels
/// only (`window.m_b`, `window.m_f` entries).
pub fn evaporation_terms(b: &[f64], f: &[f64], window: &Window, alpha_b: f64) -> Terms {
    let Window { m_b, m_f, top_b, top_f } = *window;
    assert_eq!(b.len(), m_b);
    assert_eq!(f.len(), m_f);
    let lost_b = m_b..=top_b;
    let lost_f = m_f..=top_f;
    let mut t = Terms::new(m_b, m_f);
    let mut rates = LossRates::default();

    for i in 0..m_b {
        let (mut gain, mut loss) = (0.0, 0.0);
        // Bosons k, l -> boson i + boson j (lost).
        for j in lost_b.clone() {
            for k in 0..m_b {
                if let Some(l) = partner(i, j, k, 0, m_b) {
                    let r = alpha_b * w4(i, j, k, l) * b[k] * b[l] * (1.0 + b[i]);
                    gain += r;
                    rates.n_b += r;
                    rates.e_b += r * j as f64;
                }
            }
        }
        // Bosons i, j -> boson k (lost) + boson l.
        for j in 0..m_b {
            for k in lost_b.clone() {
                if let Some(l) = partner(i, j, k, 0, m_b) {
                    loss += 2.0 * alpha_b * w4(i, j, k, l) * b[i] * b[j] * (1.0 + b[l]);
                }
            }
        }
        // Boson k + fermion l -> boson i + fermion j (lost).
        for j in lost_f.clone() {
            for k in 0..m_b {
                if let Some(l) = partner(i, j, k, 0, m_f) {
                    let r = w4(i, j, k, l) * b[k] * f[l] * (1.0 + b[i]);
                    gain += r;
                    rates.n_f += r;
                    rates.e_f += r * j as f64;
                }
            }
        }
        // Boson i + fermion j -> boson k (lost) + fermion l.
        for j in 0..m_f {
            for k in lost_b.clone() {
                if let Some(l) = partner(i, j, k, 0, m_f) {
                    loss += w4(i, j, k, l) * b[i] * f[j] * (1.0 - f[l]);
                }
            }
        }
        // Boson i + fermion j -> boson k + fermion l (lost).
        for j in 0..m_f {
            for k in 0..m_b {
                if let Some(l) = partner(i, j, k, m_f, top_f + 1) {
                    loss += w4(i, j, k, l) * b[i] * f[j] * (1.0 + b[k]);
                }
            }
        }
        t.gain.db[i] = gain;
        t.loss.db[i] = loss;
    }

    for i in 0..m_f {
        let (mut gain, mut loss) = (0.0, 0.0);
        // Fermion k + boson l -> fermion i + boson j (lost).
        for j in lost_b.clone() {
            for k in 0..m_f {
                if let Some(l) = partner(i, j, k, 0, m_b) {
                    let r = w4(i, j, k, l) * b[l] * f[k] * (1.0 - f[i]);
                    gain += r;
                    rates.n_b += r;
                    rates.e_b += r * j as f64;
                }
            }
        }
        // Fermion i + boson j -> fermion k (lost) + boson l.
        for j in 0..m_b {
            for k in lost_f.clone() {
                if let Some(l) = partner(i, j, k, 0, m_b) {
                    loss += w4(i, j, k, l) * f[i] * b[j] * (1.0 + b[l]);
                }
            }
        }
        // Fermion i + boson j -> fermion k + boson l (lost).
        for j in 0..m_b {
            for k in 0..m_f {
                if let Some(l) = partner(i, j, k, m_b, top_b + 1) {
                    loss += w4(i, j, k, l) * f[i] * b[j] * (1.0 - f[k]);
                }
            }
        }
        t.gain.df[i] = gain;
        t.loss.df[i] = loss;
    }
    t.gain.loss = rates;
    t.per_state();
    t
}

pub fn evaporation_rhs(b: &[f64], f: &[f64], window: &Window, alpha_b: f64) -> Rates {
    evaporation_terms(b, f, window, alpha_b).net()
}
