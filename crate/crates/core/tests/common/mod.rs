//! Shared helpers for the integration tests: an independent brute-force
//! kernel and random state generators.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sympcool::qbe::{LossRates, Window};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn g(e: usize) -> f64 {
    ((e + 1) * (e + 2)) as f64 / 2.0
}

/// Output of the brute-force kernel: per-state derivatives of the trapped
/// levels, loss rates, and the largest gross gain or loss per state.
pub struct Brute {
    pub db: Vec<f64>,
    pub df: Vec<f64>,
    pub loss: LossRates,
    pub scale: f64,
}

/// Full collision integral on each species' levels `0..=top`, with the
/// levels above the trap held empty. A gain into an empty level above the
/// trap is an evaporated atom.
///
/// Every ordered quadruple `(i, j, k, l)` is visited and the energy
/// constraint is checked explicitly.
pub fn brute_force(b: &[f64], f: &[f64], w: &Window, alpha_b: f64) -> Brute {
    let nb = w.top_b.max(w.m_b - 1) + 1;
    let nf = w.top_f.max(w.m_f - 1) + 1;
    let mut bx = vec![0.0; nb];
    let mut fx = vec![0.0; nf];
    bx[..w.m_b].copy_from_slice(&b[..w.m_b]);
    fx[..w.m_f].copy_from_slice(&f[..w.m_f]);
    let gmin = |a: usize, b: usize, c: usize, d: usize| g(a.min(b).min(c).min(d));

    let mut gain_b = vec![0.0; nb];
    let mut loss_b = vec![0.0; nb];
    let mut gain_f = vec![0.0; nf];
    let mut loss_f = vec![0.0; nf];
    // Boson-boson: (k, l) -> (i, j).
    for i in 0..nb {
        for j in 0..nb {
            for k in 0..nb {
                for l in 0..nb {
                    if i + j != k + l {
                        continue;
                    }
                    let wgt = alpha_b * gmin(i, j, k, l);
                    gain_b[i] += wgt * bx[k] * bx[l] * (1.0 + bx[i]) * (1.0 + bx[j]);
                    loss_b[i] += wgt * bx[i] * bx[j] * (1.0 + bx[k]) * (1.0 + bx[l]);
                }
            }
        }
    }
    // Boson i + fermion j <-> boson k + fermion l.
    for i in 0..nb {
        for j in 0..nf {
            for k in 0..nb {
                for l in 0..nf {
                    if i + j != k + l {
                        continue;
                    }
                    let wgt = gmin(i, j, k, l);
                    let fwd = wgt * bx[k] * fx[l] * (1.0 + bx[i]) * (1.0 - fx[j]);
                    let back = wgt * bx[i] * fx[j] * (1.0 + bx[k]) * (1.0 - fx[l]);
                    gain_b[i] += fwd;
                    loss_b[i] += back;
                    // The same event seen from the fermion's side.
                    gain_f[j] += fwd;
                    loss_f[j] += back;
                }
            }
        }
    }

    let mut loss = LossRates::default();
    for e in w.m_b..nb {
        loss.n_b += gain_b[e];
        loss.e_b += gain_b[e] * e as f64;
    }
    for e in w.m_f..nf {
        loss.n_f += gain_f[e];
        loss.e_f += gain_f[e] * e as f64;
    }
    let mut scale: f64 = 0.0;
    let db: Vec<f64> = (0..w.m_b)
        .map(|e| {
            scale = scale.max(gain_b[e] / g(e)).max(loss_b[e] / g(e));
            (gain_b[e] - loss_b[e]) / g(e)
        })
        .collect();
    let df: Vec<f64> = (0..w.m_f)
        .map(|e| {
            scale = scale.max(gain_f[e] / g(e)).max(loss_f[e] / g(e));
            (gain_f[e] - loss_f[e]) / g(e)
        })
        .collect();
    Brute { db, df, loss, scale }
}

/// Random occupations spanning several decades, bosons up to `b_max`.
pub fn random_occupations(rng: &mut impl Rng, n: usize, b_max: f64) -> (Vec<f64>, Vec<f64>) {
    let b = (0..n).map(|_| b_max * 10f64.powf(-4.0 * rng.random::<f64>())).collect();
    let f = (0..n).map(|_| rng.random::<f64>()).collect();
    (b, f)
}

/// Max-norm of `a - b` over both species.
pub fn max_diff(a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
    let d = |x: &[f64], y: &[f64]| {
        assert_eq!(x.len(), y.len());
        x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
    };
    d(a.0, b.0).max(d(a.1, b.1))
}

use sympcool::qbe::{EvaporationSchedule, KernelChoice, ScenarioConfig};

/// Small closed-system scenario.
pub fn scenario(n_b: f64, n_f: f64, t_b0: f64, t_f0: f64, n_max: usize, t_end: f64) -> ScenarioConfig {
    ScenarioConfig {
        trap: None,
        n_b,
        n_f,
        t_b0,
        t_f0,
        n_max,
        alpha_b: None,
        schedule: EvaporationSchedule::NONE,
        t_end,
        snapshot_every: t_end / 10.0,
        rtol: 1e-8,
        atol: 1e-12,
        kernel: KernelChoice::Fast,
        store_occupations: false,
    }
}

pub fn bose(e: usize, z: f64, t: f64) -> f64 {
    1.0 / ((e as f64 / t).exp() / z - 1.0)
}

pub fn fermi(e: usize, z: f64, t: f64) -> f64 {
    1.0 / ((e as f64 / t).exp() / z + 1.0)
}

use sympcool::qbe::Snapshot;

/// Largest entropy decrease between two snapshots that rounding can
/// explain. Near equilibrium `dS = dE/T - ln z_b dN_b - ln z_f dN_f`, so
/// the measured drift of the conserved sums bounds the spurious change;
/// the last term is the rounding of the entropy sum itself.
pub fn entropy_slack(a: &Snapshot, b: &Snapshot) -> f64 {
    let energy = |s: &Snapshot| s.n_b * s.mean_e_b + s.n_f * s.mean_e_f;
    let ln_z = |z: f64| if z > 0.0 { z.ln().abs() } else { 0.0 };
    (energy(b) - energy(a)).abs() / b.t_b.min(b.t_f)
        + (b.n_b - a.n_b).abs() * ln_z(b.z_b)
        + (b.n_f - a.n_f).abs() * ln_z(b.z_f)
        + 1e-14 * a.entropy.abs()
}
