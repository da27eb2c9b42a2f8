mod common;

use common::{bose, entropy_slack, fermi, random_occupations, rng, scenario};
use rand::Rng;
use sympcool::observables::entropy;
use sympcool::qbe::fast::FastKernel;
use sympcool::qbe::{reference, run, CutoffSchedule, Engine, MixtureState, Window};

fn g(e: usize) -> f64 {
    ((e + 1) * (e + 2)) as f64 / 2.0
}

#[test]
fn equilibrium_states_are_stationary() {
    let mut r = rng(21);
    let mut k = FastKernel::new();
    for _ in 0..20 {
        let n = r.random_range(16..64);
        let t = r.random_range(1.0..30.0);
        let z_b = r.random_range(0.01..0.99);
        let z_f = (r.random_range(-7.0..7.0f64)).exp();
        let alpha = r.random_range(0.0..6.0);
        let b: Vec<f64> = (0..n).map(|e| bose(e, z_b, t)).collect();
        let f: Vec<f64> = (0..n).map(|e| fermi(e, z_f, t)).collect();
        let scale = reference::collision_terms(&b, &f, alpha).gross_scale();
        let fast = k.collision_rhs(&b, &f, alpha);
        let slow = reference::collision_rhs(&b, &f, alpha);
        for rates in [&fast, &slow] {
            let worst = rates.db.iter().chain(&rates.df).fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(
                worst < 1e-12 * scale,
                "z_b {z_b} z_f {z_f} T {t}: residual {worst:e} vs scale {scale:e}"
            );
        }
    }
}

#[test]
fn kernel_sums_conserve_number_and_energy() {
    let mut r = rng(22);
    let mut k = FastKernel::new();
    for case in 0..12 {
        let n = r.random_range(8..80);
        let (b, f) = random_occupations(&mut r, n, 30.0);
        let w = if case % 2 == 0 {
            Window::closed(n, n)
        } else {
            Window::from_cuts(r.random_range(2.0..(n - 1) as f64), r.random_range(2.0..(n - 1) as f64), n)
        };
        let (b, f) = (&b[..w.m_b], &f[..w.m_f]);
        let terms = reference::collision_terms(b, f, 1.7);
        let rates = k.total_rhs(b, f, &w, 1.7);
        // Scale: gross per-level particle flux.
        let flux = |x: &[f64]| x.iter().enumerate().map(|(e, v)| g(e) * (e as f64 + 1.0) * v.abs()).sum::<f64>();
        let scale = flux(&terms.gain.db) + flux(&terms.gain.df) + flux(&terms.loss.db) + flux(&terms.loss.df);
        let sum = |x: &[f64], w: &dyn Fn(usize) -> f64| x.iter().enumerate().map(|(e, v)| g(e) * w(e) * v).sum::<f64>();
        let nb = sum(&rates.db, &|_| 1.0) + rates.loss.n_b;
        let nf = sum(&rates.df, &|_| 1.0) + rates.loss.n_f;
        let en = sum(&rates.db, &|e| e as f64) + sum(&rates.df, &|e| e as f64) + rates.loss.e_b + rates.loss.e_f;
        for (name, v) in [("N_b", nb), ("N_f", nf), ("E", en)] {
            assert!(v.abs() < 1e-12 * scale, "case {case} {name}: {v:e} vs {scale:e}");
        }
    }
}

fn totals(s: &MixtureState) -> [f64; 3] {
    [
        s.n_b() + s.lost_n_b,
        s.n_f() + s.lost_n_f,
        s.energy_b() + s.energy_f() + s.lost_e_b + s.lost_e_f,
    ]
}

#[test]
fn closed_runs_conserve_number_and_energy() {
    for (n_b, n_f, t_b, t_f) in [(2000.0, 300.0, 4.0, 15.0), (500.0, 800.0, 10.0, 3.0), (3000.0, 50.0, 2.5, 9.0)] {
        let cfg = scenario(n_b, n_f, t_b, t_f, 60, 0.5);
        let out = run(&cfg).unwrap();
        let first = &out.snapshots[0];
        let e0 = first.n_b * first.mean_e_b + first.n_f * first.mean_e_f;
        for s in &out.snapshots {
            assert!((s.n_b / n_b - 1.0).abs() < 1e-8, "{}", s.n_b);
            assert!((s.n_f / n_f - 1.0).abs() < 1e-8, "{}", s.n_f);
            let e = s.n_b * s.mean_e_b + s.n_f * s.mean_e_f;
            assert!((e / e0 - 1.0).abs() < 1e-8, "{e} vs {e0}");
        }
        assert_eq!(out.bound_violations, 0);
    }
}

#[test]
fn evaporating_runs_conserve_trapped_plus_lost() {
    let mut cfg = scenario(3000.0, 600.0, 8.0, 12.0, 70, 0.6);
    cfg.schedule.boson = CutoffSchedule::ramp(60.0, 0.05, 40.0, 2.0);
    cfg.schedule.fermion = CutoffSchedule::ramp(60.0, 0.1, 45.0, 1.5);
    let mut engine = Engine::new(cfg).unwrap();
    let start = totals(engine.state());
    let (mut last_b, mut last_f) = (f64::INFINITY, f64::INFINITY);
    for k in 1..=30 {
        engine.advance_to(0.02 * k as f64).unwrap();
        let s = engine.state();
        let now = totals(s);
        for (a, b) in now.iter().zip(&start) {
            assert!((a / b - 1.0).abs() < 1e-8, "{now:?} vs {start:?}");
        }
        assert!(s.n_b() <= last_b * (1.0 + 1e-12) && s.n_f() <= last_f * (1.0 + 1e-12));
        last_b = s.n_b();
        last_f = s.n_f();
    }
    let s = engine.state();
    assert!(s.lost_n_b > 0.0 && s.lost_n_f > 0.0);
}

#[test]
fn entropy_never_decreases_in_closed_runs() {
    let mut r = rng(23);
    for _ in 0..10 {
        let n_b = r.random_range(100.0..5000.0);
        let n_f = r.random_range(10.0..1000.0);
        let t_b = r.random_range(1.0..12.0);
        let t_f = r.random_range(1.0..12.0);
        let alpha = r.random_range(0.0..4.0);
        let mut cfg = scenario(n_b, n_f, t_b, t_f, 50, 0.4);
        cfg.alpha_b = Some(alpha);
        cfg.snapshot_every = 0.01;
        let out = run(&cfg).unwrap();
        for w in out.snapshots.windows(2) {
            assert!(
                w[1].entropy >= w[0].entropy - entropy_slack(&w[0], &w[1]),
                "S fell from {} to {} at tau {} (N_b {n_b}, N_f {n_f}, T_b {t_b}, T_f {t_f})",
                w[0].entropy,
                w[1].entropy,
                w[1].tau
            );
        }
        assert!(out.snapshots.last().unwrap().entropy > out.snapshots[0].entropy || t_b == t_f);
    }
}

#[test]
fn occupation_bounds_hold_at_every_step() {
    // Cold degenerate fermions against hot bosons, and a condensing gas.
    for (n_b, n_f, t_b, t_f) in [(200.0, 2000.0, 25.0, 0.5), (5000.0, 100.0, 3.0, 20.0)] {
        let mut cfg = scenario(n_b, n_f, t_b, t_f, 60, 0.3);
        cfg.schedule.boson = CutoffSchedule::ramp(58.0, 0.1, 40.0, 3.0);
        let out = run(&cfg).unwrap();
        assert!(out.checked_steps > 10);
        assert_eq!(out.bound_violations, 0);
        assert!(out.final_state.bound_violation().is_none());
    }
}

#[test]
fn fermions_alone_are_frozen() {
    let n = 40;
    let mut r = rng(24);
    let (_, f) = random_occupations(&mut r, n, 1.0);
    let zero = vec![0.0; n];
    let mut k = FastKernel::new();
    let w = Window::from_cuts(20.0, 15.5, n);
    let rates = k.total_rhs(&zero[..w.m_b], &f[..w.m_f], &w, 3.0);
    assert!(rates.db.iter().chain(&rates.df).all(|&x| x == 0.0));
    let slow = reference::evaporation_rhs(&zero[..w.m_b], &f[..w.m_f], &w, 3.0);
    assert!(slow.df.iter().all(|&x| x == 0.0));

    let mut cfg = scenario(0.0, 300.0, 0.0, 6.0, n, 0.5);
    cfg.schedule.fermion = CutoffSchedule::ramp(30.0, 0.1, 30.0, 2.0);
    let mut engine = Engine::new(cfg).unwrap();
    let before = engine.state().clone();
    engine.advance_to(0.05).unwrap();
    assert_eq!(engine.state().f, before.f);
    assert_eq!(engine.state().lost_n_f, 0.0);
}

#[test]
fn common_temperature_start_is_stationary() {
    // Above the condensation temperature of 2000 bosons (about 11.8).
    let cfg = scenario(2000.0, 400.0, 15.0, 15.0, 120, 0.01);
    let out = run(&cfg).unwrap();
    let first = sympcool::qbe::init_state(&cfg).unwrap();
    let last = &out.final_state;
    let drift = first
        .b
        .iter()
        .zip(&last.b)
        .chain(first.f.iter().zip(&last.f))
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(drift < 1e-9, "{drift:e}");
}

#[test]
fn entropy_is_maximal_at_equilibrium() {
    let n = 40;
    let t = 6.0;
    let b: Vec<f64> = (0..n).map(|e| bose(e, 0.6, t)).collect();
    let f: Vec<f64> = (0..n).map(|e| fermi(e, 3.0, t)).collect();
    let mut state = MixtureState::vacuum(n);
    state.b = b;
    state.f = f;
    let s0 = entropy(&state);
    let mut r = rng(25);
    for _ in 0..200 {
        let mut lv = [r.random_range(0..n), r.random_range(0..n), r.random_range(0..n)];
        lv.sort();
        if lv[0] == lv[1] || lv[1] == lv[2] {
            continue;
        }
        let [a, bb, c] = lv;
        // Moves that keep both N and E fixed.
        let dir = [(c - bb) as f64 / g(a), (a as f64 - c as f64) / g(bb), (bb - a) as f64 / g(c)];
        let mut p = state.clone();
        let occ = if r.random::<bool>() { &mut p.b } else { &mut p.f };
        // Step small against every touched occupation and its hole.
        let room = lv
            .iter()
            .zip(dir)
            .map(|(&l, d)| occ[l].min((1.0 - occ[l]).abs().max(occ[l])) / d.abs())
            .fold(f64::INFINITY, f64::min);
        let eps = 1e-3 * room * r.random_range(-1.0..1.0);
        for (&l, d) in lv.iter().zip(dir) {
            occ[l] += eps * d;
        }
        if p.bound_violation().is_some() {
            continue;
        }
        assert!(entropy(&p) <= s0 * (1.0 + 1e-14), "{} > {s0}", entropy(&p));
    }
}
