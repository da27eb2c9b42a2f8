use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};
use sympcool::mbmodel::{efold_time, integrate_two_temperature, MbOptions, TwoTempState};
use sympcool::meanfield::{mf_ratio, overlay, tf_radius, MeanFieldInput};
use sympcool::qbe::{run_observed, CutoffSchedule, ScenarioConfig, Snapshot};
use sympcool::statmech::{approx_t_classical, approx_t_degenerate, equilibrium_temperature, EquilibriumOptions};
use sympcool::observables::{spatial_profile, PROFILE_POINTS};
use sympcool::statmech::Species;
use sympcool::trap::{fermi_level, tau0, EnergyGrid, FermiConvention, TrapSpec};

use crate::config::{resolve_trap, Config, EquilibriumConfig, SweepConfig};
use crate::output::{num, OutputDir, Units};
use crate::CliError;

fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("missing table `[{name}]`")))
}

fn units(trap: Option<&TrapSpec>) -> Option<Units> {
    trap.map(|t| Units {
        tau0_s: tau0(t),
        hbar_omega_j: t.energy_quantum(),
    })
}

/// Wraps a core error: numerical failures get a diagnostics file, anything
/// else is reported as bad input.
fn fail(out: &OutputDir, err: sympcool::Error, extra: Value) -> CliError {
    if err.is_numerical() {
        if let Err(io) = out.write_diagnostics(&err, extra) {
            return io;
        }
        CliError::Numerical(err)
    } else {
        CliError::Config(err.to_string())
    }
}

fn bad_input(err: sympcool::Error) -> CliError {
    CliError::Config(err.to_string())
}

pub fn equilibrium(config: &Config, dir: &Path) -> Result<Value, CliError> {
    let eq = section(&config.equilibrium, "equilibrium")?;
    validate_equilibrium(eq)?;
    let mut out = OutputDir::create(dir, config, "equilibrium")?;
    let mut csv = out.csv(
        "equilibrium.csv",
        &[
            "n_f",
            "t_fermi",
            "t_f0_over_t_fermi",
            "t_b0",
            "t_f0",
            "t_inf",
            "t_inf_over_t_fermi",
            "approx_degenerate_over_t_fermi",
            "approx_classical_over_t_fermi",
            "condensate_number",
            "method",
        ],
    )?;
    let opts = EquilibriumOptions::default();
    let mut worst_degenerate: f64 = 0.0;
    for &n_f in &eq.n_f {
        // Temperatures are measured in the continuum Fermi temperature,
        // the unit of the degenerate approximation.
        let t_fermi = fermi_level(n_f, FermiConvention::Continuum).map_err(bad_input)?;
        let t_b0 = eq.t_b0_over_t_fermi * t_fermi;
        for k in 0..eq.points {
            let x = if eq.points == 1 {
                eq.t_f0_min
            } else {
                eq.t_f0_min + (eq.t_f0_max - eq.t_f0_min) * k as f64 / (eq.points - 1) as f64
            };
            let t_f0 = x * t_fermi;
            let grid = match eq.n_max {
                Some(n) => EnergyGrid::new(n).map_err(bad_input)?,
                None => EnergyGrid::covering(eq.n_b.max(n_f), t_f0.max(t_b0)),
            };
            let r = equilibrium_temperature(eq.n_b, n_f, t_b0, t_f0, &grid, &opts)
                .map_err(|e| fail(&out, e, json!({ "n_f": n_f, "t_f0": t_f0 })))?;
            let deg = approx_t_degenerate(t_fermi, t_b0, t_f0).map_err(bad_input)?;
            let cla = approx_t_classical(eq.n_b, n_f, t_b0, t_f0).map_err(bad_input)? / t_fermi;
            let ratio = r.t_infinity / t_fermi;
            if n_f <= 1e5 && x >= 0.5 {
                worst_degenerate = worst_degenerate.max((ratio - deg).abs() / ratio);
            }
            csv.row(&[
                num(n_f),
                num(t_fermi),
                num(x),
                num(t_b0),
                num(t_f0),
                num(r.t_infinity),
                num(ratio),
                num(deg),
                num(cla),
                num(r.condensate_number),
                serde_json::to_value(r.method).unwrap().as_str().unwrap_or("").to_string(),
            ])?;
        }
    }
    csv.flush()?;
    let summary = json!({ "max_rel_gap_degenerate_n_f_le_1e5": worst_degenerate });
    out.write_manifest(None, &summary)?;
    Ok(summary)
}

fn validate_equilibrium(eq: &EquilibriumConfig) -> Result<(), CliError> {
    if eq.n_f.is_empty() {
        return Err(CliError::Config("equilibrium.n_f must list at least one value".into()));
    }
    if eq.points == 0 {
        return Err(CliError::Config("equilibrium.points must be at least 1".into()));
    }
    if !(eq.t_f0_min > 0.0 && eq.t_f0_max >= eq.t_f0_min) {
        return Err(CliError::Config(
            "equilibrium.t_f0_min must be positive and not above equilibrium.t_f0_max".into(),
        ));
    }
    if !(eq.t_b0_over_t_fermi >= 0.0) {
        return Err(CliError::Config("equilibrium.t_b0_over_t_fermi must be nonnegative".into()));
    }
    Ok(())
}

pub fn mbmodel(config: &Config, dir: &Path) -> Result<Value, CliError> {
    let mb = section(&config.mbmodel, "mbmodel")?;
    let state = TwoTempState {
        t_bar_f: mb.t_f0,
        t_bar_b: mb.t_b0,
        n_f: mb.n_f,
        n_b: mb.n_b,
    };
    state.validate().map_err(bad_input)?;
    let opts = MbOptions {
        rtol: mb.rtol,
        atol: mb.atol,
    };
    let mut out = OutputDir::create(dir, config, "mbmodel")?;
    let traj = integrate_two_temperature(&state, mb.t_end, mb.dt_sample, &opts).map_err(|e| fail(&out, e, json!({})))?;
    let mut csv = out.csv("mbmodel.csv", &["tau", "t_bar_f", "t_bar_b"])?;
    for p in &traj {
        csv.row(&[num(p.tau), num(p.t_bar_f), num(p.t_bar_b)])?;
    }
    csv.flush()?;
    let efold = if mb.t_f0 == mb.t_b0 {
        None
    } else {
        Some(efold_time(&state, &opts).map_err(|e| fail(&out, e, json!({})))?)
    };
    let summary = json!({
        "asymptote": state.asymptote(),
        "relaxation_time_estimate": state.relaxation_time_estimate(),
        "efold_time": efold,
    });
    out.write_manifest(None, &summary)?;
    Ok(summary)
}

const SNAPSHOT_COLUMNS: &[&str] = &[
    "tau",
    "n_b",
    "n_f",
    "mean_e_b",
    "mean_e_f",
    "t_b",
    "z_b",
    "t_f",
    "z_f",
    "condensate_number",
    "ground_fraction",
    "t_f_over_t_fermi",
    "t_b_over_t_c",
    "cut_b",
    "cut_f",
    "lost_n_b",
    "lost_n_f",
    "lost_e_b",
    "lost_e_f",
    "entropy",
];

const SI_COLUMNS: &[&str] = &["tau_s", "t_b_uk", "t_f_uk"];

fn snapshot_row(s: &Snapshot, trap: Option<&TrapSpec>) -> Vec<String> {
    let mut row: Vec<String> = [
        s.tau,
        s.n_b,
        s.n_f,
        s.mean_e_b,
        s.mean_e_f,
        s.t_b,
        s.z_b,
        s.t_f,
        s.z_f,
        s.condensate_number,
        s.ground_fraction,
        s.t_f_over_t_fermi,
        s.t_b_over_t_c,
        s.cut_b,
        s.cut_f,
        s.lost_n_b,
        s.lost_n_f,
        s.lost_e_b,
        s.lost_e_f,
        s.entropy,
    ]
    .iter()
    .map(|&x| num(x))
    .collect();
    if let Some(t) = trap {
        row.push(num(t.seconds(s.tau)));
        row.push(num(t.kelvin(s.t_b) * 1e6));
        row.push(num(t.kelvin(s.t_f) * 1e6));
    }
    row
}

fn scenario_of(config: &Config) -> Result<&ScenarioConfig, CliError> {
    let run = section(&config.run, "run")?;
    run.validate().map_err(|e| CliError::Config(format!("[run]: {e}")))?;
    Ok(run)
}

pub fn run(config: &Config, dir: &Path) -> Result<Value, CliError> {
    let scenario = scenario_of(config)?;
    let trap = scenario.trap_spec().map_err(bad_input)?;
    let mut out = OutputDir::create(dir, config, "run")?;
    let mut columns = SNAPSHOT_COLUMNS.to_vec();
    if trap.is_some() {
        columns.extend_from_slice(SI_COLUMNS);
    }
    let mut series = out.csv("timeseries.csv", &columns)?;
    let mut occupations = if scenario.store_occupations {
        Some(out.csv("occupations.csv", &["tau", "level", "b", "f"])?)
    } else {
        None
    };
    let mut io_error = None;
    let result = run_observed(scenario, |engine, snap| {
        eprintln!(
            "tau {:.4}  N_b {:.1}  N_f {:.1}  T_b {:.3}  T_f {:.3}  T_f/T_F {:.4}",
            snap.tau, snap.n_b, snap.n_f, snap.t_b, snap.t_f, snap.t_f_over_t_fermi
        );
        let mut write = || -> Result<(), CliError> {
            series.row(&snapshot_row(snap, trap.as_ref()))?;
            series.flush()?;
            if let Some(occ) = occupations.as_mut() {
                let s = engine.state();
                for e in 0..s.n_max() {
                    occ.row(&[num(s.tau), e.to_string(), num(s.b[e]), num(s.f[e])])?;
                }
                occ.flush()?;
            }
            Ok(())
        };
        if io_error.is_none() {
            io_error = write().err();
        }
    });
    drop(series);
    drop(occupations);
    if let Some(e) = io_error {
        return Err(e);
    }
    let output = result.map_err(|e| fail(&out, e, json!({ "partial_output": "timeseries.csv" })))?;
    let last = output.snapshots.last().expect("a run has an initial snapshot");
    let state = &output.final_state;

    let grid = EnergyGrid::new(state.n_max()).map_err(bad_input)?;
    let mut occ = out.csv("final_occupations.csv", &["level", "degeneracy", "b", "f"])?;
    for e in 0..state.n_max() {
        occ.row(&[e.to_string(), num(grid.degeneracy(e)), num(state.b[e]), num(state.f[e])])?;
    }
    occ.flush()?;
    drop(occ);

    if last.n_f > 0.0 {
        let profile = spatial_profile(&state.f, Species::Fermi, PROFILE_POINTS)
            .map_err(|e| fail(&out, e, json!({})))?;
        let mut csv = out.csv("final_fermion_profile.csv", &["r", "r_over_r_fermi", "density", "density_scaled"])?;
        for k in 0..profile.radii.len() {
            csv.row(&[
                num(profile.radii[k]),
                num(profile.radii_scaled[k]),
                num(profile.density[k]),
                num(profile.density_scaled[k]),
            ])?;
        }
        csv.flush()?;
    }

    let summary = json!({
        "final": last,
        "condensate_fraction": last.condensate_number / last.n_b,
        "accepted_steps": output.stats.accepted,
        "rejected_steps": output.stats.rejected,
        "checked_steps": output.checked_steps,
        "bound_violations": output.bound_violations,
    });
    out.write_manifest(units(trap.as_ref()).as_ref(), &summary)?;
    Ok(summary)
}

/// One sweep point: the axis values it sets and the resulting scenario.
struct Point {
    gamma: Option<f64>,
    hold: Option<f64>,
    alpha_b: Option<f64>,
    n_ratio: Option<f64>,
    scenario: ScenarioConfig,
}

fn axis(values: &[f64]) -> Vec<Option<f64>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

fn ramp(schedule: &mut CutoffSchedule, gamma: Option<f64>, hold: Option<f64>) {
    if schedule.e0.is_none() {
        return;
    }
    if let Some(g) = gamma {
        schedule.gamma = g;
    }
    if let Some(h) = hold {
        schedule.hold_until = h;
    }
}

fn sweep_points(template: &ScenarioConfig, sweep: &SweepConfig) -> Vec<Point> {
    let mut points = Vec::new();
    for &gamma in &axis(&sweep.gamma) {
        for &hold in &axis(&sweep.hold) {
            for &alpha_b in &axis(&sweep.alpha_b) {
                for &n_ratio in &axis(&sweep.n_ratio) {
                    let mut s = template.clone();
                    ramp(&mut s.schedule.boson, gamma, hold);
                    ramp(&mut s.schedule.fermion, gamma, hold);
                    if alpha_b.is_some() {
                        s.alpha_b = alpha_b;
                    }
                    if let Some(r) = n_ratio {
                        s.n_f = r * s.n_b;
                    }
                    points.push(Point {
                        gamma,
                        hold,
                        alpha_b,
                        n_ratio,
                        scenario: s,
                    });
                }
            }
        }
    }
    points
}

pub fn sweep(config: &Config, dir: &Path, workers: Option<usize>) -> Result<Value, CliError> {
    let template = scenario_of(config)?;
    let sweep = section(&config.sweep, "sweep")?;
    let workers = workers.unwrap_or(sweep.workers);
    if workers == 0 {
        return Err(CliError::Config("sweep.workers must be at least 1".into()));
    }
    let points = sweep_points(template, sweep);
    for (i, p) in points.iter().enumerate() {
        p.scenario
            .validate()
            .map_err(|e| CliError::Config(format!("sweep point {i}: {e}")))?;
    }
    let mut out = OutputDir::create(dir, config, "sweep")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    let results: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .map(|p| sympcool::qbe::run(&p.scenario).map(|o| *o.snapshots.last().expect("initial snapshot")))
            .collect()
    });

    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut csv = out.csv(
        "sweep.csv",
        &[
            "point",
            "gamma",
            "hold",
            "alpha_b",
            "n_ratio",
            "tau",
            "n_b",
            "n_f",
            "t_b",
            "t_f",
            "t_f_over_t_fermi",
            "condensate_number",
            "condensate_fraction",
            "status",
        ],
    )?;
    let mut failures = Vec::new();
    for (i, (p, r)) in points.iter().zip(&results).enumerate() {
        let mut row = vec![i.to_string(), opt(p.gamma), opt(p.hold), opt(p.alpha_b), opt(p.n_ratio)];
        match r {
            Ok(s) => {
                row.extend(
                    [
                        s.tau,
                        s.n_b,
                        s.n_f,
                        s.t_b,
                        s.t_f,
                        s.t_f_over_t_fermi,
                        s.condensate_number,
                        s.condensate_number / s.n_b,
                    ]
                    .map(num),
                );
                row.push("ok".into());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.push(format!("error: {e}"));
                failures.push(json!({ "point": i, "error": e.to_string() }));
            }
        }
        csv.row(&row)?;
    }
    csv.flush()?;
    drop(csv);
    let summary = json!({ "points": points.len(), "failures": failures.len() });
    out.write_manifest(None, &summary)?;
    if let Some((i, e)) = results.into_iter().enumerate().find_map(|(i, r)| r.err().map(|e| (i, e))) {
        if e.is_numerical() {
            return Err(fail(&out, e, json!({ "point": i, "failures": failures })));
        }
        return Err(CliError::Config(format!("sweep point {i}: {e}")));
    }
    Ok(summary)
}

pub fn meanfield(config: &Config, dir: &Path) -> Result<Value, CliError> {
    let mf = section(&config.meanfield, "meanfield")?;
    let trap = resolve_trap(&mf.trap)?;
    let input = MeanFieldInput {
        n_b: mf.n_b,
        n_f: mf.n_f,
        a_b: trap.a_b,
        a_bf: trap.a_bf,
        mass: trap.mass,
        omega: trap.omega,
    };
    input.validate().map_err(bad_input)?;
    let mut out = OutputDir::create(dir, config, "meanfield")?;
    let ov = overlay(&input, mf.points).map_err(|e| fail(&out, e, json!({})))?;
    let l = input.oscillator_length();
    let l3 = l * l * l;
    let mut csv = out.csv(
        "overlay.csv",
        &["r", "n_b_tf", "n_f_ideal", "n_f_mf", "r_m", "n_b_tf_m3", "n_f_ideal_m3", "n_f_mf_m3"],
    )?;
    for k in 0..ov.radii.len() {
        csv.row(&[
            num(ov.radii[k]),
            num(ov.n_b_tf[k]),
            num(ov.n_f_ideal[k]),
            num(ov.n_f_mf[k]),
            num(ov.radii[k] * l),
            num(ov.n_b_tf[k] / l3),
            num(ov.n_f_ideal[k] / l3),
            num(ov.n_f_mf[k] / l3),
        ])?;
    }
    csv.flush()?;
    let ratio = mf_ratio(mf.n_b, trap.a_b, trap.mass, trap.omega).map_err(bad_input)?;
    let summary = json!({
        "coupling": "g = 4 pi hbar^2 a_b / M; lengths in sqrt(hbar / M omega), energies in hbar omega",
        "mu": ov.mu,
        "mu_j": ov.mu * input.energy_quantum(),
        "r_tf": tf_radius(ov.mu),
        "e_fermi": ov.fermions.e_fermi,
        "support_radius_f": ov.fermions.support_radius(),
        "r_fermi_ideal": ov.fermions.r_fermi_ideal,
        "beta": ov.fermions.beta,
        "inverted_regime": ov.fermions.inverted,
        "mf_ratio_all_condensed": ratio,
        "mean_field_important": ratio >= 1.0,
    });
    out.write_manifest(units(Some(&trap)).as_ref(), &summary)?;
    Ok(summary)
}
