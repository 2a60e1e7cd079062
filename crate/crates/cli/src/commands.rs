//! The subcommands. Each validates its configuration, computes, and returns
//! the files to write.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use nvortex::dynamics::{self, rotate};
use nvortex::equilibria::{
    census, rotation_rate, sample_normalised, solve_nre, thomson, RelativeEquilibrium,
};
use nvortex::flow::{Flow, VortexFlow};
use nvortex::integrators::{drift_report, integrate, integrate_flow_at, IntegratorConfig};
use nvortex::orbits::{
    level_scan, linearised_modes, solve_rpo, wrap_angle, Classification, CoRotating,
    PeriodicOrbitResult, RotatingSystem, ShootingMode, ShootingProblem,
};
use nvortex::reduction::{
    build_lim_transform, build_lim_transform_with, from_reduced, project, reduce,
    reduced_chart_hamiltonian, reduced_hamiltonian, to_chart, ChartFlow,
};
use nvortex::symmetry::{expand, solve_symmetric_rpo, SymFlow, SymmetricProblem};
use nvortex::{Configuration, VorticitySet};

use crate::config::{self as cfg, Initial, OrbitConfig, OrbitStart, SymStart};
use crate::output::{float, to_json, Outputs};
use crate::svg::{self, Panel};
use crate::CliError;

/// Samples per period in orbit plots.
const PLOT_SAMPLES: usize = 200;

pub struct Run {
    pub outputs: Outputs,
    pub summary: String,
    /// Set when an orbit command found nothing that converged.
    pub no_orbit: bool,
}

impl Run {
    fn new(outputs: Outputs, summary: String) -> Self {
        Self {
            outputs,
            summary,
            no_orbit: false,
        }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn flat(positions: &[[f64; 2]]) -> Vec<f64> {
    positions.iter().flatten().copied().collect()
}

fn initial_state(
    v: &VorticitySet,
    init: &Initial,
    normalise: bool,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>, CliError> {
    let z = match init {
        Initial::Explicit { positions } => flat(positions),
        Initial::Thomson {} => thomson(v.n(), v.gamma(0))
            .map_err(CliError::config)?
            .config
            .into_coords(),
        Initial::Random {} => return Ok(sample_normalised(v, &mut rng(seed, stream))),
    };
    dynamics::check_collision_free(&z).map_err(CliError::config)?;
    if normalise {
        dynamics::normalised(v, &z).map_err(CliError::config)
    } else {
        Ok(z)
    }
}

fn points(z: &[f64]) -> Vec<[f64; 2]> {
    z.chunks_exact(2).map(|p| [p[0], p[1]]).collect()
}

pub fn simulate(text: &str, seed: Option<u64>, plot: bool) -> Result<Run, CliError> {
    let c: cfg::SimulateConfig = cfg::parse(text)?;
    let v = cfg::vorticities(&c.vorticities)?;
    cfg::check_initial(&v, &c.initial)?;
    cfg::positive("t_end", c.t_end)?;
    cfg::check_integrator(&c.integrator)?;
    let z0 = initial_state(&v, &c.initial, c.normalise, seed.or(c.seed).unwrap_or(0), 0)?;

    let traj = integrate(&v, &z0, c.t_end, &c.integrator)
        .map_err(|e| CliError::Integration(format!("integration failed: {e}")))?;
    let drift = drift_report(&traj);

    let mut csv = String::from("t");
    for k in 1..=v.n() {
        csv.push_str(&format!(",x{k},y{k}"));
    }
    csv.push_str(",P,Q,I,H\n");
    for ((t, z), iv) in traj.times.iter().zip(&traj.states).zip(&traj.integrals) {
        let row: Vec<String> = std::iter::once(*t)
            .chain(z.iter().copied())
            .chain([iv.p, iv.q, iv.i_moment, iv.h])
            .map(float)
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }

    let report = json!({
        "vorticities": v.gammas(),
        "t_end": c.t_end,
        "integrator": c.integrator,
        "samples": traj.len(),
        "accepted_steps": traj.accepted_steps,
        "initial_integrals": traj.integrals[0],
        "final_integrals": traj.integrals[traj.len() - 1],
        "drift": drift,
    });
    let mut out = Outputs::default();
    out.add("trajectory.csv", csv);
    out.add("drift.json", to_json(&report)?);
    if plot {
        let first = traj.integrals[0];
        let curves = vec![
            traj.times
                .iter()
                .zip(&traj.integrals)
                .map(|(t, iv)| (*t, (iv.i_moment - first.i_moment).abs()))
                .collect(),
            traj.times
                .iter()
                .zip(&traj.integrals)
                .map(|(t, iv)| (*t, (iv.h - first.h).abs() / first.h.abs().max(1e-14)))
                .collect(),
        ];
        out.add(
            "trajectory.svg",
            svg::render(&[
                Panel {
                    title: "vortex paths".into(),
                    lines: svg::traces(&traj.states),
                    equal: true,
                },
                Panel {
                    title: "|ΔI| and |ΔH|/|H| against t".into(),
                    lines: curves,
                    equal: false,
                },
            ]),
        );
    }
    let summary = format!(
        "simulated {} vortices to t = {} in {} steps; max |ΔH|/|H| = {:e}",
        v.n(),
        c.t_end,
        traj.accepted_steps,
        drift.h.rel
    );
    Ok(Run::new(out, summary))
}

#[derive(Serialize)]
struct EquilibriumRecord {
    h: f64,
    multiplicity: usize,
    representative: Vec<[f64; 2]>,
    residual: f64,
    min_dist_sq: f64,
    omega: f64,
}

impl EquilibriumRecord {
    fn new(eq: &RelativeEquilibrium, h: f64, multiplicity: usize) -> Self {
        Self {
            h,
            multiplicity,
            representative: points(eq.config.coords()),
            residual: eq.residual,
            min_dist_sq: eq.min_dist_sq,
            omega: eq.omega,
        }
    }
}

pub fn equilibria(text: &str, seed: Option<u64>) -> Result<Run, CliError> {
    let c: cfg::EquilibriaConfig = cfg::parse(text)?;
    let v = cfg::vorticities(&c.vorticities)?;
    cfg::positive("tol", c.tol)?;
    if c.guesses.is_empty() {
        return Err(CliError::Config("guesses must not be empty".into()));
    }
    let seed = seed.or(c.seed).unwrap_or(0);
    let guesses = c
        .guesses
        .iter()
        .enumerate()
        .map(|(k, g)| {
            cfg::check_initial(&v, g)?;
            initial_state(&v, g, true, seed, k as u64)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let solved: Vec<_> = guesses
        .par_iter()
        .map(|z| solve_nre(&v, &Configuration::new(z.clone())?, c.tol))
        .collect();
    let mut records = vec![];
    let mut failures = vec![];
    for (k, r) in solved.into_iter().enumerate() {
        match r {
            Ok(eq) => records.push(json!({
                "guess": k,
                "level": EquilibriumRecord::new(&eq, eq.h_value, 1),
            })),
            Err(e) => failures.push(json!({"guess": k, "error": e.to_string()})),
        }
    }
    if records.is_empty() {
        return Err(CliError::Failure(format!(
            "no guess converged: {}",
            failures[0]["error"]
        )));
    }
    let summary = format!("{} of {} guesses converged", records.len(), c.guesses.len());
    let report = json!({
        "vorticities": v.gammas(),
        "expected_omega": -v.total_l() / std::f64::consts::TAU,
        "equilibria": records,
        "failed_starts": failures.len(),
        "failures": failures,
    });
    let mut out = Outputs::default();
    out.add("equilibria.json", to_json(&report)?);
    Ok(Run::new(out, summary))
}

pub fn census_cmd(text: &str, seed: Option<u64>) -> Result<Run, CliError> {
    let c: cfg::CensusConfig = cfg::parse(text)?;
    let v = cfg::vorticities(&c.vorticities)?;
    cfg::positive("tol", c.tol)?;
    cfg::positive("cluster_tol", c.cluster_tol)?;
    if c.n_starts == 0 {
        return Err(CliError::Config("n_starts must be >= 1".into()));
    }
    let seed = seed.or(c.seed).unwrap_or(0);
    let cen = census(&v, c.n_starts, seed, c.tol, c.cluster_tol).map_err(CliError::from_core)?;
    let levels: Vec<EquilibriumRecord> = cen
        .levels
        .iter()
        .map(|l| EquilibriumRecord::new(&l.representative, l.h, l.multiplicity))
        .collect();
    let converged = c.n_starts - cen.failed_starts;
    let report = json!({
        "vorticities": v.gammas(),
        "seed": seed,
        "n_starts": cen.n_starts,
        "tol": c.tol,
        "cluster_tol": cen.cluster_tol,
        "expected_omega": -v.total_l() / std::f64::consts::TAU,
        "levels": levels,
        "epsilon_estimate": cen.epsilon_estimate,
        "failed_starts": cen.failed_starts,
        "convergence_rate": converged as f64 / c.n_starts as f64,
    });
    let mut out = Outputs::default();
    out.add("census.json", to_json(&report)?);
    let summary = format!(
        "{} levels from {} converged starts of {}",
        levels.len(),
        converged,
        c.n_starts
    );
    Ok(Run::new(out, summary))
}

pub fn reduce_cmd(text: &str) -> Result<Run, CliError> {
    let c: cfg::ReduceConfig = cfg::parse(text)?;
    let v = cfg::vorticities(&c.vorticities)?;
    let tree = c.tree.build(v.n())?;
    let configs = c
        .configurations
        .iter()
        .map(|p| {
            cfg::check_positions(&v, p)?;
            let z = flat(p);
            dynamics::check_collision_free(&z).map_err(CliError::config)?;
            dynamics::normalised(&v, &z).map_err(CliError::config)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let t = build_lim_transform_with(&v, &tree).map_err(CliError::from_core)?;
    let n = v.n();
    let matrix: Vec<Vec<[f64; 2]>> = (0..n)
        .map(|i| (0..n).map(|j| [t.matrix[(i, j)], 0.0]).collect())
        .collect();
    let mut round_trips = vec![];
    for (k, z) in configs.iter().enumerate() {
        let cz = Configuration::new(z.clone()).map_err(CliError::from_core)?;
        let w = reduce(&t, &v, &cz).map_err(CliError::from_core)?;
        let back = from_reduced(&t, &w).map_err(CliError::from_core)?;
        let err = back
            .coords()
            .iter()
            .zip(z)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let h = dynamics::hamiltonian(&v, z).map_err(CliError::from_core)?;
        let h_reduced = reduced_hamiltonian(&t, &v, &w).map_err(CliError::from_core)?;
        let chart = if n >= 3 {
            to_chart(&w).ok().map(|cp| {
                let hc = reduced_chart_hamiltonian(&t, &v, &cp).ok();
                json!({"actions": cp.actions, "angles": cp.angles, "h_chart": hc})
            })
        } else {
            None
        };
        round_trips.push(json!({
            "index": k,
            "configuration": points(z),
            "reduced": w.w,
            "round_trip_error": err,
            "h": h,
            "h_reduced": h_reduced,
            "chart": chart,
        }));
    }
    let report = json!({
        "vorticities": v.gammas(),
        "tree": t.tree,
        "matrix": matrix,
        "unitarity_defect": t.unitarity_defect(),
        "symplectic_defect": t.symplectic_defect(),
        "round_trips": round_trips,
    });
    let mut out = Outputs::default();
    out.add("reduce.json", to_json(&report)?);
    let summary = format!(
        "T built for N = {n}; unitarity defect {:e}",
        t.unitarity_defect()
    );
    Ok(Run::new(out, summary))
}

/// `θ = ω T` for a state turning at the instantaneous rate of `f`.
fn rigid_rotation<S: RotatingSystem + ?Sized>(f: &S, z: &[f64], period: f64) -> f64 {
    let mut x = vec![0.0; z.len()];
    match f.eval(z, &mut x) {
        Ok(()) => wrap_angle(rotation_rate(f.weights(), z, &x) * period),
        Err(_) => 0.0,
    }
}

fn thomson_of(v: &VorticitySet) -> Result<RelativeEquilibrium, CliError> {
    cfg::check_initial(v, &Initial::Thomson {})?;
    thomson(v.n(), v.gamma(0)).map_err(CliError::config)
}

fn orbit_problems(c: &cfg::OrbitSolveConfig) -> Result<Vec<ShootingProblem>, CliError> {
    let v = cfg::vorticities(&c.vorticities)?;
    cfg::check_tolerances(&c.tolerances)?;
    cfg::optional_positive("period_guess", c.period_guess)?;
    cfg::finite("rotation_guess", c.rotation_guess)?;
    cfg::finite("energy_target", c.energy_target)?;
    let tree = c.tree.build(v.n())?;
    let chart = c.mode == ShootingMode::ReducedChart;
    if chart && v.n() < 2 {
        return Err(CliError::Config("chart shooting needs N >= 2".into()));
    }
    let t = build_lim_transform_with(&v, &tree).map_err(CliError::config)?;
    let full = VortexFlow::new(&v);
    let to_state = |z: &[f64]| -> Result<Vec<f64>, CliError> {
        if chart {
            let cz = Configuration::new(dynamics::normalised(&v, z).map_err(CliError::config)?)
                .map_err(CliError::config)?;
            Ok(project(&t, &v, &cz).map_err(CliError::config)?.to_vec())
        } else {
            Ok(z.to_vec())
        }
    };
    let need_period = || {
        c.period_guess
            .ok_or_else(|| CliError::Config("period_guess is required for this start".into()))
    };
    // (state, period, full configuration whose rate estimates the rotation)
    let mut starts: Vec<(Vec<f64>, f64, Option<Vec<f64>>)> = vec![];
    match &c.start {
        OrbitStart::State { state } => {
            let want = if chart { 2 * v.n() - 4 } else { 2 * v.n() };
            if state.len() != want {
                return Err(CliError::Config(format!(
                    "start state has {} entries, expected {want}",
                    state.len()
                )));
            }
            let full_state = (!chart).then(|| state.clone());
            starts.push((state.clone(), need_period()?, full_state));
        }
        OrbitStart::Configuration { positions } => {
            cfg::check_positions(&v, positions)?;
            let z = flat(positions);
            dynamics::check_collision_free(&z).map_err(CliError::config)?;
            starts.push((to_state(&z)?, need_period()?, Some(z)));
        }
        OrbitStart::Equilibrium {} | OrbitStart::PerturbedEquilibrium { .. } => {
            let eq = thomson_of(&v)?;
            let z = eq.config.coords().to_vec();
            let x = to_state(&z)?;
            let modes = if chart {
                linearised_modes(&ChartFlow::new(&t, &v), &x)
            } else {
                linearised_modes(
                    &CoRotating {
                        base: &full,
                        omega: eq.omega,
                    },
                    &x,
                )
            }
            .map_err(CliError::from_core)?;
            match &c.start {
                OrbitStart::PerturbedEquilibrium {
                    amplitude,
                    max_modes,
                } => {
                    cfg::positive("amplitude", *amplitude)?;
                    for m in modes.iter().take(max_modes.unwrap_or(usize::MAX)) {
                        let s: Vec<f64> = x
                            .iter()
                            .zip(&m.direction)
                            .map(|(a, d)| a + amplitude * d)
                            .collect();
                        let zf = (!chart).then(|| z.clone());
                        starts.push((s, c.period_guess.unwrap_or(m.period), zf));
                    }
                    if starts.is_empty() {
                        return Err(CliError::Failure(
                            "the equilibrium has no oscillatory modes".into(),
                        ));
                    }
                }
                _ => {
                    let p = c
                        .period_guess
                        .or(modes.first().map(|m| m.period))
                        .unwrap_or(std::f64::consts::TAU);
                    starts.push((x, p, Some(z)));
                }
            }
        }
    }
    Ok(starts
        .into_iter()
        .map(|(state, period, zf)| {
            let rotation = c.rotation_guess.unwrap_or_else(|| {
                zf.as_deref()
                    .map_or(0.0, |z| rigid_rotation(&full, z, period))
            });
            ShootingProblem {
                mode: c.mode,
                vorticities: v.clone(),
                initial_state: state,
                period_guess: period,
                rotation_guess: rotation,
                energy_target: c.energy_target,
                tolerances: c.tolerances.clone(),
                tree: chart.then(|| tree.clone()),
            }
        })
        .collect())
}

/// Co-rotating paths and chart-plane curves of a converged orbit.
fn orbit_panels(v: &VorticitySet, r: &PeriodicOrbitResult, integ: &IntegratorConfig) -> Vec<Panel> {
    let z0 = r.lifted_state0.as_deref().unwrap_or(&r.state0);
    let times: Vec<f64> = (0..=PLOT_SAMPLES)
        .map(|k| r.period * k as f64 / PLOT_SAMPLES as f64)
        .collect();
    let Ok(traj) = integrate_flow_at(&VortexFlow::new(v), z0, &times, integ) else {
        return vec![];
    };
    let frame: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, z)| rotate(z, -r.rotation_angle * t / r.period))
        .collect();
    let mut chart_lines = vec![];
    if v.n() >= 3 {
        let t = build_lim_transform(v);
        let pts: Vec<Vec<f64>> = traj
            .states
            .iter()
            .filter_map(|z| {
                let z = dynamics::normalised(v, z).ok()?;
                project(&t, v, &Configuration::new(z).ok()?)
                    .ok()
                    .map(|c| c.to_vec())
            })
            .collect();
        let m = v.n() - 2;
        chart_lines = (0..m)
            .map(|k| {
                pts.iter()
                    .map(|c| {
                        let r = (2.0 * c[k]).max(0.0).sqrt();
                        (r * c[m + k].cos(), r * c[m + k].sin())
                    })
                    .collect()
            })
            .collect();
    }
    vec![
        Panel {
            title: "co-rotating frame".into(),
            lines: svg::traces(&frame),
            equal: true,
        },
        Panel {
            title: "chart plane (√(2I_k) e^{iφ_k})".into(),
            lines: chart_lines,
            equal: true,
        },
    ]
}

fn orbit_plot(
    v: &VorticitySet,
    records: &[PeriodicOrbitResult],
    integ: &IntegratorConfig,
) -> Option<String> {
    let r = records
        .iter()
        .find(|r| r.classification == Classification::Ntnrpo)
        .or_else(|| records.iter().find(|r| r.converged()))?;
    let panels = orbit_panels(v, r, integ);
    (!panels.is_empty()).then(|| svg::render(&panels))
}

fn failure_json(k: usize, e: &nvortex::VortexError) -> serde_json::Value {
    json!({"start": k, "error": e.to_string()})
}

pub fn orbit(text: &str, seed: Option<u64>, plot: bool) -> Result<Run, CliError> {
    let c: OrbitConfig = cfg::parse(text)?;
    match c {
        OrbitConfig::Solve(c) => {
            let problems = orbit_problems(&c)?;
            let solved: Vec<_> = problems.par_iter().map(solve_rpo).collect();
            let mut records = vec![];
            let mut failures = vec![];
            for (k, r) in solved.into_iter().enumerate() {
                match r {
                    Ok(r) => records.push(r),
                    Err(e) => failures.push(failure_json(k, &e)),
                }
            }
            let converged = records.iter().filter(|r| r.converged()).count();
            let ntnrpo = records
                .iter()
                .filter(|r| r.classification == Classification::Ntnrpo)
                .count();
            let report = json!({
                "task": "solve",
                "vorticities": c.vorticities,
                "starts": problems.len(),
                "converged": converged,
                "ntnrpo": ntnrpo,
                "records": records,
                "failures": failures,
            });
            let mut out = Outputs::default();
            out.add("orbit.json", to_json(&report)?);
            if plot {
                let v = cfg::vorticities(&c.vorticities)?;
                if let Some(s) = orbit_plot(&v, &records, &c.tolerances.integrator) {
                    out.add("orbit.svg", s);
                }
            }
            let summary = format!(
                "{converged} of {} starts converged, {ntnrpo} non-trivial",
                problems.len()
            );
            Ok(Run {
                outputs: out,
                summary,
                no_orbit: converged == 0,
            })
        }
        OrbitConfig::Scan(c) => {
            let v = cfg::vorticities(&c.vorticities)?;
            if v.n() < 3 {
                return Err(CliError::Config("level scans need N >= 3".into()));
            }
            if c.levels.iter().any(|h| !h.is_finite()) {
                return Err(CliError::Config("levels must be finite".into()));
            }
            cfg::check_tolerances(&c.options.tolerances)?;
            let seed = seed.or(c.seed).unwrap_or(0);
            let reports = level_scan(&v, &c.levels, c.starts_per_level, seed, &c.options)
                .map_err(CliError::from_core)?;
            let table: Vec<_> = reports
                .iter()
                .flat_map(|rep| {
                    rep.results.iter().map(move |r| {
                        json!({
                            "h": rep.h,
                            "period": r.period,
                            "rotation_angle": r.rotation_angle,
                            "classification": r.classification,
                        })
                    })
                })
                .collect();
            let converged: usize = reports.iter().map(|r| r.converged).sum();
            let ntnrpo: usize = reports.iter().map(|r| r.ntnrpo).sum();
            let report = json!({
                "task": "scan",
                "vorticities": c.vorticities,
                "seed": seed,
                "table": table,
                "levels": reports,
            });
            let mut out = Outputs::default();
            out.add("scan.json", to_json(&report)?);
            if plot {
                let all: Vec<PeriodicOrbitResult> =
                    reports.into_iter().flat_map(|r| r.results).collect();
                if let Some(s) = orbit_plot(&v, &all, &c.options.tolerances.integrator) {
                    out.add("scan.svg", s);
                }
            }
            let summary = format!(
                "{converged} converged orbits over {} levels, {ntnrpo} non-trivial",
                c.levels.len()
            );
            Ok(Run {
                outputs: out,
                summary,
                no_orbit: converged == 0,
            })
        }
    }
}

pub fn sym(text: &str, plot: bool) -> Result<Run, CliError> {
    let c: cfg::SymConfig = cfg::parse(text)?;
    let s = c.system.clone();
    cfg::check_tolerances(&c.tolerances)?;
    cfg::optional_positive("period_guess", c.period_guess)?;
    cfg::finite("rotation_guess", c.rotation_guess)?;
    cfg::finite("energy_target", c.energy_target)?;
    let flow = SymFlow::new(&s);
    let check_w = |w: &[f64]| -> Result<Vec<f64>, CliError> {
        if w.len() != 2 * s.m || w.iter().any(|a| !a.is_finite()) {
            return Err(CliError::Config(format!(
                "w must hold {} finite numbers",
                2 * s.m
            )));
        }
        let z = expand(&s, w).map_err(CliError::config)?;
        dynamics::check_collision_free(&z).map_err(CliError::config)?;
        Ok(w.to_vec())
    };
    // (state, period, rotation guess)
    let mut starts: Vec<(Vec<f64>, f64, f64)> = vec![];
    match &c.start {
        SymStart::Representatives { w } => {
            let w = check_w(w)?;
            let p = c.period_guess.ok_or_else(|| {
                CliError::Config("period_guess is required for this start".into())
            })?;
            let th = rigid_rotation(&flow, &w, p);
            starts.push((w, p, th));
        }
        SymStart::PerturbedEquilibrium {
            w,
            amplitude,
            max_modes,
        } => {
            cfg::positive("amplitude", *amplitude)?;
            let w = check_w(w)?;
            let imp = s.impulse(&w).map_err(CliError::config)?;
            let scale = (1.0 / (s.n_fold as f64 * imp)).sqrt();
            let w: Vec<f64> = w.iter().map(|a| a * scale).collect();
            let mut x = vec![0.0; w.len()];
            flow.eval(&w, &mut x).map_err(CliError::from_core)?;
            let omega = rotation_rate(flow.weights(), &w, &x);
            let modes = linearised_modes(&CoRotating { base: &flow, omega }, &w)
                .map_err(CliError::from_core)?;
            for m in modes.iter().take(max_modes.unwrap_or(usize::MAX)) {
                let s: Vec<f64> = w
                    .iter()
                    .zip(&m.direction)
                    .map(|(a, d)| a + amplitude * d)
                    .collect();
                let p = c.period_guess.unwrap_or(m.period);
                starts.push((s, p, wrap_angle(omega * p)));
            }
            if starts.is_empty() {
                return Err(CliError::Failure(
                    "the equilibrium has no oscillatory modes".into(),
                ));
            }
        }
    }
    let problems: Vec<SymmetricProblem> = starts
        .into_iter()
        .map(|(w, p, th)| SymmetricProblem {
            system: s.clone(),
            rotation_guess: c.rotation_guess.unwrap_or(th),
            initial_state: w,
            period_guess: p,
            energy_target: c.energy_target,
            tolerances: c.tolerances.clone(),
        })
        .collect();
    let solved: Vec<_> = problems.par_iter().map(solve_symmetric_rpo).collect();
    let mut records = vec![];
    let mut failures = vec![];
    for (k, r) in solved.into_iter().enumerate() {
        match r {
            Ok(r) => records.push(r),
            Err(e) => failures.push(failure_json(k, &e)),
        }
    }
    let converged = records.iter().filter(|r| r.converged()).count();
    let ntnrpo = records
        .iter()
        .filter(|r| r.classification == Classification::Ntnrpo)
        .count();
    let report = json!({
        "system": s,
        "starts": problems.len(),
        "converged": converged,
        "ntnrpo": ntnrpo,
        "records": records,
        "failures": failures,
    });
    let mut out = Outputs::default();
    out.add("sym.json", to_json(&report)?);
    if plot {
        if let Some(svg) = orbit_plot(&s.full_vorticities(), &records, &c.tolerances.integrator) {
            out.add("sym.svg", svg);
        }
    }
    let summary = format!(
        "{converged} of {} symmetric starts converged, {ntnrpo} non-trivial",
        problems.len()
    );
    Ok(Run {
        outputs: out,
        summary,
        no_orbit: converged == 0,
    })
}
