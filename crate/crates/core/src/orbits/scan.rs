use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seeds::{linearised_modes, recurrence_candidates};
use super::shooting::solve_chart;
use super::{Classification, PeriodicOrbitResult, ShootingTolerances};
use crate::dynamics::{Configuration, VorticitySet};

use crate::equilibria::{sample_normalised, solve_nre_with, NRE_MAX_ITER};
use crate::error::{Result, VortexError};
use crate::flow::Flow;
use crate::integrators::integrate_flow_at;
use crate::reduction::{
    build_lim_transform, chart_distance, project, reduced_chart_hamiltonian, ChartFlow, ChartPoint,
    LimTransform,
};

const LEVEL_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    pub tolerances: ShootingTolerances,
    /// Integration window searched for near-returns.
    pub window: f64,
    /// Samples over the window.
    pub samples: usize,
    /// Near-returns tried per start, after the linearised period.
    pub candidates: usize,
    /// Range of the initial offset from the equilibrium along a mode.
    pub offset: (f64, f64),
    /// Random equilibria solved per start; the one closest to the level is used.
    pub equilibria: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            tolerances: ShootingTolerances::default(),
            window: 60.0,
            samples: 600,
            candidates: 3,
            offset: (0.01, 0.05),
            equilibria: 4,
        }
    }
}

/// Outcome of the scan at one target level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub h: f64,
    pub attempts: usize,
    pub converged: usize,
    pub ntnrpo: usize,
    /// One entry per start that reached the level, in start order.
    pub results: Vec<PeriodicOrbitResult>,
}

/// Damped Newton iteration along the gradient of `H̃` onto `H̃ = h`; a step
/// is halved until it reduces `|H̃ - h|`.
fn onto_level(t: &LimTransform, v: &VorticitySet, c0: &[f64], h: f64) -> Result<Vec<f64>> {
    let f = ChartFlow::new(t, v);
    let m = c0.len() / 2;
    let energy = |c: &[f64]| -> Result<f64> {
        Ok(reduced_chart_hamiltonian(t, v, &ChartPoint::from_slice(c))? - h)
    };
    let mut c = c0.to_vec();
    let mut e = energy(&c)?;
    let mut x = vec![0.0; c.len()];
    for _ in 0..LEVEL_MAX_ITER {
        if e.abs() <= 1e-13 * (1.0 + h.abs()) {
            return Ok(c);
        }
        f.eval(&c, &mut x)?;
        // ∇H̃ = (-φ̇, İ)
        let g: Vec<f64> = (0..2 * m)
            .map(|k| if k < m { -x[m + k] } else { x[k - m] })
            .collect();
        let g2: f64 = g.iter().map(|a| a * a).sum();
        if !(g2 > 1e-28) {
            break;
        }
        let mut s = e / g2;
        let norm = s.abs() * g2.sqrt();
        if norm > 0.05 {
            s *= 0.05 / norm;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = c.iter().zip(&g).map(|(ck, gk)| ck - s * gk).collect();
            if let Ok(et) = energy(&trial) {
                if et.abs() < e.abs() {
                    c = trial;
                    e = et;
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(VortexError::SolverFailed {
        iterations: LEVEL_MAX_ITER,
        residual: e.abs(),
    })
}

/// One scan start: solve a few equilibria from random configurations, step
/// off the one closest to the level along a random oscillatory mode, move
/// onto the level and shoot with the linearised period and the leading
/// near-return times as seeds.
fn scan_start(
    t: &LimTransform,
    v: &VorticitySet,
    h: f64,
    rng: &mut ChaCha8Rng,
    opts: &ScanOptions,
) -> Result<PeriodicOrbitResult> {
    let flow = ChartFlow::new(t, v);
    let samples: Vec<Vec<f64>> = (0..opts.equilibria.max(1))
        .map(|_| sample_normalised(v, rng))
        .collect();
    let nearest = samples
        .iter()
        .filter_map(|z| {
            let eq = solve_nre_with(v, z, 1e-12, NRE_MAX_ITER).ok()?;
            let c = project(t, v, &eq.config).ok()?;
            Some((eq.h_value, c.to_vec()))
        })
        .min_by(|a, b| (a.0 - h).abs().total_cmp(&(b.0 - h).abs()));
    let modes = match &nearest {
        Some((_, ce)) => linearised_modes(&flow, ce)?,
        None => vec![],
    };
    let (base, mut periods) = match (&nearest, modes.is_empty()) {
        (Some((_, ce)), false) => {
            let mode = &modes[rng.random_range(0..modes.len())];
            let a = rng.random_range(opts.offset.0..=opts.offset.1)
                * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let c = ce
                .iter()
                .zip(&mode.direction)
                .map(|(c, e)| c + a * e)
                .collect();
            (c, vec![mode.period])
        }
        _ => (
            project(t, v, &Configuration::new(samples[0].clone())?)?.to_vec(),
            vec![],
        ),
    };
    let c = onto_level(t, v, &base, h)?;

    let k = opts.samples.max(3);
    let times: Vec<f64> = (0..=k).map(|i| opts.window * i as f64 / k as f64).collect();
    let traj = integrate_flow_at(&flow, &c, &times, &opts.tolerances.integrator)?;
    let c0 = ChartPoint::from_slice(&c);
    let dist: Result<Vec<f64>> = traj
        .states
        .iter()
        .map(|s| chart_distance(&c0, &ChartPoint::from_slice(s)))
        .collect();
    periods.extend(
        recurrence_candidates(&traj.times, &dist?, opts.candidates)
            .into_iter()
            .map(|(t, _)| t),
    );

    let mut best: Option<PeriodicOrbitResult> = None;
    for p in periods.into_iter().filter(|p| *p > 0.0 && p.is_finite()) {
        let Ok(r) = solve_chart(t, v, &c, p, Some(h), &opts.tolerances) else {
            continue;
        };
        if r.classification == Classification::Ntnrpo {
            return Ok(r);
        }
        if best
            .as_ref()
            .is_none_or(|b| !b.converged() && r.converged())
        {
            best = Some(r);
        }
    }
    best.ok_or(VortexError::SolverFailed {
        iterations: 0,
        residual: f64::NAN,
    })
}

/// Searches for relative periodic orbits on each reduced level `H̃ = h`.
///
/// `(level, start)` pairs run in parallel, each on its own ChaCha stream, so
/// the reports depend only on the inputs and `seed`. Starts that never reach
/// the level or whose shooting fails outright count as attempts without a
/// result.
pub fn level_scan(
    v: &VorticitySet,
    h_values: &[f64],
    starts_per_level: usize,
    seed: u64,
    opts: &ScanOptions,
) -> Result<Vec<LevelReport>> {
    if v.n() < 3 {
        return Err(VortexError::InvalidParameter(
            "level scans need at least three vortices".into(),
        ));
    }
    opts.tolerances.integrator.validate()?;
    let t = build_lim_transform(v);
    let jobs: Vec<(usize, usize)> = (0..h_values.len())
        .flat_map(|l| (0..starts_per_level).map(move |s| (l, s)))
        .collect();
    let found: Vec<Option<PeriodicOrbitResult>> = jobs
        .par_iter()
        .map(|&(l, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((l as u64) << 32) | s as u64);
            scan_start(&t, v, h_values[l], &mut rng, opts).ok()
        })
        .collect();
    let mut reports: Vec<LevelReport> = h_values
        .iter()
        .map(|&h| LevelReport {
            h,
            attempts: starts_per_level,
            converged: 0,
            ntnrpo: 0,
            results: vec![],
        })
        .collect();
    for ((l, _), r) in jobs.into_iter().zip(found) {
        if let Some(r) = r {
            let rep = &mut reports[l];
            rep.converged += usize::from(r.converged());
            rep.ntnrpo += usize::from(r.classification == Classification::Ntnrpo);
            rep.results.push(r);
        }
    }
    Ok(reports)
}
