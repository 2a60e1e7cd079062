//! Time integration: the symplectic implicit midpoint rule and an adaptive
//! Dormand–Prince 5(4) pair, with cubic Hermite dense output and drift
//! monitoring of the first integrals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegralValues, VorticitySet};
use crate::error::{Result, VortexError};
use crate::flow::{Flow, VortexFlow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitMidpoint,
    AdaptiveRk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Fixed step for the midpoint rule, initial step for the adaptive pair.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Floor for step halving after a failed midpoint solve.
    pub min_step: f64,
    pub max_steps: usize,
    /// Keep every k-th accepted step in the trajectory (the last step is always kept).
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::ImplicitMidpoint,
            step: 1e-3,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            newton_tol: 1e-14,
            newton_max_iter: 50,
            min_step: 1e-12,
            max_steps: 100_000_000,
            record_stride: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn midpoint(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            scheme: Scheme::AdaptiveRk,
            step: 1e-2,
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(VortexError::InvalidParameter(what.to_string()));
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("step must be positive");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.newton_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.newton_max_iter < 1 {
            return bad("newton_max_iter must be at least 1");
        }
        if !(self.min_step > 0.0) || self.record_stride == 0 || self.max_steps == 0 {
            return bad("min_step, record_stride and max_steps must be positive");
        }
        Ok(())
    }

    /// The same scheme with every tolerance divided by `factor`.
    ///
    /// For the midpoint rule the step shrinks by `sqrt(factor)` so the
    /// second-order global error drops by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        let mut c = self.clone();
        c.rel_tol /= factor;
        c.abs_tol /= factor;
        c.newton_tol = (c.newton_tol / factor).max(1e-15);
        if c.scheme == Scheme::ImplicitMidpoint {
            c.step /= factor.sqrt();
        }
        c
    }
}

/// Time samples of a flow together with the monitored integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub integrals: Vec<IntegralValues>,
    /// Vector field at each sample, kept for Hermite interpolation.
    pub rates: Vec<Vec<f64>>,
    pub accepted_steps: usize,
}

impl Trajectory {
    fn with_capacity(cap: usize) -> Self {
        Self {
            times: Vec::with_capacity(cap),
            states: Vec::with_capacity(cap),
            integrals: Vec::with_capacity(cap),
            rates: Vec::with_capacity(cap),
            accepted_steps: 0,
        }
    }

    fn push<F: Flow + ?Sized>(&mut self, f: &F, t: f64, y: Vec<f64>, dy: Vec<f64>) -> Result<()> {
        self.integrals.push(f.integrals(&y)?);
        self.times.push(t);
        self.states.push(y);
        self.rates.push(dy);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// Cubic Hermite interpolation between the stored samples.
    ///
    /// Only accurate when the trajectory kept every accepted step.
    pub fn sample_at(&self, t: f64) -> Option<Vec<f64>> {
        let first = *self.times.first()?;
        let last = *self.times.last()?;
        if t < first || t > last {
            return None;
        }
        let k = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p if p >= self.times.len() => self.times.len() - 1,
            p => p - 1,
        };
        if k + 1 >= self.times.len() {
            return Some(self.states[k].clone());
        }
        Some(hermite(
            self.times[k],
            &self.states[k],
            &self.rates[k],
            self.times[k + 1],
            &self.states[k + 1],
            &self.rates[k + 1],
            t,
        ))
    }
}

fn hermite(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

/// Maximum drift of one integral relative to its initial value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub abs: f64,
    /// `abs / max(|initial|, 1e-14)`.
    pub rel: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub p: Drift,
    pub q: Drift,
    pub i_moment: Drift,
    pub h: Drift,
}

pub fn drift_report(traj: &Trajectory) -> DriftReport {
    let Some(first) = traj.integrals.first() else {
        return DriftReport::default();
    };
    let mut rep = DriftReport::default();
    let upd = |d: &mut Drift, v0: f64, v: f64| {
        let a = (v - v0).abs();
        if a > d.abs {
            d.abs = a;
            d.rel = a / v0.abs().max(1e-14);
        }
    };
    for iv in &traj.integrals {
        upd(&mut rep.p, first.p, iv.p);
        upd(&mut rep.q, first.q, iv.q);
        upd(&mut rep.i_moment, first.i_moment, iv.i_moment);
        upd(&mut rep.h, first.h, iv.h);
    }
    rep
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn locate(e: VortexError, time: f64) -> VortexError {
    match e {
        VortexError::Collision { i, j, .. } => VortexError::CollisionAt { time, i, j },
        other => other,
    }
}

/// Solves `u = z + dt F((z + u)/2)`.
///
/// Fixed-point sweeps first; if they stall the solve switches to Newton and
/// ends with one more sweep so that linear invariants stay exact.
fn midpoint_solve<F: Flow + ?Sized>(
    f: &F,
    z: &[f64],
    f_z: &[f64],
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let n = z.len();
    let tol = cfg.newton_tol * (1.0 + max_abs(z));
    let mut u: Vec<f64> = z.iter().zip(f_z).map(|(a, b)| a + dt * b).collect();
    let mut m = vec![0.0; n];
    let mut k = vec![0.0; n];
    let mut prev_inc = f64::INFINITY;
    let fixed_iters = cfg.newton_max_iter.max(3);
    for it in 0..fixed_iters {
        for i in 0..n {
            m[i] = 0.5 * (z[i] + u[i]);
        }
        f.eval(&m, &mut k)?;
        let mut inc = 0.0f64;
        for i in 0..n {
            let un = z[i] + dt * k[i];
            inc = inc.max((un - u[i]).abs());
            u[i] = un;
        }
        if !inc.is_finite() {
            break;
        }
        if inc <= tol {
            return Ok(u);
        }
        if it >= 2 && inc > 0.5 * prev_inc {
            break;
        }
        prev_inc = inc;
    }

    // Newton on G(u) = u - z - dt F((z+u)/2)
    if !u.iter().all(|x| x.is_finite()) {
        u = z.iter().zip(f_z).map(|(a, b)| a + dt * b).collect();
    }
    for _ in 0..cfg.newton_max_iter {
        for i in 0..n {
            m[i] = 0.5 * (z[i] + u[i]);
        }
        f.eval(&m, &mut k)?;
        let g: Vec<f64> = (0..n).map(|i| u[i] - z[i] - dt * k[i]).collect();
        if max_abs(&g) <= tol {
            for i in 0..n {
                u[i] = z[i] + dt * k[i];
            }
            return Ok(u);
        }
        let jac = f.jacobian(&m)?;
        let a = DMatrix::identity(n, n) - jac * (0.5 * dt);
        let rhs = -DVector::from_vec(g);
        let Some(delta) = a.lu().solve(&rhs) else {
            break;
        };
        for i in 0..n {
            u[i] += delta[i];
        }
        if !u.iter().all(|x| x.is_finite()) {
            break;
        }
    }
    Err(VortexError::NonConvergence { time: f64::NAN, dt })
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct RkAttempt {
    y: Vec<f64>,
    f_end: Vec<f64>,
    err: f64,
}

fn dopri_attempt<F: Flow + ?Sized>(
    f: &F,
    y: &[f64],
    f0: &[f64],
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<RkAttempt> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = vec![f0.to_vec()];
    let mut tmp = vec![0.0; n];
    for s in 1..7 {
        for i in 0..n {
            let mut acc = y[i];
            for (j, kj) in k.iter().enumerate() {
                acc += h * A[s][j] * kj[i];
            }
            tmp[i] = acc;
        }
        let mut ks = vec![0.0; n];
        f.eval(&tmp, &mut ks)?;
        k.push(ks);
    }
    // the 7th stage is evaluated at the 5th-order solution (FSAL)
    let y_new = tmp;
    let mut sq = 0.0;
    for i in 0..n {
        let mut e = 0.0;
        for (s, ks) in k.iter().enumerate() {
            e += E[s] * ks[i];
        }
        let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        sq += (h * e / sc).powi(2);
    }
    Ok(RkAttempt {
        y: y_new,
        f_end: k.pop().expect("seven stages"),
        err: (sq / n as f64).sqrt(),
    })
}

/// Result of one accepted step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub rate: Vec<f64>,
    pub dt_taken: f64,
    pub dt_next: f64,
}

/// Takes one accepted step of at most `dt` (negative `dt` integrates backwards).
pub fn step_flow<F: Flow + ?Sized>(
    f: &F,
    z: &[f64],
    f_z: &[f64],
    cfg: &IntegratorConfig,
    dt: f64,
) -> Result<StepOutcome> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(VortexError::InvalidParameter("dt must be nonzero".into()));
    }
    let mut h = dt;
    loop {
        match cfg.scheme {
            Scheme::ImplicitMidpoint => match midpoint_solve(f, z, f_z, h, cfg) {
                Ok(u) => {
                    let mut rate = vec![0.0; u.len()];
                    f.eval(&u, &mut rate)?;
                    return Ok(StepOutcome {
                        state: u,
                        rate,
                        dt_taken: h,
                        dt_next: dt,
                    });
                }
                Err(e) => {
                    h *= 0.5;
                    if h.abs() < cfg.min_step {
                        return Err(match e {
                            VortexError::NonConvergence { .. } => VortexError::NonConvergence {
                                time: f64::NAN,
                                dt: h * 2.0,
                            },
                            other => other,
                        });
                    }
                }
            },
            Scheme::AdaptiveRk => {
                let att = dopri_attempt(f, z, f_z, h, cfg);
                match att {
                    Ok(a) if a.err <= 1.0 && a.y.iter().all(|x| x.is_finite()) => {
                        let fac = if a.err == 0.0 {
                            5.0
                        } else {
                            (0.9 * a.err.powf(-0.2)).clamp(0.2, 5.0)
                        };
                        return Ok(StepOutcome {
                            state: a.y,
                            rate: a.f_end,
                            dt_taken: h,
                            dt_next: h * fac,
                        });
                    }
                    Ok(a) => {
                        let fac = if a.err.is_finite() {
                            (0.9 * a.err.powf(-0.2)).clamp(0.1, 0.9)
                        } else {
                            0.25
                        };
                        h *= fac;
                    }
                    Err(VortexError::Collision { .. }) => h *= 0.25,
                    Err(e) => return Err(e),
                }
                if h.abs() < cfg.min_step {
                    return Err(VortexError::NonConvergence {
                        time: f64::NAN,
                        dt: h,
                    });
                }
            }
        }
    }
}

/// One step of the N-vortex flow from `z`.
pub fn step(v: &VorticitySet, z: &[f64], cfg: &IntegratorConfig, dt: f64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let f = VortexFlow::new(v);
    let mut f_z = vec![0.0; z.len()];
    f.eval(z, &mut f_z)?;
    Ok(step_flow(&f, z, &f_z, cfg, dt)?.state)
}

/// Drives the integration loop, calling `on_step(t0, y0, f0, t1, y1, f1)` after
/// each accepted step.
fn drive<F, S>(
    f: &F,
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    mut on_step: S,
) -> Result<usize>
where
    F: Flow + ?Sized,
    S: FnMut(f64, &[f64], &[f64], f64, &[f64], &[f64]) -> Result<()>,
{
    cfg.validate()?;
    if x0.len() != f.dim() {
        return Err(VortexError::DimensionMismatch {
            expected: f.dim(),
            got: x0.len(),
        });
    }
    if !(t_end > 0.0) {
        return Err(VortexError::InvalidParameter(
            "t_end must be positive".into(),
        ));
    }
    let mut t = 0.0;
    let mut y = x0.to_vec();
    let mut fy = vec![0.0; y.len()];
    f.eval(&y, &mut fy).map_err(|e| locate(e, 0.0))?;
    let mut h = cfg.step;
    let mut steps = 0usize;
    let end_slack = 1e-12 * t_end.max(1.0);
    while t < t_end - end_slack {
        if steps >= cfg.max_steps {
            return Err(VortexError::StepLimit { time: t, steps });
        }
        let remaining = t_end - t;
        let trial = if h >= remaining - end_slack {
            remaining
        } else {
            h
        };
        let out = step_flow(f, &y, &fy, cfg, trial).map_err(|e| match e {
            VortexError::NonConvergence { dt, .. } => VortexError::NonConvergence { time: t, dt },
            other => locate(other, t),
        })?;
        let t_new = if out.dt_taken == remaining {
            t_end
        } else {
            t + out.dt_taken
        };
        on_step(t, &y, &fy, t_new, &out.state, &out.rate)?;
        t = t_new;
        y = out.state;
        fy = out.rate;
        h = match cfg.scheme {
            Scheme::ImplicitMidpoint => cfg.step,
            Scheme::AdaptiveRk => out.dt_next,
        };
        steps += 1;
    }
    Ok(steps)
}

/// Integrates `f` from `x0` over `[0, t_end]`, keeping accepted steps.
pub fn integrate_flow<F: Flow + ?Sized>(
    f: &F,
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut traj = Trajectory::with_capacity(1024);
    let mut f0 = vec![0.0; x0.len()];
    if x0.len() == f.dim() {
        f.eval(x0, &mut f0).map_err(|e| locate(e, 0.0))?;
    }
    let mut pending: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut count = 0usize;
    let mut first = Some((x0.to_vec(), f0));
    let steps = drive(f, x0, t_end, cfg, |_, _, _, t1, y1, f1| {
        if let Some((y, fy)) = first.take() {
            traj.push(f, 0.0, y, fy)?;
        }
        count += 1;
        if count % cfg.record_stride == 0 {
            traj.push(f, t1, y1.to_vec(), f1.to_vec())?;
            pending = None;
        } else {
            pending = Some((t1, y1.to_vec(), f1.to_vec()));
        }
        Ok(())
    })?;
    if let Some((t, y, fy)) = pending {
        traj.push(f, t, y, fy)?;
    }
    traj.accepted_steps = steps;
    Ok(traj)
}

/// Integrates `f` and returns states at the requested (sorted, non-negative)
/// times using cubic Hermite dense output.
pub fn integrate_flow_at<F: Flow + ?Sized>(
    f: &F,
    x0: &[f64],
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(VortexError::InvalidParameter(
            "output times must be sorted and non-negative".into(),
        ));
    }
    let mut traj = Trajectory::with_capacity(times.len());
    let mut f0 = vec![0.0; x0.len()];
    if x0.len() != f.dim() {
        return Err(VortexError::DimensionMismatch {
            expected: f.dim(),
            got: x0.len(),
        });
    }
    f.eval(x0, &mut f0).map_err(|e| locate(e, 0.0))?;
    let mut next = 0;
    while next < times.len() && times[next] == 0.0 {
        traj.push(f, 0.0, x0.to_vec(), f0.clone())?;
        next += 1;
    }
    let Some(&t_end) = times.last() else {
        return Ok(traj);
    };
    if next == times.len() {
        return Ok(traj);
    }
    let steps = drive(f, x0, t_end, cfg, |t0, y0, fy0, t1, y1, fy1| {
        while next < times.len() && (times[next] <= t1 || t1 == t_end) {
            let t = times[next].min(t1);
            let (y, fy) = if t == t1 {
                (y1.to_vec(), fy1.to_vec())
            } else {
                let y = hermite(t0, y0, fy0, t1, y1, fy1, t);
                let mut fy = vec![0.0; y.len()];
                f.eval(&y, &mut fy)?;
                (y, fy)
            };
            traj.push(f, t, y, fy)?;
            next += 1;
        }
        Ok(())
    })?;
    traj.accepted_steps = steps;
    Ok(traj)
}

/// End state of the flow after time `t_end`.
pub fn flow_map<F: Flow + ?Sized>(
    f: &F,
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let mut last = x0.to_vec();
    drive(f, x0, t_end, cfg, |_, _, _, _, y1, _| {
        last.copy_from_slice(y1);
        Ok(())
    })?;
    Ok(last)
}

/// Integrates the N-vortex equations of motion.
pub fn integrate(
    v: &VorticitySet,
    z0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_flow(&VortexFlow::new(v), z0, t_end, cfg)
}
