use nalgebra::{DMatrix, DVector};

use super::diameter::reduced_diameter;
use super::{
    rotating_residual, sup, wrap_angle, Classification, PeriodicOrbitResult, RotatingSystem,
    ShootingMode, ShootingProblem, ShootingTolerances,
};
use crate::dynamics::{self, IntegralValues, VorticitySet};
use crate::equilibria::rotation_rate;
use crate::error::{Result, VortexError};
use crate::flow::Flow;
use crate::integrators::{flow_map, integrate_flow_at, IntegratorConfig};
use crate::linalg::{gauss_newton, GnOptions};
use crate::reduction::{
    build_lim_transform_with, chart_distance, from_chart, from_reduced, phi1_rate, project,
    reduced_chart_hamiltonian, ChartFlow, ChartPoint, ClusterTree, LimTransform,
};

/// Flow on `(x, vec(M))` with `M` stored column-major and `Ṁ = DF(x) M`.
struct Variational<'a, F: Flow + ?Sized> {
    base: &'a F,
}

impl<F: Flow + ?Sized> Flow for Variational<'_, F> {
    fn dim(&self) -> usize {
        let n = self.base.dim();
        n + n * n
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.base.dim();
        self.base.eval(&x[..n], &mut out[..n])?;
        let j = self.base.jacobian(&x[..n])?;
        let m = DMatrix::from_column_slice(n, n, &x[n..]);
        out[n..].copy_from_slice((j * m).as_slice());
        Ok(())
    }

    fn integrals(&self, x: &[f64]) -> Result<IntegralValues> {
        self.base.integrals(&x[..self.base.dim()])
    }
}

/// End state and monodromy matrix of the flow over `[0, t]`.
fn flow_with_monodromy<F: Flow + ?Sized>(
    f: &F,
    x0: &[f64],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = f.dim();
    let mut aug = x0.to_vec();
    aug.extend(DMatrix::<f64>::identity(n, n).as_slice());
    let end = flow_map(&Variational { base: f }, &aug, t, cfg)?;
    Ok((
        end[..n].to_vec(),
        DMatrix::from_column_slice(n, n, &end[n..]),
    ))
}

fn sample_times(period: f64, samples: usize) -> Vec<f64> {
    let k = samples.max(2);
    (0..=k).map(|i| period * i as f64 / k as f64).collect()
}

fn gn_options(tol: &ShootingTolerances) -> GnOptions {
    GnOptions {
        max_iter: tol.max_iter,
        rcond: 1e-10,
        max_step: 0.1,
    }
}

/// Centres (when pinned), rescales to the impulse target and rotates the
/// first block onto the positive real axis.
fn prepare<S: RotatingSystem + ?Sized>(sys: &S, z: &[f64]) -> Result<Vec<f64>> {
    let w = sys.weights();
    let mut z = z.to_vec();
    if sys.pins_centre() {
        let (p, q, _) = dynamics::weighted_moments(w, &z);
        let tg: f64 = w.iter().sum();
        for k in 0..w.len() {
            z[2 * k] -= p / tg;
            z[2 * k + 1] -= q / tg;
        }
    }
    let (_, _, im) = dynamics::weighted_moments(w, &z);
    if !(im > 0.0) {
        return Err(VortexError::InvalidParameter(
            "cannot normalise a state with zero angular impulse".into(),
        ));
    }
    let s = (sys.impulse_target() / im).sqrt();
    z.iter_mut().for_each(|c| *c *= s);
    let a = z[1].atan2(z[0]);
    let mut z = dynamics::rotate(&z, a);
    z[1] = 0.0;
    Ok(z)
}

/// Rotating-frame residual `(e^{-Jθ} φ_T(z) - z, P, Q, I - I*, anchor, y_1, H - h)`
/// over the unknowns `(z, T, θ)`.
struct RotatingShooting<'a, S: RotatingSystem + ?Sized> {
    sys: &'a S,
    z_ref: Vec<f64>,
    x_ref: Vec<f64>,
    energy: Option<f64>,
}

impl<S: RotatingSystem + ?Sized> RotatingShooting<'_, S> {
    fn residual(
        &self,
        x: &[f64],
        cfg: &IntegratorConfig,
        jac: bool,
    ) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
        let d = self.sys.dim();
        let (z, t, theta) = (&x[..d], x[d], x[d + 1]);
        if !(t > 0.0) {
            return Err(VortexError::InvalidParameter(
                "period must be positive".into(),
            ));
        }
        let (zt, mono) = if jac {
            let (zt, m) = flow_with_monodromy(self.sys, z, t, cfg)?;
            (zt, Some(m))
        } else {
            (flow_map(self.sys, z, t, cfg)?, None)
        };
        let w = self.sys.weights();
        let pins = self.sys.pins_centre();
        let rows = d + 3 + usize::from(pins) * 2 + usize::from(self.energy.is_some());
        let mut r = DVector::zeros(rows);
        let back = dynamics::rotate(&zt, -theta);
        for k in 0..d {
            r[k] = back[k] - z[k];
        }
        let (p, q, im) = dynamics::weighted_moments(w, z);
        let mut row = d;
        if pins {
            r[row] = p;
            r[row + 1] = q;
            row += 2;
        }
        r[row] = im - self.sys.impulse_target();
        r[row + 1] = self
            .x_ref
            .iter()
            .zip(z.iter().zip(&self.z_ref))
            .map(|(a, (b, c))| a * (b - c))
            .sum();
        r[row + 2] = z[1];
        if let Some(h) = self.energy {
            r[row + 3] = self.sys.energy(z)? - h;
        }
        let Some(m) = mono else {
            return Ok((r, None));
        };

        let mut j = DMatrix::zeros(rows, d + 2);
        let (s, c) = theta.sin_cos();
        for col in 0..d {
            for b in 0..d / 2 {
                let (u, v) = (m[(2 * b, col)], m[(2 * b + 1, col)]);
                j[(2 * b, col)] = c * u - s * v;
                j[(2 * b + 1, col)] = s * u + c * v;
            }
            j[(col, col)] -= 1.0;
        }
        let mut ft = vec![0.0; d];
        self.sys.eval(&zt, &mut ft)?;
        let ft_back = dynamics::rotate(&ft, -theta);
        for k in 0..d {
            j[(k, d)] = ft_back[k];
        }
        // d/dθ e^{-Jθ} y = -J e^{-Jθ} y, with J(a, b) = (b, -a)
        for b in 0..d / 2 {
            j[(2 * b, d + 1)] = -back[2 * b + 1];
            j[(2 * b + 1, d + 1)] = back[2 * b];
        }
        let mut row = d;
        if pins {
            for (k, &g) in w.iter().enumerate() {
                j[(row, 2 * k)] = g;
                j[(row + 1, 2 * k + 1)] = g;
            }
            row += 2;
        }
        for k in 0..d {
            j[(row, k)] = 2.0 * w[k / 2] * z[k];
            j[(row + 1, k)] = self.x_ref[k];
        }
        j[(row + 2, 1)] = 1.0;
        if self.energy.is_some() {
            let g = self.sys.grad_energy(z)?;
            for k in 0..d {
                j[(row + 3, k)] = g[k];
            }
        }
        Ok((r, Some(j)))
    }
}

/// Residual of rigid rotation at `z`: `X(z) - ω J z` with the best-fit `ω`.
fn rigid_defect<S: RotatingSystem + ?Sized>(sys: &S, z: &[f64]) -> Result<f64> {
    let mut f = vec![0.0; z.len()];
    sys.eval(z, &mut f)?;
    let om = rotation_rate(sys.weights(), z, &f);
    Ok(z.chunks_exact(2)
        .zip(f.chunks_exact(2))
        .map(|(p, v)| (v[0] - om * p[1]).abs().max((v[1] + om * p[0]).abs()))
        .fold(0.0, f64::max))
}

/// Shooting on `(z, T, θ)` with `z(T) = e^{Jθ} z(0)`, the normalisation and
/// centre pins, a time-shift anchor against the (prepared) guess, the gauge
/// `y_1 = 0` and an optional energy pin.
pub fn solve_rotating<S: RotatingSystem + ?Sized>(
    sys: &S,
    z_guess: &[f64],
    period: f64,
    theta: f64,
    energy_target: Option<f64>,
    tol: &ShootingTolerances,
) -> Result<PeriodicOrbitResult> {
    if z_guess.len() != sys.dim() {
        return Err(VortexError::DimensionMismatch {
            expected: sys.dim(),
            got: z_guess.len(),
        });
    }
    if !(period > 0.0) {
        return Err(VortexError::InvalidParameter(
            "period must be positive".into(),
        ));
    }
    tol.integrator.validate()?;
    let z0 = prepare(sys, z_guess)?;
    let mut x_ref = vec![0.0; z0.len()];
    sys.eval(&z0, &mut x_ref)?;
    let shoot = RotatingShooting {
        sys,
        z_ref: z0.clone(),
        x_ref,
        energy: energy_target,
    };
    let d = sys.dim();
    let mut x0 = z0;
    x0.extend([period, theta]);
    let cfg = &tol.integrator;
    let out = gauss_newton(
        &x0,
        |x, jac| shoot.residual(x, cfg, jac),
        |_, r| r.amax() <= tol.residual,
        &gn_options(tol),
    )?;
    let x = out.x;
    let z = x[..d].to_vec();
    let (t, th) = (x[d], x[d + 1]);
    let newton = out.residual.amax();
    let mut result = PeriodicOrbitResult {
        mode: ShootingMode::RotatingFrame,
        state0: z.clone(),
        period: t,
        rotation_angle: wrap_angle(th),
        residual: newton,
        verified_residual: f64::NAN,
        h_value: sys.energy(&z)?,
        classification: Classification::Unconverged,
        reduced_diameter: f64::NAN,
        iterations: out.iterations,
        jacobian_rank: out.rank,
        lifted_state0: None,
        full_residual: None,
        tree: None,
    };
    if !out.converged {
        return Ok(result);
    }
    let tight = tol.integrator.tightened(10.0);
    let (rt, _) = shoot.residual(&x, &tight, false)?;
    let diff = (&rt - &out.residual).amax();
    result.residual = newton.max(diff);
    result.verified_residual = sup(&rt.as_slice()[..d]);
    if result.residual > tol.residual {
        return Ok(result);
    }
    let traj = integrate_flow_at(sys, &z, &sample_times(t, tol.diameter_samples), cfg)?;
    let full: Result<Vec<Vec<f64>>> = traj
        .states
        .iter()
        .map(|s| sys.full_configuration(s))
        .collect();
    result.reduced_diameter = reduced_diameter(&sys.full_vorticities(), &full?)?;
    result.classification =
        if rigid_defect(sys, &z)? <= tol.fp_tol || result.reduced_diameter <= tol.fp_tol {
            Classification::RelativeEquilibrium
        } else {
            Classification::Ntnrpo
        };
    Ok(result)
}

/// Chart flow with the cyclic angle `φ_1` appended as a last component.
struct PhiFlow<'a> {
    chart: ChartFlow<'a>,
}

impl Flow for PhiFlow<'_> {
    fn dim(&self) -> usize {
        self.chart.dim() + 1
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let m = self.chart.dim();
        self.chart.eval(&x[..m], &mut out[..m])?;
        out[m] = phi1_rate(
            self.chart.transform,
            self.chart.vorticities,
            &ChartPoint::from_slice(&x[..m]),
        )?;
        Ok(())
    }

    fn integrals(&self, x: &[f64]) -> Result<IntegralValues> {
        self.chart.integrals(&x[..self.chart.dim()])
    }
}

/// Lifts a periodic chart orbit through `c` to the full space: returns
/// `z(0) = from_reduced(from_chart(c, 0))` and the angle `θ` with
/// `z(T) = e^{Jθ} z(0)`, obtained by integrating `φ̇_1` alongside the chart
/// flow (`θ = -Δφ_1`).
pub fn lift_chart_orbit(
    t: &LimTransform,
    v: &VorticitySet,
    c: &[f64],
    period: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, f64)> {
    let z0 = from_reduced(t, &from_chart(&ChartPoint::from_slice(c), 0.0)?)?.into_coords();
    let f = PhiFlow {
        chart: ChartFlow::new(t, v),
    };
    let mut x0 = c.to_vec();
    x0.push(0.0);
    let end = flow_map(&f, &x0, period, cfg)?;
    Ok((z0, wrap_angle(-end[c.len()])))
}

struct ChartShooting<'a> {
    flow: ChartFlow<'a>,
    c_ref: Vec<f64>,
    x_ref: Vec<f64>,
    energy: Option<f64>,
}

impl ChartShooting<'_> {
    fn residual(
        &self,
        x: &[f64],
        cfg: &IntegratorConfig,
        jac: bool,
    ) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
        let d = self.flow.dim();
        let m = d / 2;
        let (c, t) = (&x[..d], x[d]);
        if !(t > 0.0) {
            return Err(VortexError::InvalidParameter(
                "period must be positive".into(),
            ));
        }
        let (ct, mono) = if jac {
            let (ct, mm) = flow_with_monodromy(&self.flow, c, t, cfg)?;
            (ct, Some(mm))
        } else {
            (flow_map(&self.flow, c, t, cfg)?, None)
        };
        let rows = d + 1 + usize::from(self.energy.is_some());
        let mut r = DVector::zeros(rows);
        for k in 0..d {
            let diff = ct[k] - c[k];
            r[k] = if k >= m { wrap_angle(diff) } else { diff };
        }
        r[d] = self
            .x_ref
            .iter()
            .zip(c.iter().zip(&self.c_ref))
            .map(|(a, (b, cc))| a * (b - cc))
            .sum();
        let mut fc = vec![0.0; d];
        if self.energy.is_some() || jac {
            self.flow.eval(c, &mut fc)?;
        }
        if let Some(h) = self.energy {
            let cp = ChartPoint::from_slice(c);
            r[d + 1] =
                reduced_chart_hamiltonian(self.flow.transform, self.flow.vorticities, &cp)? - h;
        }
        let Some(mm) = mono else {
            return Ok((r, None));
        };
        let mut j = DMatrix::zeros(rows, d + 1);
        j.view_mut((0, 0), (d, d))
            .copy_from(&(mm - DMatrix::identity(d, d)));
        let mut ft = vec![0.0; d];
        self.flow.eval(&ct, &mut ft)?;
        for k in 0..d {
            j[(k, d)] = ft[k];
            j[(d, k)] = self.x_ref[k];
        }
        if self.energy.is_some() {
            // ∂H̃/∂I_k = -φ̇_k and ∂H̃/∂φ_k = İ_k
            for k in 0..m {
                j[(d + 1, k)] = -fc[m + k];
                j[(d + 1, m + k)] = fc[k];
            }
        }
        Ok((r, Some(j)))
    }
}

/// Fixed-period shooting on the chart over `(c, T)` with a time-shift
/// anchor and an optional energy pin. The converged orbit is lifted to the
/// full space and checked against the full rotating residual.
pub fn solve_chart(
    t: &LimTransform,
    v: &VorticitySet,
    c0: &[f64],
    period: f64,
    energy_target: Option<f64>,
    tol: &ShootingTolerances,
) -> Result<PeriodicOrbitResult> {
    let flow = ChartFlow::new(t, v);
    let d = flow.dim();
    if c0.len() != d {
        return Err(VortexError::DimensionMismatch {
            expected: d,
            got: c0.len(),
        });
    }
    if !(period > 0.0) {
        return Err(VortexError::InvalidParameter(
            "period must be positive".into(),
        ));
    }
    tol.integrator.validate()?;
    let cp0 = ChartPoint::from_slice(c0);
    let h0 = reduced_chart_hamiltonian(t, v, &cp0)?;
    if d == 0 {
        // two vortices: the reduced space is a single point
        let z0 = from_reduced(t, &from_chart(&cp0, 0.0)?)?.into_coords();
        let rate = phi1_rate(t, v, &cp0)?;
        return Ok(PeriodicOrbitResult {
            mode: ShootingMode::ReducedChart,
            state0: vec![],
            period,
            rotation_angle: wrap_angle(-rate * period),
            residual: 0.0,
            verified_residual: 0.0,
            h_value: h0,
            classification: Classification::RelativeEquilibrium,
            reduced_diameter: 0.0,
            iterations: 0,
            jacobian_rank: 0,
            lifted_state0: Some(z0),
            full_residual: None,
            tree: Some(t.tree.clone()),
        });
    }
    let mut x_ref = vec![0.0; d];
    flow.eval(c0, &mut x_ref)?;
    let shoot = ChartShooting {
        flow,
        c_ref: c0.to_vec(),
        x_ref,
        energy: energy_target,
    };
    let cfg = &tol.integrator;
    let mut x0 = c0.to_vec();
    x0.push(period);
    let out = gauss_newton(
        &x0,
        |x, jac| shoot.residual(x, cfg, jac),
        |_, r| r.amax() <= tol.residual,
        &gn_options(tol),
    )?;
    let x = out.x;
    let c = x[..d].to_vec();
    let per = x[d];
    let cp = ChartPoint::from_slice(&c);
    let newton = out.residual.amax();
    let mut result = PeriodicOrbitResult {
        mode: ShootingMode::ReducedChart,
        state0: c.clone(),
        period: per,
        rotation_angle: f64::NAN,
        residual: newton,
        verified_residual: f64::NAN,
        h_value: reduced_chart_hamiltonian(t, v, &cp)?,
        classification: Classification::Unconverged,
        reduced_diameter: f64::NAN,
        iterations: out.iterations,
        jacobian_rank: out.rank,
        lifted_state0: None,
        full_residual: None,
        tree: Some(t.tree.clone()),
    };
    if !out.converged {
        return Ok(result);
    }
    let tight = tol.integrator.tightened(10.0);
    let (rt, _) = shoot.residual(&x, &tight, false)?;
    result.residual = newton.max((&rt - &out.residual).amax());
    result.verified_residual = sup(&rt.as_slice()[..d]);
    if result.residual > tol.residual {
        return Ok(result);
    }

    let traj = integrate_flow_at(
        &shoot.flow,
        &c,
        &sample_times(per, tol.diameter_samples),
        cfg,
    )?;
    let pts: Vec<ChartPoint> = traj
        .states
        .iter()
        .map(|s| ChartPoint::from_slice(s))
        .collect();
    let mut diam: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            diam = diam.max(chart_distance(&pts[i], &pts[j])?);
        }
    }
    result.reduced_diameter = diam;
    let mut fc = vec![0.0; d];
    shoot.flow.eval(&c, &mut fc)?;
    result.classification = if sup(&fc) <= tol.fp_tol || diam <= tol.fp_tol {
        Classification::RelativeEquilibrium
    } else {
        Classification::Ntnrpo
    };

    let (z0, theta) = lift_chart_orbit(t, v, &c, per, cfg)?;
    result.rotation_angle = theta;
    result.full_residual = Some(sup(&rotating_residual(v, &z0, per, theta, cfg)?));
    result.lifted_state0 = Some(z0);
    Ok(result)
}

pub(super) fn solve_chart_with_retry(p: &ShootingProblem) -> Result<PeriodicOrbitResult> {
    let v = &p.vorticities;
    let n = v.n();
    let tree = p.tree.clone().unwrap_or_else(|| ClusterTree::sequential(n));
    let t = build_lim_transform_with(v, &tree)?;
    let first = solve_chart(
        &t,
        v,
        &p.initial_state,
        p.period_guess,
        p.energy_target,
        &p.tolerances,
    );
    let Err(VortexError::ChartSingular(_)) = first else {
        return first;
    };
    let z = from_reduced(
        &t,
        &from_chart(&ChartPoint::from_slice(&p.initial_state), 0.0)?,
    )?;
    for shift in 1..n {
        let t2 = build_lim_transform_with(v, &ClusterTree::cyclic(n, shift))?;
        let Ok(c) = project(&t2, v, &z) else {
            continue;
        };
        match solve_chart(
            &t2,
            v,
            &c.to_vec(),
            p.period_guess,
            p.energy_target,
            &p.tolerances,
        ) {
            Err(VortexError::ChartSingular(_)) => continue,
            other => return other,
        }
    }
    first
}
