//! Action-angle chart on the normalised reduced space.
//!
//! Block `j` of `w` is written `W_j = r_j (cos θ_j, sin θ_j)` with action
//! `ρ_j = r_j²/2`. The chart keeps `I_k = ρ_k` and `φ_k = θ_k - θ_1` for
//! `k = 2..N-1`; `I_1 = Σ ρ_j` is pinned at `1/2`, i.e. `Ī = 1`, and the
//! cyclic angle `φ_1 = θ_1` is dropped.
//!
//! With `{I_k, φ_k} = 1` the reduced equations read
//! `İ_k = ∂H̃/∂φ_k`, `φ̇_k = -∂H̃/∂I_k`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{grad_reduced_hamiltonian, reduce, reduced_hamiltonian, LimTransform, ReducedState};
use crate::dynamics::{Configuration, IntegralValues, VorticitySet};
use crate::error::{Result, VortexError};
use crate::flow::Flow;

/// First-block modulus below which `θ_1` is treated as undefined.
pub const CHART_SINGULAR_TOL: f64 = 1e-10;

/// Tolerance on `Ī = 1` accepted by [`to_chart`].
const I_BAR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    /// `I_2, ..., I_{N-1}`.
    pub actions: Vec<f64>,
    /// `φ_2, ..., φ_{N-1}`.
    pub angles: Vec<f64>,
}

impl ChartPoint {
    /// Flat state `(I_2, ..., I_{N-1}, φ_2, ..., φ_{N-1})`.
    pub fn to_vec(&self) -> Vec<f64> {
        [self.actions.as_slice(), self.angles.as_slice()].concat()
    }

    pub fn from_slice(x: &[f64]) -> Self {
        let m = x.len() / 2;
        Self {
            actions: x[..m].to_vec(),
            angles: x[m..].to_vec(),
        }
    }

    /// `I_1 - Σ_{k≥2} I_k`, the action of the first block.
    pub fn rho1(&self) -> f64 {
        0.5 - self.actions.iter().sum::<f64>()
    }
}

/// Chart coordinates of a reduced state with `Ī = 1`.
pub fn to_chart(w: &ReducedState) -> Result<ChartPoint> {
    let ib = w.i_bar();
    if !((ib - 1.0).abs() <= I_BAR_TOL) {
        return Err(VortexError::InvalidParameter(format!(
            "chart needs a normalised reduced state, got Ī = {ib}"
        )));
    }
    let m1 = w.w[0].hypot(w.w[1]);
    if !(m1 >= CHART_SINGULAR_TOL) {
        return Err(VortexError::ChartSingular(m1));
    }
    let theta1 = w.w[1].atan2(w.w[0]);
    let blocks = w.w.len() / 2;
    let mut actions = Vec::with_capacity(blocks - 1);
    let mut angles = Vec::with_capacity(blocks - 1);
    for j in 1..blocks {
        let (q, p) = (w.w[2 * j], w.w[2 * j + 1]);
        actions.push(0.5 * (q * q + p * p));
        angles.push((p.atan2(q) - theta1).rem_euclid(TAU));
    }
    Ok(ChartPoint { actions, angles })
}

/// Reduced state with `Ī = 1` and first-block angle `phi1`.
pub fn from_chart(c: &ChartPoint, phi1: f64) -> Result<ReducedState> {
    if c.actions.len() != c.angles.len() {
        return Err(VortexError::InvalidParameter(
            "chart point needs as many actions as angles".into(),
        ));
    }
    if let Some(&a) = c.actions.iter().find(|a| !(**a >= 0.0)) {
        return Err(VortexError::ChartSingular(a));
    }
    let rho1 = c.rho1();
    let r1 = if rho1 >= 0.0 {
        (2.0 * rho1).sqrt()
    } else {
        rho1
    };
    if !(r1 >= CHART_SINGULAR_TOL) {
        return Err(VortexError::ChartSingular(r1));
    }
    let mut w = Vec::with_capacity(2 * c.actions.len() + 2);
    let (s, co) = phi1.sin_cos();
    w.extend([r1 * co, r1 * s]);
    for (a, phi) in c.actions.iter().zip(&c.angles) {
        let r = (2.0 * a).sqrt();
        let (s, co) = (phi + phi1).sin_cos();
        w.extend([r * co, r * s]);
    }
    Ok(ReducedState::new(w))
}

/// Sup-norm distance between the representatives `from_chart(·, 0)`.
pub fn chart_distance(a: &ChartPoint, b: &ChartPoint) -> Result<f64> {
    let wa = from_chart(a, 0.0)?;
    let wb = from_chart(b, 0.0)?;
    Ok(wa
        .w
        .iter()
        .zip(&wb.w)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Chart image of a centred configuration with `I = 1`.
pub fn project(t: &LimTransform, v: &VorticitySet, z: &Configuration) -> Result<ChartPoint> {
    to_chart(&reduce(t, v, z)?)
}

/// `H̃(c) = H̄(from_chart(c, 0))`.
pub fn reduced_chart_hamiltonian(
    t: &LimTransform,
    v: &VorticitySet,
    c: &ChartPoint,
) -> Result<f64> {
    reduced_hamiltonian(t, v, &from_chart(c, 0.0)?)
}

/// `(∂H̄/∂ρ_j, ∂H̄/∂θ_j)` for every block at `w`.
fn polar_partials(t: &LimTransform, v: &VorticitySet, w: &ReducedState) -> Result<Vec<(f64, f64)>> {
    let g = grad_reduced_hamiltonian(t, v, w)?;
    Ok(w.w
        .chunks_exact(2)
        .zip(g.chunks_exact(2))
        .map(|(b, gb)| {
            let r = b[0].hypot(b[1]);
            // ∂W/∂ρ = (cos θ, sin θ)/r, ∂W/∂θ = (-r sin θ, r cos θ)
            let d_rho = if r > 0.0 {
                (gb[0] * b[0] + gb[1] * b[1]) / (r * r)
            } else {
                f64::NAN
            };
            let d_theta = -gb[0] * b[1] + gb[1] * b[0];
            (d_rho, d_theta)
        })
        .collect())
}

/// The reduced equations in the chart, as the flat vector
/// `(İ_2, ..., İ_{N-1}, φ̇_2, ..., φ̇_{N-1})`.
pub fn reduced_vector_field(
    t: &LimTransform,
    v: &VorticitySet,
    c: &ChartPoint,
) -> Result<Vec<f64>> {
    let w = from_chart(c, 0.0)?;
    let d = polar_partials(t, v, &w)?;
    let m = c.actions.len();
    let mut out = vec![0.0; 2 * m];
    for k in 0..m {
        let (d_rho, d_theta) = d[k + 1];
        out[k] = d_theta;
        out[m + k] = -(d_rho - d[0].0);
    }
    if out.iter().any(|x| !x.is_finite()) {
        let a = c.actions.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(VortexError::ChartSingular(a));
    }
    Ok(out)
}

/// `φ̇_1 = -∂H/∂I_1` at `c`, the drift of the dropped cyclic angle.
pub fn phi1_rate(t: &LimTransform, v: &VorticitySet, c: &ChartPoint) -> Result<f64> {
    let w = from_chart(c, 0.0)?;
    let d = polar_partials(t, v, &w)?;
    Ok(-d[0].0)
}

/// The reduced dynamics on the chart as a [`Flow`] over the flat state of
/// [`ChartPoint::to_vec`].
#[derive(Debug, Clone, Copy)]
pub struct ChartFlow<'a> {
    pub transform: &'a LimTransform,
    pub vorticities: &'a VorticitySet,
}

impl<'a> ChartFlow<'a> {
    pub fn new(transform: &'a LimTransform, vorticities: &'a VorticitySet) -> Self {
        Self {
            transform,
            vorticities,
        }
    }
}

impl Flow for ChartFlow<'_> {
    fn dim(&self) -> usize {
        2 * (self.transform.n - 2)
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let f = reduced_vector_field(self.transform, self.vorticities, &ChartPoint::from_slice(x))?;
        out.copy_from_slice(&f);
        Ok(())
    }

    fn integrals(&self, x: &[f64]) -> Result<IntegralValues> {
        let c = ChartPoint::from_slice(x);
        Ok(IntegralValues {
            p: 0.0,
            q: 0.0,
            i_moment: 1.0,
            h: reduced_chart_hamiltonian(self.transform, self.vorticities, &c)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics;
    use crate::equilibria::thomson;
    use crate::reduction::{build_lim_transform, from_reduced};

    fn sample() -> (VorticitySet, LimTransform, Configuration) {
        let v = VorticitySet::new(vec![1.0, 2.0, 0.5, 1.5]).unwrap();
        let t = build_lim_transform(&v);
        let raw = [0.3, -0.1, 0.9, 0.4, -1.2, 0.2, 0.1, 0.7];
        let z = Configuration::new(dynamics::normalised(&v, &raw).unwrap()).unwrap();
        (v, t, z)
    }

    #[test]
    fn chart_round_trip() {
        let (v, t, z) = sample();
        let w = reduce(&t, &v, &z).unwrap();
        let c = to_chart(&w).unwrap();
        assert!((c.rho1() - 0.5 * (w.w[0] * w.w[0] + w.w[1] * w.w[1])).abs() < 1e-14);
        let phi1 = w.w[1].atan2(w.w[0]);
        let back = from_chart(&c, phi1).unwrap();
        for (a, b) in back.w.iter().zip(&w.w) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_is_quotiented_out() {
        let (v, t, z) = sample();
        let w = reduce(&t, &v, &z).unwrap();
        let c = to_chart(&w).unwrap();
        let cr = to_chart(&w.rotated(1.234)).unwrap();
        assert!(chart_distance(&c, &cr).unwrap() < 1e-12);
    }

    #[test]
    fn three_vortex_chart_is_two_dimensional() {
        let v = VorticitySet::new(vec![1.0, 2.0, 3.0]).unwrap();
        let t = build_lim_transform(&v);
        let z = dynamics::normalised(&v, &[0.3, -0.1, 0.9, 0.4, -1.2, 0.2]).unwrap();
        let c = project(&t, &v, &Configuration::new(z).unwrap()).unwrap();
        assert_eq!((c.actions.len(), c.angles.len()), (1, 1));
        assert_eq!(ChartFlow::new(&t, &v).dim(), 2);
    }

    #[test]
    fn singular_and_unnormalised_inputs() {
        let w = ReducedState::new(vec![0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(to_chart(&w), Err(VortexError::ChartSingular(_))));
        let w = ReducedState::new(vec![0.5, 0.0, 0.5, 0.0]);
        assert!(to_chart(&w).is_err());
        let c = ChartPoint {
            actions: vec![0.6],
            angles: vec![0.0],
        };
        assert!(matches!(
            from_chart(&c, 0.0),
            Err(VortexError::ChartSingular(_))
        ));
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let eq = thomson(4, 1.0).unwrap();
        let v = VorticitySet::identical(4, 1.0).unwrap();
        let t = build_lim_transform(&v);
        let c = project(&t, &v, &eq.config).unwrap();
        let f = reduced_vector_field(&t, &v, &c).unwrap();
        assert!(f.iter().all(|x| x.abs() < 1e-10), "{f:?}");
        // the dropped angle turns at the equilibrium rate
        let rate = phi1_rate(&t, &v, &c).unwrap();
        assert!((rate + eq.omega).abs() < 1e-10 || (rate - eq.omega).abs() < 1e-10);
    }

    #[test]
    fn field_matches_finite_differences() {
        let (v, t, z) = sample();
        let c = project(&t, &v, &z).unwrap();
        let f = reduced_vector_field(&t, &v, &c).unwrap();
        let m = c.actions.len();
        let h = 1e-6;
        let hq = |x: &[f64]| reduced_chart_hamiltonian(&t, &v, &ChartPoint::from_slice(x)).unwrap();
        let x = c.to_vec();
        for k in 0..m {
            let mut a = x.clone();
            let mut b = x.clone();
            a[m + k] += h;
            b[m + k] -= h;
            let d_phi = (hq(&a) - hq(&b)) / (2.0 * h);
            let mut a = x.clone();
            let mut b = x.clone();
            a[k] += h;
            b[k] -= h;
            let d_i = (hq(&a) - hq(&b)) / (2.0 * h);
            assert!((f[k] - d_phi).abs() < 1e-7);
            assert!((f[m + k] + d_i).abs() < 1e-7);
        }
        assert!(f.iter().any(|x| x.abs() > 1e-3));
        // lifted energy equals the configuration's
        let h0 = dynamics::hamiltonian(&v, z.coords()).unwrap();
        assert!((reduced_chart_hamiltonian(&t, &v, &c).unwrap() - h0).abs() < 1e-12);
        let lifted = from_reduced(&t, &from_chart(&c, 0.0).unwrap()).unwrap();
        assert!((dynamics::hamiltonian(&v, lifted.coords()).unwrap() - h0).abs() < 1e-12);
    }
}
