//! The multiplicative Hamiltonian `G(z) = Π_{i<j} |z_i - z_j|^{Γ_i Γ_j}`,
//! equal to `exp(-2π H(z))`, and its flow `Γ_i ż_i = J ∇_{z_i} G`.

use serde::{Deserialize, Serialize};

use super::{rotation_rate, RelativeEquilibrium};
use crate::dynamics::{self, Configuration, IntegralValues, VorticitySet, COLLISION_TOL};
use crate::error::{Result, VortexError};
use crate::flow::Flow;
use crate::integrators::Trajectory;

/// Largest `|log G|` accepted; beyond it `G` over- or underflows.
const LOG_G_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GValues {
    pub g: f64,
    pub grad_g: Vec<f64>,
    /// `L G / I`, the angular velocity of a centred G-flow relative
    /// equilibrium through `z`.
    pub omega_check: f64,
}

/// `G`, its gradient and `LG/I` at `z`. `G` is evaluated as the exponential
/// of `Σ Γ_i Γ_j log |z_i - z_j|`.
pub fn g_hamiltonian(v: &VorticitySet, z: &[f64]) -> Result<GValues> {
    dynamics::check_dim(v, z)?;
    let n = v.n();
    let gam = v.gammas();
    let mut log_g = 0.0;
    // Σ_j Γ_i Γ_j (z_i - z_j)/|z_i - z_j|², scaled by G afterwards
    let mut w = vec![0.0; z.len()];
    for i in 0..n {
        for j in i + 1..n {
            let dx = z[2 * i] - z[2 * j];
            let dy = z[2 * i + 1] - z[2 * j + 1];
            let s = dx * dx + dy * dy;
            if !(s > COLLISION_TOL) {
                return Err(VortexError::Collision { i, j, dist_sq: s });
            }
            let gg = gam[i] * gam[j];
            log_g += 0.5 * gg * s.ln();
            let c = gg / s;
            w[2 * i] += c * dx;
            w[2 * i + 1] += c * dy;
            w[2 * j] -= c * dx;
            w[2 * j + 1] -= c * dy;
        }
    }
    if !(log_g.abs() <= LOG_G_LIMIT) {
        return Err(VortexError::Overflow(log_g));
    }
    let g = log_g.exp();
    let (_, _, im) = dynamics::moments(v, z)?;
    Ok(GValues {
        g,
        grad_g: w.into_iter().map(|x| g * x).collect(),
        omega_check: v.total_l() * g / im,
    })
}

/// `ż_i = (1/Γ_i) J ∇_{z_i} G`.
pub fn g_vector_field(v: &VorticitySet, z: &[f64]) -> Result<Vec<f64>> {
    let gv = g_hamiltonian(v, z)?;
    let mut out = gv.grad_g;
    for (i, &g) in v.gammas().iter().enumerate() {
        let (gx, gy) = (out[2 * i], out[2 * i + 1]);
        out[2 * i] = gy / g;
        out[2 * i + 1] = -gx / g;
    }
    Ok(out)
}

/// The G-system as an integrable [`Flow`].
#[derive(Debug, Clone, Copy)]
pub struct GFlow<'a> {
    pub vorticities: &'a VorticitySet,
}

impl<'a> GFlow<'a> {
    pub fn new(vorticities: &'a VorticitySet) -> Self {
        Self { vorticities }
    }
}

impl Flow for GFlow<'_> {
    fn dim(&self) -> usize {
        self.vorticities.dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&g_vector_field(self.vorticities, x)?);
        Ok(())
    }

    fn integrals(&self, x: &[f64]) -> Result<IntegralValues> {
        dynamics::first_integrals(self.vorticities, x)
    }
}

/// Re-measures a relative equilibrium's angular velocity under the G-flow.
pub fn g_relative_equilibrium(
    v: &VorticitySet,
    eq: &RelativeEquilibrium,
) -> Result<RelativeEquilibrium> {
    let z = eq.config.coords();
    let zdot = g_vector_field(v, z)?;
    Ok(RelativeEquilibrium {
        omega: rotation_rate(v.gammas(), z, &zdot),
        ..eq.clone()
    })
}

/// `|ω - L G / I|` for a centred relative equilibrium of the G-flow whose
/// `omega` field is its G-flow angular velocity.
pub fn omega_g_relation(v: &VorticitySet, eq: &RelativeEquilibrium) -> Result<f64> {
    let gv = g_hamiltonian(v, eq.config.coords())?;
    Ok((eq.omega - gv.omega_check).abs())
}

/// Sup-norm defect of `z̃(t) = λ z(λ^{L-2} t)` against the G-flow, with the
/// derivative of `z̃` taken by three-point finite differences on the samples.
pub fn scaling_check(v: &VorticitySet, traj: &Trajectory, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(VortexError::InvalidParameter(
            "lambda must be positive".into(),
        ));
    }
    if traj.len() < 3 {
        return Err(VortexError::InvalidParameter(
            "scaling check needs at least three samples".into(),
        ));
    }
    let stretch = lambda.powf(v.total_l() - 2.0);
    let t: Vec<f64> = traj.times.iter().map(|s| s / stretch).collect();
    let zs: Vec<Vec<f64>> = traj
        .states
        .iter()
        .map(|s| s.iter().map(|c| lambda * c).collect())
        .collect();
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() - 1 {
        let (h0, h1) = (t[k] - t[k - 1], t[k + 1] - t[k]);
        let field = g_vector_field(v, &zs[k])?;
        for c in 0..field.len() {
            let d = -h1 / (h0 * (h0 + h1)) * zs[k - 1][c]
                + (h1 - h0) / (h0 * h1) * zs[k][c]
                + h0 / (h1 * (h0 + h1)) * zs[k + 1][c];
            worst = worst.max((d - field[c]).abs());
        }
    }
    Ok(worst)
}

fn integer_vorticities(v: &VorticitySet) -> Result<()> {
    for &g in v.gammas() {
        if !(g >= 2.0 && (g - g.round()).abs() <= 1e-12) {
            return Err(VortexError::VorticityDomain(g));
        }
    }
    Ok(())
}

/// Residual of the polynomial system for `ω = 1` relative equilibria of the
/// G-flow: `z_k - Σ_{i≠k} Γ_i δ_{ik} (z_k - z_i)` with `δ_{ik} = G/|z_i - z_k|²`.
///
/// It equals `-(2∇_{z_k}G - ∇_{z_k}I) / (2Γ_k)` blockwise. Requires integer
/// vorticities `Γ_i ≥ 2`.
pub fn polynomial_residual(v: &VorticitySet, z: &Configuration) -> Result<Vec<f64>> {
    integer_vorticities(v)?;
    let z = z.coords();
    let g = g_hamiltonian(v, z)?.g;
    let n = v.n();
    let mut out = z.to_vec();
    for k in 0..n {
        for i in 0..n {
            if i == k {
                continue;
            }
            let dx = z[2 * k] - z[2 * i];
            let dy = z[2 * k + 1] - z[2 * i + 1];
            let delta = g / (dx * dx + dy * dy);
            out[2 * k] -= v.gamma(i) * delta * dx;
            out[2 * k + 1] -= v.gamma(i) * delta * dy;
        }
    }
    Ok(out)
}

/// `∇G - (L G / 2I) ∇I`, zero at centred relative equilibria of the G-flow.
pub fn g_equilibrium_residual(v: &VorticitySet, z: &[f64]) -> Result<Vec<f64>> {
    let gv = g_hamiltonian(v, z)?;
    let gi = dynamics::grad_i(v, z);
    let c = 0.5 * gv.omega_check;
    Ok(gv.grad_g.iter().zip(gi).map(|(a, b)| a - c * b).collect())
}
