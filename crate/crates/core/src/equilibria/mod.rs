//! Normalised relative equilibria, their energy levels and the
//! G-Hamiltonian formulation.
//!
//! A normalised relative equilibrium (NRE) is a centred configuration with
//! `I = 1` solving `∇H(z) + (L/4π) ∇I(z) = 0`. It rotates rigidly with
//! angular velocity `ω = -L/(2π)` in the convention of [`dynamics::rotate`].

mod census;
mod gsystem;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Configuration, VorticitySet};
use crate::error::{Result, VortexError};
use crate::linalg::{gauss_newton, GnOptions};

pub use census::{census, sample_normalised, CensusLevel, EnergyCensus};
pub use gsystem::{
    g_equilibrium_residual, g_hamiltonian, g_relative_equilibrium, g_vector_field,
    omega_g_relation, polynomial_residual, scaling_check, GFlow, GValues,
};

/// Default Newton iteration cap of [`solve_nre`].
pub const NRE_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeEquilibrium {
    pub config: Configuration,
    /// Angular velocity measured from the vector field, rad per unit time.
    pub omega: f64,
    /// `‖∇H + (L/4π)∇I‖₂` at `config`.
    pub residual: f64,
    pub h_value: f64,
    pub min_dist_sq: f64,
}

impl RelativeEquilibrium {
    /// Evaluates residual, energy, angular velocity and spacing at `z`.
    pub fn evaluate(v: &VorticitySet, z: Vec<f64>) -> Result<Self> {
        let res = nre_residual(v, &z)?;
        let zdot = dynamics::vector_field(v, &z)?;
        Ok(Self {
            omega: rotation_rate(v.gammas(), &z, &zdot),
            residual: norm2(&res),
            h_value: dynamics::hamiltonian(v, &z)?,
            min_dist_sq: dynamics::min_mutual_distance(&z),
            config: Configuration::new(z)?,
        })
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Weighted least-squares `ω` with `ż ≈ ω J z`, i.e. the rate `θ̇` of
/// `z(t) = e^{Jθ(t)} z(0)`.
pub fn rotation_rate(weights: &[f64], z: &[f64], zdot: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &g) in weights.iter().enumerate() {
        let (x, y) = (z[2 * k], z[2 * k + 1]);
        let (u, w) = (zdot[2 * k], zdot[2 * k + 1]);
        num += g * (u * y - w * x);
        den += g * (x * x + y * y);
    }
    num / den
}

/// Regular `n`-gon of identical vortices `gamma`, centred, with `I = 1`.
pub fn thomson(n: usize, gamma: f64) -> Result<RelativeEquilibrium> {
    if n < 2 {
        return Err(VortexError::InvalidParameter(format!(
            "a Thomson polygon needs n >= 2, got {n}"
        )));
    }
    let v = VorticitySet::identical(n, gamma)?;
    let r = 1.0 / (n as f64 * gamma).sqrt();
    let z = (0..n)
        .flat_map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    RelativeEquilibrium::evaluate(&v, z)
}

/// `∇H(z) + (L/4π)∇I(z)`.
pub fn nre_residual(v: &VorticitySet, z: &[f64]) -> Result<Vec<f64>> {
    let mut out = dynamics::grad_hamiltonian(v, z)?;
    let c = v.total_l() / (4.0 * PI);
    for (k, o) in out.iter_mut().enumerate() {
        *o += c * 2.0 * v.gamma(k / 2) * z[k];
    }
    Ok(out)
}

/// Rotates `z` so that vortex 1 sits on the positive real axis.
fn to_gauge(z: &[f64]) -> Vec<f64> {
    let (x, y) = (z[0], z[1]);
    if x * x + y * y == 0.0 {
        return z.to_vec();
    }
    // e^{Jθ} maps (x, y) to (r, 0) for θ = atan2(y, x)
    dynamics::rotate(z, y.atan2(x))
}

fn augmented(
    v: &VorticitySet,
    z: &[f64],
    jac: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
    let dim = v.dim();
    let res = nre_residual(v, z)?;
    let (p, q, im) = dynamics::moments(v, z)?;
    let mut r = DVector::zeros(dim + 4);
    r.rows_mut(0, dim).copy_from_slice(&res);
    r[dim] = p;
    r[dim + 1] = q;
    r[dim + 2] = im - 1.0;
    r[dim + 3] = z[1];
    if !jac {
        return Ok((r, None));
    }
    let mut j = DMatrix::zeros(dim + 4, dim);
    let hess = dynamics::hessian_hamiltonian(v, z)?;
    j.view_mut((0, 0), (dim, dim)).copy_from(&hess);
    let c = v.total_l() / (2.0 * PI);
    let gi = dynamics::grad_i(v, z);
    for k in 0..dim {
        let g = v.gamma(k / 2);
        j[(k, k)] += c * g;
        if k % 2 == 0 {
            j[(dim, k)] = g;
        } else {
            j[(dim + 1, k)] = g;
        }
        j[(dim + 2, k)] = gi[k];
    }
    j[(dim + 3, 1)] = 1.0;
    Ok((r, Some(j)))
}

/// Newton solve for an NRE from `guess`, with the gauge `y₁ = 0, x₁ > 0`.
///
/// The guess is first centred, scaled to `I = 1` and rotated into the gauge.
/// Converges when the NRE residual and every constraint are within `tol`.
pub fn solve_nre(v: &VorticitySet, guess: &Configuration, tol: f64) -> Result<RelativeEquilibrium> {
    solve_nre_with(v, guess.coords(), tol, NRE_MAX_ITER)
}

pub(crate) fn solve_nre_with(
    v: &VorticitySet,
    guess: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<RelativeEquilibrium> {
    dynamics::check_dim(v, guess)?;
    dynamics::check_collision_free(guess)?;
    let z0 = to_gauge(&dynamics::normalised(v, guess)?);
    let dim = v.dim();
    let out = gauss_newton(
        &z0,
        |z, jac| augmented(v, z, jac),
        |_, r| norm2(r.rows(0, dim).as_slice()) <= tol && r.rows(dim, 4).amax() <= tol,
        &GnOptions {
            max_iter,
            rcond: 1e-13,
            max_step: 0.25,
        },
    )?;
    if !out.converged {
        return Err(VortexError::SolverFailed {
            iterations: out.iterations,
            residual: out.residual.norm(),
        });
    }
    let mut z = to_gauge(&out.x);
    z[1] = 0.0;
    RelativeEquilibrium::evaluate(v, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln2_4pi() -> f64 {
        2f64.ln() / (4.0 * PI)
    }

    /// Independent oracle for three identical collinear vortices at
    /// `x₁ < x₂ < x₃`: solve for the spacing ratio making `u_k / x_k` equal,
    /// with `u_k = Σ_j 1 / (x_k - x_j)` the velocity normal to the line.
    fn collinear_oracle() -> f64 {
        let rates = |s: f64| -> (f64, f64) {
            // x = (0, 1, 1 + s), then centred
            let c = (2.0 + s) / 3.0;
            let x = [-c, 1.0 - c, 1.0 + s - c];
            let u: Vec<f64> = (0..3)
                .map(|k| {
                    (0..3)
                        .filter(|&j| j != k)
                        .map(|j| 1.0 / (x[k] - x[j]))
                        .sum()
                })
                .collect();
            (u[0] / x[0], u[2] / x[2])
        };
        let f = |s: f64| {
            let (a, b) = rates(s);
            a - b
        };
        let (mut lo, mut hi) = (0.3, 2.7);
        assert!(f(lo) * f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let c = (2.0 + s) / 3.0;
        let x = [-c, 1.0 - c, 1.0 + s - c];
        let im: f64 = x.iter().map(|a| a * a).sum();
        let xs: Vec<f64> = x.iter().map(|a| a / im.sqrt()).collect();
        let mut acc = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                acc += ((xs[i] - xs[j]) * (xs[i] - xs[j])).ln();
            }
        }
        -acc / (4.0 * PI)
    }

    #[test]
    fn collinear_oracle_matches_closed_form() {
        // the symmetric spacing gives H = log 2 / (4π)
        let h = collinear_oracle();
        assert!((h - ln2_4pi()).abs() < 1e-14, "{h}");
        assert!((h - 0.055_158_9).abs() < 1e-7);
    }

    #[test]
    fn thomson_examples() {
        let t3 = thomson(3, 1.0).unwrap();
        assert!(t3.h_value.abs() < 1e-14);
        assert!((t3.omega + 3.0 / (2.0 * PI)).abs() < 1e-13);
        assert!(t3.residual < 1e-12);
        assert!((t3.min_dist_sq - 1.0).abs() < 1e-14);
        let t2 = thomson(2, 1.0).unwrap();
        assert!((t2.h_value + ln2_4pi()).abs() < 1e-15);
        assert!((t2.omega + 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert!((t2.config.point(0)[0] - 0.5f64.sqrt()).abs() < 1e-15);
        for n in 2..9 {
            let t = thomson(n, 0.7).unwrap();
            let v = VorticitySet::identical(n, 0.7).unwrap();
            let (p, q, i) = dynamics::moments(&v, t.config.coords()).unwrap();
            assert!(p.abs() < 1e-14 && q.abs() < 1e-14 && (i - 1.0).abs() < 1e-14);
            assert!(t.residual < 1e-12, "n={n}: {}", t.residual);
            assert!((t.omega + v.total_l() / (2.0 * PI)).abs() < 1e-12);
        }
        assert!(thomson(1, 1.0).is_err());
    }

    #[test]
    fn residual_is_positive_off_equilibria() {
        let v = VorticitySet::new(vec![1.0, 2.0, 0.5]).unwrap();
        let z = [0.3, -0.1, 0.9, 0.4, -1.2, 0.2];
        assert!(norm2(&nre_residual(&v, &z).unwrap()) > 1e-3);
    }

    #[test]
    fn solve_returns_to_triangle() {
        let v = VorticitySet::identical(3, 1.0).unwrap();
        let mut z = thomson(3, 1.0).unwrap().config.into_coords();
        let bump = [1e-3, -7e-4, 4e-4, 9e-4, -8e-4, 2e-4];
        z.iter_mut().zip(bump).for_each(|(a, b)| *a += b);
        let eq = solve_nre(&v, &Configuration::new(z).unwrap(), 1e-12).unwrap();
        assert!(eq.h_value.abs() < 1e-10);
        assert!(eq.residual <= 1e-12);
        assert!(eq.config.coords()[1] == 0.0 && eq.config.coords()[0] > 0.0);
        assert!((eq.omega + 3.0 / (2.0 * PI)).abs() < 1e-11);
    }

    #[test]
    fn solve_finds_collinear_level() {
        let v = VorticitySet::identical(3, 1.0).unwrap();
        let g = Configuration::from_points(&[[-0.8, 0.01], [0.05, -0.02], [0.7, 0.0]]);
        let eq = solve_nre(&v, &g, 1e-12).unwrap();
        assert!((eq.h_value - collinear_oracle()).abs() < 1e-10);
    }

    #[test]
    fn solve_rejects_collided_guess() {
        let v = VorticitySet::identical(3, 1.0).unwrap();
        let g = Configuration::from_points(&[[0.5, 0.0], [0.5, 1e-8], [-1.0, 0.0]]);
        assert!(matches!(
            solve_nre(&v, &g, 1e-10),
            Err(VortexError::Collision { .. })
        ));
    }

    #[test]
    fn solve_pair_with_unequal_vorticities() {
        let v = VorticitySet::new(vec![1.0, 3.0]).unwrap();
        let g = Configuration::from_points(&[[1.0, 0.3], [-0.2, 0.1]]);
        let eq = solve_nre(&v, &g, 1e-12).unwrap();
        assert!(eq.residual <= 1e-12);
        assert!((eq.omega + 3.0 / (2.0 * PI)).abs() < 1e-11);
    }
}
