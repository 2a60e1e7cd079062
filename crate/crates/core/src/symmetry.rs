//! Cyclically symmetric systems: `M` rings of `N` identical vortices, each
//! ring the `C_N` orbit of one representative `w_l`, with
//! `z_{l,i} = e^{J 2π i/N} w_l` for `i = 0, ..., N-1`.
//!
//! The symmetric Hamiltonian is `H^sym = (1/N) H ∘ expand`, whose flow
//! `Γ_l ẇ_l = J ∇_{w_l} H^sym` reproduces the motion of the representatives
//! inside the full system.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, IntegralValues, VorticitySet};
use crate::error::{Result, VortexError};
use crate::flow::Flow;
use crate::integrators::Trajectory;
use crate::orbits::{
    rotating_residual, solve_rotating, sup, PeriodicOrbitResult, RotatingSystem, ShootingTolerances,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem")]
pub struct SymmetricSystem {
    /// Number of rings.
    pub m: usize,
    /// Order of the cyclic group.
    pub n_fold: usize,
    /// Vorticity shared by the vortices of each ring.
    pub group_gammas: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    m: Option<usize>,
    n_fold: usize,
    group_gammas: Vec<f64>,
}

impl TryFrom<RawSystem> for SymmetricSystem {
    type Error = VortexError;

    fn try_from(r: RawSystem) -> Result<Self> {
        let s = Self::new(r.n_fold, r.group_gammas)?;
        match r.m {
            Some(m) if m != s.m => Err(VortexError::InvalidParameter(format!(
                "m = {m} does not match {} group vorticities",
                s.m
            ))),
            _ => Ok(s),
        }
    }
}

impl SymmetricSystem {
    pub fn new(n_fold: usize, group_gammas: Vec<f64>) -> Result<Self> {
        if group_gammas.is_empty() {
            return Err(VortexError::InvalidVorticity(
                "need at least one ring".into(),
            ));
        }
        if n_fold < 2 {
            return Err(VortexError::InvalidParameter(format!(
                "n_fold must be >= 2, got {n_fold}"
            )));
        }
        if let Some(g) = group_gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(VortexError::InvalidVorticity(format!(
                "vorticity {g} is not strictly positive"
            )));
        }
        Ok(Self {
            m: group_gammas.len(),
            n_fold,
            group_gammas,
        })
    }

    /// Vorticities of the expanded system, ring by ring.
    pub fn full_vorticities(&self) -> VorticitySet {
        let g = self
            .group_gammas
            .iter()
            .flat_map(|&g| std::iter::repeat_n(g, self.n_fold))
            .collect();
        VorticitySet::new(g).expect("validated on construction")
    }

    /// `Σ Γ_l |w_l|²`; normalised representatives have `I(w) = 1/N`.
    pub fn impulse(&self, w: &[f64]) -> Result<f64> {
        self.check(w)?;
        Ok(dynamics::weighted_moments(&self.group_gammas, w).2)
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != 2 * self.m {
            return Err(VortexError::DimensionMismatch {
                expected: 2 * self.m,
                got: w.len(),
            });
        }
        Ok(())
    }
}

/// Representatives `w = (w_1, ..., w_M)`, one planar point per ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RepresentativeConfig {
    pub w: Vec<f64>,
}

/// The full configuration, ring-major: vortex `l N + i` is `e^{J 2π i/N} w_l`.
pub fn expand(s: &SymmetricSystem, w: &[f64]) -> Result<Vec<f64>> {
    s.check(w)?;
    let n = s.n_fold;
    let rings: Vec<Vec<f64>> = (0..n)
        .map(|i| dynamics::rotate(w, TAU * i as f64 / n as f64))
        .collect();
    let mut z = Vec::with_capacity(2 * s.m * n);
    for l in 0..s.m {
        for ring in &rings {
            z.extend_from_slice(&ring[2 * l..2 * l + 2]);
        }
    }
    Ok(z)
}

/// `(1/N) H(expand(w))`.
pub fn h_sym(s: &SymmetricSystem, w: &[f64]) -> Result<f64> {
    let z = expand(s, w)?;
    Ok(dynamics::hamiltonian(&s.full_vorticities(), &z)? / s.n_fold as f64)
}

/// `∇_w H^sym`; by equivariance `∇_{w_l} H^sym = ∇_{z_{l,0}} H(expand(w))`.
pub fn grad_h_sym(s: &SymmetricSystem, w: &[f64]) -> Result<Vec<f64>> {
    let z = expand(s, w)?;
    let g = dynamics::grad_hamiltonian(&s.full_vorticities(), &z)?;
    Ok(first_of_each_ring(s, &g))
}

fn first_of_each_ring(s: &SymmetricSystem, full: &[f64]) -> Vec<f64> {
    (0..s.m)
        .flat_map(|l| {
            let k = 2 * l * s.n_fold;
            [full[k], full[k + 1]]
        })
        .collect()
}

/// Largest `|z_{l,i+1} - e^{J 2π/N} z_{l,i}|` over the samples of a full
/// trajectory; zero for `C_N`-symmetric states.
pub fn check_cn_invariance(s: &SymmetricSystem, traj: &Trajectory) -> Result<f64> {
    traj.states
        .iter()
        .map(|z| cn_defect(s, z))
        .try_fold(0.0, |m: f64, d| Ok(m.max(d?)))
}

/// `C_N` defect of a single full configuration.
pub fn cn_defect(s: &SymmetricSystem, z: &[f64]) -> Result<f64> {
    let n = s.n_fold;
    if z.len() != 2 * s.m * n {
        return Err(VortexError::DimensionMismatch {
            expected: 2 * s.m * n,
            got: z.len(),
        });
    }
    let rz = dynamics::rotate(z, TAU / n as f64);
    let mut d: f64 = 0.0;
    for l in 0..s.m {
        for i in 0..n {
            let a = 2 * (l * n + (i + 1) % n);
            let b = 2 * (l * n + i);
            d = d.max((z[a] - rz[b]).hypot(z[a + 1] - rz[b + 1]));
        }
    }
    Ok(d)
}

/// The representative flow `Γ_l ẇ_l = J ∇_{w_l} H^sym`.
#[derive(Debug, Clone)]
pub struct SymFlow<'a> {
    pub system: &'a SymmetricSystem,
    full: VorticitySet,
}

impl<'a> SymFlow<'a> {
    pub fn new(system: &'a SymmetricSystem) -> Self {
        Self {
            system,
            full: system.full_vorticities(),
        }
    }
}

impl Flow for SymFlow<'_> {
    fn dim(&self) -> usize {
        2 * self.system.m
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let z = expand(self.system, x)?;
        let f = dynamics::vector_field(&self.full, &z)?;
        out.copy_from_slice(&first_of_each_ring(self.system, &f));
        Ok(())
    }

    /// `dẇ/dw = S · DX(expand(w)) · E`, with `S` selecting the first vortex of
    /// each ring and `E` the linear expansion map.
    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let s = self.system;
        let n = s.n_fold;
        let z = expand(s, x)?;
        let jf = dynamics::vector_field_jacobian(&self.full, &z)?;
        let m = s.m;
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        for l in 0..m {
            let row = 2 * l * n;
            for p in 0..m {
                for i in 0..n {
                    let (sn, cs) = (TAU * i as f64 / n as f64).sin_cos();
                    // block of e^{Jα} = [[c, s], [-s, c]]
                    let r = [[cs, sn], [-sn, cs]];
                    let col = 2 * (p * n + i);
                    for a in 0..2 {
                        for b in 0..2 {
                            out[(2 * l + a, 2 * p + b)] +=
                                jf[(row + a, col)] * r[0][b] + jf[(row + a, col + 1)] * r[1][b];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn integrals(&self, x: &[f64]) -> Result<IntegralValues> {
        let (p, q, i_moment) = dynamics::weighted_moments(&self.system.group_gammas, x);
        Ok(IntegralValues {
            p,
            q,
            i_moment,
            h: h_sym(self.system, x)?,
        })
    }
}

impl RotatingSystem for SymFlow<'_> {
    fn weights(&self) -> &[f64] {
        &self.system.group_gammas
    }

    fn energy(&self, z: &[f64]) -> Result<f64> {
        h_sym(self.system, z)
    }

    fn grad_energy(&self, z: &[f64]) -> Result<Vec<f64>> {
        grad_h_sym(self.system, z)
    }

    fn impulse_target(&self) -> f64 {
        1.0 / self.system.n_fold as f64
    }

    fn pins_centre(&self) -> bool {
        false
    }

    fn full_vorticities(&self) -> VorticitySet {
        self.full.clone()
    }

    fn full_configuration(&self, z: &[f64]) -> Result<Vec<f64>> {
        expand(self.system, z)
    }
}

/// Rotating-frame shooting problem on the representatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricProblem {
    pub system: SymmetricSystem,
    pub initial_state: Vec<f64>,
    pub period_guess: f64,
    pub rotation_guess: f64,
    /// Target value of `H^sym`.
    pub energy_target: Option<f64>,
    #[serde(default)]
    pub tolerances: ShootingTolerances,
}

/// Shoots on the representative system with `I(w) = 1/N`. Converged results
/// carry the expanded initial state and its rotating residual in the full
/// system.
pub fn solve_symmetric_rpo(p: &SymmetricProblem) -> Result<PeriodicOrbitResult> {
    if !(p.period_guess > 0.0 && p.period_guess.is_finite()) {
        return Err(VortexError::InvalidParameter(
            "period_guess must be positive".into(),
        ));
    }
    let flow = SymFlow::new(&p.system);
    let mut r = solve_rotating(
        &flow,
        &p.initial_state,
        p.period_guess,
        p.rotation_guess,
        p.energy_target,
        &p.tolerances,
    )?;
    if r.converged() {
        let z = expand(&p.system, &r.state0)?;
        let res = rotating_residual(
            &flow.full,
            &z,
            r.period,
            r.rotation_angle,
            &p.tolerances.integrator,
        )?;
        r.full_residual = Some(sup(&res));
        r.lifted_state0 = Some(z);
    }
    Ok(r)
}
