//! Relative periodic orbits: shooting in a rotating frame on the full
//! space, fixed-period shooting on the reduced chart, and classification of
//! converged orbits as relative equilibria or non-trivial orbits (NTNRPOs).
//!
//! A normalised orbit is relatively periodic when `z(T) = e^{Jθ} z(0)`.

mod diameter;
mod scan;
mod seeds;
mod shooting;

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, VorticitySet};
use crate::error::{Result, VortexError};
use crate::flow::{Flow, VortexFlow};
use crate::integrators::{flow_map, IntegratorConfig};
use crate::reduction::ClusterTree;

pub use diameter::{reduced_diameter, reduced_representative};
pub use scan::{level_scan, LevelReport, ScanOptions};
pub use seeds::{best_rotation, linearised_modes, recurrence_candidates, CoRotating, LinearMode};
pub use shooting::{lift_chart_orbit, solve_chart, solve_rotating};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShootingMode {
    RotatingFrame,
    ReducedChart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    RelativeEquilibrium,
    Ntnrpo,
    Unconverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingTolerances {
    /// Sup-norm bound on the shooting residual and the phase conditions.
    pub residual: f64,
    pub max_iter: usize,
    /// Reduced diameter at or below which an orbit is a relative equilibrium.
    pub fp_tol: f64,
    pub integrator: IntegratorConfig,
    /// Samples per period used for the reduced diameter.
    pub diameter_samples: usize,
}

impl Default for ShootingTolerances {
    fn default() -> Self {
        Self {
            residual: 1e-9,
            max_iter: 40,
            fp_tol: 1e-6,
            integrator: IntegratorConfig::adaptive(1e-12, 1e-14),
            diameter_samples: 128,
        }
    }
}

/// A shooting problem. In rotating-frame mode `initial_state` is a
/// configuration; in reduced-chart mode it is the flat chart vector of
/// [`ChartPoint::to_vec`](crate::reduction::ChartPoint::to_vec) for the
/// transform built on `tree` (sequential when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingProblem {
    pub mode: ShootingMode,
    pub vorticities: VorticitySet,
    pub initial_state: Vec<f64>,
    pub period_guess: f64,
    /// Rotation angle guess, rotating-frame mode only.
    pub rotation_guess: f64,
    pub energy_target: Option<f64>,
    #[serde(default)]
    pub tolerances: ShootingTolerances,
    #[serde(default)]
    pub tree: Option<ClusterTree>,
}

impl ShootingProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_guess > 0.0 && self.period_guess.is_finite()) {
            return Err(VortexError::InvalidParameter(
                "period_guess must be positive".into(),
            ));
        }
        if !self.rotation_guess.is_finite() {
            return Err(VortexError::InvalidParameter(
                "rotation_guess must be finite".into(),
            ));
        }
        self.tolerances.integrator.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitResult {
    pub mode: ShootingMode,
    /// Configuration (rotating frame) or flat chart point (reduced chart).
    pub state0: Vec<f64>,
    pub period: f64,
    /// `θ` in `z(T) = e^{Jθ} z(0)`, in `(-π, π]`.
    pub rotation_angle: f64,
    /// Newton residual, floored by the change seen when re-integrating
    /// with ten times tighter tolerances.
    pub residual: f64,
    /// Rotating or chart residual from the tighter re-integration.
    pub verified_residual: f64,
    pub h_value: f64,
    pub classification: Classification,
    pub reduced_diameter: f64,
    pub iterations: usize,
    /// Numerical rank of the last Gauss-Newton Jacobian.
    pub jacobian_rank: usize,
    /// Full configuration at `t = 0` for chart and symmetric solves.
    pub lifted_state0: Option<Vec<f64>>,
    /// Full-space rotating residual of `lifted_state0`.
    pub full_residual: Option<f64>,
    pub tree: Option<ClusterTree>,
}

impl PeriodicOrbitResult {
    pub fn converged(&self) -> bool {
        self.classification != Classification::Unconverged
    }
}

/// A planar system equivariant under `z ↦ e^{Jθ} z`, on which rotating-frame
/// shooting runs.
pub trait RotatingSystem: Flow {
    /// Weights `Γ` of the angular impulse `Σ Γ_k |z_k|²`.
    fn weights(&self) -> &[f64];

    fn energy(&self, z: &[f64]) -> Result<f64>;

    fn grad_energy(&self, z: &[f64]) -> Result<Vec<f64>>;

    /// Value of the angular impulse on normalised states.
    fn impulse_target(&self) -> f64;

    /// Whether `P = Q = 0` is imposed.
    fn pins_centre(&self) -> bool;

    /// The vortex problem in which reduced diameters are measured.
    fn full_vorticities(&self) -> VorticitySet;

    fn full_configuration(&self, z: &[f64]) -> Result<Vec<f64>>;
}

impl RotatingSystem for VortexFlow<'_> {
    fn weights(&self) -> &[f64] {
        self.vorticities.gammas()
    }

    fn energy(&self, z: &[f64]) -> Result<f64> {
        dynamics::hamiltonian(self.vorticities, z)
    }

    fn grad_energy(&self, z: &[f64]) -> Result<Vec<f64>> {
        dynamics::grad_hamiltonian(self.vorticities, z)
    }

    fn impulse_target(&self) -> f64 {
        1.0
    }

    fn pins_centre(&self) -> bool {
        true
    }

    fn full_vorticities(&self) -> VorticitySet {
        self.vorticities.clone()
    }

    fn full_configuration(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(z.to_vec())
    }
}

/// `e^{-Jθ} z(T) - z(0)` for the N-vortex flow.
pub fn rotating_residual(
    v: &VorticitySet,
    z0: &[f64],
    period: f64,
    theta: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    rotating_residual_of(&VortexFlow::new(v), z0, period, theta, cfg)
}

pub(crate) fn rotating_residual_of<F: Flow + ?Sized>(
    f: &F,
    z0: &[f64],
    period: f64,
    theta: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    if !(period > 0.0) {
        return Err(VortexError::InvalidParameter(
            "period must be positive".into(),
        ));
    }
    let zt = flow_map(f, z0, period, cfg)?;
    Ok(dynamics::rotate(&zt, -theta)
        .iter()
        .zip(z0)
        .map(|(a, b)| a - b)
        .collect())
}

/// Inclusive threshold rule on the reduced diameter.
pub fn classify(r: &PeriodicOrbitResult, fp_tol: f64) -> Classification {
    if r.classification == Classification::Unconverged {
        Classification::Unconverged
    } else if r.reduced_diameter <= fp_tol {
        Classification::RelativeEquilibrium
    } else {
        Classification::Ntnrpo
    }
}

/// Dispatches on the problem mode. Reduced-chart problems that hit the chart
/// boundary are retried on cyclically relabelled clustering trees.
pub fn solve_rpo(p: &ShootingProblem) -> Result<PeriodicOrbitResult> {
    p.validate()?;
    match p.mode {
        ShootingMode::RotatingFrame => solve_rotating(
            &VortexFlow::new(&p.vorticities),
            &p.initial_state,
            p.period_guess,
            p.rotation_guess,
            p.energy_target,
            &p.tolerances,
        ),
        ShootingMode::ReducedChart => shooting::solve_chart_with_retry(p),
    }
}

pub fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Representative of `a` in `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}
