//! JSON run configurations. Every record rejects unknown keys and is
//! validated before any computation starts.

use serde::Deserialize;

use nvortex::integrators::IntegratorConfig;
use nvortex::orbits::{ScanOptions, ShootingMode, ShootingTolerances};
use nvortex::reduction::ClusterTree;
use nvortex::symmetry::SymmetricSystem;
use nvortex::VorticitySet;

use crate::CliError;

/// Initial configuration of a run.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    /// Explicit vortex positions.
    Explicit { positions: Vec<[f64; 2]> },
    /// Regular polygon of identical vortices.
    Thomson {},
    /// Gaussian positions drawn from the run seed.
    Random {},
}

/// Clustering tree of the reduction.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeSpec {
    #[default]
    Sequential,
    /// The five-vortex pairing `((1,2),5),(3,4)`.
    FivePairing,
    Cyclic {
        shift: usize,
    },
    Merges(ClusterTree),
}

impl TreeSpec {
    pub fn build(&self, n: usize) -> Result<ClusterTree, CliError> {
        let tree = match self {
            TreeSpec::Sequential => ClusterTree::sequential(n),
            TreeSpec::FivePairing => ClusterTree::five_pairing(),
            TreeSpec::Cyclic { shift } => ClusterTree::cyclic(n, shift % n),
            TreeSpec::Merges(t) => t.clone(),
        };
        tree.validate(n).map_err(CliError::config)?;
        Ok(tree)
    }
}

fn default_true() -> bool {
    true
}

fn default_nre_tol() -> f64 {
    1e-12
}

fn default_cluster_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub vorticities: Vec<f64>,
    pub initial: Initial,
    /// Centre and rescale the initial data to `I = 1`.
    #[serde(default = "default_true")]
    pub normalise: bool,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriaConfig {
    pub vorticities: Vec<f64>,
    pub guesses: Vec<Initial>,
    #[serde(default = "default_nre_tol")]
    pub tol: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusConfig {
    pub vorticities: Vec<f64>,
    pub n_starts: usize,
    #[serde(default = "default_nre_tol")]
    pub tol: f64,
    #[serde(default = "default_cluster_tol")]
    pub cluster_tol: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceConfig {
    pub vorticities: Vec<f64>,
    #[serde(default)]
    pub tree: TreeSpec,
    /// Configurations for the round-trip report; each is centred and
    /// normalised first.
    #[serde(default)]
    pub configurations: Vec<Vec<[f64; 2]>>,
}

/// Starting data of an orbit solve.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrbitStart {
    /// Flat chart vector (reduced chart) or configuration (rotating frame).
    State { state: Vec<f64> },
    /// Vortex positions, projected to the chart in reduced-chart mode.
    Configuration { positions: Vec<[f64; 2]> },
    /// The Thomson polygon itself.
    Equilibrium {},
    /// The Thomson polygon displaced along each of its oscillatory modes,
    /// with the linearised period as guess.
    PerturbedEquilibrium {
        amplitude: f64,
        #[serde(default)]
        max_modes: Option<usize>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSolveConfig {
    pub vorticities: Vec<f64>,
    pub mode: ShootingMode,
    pub start: OrbitStart,
    pub period_guess: Option<f64>,
    pub rotation_guess: Option<f64>,
    pub energy_target: Option<f64>,
    #[serde(default)]
    pub tolerances: ShootingTolerances,
    #[serde(default)]
    pub tree: TreeSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitScanConfig {
    pub vorticities: Vec<f64>,
    pub levels: Vec<f64>,
    pub starts_per_level: usize,
    #[serde(default)]
    pub options: ScanOptions,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum OrbitConfig {
    Solve(OrbitSolveConfig),
    Scan(OrbitScanConfig),
}

/// Starting data of a symmetric solve, in representative coordinates.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymStart {
    Representatives {
        w: Vec<f64>,
    },
    /// A relative equilibrium `w` of the symmetric system displaced along
    /// each of its oscillatory modes in the co-rotating frame.
    PerturbedEquilibrium {
        w: Vec<f64>,
        amplitude: f64,
        #[serde(default)]
        max_modes: Option<usize>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymConfig {
    pub system: SymmetricSystem,
    pub start: SymStart,
    pub period_guess: Option<f64>,
    pub rotation_guess: Option<f64>,
    pub energy_target: Option<f64>,
    #[serde(default)]
    pub tolerances: ShootingTolerances,
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
}

pub fn vorticities(g: &[f64]) -> Result<VorticitySet, CliError> {
    VorticitySet::new(g.to_vec()).map_err(CliError::config)
}

pub fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} must be positive and finite"
        )))
    }
}

pub fn optional_positive(name: &str, x: Option<f64>) -> Result<(), CliError> {
    x.map_or(Ok(()), |x| positive(name, x))
}

pub fn finite(name: &str, x: Option<f64>) -> Result<(), CliError> {
    match x {
        Some(x) if !x.is_finite() => Err(CliError::Config(format!("{name} must be finite"))),
        _ => Ok(()),
    }
}

pub fn check_positions(v: &VorticitySet, positions: &[[f64; 2]]) -> Result<(), CliError> {
    if positions.len() != v.n() {
        return Err(CliError::Config(format!(
            "expected {} positions, got {}",
            v.n(),
            positions.len()
        )));
    }
    if positions.iter().flatten().any(|c| !c.is_finite()) {
        return Err(CliError::Config("positions must be finite".into()));
    }
    Ok(())
}

pub fn check_initial(v: &VorticitySet, init: &Initial) -> Result<(), CliError> {
    match init {
        Initial::Explicit { positions } => check_positions(v, positions),
        Initial::Thomson {} => {
            let g0 = v.gamma(0);
            if v.gammas().iter().any(|g| *g != g0) {
                return Err(CliError::Config(
                    "thomson initial data needs identical vorticities".into(),
                ));
            }
            Ok(())
        }
        Initial::Random {} => Ok(()),
    }
}

pub fn check_integrator(cfg: &IntegratorConfig) -> Result<(), CliError> {
    cfg.validate().map_err(CliError::config)
}

pub fn check_tolerances(t: &ShootingTolerances) -> Result<(), CliError> {
    positive("tolerances.residual", t.residual)?;
    positive("tolerances.fp_tol", t.fp_tol)?;
    if t.max_iter == 0 || t.diameter_samples < 2 {
        return Err(CliError::Config(
            "tolerances.max_iter must be >= 1 and diameter_samples >= 2".into(),
        ));
    }
    check_integrator(&t.integrator)
}
