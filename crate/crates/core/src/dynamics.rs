//! The N-vortex Hamiltonian, its derivatives, the equations of motion and
//! the classical first integrals.
//!
//! Configurations are flat slices laid out as `(x_1, y_1, ..., x_N, y_N)`.
//! The symplectic matrix acting on each planar block is `J = [[0, 1], [-1, 0]]`,
//! so the equations of motion read `Γ_i ż_i = J ∇_{z_i} H`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VortexError};

/// Squared pair distance at or below which a configuration counts as collided.
pub const COLLISION_TOL: f64 = 1e-14;

/// Positive vorticities of the N vortices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct VorticitySet {
    gammas: Vec<f64>,
}

impl VorticitySet {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.len() < 2 {
            return Err(VortexError::InvalidVorticity(format!(
                "need at least 2 vortices, got {}",
                gammas.len()
            )));
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(VortexError::InvalidVorticity(format!(
                "vorticity {g} is not strictly positive"
            )));
        }
        Ok(Self { gammas })
    }

    /// `n` vortices of equal strength `gamma`.
    pub fn identical(n: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; n])
    }

    pub fn n(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn gamma(&self, i: usize) -> f64 {
        self.gammas[i]
    }

    pub fn total_gamma(&self) -> f64 {
        self.gammas.iter().sum()
    }

    /// `L = Σ_{i<j} Γ_i Γ_j`.
    pub fn total_l(&self) -> f64 {
        let mut l = 0.0;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                l += self.gammas[i] * self.gammas[j];
            }
        }
        l
    }

    /// `L_V` restricted to the index subset `subset` (duplicates ignored).
    pub fn total_l_subset(&self, subset: &[usize]) -> Result<f64> {
        let mut idx: Vec<usize> = subset.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n()) {
            return Err(VortexError::InvalidParameter(format!(
                "vortex index {bad} out of range"
            )));
        }
        let mut l = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                l += self.gammas[i] * self.gammas[j];
            }
        }
        Ok(l)
    }

    pub fn dim(&self) -> usize {
        2 * self.n()
    }
}

impl TryFrom<Vec<f64>> for VorticitySet {
    type Error = VortexError;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<VorticitySet> for Vec<f64> {
    fn from(v: VorticitySet) -> Self {
        v.gammas
    }
}

/// Planar positions of N vortices, interleaved `(x_1, y_1, ..., x_N, y_N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    coords: Vec<f64>,
}

impl Configuration {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() % 2 != 0 || coords.len() < 2 {
            return Err(VortexError::InvalidParameter(format!(
                "coordinate vector of length {} is not a list of planar points",
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    pub fn from_points(points: &[[f64; 2]]) -> Self {
        Self {
            coords: points.iter().flat_map(|p| [p[0], p[1]]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.coords[2 * i], self.coords[2 * i + 1]]
    }

    pub fn check(&self, v: &VorticitySet) -> Result<()> {
        check_dim(v, &self.coords)
    }
}

impl AsRef<[f64]> for Configuration {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// Values of the first integrals at one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralValues {
    pub p: f64,
    pub q: f64,
    pub i_moment: f64,
    pub h: f64,
}

pub(crate) fn check_dim(v: &VorticitySet, z: &[f64]) -> Result<()> {
    if z.len() != v.dim() {
        return Err(VortexError::DimensionMismatch {
            expected: v.dim(),
            got: z.len(),
        });
    }
    Ok(())
}

#[inline]
fn pair(z: &[f64], i: usize, j: usize) -> (f64, f64, f64) {
    let dx = z[2 * i] - z[2 * j];
    let dy = z[2 * i + 1] - z[2 * j + 1];
    (dx, dy, dx * dx + dy * dy)
}

/// Fails with a collision error if some pair is closer than [`COLLISION_TOL`].
pub fn check_collision_free(z: &[f64]) -> Result<()> {
    let n = z.len() / 2;
    for i in 0..n {
        for j in i + 1..n {
            let (_, _, s) = pair(z, i, j);
            if !(s > COLLISION_TOL) {
                return Err(VortexError::Collision { i, j, dist_sq: s });
            }
        }
    }
    Ok(())
}

/// `H(z) = -(1/4π) Σ_{i<j} Γ_i Γ_j log |z_i - z_j|²`.
pub fn hamiltonian(v: &VorticitySet, z: &[f64]) -> Result<f64> {
    check_dim(v, z)?;
    let g = v.gammas();
    let mut acc = 0.0;
    for i in 0..v.n() {
        for j in i + 1..v.n() {
            let (_, _, s) = pair(z, i, j);
            if !(s > COLLISION_TOL) {
                return Err(VortexError::Collision { i, j, dist_sq: s });
            }
            acc += g[i] * g[j] * s.ln();
        }
    }
    Ok(-acc / (4.0 * PI))
}

/// Analytic gradient of [`hamiltonian`].
pub fn grad_hamiltonian(v: &VorticitySet, z: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; z.len()];
    grad_hamiltonian_into(v, z, &mut out)?;
    Ok(out)
}

pub fn grad_hamiltonian_into(v: &VorticitySet, z: &[f64], out: &mut [f64]) -> Result<()> {
    check_dim(v, z)?;
    let g = v.gammas();
    out.iter_mut().for_each(|o| *o = 0.0);
    let c = -1.0 / (2.0 * PI);
    for i in 0..v.n() {
        for j in i + 1..v.n() {
            let (dx, dy, s) = pair(z, i, j);
            if !(s > COLLISION_TOL) {
                return Err(VortexError::Collision { i, j, dist_sq: s });
            }
            let w = c * g[i] * g[j] / s;
            out[2 * i] += w * dx;
            out[2 * i + 1] += w * dy;
            out[2 * j] -= w * dx;
            out[2 * j + 1] -= w * dy;
        }
    }
    Ok(())
}

/// Analytic Hessian of [`hamiltonian`] as a dense `2N x 2N` matrix.
pub fn hessian_hamiltonian(v: &VorticitySet, z: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(v, z)?;
    let dim = v.dim();
    let g = v.gammas();
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..v.n() {
        for j in i + 1..v.n() {
            let (dx, dy, s) = pair(z, i, j);
            if !(s > COLLISION_TOL) {
                return Err(VortexError::Collision { i, j, dist_sq: s });
            }
            // d/dz_i of d/|d|^2 = (I |d|^2 - 2 d d^T) / |d|^4
            let c = -g[i] * g[j] / (2.0 * PI);
            let s2 = s * s;
            let b = [
                [c * (s - 2.0 * dx * dx) / s2, c * (-2.0 * dx * dy) / s2],
                [c * (-2.0 * dx * dy) / s2, c * (s - 2.0 * dy * dy) / s2],
            ];
            for a in 0..2 {
                for bb in 0..2 {
                    h[(2 * i + a, 2 * i + bb)] += b[a][bb];
                    h[(2 * j + a, 2 * j + bb)] += b[a][bb];
                    h[(2 * i + a, 2 * j + bb)] -= b[a][bb];
                    h[(2 * j + a, 2 * i + bb)] -= b[a][bb];
                }
            }
        }
    }
    Ok(h)
}

/// Solves `Γ_i ż_i = J ∇_{z_i} H` for `ż`.
pub fn vector_field(v: &VorticitySet, z: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; z.len()];
    vector_field_into(v, z, &mut out)?;
    Ok(out)
}

pub fn vector_field_into(v: &VorticitySet, z: &[f64], out: &mut [f64]) -> Result<()> {
    grad_hamiltonian_into(v, z, out)?;
    for (i, &g) in v.gammas().iter().enumerate() {
        let hx = out[2 * i];
        let hy = out[2 * i + 1];
        out[2 * i] = hy / g;
        out[2 * i + 1] = -hx / g;
    }
    Ok(())
}

/// Jacobian of [`vector_field`]: `Γ⁻¹ J_N ∇²H`.
pub fn vector_field_jacobian(v: &VorticitySet, z: &[f64]) -> Result<DMatrix<f64>> {
    let h = hessian_hamiltonian(v, z)?;
    Ok(apply_symplectic_rows(v.gammas(), &h))
}

/// Left-multiplies a `2N x k` matrix by `Γ⁻¹ J_N`.
pub(crate) fn apply_symplectic_rows(gammas: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, &g) in gammas.iter().enumerate() {
        for c in 0..m.ncols() {
            out[(2 * i, c)] = m[(2 * i + 1, c)] / g;
            out[(2 * i + 1, c)] = -m[(2 * i, c)] / g;
        }
    }
    out
}

/// `(P, Q, I)` of a configuration; defined everywhere.
pub fn moments(v: &VorticitySet, z: &[f64]) -> Result<(f64, f64, f64)> {
    check_dim(v, z)?;
    Ok(weighted_moments(v.gammas(), z))
}

pub(crate) fn weighted_moments(weights: &[f64], z: &[f64]) -> (f64, f64, f64) {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut im = 0.0;
    for (k, &g) in weights.iter().enumerate() {
        let (x, y) = (z[2 * k], z[2 * k + 1]);
        p += g * x;
        q += g * y;
        im += g * (x * x + y * y);
    }
    (p, q, im)
}

pub fn first_integrals(v: &VorticitySet, z: &[f64]) -> Result<IntegralValues> {
    let (p, q, i_moment) = moments(v, z)?;
    let h = hamiltonian(v, z)?;
    Ok(IntegralValues { p, q, i_moment, h })
}

pub fn grad_p(v: &VorticitySet) -> Vec<f64> {
    v.gammas().iter().flat_map(|&g| [g, 0.0]).collect()
}

pub fn grad_q(v: &VorticitySet) -> Vec<f64> {
    v.gammas().iter().flat_map(|&g| [0.0, g]).collect()
}

pub fn grad_i(v: &VorticitySet, z: &[f64]) -> Vec<f64> {
    z.iter()
        .enumerate()
        .map(|(k, &c)| 2.0 * v.gamma(k / 2) * c)
        .collect()
}

/// `{f, g} = Σ (1/Γ_i)(∂f/∂y_i ∂g/∂x_i - ∂f/∂x_i ∂g/∂y_i)` from the two gradients.
///
/// With this sign convention `df/dt = {H, f}` along the flow.
pub fn poisson_bracket(v: &VorticitySet, grad_f: &[f64], grad_g: &[f64]) -> Result<f64> {
    check_dim(v, grad_f)?;
    check_dim(v, grad_g)?;
    Ok(v.gammas()
        .iter()
        .enumerate()
        .map(|(i, g)| (grad_f[2 * i + 1] * grad_g[2 * i] - grad_f[2 * i] * grad_g[2 * i + 1]) / g)
        .sum())
}

/// Minimum squared pairwise distance, `inf_{i<j} |z_i - z_j|²`.
pub fn min_mutual_distance(z: &[f64]) -> f64 {
    let n = z.len() / 2;
    let mut m = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            m = m.min(pair(z, i, j).2);
        }
    }
    m
}

/// Applies `e^{Jθ}` to every planar block.
///
/// `e^{Jθ} = [[cos θ, sin θ], [-sin θ, cos θ]]`, so a positive angle turns
/// clockwise. A relative equilibrium with angular velocity `ω` satisfies
/// `z(t) = rotate(z(0), ω t)`.
pub fn rotate(z: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    z.chunks_exact(2)
        .flat_map(|p| [c * p[0] + s * p[1], -s * p[0] + c * p[1]])
        .collect()
}

/// Shifts the configuration so its vorticity centre is the origin.
pub fn centred(v: &VorticitySet, z: &[f64]) -> Result<Vec<f64>> {
    let (p, q, _) = moments(v, z)?;
    let tg = v.total_gamma();
    let (cx, cy) = (p / tg, q / tg);
    Ok(z.chunks_exact(2)
        .flat_map(|c| [c[0] - cx, c[1] - cy])
        .collect())
}

/// Centres the configuration and rescales it radially to `I = 1`.
pub fn normalised(v: &VorticitySet, z: &[f64]) -> Result<Vec<f64>> {
    let mut c = centred(v, z)?;
    let (_, _, im) = moments(v, &c)?;
    if !(im > 0.0) {
        return Err(VortexError::InvalidParameter(
            "cannot normalise a configuration with I = 0".into(),
        ));
    }
    let s = im.sqrt().recip();
    c.iter_mut().for_each(|x| *x *= s);
    Ok(c)
}
