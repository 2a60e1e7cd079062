//! Symplectic reduction: weighted rescale `Z_i = √Γ_i z_i`, a unitary
//! generalised-Jacobi transform `W = T Z` isolating the vorticity centre in
//! `W_N`, and an action-angle chart on the quotient by rotations.

mod chart;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Configuration, VorticitySet};
use crate::error::{Result, VortexError};

pub use chart::{
    chart_distance, from_chart, phi1_rate, project, reduced_chart_hamiltonian,
    reduced_vector_field, to_chart, ChartFlow, ChartPoint, CHART_SINGULAR_TOL,
};

/// `|W_N|` above which [`to_reduced`] rejects its input as not centred.
pub const CENTRE_TOL: f64 = 1e-10;

/// `Z_i = √Γ_i z_i`.
pub fn weighted_rescale(v: &VorticitySet, z: &Configuration) -> Result<Configuration> {
    dynamics::check_dim(v, z.coords())?;
    Configuration::new(
        z.coords()
            .iter()
            .enumerate()
            .map(|(k, c)| v.gamma(k / 2).sqrt() * c)
            .collect(),
    )
}

/// `z_i = Z_i / √Γ_i`.
pub fn weighted_unscale(v: &VorticitySet, big_z: &Configuration) -> Result<Configuration> {
    dynamics::check_dim(v, big_z.coords())?;
    Configuration::new(
        big_z
            .coords()
            .iter()
            .enumerate()
            .map(|(k, c)| c / v.gamma(k / 2).sqrt())
            .collect(),
    )
}

/// One merge of two clusters (0-based vortex indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// A binary clustering of the vortices, given as `N - 1` merges in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterTree {
    pub merges: Vec<Merge>,
}

impl ClusterTree {
    /// `((1,2),3), ...`: vortex `k` joins the cluster of the first `k - 1`.
    pub fn sequential(n: usize) -> Self {
        Self {
            merges: (1..n)
                .map(|k| Merge {
                    left: (0..k).collect(),
                    right: vec![k],
                })
                .collect(),
        }
    }

    /// The five-vortex pairing `(1,2), (3,4), ((1,2),5), ((1,2,5),(3,4))`.
    pub fn five_pairing() -> Self {
        let m = |l: &[usize], r: &[usize]| Merge {
            left: l.to_vec(),
            right: r.to_vec(),
        };
        Self {
            merges: vec![
                m(&[0], &[1]),
                m(&[2], &[3]),
                m(&[0, 1], &[4]),
                m(&[0, 1, 4], &[2, 3]),
            ],
        }
    }

    /// The sequential tree on the labels `shift, shift + 1, ...` taken mod `n`.
    pub fn cyclic(n: usize, shift: usize) -> Self {
        let lab = |k: usize| (k + shift) % n;
        Self {
            merges: (1..n)
                .map(|k| Merge {
                    left: (0..k).map(lab).collect(),
                    right: vec![lab(k)],
                })
                .collect(),
        }
    }

    /// Checks that each merge joins two disjoint existing clusters and that
    /// the last merge produces all `n` vortices.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(VortexError::InvalidParameter(format!("cluster tree: {m}")));
        if self.merges.len() + 1 != n {
            return bad(format!("need {} merges, got {}", n - 1, self.merges.len()));
        }
        let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (k, m) in self.merges.iter().enumerate() {
            let mut l = m.left.clone();
            let mut r = m.right.clone();
            l.sort_unstable();
            r.sort_unstable();
            let Some(li) = clusters.iter().position(|c| *c == l) else {
                return bad(format!(
                    "merge {k}: left side {:?} is not a cluster",
                    m.left
                ));
            };
            let Some(ri) = clusters.iter().position(|c| *c == r) else {
                return bad(format!(
                    "merge {k}: right side {:?} is not a cluster",
                    m.right
                ));
            };
            if li == ri {
                return bad(format!("merge {k} joins a cluster with itself"));
            }
            let mut joined = [l.as_slice(), r.as_slice()].concat();
            joined.sort_unstable();
            clusters.retain(|c| *c != l && *c != r);
            clusters.push(joined);
        }
        Ok(())
    }
}

/// The real `N x N` matrix `T`; it acts on every coordinate pair alike, so
/// `T ⊗ I₂` is orthogonal and symplectic on `ℝ^{2N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimTransform {
    pub n: usize,
    pub matrix: DMatrix<f64>,
    pub tree: ClusterTree,
    gammas: Vec<f64>,
}

/// [`build_lim_transform_with`] on the sequential tree.
pub fn build_lim_transform(v: &VorticitySet) -> LimTransform {
    build_lim_transform_with(v, &ClusterTree::sequential(v.n()))
        .expect("the sequential tree is valid")
}

/// Row `k` is `√(Γ_A Γ_B / (Γ_A + Γ_B)) (c_B - c_A)` for the `k`-th merge of
/// clusters `A` and `B`, where `c_A = Σ_{i∈A} √Γ_i Z_i / Γ_A`; the last row is
/// `(√Γ_1, ..., √Γ_N) / √ΣΓ`.
pub fn build_lim_transform_with(v: &VorticitySet, tree: &ClusterTree) -> Result<LimTransform> {
    let n = v.n();
    tree.validate(n)?;
    let g = v.gammas();
    let mut t = DMatrix::zeros(n, n);
    for (row, m) in tree.merges.iter().enumerate() {
        let ga: f64 = m.left.iter().map(|&i| g[i]).sum();
        let gb: f64 = m.right.iter().map(|&i| g[i]).sum();
        let s = (ga * gb / (ga + gb)).sqrt();
        for &i in &m.left {
            t[(row, i)] = -s * g[i].sqrt() / ga;
        }
        for &i in &m.right {
            t[(row, i)] = s * g[i].sqrt() / gb;
        }
    }
    let total = v.total_gamma().sqrt();
    for i in 0..n {
        t[(n - 1, i)] = g[i].sqrt() / total;
    }
    Ok(LimTransform {
        n,
        matrix: t,
        tree: tree.clone(),
        gammas: g.to_vec(),
    })
}

impl LimTransform {
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `max |TᵀT - Id|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.transpose() * &self.matrix - DMatrix::identity(self.n, self.n);
        d.amax()
    }

    /// The real `2N x 2N` form `T ⊗ I₂`.
    pub fn real_form(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                m[(2 * r, 2 * c)] = self.matrix[(r, c)];
                m[(2 * r + 1, 2 * c + 1)] = self.matrix[(r, c)];
            }
        }
        m
    }

    /// `max |MᵀJM - J|` for the real form `M` and the block symplectic `J`.
    pub fn symplectic_defect(&self) -> f64 {
        let n = self.n;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            j[(2 * k, 2 * k + 1)] = 1.0;
            j[(2 * k + 1, 2 * k)] = -1.0;
        }
        let m = self.real_form();
        (m.transpose() * &j * &m - j).amax()
    }

    /// `T` applied to each coordinate pair.
    pub(crate) fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.n];
        for r in 0..self.n {
            let (mut x, mut y) = (0.0, 0.0);
            for c in 0..self.n {
                let a = self.matrix[(r, c)];
                x += a * z[2 * c];
                y += a * z[2 * c + 1];
            }
            out[2 * r] = x;
            out[2 * r + 1] = y;
        }
        out
    }

    /// `Tᵀ` applied to each coordinate pair.
    pub(crate) fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.n];
        for c in 0..self.n {
            let (mut x, mut y) = (0.0, 0.0);
            for r in 0..self.n {
                let a = self.matrix[(r, c)];
                x += a * w[2 * r];
                y += a * w[2 * r + 1];
            }
            out[2 * c] = x;
            out[2 * c + 1] = y;
        }
        out
    }
}

/// The blocks `W_1, ..., W_{N-1}` of a centred configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReducedState {
    pub w: Vec<f64>,
}

impl ReducedState {
    pub fn new(w: Vec<f64>) -> Self {
        Self { w }
    }

    /// `Ī = Σ |W_j|²`.
    pub fn i_bar(&self) -> f64 {
        self.w.iter().map(|c| c * c).sum()
    }

    /// Applies `e^{Jθ}` to every block.
    pub fn rotated(&self, theta: f64) -> Self {
        Self::new(dynamics::rotate(&self.w, theta))
    }
}

/// `W = T Z` with `W_N` checked against [`CENTRE_TOL`] and dropped.
pub fn to_reduced(t: &LimTransform, big_z: &Configuration) -> Result<ReducedState> {
    if big_z.coords().len() != 2 * t.n {
        return Err(VortexError::DimensionMismatch {
            expected: 2 * t.n,
            got: big_z.coords().len(),
        });
    }
    let mut w = t.apply(big_z.coords());
    let (wx, wy) = (w[2 * t.n - 2], w[2 * t.n - 1]);
    let m = wx.hypot(wy);
    if !(m <= CENTRE_TOL) {
        return Err(VortexError::NotCentred(m));
    }
    w.truncate(2 * t.n - 2);
    Ok(ReducedState::new(w))
}

/// Appends `W_N = 0`, applies `Tᵀ` and undoes the weighted rescale.
pub fn from_reduced(t: &LimTransform, w: &ReducedState) -> Result<Configuration> {
    if w.w.len() != 2 * t.n - 2 {
        return Err(VortexError::DimensionMismatch {
            expected: 2 * t.n - 2,
            got: w.w.len(),
        });
    }
    let mut full = w.w.clone();
    full.extend([0.0, 0.0]);
    let big_z = t.apply_transpose(&full);
    Configuration::new(
        big_z
            .iter()
            .enumerate()
            .map(|(k, c)| c / t.gammas[k / 2].sqrt())
            .collect(),
    )
}

/// Reduced state of a centred physical configuration.
pub fn reduce(t: &LimTransform, v: &VorticitySet, z: &Configuration) -> Result<ReducedState> {
    to_reduced(t, &weighted_rescale(v, z)?)
}

/// `H̄(w) = H(from_reduced(w))`.
pub fn reduced_hamiltonian(t: &LimTransform, v: &VorticitySet, w: &ReducedState) -> Result<f64> {
    dynamics::hamiltonian(v, from_reduced(t, w)?.coords())
}

/// `∇_w H̄ = [T Γ^{-1/2} ∇_z H]` restricted to the first `N - 1` blocks.
pub fn grad_reduced_hamiltonian(
    t: &LimTransform,
    v: &VorticitySet,
    w: &ReducedState,
) -> Result<Vec<f64>> {
    let z = from_reduced(t, w)?;
    let gh = dynamics::grad_hamiltonian(v, z.coords())?;
    let scaled: Vec<f64> = gh
        .iter()
        .enumerate()
        .map(|(k, g)| g / t.gammas[k / 2].sqrt())
        .collect();
    let mut out = t.apply(&scaled);
    out.truncate(2 * t.n - 2);
    Ok(out)
}

/// The reduced equations of motion `Ẇ = J ∇_W H̄`.
pub fn reduced_flow_field(
    t: &LimTransform,
    v: &VorticitySet,
    w: &ReducedState,
) -> Result<Vec<f64>> {
    let g = grad_reduced_hamiltonian(t, v, w)?;
    Ok(g.chunks_exact(2).flat_map(|p| [p[1], -p[0]]).collect())
}
