//! Autonomous vector fields the integrators can advance.

use nalgebra::DMatrix;

use crate::dynamics::{self, IntegralValues, VorticitySet};
use crate::error::Result;

/// An autonomous ODE `ẋ = F(x)` on a flat real state.
pub trait Flow: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// Jacobian of `F`; defaults to central differences.
    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        fd_jacobian(self, x)
    }

    /// First integrals monitored along trajectories of this flow.
    fn integrals(&self, x: &[f64]) -> Result<IntegralValues>;
}

pub(crate) fn fd_jacobian<F: Flow + ?Sized>(f: &F, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = f.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for c in 0..n {
        let h = 1e-6 * (1.0 + x[c].abs());
        xp[c] = x[c] + h;
        f.eval(&xp, &mut fp)?;
        xp[c] = x[c] - h;
        f.eval(&xp, &mut fm)?;
        xp[c] = x[c];
        for r in 0..n {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// The planar N-vortex equations of motion.
#[derive(Debug, Clone, Copy)]
pub struct VortexFlow<'a> {
    pub vorticities: &'a VorticitySet,
}

impl<'a> VortexFlow<'a> {
    pub fn new(vorticities: &'a VorticitySet) -> Self {
        Self { vorticities }
    }
}

impl Flow for VortexFlow<'_> {
    fn dim(&self) -> usize {
        self.vorticities.dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        dynamics::vector_field_into(self.vorticities, x, out)
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        dynamics::vector_field_jacobian(self.vorticities, x)
    }

    fn integrals(&self, x: &[f64]) -> Result<IntegralValues> {
        dynamics::first_integrals(self.vorticities, x)
    }
}
