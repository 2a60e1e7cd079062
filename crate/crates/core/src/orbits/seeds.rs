use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::IntegralValues;
use crate::error::Result;
use crate::flow::Flow;
use crate::linalg::complex_eigenpairs;

/// One oscillatory eigen-pair `re ± i im` of a linearised field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMode {
    pub re: f64,
    pub im: f64,
    /// `2π / im`.
    pub period: f64,
    /// Unit real part of the eigenvector, phased so its largest entry is real.
    pub direction: Vec<f64>,
}

/// Oscillatory modes of `f` linearised at `x`, least damped first.
pub fn linearised_modes<F: Flow + ?Sized>(f: &F, x: &[f64]) -> Result<Vec<LinearMode>> {
    let jac = f.jacobian(x)?;
    let scale = jac.amax().max(1e-300);
    let mut modes: Vec<LinearMode> = complex_eigenpairs(&jac)?
        .into_iter()
        .filter(|(lam, _)| lam.im > 1e-6 * scale)
        .map(|(lam, v)| {
            let (k, _) = v.iter().enumerate().fold((0, -1.0), |(bk, bn), (k, c)| {
                if c.norm() > bn {
                    (k, c.norm())
                } else {
                    (bk, bn)
                }
            });
            let phase: Complex<f64> = v[k].conj() / v[k].norm();
            let re: Vec<f64> = v.iter().map(|c| (c * phase).re).collect();
            let n = re.iter().map(|a| a * a).sum::<f64>().sqrt();
            LinearMode {
                re: lam.re,
                im: lam.im,
                period: std::f64::consts::TAU / lam.im,
                direction: re.into_iter().map(|a| a / n).collect(),
            }
        })
        .collect();
    modes.sort_by(|a, b| {
        a.re.abs()
            .total_cmp(&b.re.abs())
            .then(a.im.total_cmp(&b.im))
    });
    Ok(modes)
}

/// A flow seen from a frame turning with it at rate `ω`: `ẋ = X(x) - ω J x`.
/// Relative equilibria of `X` with rate `ω` are its fixed points.
pub struct CoRotating<'a, F: Flow + ?Sized> {
    pub base: &'a F,
    pub omega: f64,
}

impl<F: Flow + ?Sized> Flow for CoRotating<'_, F> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.base.eval(x, out)?;
        for (o, p) in out.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
            o[0] -= self.omega * p[1];
            o[1] += self.omega * p[0];
        }
        Ok(())
    }

    fn jacobian(&self, x: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let mut j = self.base.jacobian(x)?;
        for b in 0..x.len() / 2 {
            j[(2 * b, 2 * b + 1)] -= self.omega;
            j[(2 * b + 1, 2 * b)] += self.omega;
        }
        Ok(j)
    }

    fn integrals(&self, x: &[f64]) -> Result<IntegralValues> {
        self.base.integrals(x)
    }
}

/// Near-returns of a sampled distance-to-start signal: local minima after the
/// signal first exceeds a tenth of its maximum, refined by a parabola through
/// the squared distances, sorted by distance. Returns `(time, distance)`.
pub fn recurrence_candidates(times: &[f64], dist: &[f64], max_count: usize) -> Vec<(f64, f64)> {
    let n = dist.len().min(times.len());
    if n < 3 {
        return vec![];
    }
    let peak = dist[..n].iter().copied().fold(0.0, f64::max);
    let Some(start) = dist[..n].iter().position(|&d| d > 0.1 * peak) else {
        return vec![];
    };
    let mut out = vec![];
    for k in start.max(1)..n - 1 {
        if dist[k] <= dist[k - 1] && dist[k] < dist[k + 1] {
            let (d0, d1, d2) = (dist[k - 1].powi(2), dist[k].powi(2), dist[k + 1].powi(2));
            let (t0, t1, t2) = (times[k - 1], times[k], times[k + 1]);
            // vertex of the parabola through the three points
            let num = (t1 - t0).powi(2) * (d1 - d2) - (t1 - t2).powi(2) * (d1 - d0);
            let den = (t1 - t0) * (d1 - d2) - (t1 - t2) * (d1 - d0);
            let t = if den.abs() > 0.0 {
                (t1 - 0.5 * num / den).clamp(t0, t2)
            } else {
                t1
            };
            out.push((t, dist[k]));
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    out.truncate(max_count);
    out
}

/// `θ` minimising the weighted distance between `zt` and `e^{Jθ} z0`.
pub fn best_rotation(weights: &[f64], z0: &[f64], zt: &[f64]) -> f64 {
    let mut c = 0.0;
    let mut s = 0.0;
    for (k, &g) in weights.iter().enumerate() {
        let (x0, y0) = (z0[2 * k], z0[2 * k + 1]);
        let (xt, yt) = (zt[2 * k], zt[2 * k + 1]);
        c += g * (xt * x0 + yt * y0);
        s += g * (xt * y0 - yt * x0);
    }
    s.atan2(c)
}
