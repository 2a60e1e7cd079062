use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VortexError};

/// Minimum-norm least-squares solution of `a x = b`, discarding singular
/// values below `rcond * s_max`. Returns the solution and the numerical rank.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> (DVector<f64>, usize) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = rcond * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
    let x = svd
        .solve(b, cut.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    (x, rank)
}

pub(crate) struct GnOptions {
    pub max_iter: usize,
    pub rcond: f64,
    /// Largest allowed step, in the max-norm.
    pub max_step: f64,
}

impl Default for GnOptions {
    fn default() -> Self {
        Self {
            max_iter: 60,
            rcond: 1e-12,
            max_step: f64::INFINITY,
        }
    }
}

pub(crate) struct GnOutcome {
    pub x: Vec<f64>,
    pub residual: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rank: usize,
}

/// Damped Gauss–Newton with backtracking on `|F|²` and a Levenberg–Marquardt
/// fallback when no Gauss–Newton step decreases the merit.
///
/// `eval` returns the residual and its Jacobian; an `Err` at a trial point
/// (a collision, typically) rejects that point. `done` decides convergence.
pub(crate) fn gauss_newton<E, D>(
    x0: &[f64],
    mut eval: E,
    done: D,
    opts: &GnOptions,
) -> Result<GnOutcome>
where
    E: FnMut(&[f64], bool) -> Result<(DVector<f64>, Option<DMatrix<f64>>)>,
    D: Fn(&[f64], &DVector<f64>) -> bool,
{
    let mut x = x0.to_vec();
    let (mut r, jac) = eval(&x, true)?;
    let mut jac = jac.expect("jacobian requested");
    let mut rank = jac.ncols();
    for it in 0..opts.max_iter {
        if done(&x, &r) {
            return Ok(GnOutcome {
                x,
                residual: r,
                iterations: it,
                converged: true,
                rank,
            });
        }
        let merit = r.norm_squared();
        let (mut dx, rk) = lstsq(&jac, &(-&r), opts.rcond);
        rank = rk;
        let big = dx.amax();
        if big > opts.max_step {
            dx *= opts.max_step / big;
        }

        let mut accepted = None;
        let mut alpha = 1.0;
        for _ in 0..12 {
            let trial: Vec<f64> = x
                .iter()
                .zip(dx.iter())
                .map(|(a, d)| a + alpha * d)
                .collect();
            if let Ok((rt, _)) = eval(&trial, false) {
                if rt.iter().all(|v| v.is_finite()) && rt.norm_squared() < merit {
                    accepted = Some(trial);
                    break;
                }
            }
            alpha *= 0.5;
        }

        if accepted.is_none() {
            // Levenberg–Marquardt fallback
            let jt = jac.transpose();
            let jtj = &jt * &jac;
            let g = &jt * &r;
            let scale = jtj.diagonal().amax().max(1e-300);
            let mut mu = 1e-6 * scale;
            for _ in 0..14 {
                let a = &jtj + DMatrix::identity(jtj.nrows(), jtj.ncols()) * mu;
                if let Some(d) = a.cholesky().map(|c| c.solve(&(-&g))) {
                    let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, d)| a + d).collect();
                    if let Ok((rt, _)) = eval(&trial, false) {
                        if rt.iter().all(|v| v.is_finite()) && rt.norm_squared() < merit {
                            accepted = Some(trial);
                            break;
                        }
                    }
                }
                mu *= 10.0;
            }
        }

        match accepted {
            Some(nx) => {
                x = nx;
                let (nr, nj) = eval(&x, true)?;
                r = nr;
                jac = nj.expect("jacobian requested");
            }
            None => {
                return Ok(GnOutcome {
                    x,
                    residual: r,
                    iterations: it,
                    converged: false,
                    rank,
                })
            }
        }
    }
    let converged = done(&x, &r);
    Ok(GnOutcome {
        x,
        residual: r,
        iterations: opts.max_iter,
        converged,
        rank,
    })
}

/// Eigen-pairs of a real square matrix: eigenvalues from the Schur form,
/// eigenvectors as the null direction of `A - λI` via a complex SVD.
pub(crate) fn complex_eigenpairs(
    a: &DMatrix<f64>,
) -> Result<Vec<(nalgebra::Complex<f64>, DVector<nalgebra::Complex<f64>>)>> {
    use nalgebra::Complex;
    if !a.is_square() {
        return Err(VortexError::InvalidParameter(
            "matrix must be square".into(),
        ));
    }
    let n = a.nrows();
    let vals = a.clone().complex_eigenvalues();
    let ac: DMatrix<Complex<f64>> = a.map(|x| Complex::new(x, 0.0));
    let mut out = Vec::with_capacity(n);
    for lam in vals.iter() {
        let m = &ac - DMatrix::<Complex<f64>>::identity(n, n) * *lam;
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let (imin, _) =
            svd.singular_values
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |(bi, bs), (i, &s)| if s < bs { (i, s) } else { (bi, bs) },
                );
        let v: DVector<Complex<f64>> = v_t.row(imin).adjoint().into_owned();
        out.push((*lam, v));
    }
    Ok(out)
}
