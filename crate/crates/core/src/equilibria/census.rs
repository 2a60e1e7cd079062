use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_nre_with, RelativeEquilibrium, NRE_MAX_ITER};
use crate::dynamics::{self, VorticitySet};
use crate::error::{Result, VortexError};

/// Samples closer than this squared distance are redrawn.
const SAMPLE_MIN_DIST_SQ: f64 = 1e-3;

/// One distinct energy level found by [`census`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusLevel {
    pub h: f64,
    /// Number of converged starts that landed on this level.
    pub multiplicity: usize,
    pub representative: RelativeEquilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCensus {
    /// Sorted by increasing `h`.
    pub levels: Vec<CensusLevel>,
    pub n_starts: usize,
    pub cluster_tol: f64,
    /// Smallest squared mutual distance over all converged equilibria;
    /// `None` when no start converged.
    pub epsilon_estimate: Option<f64>,
    pub failed_starts: usize,
}

impl EnergyCensus {
    pub fn values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.h).collect()
    }
}

/// Draws i.i.d. standard normal positions, centres them and scales to
/// `I = 1`, redrawing while some squared distance is below `1e-3`.
pub fn sample_normalised<R: Rng + ?Sized>(v: &VorticitySet, rng: &mut R) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..v.dim()).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(z) = dynamics::normalised(v, &raw) {
            if dynamics::min_mutual_distance(&z) >= SAMPLE_MIN_DIST_SQ {
                return z;
            }
        }
    }
}

fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Multistart NRE census of the energy levels.
///
/// Start `k` draws from its own ChaCha stream, so the output depends only on
/// `(seed, n_starts)` and not on the worker count.
pub fn census(
    v: &VorticitySet,
    n_starts: usize,
    seed: u64,
    tol: f64,
    cluster_tol: f64,
) -> Result<EnergyCensus> {
    if n_starts == 0 {
        return Err(VortexError::InvalidParameter(
            "n_starts must be >= 1".into(),
        ));
    }
    if !(cluster_tol > 0.0) || !(tol > 0.0) {
        return Err(VortexError::InvalidParameter(
            "tol and cluster_tol must be positive".into(),
        ));
    }
    let results: Vec<Option<RelativeEquilibrium>> = (0..n_starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = start_rng(seed, k);
            let z = sample_normalised(v, &mut rng);
            solve_nre_with(v, &z, tol, NRE_MAX_ITER).ok()
        })
        .collect();

    let failed_starts = results.iter().filter(|r| r.is_none()).count();
    let mut found: Vec<(usize, RelativeEquilibrium)> = results
        .into_iter()
        .enumerate()
        .filter_map(|(k, r)| r.map(|r| (k, r)))
        .collect();
    found.sort_by(|a, b| a.1.h_value.total_cmp(&b.1.h_value).then(a.0.cmp(&b.0)));

    let epsilon_estimate = found
        .iter()
        .map(|(_, r)| r.min_dist_sq)
        .min_by(|a, b| a.total_cmp(b));

    // single linkage on the sorted values
    let mut groups: Vec<Vec<(usize, RelativeEquilibrium)>> = Vec::new();
    let mut last_h = f64::NEG_INFINITY;
    for item in found {
        let h = item.1.h_value;
        match groups.last_mut() {
            Some(g) if h - last_h <= cluster_tol => g.push(item),
            _ => groups.push(vec![item]),
        }
        last_h = h;
    }
    let levels = groups
        .into_iter()
        .map(|g| {
            let multiplicity = g.len();
            let h = g.iter().map(|(_, r)| r.h_value).sum::<f64>() / multiplicity as f64;
            let (_, representative) = g
                .into_iter()
                .min_by_key(|(k, _)| *k)
                .expect("groups are non-empty");
            CensusLevel {
                h,
                multiplicity,
                representative,
            }
        })
        .collect();

    Ok(EnergyCensus {
        levels,
        n_starts,
        cluster_tol,
        epsilon_estimate,
        failed_starts,
    })
}
