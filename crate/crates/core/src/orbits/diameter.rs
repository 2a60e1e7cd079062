use crate::dynamics::{self, Configuration, VorticitySet};
use crate::error::{Result, VortexError};
use crate::reduction::{
    build_lim_transform_with, reduce, ClusterTree, LimTransform, CHART_SINGULAR_TOL,
};

/// The reduced state of `z` rotated so that its first block lies on the
/// positive real axis; for `I = 1` this is `from_chart(to_chart(w), 0)`.
fn representative_with(t: &LimTransform, v: &VorticitySet, z: &[f64]) -> Result<Vec<f64>> {
    let zc = Configuration::new(dynamics::centred(v, z)?)?;
    let w = reduce(t, v, &zc)?;
    let m1 = w.w[0].hypot(w.w[1]);
    if !(m1 >= CHART_SINGULAR_TOL) {
        return Err(VortexError::ChartSingular(m1));
    }
    let mut r = dynamics::rotate(&w.w, w.w[1].atan2(w.w[0]));
    r[1] = 0.0;
    Ok(r)
}

/// Quotient representative of `z` on the sequential tree.
pub fn reduced_representative(v: &VorticitySet, z: &[f64]) -> Result<Vec<f64>> {
    let t = build_lim_transform_with(v, &ClusterTree::sequential(v.n()))?;
    representative_with(&t, v, z)
}

/// Largest pairwise sup-norm distance between the quotient representatives
/// of `samples`. The first cyclic relabelling of the tree that keeps every
/// sample off the chart boundary is used.
pub fn reduced_diameter(v: &VorticitySet, samples: &[Vec<f64>]) -> Result<f64> {
    let n = v.n();
    let mut last = VortexError::ChartSingular(0.0);
    for shift in 0..n {
        let t = build_lim_transform_with(v, &ClusterTree::cyclic(n, shift))?;
        let reps: Result<Vec<Vec<f64>>> = samples
            .iter()
            .map(|z| representative_with(&t, v, z))
            .collect();
        match reps {
            Ok(reps) => {
                let mut d: f64 = 0.0;
                for i in 0..reps.len() {
                    for j in i + 1..reps.len() {
                        for (a, b) in reps[i].iter().zip(&reps[j]) {
                            d = d.max((a - b).abs());
                        }
                    }
                }
                return Ok(d);
            }
            Err(e @ VortexError::ChartSingular(_)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}
