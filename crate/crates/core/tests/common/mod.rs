#![allow(dead_code)]

use nvortex::dynamics::{self, VorticitySet};
use proptest::prelude::*;

/// Positive vorticities and a collision-free configuration in the unit box.
pub fn system(n_min: usize, n_max: usize) -> impl Strategy<Value = (VorticitySet, Vec<f64>)> {
    (n_min..=n_max).prop_flat_map(|n| {
        (
            prop::collection::vec(0.2f64..3.0, n),
            prop::collection::vec(-1.0f64..1.0, 2 * n),
        )
            .prop_filter("well separated", |(_, z)| {
                dynamics::min_mutual_distance(z) > 1e-3
            })
            .prop_map(|(g, z)| (VorticitySet::new(g).unwrap(), z))
    })
}

/// Like [`system`] but centred and normalised to `I = 1`.
pub fn normalised_system(
    n_min: usize,
    n_max: usize,
) -> impl Strategy<Value = (VorticitySet, Vec<f64>)> {
    system(n_min, n_max)
        .prop_map(|(v, z)| {
            let z = dynamics::normalised(&v, &z).unwrap();
            (v, z)
        })
        .prop_filter("well separated after scaling", |(_, z)| {
            dynamics::min_mutual_distance(z) > 1e-3
        })
}

pub fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Central-difference gradient of `f` at `x`.
pub fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|k| {
            y[k] = x[k] + h;
            let a = f(&y);
            y[k] = x[k] - h;
            let b = f(&y);
            y[k] = x[k];
            (a - b) / (2.0 * h)
        })
        .collect()
}
