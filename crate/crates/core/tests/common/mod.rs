#![allow(dead_code)]

use std::path::PathBuf;

use mixwass::config::RunConfigFile;
use mixwass::extraction::AtomicMeasure;
use mixwass::hierarchy::HierarchyConfig;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture_config(name: &str) -> HierarchyConfig {
    RunConfigFile::load(&fixture(name)).unwrap().hierarchy().unwrap()
}

/// Random `r`-atomic measure in `[.07, 1] x [.02, 1]`, atoms at least 0.05
/// apart and weights at least 0.1 before normalization.
pub fn random_measure(rng: &mut ChaCha8Rng, r: usize) -> AtomicMeasure {
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    while atoms.len() < r {
        let p = (rng.gen_range(0.07..1.0), rng.gen_range(0.02..1.0));
        if atoms.iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) > 0.05) {
            atoms.push(p);
        }
    }
    let raw: Vec<f64> = (0..r).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    AtomicMeasure::new(atoms, raw.iter().map(|w| w / total).collect()).unwrap()
}

/// Largest atom or weight error after matching each true atom to the
/// nearest recovered one. `None` if the atom counts differ.
pub fn matched_error(truth: &AtomicMeasure, found: &AtomicMeasure) -> Option<f64> {
    if truth.len() != found.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (k, &(m, s)) in truth.atoms.iter().enumerate() {
        let (j, d) = found
            .atoms
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| (j, (a - m).abs().max((b - s).abs())))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        worst = worst.max(d).max((found.weights[j] - truth.weights[k]).abs());
    }
    Some(worst)
}

/// Gauss-Hermite rule for the standard normal (Golub-Welsch).
pub fn gauss_hermite(points: usize) -> Vec<(f64, f64)> {
    let mut jacobi = DMatrix::zeros(points, points);
    for k in 1..points {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut rule: Vec<(f64, f64)> = (0..points)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// `E[X^j]` and `E[|X|^j]` for `X ~ N(m, s^2)` by quadrature.
pub fn quadrature_moment(rule: &[(f64, f64)], m: f64, s: f64, j: i32) -> (f64, f64) {
    rule.iter().fold((0.0, 0.0), |(a, b), &(x, w)| {
        let v = (m + s * x).powi(j);
        (a + w * v, b + w * v.abs())
    })
}
