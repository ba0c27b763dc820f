//! Flatness detection and recovery of finitely atomic mixing measures from
//! a truncated pseudo-moment vector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{monomials, ExponentPair};
use crate::relaxation::{moment_matrix, MomentVector};
use crate::semialg::SemialgebraicSet;

/// Default relative singular-value threshold for numerical rank.
pub const DEFAULT_EPS_RANK: f64 = 1e-6;

/// Seed of the random combinations used by [`extract_atoms`].
pub const DEFAULT_EXTRACTION_SEED: u64 = 0x6d69_7877;
const EIGEN_GAP: f64 = 1e-8;
const EXTRA_COMBINATIONS: usize = 3;
const NEGATIVE_WEIGHT_TOL: f64 = 1e-6;

/// Rank comparison between `M_n(phi)` and `M_(n-v)(phi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub rank_low: usize,
    pub rank_high: usize,
    /// Singular values of `M_n(phi)`, descending.
    pub singular_values: Vec<f64>,
    /// Singular values of `M_(n-v)(phi)`, descending.
    pub singular_values_low: Vec<f64>,
    pub flat: bool,
    /// Number of atoms when flat.
    pub r: Option<usize>,
}

/// Finitely atomic probability measure on the `(m, sigma)` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms with {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.iter().any(|&(m, s)| !m.is_finite() || !s.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite atom".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(AtomicMeasure { atoms, weights })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Indices of atoms lying outside `set`.
    pub fn outside(&self, set: &SemialgebraicSet) -> Vec<usize> {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, &(m, s))| !set.contains(m, s))
            .map(|(k, _)| k)
            .collect()
    }

    /// Same measure with atoms mapped by `(m, s) -> (center + scale m, scale s)`.
    pub fn affine_image(&self, center: f64, scale: f64) -> Self {
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|&(m, s)| (center + scale * m, scale * s))
                .collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Moments of `measure` through total degree `max_degree`.
pub fn recompute_moments(measure: &AtomicMeasure, max_degree: usize) -> MomentVector {
    MomentVector::from_atoms(&measure.atoms, &measure.weights, max_degree)
}

fn singular_values(m: DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn numerical_rank(sv: &[f64], eps_rank: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > eps_rank * top).count()
}

fn check_args(phi: &MomentVector, n: usize, v: usize, eps_rank: f64) -> Result<()> {
    if v == 0 || v > n {
        return Err(Error::Usage(format!("flatness needs 1 <= v <= n, got v = {v}, n = {n}")));
    }
    if !(eps_rank > 0.0 && eps_rank < 1.0) {
        return Err(Error::Usage(format!("eps_rank must lie in (0, 1), got {eps_rank}")));
    }
    if phi.max_degree() < 2 * n {
        return Err(Error::OutOfRange {
            degree: 2 * n,
            order: phi.max_degree() / 2,
        });
    }
    Ok(())
}

/// Compares numerical ranks of `M_n(phi)` and `M_(n-v)(phi)`.
pub fn check_flatness(
    phi: &MomentVector,
    n: usize,
    v: usize,
    eps_rank: f64,
) -> Result<FlatnessReport> {
    check_args(phi, n, v, eps_rank)?;
    let singular_values_high = singular_values(moment_matrix(phi, n)?.to_dmatrix());
    let singular_values_low = singular_values(moment_matrix(phi, n - v)?.to_dmatrix());
    let rank_high = numerical_rank(&singular_values_high, eps_rank);
    let rank_low = numerical_rank(&singular_values_low, eps_rank);
    let flat = rank_high == rank_low;
    Ok(FlatnessReport {
        rank_low,
        rank_high,
        singular_values: singular_values_high,
        singular_values_low,
        flat,
        r: flat.then_some(rank_high),
    })
}

/// Greedy pivoted Cholesky: `rank` well-conditioned basis indices.
fn pivot_basis(gram: &DMatrix<f64>, rank: usize) -> Vec<usize> {
    let dim = gram.nrows();
    let mut residual = gram.clone();
    let mut chosen = Vec::with_capacity(rank);
    for _ in 0..rank {
        let p = (0..dim)
            .filter(|k| !chosen.contains(k))
            .max_by(|&a, &b| residual[(a, a)].total_cmp(&residual[(b, b)]))
            .expect("rank never exceeds the matrix size");
        chosen.push(p);
        let pivot = residual[(p, p)];
        if pivot <= 0.0 {
            continue;
        }
        let col = residual.column(p).clone_owned();
        residual -= (&col * col.transpose()) / pivot;
    }
    chosen
}

/// Recovers atoms and weights of a flat pseudo-moment vector.
///
/// Works in coordinates standardized by the mean and spread of `phi`, which
/// leaves ranks unchanged but keeps the Hankel blocks well scaled.
pub fn extract_atoms(
    phi: &MomentVector,
    n: usize,
    v: usize,
    eps_rank: f64,
) -> Result<AtomicMeasure> {
    extract_atoms_seeded(phi, n, v, eps_rank, DEFAULT_EXTRACTION_SEED)
}

/// [`extract_atoms`] with an explicit seed for the random combinations.
pub fn extract_atoms_seeded(
    phi: &MomentVector,
    n: usize,
    v: usize,
    eps_rank: f64,
    seed: u64,
) -> Result<AtomicMeasure> {
    let report = check_flatness(phi, n, v, eps_rank)?;
    let r = match report.r {
        Some(r) if r > 0 => r,
        Some(_) => return Err(Error::NotFlat("moment matrix is zero".into())),
        None => {
            return Err(Error::NotFlat(format!(
                "rank {} at order {n} against {} at order {}",
                report.rank_high,
                report.rank_low,
                n - v
            )))
        }
    };
    let mass = phi.get(ExponentPair::ZERO);
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::ExtractionFailed(format!("non-positive mass {mass}")));
    }

    let mean = phi.get(ExponentPair::new(1, 0)) / mass;
    let spread = (phi.get(ExponentPair::new(2, 0)) / mass - mean * mean
        + phi.get(ExponentPair::new(0, 2)) / mass)
        .max(0.0)
        .sqrt();
    let spread = if spread > 1e-12 { spread } else { 1.0 };
    let std = phi
        .truncated(2 * n)?
        .affine_pushforward(-mean / spread, 1.0 / spread);

    let low = n - v;
    let basis: Vec<ExponentPair> = monomials(low).collect();
    let gram_full = moment_matrix(&std, low)?.to_dmatrix();
    let chosen: Vec<ExponentPair> = pivot_basis(&gram_full, r)
        .into_iter()
        .map(|k| basis[k])
        .collect();

    let shifted_block = |shift: ExponentPair| {
        DMatrix::from_fn(r, r, |a, b| std.get(chosen[a].shifted(chosen[b]).shifted(shift)))
    };
    let gram = shifted_block(ExponentPair::ZERO);
    let chol = gram.clone().cholesky().ok_or_else(|| {
        Error::ExtractionFailed("pivoted Gram block is not positive definite".into())
    })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::ExtractionFailed("singular Cholesky factor".into()))?;
    // L^-1 H L^-T is symmetric and all such operators share one orthogonal
    // eigenbasis, so a symmetric eigensolver gives the joint diagonalization.
    let symmetrize = |h: DMatrix<f64>| {
        let t = &l_inv * h * l_inv.transpose();
        (&t + t.transpose()) * 0.5
    };
    let op_m = symmetrize(shifted_block(ExponentPair::new(1, 0)));
    let op_s = symmetrize(shifted_block(ExponentPair::new(0, 1)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = None;
    let mut best_gap = 0.0;
    for _ in 0..=EXTRA_COMBINATIONS {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let combo = &op_m * theta.cos() + &op_s * theta.sin();
        let eig = SymmetricEigen::new(combo);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        let scale = vals.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
        let gap = vals
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if gap >= EIGEN_GAP * scale || r == 1 {
            vectors = Some(eig.eigenvectors);
            break;
        }
        best_gap = f64::max(best_gap, gap);
    }
    let vectors = vectors.ok_or_else(|| {
        Error::ExtractionFailed(format!(
            "eigenvalue gap {best_gap:.3e} below {EIGEN_GAP:.0e} for every combination"
        ))
    })?;

    let atoms_std: Vec<(f64, f64)> = (0..r)
        .map(|k| {
            let q = vectors.column(k);
            (q.dot(&(&op_m * q)), q.dot(&(&op_s * q)))
        })
        .collect();

    // Vandermonde least squares on every moment of degree <= 2(n - v).
    let rows: Vec<ExponentPair> = monomials(2 * low).collect();
    let vander = DMatrix::from_fn(rows.len(), r, |row, k| {
        let (a, b) = atoms_std[k];
        a.powi(rows[row].i as i32) * b.powi(rows[row].j as i32)
    });
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|&e| std.get(e) / mass));
    let weights = vander
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::ExtractionFailed(format!("weight solve: {e}")))?;
    if let Some(w) = weights.iter().find(|w| **w < -NEGATIVE_WEIGHT_TOL) {
        return Err(Error::ExtractionFailed(format!("negative weight {w:.3e}")));
    }
    let clipped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ExtractionFailed("weights vanish".into()));
    }
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        atoms_std[a]
            .0
            .total_cmp(&atoms_std[b].0)
            .then(atoms_std[a].1.total_cmp(&atoms_std[b].1))
    });
    let atoms = order
        .iter()
        .map(|&k| (mean + spread * atoms_std[k].0, spread * atoms_std[k].1))
        .collect();
    let weights = order.iter().map(|&k| clipped[k] / total).collect();
    AtomicMeasure::new(atoms, weights)
}
