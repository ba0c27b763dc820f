//! Infeasible-start primal-dual path following with HKM scaling and a
//! Mehrotra predictor-corrector step.
//!
//! Equality constraints are eliminated first, leaving an LMI problem in the
//! free coordinates `z`:
//!
//! ```text
//! (moment side)  minimize  c.z + c0   s.t.  S = F_0 + sum_k z_k F_k  PSD
//! (SOS side)     maximize  c0 - <F_0, X>   s.t.  <F_k, X> = c_k,  X PSD
//! ```

use nalgebra::{Cholesky, DMatrix, DVector};

use super::problem::SdpProblem;
use super::{SdpSolution, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::polyalg::SymMatrix;

const PIVOT_RATIO: f64 = 1e-3;
const REDUNDANT_TOL: f64 = 1e-10;
const SCHUR_REG: f64 = 1e-12;
const REFINEMENT_STEPS: usize = 10;
const STEP_FRACTION: f64 = 0.9;
const INIT_FLOOR: f64 = 10.0;
const BACKTRACK_STEPS: usize = 30;
const BACKTRACK_FACTOR: f64 = 0.7;

/// Affine parametrization `x = x0 + T z` of `{x : A x = b}`.
struct Reduction {
    x0: Vec<f64>,
    /// Per decision variable, its nonzero `(free index, coefficient)` pairs
    /// in `T`.
    rows: Vec<Vec<(usize, f64)>>,
    num_free: usize,
}

impl Reduction {
    fn lift(&self, z: &[f64]) -> Vec<f64> {
        self.x0
            .iter()
            .zip(&self.rows)
            .map(|(x0, row)| x0 + row.iter().map(|(k, t)| t * z[*k]).sum::<f64>())
            .collect()
    }
}

/// Gauss-Jordan elimination on `A x = b`. Redundant rows are dropped after a
/// consistency check. Pivots go to the first column whose magnitude is within
/// `PIVOT_RATIO` of the row maximum, so variables listed first are preferred
/// as dependent ones.
fn eliminate(a: &DMatrix<f64>, b: &[f64]) -> Result<Reduction> {
    let (p, n) = a.shape();
    let mut kept: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    for (r, &rhs0) in b.iter().enumerate().take(p) {
        let original_scale = a.row(r).iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut row: Vec<f64> = a.row(r).iter().copied().collect();
        let mut rhs = rhs0;
        for (krow, krhs, pc) in &kept {
            let f = row[*pc];
            if f != 0.0 {
                row.iter_mut().zip(krow).for_each(|(v, k)| *v -= f * k);
                rhs -= f * krhs;
            }
        }
        let mx = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if mx <= REDUNDANT_TOL * original_scale {
            if rhs.abs() > 1e-8 * (1.0 + b[r].abs()) {
                return Err(Error::Numerical(format!(
                    "equality constraint {r} is inconsistent with the previous ones (residual {rhs:e})"
                )));
            }
            continue;
        }
        let pc = row
            .iter()
            .position(|v| v.abs() >= PIVOT_RATIO * mx)
            .expect("row maximum exists");
        let piv = row[pc];
        row.iter_mut().for_each(|v| *v /= piv);
        rhs /= piv;
        for (krow, krhs, _) in kept.iter_mut() {
            let f = krow[pc];
            if f != 0.0 {
                krow.iter_mut().zip(&row).for_each(|(v, k)| *v -= f * k);
                *krhs -= f * rhs;
            }
        }
        kept.push((row, rhs, pc));
    }

    let mut is_pivot = vec![None; n];
    for (k, (_, _, pc)) in kept.iter().enumerate() {
        is_pivot[*pc] = Some(k);
    }
    let free: Vec<usize> = (0..n).filter(|c| is_pivot[*c].is_none()).collect();
    let mut free_pos = vec![usize::MAX; n];
    for (k, &c) in free.iter().enumerate() {
        free_pos[c] = k;
    }
    let mut x0 = vec![0.0; n];
    let mut rows = vec![Vec::new(); n];
    for c in 0..n {
        match is_pivot[c] {
            Some(k) => {
                let (row, rhs, _) = &kept[k];
                x0[c] = *rhs;
                for &f in &free {
                    if row[f] != 0.0 {
                        rows[c].push((free_pos[f], -row[f]));
                    }
                }
            }
            None => rows[c].push((free_pos[c], 1.0)),
        }
    }
    Ok(Reduction {
        x0,
        rows,
        num_free: free.len(),
    })
}

/// Block-diagonal symmetric matrix.
type Blocks = Vec<DMatrix<f64>>;

fn inner(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &Blocks) -> f64 {
    inner(a, a).sqrt()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Reduced LMI data.
struct Lmi {
    dims: Vec<usize>,
    f0: Blocks,
    /// `coefs[k]` lists the blocks touched by `F_k`.
    coefs: Vec<Vec<(usize, DMatrix<f64>)>>,
    c: Vec<f64>,
    c0: f64,
}

impl Lmi {
    fn build(problem: &SdpProblem, red: &Reduction) -> Lmi {
        let dims = problem.block_dims().to_vec();
        let m = red.num_free;
        let mut f0: Blocks = dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        let mut dense: Vec<Vec<Option<DMatrix<f64>>>> = vec![vec![None; dims.len()]; m];
        for (b, &d) in dims.iter().enumerate() {
            for &(r, c, v) in problem.psd_constant(b) {
                f0[b][(r, c)] += v;
                if r != c {
                    f0[b][(c, r)] += v;
                }
            }
            for e in problem.psd_map(b) {
                let x0 = red.x0[e.var];
                if x0 != 0.0 {
                    f0[b][(e.row, e.col)] += e.coef * x0;
                    if e.row != e.col {
                        f0[b][(e.col, e.row)] += e.coef * x0;
                    }
                }
                for &(k, t) in &red.rows[e.var] {
                    let mat = dense[k][b].get_or_insert_with(|| DMatrix::zeros(d, d));
                    mat[(e.row, e.col)] += e.coef * t;
                    if e.row != e.col {
                        mat[(e.col, e.row)] += e.coef * t;
                    }
                }
            }
        }
        let coefs = dense
            .into_iter()
            .map(|per_block| {
                per_block
                    .into_iter()
                    .enumerate()
                    .filter_map(|(b, m)| m.map(|m| (b, m)))
                    .collect()
            })
            .collect();
        let mut c = vec![0.0; m];
        let mut c0 = problem.objective_constant();
        for &(v, cv) in problem.objective() {
            c0 += cv * red.x0[v];
            for &(k, t) in &red.rows[v] {
                c[k] += cv * t;
            }
        }
        Lmi { dims, f0, coefs, c, c0 }
    }

    /// Cold-start multiples of the identity for block `b`: the SOS-side
    /// matrix is sized by the constraint right-hand sides relative to the
    /// block's coefficient matrices, the slack by the block's data norms.
    fn initial_scales(&self, b: usize) -> (f64, f64) {
        let d = self.dims[b] as f64;
        let base = d.sqrt().max(INIT_FLOOR);
        let mut x0 = base;
        let mut s0 = base.max(self.f0[b].norm());
        for (k, blocks) in self.coefs.iter().enumerate() {
            for (bb, m) in blocks {
                if *bb == b {
                    let norm = m.norm();
                    x0 = x0.max((1.0 + self.c[k].abs()) / (1.0 + norm));
                    s0 = s0.max(norm);
                }
            }
        }
        (x0, s0)
    }

    /// `F_0 + sum_k z_k F_k`.
    fn eval(&self, z: &[f64]) -> Blocks {
        let mut out = self.f0.clone();
        self.add_combination(&mut out, z);
        out
    }

    fn add_combination(&self, out: &mut Blocks, z: &[f64]) {
        for (k, blocks) in self.coefs.iter().enumerate() {
            if z[k] != 0.0 {
                for (b, m) in blocks {
                    out[*b] += m * z[k];
                }
            }
        }
    }

    /// `(<F_k, X>)_k`.
    fn adjoint(&self, x: &Blocks) -> Vec<f64> {
        self.coefs
            .iter()
            .map(|blocks| blocks.iter().map(|(b, m)| m.dot(&x[*b])).sum())
            .collect()
    }
}

/// Largest `alpha <= 1` keeping `z + alpha dz` PSD, damped by `fraction`. Returns `None` if `z` itself is not numerically PD.
fn step_length(z: &Blocks, dz: &Blocks, fraction: f64) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (zb, dzb) in z.iter().zip(dz) {
        if zb.nrows() == 0 {
            continue;
        }
        let chol = Cholesky::new(zb.clone())?;
        let l = chol.l();
        let w1 = l.solve_lower_triangular(dzb)?;
        let w = l.solve_lower_triangular(&w1.transpose())?;
        let lmin = sym(&w).symmetric_eigenvalues().min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    Some((fraction * alpha).min(1.0))
}

/// `z + alpha dz` with `alpha` shrunk until every block has a Cholesky
/// factor.
fn backtrack(z: &Blocks, dz: &Blocks, alpha: &mut f64) -> Option<Blocks> {
    for _ in 0..BACKTRACK_STEPS {
        let next: Blocks = z.iter().zip(dz).map(|(a, d)| sym(&(a + d * *alpha))).collect();
        if next.iter().all(|b| b.nrows() == 0 || Cholesky::new(b.clone()).is_some()) {
            return Some(next);
        }
        *alpha *= BACKTRACK_FACTOR;
    }
    None
}

fn inverse_spd(z: &Blocks) -> Option<Blocks> {
    z.iter()
        .map(|b| {
            if b.nrows() == 0 {
                return Some(b.clone());
            }
            Cholesky::new(b.clone()).map(|c| sym(&c.inverse()))
        })
        .collect()
}

struct Iterate {
    z: Vec<f64>,
    x: Blocks,
    s: Blocks,
}

#[derive(Clone, Copy)]
struct Residuals {
    primal_obj: f64,
    dual_obj: f64,
    primal_infeas: f64,
    dual_infeas: f64,
    rel_gap: f64,
}

impl Residuals {
    fn merit(&self) -> f64 {
        self.primal_infeas.max(self.dual_infeas).max(self.rel_gap)
    }
}

fn residuals(lmi: &Lmi, it: &Iterate, f0_norm: f64, c_norm: f64) -> (Residuals, Blocks, Vec<f64>) {
    let mut rs = lmi.eval(&it.z);
    for (r, s) in rs.iter_mut().zip(&it.s) {
        *r -= s;
    }
    let adj = lmi.adjoint(&it.x);
    let rx: Vec<f64> = lmi.c.iter().zip(&adj).map(|(c, a)| c - a).collect();
    let primal_obj = lmi.c0 + lmi.c.iter().zip(&it.z).map(|(c, z)| c * z).sum::<f64>();
    let dual_obj = lmi.c0 - inner(&lmi.f0, &it.x);
    let res = Residuals {
        primal_obj,
        dual_obj,
        primal_infeas: frob(&rs) / (1.0 + f0_norm),
        dual_infeas: rx.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + c_norm),
        rel_gap: (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs()),
    };
    (res, rs, rx)
}

/// Solves the reduced system `M dz = h` and recovers the search direction.
struct Direction {
    dz: Vec<f64>,
    dx: Blocks,
    ds: Blocks,
}

#[allow(clippy::too_many_arguments)]
fn direction(
    lmi: &Lmi,
    schur: &SchurSystem,
    it: &Iterate,
    s_inv: &Blocks,
    rs: &Blocks,
    rx: &[f64],
    target: f64,
    correction: Option<&Blocks>,
) -> Direction {
    // rc = target S^-1 - X - X rS S^-1 - correction
    let mut rc: Blocks = Vec::with_capacity(it.x.len());
    for b in 0..it.x.len() {
        let mut m = &s_inv[b] * target - &it.x[b] - &it.x[b] * &rs[b] * &s_inv[b];
        if let Some(corr) = correction {
            m -= &corr[b];
        }
        rc.push(m);
    }
    let adj = lmi.adjoint(&rc);
    let h = DVector::from_iterator(adj.len(), adj.iter().zip(rx).map(|(a, r)| a - r));
    let dz_vec = schur.solve(&h);
    let dz: Vec<f64> = dz_vec.iter().copied().collect();
    let mut ds = rs.clone();
    lmi.add_combination(&mut ds, &dz);
    let dx = (0..it.x.len())
        .map(|b| sym(&(&rc[b] - &it.x[b] * (&ds[b] - &rs[b]) * &s_inv[b])))
        .collect();
    Direction { dz, dx, ds }
}

/// Cholesky factor of the HKM Schur complement
/// `M_kl = tr(F_k X F_l S^-1)`, built without forming `M`.
///
/// With `X = L_X L_X^T` and `S = L_S L_S^T`, `M = A^T A` where column `k`
/// of `A` stacks the blocks `L_S^-1 F_k L_X`. A QR factorization of `A`,
/// with `sqrt(reg) I` appended for the regularization, yields `R` with
/// `R^T R = M + reg I` while only seeing the square root of `M`'s
/// condition number. Solves are refined against the unregularized `M`.
struct SchurSystem {
    a: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl SchurSystem {
    fn new(lmi: &Lmi, x: &Blocks, s: &Blocks) -> Option<Self> {
        let m = lmi.coefs.len();
        let mut row_offsets = Vec::with_capacity(lmi.dims.len());
        let mut rows = 0;
        for &d in &lmi.dims {
            row_offsets.push(rows);
            rows += d * d;
        }
        let mut factors = Vec::with_capacity(lmi.dims.len());
        for (xb, sb) in x.iter().zip(s) {
            if xb.nrows() == 0 {
                factors.push(None);
                continue;
            }
            let lx = Cholesky::new(xb.clone())?.l();
            let ls = Cholesky::new(sb.clone())?.l();
            factors.push(Some((lx, ls)));
        }
        let mut a = DMatrix::zeros(rows + m, m);
        for (k, blocks) in lmi.coefs.iter().enumerate() {
            for (b, f) in blocks {
                let Some((lx, ls)) = &factors[*b] else { continue };
                let col = ls.solve_lower_triangular(&(f * lx))?;
                let d = lmi.dims[*b];
                for c in 0..d {
                    for r in 0..d {
                        a[(row_offsets[*b] + c * d + r, k)] = col[(r, c)];
                    }
                }
            }
        }
        // M + reg I; refinement removes the shift's effect on small columns
        for k in 0..m {
            a[(rows + k, k)] = SCHUR_REG.sqrt();
        }
        let r = a.clone().qr().r();
        if (0..m).any(|k| !r[(k, k)].is_finite() || r[(k, k)] == 0.0) {
            return None;
        }
        a = a.rows(0, rows).into_owned();
        Some(SchurSystem { a, r })
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(&(&self.a * v))
    }

    fn factor_solve(&self, h: &DVector<f64>) -> DVector<f64> {
        let y = self
            .r
            .tr_solve_upper_triangular(h)
            .expect("nonzero diagonal checked at construction");
        self.r
            .solve_upper_triangular(&y)
            .expect("nonzero diagonal checked at construction")
    }

    /// Solves `M x = h`, refining against the unregularized `M`.
    fn solve(&self, h: &DVector<f64>) -> DVector<f64> {
        let mut x = self.factor_solve(h);
        let mut r = h - self.apply(&x);
        let mut r_norm = r.norm();
        for _ in 0..REFINEMENT_STEPS {
            let candidate = &x + self.factor_solve(&r);
            let next = h - self.apply(&candidate);
            let next_norm = next.norm();
            // also stops on NaN
            if next_norm.is_nan() || next_norm >= 0.5 * r_norm {
                if next_norm < r_norm {
                    x = candidate;
                }
                break;
            }
            (x, r, r_norm) = (candidate, next, next_norm);
        }
        x
    }
}

pub(super) fn solve_problem(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let (a, b) = problem.constraint_matrix();
    let red = eliminate(&a, &b)?;
    let lmi = Lmi::build(problem, &red);
    log::debug!(
        "reduction: {} free of {}, max |T| {:.2e}, max |x0| {:.2e}",
        red.num_free,
        problem.num_vars(),
        red.rows.iter().flatten().fold(0.0f64, |m, (_, t)| m.max(t.abs())),
        red.x0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    );
    let n_total: usize = lmi.dims.iter().sum();
    let f0_norm = frob(&lmi.f0);
    let c_norm = lmi.c.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut it = Iterate {
        z: vec![0.0; red.num_free],
        x: Vec::new(),
        s: Vec::new(),
    };
    for (b, &d) in lmi.dims.iter().enumerate() {
        let (x0, s0) = lmi.initial_scales(b);
        log::trace!("block {b}: initial scales {x0:.3e} {s0:.3e}");
        it.x.push(DMatrix::identity(d, d) * x0);
        it.s.push(DMatrix::identity(d, d) * s0);
    }
    let mut fraction = STEP_FRACTION;

    let mut status = SolveStatus::MaxIterations;
    let mut best: Option<(Residuals, Iterate, usize)> = None;
    let mut iterations = 0;
    let mut stalled = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let (res, rs, rx) = residuals(&lmi, &it, f0_norm, c_norm);
        if !res.merit().is_finite() {
            status = SolveStatus::NumericalFailure;
            break;
        }
        if best.as_ref().is_none_or(|(r, _, _)| res.merit() <= r.merit()) {
            best = Some((
                res,
                Iterate {
                    z: it.z.clone(),
                    x: it.x.clone(),
                    s: it.s.clone(),
                },
                iter,
            ));
        }
        log::trace!(
            "iter {iter}: p={:.6e} d={:.6e} pinf={:.2e} dinf={:.2e} gap={:.2e}",
            res.primal_obj,
            res.dual_obj,
            res.primal_infeas,
            res.dual_infeas,
            res.rel_gap
        );
        if res.merit() <= opts.tol {
            status = SolveStatus::Optimal;
            break;
        }
        if res.dual_obj > 1.0 / opts.tol {
            status = SolveStatus::InfeasibleSuspected;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let Some(s_inv) = inverse_spd(&it.s) else {
            log::debug!("iter {iter}: slack matrix lost definiteness");
            status = SolveStatus::NumericalFailure;
            break;
        };
        let mu = if n_total > 0 { inner(&it.x, &it.s) / n_total as f64 } else { 0.0 };
        let Some(schur) = SchurSystem::new(&lmi, &it.x, &it.s) else {
            log::debug!("iter {iter}: Schur complement factorization failed");
            status = SolveStatus::NumericalFailure;
            break;
        };

        let pred = direction(&lmi, &schur, &it, &s_inv, &rs, &rx, 0.0, None);
        let (Some(ap), Some(ad)) = (step_length(&it.x, &pred.dx, 1.0), step_length(&it.s, &pred.ds, 1.0)) else {
            log::debug!("iter {iter}: predictor step length failed");
            status = SolveStatus::NumericalFailure;
            break;
        };
        let mut trial_gap = 0.0;
        for bk in 0..it.x.len() {
            let xb = &it.x[bk] + &pred.dx[bk] * ap;
            let sb = &it.s[bk] + &pred.ds[bk] * ad;
            trial_gap += xb.dot(&sb);
        }
        let mu_aff = trial_gap / n_total.max(1) as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
        let corr: Blocks = (0..it.x.len())
            .map(|bk| &pred.dx[bk] * &pred.ds[bk] * &s_inv[bk])
            .collect();
        let dir = direction(&lmi, &schur, &it, &s_inv, &rs, &rx, sigma * mu, Some(&corr));
        let (Some(mut ap), Some(mut ad)) = (step_length(&it.x, &dir.dx, fraction), step_length(&it.s, &dir.ds, fraction)) else {
            log::debug!("iter {iter}: corrector step length failed");
            status = SolveStatus::NumericalFailure;
            break;
        };
        // rounding can leave a step-fraction update numerically indefinite
        let Some(next_x) = backtrack(&it.x, &dir.dx, &mut ap) else {
            log::debug!("iter {iter}: no positive definite step for X");
            status = SolveStatus::NumericalFailure;
            break;
        };
        let Some(next_s) = backtrack(&it.s, &dir.ds, &mut ad) else {
            log::debug!("iter {iter}: no positive definite step for S");
            status = SolveStatus::NumericalFailure;
            break;
        };
        it.x = next_x;
        it.s = next_s;
        for (z, dz) in it.z.iter_mut().zip(&dir.dz) {
            *z += ad * dz;
        }
        fraction = STEP_FRACTION + 0.09 * ap.min(ad);
        if ap.max(ad) < 1e-10 {
            stalled += 1;
            if stalled >= 3 {
                log::debug!("iter {iter}: step lengths stalled");
                status = SolveStatus::NumericalFailure;
                iterations = iter + 1;
                break;
            }
        } else {
            stalled = 0;
        }
    }

    let (res, final_it) = match status {
        SolveStatus::Optimal => {
            let (res, _, _) = residuals(&lmi, &it, f0_norm, c_norm);
            (res, it)
        }
        _ => match best {
            Some((res, best_it, _)) => (res, best_it),
            None => {
                let (res, _, _) = residuals(&lmi, &it, f0_norm, c_norm);
                (res, it)
            }
        },
    };

    let x = red.lift(&final_it.z);
    let primal_blocks = problem.blocks_at(&x);
    let dual_blocks: Vec<SymMatrix> = final_it.x.iter().map(SymMatrix::from_dmatrix).collect();
    let dual_vector = equality_multipliers(problem, &a, &dual_blocks);
    Ok(SdpSolution {
        primal_obj: problem.objective_value(&x),
        dual_obj: res.dual_obj,
        x,
        primal_blocks,
        dual_vector,
        dual_blocks,
        status,
        iterations,
        primal_residual: res.primal_infeas,
        dual_residual: res.dual_infeas,
        rel_gap: res.rel_gap,
    })
}

/// Least-squares solution of `A^T nu = c - F*(X)`.
fn equality_multipliers(problem: &SdpProblem, a: &DMatrix<f64>, duals: &[SymMatrix]) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let adj = problem.adjoint(duals);
    let mut rhs = DVector::from_iterator(adj.len(), adj.iter().map(|v| -v));
    for &(v, c) in problem.objective() {
        rhs[v] += c;
    }
    let at = a.transpose();
    let svd = at.svd(true, true);
    let smax = svd.singular_values.max();
    match svd.solve(&rhs, 1e-12 * smax.max(1.0)) {
        Ok(nu) => nu.iter().copied().collect(),
        Err(_) => vec![f64::NAN; a.nrows()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elimination_prefers_leading_columns() {
        // x0 + x2 = 1, x1 - 3 x2 = 0, duplicate of the first row
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, -3.0, 2.0, 0.0, 2.0]);
        let red = eliminate(&a, &[1.0, 0.0, 2.0]).unwrap();
        assert_eq!(red.num_free, 1);
        let x = red.lift(&[0.25]);
        assert!((x[0] - 0.75).abs() < 1e-15);
        assert!((x[1] - 0.75).abs() < 1e-15);
        assert_eq!(x[2], 0.25);
    }

    #[test]
    fn elimination_rejects_inconsistency() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(eliminate(&a, &[1.0, 2.0]).is_err());
    }
}
