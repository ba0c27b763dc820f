//! Moment relaxations of the mixture-fitting transport problem.
//!
//! The order-`n` W2 relaxation works on two degree-`2n` pseudo-moment
//! vectors: `lambda` for the transport plan on `(x, y)` and `phi` for the
//! mixing measure on `(m, sigma)`.
//!
//! ```text
//! minimize    lambda((x - y)^2)
//! subject to  lambda_(j,0) = mu_j,  lambda_(0,j) = phi(p_j)   for j <= 2n
//!             M_n(lambda), M_n(phi), M_{n-d_j}(u_j phi) PSD
//! ```
//!
//! Its SOS dual reads `q(x) + g(y) + s(x, y) = (x - y)^2` and
//! `sum_k g_k p_k = sum_j theta_j u_j` with `s`, `theta_j` sums of squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmoments::{binomial, GaussianMomentPolys, UnivariateMoments};
use crate::polyalg::{monomial_count, monomials, ExponentPair, SparsePoly, SymMatrix, VarPair};
use crate::sdp::{SdpProblem, SdpSolution, SolveStatus};
use crate::semialg::SemialgebraicSet;

const IDENTITY_TOL: f64 = 1e-6;

/// Truncated bivariate (pseudo-)moment sequence in graded order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    max_degree: usize,
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(max_degree: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != monomial_count(max_degree) {
            return Err(Error::Usage(format!(
                "moment vector of degree {max_degree} needs {} entries, got {}",
                monomial_count(max_degree),
                values.len()
            )));
        }
        Ok(MomentVector { max_degree, values })
    }

    /// Moments `sum_k w_k a_k^i b_k^j` of a weighted point set.
    pub fn from_atoms(points: &[(f64, f64)], weights: &[f64], max_degree: usize) -> Self {
        let values = monomials(max_degree)
            .map(|e| {
                points
                    .iter()
                    .zip(weights)
                    .map(|(&(a, b), w)| w * a.powi(e.i as i32) * b.powi(e.j as i32))
                    .sum()
            })
            .collect();
        MomentVector { max_degree, values }
    }

    /// Moments of the product measure of two univariate sequences.
    pub fn product(first: &[f64], second: &[f64], max_degree: usize) -> Result<Self> {
        if first.len() <= max_degree || second.len() <= max_degree {
            return Err(Error::InsufficientData {
                needed: max_degree + 1,
                available: first.len().min(second.len()),
            });
        }
        let values = monomials(max_degree).map(|e| first[e.i] * second[e.j]).collect();
        Ok(MomentVector { max_degree, values })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, e: ExponentPair) -> f64 {
        self.values[e.position()]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Riesz functional: `L(p) = sum_e p_e * y_e`.
    pub fn apply(&self, p: &SparsePoly) -> Result<f64> {
        if p.degree() > self.max_degree {
            return Err(Error::OutOfRange {
                degree: p.degree(),
                order: self.max_degree / 2,
            });
        }
        Ok(p.terms().map(|(e, c)| c * self.get(e)).sum())
    }

    /// Restriction to degree `<= max_degree`.
    pub fn truncated(&self, max_degree: usize) -> Result<Self> {
        if max_degree > self.max_degree {
            return Err(Error::OutOfRange {
                degree: max_degree,
                order: self.max_degree / 2,
            });
        }
        Ok(MomentVector {
            max_degree,
            values: self.values[..monomial_count(max_degree)].to_vec(),
        })
    }

    /// Moments of `(center + scale * a, scale * b)` given moments of `(a, b)`.
    pub fn affine_pushforward(&self, center: f64, scale: f64) -> Self {
        let values = monomials(self.max_degree)
            .map(|e| {
                let mut acc = 0.0;
                for k in 0..=e.i {
                    acc += binomial(e.i, k)
                        * center.powi((e.i - k) as i32)
                        * scale.powi(k as i32)
                        * self.get(ExponentPair::new(k, e.j));
                }
                acc * scale.powi(e.j as i32)
            })
            .collect();
        MomentVector {
            max_degree: self.max_degree,
            values,
        }
    }
}

fn check_order(seq: &MomentVector, needed: usize) -> Result<()> {
    if seq.max_degree() < needed {
        return Err(Error::Usage(format!(
            "moment sequence of degree {} is too short, need degree {needed}",
            seq.max_degree()
        )));
    }
    Ok(())
}

/// `M_k(y)`: rows and columns indexed by monomials of degree `<= k`,
/// entry `y_(alpha + beta)`.
pub fn moment_matrix(seq: &MomentVector, k: usize) -> Result<SymMatrix> {
    check_order(seq, 2 * k)?;
    let basis: Vec<ExponentPair> = monomials(k).collect();
    Ok(SymMatrix::from_fn(basis.len(), |r, c| seq.get(basis[r].shifted(basis[c]))))
}

/// `M_k(g y)`: entry `sum_e g_e y_(alpha + beta + e)`.
pub fn localizing_matrix(seq: &MomentVector, g: &SparsePoly, k: usize) -> Result<SymMatrix> {
    check_order(seq, 2 * k + g.degree())?;
    let basis: Vec<ExponentPair> = monomials(k).collect();
    Ok(SymMatrix::from_fn(basis.len(), |r, c| {
        let base = basis[r].shifted(basis[c]);
        g.terms().map(|(e, coef)| coef * seq.get(base.shifted(e))).sum()
    }))
}

/// Which transport cost a relaxation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    W2,
    W1,
}

/// What a PSD block of an assembled problem represents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BlockRole {
    /// `M_n` of the transport plan (or of its piece `part` in W1 mode).
    PlanMoment { part: usize },
    /// Localizing matrix of a plan piece for the given `(x, y)` polynomial.
    PlanLocalizer { part: usize, poly: SparsePoly },
    /// `M_n(phi)`.
    MixingMoment,
    /// `M_{n - d_j}(u_j phi)` for inequality `index`.
    MixingLocalizer { index: usize },
}

const PLAN_SPREAD_FLOOR: f64 = 0.25;

/// Orthonormal Hermite polynomials for `N(center, spread^2)`, as monomial
/// coefficient vectors.
fn hermite_family(degree: usize, center: f64, spread: f64) -> Vec<Vec<f64>> {
    // h_(k+1) = (t h_k - sqrt(k) h_(k-1)) / sqrt(k + 1),  t = (x - center) / spread
    three_term(degree, center, spread, |k| {
        (1.0 / ((k + 1) as f64).sqrt(), (k as f64 / (k + 1) as f64).sqrt())
    })
}

/// Orthonormal Legendre polynomials for the uniform law on `[lo, hi]`.
fn legendre_family(degree: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    // P~_k = sqrt(2k + 1) P_k(t),  t = (2x - lo - hi) / (hi - lo)
    three_term(degree, 0.5 * (lo + hi), 0.5 * (hi - lo), |k| {
        let k = k as f64;
        let a = ((2.0 * k + 1.0) * (2.0 * k + 3.0)).sqrt() / (k + 1.0);
        let b = k / (k + 1.0) * ((2.0 * k + 3.0) / (2.0 * k - 1.0)).sqrt();
        (a, b)
    })
}

/// `p_(k+1) = a_k t p_k - b_k p_(k-1)` with `t = (x - center) / spread`.
fn three_term(
    degree: usize,
    center: f64,
    spread: f64,
    coeffs: impl Fn(usize) -> (f64, f64),
) -> Vec<Vec<f64>> {
    let mut family = vec![vec![1.0]];
    for k in 0..degree {
        let (a, b) = coeffs(k);
        let cur = &family[k];
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += a * c / spread;
            next[i] -= a * c * center / spread;
        }
        if k > 0 {
            for (i, c) in family[k - 1].iter().enumerate() {
                next[i] -= b * c;
            }
        }
        family.push(next);
    }
    family
}

/// `x^i = sum_k inv[i][k] P_k` for a family `P_k` given by monomial
/// coefficients.
fn invert_family(family: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = family.len();
    let mut inv = vec![vec![0.0; d]; d];
    for i in 0..d {
        inv[i][i] = 1.0 / family[i][i];
        for k in (0..i).rev() {
            let acc: f64 = (k + 1..=i).map(|m| inv[i][m] * family[m][k]).sum();
            inv[i][k] = -acc / family[k][k];
        }
    }
    inv
}

/// Change of basis for one PSD block. Row `r` holds the coefficients, in
/// local monomials, of the `r`-th basis polynomial, and the block is
/// `T M T^T` for the local moment matrix `M`. The full basis is the product
/// basis `P_a(t) Q_b(s)`, `a + b <= k`; a reduced basis drops directions on
/// which the moment matrix is forced to vanish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockBasis {
    rows: Vec<Vec<(usize, f64)>>,
    cols: usize,
}

impl BlockBasis {
    fn product(first: &[Vec<f64>], second: &[Vec<f64>], k: usize) -> Self {
        let rows = monomials(k)
            .map(|e| {
                let mut unit = vec![0.0; e.i + 1];
                unit[e.i] = 1.0;
                Self::row(first, second, &unit, e.j)
            })
            .collect();
        BlockBasis {
            rows,
            cols: monomial_count(k),
        }
    }

    /// Rows `r(t) Q_b(s)` where, for each `b`, `r` runs over `ranges[k - b]`
    /// (coefficients on `P_0 .. P_(k-b)`).
    fn reduced(first: &[Vec<f64>], second: &[Vec<f64>], k: usize, ranges: &[Vec<Vec<f64>>]) -> Self {
        let mut rows = Vec::new();
        for b in 0..=k {
            for r in &ranges[k - b] {
                rows.push(Self::row(first, second, r, b));
            }
        }
        BlockBasis {
            rows,
            cols: monomial_count(k),
        }
    }

    /// Local monomial coefficients of `(sum_a r_a P_a(t)) Q_b(s)`.
    fn row(first: &[Vec<f64>], second: &[Vec<f64>], r: &[f64], b: usize) -> Vec<(usize, f64)> {
        let mut acc = std::collections::BTreeMap::new();
        for (a, ra) in r.iter().enumerate() {
            if *ra == 0.0 {
                continue;
            }
            for (i, pa) in first[a].iter().enumerate() {
                for (j, qb) in second[b].iter().enumerate() {
                    if pa * qb != 0.0 {
                        *acc.entry(ExponentPair::new(i, j).position()).or_insert(0.0) += ra * pa * qb;
                    }
                }
            }
        }
        acc.into_iter().collect()
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `T^T X T`: the Gram matrix, in local monomials, of a block dual `X`.
    pub fn gram_to_monomial(&self, x: &SymMatrix) -> SymMatrix {
        let mut t = nalgebra::DMatrix::zeros(self.dim(), self.cols);
        for (r, row) in self.rows.iter().enumerate() {
            for &(p, v) in row {
                t[(r, p)] = v;
            }
        }
        SymMatrix::from_dmatrix(&(t.transpose() * x.to_dmatrix() * t))
    }
}

/// Relative eigenvalue below which a direction of the marginal's Hankel
/// matrix counts as a kernel direction.
const FACE_TOL: f64 = 1e-10;

/// Range and kernel directions of a Hankel matrix, as coefficients on
/// `P_0 .. P_d`.
struct HankelSplit {
    range: Vec<Vec<f64>>,
    kernel: Vec<Vec<f64>>,
}

/// For each degree `d <= n`, the split of the Hankel matrix of `mu` in the
/// frame's first variable. Full rank yields unit vectors, leaving the basis
/// untouched.
fn marginal_splits(frame: &MomentFrame, mu: &UnivariateMoments, n: usize) -> Vec<HankelSplit> {
    let (c, w) = (frame.center.0, frame.width.0);
    let local: Vec<f64> = (0..=2 * n)
        .map(|k| {
            (0..=k)
                .map(|i| binomial(k, i) * (-c / w).powi((k - i) as i32) * w.powi(-(i as i32)) * mu.get(i))
                .sum()
        })
        .collect();
    (0..=n)
        .map(|d| {
            let h = nalgebra::DMatrix::from_fn(d + 1, d + 1, |a, b| {
                let mut acc = 0.0;
                for (i, pa) in frame.first[a].iter().enumerate() {
                    for (j, pb) in frame.first[b].iter().enumerate() {
                        acc += pa * pb * local[i + j];
                    }
                }
                acc
            });
            let eig = h.symmetric_eigen();
            let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
            let (keep, drop): (Vec<usize>, Vec<usize>) = (0..=d).partition(|&i| eig.eigenvalues[i] > FACE_TOL * top);
            if drop.is_empty() {
                let range = (0..=d)
                    .map(|a| {
                        let mut unit = vec![0.0; d + 1];
                        unit[a] = 1.0;
                        unit
                    })
                    .collect();
                return HankelSplit { range, kernel: Vec::new() };
            }
            let column = |i: usize| eig.eigenvectors.column(i).iter().copied().collect();
            HankelSplit {
                range: keep.into_iter().map(column).collect(),
                kernel: drop.into_iter().map(column).collect(),
            }
        })
        .collect()
}

/// Moments of `(c0 + s0 a, c1 + s1 b)` from moments of `(a, b)`.
fn affine_moments(values: &[f64], max_degree: usize, first: (f64, f64), second: (f64, f64)) -> Vec<f64> {
    let expand = |i: usize, (c, s): (f64, f64)| -> Vec<f64> {
        (0..=i)
            .map(|k| binomial(i, k) * c.powi((i - k) as i32) * s.powi(k as i32))
            .collect()
    };
    monomials(max_degree)
        .map(|e| {
            let (a, b) = (expand(e.i, first), expand(e.j, second));
            let mut acc = 0.0;
            for (k, ca) in a.iter().enumerate() {
                for (l, cb) in b.iter().enumerate() {
                    acc += ca * cb * values[ExponentPair::new(k, l).position()];
                }
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum Family {
    Hermite,
    Legendre,
}

impl Family {
    fn build(self, degree: usize) -> Vec<Vec<f64>> {
        match self {
            Family::Hermite => hermite_family(degree, 0.0, 1.0),
            Family::Legendre => legendre_family(degree, -1.0, 1.0),
        }
    }
}

/// Local frame of one pseudo-moment vector.
///
/// Local variables are `t = (u - center.0) / width.0` and
/// `s = (v - center.1) / width.1`, chosen so that the vector's measure
/// lives at unit scale. Every polynomial entering the relaxation is pulled
/// back to `(t, s)`, blocks are written in the product basis
/// `P_a(t) Q_b(s)` of two orthonormal families, and the solver's decision
/// variables for this vector are `w_(a,b) = L(P_a(t) Q_b(s))`. The
/// relaxation is unchanged; only its conditioning improves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFrame {
    pub offset: usize,
    pub max_degree: usize,
    pub center: (f64, f64),
    pub width: (f64, f64),
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    first_inv: Vec<Vec<f64>>,
    second_inv: Vec<Vec<f64>>,
}

impl MomentFrame {
    fn new(
        offset: usize,
        max_degree: usize,
        center: (f64, f64),
        width: (f64, f64),
        families: (Family, Family),
    ) -> Self {
        let first = families.0.build(max_degree);
        let second = families.1.build(max_degree);
        MomentFrame {
            offset,
            max_degree,
            center,
            width,
            first_inv: invert_family(&first),
            second_inv: invert_family(&second),
            first,
            second,
        }
    }

    fn len(&self) -> usize {
        monomial_count(self.max_degree)
    }

    /// `p(center + width * local)`.
    pub fn localize(&self, p: &SparsePoly) -> SparsePoly {
        p.substitute_affine((self.center.0, self.width.0), (self.center.1, self.width.1))
    }

    fn block_basis(&self, k: usize) -> BlockBasis {
        BlockBasis::product(&self.first, &self.second, k)
    }

    /// Solver coordinates of the local moment `L(t^i s^j)`, indexed globally.
    fn local_row(&self, e: ExponentPair) -> Vec<(usize, f64)> {
        let mut row = Vec::new();
        for (a, ca) in self.first_inv[e.i].iter().enumerate().take(e.i + 1) {
            for (b, cb) in self.second_inv[e.j].iter().enumerate().take(e.j + 1) {
                if ca * cb != 0.0 {
                    row.push((self.offset + ExponentPair::new(a, b).position(), ca * cb));
                }
            }
        }
        row
    }

    /// Local moments `L(t^i s^j)` at a solver point.
    pub fn local_moments(&self, x: &[f64]) -> MomentVector {
        let values = monomials(self.max_degree)
            .map(|e| self.local_row(e).iter().map(|(k, c)| c * x[*k]).sum())
            .collect();
        MomentVector {
            max_degree: self.max_degree,
            values,
        }
    }

    /// Moments `L(u^i v^j)` at a solver point.
    pub fn moments(&self, x: &[f64]) -> MomentVector {
        let local = self.local_moments(x);
        MomentVector {
            max_degree: self.max_degree,
            values: affine_moments(&local.values, self.max_degree, (self.center.0, self.width.0), (self.center.1, self.width.1)),
        }
    }

    /// Solver coordinates of this vector for given moments `L(u^i v^j)`.
    fn solver_coordinates(&self, raw: &[f64]) -> Vec<f64> {
        let local = affine_moments(
            raw,
            self.max_degree,
            (-self.center.0 / self.width.0, 1.0 / self.width.0),
            (-self.center.1 / self.width.1, 1.0 / self.width.1),
        );
        monomials(self.max_degree)
            .map(|e| {
                let mut acc = 0.0;
                for (i, ca) in self.first[e.i].iter().enumerate() {
                    for (j, cb) in self.second[e.j].iter().enumerate() {
                        acc += ca * cb * local[ExponentPair::new(i, j).position()];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Where each pseudo-moment block and each constraint family sits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoMomentLayout {
    pub metric: Metric,
    pub order: usize,
    /// Entries per pseudo-moment vector: `s(2n)`.
    pub block_len: usize,
    /// Frames of the plan pieces (one in W2 mode, two in W1 mode).
    pub plan_frames: Vec<usize>,
    /// Frame of the mixing pseudo-moments.
    pub mixing_frame: usize,
    pub frames: Vec<MomentFrame>,
    pub num_vars: usize,
    /// Constraint rows `lambda_(j,0) = mu_j`, `j = 0..=2n`.
    pub marginal_rows: Vec<usize>,
    /// Constraint rows `lambda_(0,j) - phi(p_j) = 0`, `j = 0..=2n`.
    pub coupling_rows: Vec<usize>,
    pub plan_mass_row: Option<usize>,
    pub mixing_mass_row: usize,
    pub blocks: Vec<BlockRole>,
    /// Frame and basis of each block; block duals map to Gram matrices in
    /// local monomials through [`BlockBasis::gram_to_monomial`].
    pub block_frames: Vec<usize>,
    /// Each block's polynomial `g` enters as `g / weight`.
    pub block_weights: Vec<f64>,
    /// Rows forcing the dropped directions of reduced plan blocks to vanish.
    pub kernel_rows: Vec<KernelRow>,
    pub block_bases: Vec<BlockBasis>,
    /// Inequalities `u_j` of the parameter set and their half degrees.
    pub inequalities: Vec<SparsePoly>,
    pub half_degrees: Vec<usize>,
}

impl PseudoMomentLayout {
    /// Moments of every vector, concatenated in layout order.
    pub fn moments(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars];
        for f in &self.frames {
            out[f.offset..f.offset + f.len()].copy_from_slice(f.moments(x).values());
        }
        out
    }

    /// Solver point for given moments (inverse of [`Self::moments`]).
    pub fn solver_point(&self, moments: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars];
        for f in &self.frames {
            let raw = &moments[f.offset..f.offset + f.len()];
            out[f.offset..f.offset + f.len()].copy_from_slice(&f.solver_coordinates(raw));
        }
        out
    }

    /// Pseudo-moments of plan piece `part` at a solver point.
    pub fn plan_moments(&self, x: &[f64], part: usize) -> MomentVector {
        self.frames[self.plan_frames[part]].moments(x)
    }

    /// Sum of all plan pieces.
    pub fn total_plan_moments(&self, x: &[f64]) -> MomentVector {
        let mut values = vec![0.0; self.block_len];
        for part in 0..self.plan_frames.len() {
            for (v, p) in values.iter_mut().zip(self.plan_moments(x, part).values) {
                *v += p;
            }
        }
        MomentVector {
            max_degree: 2 * self.order,
            values,
        }
    }

    pub fn mixing_moments(&self, x: &[f64]) -> MomentVector {
        self.frames[self.mixing_frame].moments(x)
    }
}

/// Collects blocks and constraints on local moments, then rewrites them in
/// solver coordinates.
struct Assembler {
    problem: SdpProblem,
    frames: Vec<MomentFrame>,
    roles: Vec<BlockRole>,
    block_frames: Vec<usize>,
    block_weights: Vec<f64>,
    bases: Vec<BlockBasis>,
    kernel_rows: Vec<KernelRow>,
}

/// Equality row `L_frame(poly) = 0` with `poly` in the frame's local
/// variables, added when a plan block is reduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub row: usize,
    pub frame: usize,
    pub poly: SparsePoly,
}

impl Assembler {
    fn new(frames: Vec<MomentFrame>) -> Self {
        let num_vars = frames.iter().map(MomentFrame::len).sum();
        Assembler {
            problem: SdpProblem::new(num_vars),
            frames,
            roles: Vec::new(),
            block_frames: Vec::new(),
            block_weights: Vec::new(),
            bases: Vec::new(),
            kernel_rows: Vec::new(),
        }
    }

    /// `L_frame(p)` as linear terms on local moments.
    fn terms(&self, frame: usize, p: &SparsePoly) -> Vec<(usize, f64)> {
        let f = &self.frames[frame];
        f.localize(p)
            .terms()
            .map(|(e, c)| (f.offset + e.position(), c))
            .collect()
    }

    /// Appends the block `T M_k(g L) T^T` on `frame` (`g = 1` when `None`).
    fn block(&mut self, frame: usize, k: usize, g: Option<&SparsePoly>, role: BlockRole) {
        let basis = self.frames[frame].block_basis(k);
        self.block_in(frame, basis, g, role);
    }

    /// Block `T M(g L) T^T` on `frame` for an explicit basis `T`.
    fn block_in(&mut self, frame: usize, basis: BlockBasis, g: Option<&SparsePoly>, role: BlockRole) {
        let f = &self.frames[frame];
        let g_local: Vec<(ExponentPair, f64)> = match g {
            Some(g) => f.localize(g).terms().collect(),
            None => vec![(ExponentPair::new(0, 0), 1.0)],
        };
        // a localizer is only fixed up to a positive factor; unit coefficients
        // keep the block on the same scale as the moment blocks
        let weight = g_local.iter().fold(0.0f64, |m, (_, c)| m.max(c.abs()));
        let g_local: Vec<(ExponentPair, f64)> = g_local.into_iter().map(|(e, c)| (e, c / weight)).collect();
        let offset = f.offset;
        let dim = basis.dim();
        let block = self.problem.add_block(dim);
        let mut acc = std::collections::BTreeMap::new();
        for r in 0..dim {
            for c in r..dim {
                acc.clear();
                for &(p, tp) in &basis.rows[r] {
                    let ep = ExponentPair::at(p);
                    for &(q, tq) in &basis.rows[c] {
                        let base = ep.shifted(ExponentPair::at(q));
                        for &(e, ge) in &g_local {
                            *acc.entry(base.shifted(e).position()).or_insert(0.0) += tp * tq * ge;
                        }
                    }
                }
                for (&pos, &coef) in &acc {
                    self.problem.add_psd_entry(block, offset + pos, r, c, coef);
                }
            }
        }
        self.roles.push(role);
        self.block_weights.push(weight);
        self.block_frames.push(frame);
        self.bases.push(basis);
    }

    /// `M_n` of a plan piece and its localizers `M_(n-1)(g lambda)`.
    ///
    /// A polynomial `q(x)` of degree `d` with `mu(q^2) = 0` makes every
    /// `q(x) m(x, y)`, `deg m <= n - d`, a kernel vector of the plan's moment
    /// matrix, since the marginal rows pin `lambda(q^2) = mu(q^2)`. PSD then
    /// forces `L(q w) = 0` for every monomial `w` of degree `<= 2n - d`.
    /// Those rows are added explicitly and the kernel directions are dropped
    /// from every block of the piece, localizers included (their kernel
    /// entries are among the same rows). The result is an equivalent
    /// formulation that has a strictly feasible point when `mu` is finitely
    /// atomic. Elimination discards the redundant rows.
    fn plan_blocks(&mut self, frame: usize, mu: &UnivariateMoments, n: usize, part: usize, localizers: &[SparsePoly]) {
        let f = &self.frames[frame];
        let splits = marginal_splits(f, mu, n);
        let mut kernel_polys = Vec::new();
        for (d, split) in splits.iter().enumerate() {
            for q in &split.kernel {
                let mut q_local = vec![0.0; d + 1];
                for (a, qa) in q.iter().enumerate() {
                    for (i, c) in f.first[a].iter().enumerate() {
                        q_local[i] += qa * c;
                    }
                }
                for w in monomials(2 * n - d) {
                    let mut poly = SparsePoly::zero(VarPair::Xy);
                    for (i, c) in q_local.iter().enumerate() {
                        if *c != 0.0 {
                            poly.add_term(ExponentPair::new(i + w.i, w.j), *c);
                        }
                    }
                    kernel_polys.push(poly);
                }
            }
        }
        let offset = f.offset;
        let ranges: Vec<Vec<Vec<f64>>> = splits.into_iter().map(|s| s.range).collect();
        let basis = |k: usize| BlockBasis::reduced(&f.first, &f.second, k, &ranges);
        let moment_basis = basis(n);
        let localizer_bases: Vec<BlockBasis> = localizers.iter().map(|_| basis(n - 1)).collect();
        for poly in kernel_polys {
            let terms = poly.terms().map(|(e, c)| (offset + e.position(), c)).collect();
            let row = self.problem.add_constraint(terms, 0.0);
            self.kernel_rows.push(KernelRow { row, frame, poly });
        }
        self.block_in(frame, moment_basis, None, BlockRole::PlanMoment { part });
        for (poly, basis) in localizers.iter().zip(localizer_bases) {
            let role = BlockRole::PlanLocalizer { part, poly: poly.clone() };
            self.block_in(frame, basis, Some(poly), role);
        }
    }

    fn mixing_blocks(&mut self, frame: usize, set: &SemialgebraicSet, n: usize) {
        self.block(frame, n, None, BlockRole::MixingMoment);
        for (index, (u, &d)) in set.inequalities().iter().zip(set.half_degrees()).enumerate() {
            self.block(frame, n - d, Some(u), BlockRole::MixingLocalizer { index });
        }
    }

    /// Marginal and coupling rows on the summed plan pieces, then both mass
    /// normalizations.
    fn marginals(&mut self, mu: &UnivariateMoments, plans: &[usize], mixing: usize, n: usize) -> Rows {
        let xy = VarPair::Xy;
        let polys = GaussianMomentPolys::new(2 * n);
        let mut rows = Rows::default();
        for j in 0..=2 * n {
            let xj = SparsePoly::monomial(xy, ExponentPair::new(j, 0), 1.0);
            let terms = plans.iter().flat_map(|&p| self.terms(p, &xj)).collect();
            rows.marginal.push(self.problem.add_constraint(terms, mu.get(j)));
        }
        for j in 0..=2 * n {
            let yj = SparsePoly::monomial(xy, ExponentPair::new(0, j), 1.0);
            let mut terms: Vec<(usize, f64)> = plans.iter().flat_map(|&p| self.terms(p, &yj)).collect();
            terms.extend(self.terms(mixing, &polys.poly(j).scale(-1.0)));
            rows.coupling.push(self.problem.add_constraint(terms, 0.0));
        }
        let one = SparsePoly::constant(xy, 1.0);
        let plan_mass = plans.iter().flat_map(|&p| self.terms(p, &one)).collect();
        rows.plan_mass = Some(self.problem.add_constraint(plan_mass, 1.0));
        rows.mixing_mass = self.problem.add_constraint(vec![(self.frames[mixing].offset, 1.0)], 1.0);
        rows
    }

    fn finish(self, n: usize, metric: Metric, plans: Vec<usize>, mixing: usize, rows: Rows, set: &SemialgebraicSet) -> (SdpProblem, PseudoMomentLayout) {
        let num_vars = self.problem.num_vars();
        let mut subst = vec![Vec::new(); num_vars];
        for f in &self.frames {
            for e in monomials(f.max_degree) {
                subst[f.offset + e.position()] = f.local_row(e);
            }
        }
        let problem = self.problem.substitute(num_vars, &subst);
        let layout = PseudoMomentLayout {
            metric,
            order: n,
            block_len: monomial_count(2 * n),
            plan_frames: plans,
            mixing_frame: mixing,
            frames: self.frames,
            num_vars,
            marginal_rows: rows.marginal,
            coupling_rows: rows.coupling,
            plan_mass_row: rows.plan_mass,
            mixing_mass_row: rows.mixing_mass,
            blocks: self.roles,
            block_frames: self.block_frames,
            block_weights: self.block_weights,
            kernel_rows: self.kernel_rows,
            block_bases: self.bases,
            inequalities: set.inequalities().to_vec(),
            half_degrees: set.half_degrees().to_vec(),
        };
        (problem, layout)
    }
}

#[derive(Default)]
struct Rows {
    marginal: Vec<usize>,
    coupling: Vec<usize>,
    plan_mass: Option<usize>,
    mixing_mass: usize,
}

/// Plan frame: `x` around a Gaussian fitted to `mu`, `y` around a Gaussian
/// fitted to the mixture with uniform mixing measure on the parameter set.
fn plan_frame(offset: usize, mu: &UnivariateMoments, set: &SemialgebraicSet, n: usize) -> MomentFrame {
    let (m_range, s_range) = parameter_ranges(set);
    let uniform_second = |(lo, hi): (f64, f64)| (lo * lo + lo * hi + hi * hi) / 3.0;
    let m_mean = 0.5 * (m_range.0 + m_range.1);
    let y_var = uniform_second(m_range) - m_mean * m_mean + uniform_second(s_range);
    MomentFrame::new(
        offset,
        2 * n,
        (mu.mean(), m_mean),
        (
            mu.variance().sqrt().max(PLAN_SPREAD_FLOOR),
            y_var.sqrt().max(PLAN_SPREAD_FLOOR),
        ),
        (Family::Hermite, Family::Hermite),
    )
}

/// Mixing frame: the bounding box of the parameter set mapped to `[-1, 1]^2`.
fn mixing_frame(offset: usize, set: &SemialgebraicSet, n: usize) -> MomentFrame {
    let (m, s) = parameter_ranges(set);
    MomentFrame::new(
        offset,
        2 * n,
        (0.5 * (m.0 + m.1), 0.5 * (s.0 + s.1)),
        (0.5 * (m.1 - m.0), 0.5 * (s.1 - s.0)),
        (Family::Legendre, Family::Legendre),
    )
}

fn parameter_ranges(set: &SemialgebraicSet) -> ((f64, f64), (f64, f64)) {
    match set.bounds() {
        Some(b) => ((b.m_lo, b.m_hi), (b.sigma_lo, b.sigma_hi)),
        None => {
            let r = set.radius();
            ((-r, r), (-r, r))
        }
    }
}

fn check_inputs(mu: &UnivariateMoments, set: &SemialgebraicSet, n: usize) -> Result<()> {
    if n < set.n0() {
        return Err(Error::Usage(format!(
            "relaxation order {n} is below the minimal order {}",
            set.n0()
        )));
    }
    if mu.max_degree() < 2 * n {
        return Err(Error::InsufficientData {
            needed: 2 * n + 1,
            available: mu.max_degree() + 1,
        });
    }
    Ok(())
}

/// Order-`n` W2 relaxation.
pub fn assemble_w2(
    mu: &UnivariateMoments,
    set: &SemialgebraicSet,
    n: usize,
) -> Result<(SdpProblem, PseudoMomentLayout)> {
    check_inputs(mu, set, n)?;
    let len = monomial_count(2 * n);
    let mut asm = Assembler::new(vec![plan_frame(0, mu, set, n), mixing_frame(len, set, n)]);
    let (plan, mixing) = (0, 1);
    let cost = SparsePoly::from_terms(VarPair::Xy, [((2, 0), 1.0), ((1, 1), -2.0), ((0, 2), 1.0)]);
    let objective = asm.terms(plan, &cost);
    asm.problem.set_objective(objective, 0.0);
    let rows = asm.marginals(mu, &[plan], mixing, n);
    asm.plan_blocks(plan, mu, n, 0, &[]);
    asm.mixing_blocks(mixing, set, n);
    Ok(asm.finish(n, Metric::W2, vec![plan], mixing, rows, set))
}

/// Order-`n` W1 relaxation. The plan is split as `lambda_1 + lambda_2`
/// with `lambda_1` on `{x <= y}` and `lambda_2` on `{x >= y}`, so that
/// `|x - y|` becomes linear on each piece. Both pieces are additionally
/// localized on `|x|, |y| <= y_box`.
pub fn assemble_w1(
    mu: &UnivariateMoments,
    set: &SemialgebraicSet,
    n: usize,
    y_box: f64,
) -> Result<(SdpProblem, PseudoMomentLayout)> {
    check_inputs(mu, set, n)?;
    if !(y_box > 0.0 && y_box.is_finite()) {
        return Err(Error::Usage(format!("y_box must be positive, got {y_box}")));
    }
    let len = monomial_count(2 * n);
    let mut asm = Assembler::new(vec![
        plan_frame(0, mu, set, n),
        plan_frame(len, mu, set, n),
        mixing_frame(2 * len, set, n),
    ]);
    let (first, second, mixing) = (0, 1, 2);
    let xy = VarPair::Xy;
    let y_minus_x = SparsePoly::from_terms(xy, [((0, 1), 1.0), ((1, 0), -1.0)]);
    let mut objective = asm.terms(first, &y_minus_x);
    objective.extend(asm.terms(second, &y_minus_x.scale(-1.0)));
    asm.problem.set_objective(objective, 0.0);
    let rows = asm.marginals(mu, &[first, second], mixing, n);

    let box_x = SparsePoly::from_terms(xy, [((0, 0), y_box * y_box), ((2, 0), -1.0)]);
    let box_y = SparsePoly::from_terms(xy, [((0, 0), y_box * y_box), ((0, 2), -1.0)]);
    for (part, frame, sign) in [(0, first, 1.0), (1, second, -1.0)] {
        let localizers = [y_minus_x.scale(sign), box_x.clone(), box_y.clone()];
        asm.plan_blocks(frame, mu, n, part, &localizers);
    }
    asm.mixing_blocks(mixing, set, n);
    Ok(asm.finish(n, Metric::W1, vec![first, second], mixing, rows, set))
}

/// Selects a point of the zero-cost face of the order-`n` W2 relaxation.
///
/// When the relaxation value is zero, every optimal `phi` satisfies
/// `phi(p_j) = mu_j` for all `j <= 2n`, and the optimal face is usually not
/// a single point: a component `N(m, s)` can be traded for a spread of means
/// with a smaller common `sigma`. Interior-point solvers return the
/// relative interior of that face, which is never flat. Maximizing
/// `phi(sigma^2)` over the face (equivalently minimizing the variance of the
/// means, since `phi(m^2 + sigma^2) = mu_2` is fixed) picks the most
/// deconvolved mixing measure.
pub fn assemble_zero_cost_face(
    mu: &UnivariateMoments,
    set: &SemialgebraicSet,
    n: usize,
) -> Result<(SdpProblem, PseudoMomentLayout)> {
    check_inputs(mu, set, n)?;
    let mut asm = Assembler::new(vec![mixing_frame(0, set, n)]);
    let mixing = 0;
    let sigma2 = SparsePoly::monomial(VarPair::MSigma, ExponentPair::new(0, 2), -1.0);
    let objective = asm.terms(mixing, &sigma2);
    asm.problem.set_objective(objective, 0.0);
    let polys = GaussianMomentPolys::new(2 * n);
    let mut rows = Rows::default();
    for j in 0..=2 * n {
        let terms = asm.terms(mixing, polys.poly(j));
        rows.coupling.push(asm.problem.add_constraint(terms, mu.get(j)));
    }
    rows.mixing_mass = asm.problem.add_constraint(vec![(0, 1.0)], 1.0);
    asm.mixing_blocks(mixing, set, n);
    Ok(asm.finish(n, Metric::W2, Vec::new(), mixing, rows, set))
}

/// Affine change of variables `x' = (x - center) / scale`, applied to
/// `x`, `y` and `m`, with `sigma' = sigma / scale`. Gaussian moment
/// polynomials are homogeneous, so the relaxation keeps its form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub center: f64,
    pub scale: f64,
}

impl Scaling {
    pub const IDENTITY: Scaling = Scaling {
        center: 0.0,
        scale: 1.0,
    };

    /// Maps the parameter set into the unit ball around its m-midpoint.
    pub fn for_set(set: &SemialgebraicSet) -> Scaling {
        match set.bounds() {
            Some(b) => {
                let center = 0.5 * (b.m_lo + b.m_hi);
                let half = 0.5 * (b.m_hi - b.m_lo);
                let scale = (half * half + b.sigma_hi * b.sigma_hi).sqrt();
                Scaling { center, scale }
            }
            None => Scaling {
                center: 0.0,
                scale: set.radius(),
            },
        }
    }

    pub fn moments(&self, mu: &UnivariateMoments) -> UnivariateMoments {
        mu.affine_pushforward(self.center, self.scale)
    }

    pub fn set(&self, set: &SemialgebraicSet) -> SemialgebraicSet {
        set.rescaled(self.center, self.scale)
    }

    /// Parameters `(m, sigma)` back in original coordinates.
    pub fn unscale_point(&self, m: f64, sigma: f64) -> (f64, f64) {
        (self.center + self.scale * m, self.scale * sigma)
    }

    pub fn unscale_mixing(&self, phi: &MomentVector) -> MomentVector {
        phi.affine_pushforward(self.center, self.scale)
    }

    /// Transport cost back in original units.
    pub fn unscale_cost(&self, value: f64, metric: Metric) -> f64 {
        match metric {
            Metric::W2 => value * self.scale * self.scale,
            Metric::W1 => value * self.scale,
        }
    }
}

/// SOS certificate read off a solved W2 relaxation.
///
/// `q` and `g` are coefficient vectors in the relaxation's own variables.
/// Gram matrices refer to the local monomials of the block's frame (see
/// [`MomentFrame`]), and both identities are checked coefficient-wise in
/// those local variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    /// Coefficients of `q(x)`, degree `<= 2n`.
    pub q: Vec<f64>,
    /// Coefficients of `g(y)`, degree `<= 2n`.
    pub g: Vec<f64>,
    /// Gram matrix of the SOS `s(x, y)`.
    pub sos_gram: SymMatrix,
    /// Gram matrices of `theta_0, theta_1, ...` (`theta_0` pairs with `u_0 = 1`).
    pub theta_grams: Vec<SymMatrix>,
    pub dual_objective: f64,
    /// Max coefficient of `(x - y)^2 - q(x) - g(y) - s(x, y) - k(x, y)`,
    /// where `k` collects the multipliers of the kernel rows of a reduced
    /// plan block. `k` is a combination of polynomials `p w` with `p` in the
    /// kernel of the marginal Hankel matrix, so it vanishes on `supp(mu)`.
    pub transport_residual: f64,
    /// Max coefficient of `sum_k g_k p_k - sum_j theta_j u_j`.
    pub mixture_residual: f64,
    /// Smallest eigenvalue over all Gram matrices.
    pub min_gram_eigenvalue: f64,
    pub identities_hold: bool,
}

fn gram_poly(gram: &SymMatrix, k: usize, vars: VarPair) -> SparsePoly {
    let basis: Vec<ExponentPair> = monomials(k).collect();
    let mut p = SparsePoly::zero(vars);
    for r in 0..basis.len() {
        for c in 0..basis.len() {
            p.add_term(basis[r].shifted(basis[c]), gram.get(r, c));
        }
    }
    p
}

fn max_coeff(p: &SparsePoly) -> f64 {
    p.terms().fold(0.0, |m, (_, c)| m.max(c.abs()))
}

/// Reads the SOS certificate of a W2 relaxation from the solver's dual
/// variables and checks both polynomial identities.
pub fn extract_dual(solution: &SdpSolution, layout: &PseudoMomentLayout) -> Result<DualCertificate> {
    if solution.status != SolveStatus::Optimal {
        return Err(Error::Unavailable(format!(
            "solver status is {}",
            solution.status.as_str()
        )));
    }
    if layout.metric != Metric::W2 || layout.plan_frames.len() != 1 {
        return Err(Error::Unavailable("certificates are defined for the W2 relaxation only".into()));
    }
    let n = layout.order;
    let nu = &solution.dual_vector;
    let mut q: Vec<f64> = layout.marginal_rows.iter().map(|&r| nu[r]).collect();
    let mut g: Vec<f64> = layout.coupling_rows.iter().map(|&r| nu[r]).collect();
    // the two mass rows duplicate the degree-0 marginal and coupling rows
    let plan_mass = layout.plan_mass_row.map_or(0.0, |r| nu[r]);
    let mixing_mass = nu[layout.mixing_mass_row];
    q[0] += plan_mass + mixing_mass;
    g[0] -= mixing_mass;

    let plan = &layout.frames[layout.plan_frames[0]];
    let mixing = &layout.frames[layout.mixing_frame];
    let mut sos_gram = None;
    let mut theta_grams = Vec::new();
    let mut theta_sum = SparsePoly::zero(VarPair::MSigma);
    for ((((role, basis), frame), weight), dual) in layout
        .blocks
        .iter()
        .zip(&layout.block_bases)
        .zip(&layout.block_frames)
        .zip(&layout.block_weights)
        .zip(&solution.dual_blocks)
    {
        let gram = basis.gram_to_monomial(dual);
        let gram = SymMatrix::from_fn(gram.dim(), |r, c| gram.get(r, c) / weight);
        match role {
            BlockRole::PlanMoment { .. } => sos_gram = Some(gram),
            BlockRole::MixingMoment => {
                theta_sum = theta_sum.add(&gram_poly(&gram, n, VarPair::MSigma))?;
                theta_grams.push(gram);
            }
            BlockRole::MixingLocalizer { index } => {
                let k = n - layout.half_degrees[*index];
                let u = layout.frames[*frame].localize(&layout.inequalities[*index]);
                theta_sum = theta_sum.add(&gram_poly(&gram, k, VarPair::MSigma).mul(&u)?)?;
                theta_grams.push(gram);
            }
            BlockRole::PlanLocalizer { .. } => {}
        }
    }
    let sos_gram = sos_gram.ok_or_else(|| Error::Unavailable("no plan moment block".into()))?;

    let xy = VarPair::Xy;
    let mut transport = SparsePoly::from_terms(xy, [((2, 0), 1.0), ((1, 1), -2.0), ((0, 2), 1.0)]);
    for j in 0..=2 * n {
        transport.add_term(ExponentPair::new(j, 0), -q[j]);
        transport.add_term(ExponentPair::new(0, j), -g[j]);
    }
    let mut transport = plan.localize(&transport).sub(&gram_poly(&sos_gram, n, xy))?;
    for k in &layout.kernel_rows {
        transport = transport.sub(&k.poly.scale(nu[k.row]))?;
    }

    let polys = GaussianMomentPolys::new(2 * n);
    let mut mixture = SparsePoly::zero(VarPair::MSigma);
    for (gk, p) in g.iter().zip(polys.iter()) {
        mixture = mixture.add(&p.scale(*gk))?;
    }
    let mixture = mixing.localize(&mixture).sub(&theta_sum)?;

    let min_gram_eigenvalue = std::iter::once(&sos_gram)
        .chain(theta_grams.iter())
        .flat_map(|m| m.eigenvalues().into_iter().next())
        .fold(f64::INFINITY, f64::min);
    let transport_residual = max_coeff(&transport);
    let mixture_residual = max_coeff(&mixture);
    Ok(DualCertificate {
        q,
        g,
        sos_gram,
        theta_grams,
        dual_objective: solution.dual_obj,
        transport_residual,
        mixture_residual,
        min_gram_eigenvalue,
        identities_hold: transport_residual <= IDENTITY_TOL && mixture_residual <= IDENTITY_TOL,
    })
}
