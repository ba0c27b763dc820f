//! Bivariate exponent indexing and sparse polynomial arithmetic.
//!
//! Monomials are ordered graded-lexicographically:
//! `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), (3,0), ...`, i.e. by total degree
//! and, inside a degree, by decreasing power of the first variable. Every
//! moment vector and moment matrix in the crate uses this ordering.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent `(i, j)` of the monomial `a^i b^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentPair {
    pub i: usize,
    pub j: usize,
}

impl ExponentPair {
    pub const ZERO: ExponentPair = ExponentPair { i: 0, j: 0 };

    pub const fn new(i: usize, j: usize) -> Self {
        ExponentPair { i, j }
    }

    pub const fn degree(self) -> usize {
        self.i + self.j
    }

    /// Position in the graded-lexicographic enumeration.
    pub const fn position(self) -> usize {
        let d = self.i + self.j;
        d * (d + 1) / 2 + self.j
    }

    /// Inverse of [`ExponentPair::position`].
    pub fn at(position: usize) -> Self {
        // largest d with d(d+1)/2 <= position
        let mut d = (((8 * position + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
        while (d + 1) * (d + 2) / 2 <= position {
            d += 1;
        }
        while d * (d + 1) / 2 > position {
            d -= 1;
        }
        let j = position - d * (d + 1) / 2;
        ExponentPair { i: d - j, j }
    }

    pub const fn shifted(self, other: ExponentPair) -> Self {
        ExponentPair {
            i: self.i + other.i,
            j: self.j + other.j,
        }
    }
}

impl Ord for ExponentPair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.position().cmp(&other.position())
    }
}

impl PartialOrd for ExponentPair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Number of bivariate monomials of total degree at most `degree`.
pub const fn monomial_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Graded position of `e` among the exponents of degree at most `2 * order`.
pub fn graded_index(e: ExponentPair, order: usize) -> Result<usize> {
    if e.degree() > 2 * order {
        return Err(Error::OutOfRange {
            degree: e.degree(),
            order,
        });
    }
    Ok(e.position())
}

/// All exponents of total degree at most `degree`, in graded order.
pub fn monomials(degree: usize) -> impl Iterator<Item = ExponentPair> {
    (0..monomial_count(degree)).map(ExponentPair::at)
}

/// Which pair of indeterminates a polynomial is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarPair {
    /// Transport coordinates `(x, y)`.
    Xy,
    /// Gaussian parameters `(m, sigma)`.
    MSigma,
}

impl VarPair {
    fn names(self) -> (&'static str, &'static str) {
        match self {
            VarPair::Xy => ("x", "y"),
            VarPair::MSigma => ("m", "s"),
        }
    }
}

/// Sparse bivariate polynomial with real coefficients. Zero coefficients are
/// never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsePoly {
    vars: VarPair,
    terms: BTreeMap<ExponentPair, f64>,
}

impl SparsePoly {
    pub fn zero(vars: VarPair) -> Self {
        SparsePoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: VarPair, c: f64) -> Self {
        Self::monomial(vars, ExponentPair::ZERO, c)
    }

    pub fn monomial(vars: VarPair, e: ExponentPair, c: f64) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(e, c);
        p
    }

    /// Builds a polynomial from `((i, j), coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(vars: VarPair, terms: I) -> Self
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        let mut p = Self::zero(vars);
        for ((i, j), c) in terms {
            p.add_term(ExponentPair::new(i, j), c);
        }
        p
    }

    /// First variable: `x` or `m`.
    pub fn first(vars: VarPair) -> Self {
        Self::monomial(vars, ExponentPair::new(1, 0), 1.0)
    }

    /// Second variable: `y` or `sigma`.
    pub fn second(vars: VarPair) -> Self {
        Self::monomial(vars, ExponentPair::new(0, 1), 1.0)
    }

    pub fn vars(&self) -> VarPair {
        self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: ExponentPair, c: f64) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(e).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn coeff(&self, e: ExponentPair) -> f64 {
        self.terms.get(&e).copied().unwrap_or(0.0)
    }

    /// Terms in graded order.
    pub fn terms(&self) -> impl Iterator<Item = (ExponentPair, f64)> + '_ {
        self.terms.iter().map(|(e, c)| (*e, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * a.powi(e.i as i32) * b.powi(e.j as i32))
            .sum()
    }

    fn check_vars(&self, other: &SparsePoly) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::Usage(format!(
                "variable pairs differ: {:?} vs {:?}",
                self.vars, other.vars
            )));
        }
        Ok(())
    }

    pub fn mul(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.check_vars(other)?;
        let mut out = SparsePoly::zero(self.vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.shifted(*eb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SparsePoly) -> Result<SparsePoly> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> SparsePoly {
        let mut out = SparsePoly::zero(self.vars);
        for (e, c) in &self.terms {
            out.add_term(*e, c * s);
        }
        out
    }

    pub fn pow(&self, k: usize) -> SparsePoly {
        let mut out = SparsePoly::constant(self.vars, 1.0);
        for _ in 0..k {
            out = out.mul(self).expect("same variable pair");
        }
        out
    }

    /// Returns `p(o1 + s1 * a, o2 + s2 * b)`.
    pub fn substitute_affine(&self, first: (f64, f64), second: (f64, f64)) -> SparsePoly {
        let a = SparsePoly::from_terms(self.vars, [((0, 0), first.0), ((1, 0), first.1)]);
        let b = SparsePoly::from_terms(self.vars, [((0, 0), second.0), ((0, 1), second.1)]);
        let mut out = SparsePoly::zero(self.vars);
        for (e, c) in &self.terms {
            let t = a.pow(e.i).mul(&b.pow(e.j)).expect("same variable pair");
            for (et, ct) in t.terms() {
                out.add_term(et, c * ct);
            }
        }
        out
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let (a, b) = self.vars.names();
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            write!(f, "{}", c.abs())?;
            if e.i > 0 {
                write!(f, "*{a}^{}", e.i)?;
            }
            if e.j > 0 {
                write!(f, "*{b}^{}", e.j)?;
            }
        }
        Ok(())
    }
}

/// Dense symmetric matrix. Writes go to both triangles, so the stored
/// matrix is exactly symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.set(k, k, 1.0);
        }
        m
    }

    /// Builds from the upper triangle of `f(row, col)`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in r..dim {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Symmetrizes an arbitrary square matrix as `(a + a^T) / 2`.
    pub fn from_dmatrix(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "square matrix required");
        Self::from_fn(a.nrows(), |r, c| 0.5 * (a[(r, c)] + a[(c, r)]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.entries[r * self.dim + c] = v;
        self.entries[c * self.dim + r] = v;
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: f64) {
        let cur = self.get(r, c);
        self.set(r, c, cur + v);
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    /// Leading principal submatrix of size `k`.
    pub fn leading(&self, k: usize) -> SymMatrix {
        Self::from_fn(k, |r, c| self.get(r, c))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = self.to_dmatrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
