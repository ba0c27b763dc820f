//! Gaussian moment polynomials and truncated moments of input measures.
//!
//! For `X ~ N(m, sigma^2)` every raw moment `E[X^j]` is a polynomial
//! `p_j(m, sigma)`. It is obtained by writing `X = m + U` with `U` centered,
//! expanding `(U + m)^j` binomially and replacing `E[U^k]` by the central
//! moment `sigma^k (k-1)!!` (zero for odd `k`). Only even powers of `sigma`
//! appear, and `p_j` is homogeneous of degree `j`.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{ExponentPair, SparsePoly, VarPair};

const WEIGHT_TOL: f64 = 1e-12;

/// `k!!` for `k >= -1`, with `(-1)!! = 0!! = 1`.
pub fn double_factorial(k: i64) -> f64 {
    let mut acc = 1.0;
    let mut t = k;
    while t > 1 {
        acc *= t as f64;
        t -= 2;
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// `E[(X - m)^j]` for `X ~ N(m, sigma^2)`.
pub fn central_moment(j: usize, sigma: f64) -> Result<f64> {
    if sigma < 0.0 || sigma.is_nan() {
        return Err(Error::Domain(format!("standard deviation {sigma} is negative")));
    }
    if j % 2 == 1 {
        return Ok(0.0);
    }
    Ok(sigma.powi(j as i32) * double_factorial(j as i64 - 1))
}

/// The polynomial `p_j(m, sigma) = E[X^j]`, `X ~ N(m, sigma^2)`.
pub fn gaussian_moment_poly(j: usize) -> SparsePoly {
    let mut p = SparsePoly::zero(VarPair::MSigma);
    for k in (0..=j).step_by(2) {
        let c = binomial(j, k) * double_factorial(k as i64 - 1);
        p.add_term(ExponentPair::new(j - k, k), c);
    }
    p
}

/// `p_0, ..., p_max_degree`, built once and reused.
#[derive(Debug, Clone)]
pub struct GaussianMomentPolys {
    polys: Vec<SparsePoly>,
}

impl GaussianMomentPolys {
    pub fn new(max_degree: usize) -> Self {
        GaussianMomentPolys {
            polys: (0..=max_degree).map(gaussian_moment_poly).collect(),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn poly(&self, j: usize) -> &SparsePoly {
        &self.polys[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &SparsePoly> {
        self.polys.iter()
    }

    /// `(p_0(m, s), ..., p_D(m, s))`.
    pub fn evaluate(&self, m: f64, sigma: f64) -> Vec<f64> {
        self.polys.iter().map(|p| p.eval(m, sigma)).collect()
    }
}

/// Upper bound `(2 M j')^(2 j')` on `p_{2j'}` over `|m| < M, 0 <= sigma < M`,
/// for the even degree `degree = 2 j'`.
pub fn moment_poly_bound(degree: usize, half_width: f64) -> Result<f64> {
    if degree % 2 == 1 {
        return Err(Error::Usage(format!("bound needs an even degree, got {degree}")));
    }
    if half_width <= 0.0 || half_width.is_nan() {
        return Err(Error::Usage(format!("bound needs M > 0, got {half_width}")));
    }
    let half = (degree / 2) as f64;
    Ok((2.0 * half_width * half).powi(degree as i32))
}

/// One Gaussian component `weight * N(mean, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub sigma: f64,
}

/// One point mass `weight * delta_location`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracAtom {
    pub weight: f64,
    pub location: f64,
}

/// The input probability measure on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    GaussianMixture { components: Vec<GaussianComponent> },
    DiracMixture { atoms: Vec<DiracAtom> },
    UniformInterval { a: f64, b: f64 },
    RawMoments { moments: Vec<f64> },
    /// Plain text, one real per line; `#` starts a comment.
    Samples { path: PathBuf },
}

impl MeasureSpec {
    pub fn gaussian(mean: f64, sigma: f64) -> Self {
        MeasureSpec::GaussianMixture {
            components: vec![GaussianComponent {
                weight: 1.0,
                mean,
                sigma,
            }],
        }
    }

    pub fn dirac(location: f64) -> Self {
        MeasureSpec::DiracMixture {
            atoms: vec![DiracAtom {
                weight: 1.0,
                location,
            }],
        }
    }

    /// Checks the invariants that can be checked without touching the
    /// filesystem.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMeasure(msg));
        match self {
            MeasureSpec::GaussianMixture { components } => {
                check_weights(components.iter().map(|c| c.weight))?;
                for c in components {
                    if !c.mean.is_finite() || !c.sigma.is_finite() {
                        return bad(format!("non-finite component {c:?}"));
                    }
                    if c.sigma < 0.0 {
                        return bad(format!("negative sigma {}", c.sigma));
                    }
                }
            }
            MeasureSpec::DiracMixture { atoms } => {
                check_weights(atoms.iter().map(|a| a.weight))?;
                if atoms.iter().any(|a| !a.location.is_finite()) {
                    return bad("non-finite atom location".into());
                }
            }
            MeasureSpec::UniformInterval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad(format!("uniform interval needs a < b, got [{a}, {b}]"));
                }
            }
            MeasureSpec::RawMoments { moments } => {
                let Some(&mass) = moments.first() else {
                    return bad("raw moment list is empty".into());
                };
                if (mass - 1.0).abs() > WEIGHT_TOL {
                    return bad(format!("raw moments must start with mass 1, got {mass}"));
                }
                if moments.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite raw moment".into());
                }
            }
            MeasureSpec::Samples { .. } => {}
        }
        Ok(())
    }

    /// Resolves a relative sample path against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let MeasureSpec::Samples { path } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut count = 0;
    for w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidMeasure(format!("invalid weight {w}")));
        }
        total += w;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidMeasure("mixture has no components".into()));
    }
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Truncated moments `(mu_0, ..., mu_D)` of a measure on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnivariateMoments(Vec<f64>);

impl UnivariateMoments {
    pub fn new(values: Vec<f64>) -> Self {
        UnivariateMoments(values)
    }

    pub fn max_degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn truncated(&self, max_degree: usize) -> Result<Self> {
        if self.0.len() < max_degree + 1 {
            return Err(Error::InsufficientData {
                needed: max_degree + 1,
                available: self.0.len(),
            });
        }
        Ok(UnivariateMoments(self.0[..=max_degree].to_vec()))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Moments of `(X - center) / scale`.
    pub fn affine_pushforward(&self, center: f64, scale: f64) -> Self {
        let d = self.max_degree();
        let out = (0..=d)
            .map(|j| {
                let s: f64 = (0..=j)
                    .map(|k| binomial(j, k) * (-center).powi((j - k) as i32) * self.0[k])
                    .sum();
                s / scale.powi(j as i32)
            })
            .collect();
        UnivariateMoments(out)
    }

    pub fn mean(&self) -> f64 {
        self.0.get(1).copied().unwrap_or(0.0)
    }

    pub fn variance(&self) -> f64 {
        match self.0.get(2) {
            Some(m2) => (m2 - self.mean().powi(2)).max(0.0),
            None => 0.0,
        }
    }
}

/// `(mu_0, ..., mu_max_degree)` of the measure described by `spec`.
pub fn moments_of_measure(spec: &MeasureSpec, max_degree: usize) -> Result<UnivariateMoments> {
    spec.validate()?;
    let values = match spec {
        MeasureSpec::GaussianMixture { components } => {
            let polys = GaussianMomentPolys::new(max_degree);
            let mut acc = vec![0.0; max_degree + 1];
            for c in components {
                for (slot, p) in acc.iter_mut().zip(polys.iter()) {
                    *slot += c.weight * p.eval(c.mean, c.sigma);
                }
            }
            acc
        }
        MeasureSpec::DiracMixture { atoms } => (0..=max_degree)
            .map(|j| atoms.iter().map(|a| a.weight * a.location.powi(j as i32)).sum())
            .collect(),
        MeasureSpec::UniformInterval { a, b } => (0..=max_degree)
            .map(|j| {
                let k = (j + 1) as i32;
                (b.powi(k) - a.powi(k)) / ((j + 1) as f64 * (b - a))
            })
            .collect(),
        MeasureSpec::RawMoments { moments } => {
            return UnivariateMoments(moments.clone()).truncated(max_degree);
        }
        MeasureSpec::Samples { path } => {
            let samples = read_samples(path)?;
            let count = samples.len() as f64;
            let mut acc = vec![0.0; max_degree + 1];
            for x in &samples {
                let mut pw = 1.0;
                for slot in acc.iter_mut() {
                    *slot += pw;
                    pw *= x;
                }
            }
            acc.iter_mut().for_each(|v| *v /= count);
            acc
        }
    };
    Ok(UnivariateMoments(values))
}

/// Reads a sample file: one real per line, blank lines and `#` comments
/// ignored.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let value: f64 = content.parse().map_err(|_| Error::SampleParse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: format!("cannot parse {content:?} as a real number"),
        })?;
        if !value.is_finite() {
            return Err(Error::SampleParse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: "non-finite sample".into(),
            });
        }
        out.push(value);
    }
    if out.is_empty() {
        return Err(Error::SampleParse {
            path: path.to_path_buf(),
            line: 0,
            msg: "no samples found".into(),
        });
    }
    Ok(out)
}
