//! Compact parameter sets `S = {(m, sigma) : u_j(m, sigma) >= 0}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{SparsePoly, VarPair};

const MEMBERSHIP_TOL: f64 = 1e-10;
const BALL_MARGIN: f64 = 1.001;

/// Axis-aligned bounds of a box-shaped parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub m_lo: f64,
    pub m_hi: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

impl BoxBounds {
    pub fn contains(&self, m: f64, sigma: f64) -> bool {
        m >= self.m_lo && m <= self.m_hi && sigma >= self.sigma_lo && sigma <= self.sigma_hi
    }

    /// Nearest point of the box.
    pub fn clamp(&self, m: f64, sigma: f64) -> (f64, f64) {
        (
            m.clamp(self.m_lo, self.m_hi),
            sigma.clamp(self.sigma_lo, self.sigma_hi),
        )
    }
}

/// Inequality description of the parameter set, always carrying the
/// redundant ball constraint `R^2 - m^2 - sigma^2 >= 0` as its last entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemialgebraicSet {
    inequalities: Vec<SparsePoly>,
    radius: f64,
    half_degrees: Vec<usize>,
    bounds: Option<BoxBounds>,
}

impl SemialgebraicSet {
    /// The box `[m_lo, m_hi] x [sigma_lo, sigma_hi]`.
    pub fn make_box(m_lo: f64, m_hi: f64, sigma_lo: f64, sigma_hi: f64) -> Result<Self> {
        let finite = [m_lo, m_hi, sigma_lo, sigma_hi].iter().all(|v| v.is_finite());
        if !finite || m_lo >= m_hi || sigma_lo >= sigma_hi {
            return Err(Error::Usage(format!(
                "box needs m_lo < m_hi and sigma_lo < sigma_hi, got [{m_lo}, {m_hi}] x [{sigma_lo}, {sigma_hi}]"
            )));
        }
        if sigma_lo < 0.0 {
            return Err(Error::Usage(format!("sigma_lo must be >= 0, got {sigma_lo}")));
        }
        let v = VarPair::MSigma;
        let inequalities = vec![
            SparsePoly::from_terms(v, [((1, 0), 1.0), ((0, 0), -m_lo)]),
            SparsePoly::from_terms(v, [((0, 0), m_hi), ((1, 0), -1.0)]),
            SparsePoly::from_terms(v, [((0, 1), 1.0), ((0, 0), -sigma_lo)]),
            SparsePoly::from_terms(v, [((0, 0), sigma_hi), ((0, 1), -1.0)]),
        ];
        let radius = BALL_MARGIN * (m_lo.powi(2).max(m_hi.powi(2)) + sigma_hi.powi(2)).sqrt();
        let mut set = Self::with_ball(inequalities, radius)?;
        set.bounds = Some(BoxBounds {
            m_lo,
            m_hi,
            sigma_lo,
            sigma_hi,
        });
        Ok(set)
    }

    /// A general set from explicit inequalities `u_j >= 0`; the ball of
    /// `radius` is appended. Compactness is the caller's responsibility.
    pub fn from_inequalities(inequalities: Vec<SparsePoly>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Usage(format!("ball radius must be positive, got {radius}")));
        }
        for u in &inequalities {
            if u.is_zero() {
                return Err(Error::Usage("zero polynomial in inequality list".into()));
            }
            if u.vars() != VarPair::MSigma {
                return Err(Error::Usage("inequalities must be written in (m, sigma)".into()));
            }
        }
        Self::with_ball(inequalities, radius)
    }

    fn with_ball(mut inequalities: Vec<SparsePoly>, radius: f64) -> Result<Self> {
        inequalities.push(SparsePoly::from_terms(
            VarPair::MSigma,
            [((0, 0), radius * radius), ((2, 0), -1.0), ((0, 2), -1.0)],
        ));
        let half_degrees = inequalities.iter().map(|u| u.degree().div_ceil(2)).collect();
        Ok(SemialgebraicSet {
            inequalities,
            radius,
            half_degrees,
            bounds: None,
        })
    }

    /// The inequalities `u_1, ..., u_s` (the implicit `u_0 = 1` excluded).
    pub fn inequalities(&self) -> &[SparsePoly] {
        &self.inequalities
    }

    /// `d_j = ceil(deg(u_j) / 2)`, aligned with [`Self::inequalities`].
    pub fn half_degrees(&self) -> &[usize] {
        &self.half_degrees
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn bounds(&self) -> Option<BoxBounds> {
        self.bounds
    }

    /// `v = max_j d_j`.
    pub fn v(&self) -> usize {
        self.half_degrees.iter().copied().max().unwrap_or(1).max(1)
    }

    /// Smallest admissible relaxation order.
    pub fn n0(&self) -> usize {
        self.v()
    }

    /// True when the box lets `sigma` reach 0, in which case every discrete
    /// measure on the m-range counts as a degenerate mixture.
    pub fn admits_zero_sigma(&self) -> bool {
        match self.bounds {
            Some(b) => b.sigma_lo <= 0.0,
            None => false,
        }
    }

    pub fn contains(&self, m: f64, sigma: f64) -> bool {
        self.inequalities
            .iter()
            .all(|u| u.eval(m, sigma) >= -MEMBERSHIP_TOL)
    }

    /// The same set in coordinates `m' = (m - center) / scale`,
    /// `sigma' = sigma / scale`.
    pub fn rescaled(&self, center: f64, scale: f64) -> SemialgebraicSet {
        let inequalities = self
            .inequalities
            .iter()
            .map(|u| u.substitute_affine((center, scale), (0.0, scale)))
            .collect();
        SemialgebraicSet {
            inequalities,
            radius: (self.radius + center.abs()) / scale,
            half_degrees: self.half_degrees.clone(),
            bounds: self.bounds.map(|b| BoxBounds {
                m_lo: (b.m_lo - center) / scale,
                m_hi: (b.m_hi - center) / scale,
                sigma_lo: b.sigma_lo / scale,
                sigma_hi: b.sigma_hi / scale,
            }),
        }
    }
}

/// Serializable description of a parameter set, as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetSpec {
    /// `[m_lo, m_hi] x [sigma_lo, sigma_hi]`.
    Box { m: [f64; 2], sigma: [f64; 2] },
    /// Each inequality is a list of `[i, j, coefficient]` terms of
    /// `sum c m^i sigma^j >= 0`.
    Inequalities {
        inequalities: Vec<Vec<(usize, usize, f64)>>,
        radius: f64,
    },
}

impl SetSpec {
    pub fn build(&self) -> Result<SemialgebraicSet> {
        match self {
            SetSpec::Box { m, sigma } => SemialgebraicSet::make_box(m[0], m[1], sigma[0], sigma[1]),
            SetSpec::Inequalities {
                inequalities,
                radius,
            } => {
                let polys = inequalities
                    .iter()
                    .map(|terms| {
                        SparsePoly::from_terms(
                            VarPair::MSigma,
                            terms.iter().map(|&(i, j, c)| ((i, j), c)),
                        )
                    })
                    .collect();
                SemialgebraicSet::from_inequalities(polys, *radius)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example_box() -> SemialgebraicSet {
        SemialgebraicSet::make_box(0.07, 1.0, 0.02, 1.0).unwrap()
    }

    #[test]
    fn box_construction() {
        let s = example_box();
        assert_eq!(s.inequalities().len(), 5);
        assert!((s.radius() - 1.001 * 2f64.sqrt()).abs() < 1e-12);
        assert!((s.radius() - 1.4157).abs() < 1e-4);
        assert_eq!(s.n0(), 1);
        assert_eq!(s.v(), 1);
        assert!(!s.admits_zero_sigma());
    }

    #[test]
    fn zero_sigma_box_is_flagged() {
        let s = SemialgebraicSet::make_box(-1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(s.admits_zero_sigma());
    }

    #[test]
    fn inverted_box_rejected() {
        assert!(matches!(
            SemialgebraicSet::make_box(0.0, 1.0, 0.5, 0.4),
            Err(Error::Usage(_))
        ));
        assert!(SemialgebraicSet::make_box(1.0, 0.0, 0.1, 0.4).is_err());
        assert!(SemialgebraicSet::make_box(0.0, 1.0, -0.1, 0.4).is_err());
    }

    #[test]
    fn membership() {
        let s = example_box();
        assert!(s.contains(0.1, 0.2));
        assert!(!s.contains(0.0, 0.0));
        for &(m, sg) in &[(0.07, 0.02), (1.0, 1.0), (0.07, 1.0), (1.0, 0.02)] {
            assert!(s.contains(m, sg));
        }
    }

    #[test]
    fn membership_agrees_with_intervals() {
        let s = SemialgebraicSet::make_box(-0.5, 0.8, 0.1, 0.6).unwrap();
        let b = s.bounds().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let m = rng.gen_range(-1.0..1.2);
            let sg = rng.gen_range(-0.2..1.0);
            assert_eq!(s.contains(m, sg), b.contains(m, sg), "({m}, {sg})");
        }
    }

    #[test]
    fn ball_is_redundant_on_box() {
        let s = example_box();
        let ball = s.inequalities().last().unwrap();
        let b = s.bounds().unwrap();
        for a in 0..=50 {
            for c in 0..=50 {
                let m = b.m_lo + (b.m_hi - b.m_lo) * a as f64 / 50.0;
                let sg = b.sigma_lo + (b.sigma_hi - b.sigma_lo) * c as f64 / 50.0;
                assert!(ball.eval(m, sg) >= 0.0);
            }
        }
    }

    #[test]
    fn general_set_degrees() {
        // disc of radius 0.5 around (0, 0.6), written as a quartic-free quadratic
        let u = SparsePoly::from_terms(
            VarPair::MSigma,
            [((0, 0), 0.25 - 0.36), ((2, 0), -1.0), ((0, 2), -1.0), ((0, 1), 1.2)],
        );
        let cubic = SparsePoly::from_terms(VarPair::MSigma, [((0, 3), -1.0), ((0, 0), 2.0)]);
        let s = SemialgebraicSet::from_inequalities(vec![u, cubic], 1.2).unwrap();
        assert_eq!(s.half_degrees(), &[1, 2, 1]);
        assert_eq!(s.v(), 2);
        assert_eq!(s.n0(), 2);
        assert!(s.contains(0.0, 0.6));
        assert!(!s.contains(0.0, 0.0));
        assert!(SemialgebraicSet::from_inequalities(vec![SparsePoly::zero(VarPair::MSigma)], 1.0)
            .is_err());
    }

    #[test]
    fn rescaling_preserves_membership() {
        let s = example_box();
        let t = s.rescaled(0.5, 1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = rng.gen_range(-0.2..1.3);
            let sg = rng.gen_range(-0.1..1.2);
            assert_eq!(s.contains(m, sg), t.contains((m - 0.5) / 1.3, sg / 1.3));
        }
    }
}
