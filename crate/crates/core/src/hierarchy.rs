//! Driver over relaxation orders: solve, decide, extract, verify.

use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{
    check_flatness, extract_atoms_seeded, AtomicMeasure, FlatnessReport, DEFAULT_EPS_RANK,
};
use crate::gaussmoments::{
    moments_of_measure, read_samples, GaussianMomentPolys, MeasureSpec, UnivariateMoments,
};
use crate::polyalg::ExponentPair;
use crate::relaxation::{
    assemble_w1, assemble_w2, assemble_zero_cost_face, Metric, MomentVector, Scaling,
};
use crate::sdp::{solve, SdpSolution, SolveStatus, SolverOptions};
use crate::semialg::SemialgebraicSet;

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_VERIFY_DEGREES: usize = 8;
pub const DEFAULT_ORDER_MAX: usize = 6;

/// Relative threshold of the moment-matching verdict.
pub const VERIFY_TOL: f64 = 1e-6;

/// Standard deviations of slack used for the default W1 window.
const Y_BOX_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub mu: MeasureSpec,
    pub set: SemialgebraicSet,
    pub metric: Metric,
    pub n_min: usize,
    pub n_max: usize,
    /// `tau_n` above this on an optimal solve certifies "not a mixture".
    pub epsilon: f64,
    /// Number `J` of moment degrees checked beyond `n + 1`.
    pub verify_extra_degrees: usize,
    pub solver: SolverOptions,
    pub eps_rank: f64,
    /// Half-width of the W1 window on `x` and `y`, original units. `None`
    /// picks [`default_y_box`].
    pub y_box: Option<f64>,
}

impl HierarchyConfig {
    /// Defaults: W2, orders `n0..=max(n0, 6)`.
    pub fn new(mu: MeasureSpec, set: SemialgebraicSet) -> Self {
        let n0 = set.n0();
        HierarchyConfig {
            mu,
            set,
            metric: Metric::W2,
            n_min: n0,
            n_max: n0.max(DEFAULT_ORDER_MAX),
            epsilon: DEFAULT_EPSILON,
            verify_extra_degrees: DEFAULT_VERIFY_DEGREES,
            solver: SolverOptions::default(),
            eps_rank: DEFAULT_EPS_RANK,
            y_box: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n0 = self.set.n0();
        if self.n_min < n0 || self.n_min > self.n_max {
            return Err(Error::Config(format!(
                "orders must satisfy n0 = {n0} <= n_min = {} <= n_max = {}",
                self.n_min, self.n_max
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.verify_extra_degrees == 0 {
            return Err(Error::Config("verify_extra_degrees must be at least 1".into()));
        }
        if !(self.eps_rank > 0.0 && self.eps_rank < 1.0) {
            return Err(Error::Config(format!("eps_rank must lie in (0, 1), got {}", self.eps_rank)));
        }
        if !(1e-12..=1e-2).contains(&self.solver.tol) {
            return Err(Error::Config(format!(
                "solver tolerance {} outside [1e-12, 1e-2]",
                self.solver.tol
            )));
        }
        if let Some(b) = self.y_box {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("y_box must be positive, got {b}")));
            }
        }
        self.mu.validate()
    }

    /// Highest moment degree of `mu` the run needs.
    pub fn moment_degree(&self) -> usize {
        let verify = match self.metric {
            Metric::W2 => self.n_max + 1 + self.verify_extra_degrees,
            Metric::W1 => 0,
        };
        (2 * self.n_max).max(verify)
    }
}

/// Moment matching beyond the relaxation degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    /// Degrees `n + 2 ..= n + 1 + J`.
    pub degrees: Vec<usize>,
    /// `|mu_j - sum_k w_k p_j(m_k, sigma_k)|`, aligned with `degrees`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// `1e-6 * (1 + max |mu_j|)` over the checked degrees.
    pub threshold: f64,
    pub verified: bool,
}

/// Outcome of one relaxation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub n: usize,
    /// Moment-side value, original units.
    pub tau: f64,
    /// SOS-side value, original units.
    pub tau_star: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub seconds: f64,
    /// Status of the face-selection solve, when one was run.
    pub face_status: Option<SolveStatus>,
    pub flatness: Option<FlatnessReport>,
    /// Largest `|lambda(x * x^a y^b) - lambda(y * x^a y^b)|` over `a + b < n`,
    /// plan moments in normalized coordinates. Zero on an exact zero-cost plan.
    pub column_discrepancy: Option<f64>,
    pub candidate: Option<AtomicMeasure>,
    /// Indices of candidate atoms outside the parameter set.
    pub outside: Vec<usize>,
    pub verification: Option<VerificationResult>,
    /// Why extraction did not produce a candidate.
    pub extraction_error: Option<String>,
}

impl OrderRecord {
    pub fn failed(&self) -> bool {
        matches!(
            self.status,
            SolveStatus::NumericalFailure | SolveStatus::InfeasibleSuspected
        )
    }

    pub fn flat(&self) -> bool {
        self.flatness.as_ref().is_some_and(|f| f.flat)
    }

    pub fn rank(&self) -> Option<usize> {
        self.flatness.as_ref().map(|f| f.rank_high)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    NotMixture {
        n: usize,
        tau: f64,
    },
    MixtureCandidate {
        n: usize,
        measure: AtomicMeasure,
        verification: VerificationResult,
        outside: Vec<usize>,
    },
    Inconclusive {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub metric: Metric,
    pub records: Vec<OrderRecord>,
    pub certificate: Certificate,
    pub total_seconds: f64,
}

impl HierarchyReport {
    /// The CSV trace `n,tau_n,taustar_n,gap,status,flat,rank`.
    pub fn csv(&self) -> String {
        let mut out = String::from("n,tau_n,taustar_n,gap,status,flat,rank\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{},{},{}\n",
                r.n,
                r.tau,
                r.tau_star,
                r.gap,
                r.status.as_str(),
                r.flat(),
                r.rank().map_or(String::new(), |k| k.to_string())
            ));
        }
        out
    }
}

/// Half-width of the W1 window: large enough for `supp(mu)` and for every
/// Gaussian with parameters in `set` up to six standard deviations.
pub fn default_y_box(mu: &MeasureSpec, set: &SemialgebraicSet) -> Result<f64> {
    let reach_mu = match mu {
        MeasureSpec::GaussianMixture { components } => components
            .iter()
            .map(|c| c.mean.abs() + Y_BOX_SIGMAS * c.sigma)
            .fold(0.0, f64::max),
        MeasureSpec::DiracMixture { atoms } => {
            atoms.iter().map(|a| a.location.abs()).fold(0.0, f64::max)
        }
        MeasureSpec::UniformInterval { a, b } => a.abs().max(b.abs()),
        MeasureSpec::Samples { path } => read_samples(path)?
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max),
        MeasureSpec::RawMoments { .. } => {
            let m = moments_of_measure(mu, 2)?;
            m.mean().abs() + Y_BOX_SIGMAS * m.variance().max(0.0).sqrt()
        }
    };
    let reach_set = match set.bounds() {
        Some(b) => b.m_lo.abs().max(b.m_hi.abs()) + Y_BOX_SIGMAS * b.sigma_hi,
        None => (1.0 + Y_BOX_SIGMAS) * set.radius(),
    };
    Ok(reach_mu.max(reach_set))
}

/// Squared W2 distance between `N(m1, s1^2)` and `N(m2, s2^2)`.
pub fn w2_gaussian_closed_form(g1: (f64, f64), g2: (f64, f64)) -> Result<f64> {
    if g1.1 < 0.0 || g2.1 < 0.0 {
        return Err(Error::Domain(format!(
            "standard deviations must be >= 0, got {} and {}",
            g1.1, g2.1
        )));
    }
    Ok((g1.0 - g2.0).powi(2) + (g1.1 - g2.1).powi(2))
}

/// Checks `mu_j = sum_k w_k p_j(m_k, sigma_k)` for `j = n+2 ..= n+1+J`.
pub fn verify_mixture(
    mu: &MeasureSpec,
    candidate: &AtomicMeasure,
    n: usize,
    extra: usize,
) -> Result<VerificationResult> {
    let moments = moments_of_measure(mu, n + 1 + extra)?;
    verify_moments(&moments, candidate, n, extra)
}

/// [`verify_mixture`] against precomputed moments.
pub fn verify_moments(
    mu: &UnivariateMoments,
    candidate: &AtomicMeasure,
    n: usize,
    extra: usize,
) -> Result<VerificationResult> {
    if extra == 0 {
        return Err(Error::Usage("verification needs at least one degree".into()));
    }
    let top = n + 1 + extra;
    if mu.max_degree() < top {
        return Err(Error::InsufficientData {
            needed: top + 1,
            available: mu.max_degree() + 1,
        });
    }
    let polys = GaussianMomentPolys::new(top);
    let degrees: Vec<usize> = (n + 2..=top).collect();
    let residuals: Vec<f64> = degrees
        .iter()
        .map(|&j| {
            let model: f64 = candidate
                .atoms
                .iter()
                .zip(&candidate.weights)
                .map(|(&(m, s), w)| w * polys.poly(j).eval(m, s))
                .sum();
            (mu.get(j) - model).abs()
        })
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let scale = degrees.iter().map(|&j| mu.get(j).abs()).fold(0.0, f64::max);
    let threshold = VERIFY_TOL * (1.0 + scale);
    Ok(VerificationResult {
        degrees,
        residuals,
        max_residual,
        threshold,
        verified: max_residual.is_finite() && max_residual <= threshold,
    })
}

/// One solved relaxation, values back in original units.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub n: usize,
    pub tau: f64,
    pub tau_star: f64,
    pub solution: SdpSolution,
    /// Mixing pseudo-moments in normalized coordinates.
    pub phi: MomentVector,
    /// Plan pseudo-moments (all pieces summed), normalized coordinates.
    pub plan: MomentVector,
}

/// Problem data shared by every order, in normalized coordinates.
#[derive(Debug, Clone)]
pub struct Instance {
    pub scaling: Scaling,
    pub mu: UnivariateMoments,
    pub set: SemialgebraicSet,
    /// Original parameter set, for membership tests of extracted atoms.
    pub original_set: SemialgebraicSet,
    /// W1 window in normalized coordinates.
    pub y_box: f64,
}

impl Instance {
    /// `mu` supplied as moments through at least degree `2 n_max`.
    pub fn new(mu: &UnivariateMoments, set: &SemialgebraicSet, y_box: f64) -> Self {
        let scaling = Scaling::for_set(set);
        Instance {
            scaling,
            mu: scaling.moments(mu),
            set: scaling.set(set),
            original_set: set.clone(),
            y_box: (y_box + scaling.center.abs()) / scaling.scale,
        }
    }

    pub fn solve(&self, metric: Metric, n: usize, opts: &SolverOptions) -> Result<Relaxation> {
        let (problem, layout) = match metric {
            Metric::W2 => assemble_w2(&self.mu, &self.set, n)?,
            Metric::W1 => assemble_w1(&self.mu, &self.set, n, self.y_box)?,
        };
        let solution = solve(&problem, opts)?;
        Ok(Relaxation {
            n,
            tau: self.scaling.unscale_cost(solution.primal_obj, metric),
            tau_star: self.scaling.unscale_cost(solution.dual_obj, metric),
            phi: layout.mixing_moments(&solution.x),
            plan: layout.total_plan_moments(&solution.x),
            solution,
        })
    }

    /// Most deconvolved mixing measure matching `mu` through degree `2n`.
    /// Returns the normalized pseudo-moments and the solver status; the
    /// best iterate is kept even when the solver stops at its iteration cap.
    pub fn face(&self, n: usize, opts: &SolverOptions) -> Result<(MomentVector, SolveStatus)> {
        let (problem, layout) = assemble_zero_cost_face(&self.mu, &self.set, n)?;
        let solution = solve(&problem, opts)?;
        Ok((layout.mixing_moments(&solution.x), solution.status))
    }
}

fn column_discrepancy(plan: &MomentVector, n: usize) -> f64 {
    crate::polyalg::monomials(n - 1)
        .map(|e| {
            let xs = plan.get(e.shifted(ExponentPair::new(1, 0)));
            let ys = plan.get(e.shifted(ExponentPair::new(0, 1)));
            (xs - ys).abs()
        })
        .fold(0.0, f64::max)
}

/// Runs the hierarchy described by `config`.
pub fn run(config: &HierarchyConfig) -> Result<HierarchyReport> {
    config.validate()?;
    let start = Instant::now();
    let mu = moments_of_measure(&config.mu, config.moment_degree())?;
    let y_box = match config.y_box {
        Some(b) => b,
        None => default_y_box(&config.mu, &config.set)?,
    };
    let instance = Instance::new(&mu, &config.set, y_box);
    let v = config.set.v();
    let mut records = Vec::new();
    let mut certificate = None;

    for n in config.n_min..=config.n_max {
        let t = Instant::now();
        let relaxed = instance.solve(config.metric, n, &config.solver)?;
        let status = relaxed.solution.status;
        let mut record = OrderRecord {
            n,
            tau: relaxed.tau,
            tau_star: relaxed.tau_star,
            gap: (relaxed.tau - relaxed.tau_star).abs(),
            status,
            iterations: relaxed.solution.iterations,
            seconds: 0.0,
            face_status: None,
            flatness: None,
            column_discrepancy: Some(column_discrepancy(&relaxed.plan, n)),
            candidate: None,
            outside: Vec::new(),
            verification: None,
            extraction_error: None,
        };
        info!(
            "order {n}: tau {:.10e}, tau* {:.10e}, {}",
            record.tau,
            record.tau_star,
            status.as_str()
        );

        if config.metric == Metric::W2 && !record.failed() {
            if status == SolveStatus::Optimal && record.tau > config.epsilon {
                certificate = Some(Certificate::NotMixture { n, tau: record.tau });
            } else if record.tau <= config.epsilon {
                identify(config, &instance, &mu, v, &mut record)?;
                if let (Some(measure), Some(verification)) =
                    (&record.candidate, &record.verification)
                {
                    if verification.verified {
                        certificate = Some(Certificate::MixtureCandidate {
                            n,
                            measure: measure.clone(),
                            verification: verification.clone(),
                            outside: record.outside.clone(),
                        });
                    }
                }
            }
        }
        record.seconds = t.elapsed().as_secs_f64();
        records.push(record);
        if certificate.is_some() {
            break;
        }
    }

    if records.iter().all(OrderRecord::failed) {
        return Err(Error::AllOrdersFailed(format!(
            "orders {}..={} ended with {}",
            config.n_min,
            config.n_max,
            records
                .iter()
                .map(|r| r.status.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    let certificate = certificate.unwrap_or_else(|| Certificate::Inconclusive {
        reason: match config.metric {
            Metric::W1 => "W1 mode reports distances only".into(),
            Metric::W2 => format!("no decision through order {}", config.n_max),
        },
    });
    Ok(HierarchyReport {
        metric: config.metric,
        records,
        certificate,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Face selection, flatness, extraction and verification at one order.
fn identify(
    config: &HierarchyConfig,
    instance: &Instance,
    mu: &UnivariateMoments,
    v: usize,
    record: &mut OrderRecord,
) -> Result<()> {
    let n = record.n;
    if v > n {
        return Ok(());
    }
    let (phi, face_status) = instance.face(n, &config.solver)?;
    record.face_status = Some(face_status);
    if matches!(
        face_status,
        SolveStatus::NumericalFailure | SolveStatus::InfeasibleSuspected
    ) {
        record.extraction_error = Some(format!("face selection {}", face_status.as_str()));
        return Ok(());
    }
    let flatness = check_flatness(&phi, n, v, config.eps_rank)?;
    debug!("order {n}: face singular values {:?}", flatness.singular_values);
    let flat = flatness.flat;
    record.flatness = Some(flatness);
    if !flat {
        return Ok(());
    }
    match extract_atoms_seeded(&phi, n, v, config.eps_rank, config.solver.seed) {
        Ok(normalized) => {
            let measure = normalized.affine_image(instance.scaling.center, instance.scaling.scale);
            record.outside = measure.outside(&instance.original_set);
            record.verification =
                Some(verify_moments(mu, &measure, n, config.verify_extra_degrees)?);
            record.candidate = Some(measure);
        }
        Err(e @ (Error::NotFlat(_) | Error::ExtractionFailed(_))) => {
            record.extraction_error = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(())
}
