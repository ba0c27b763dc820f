//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a hard requirement fails. Targets that are reported rather
//! than required are printed with their measured value.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{fixture_config, gauss_hermite, matched_error, quadrature_moment, random_measure};
use mixwass::extraction::{extract_atoms, recompute_moments, AtomicMeasure, DEFAULT_EPS_RANK};
use mixwass::gaussmoments::{
    double_factorial, gaussian_moment_poly, moment_poly_bound, moments_of_measure,
};
use mixwass::hierarchy::{
    default_y_box, run, w2_gaussian_closed_form, Certificate, HierarchyConfig, Instance,
};
use mixwass::relaxation::Metric;
use mixwass::sdp::{solve, SdpProblem, SolveStatus, SolverOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// One solved order, kept for the cross-instance checks.
#[derive(Clone, Copy)]
struct Solved {
    instance: &'static str,
    n: usize,
    tau: f64,
    tau_star: f64,
    status: SolveStatus,
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

fn solve_orders(
    name: &'static str,
    cfg: &HierarchyConfig,
    orders: std::ops::RangeInclusive<usize>,
    trace: &mut Vec<Solved>,
) -> Vec<Solved> {
    let mu = moments_of_measure(&cfg.mu, 2 * orders.end()).unwrap();
    let y_box = cfg
        .y_box
        .unwrap_or_else(|| default_y_box(&cfg.mu, &cfg.set).unwrap());
    let instance = Instance::new(&mu, &cfg.set, y_box);
    let mut out = Vec::new();
    for n in orders {
        let r = instance.solve(cfg.metric, n, &cfg.solver).unwrap();
        let solved = Solved {
            instance: name,
            n,
            tau: r.tau,
            tau_star: r.tau_star,
            status: r.solution.status,
        };
        trace.push(solved);
        out.push(solved);
    }
    out
}

fn taus(rows: &[Solved]) -> String {
    rows.iter()
        .map(|r| format!("n={} {:.6e} ({})", r.n, r.tau, r.status.as_str()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_1(trace: &mut Vec<Solved>) -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for (r, file) in [(0.2, "two_component_r20.json"), (0.3, "two_component_r30.json")] {
        let cfg = fixture_config(file);
        let start = Instant::now();
        let report = run(&cfg).unwrap();
        let seconds = start.elapsed().as_secs_f64();
        let rec = report.records.iter().find(|x| x.n == 6).unwrap();
        let name = if r == 0.2 { "two_component-r.2" } else { "two_component-r.3" };
        // lower orders only feed the monotonicity check
        solve_orders(name, &cfg, 1..=5, trace);
        trace.push(Solved {
            instance: name,
            n: 6,
            tau: rec.tau,
            tau_star: rec.tau_star,
            status: rec.status,
        });
        let flat_ok = rec.flat() && rec.rank() == Some(2);
        let truth = AtomicMeasure::new(vec![(0.1, 0.2), (0.5, 0.5)], vec![r, 1.0 - r]).unwrap();
        let err = match &report.certificate {
            Certificate::MixtureCandidate { n: 6, measure, .. } => matched_error(&truth, measure),
            _ => None,
        };
        let ok = rec.tau <= 1e-6
            && flat_ok
            && err.is_some_and(|e| e <= 1e-3)
            && seconds <= 300.0;
        pass &= ok;
        details.push(format!(
            "r={r}: tau_6={:.3e} flat={} rank={:?} atom/weight error={} time={seconds:.1}s",
            rec.tau,
            rec.flat(),
            rec.rank(),
            err.map_or("none".into(), |e| format!("{e:.2e}"))
        ));
    }
    Outcome::new(pass, details.join("; "))
}

fn criterion_2(trace: &mut Vec<Solved>) -> Outcome {
    let cfg = fixture_config("dirac_not_mixture.json");
    let report = run(&cfg).unwrap();
    let cert_ok = matches!(report.certificate, Certificate::NotMixture { tau, .. }
        if (3.9e-4..=4.1e-4).contains(&tau));
    let rows = solve_orders("dirac", &cfg, 2..=6, trace);
    let ok = rows.iter().all(|r| (3.9e-4..=4.1e-4).contains(&r.tau));
    Outcome::new(
        cert_ok && ok,
        format!("certificate {:?}; {}", report.certificate, taus(&rows)),
    )
}

/// `int_0^1 (F1^-1(u) - F2^-1(u))^2 du` by the midpoint rule in `u`.
fn quantile_coupling(g1: (f64, f64), g2: (f64, f64)) -> f64 {
    let a = Normal::new(g1.0, g1.1).unwrap();
    let b = Normal::new(g2.0, g2.1).unwrap();
    let cells = 200_000;
    (0..cells)
        .map(|k| {
            let u = (k as f64 + 0.5) / cells as f64;
            (a.inverse_cdf(u) - b.inverse_cdf(u)).powi(2)
        })
        .sum::<f64>()
        / cells as f64
}

fn criterion_3(trace: &mut Vec<Solved>) -> Outcome {
    let closed = w2_gaussian_closed_form((0.2, 0.1), (0.5, 0.3)).unwrap();
    let numeric = quantile_coupling((0.2, 0.1), (0.5, 0.3));
    let oracle_ok = (closed - 0.13).abs() < 1e-12 && (numeric - closed).abs() < 1e-6;
    let cfg = fixture_config("singleton_box.json");
    let rows = solve_orders("singleton", &cfg, 1..=6, trace);
    let bound_ok = rows.iter().all(|r| r.tau <= 0.13 + 1e-6);
    let ratio = rows.last().unwrap().tau / 0.13;
    Outcome::new(
        oracle_ok && bound_ok,
        format!(
            "oracle closed={closed} quantile={numeric:.9}; {}; tightness target tau_6/0.13 >= 0.9: {} (ratio {ratio:.5})",
            taus(&rows),
            if ratio >= 0.9 { "met" } else { "MISSED" }
        ),
    )
}

fn criterion_4(trace: &mut Vec<Solved>) -> Outcome {
    let cfg = fixture_config("zero_value.json");
    let rows = solve_orders("zero-value", &cfg, 1..=6, trace);
    let small = rows.iter().all(|r| r.tau <= 1e-6);
    let report = run(&cfg).unwrap();
    let truth = AtomicMeasure::new(vec![(0.3, 0.1)], vec![1.0]).unwrap();
    let (atom_ok, detail) = match &report.certificate {
        Certificate::MixtureCandidate { n, measure, .. } => {
            let rec = report.records.iter().find(|r| r.n == *n).unwrap();
            let err = matched_error(&truth, measure);
            (
                rec.rank() == Some(1) && err.is_some_and(|e| e <= 1e-6),
                format!(
                    "rank-1 flat at n={n}, atom {:?}, error {}",
                    measure.atoms,
                    err.map_or("none".into(), |e| format!("{e:.2e}"))
                ),
            )
        }
        other => (false, format!("certificate {other:?}")),
    };
    Outcome::new(small && atom_ok, format!("{}; {detail}", taus(&rows)))
}

fn criterion_5(trace: &[Solved]) -> Outcome {
    let mut pass = true;
    let mut worst_drop: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut names: Vec<&str> = trace.iter().map(|s| s.instance).collect();
    names.dedup();
    for name in &names {
        let mut rows: Vec<&Solved> = trace.iter().filter(|s| s.instance == *name).collect();
        rows.sort_by_key(|s| s.n);
        rows.dedup_by_key(|s| s.n);
        for w in rows.windows(2) {
            if w[1].n == w[0].n + 1 {
                let drop = w[0].tau - w[1].tau;
                worst_drop = worst_drop.max(drop);
                pass &= drop <= 1e-7;
            }
        }
    }
    for s in trace.iter().filter(|s| s.status == SolveStatus::Optimal) {
        let gap = (s.tau - s.tau_star).abs();
        worst_gap = worst_gap.max(gap);
        pass &= gap <= 1e-6;
    }
    Outcome::new(
        pass,
        format!(
            "{} solves over {:?}; largest decrease {worst_drop:.2e}, largest optimal gap {worst_gap:.2e}",
            trace.len(),
            names
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut pass = true;
    for j in 0..=6usize {
        let v = gaussian_moment_poly(2 * j).eval(0.0, 1.0);
        pass &= v == double_factorial(2 * j as i64 - 1);
    }
    let mut worst_sigma0: f64 = 0.0;
    for j in 0..=12usize {
        for m in [-1.7, -0.3, 0.0, 0.5, 1.0, 2.3] {
            let v = gaussian_moment_poly(j).eval(m, 0.0);
            let e = m.powi(j as i32);
            worst_sigma0 = worst_sigma0.max((v - e).abs() / e.abs().max(1e-300));
        }
    }
    pass &= worst_sigma0 <= 1e-14;
    let rule = gauss_hermite(40);
    let mut worst_quad: f64 = 0.0;
    for j in 0..=12usize {
        for m in [-1.5, -0.2, 0.0, 0.3, 1.0] {
            for s in [0.0, 0.1, 0.5, 1.0, 2.0] {
                let (q, scale) = quadrature_moment(&rule, m, s, j as i32);
                let v = gaussian_moment_poly(j).eval(m, s);
                worst_quad = worst_quad.max((v - q).abs() / scale.max(1e-300));
            }
        }
    }
    pass &= worst_quad <= 1e-9;
    let mut bound_ok = true;
    for big_m in [0.25, 0.5, 1.0, 2.0, 5.0] {
        for j in 1..=6usize {
            let bound = moment_poly_bound(2 * j, big_m).unwrap();
            for a in 0..40 {
                for b in 0..40 {
                    let m = -big_m + 2.0 * big_m * (a as f64 + 0.5) / 40.0;
                    let s = big_m * (b as f64 + 0.5) / 40.0;
                    bound_ok &= gaussian_moment_poly(2 * j).eval(m, s) < bound;
                }
            }
        }
    }
    pass &= bound_ok;
    Outcome::new(
        pass,
        format!(
            "double factorials exact; sigma=0 rel err {worst_sigma0:.1e}; quadrature rel err {worst_quad:.1e}; bound strict: {bound_ok}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for trial in 0..50 {
        let r = 1 + trial % 4;
        let truth = random_measure(&mut rng, r);
        let phi = recompute_moments(&truth, 2 * (r + 1));
        match extract_atoms(&phi, r + 1, 1, DEFAULT_EPS_RANK)
            .ok()
            .and_then(|found| matched_error(&truth, &found))
        {
            Some(e) if e <= 1e-6 => worst = worst.max(e),
            _ => failures += 1,
        }
    }
    Outcome::new(
        failures == 0,
        format!("50 measures, {failures} failures, worst error {worst:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let mut scalar = SdpProblem::new(1);
    scalar.set_objective(vec![(0, 1.0)], 0.0);
    let b = scalar.add_block(1);
    scalar.add_psd_entry(b, 0, 0, 0, 1.0);

    let mut trace = SdpProblem::new(3);
    trace.set_objective(vec![(0, 1.0), (2, 1.0)], 0.0);
    trace.add_constraint(vec![(1, 1.0)], 1.0);
    let b = trace.add_block(2);
    trace.add_psd_entry(b, 0, 0, 0, 1.0);
    trace.add_psd_entry(b, 1, 0, 1, 1.0);
    trace.add_psd_entry(b, 2, 1, 1, 1.0);

    let opts = SolverOptions::default();
    let s1 = solve(&scalar, &opts).unwrap();
    let s2 = solve(&trace, &opts).unwrap();
    let s2b = solve(&trace, &opts).unwrap();
    let s1b = solve(&scalar, &opts).unwrap();
    let values_ok = s1.is_optimal()
        && s1.primal_obj.abs() <= 1e-8
        && s2.is_optimal()
        && (s2.primal_obj - 2.0).abs() <= 1e-8
        && (s2.dual_obj - 2.0).abs() <= 1e-8;
    let deterministic = s1.primal_obj.to_bits() == s1b.primal_obj.to_bits()
        && s2.primal_obj.to_bits() == s2b.primal_obj.to_bits()
        && s2.dual_obj.to_bits() == s2b.dual_obj.to_bits();
    Outcome::new(
        values_ok && deterministic,
        format!(
            "scalar {:.3e}, trace {:.12} (dual {:.12}), bitwise repeatable: {deterministic}",
            s1.primal_obj, s2.primal_obj, s2.dual_obj
        ),
    )
}

fn criterion_9() -> Outcome {
    let target = 0.1 * (2.0 / std::f64::consts::PI).sqrt();
    let cfg = fixture_config("w1_dirac.json");
    assert_eq!(cfg.metric, Metric::W1);
    let report = run(&cfg).unwrap();
    let values: Vec<f64> = report.records.iter().map(|r| r.tau).collect();
    let nondecreasing = values.windows(2).all(|w| w[1] >= w[0] - 1e-7);
    let bounded = values.iter().all(|v| *v <= 0.0798 + 1e-6);
    let at4 = report.records.iter().find(|r| r.n == 4).map_or(0.0, |r| r.tau) / target;
    let rows = report
        .records
        .iter()
        .map(|r| format!("n={} {:.6e} ({})", r.n, r.tau, r.status.as_str()))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::new(
        nondecreasing && bounded,
        format!(
            "{rows}; target >= 90% by n=4: {} (ratio {at4:.4})",
            if at4 >= 0.9 { "met" } else { "MISSED" }
        ),
    )
}

fn main() -> ExitCode {
    let mut trace = Vec::new();
    let mut outcomes = vec![
        ("two-component mixture recovery", criterion_1(&mut trace)),
        ("not-mixture certificate for a point mass", criterion_2(&mut trace)),
        ("singleton-box distance", criterion_3(&mut trace)),
        ("zero-value stability", criterion_4(&mut trace)),
    ];
    outcomes.push(("monotonicity and duality gap", criterion_5(&trace)));
    outcomes.push(("Gaussian moment formulas", criterion_6()));
    outcomes.push(("extraction round trips", criterion_7()));
    outcomes.push(("solver fixtures", criterion_8()));
    outcomes.push(("W1 sanity", criterion_9()));

    let mut failed = 0;
    for (k, (name, o)) in outcomes.iter().enumerate() {
        println!(
            "criterion {}: {} [{name}] {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
