mod common;

use common::fixture_config;
use mixwass::extraction::AtomicMeasure;
use mixwass::gaussmoments::{GaussianComponent, MeasureSpec};
use mixwass::hierarchy::{
    default_y_box, run, verify_mixture, w2_gaussian_closed_form, Certificate, HierarchyConfig,
};
use mixwass::semialg::SemialgebraicSet;
use mixwass::Error;
use statrs::distribution::{ContinuousCDF, Normal};

fn example_mu(r: f64) -> MeasureSpec {
    MeasureSpec::GaussianMixture {
        components: vec![
            GaussianComponent { weight: r, mean: 0.1, sigma: 0.2 },
            GaussianComponent { weight: 1.0 - r, mean: 0.5, sigma: 0.5 },
        ],
    }
}

fn example_atoms(w: (f64, f64)) -> AtomicMeasure {
    AtomicMeasure::new(vec![(0.1, 0.2), (0.5, 0.5)], vec![w.0, w.1]).unwrap()
}

fn example_box() -> SemialgebraicSet {
    SemialgebraicSet::make_box(0.07, 1.0, 0.02, 1.0).unwrap()
}

/// Quantile coupling by the midpoint rule on `u`.
fn quantile_w2(g1: (f64, f64), g2: (f64, f64)) -> f64 {
    let a = Normal::new(g1.0, g1.1).unwrap();
    let b = Normal::new(g2.0, g2.1).unwrap();
    let cells = 100_000;
    (0..cells)
        .map(|k| {
            let u = (k as f64 + 0.5) / cells as f64;
            (a.inverse_cdf(u) - b.inverse_cdf(u)).powi(2)
        })
        .sum::<f64>()
        / cells as f64
}

#[test]
fn closed_form_agrees_with_quantile_coupling() {
    for (g1, g2) in [
        ((0.2, 0.1), (0.5, 0.3)),
        ((0.0, 1.0), (1.0, 2.0)),
        ((-0.4, 0.3), (0.1, 0.05)),
    ] {
        let closed = w2_gaussian_closed_form(g1, g2).unwrap();
        let numeric = quantile_w2(g1, g2);
        assert!((closed - numeric).abs() < 1e-5 * (1.0 + closed), "{g1:?} {g2:?}");
    }
    assert!((w2_gaussian_closed_form((0.2, 0.1), (0.5, 0.3)).unwrap() - 0.13).abs() < 1e-15);
    assert_eq!(w2_gaussian_closed_form((0.3, 0.2), (0.3, 0.2)).unwrap(), 0.0);
    assert_eq!(w2_gaussian_closed_form((1.0, 0.0), (-2.0, 0.0)).unwrap(), 9.0);
    assert!(matches!(
        w2_gaussian_closed_form((0.0, -1.0), (0.0, 1.0)),
        Err(Error::Domain(_))
    ));
}

#[test]
fn generating_measure_verifies() {
    let res = verify_mixture(&example_mu(0.2), &example_atoms((0.2, 0.8)), 6, 6).unwrap();
    assert_eq!(res.degrees, (8..=13).collect::<Vec<_>>());
    assert!(res.max_residual <= 1e-8, "{}", res.max_residual);
    assert!(res.verified);
}

#[test]
fn swapped_weights_are_rejected() {
    let res = verify_mixture(&example_mu(0.2), &example_atoms((0.8, 0.2)), 6, 4).unwrap();
    assert!(res.max_residual > 1e-3);
    assert!(!res.verified);
}

#[test]
fn single_degree_verification() {
    let res = verify_mixture(&example_mu(0.3), &example_atoms((0.3, 0.7)), 4, 1).unwrap();
    assert_eq!(res.degrees, vec![6]);
    assert_eq!(res.residuals.len(), 1);
}

#[test]
fn verification_needs_enough_moments() {
    let raw = MeasureSpec::RawMoments { moments: vec![1.0, 0.0, 1.0, 0.0, 3.0] };
    let single = AtomicMeasure::new(vec![(0.0, 1.0)], vec![1.0]).unwrap();
    assert!(matches!(
        verify_mixture(&raw, &single, 2, 4),
        Err(Error::InsufficientData { .. })
    ));
}

#[test]
fn point_mass_is_certified_not_mixture() {
    let cfg = HierarchyConfig::new(MeasureSpec::dirac(0.5), example_box());
    let report = run(&cfg).unwrap();
    match report.certificate {
        Certificate::NotMixture { n, tau } => {
            assert_eq!(n, 1);
            assert!((tau - 4e-4).abs() < 1e-5);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(report.records.len(), 1);
}

#[test]
fn not_mixture_verdict_survives_larger_order_caps() {
    for n_max in [2, 4] {
        let mut cfg = fixture_config("dirac_not_mixture.json");
        cfg.n_max = n_max;
        assert!(matches!(run(&cfg).unwrap().certificate, Certificate::NotMixture { n: 2, .. }));
    }
}

#[test]
fn two_component_mixture_is_found_by_a_sweep() {
    let report = run(&fixture_config("two_component_sweep.json")).unwrap();
    let Certificate::MixtureCandidate { n, measure, verification, outside } = &report.certificate
    else {
        panic!("{:?}", report.certificate);
    };
    assert!(*n <= 6);
    assert!(outside.is_empty());
    assert!(verification.verified);
    for (got, want) in measure.atoms.iter().zip([(0.1, 0.2), (0.5, 0.5)]) {
        assert!((got.0 - want.0).abs() < 1e-4 && (got.1 - want.1).abs() < 1e-4);
    }
    for w in report.records.windows(2) {
        assert!(w[1].tau >= w[0].tau - 1e-7);
    }
    let csv = report.csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,tau_n,taustar_n,gap,status,flat,rank"));
    let last = lines.last().unwrap();
    assert!(last.ends_with(",optimal,true,2"), "{last}");
}

#[test]
fn singleton_box_values_stay_below_the_distance() {
    let mut cfg = fixture_config("singleton_box.json");
    cfg.n_max = 3;
    let report = run(&cfg).unwrap();
    // an optimal tau above epsilon stops the run at the first order
    assert!(matches!(report.certificate, Certificate::NotMixture { n: 1, .. }));
    assert!(report.records[0].tau <= 0.13 + 1e-6);
}

#[test]
fn invalid_orders_are_config_errors() {
    let mut cfg = HierarchyConfig::new(MeasureSpec::dirac(0.5), example_box());
    cfg.n_min = 3;
    cfg.n_max = 2;
    assert!(matches!(run(&cfg), Err(Error::Config(_))));
    cfg.n_min = 0;
    assert!(matches!(run(&cfg), Err(Error::Config(_))));
}

#[test]
fn default_window_covers_measure_and_set() {
    let set = SemialgebraicSet::make_box(-0.00005, 0.00005, 0.09995, 0.10005).unwrap();
    let y = default_y_box(&MeasureSpec::dirac(0.0), &set).unwrap();
    assert!((y - (0.00005 + 6.0 * 0.10005)).abs() < 1e-12);
    let y = default_y_box(&MeasureSpec::gaussian(2.0, 0.5), &set).unwrap();
    assert!((y - 5.0).abs() < 1e-12);
}

#[test]
fn w1_mode_reports_distances_only() {
    let mut cfg = fixture_config("w1_dirac.json");
    cfg.n_max = 3;
    let report = run(&cfg).unwrap();
    assert_eq!(report.records.len(), 3);
    assert!(matches!(report.certificate, Certificate::Inconclusive { .. }));
    let target = 0.1 * (2.0 / std::f64::consts::PI).sqrt();
    for w in report.records.windows(2) {
        assert!(w[1].tau >= w[0].tau - 1e-7);
    }
    assert!(report.records.iter().all(|r| r.tau <= target + 1e-6));
}
