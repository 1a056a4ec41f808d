use approx::assert_abs_diff_eq;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use ultimatum_core::stats::{chi_square_2x2, erfc, two_proportion_z, ContingencyTable2x2, StatsError};
use ultimatum_core::{TestResultF32, TestResultF64};

fn relative(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn headline_chi_square_values() {
    let r: TestResultF64 = chi_square_2x2(&ContingencyTable2x2::new(35, 5, 20, 20)).unwrap();
    assert_abs_diff_eq!(r.statistic, 13.091, epsilon = 0.001);
    assert_abs_diff_eq!(r.p_two_tailed, 0.000297, epsilon = 0.00002);
    assert_eq!(r.df, Some(1));

    let r: TestResultF64 = chi_square_2x2(&ContingencyTable2x2::new(35, 5, 22, 18)).unwrap();
    assert_abs_diff_eq!(r.statistic, 10.3127, epsilon = 0.001);
    assert_abs_diff_eq!(r.p_two_tailed, 0.001321, epsilon = 0.00002);
}

#[test]
fn error_breakdown_z_tests() {
    let cases = [
        ((7, 7, 0, 7), 3.7417, 0.00018),
        ((5, 5, 0, 5), 3.1623, 0.00158),
        ((17, 23, 9, 23), 2.379, 0.017),
        ((20, 20, 5, 20), 4.899, f64::NAN),
    ];
    for ((s1, n1, s2, n2), z, p) in cases {
        let r: TestResultF64 = two_proportion_z(s1, n1, s2, n2).unwrap();
        assert_abs_diff_eq!(r.statistic, z, epsilon = 0.01);
        if p.is_nan() {
            assert!(r.p_two_tailed < 0.00001, "{}", r.p_two_tailed);
        } else {
            assert!(
                relative(r.p_two_tailed, p) <= 0.10,
                "z {z}: p {} vs {p}",
                r.p_two_tailed
            );
        }
    }
}

#[test]
fn single_precision_agrees() {
    let r: TestResultF32 = chi_square_2x2(&ContingencyTable2x2::new(35, 5, 20, 20)).unwrap();
    assert_abs_diff_eq!(r.statistic, 13.091, epsilon = 0.001);
    let r: TestResultF32 = two_proportion_z(17, 23, 9, 23).unwrap();
    assert_abs_diff_eq!(r.statistic, 2.379, epsilon = 0.01);
}

#[test]
fn p_values_match_an_independent_implementation() {
    let chi = ChiSquared::new(1.0).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    for a in (0..40).step_by(3) {
        for c in (0..40).step_by(7) {
            let table = ContingencyTable2x2::new(a, 40 - a, c, 40 - c);
            let Ok(r) = chi_square_2x2::<f64>(&table) else { continue };
            let expected = chi.sf(r.statistic);
            assert!(
                (r.p_two_tailed - expected).abs() <= 1e-6 * expected.max(1e-3),
                "{a},{c}"
            );
            let z = two_proportion_z::<f64>(a, 40, c, 40).unwrap();
            let expected = 2.0 * normal.cdf(-z.statistic.abs());
            assert!(
                (z.p_two_tailed - expected).abs() <= 1e-6 * expected.max(1e-3),
                "{a},{c}"
            );
        }
    }
}

#[test]
fn erfc_tracks_reference() {
    for i in -400..=400 {
        let x = i as f64 / 100.0;
        let expected = statrs::function::erf::erfc(x);
        assert!(relative(erfc(x), expected) < 1.2e-7, "x = {x}");
    }
}

#[test]
fn degenerate_tables_are_errors() {
    assert!(matches!(
        chi_square_2x2::<f64>(&ContingencyTable2x2::new(0, 0, 3, 4)),
        Err(StatsError::Degenerate(_))
    ));
    assert!(matches!(
        chi_square_2x2::<f64>(&ContingencyTable2x2::new(5, 0, 7, 0)),
        Err(StatsError::Degenerate(_))
    ));
    assert!(matches!(
        two_proportion_z::<f64>(5, 5, 7, 7),
        Err(StatsError::Degenerate(_))
    ));
    assert!(matches!(
        two_proportion_z::<f64>(0, 0, 1, 7),
        Err(StatsError::Degenerate(_))
    ));
}
