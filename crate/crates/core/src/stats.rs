//! Two-group hypothesis tests and exact rate aggregation.
//!
//! The tests are generic over the float type; counts stay integral and rates
//! are exact rationals until they are rendered.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact success rate.
pub type Rate = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub successes_a: u64,
    pub failures_a: u64,
    pub successes_b: u64,
    pub failures_b: u64,
}

impl ContingencyTable2x2 {
    pub fn new(successes_a: u64, failures_a: u64, successes_b: u64, failures_b: u64) -> Self {
        ContingencyTable2x2 {
            successes_a,
            failures_a,
            successes_b,
            failures_b,
        }
    }

    /// Builds the table from successes out of group totals.
    pub fn from_proportions(s1: u64, n1: u64, s2: u64, n2: u64) -> Option<Self> {
        (s1 <= n1 && s2 <= n2).then(|| Self::new(s1, n1 - s1, s2, n2 - s2))
    }

    pub fn total(&self) -> u64 {
        self.successes_a + self.failures_a + self.successes_b + self.failures_b
    }

    /// Every cell multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        Self::new(
            self.successes_a * k,
            self.failures_a * k,
            self.successes_b * k,
            self.failures_b * k,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult<T> {
    pub statistic: T,
    pub df: Option<u32>,
    pub p_two_tailed: T,
    /// Some expected cell count is below 5.
    pub low_expected_count: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("degenerate table: {0}")]
    Degenerate(&'static str),
}

fn lit<T: FromPrimitive>(x: f64) -> T {
    T::from_f64(x).expect("float literal is representable")
}

/// Complementary error function from a Chebyshev-fitted rational
/// approximation with fractional error below 1.2e-7 everywhere.
pub fn erfc<T: Float + FromPrimitive>(x: T) -> T {
    let z = x.abs();
    let t = T::one() / (T::one() + lit::<T>(0.5) * z);
    const COEFFS: [f64; 10] = [
        -1.265_512_23,
        1.000_023_68,
        0.374_091_96,
        0.096_784_18,
        -0.186_288_06,
        0.278_868_07,
        -1.135_203_98,
        1.488_515_87,
        -0.822_152_23,
        0.170_872_77,
    ];
    let poly = COEFFS.iter().rev().fold(T::zero(), |acc, &c| acc * t + lit::<T>(c));
    let ans = t * (-z * z + poly).exp();
    if x >= T::zero() {
        ans
    } else {
        lit::<T>(2.0) - ans
    }
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi_square_sf_1df<T: Float + FromPrimitive>(x: T) -> T {
    if x <= T::zero() {
        return T::one();
    }
    clamp_unit(erfc((x / lit::<T>(2.0)).sqrt()))
}

/// Two-tailed standard normal tail probability `P(|Z| >= |z|)`.
pub fn normal_two_tailed<T: Float + FromPrimitive>(z: T) -> T {
    clamp_unit(erfc(z.abs() / lit::<T>(2.0).sqrt()))
}

fn clamp_unit<T: Float>(p: T) -> T {
    p.max(T::zero()).min(T::one())
}

/// Pearson chi-square on a 2x2 table, no continuity correction, one degree of freedom.
pub fn chi_square_2x2<T: Float + FromPrimitive>(table: &ContingencyTable2x2) -> Result<TestResult<T>, StatsError> {
    let cells = [
        [table.successes_a, table.failures_a],
        [table.successes_b, table.failures_b],
    ];
    let rows = [cells[0][0] + cells[0][1], cells[1][0] + cells[1][1]];
    let cols = [cells[0][0] + cells[1][0], cells[0][1] + cells[1][1]];
    if rows.contains(&0) {
        return Err(StatsError::Degenerate("a group has no observations"));
    }
    if cols.contains(&0) {
        return Err(StatsError::Degenerate("an outcome never occurs"));
    }
    let n = lit::<T>(table.total() as f64);
    let mut statistic = T::zero();
    let mut low_expected_count = false;
    for (i, row) in cells.iter().enumerate() {
        for (j, &observed) in row.iter().enumerate() {
            let expected = lit::<T>(rows[i] as f64) * lit::<T>(cols[j] as f64) / n;
            low_expected_count |= expected < lit(5.0);
            let diff = lit::<T>(observed as f64) - expected;
            statistic = statistic + diff * diff / expected;
        }
    }
    Ok(TestResult {
        statistic,
        df: Some(1),
        p_two_tailed: chi_square_sf_1df(statistic),
        low_expected_count,
    })
}

/// Pooled two-proportion z-test of `s1/n1` against `s2/n2`.
pub fn two_proportion_z<T: Float + FromPrimitive>(
    s1: u64,
    n1: u64,
    s2: u64,
    n2: u64,
) -> Result<TestResult<T>, StatsError> {
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::Degenerate("a group has no observations"));
    }
    if s1 > n1 || s2 > n2 {
        return Err(StatsError::Degenerate("more successes than observations"));
    }
    let pooled_successes = s1 + s2;
    let pooled_total = n1 + n2;
    if pooled_successes == 0 || pooled_successes == pooled_total {
        return Err(StatsError::Degenerate("pooled proportion is 0 or 1"));
    }
    let f = |x: u64| lit::<T>(x as f64);
    let p1 = f(s1) / f(n1);
    let p2 = f(s2) / f(n2);
    let pooled = f(pooled_successes) / f(pooled_total);
    let se = (pooled * (T::one() - pooled) * (T::one() / f(n1) + T::one() / f(n2))).sqrt();
    let statistic = (p1 - p2) / se;
    let low_expected_count = [n1, n2].iter().any(|&n| {
        let n = f(n);
        n * pooled < lit(5.0) || n * (T::one() - pooled) < lit(5.0)
    });
    Ok(TestResult {
        statistic,
        df: None,
        p_two_tailed: normal_two_tailed(statistic),
        low_expected_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRate {
    pub successes: u64,
    pub count: u64,
}

impl GroupRate {
    pub fn rate(&self) -> Option<Rate> {
        (self.count > 0).then(|| Rate::new(self.successes, self.count))
    }

    pub fn percent_label(&self) -> String {
        self.rate().map_or_else(|| "-".to_string(), |r| format_percent(&r))
    }

    pub fn as_float<T: Float + FromPrimitive>(&self) -> Option<T> {
        self.rate()
            .map(|r| lit::<T>(*r.numer() as f64) / lit::<T>(*r.denom() as f64))
    }
}

/// Counts successes per group.
pub fn aggregate_rates<K, I>(records: I) -> BTreeMap<K, GroupRate>
where
    K: Ord,
    I: IntoIterator<Item = (K, bool)>,
{
    let mut out: BTreeMap<K, GroupRate> = BTreeMap::new();
    for (key, success) in records {
        let entry = out.entry(key).or_insert(GroupRate { successes: 0, count: 0 });
        entry.count += 1;
        entry.successes += u64::from(success);
    }
    out
}

/// Renders a rate as a percentage with one decimal, rounding halves up.
pub fn format_percent(rate: &Rate) -> String {
    // tenths of a percent = rate * 1000
    let scaled = rate * Rate::from_integer(1000);
    let tenths = (scaled + Rate::new(1, 2)).floor().to_integer();
    format!("{}.{}%", tenths / 10, tenths % 10)
}

/// Converts an exact rate to a float.
pub fn rate_to_float<T: Float + FromPrimitive>(rate: &Rate) -> T {
    let num = rate.numer().to_f64().unwrap_or(0.0);
    let den = rate.denom().to_f64().unwrap_or(1.0);
    lit::<T>(num) / lit::<T>(den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn chi_square_headline_values() {
        let r: TestResult<f64> = chi_square_2x2(&ContingencyTable2x2::new(35, 5, 20, 20)).unwrap();
        assert_abs_diff_eq!(r.statistic, 13.091, epsilon = 1e-3);
        assert_abs_diff_eq!(r.p_two_tailed, 0.000297, epsilon = 2e-5);
        assert_eq!(r.df, Some(1));

        let r: TestResult<f64> = chi_square_2x2(&ContingencyTable2x2::new(35, 5, 22, 18)).unwrap();
        assert_abs_diff_eq!(r.statistic, 10.3127, epsilon = 1e-3);
        assert_abs_diff_eq!(r.p_two_tailed, 0.001321, epsilon = 2e-5);
    }

    #[test]
    fn identical_proportions_give_zero() {
        let r: TestResult<f64> = chi_square_2x2(&ContingencyTable2x2::new(10, 10, 10, 10)).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_two_tailed, 1.0);
        let z: TestResult<f64> = two_proportion_z(5, 10, 5, 10).unwrap();
        assert_eq!(z.statistic, 0.0);
        assert_abs_diff_eq!(z.p_two_tailed, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn z_test_values() {
        let cases = [
            ((7, 7, 0, 7), 3.7417, 0.01),
            ((5, 5, 0, 5), 3.1623, 0.01),
            ((17, 23, 9, 23), 2.379, 0.005),
            ((20, 20, 5, 20), 4.899, 0.005),
        ];
        for ((s1, n1, s2, n2), z, tol) in cases {
            let r: TestResult<f64> = two_proportion_z(s1, n1, s2, n2).unwrap();
            assert_abs_diff_eq!(r.statistic, z, epsilon = tol);
        }
        let r: TestResult<f64> = two_proportion_z(17, 23, 9, 23).unwrap();
        assert_abs_diff_eq!(r.p_two_tailed, 0.017, epsilon = 0.002);
    }

    #[test]
    fn works_in_single_precision() {
        let r: TestResult<f32> = chi_square_2x2(&ContingencyTable2x2::new(35, 5, 20, 20)).unwrap();
        assert!((r.statistic - 13.091).abs() < 1e-3);
    }

    #[test]
    fn tabulated_critical_values() {
        assert_abs_diff_eq!(chi_square_sf_1df(3.841_f64), 0.05, epsilon = 5e-4);
        assert_abs_diff_eq!(normal_two_tailed(1.96_f64), 0.05, epsilon = 5e-4);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(chi_square_2x2::<f64>(&ContingencyTable2x2::new(0, 0, 3, 4)).is_err());
        assert!(chi_square_2x2::<f64>(&ContingencyTable2x2::new(3, 0, 4, 0)).is_err());
        assert!(two_proportion_z::<f64>(1, 0, 1, 2).is_err());
        assert!(two_proportion_z::<f64>(0, 5, 0, 5).is_err());
    }

    #[test]
    fn low_expected_counts_are_reported() {
        let r: TestResult<f64> = chi_square_2x2(&ContingencyTable2x2::new(7, 0, 0, 7)).unwrap();
        assert!(r.low_expected_count);
        let r: TestResult<f64> = chi_square_2x2(&ContingencyTable2x2::new(35, 5, 20, 20)).unwrap();
        assert!(!r.low_expected_count);
    }

    #[test]
    fn rates_render_to_one_decimal() {
        let rates = aggregate_rates(
            (0..40)
                .map(|i| ("a", i < 35))
                .chain((0..40).map(|i| ("b", i < 33)))
                .chain((0..10).map(|_| ("c", false))),
        );
        assert_eq!(rates["a"].percent_label(), "87.5%");
        assert_eq!(rates["b"].percent_label(), "82.5%");
        assert_eq!(rates["c"].percent_label(), "0.0%");
        assert_eq!(rates["a"].rate(), Some(Rate::new(7, 8)));
        assert_eq!(format_percent(&Rate::new(17, 23)), "73.9%");
        assert_eq!(format_percent(&Rate::new(3, 23)), "13.0%");
        assert_eq!(format_percent(&Rate::new(1, 1)), "100.0%");
    }
}
