//! Statistics for comparing predictors: paired t-tests, correlation, and
//! least-squares regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::metrics::MetricRow;

// Lanczos approximation, g = 7, nine terms.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

// Continued fraction for the incomplete beta, modified Lentz.
fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_fraction(b, a, 1.0 - x) / b
    }
}

/// CDF of Student's t distribution with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_incomplete_beta(x, 0.5 * df, 0.5);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub mean_diff: f64,
    pub t: f64,
    pub df: usize,
    pub p_two_sided: f64,
    /// P-value against the alternative that `xs` is smaller on average.
    pub p_less: f64,
    /// P-value against the alternative that `xs` is larger on average.
    pub p_greater: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Paired-sample t-test of `xs - ys`.
pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<TTest, Error> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let diffs: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    let m = mean(&diffs);
    let var = diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::DegenerateSample);
    }
    let t = m / (var / n as f64).sqrt();
    let df = n - 1;
    let lower = student_t_cdf(t, df as f64);
    let upper = student_t_cdf(-t, df as f64);
    Ok(TTest {
        mean_diff: m,
        t,
        df,
        p_two_sided: (2.0 * lower.min(upper)).min(1.0),
        p_less: lower,
        p_greater: upper,
    })
}

/// Sample correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, Error> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: xs.len(),
        });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Intercept first, then one slope per covariate column.
    pub coefficients: Vec<f64>,
    /// `None` when there are no residual degrees of freedom.
    pub standard_errors: Option<Vec<f64>>,
    /// Zero when `y` is constant.
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

/// Least squares of `y` on an intercept plus `columns`.
pub fn ols(y: &[f64], columns: &[Vec<f64>]) -> Result<OlsFit, Error> {
    let n = y.len();
    let k = columns.len() + 1;
    if n < k {
        return Err(Error::TooFewObservations { needed: k, got: n });
    }
    for col in columns {
        if col.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: col.len(),
            });
        }
    }
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let svd = x.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if !(s_min > s_max * 1e-10) {
        return Err(Error::RankDeficient);
    }
    let yv = DVector::from_column_slice(y);
    let beta = svd.solve(&yv, 0.0).map_err(|_| Error::RankDeficient)?;
    let residuals = &yv - &x * &beta;
    let ssr = residuals.norm_squared();
    let my = mean(y);
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 };
    let standard_errors = (n > k).then(|| {
        let sigma2 = ssr / (n - k) as f64;
        // (X'X)^-1 = V diag(1/s^2) V'.
        let v_t = svd.v_t.as_ref().expect("computed");
        (0..k)
            .map(|j| {
                let var: f64 = (0..k)
                    .map(|r| v_t[(r, j)].powi(2) / svd.singular_values[r].powi(2))
                    .sum();
                (sigma2 * var).sqrt()
            })
            .collect()
    });
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        r_squared,
        residuals: residuals.iter().copied().collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    D,
    Evpp,
}

impl Measure {
    pub const ALL: [Measure; 2] = [Measure::D, Measure::Evpp];

    pub fn name(self) -> &'static str {
        match self {
            Measure::D => "d",
            Measure::Evpp => "evpp",
        }
    }

    fn of(self, row: &MetricRow) -> f64 {
        match self {
            Measure::D => row.d,
            Measure::Evpp => row.evpp,
        }
    }
}

/// Per-game metrics of one predictor, in game order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorResults {
    pub name: String,
    pub rows: Vec<MetricRow>,
}

impl PredictorResults {
    pub fn values(&self, measure: Measure) -> Vec<f64> {
        self.rows.iter().map(|r| measure.of(r)).collect()
    }

    pub fn mean(&self, measure: Measure) -> f64 {
        mean(&self.values(measure))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub first: String,
    pub second: String,
    pub measure: Measure,
    /// Mean of `first - second`.
    pub mean_diff: f64,
    /// `None` when the two predictors agree on every game.
    pub test: Option<TTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub predictors: Vec<String>,
    pub comparisons: Vec<PairComparison>,
}

impl PairwiseReport {
    /// Mean difference and two-sided p-value of `a - b`, from either
    /// orientation.
    pub fn lookup(&self, a: &str, b: &str, measure: Measure) -> Option<(f64, Option<f64>)> {
        self.comparisons.iter().find_map(|c| {
            if c.measure != measure {
                return None;
            }
            let p = c.test.map(|t| t.p_two_sided);
            if c.first == a && c.second == b {
                Some((c.mean_diff, p))
            } else if c.first == b && c.second == a {
                Some((-c.mean_diff, p))
            } else {
                None
            }
        })
    }
}

/// Paired t-tests for every unordered pair of predictors and each measure.
pub fn pairwise_comparison_report(results: &[PredictorResults]) -> Result<PairwiseReport, Error> {
    if let Some(first) = results.first() {
        for r in &results[1..] {
            if r.rows.len() != first.rows.len() {
                return Err(Error::LengthMismatch {
                    left: first.rows.len(),
                    right: r.rows.len(),
                });
            }
            let misaligned: Vec<&str> = r
                .rows
                .iter()
                .zip(&first.rows)
                .filter(|(a, b)| a.game_id != b.game_id)
                .map(|(a, _)| a.game_id.as_str())
                .collect();
            if !misaligned.is_empty() {
                return Err(Error::UnknownGames(misaligned.join(", ")));
            }
        }
    }
    let mut comparisons = Vec::new();
    for measure in Measure::ALL {
        for (i, a) in results.iter().enumerate() {
            for b in &results[i + 1..] {
                let (xs, ys) = (a.values(measure), b.values(measure));
                let test = match paired_t_test(&xs, &ys) {
                    Ok(t) => Some(t),
                    Err(Error::DegenerateSample) => None,
                    Err(e) => return Err(e),
                };
                comparisons.push(PairComparison {
                    first: a.name.clone(),
                    second: b.name.clone(),
                    measure,
                    mean_diff: mean(&xs) - mean(&ys),
                    test,
                });
            }
        }
    }
    Ok(PairwiseReport {
        predictors: results.iter().map(|r| r.name.clone()).collect(),
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(10.0), 362_880f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn t_cdf_closed_forms() {
        // df 1 is Cauchy; df 2 has an algebraic CDF.
        for t in [-30.0, -3.0, -0.7, 0.0, 0.4, 2.5, 12.0] {
            let cauchy = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert_abs_diff_eq!(student_t_cdf(t, 1.0), cauchy, epsilon = 1e-12);
            let df2 = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
            assert_abs_diff_eq!(student_t_cdf(t, 2.0), df2, epsilon = 1e-12);
        }
    }

    #[test]
    fn t_cdf_matches_reference_implementation() {
        for df in [1.0, 2.0, 3.0, 5.0, 9.0, 29.0, 59.0, 200.0] {
            let reference = StudentsT::new(0.0, 1.0, df).unwrap();
            for i in -80..=80 {
                let t = i as f64 * 0.125;
                let ours = student_t_cdf(t, df);
                assert!((ours - reference.cdf(t)).abs() < 1e-8, "df {df} t {t}: {ours} vs {}", reference.cdf(t));
            }
        }
    }

    #[test]
    fn paired_t_example() {
        let r = paired_t_test(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        let t = 2.0 * 3f64.sqrt();
        assert_abs_diff_eq!(r.t, t, epsilon = 1e-12);
        assert_eq!(r.df, 2);
        assert_abs_diff_eq!(r.p_two_sided, 1.0 - t / (2.0 + t * t).sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(r.p_two_sided, 0.0742, epsilon = 5e-5);
        assert_abs_diff_eq!(r.p_greater * 2.0, r.p_two_sided, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_less + r.p_greater, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn paired_t_errors() {
        let xs = [1.0, 4.0, 2.0];
        assert!(matches!(paired_t_test(&xs, &xs), Err(Error::DegenerateSample)));
        assert!(matches!(paired_t_test(&xs, &xs[..2]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(paired_t_test(&xs[..1], &xs[..1]), Err(Error::TooFewObservations { .. })));
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 3.0, 2.0, 7.0, 5.0];
        assert_abs_diff_eq!(pearson(&xs, &xs).unwrap(), 1.0, epsilon = 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_abs_diff_eq!(pearson(&xs, &neg).unwrap(), -1.0, epsilon = 1e-12);
        assert!(matches!(pearson(&xs, &[2.0; 5]), Err(Error::ZeroVariance)));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..10.0)).collect();
        let b: Vec<f64> = a.iter().map(|x| x + rng.random_range(-4.0..4.0)).collect();
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
        let sa = (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let sb = (b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert_abs_diff_eq!(pearson(&a, &b).unwrap(), cov / (sa * sb), epsilon = 1e-12);
    }

    #[test]
    fn ols_exact_fit() {
        let x1: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let x2: Vec<f64> = (0..10).map(|i| ((i * 7) % 5) as f64).collect();
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 3.0 - 2.0 * a + 0.5 * b).collect();
        let fit = ols(&y, &[x1, x2]).unwrap();
        for (c, e) in fit.coefficients.iter().zip([3.0, -2.0, 0.5]) {
            assert_abs_diff_eq!(*c, e, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        assert!(fit.standard_errors.unwrap().iter().all(|s| *s < 1e-6));
    }

    #[test]
    fn ols_constant_response() {
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 1.5).collect();
        let fit = ols(&[4.0; 8], &[x]).unwrap();
        assert_abs_diff_eq!(fit.coefficients[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[0], 4.0, epsilon = 1e-12);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn ols_rejects_rank_deficiency() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!(matches!(ols(&[1.0, 2.0, 0.0, 5.0, 3.0, 1.0], &[x.clone(), doubled]), Err(Error::RankDeficient)));
        assert!(matches!(ols(&[1.0; 6], &[vec![3.0; 6]]), Err(Error::RankDeficient)));
        assert!(matches!(ols(&[1.0], &[vec![3.0]]), Err(Error::TooFewObservations { .. })));
        let exact = ols(&[1.0, 2.0], &[vec![0.0, 1.0]]).unwrap();
        assert!(exact.standard_errors.is_none());
    }

    #[test]
    fn ols_standard_errors_match_textbook_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..10.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v + rng.random_range(-1.0..1.0)).collect();
        let fit = ols(&y, &[x.clone()]).unwrap();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let ssr: f64 = fit.residuals.iter().map(|r| r * r).sum();
        let s2 = ssr / (n - 2.0);
        let se = fit.standard_errors.unwrap();
        assert_abs_diff_eq!(se[1], (s2 / sxx).sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(se[0], (s2 * (1.0 / n + mx * mx / sxx)).sqrt(), epsilon = 1e-10);
    }

    fn results(name: &str, values: &[(f64, f64)]) -> PredictorResults {
        PredictorResults {
            name: name.into(),
            rows: values
                .iter()
                .enumerate()
                .map(|(i, &(d, evpp))| MetricRow {
                    game_id: format!("game-{:03}", i + 1),
                    d,
                    evpp,
                })
                .collect(),
        }
    }

    #[test]
    fn pairwise_report_structure() {
        let a = results("a", &[(1.0, 2.0), (2.0, 3.0), (4.0, 3.5)]);
        let b = results("b", &[(2.0, 1.0), (2.5, 1.5), (3.0, 2.0)]);
        let c = results("c", &[(0.0, 0.0), (1.0, 1.0), (0.5, 0.0)]);
        let report = pairwise_comparison_report(&[a.clone(), b, c]).unwrap();
        assert_eq!(report.comparisons.len(), 6);
        assert!(report.comparisons.iter().all(|c| c.first != c.second));
        let (ab, pab) = report.lookup("a", "b", Measure::Evpp).unwrap();
        let (ba, pba) = report.lookup("b", "a", Measure::Evpp).unwrap();
        assert_eq!(ab, -ba);
        assert_eq!(pab, pba);
        assert!(report.lookup("a", "a", Measure::D).is_none());

        let same = pairwise_comparison_report(&[a.clone(), PredictorResults { name: "a2".into(), ..a.clone() }]).unwrap();
        assert!(same.comparisons.iter().all(|c| c.test.is_none() && c.mean_diff == 0.0));

        let mut shifted = a.clone();
        shifted.rows[0].game_id = "other".into();
        assert!(matches!(pairwise_comparison_report(&[a, shifted]), Err(Error::UnknownGames(_))));
    }

    proptest! {
        #[test]
        fn t_test_antisymmetric(pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40)) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(r) = paired_t_test(&xs, &ys) {
                let s = paired_t_test(&ys, &xs).unwrap();
                prop_assert!((r.t + s.t).abs() < 1e-9 * (1.0 + r.t.abs()));
                prop_assert!((r.p_two_sided - s.p_two_sided).abs() < 1e-12);
                prop_assert!(r.p_two_sided > 0.0 && r.p_two_sided <= 1.0);
            }
        }

        #[test]
        fn pearson_affine_invariant(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..30), a in 0.1f64..10.0, b in -20.0f64..20.0) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(r) = pearson(&xs, &ys) {
                let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
                let r2 = pearson(&scaled, &ys).unwrap();
                prop_assert!((r - r2).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn ols_residuals_orthogonal(rows in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -50.0f64..50.0), 5..40)) {
            let x1: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let x2: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
            if let Ok(fit) = ols(&y, &[x1.clone(), x2.clone()]) {
                let scale = y.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
                let sum: f64 = fit.residuals.iter().sum();
                prop_assert!(sum.abs() < 1e-6 * scale);
                for col in [&x1, &x2] {
                    let dot: f64 = fit.residuals.iter().zip(col.iter()).map(|(r, x)| r * x).sum();
                    prop_assert!(dot.abs() < 1e-6 * scale * 10.0);
                }
            }
        }
    }
}
