//! Two-sided Student t-tests on per-example metric values.

use serde::Serialize;
use statrs::function::beta::beta_reg;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestMode {
    Paired,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
    pub mean_difference: f64,
    /// Set when the standard error is zero but the means differ.
    pub warning: Option<String>,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Two-sided tail probability `P(|T| ≥ |t|)` for `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

fn degenerate(diff: f64, df: f64) -> TTest {
    if diff == 0.0 {
        return TTest { t: 0.0, p: 1.0, df, mean_difference: 0.0, warning: None };
    }
    TTest {
        t: f64::INFINITY.copysign(diff),
        p: 0.0,
        df,
        mean_difference: diff,
        warning: Some("zero variance with a nonzero mean difference".into()),
    }
}

/// Paired t-test on `a − b`, or Welch's unequal-variance test.
pub fn significance(a: &[f64], b: &[f64], mode: TestMode) -> Result<TTest, HarnessError> {
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(HarnessError::Stats("non-finite value".into()));
    }
    match mode {
        TestMode::Paired => {
            if a.len() != b.len() {
                return Err(HarnessError::Stats(format!(
                    "paired test needs equal lengths, got {} and {}",
                    a.len(),
                    b.len()
                )));
            }
            if a.len() < 2 {
                return Err(HarnessError::Stats("paired test needs at least 2 pairs".into()));
            }
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let n = d.len() as f64;
            let (m, df) = (mean(&d), n - 1.0);
            let se = (variance(&d) / n).sqrt();
            if se == 0.0 {
                return Ok(degenerate(m, df));
            }
            let t = m / se;
            Ok(TTest { t, p: two_sided_p(t, df), df, mean_difference: m, warning: None })
        }
        TestMode::Independent => {
            if a.len() < 2 || b.len() < 2 {
                return Err(HarnessError::Stats("independent test needs at least 2 values per sample".into()));
            }
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let (va, vb) = (variance(a) / na, variance(b) / nb);
            let m = mean(a) - mean(b);
            let se2 = va + vb;
            if se2 == 0.0 {
                return Ok(degenerate(m, na + nb - 2.0));
            }
            let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
            let t = m / se2.sqrt();
            Ok(TTest { t, p: two_sided_p(t, df), df, mean_difference: m, warning: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_hand_example() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = significance(&a, &[0.0; 5], TestMode::Paired).unwrap();
        assert!((r.t - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, 4.0);
        assert!((r.p - 0.013235599563682695).abs() < 1e-12, "{}", r.p);
    }

    #[test]
    fn identical_inputs() {
        let a = [0.3, 0.5, 0.9];
        for mode in [TestMode::Paired, TestMode::Independent] {
            let r = significance(&a, &a, mode).unwrap();
            assert_eq!((r.t, r.p), (0.0, 1.0));
        }
    }

    #[test]
    fn constant_shift_is_flagged() {
        let r = significance(&[2.0, 3.0], &[1.0, 2.0], TestMode::Paired).unwrap();
        assert_eq!((r.t, r.p), (f64::INFINITY, 0.0));
        assert!(r.warning.is_some());
    }

    #[test]
    fn welch_reference_value() {
        // Reference values from scipy.stats.ttest_ind(equal_var=False).
        let a = [19.8, 20.4, 19.6, 17.8, 18.5, 18.9, 18.3, 18.9, 19.5, 22.0];
        let b = [
            28.2, 26.6, 20.1, 23.3, 25.2, 22.1, 17.7, 27.6, 20.6, 13.7, 23.2, 17.5, 20.6, 18.0, 23.9, 21.6, 24.3, 20.4,
            23.9, 13.3,
        ];
        let r = significance(&a, &b, TestMode::Independent).unwrap();
        assert!((r.t - -2.225512039969852).abs() < 1e-12, "{}", r.t);
        assert!((r.df - 24.524634944257343).abs() < 1e-9, "{}", r.df);
        assert!((r.p - 0.035484530830010325).abs() < 1e-12, "{}", r.p);
    }

    #[test]
    fn input_errors() {
        assert!(significance(&[1.0], &[1.0], TestMode::Paired).is_err());
        assert!(significance(&[1.0, 2.0], &[1.0], TestMode::Paired).is_err());
        assert!(significance(&[1.0, 2.0], &[1.0], TestMode::Independent).is_err());
        assert!(significance(&[1.0, f64::NAN], &[1.0, 2.0], TestMode::Independent).is_err());
    }
}
