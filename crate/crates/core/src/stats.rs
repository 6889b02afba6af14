//! Summary statistics for the evaluation harness: mean, sample variance,
//! one-sample t-test (two-sided p via the regularized incomplete beta
//! function) and the percent-increase comparison metric.

use alloc::vec::Vec;
use core::fmt;

use libm::{exp, fabs, log, sqrt};

#[derive(Debug, Clone, PartialEq)]
pub enum StatsError {
    /// Fewer than two samples.
    TooFewSamples,
    /// All samples equal: the t statistic is undefined.
    DegenerateSamples,
    /// percent_increase needs a strictly positive reference mean.
    NonPositiveReference,
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::TooFewSamples => write!(f, "need at least two samples"),
            StatsError::DegenerateSamples => {
                write!(f, "all samples are equal; t statistic undefined")
            }
            StatsError::NonPositiveReference => {
                write!(f, "reference mean must be positive")
            }
        }
    }
}

impl core::error::Error for StatsError {}

/// Mean, sample variance and standard deviation of a data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample variance (n − 1 denominator).
    pub variance: f64,
    pub std_dev: f64,
}

pub fn summarize(samples: &[f64]) -> Result<Summary, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFewSamples);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|&x| (x - mean) * (x - mean)).sum();
    let variance = ss / (n - 1.0);
    Ok(Summary {
        n: samples.len(),
        mean,
        variance,
        std_dev: sqrt(variance),
    })
}

/// One-sample t-test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub dof: usize,
}

/// Test whether the sample mean differs from `mu0`.
pub fn one_sample_t(samples: &[f64], mu0: f64) -> Result<TTest, StatsError> {
    let summary = summarize(samples)?;
    if summary.variance == 0.0 {
        return Err(StatsError::DegenerateSamples);
    }
    let n = summary.n as f64;
    let t = (summary.mean - mu0) / (summary.std_dev / sqrt(n));
    let dof = summary.n - 1;
    let p = student_t_two_sided_p(t, dof as f64);
    Ok(TTest { t, p, dof })
}

/// Relative improvement of `candidate_mean` over `reference_mean`, in
/// percent: `(reference − candidate) / candidate × 100`. Positive when the
/// candidate needs fewer color changes.
pub fn percent_increase(reference_mean: f64, candidate_mean: f64) -> Result<f64, StatsError> {
    if candidate_mean <= 0.0 {
        return Err(StatsError::NonPositiveReference);
    }
    Ok((reference_mean - candidate_mean) / candidate_mean * 100.0)
}

/// Two-sided p-value of the Student-t distribution with `dof` degrees of
/// freedom: `I_{ν/(ν+t²)}(ν/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    reg_inc_beta(dof / 2.0, 0.5, x)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * log(x) + b * log(1.0 - x);
    let front = exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

/// Lanczos approximation (g = 7, 9 terms); valid for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * log(2.0 * core::f64::consts::PI) + (x + 0.5) * log(t) - t + log(acc)
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 3e-14;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=200 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if fabs(del - 1.0) < EPS {
            break;
        }
    }
    h
}

/// Convenience: summarize integer counts.
pub fn summarize_counts(counts: &[usize]) -> Result<Summary, StatsError> {
    let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    summarize(&as_f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn summary_basics() {
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, 1.0);
        assert_eq!(s.std_dev, 1.0);
        assert!((s.variance - s.std_dev * s.std_dev).abs() < 1e-9);
    }

    #[test]
    fn t_test_symmetric_case() {
        let r = one_sample_t(&[1.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p - 1.0).abs() < 1e-12);
        assert_eq!(r.dof, 2);
    }

    #[test]
    fn t_test_known_quantile() {
        // t = 2.04523 at 29 dof is the 97.5% quantile → two-sided p = 0.05.
        let p = student_t_two_sided_p(2.04523, 29.0);
        assert!((p - 0.05).abs() < 1e-4, "p = {p}");
        // symmetry
        assert!((student_t_two_sided_p(-2.04523, 29.0) - p).abs() < 1e-12);
    }

    #[test]
    fn t_test_rejects_degenerate() {
        assert_eq!(
            one_sample_t(&[4.0, 4.0, 4.0], 4.0).unwrap_err(),
            StatsError::DegenerateSamples
        );
        assert_eq!(one_sample_t(&[4.0], 4.0).unwrap_err(), StatsError::TooFewSamples);
    }

    #[test]
    fn percent_increase_examples() {
        let v = percent_increase(34.38, 29.57).unwrap();
        assert!((v - 16.27).abs() < 0.05, "got {v}");
        assert_eq!(percent_increase(10.0, 10.0).unwrap(), 0.0);
        let v = percent_increase(34.0, 29.0).unwrap();
        assert!((v - 17.24).abs() < 0.01, "got {v}");
        assert!(percent_increase(10.0, 0.0).is_err());
    }

    #[test]
    fn incomplete_beta_sanity() {
        // I_x(1, 1) = x
        for &x in &[0.1, 0.5, 0.9] {
            assert!((reg_inc_beta(1.0, 1.0, x) - x).abs() < 1e-12);
        }
        // I_x(a, b) + I_{1-x}(b, a) = 1
        let lhs = reg_inc_beta(2.5, 3.5, 0.3) + reg_inc_beta(3.5, 2.5, 0.7);
        assert!((lhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn count_summary_matches_float_path() {
        let counts = vec![3usize, 5, 7];
        let s = summarize_counts(&counts).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.variance, 4.0);
    }
}
