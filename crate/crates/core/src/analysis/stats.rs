//! Repeated-measures ANOVA and the paired t-test, with in-house
//! p-values via the regularized incomplete beta function (no external
//! statistics dependency; target accuracy 1e-6 against references).

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

/// Errors from the statistical tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsError {
    NeedTwoSubjects,
    NeedTwoConditions,
    /// Every subject must have a value for every condition.
    RaggedMatrix,
    LengthMismatch,
    /// Paired tests need at least two pairs.
    TooShort,
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::NeedTwoSubjects => write!(f, "need at least 2 subjects"),
            StatsError::NeedTwoConditions => write!(f, "need at least 2 conditions"),
            StatsError::RaggedMatrix => write!(f, "missing cells: all rows must have equal length"),
            StatsError::LengthMismatch => write!(f, "paired samples must have equal length"),
            StatsError::TooShort => write!(f, "need at least 2 pairs"),
        }
    }
}

/// Result of a single-factor repeated-measures ANOVA.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnovaResult {
    pub f_statistic: f64,
    /// Numerator and denominator degrees of freedom:
    /// `(k - 1, (k - 1)(n - 1))`.
    pub df: (usize, usize),
    pub p_value: f64,
}

/// Result of a two-sided paired t-test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TTestResult {
    pub t_statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Set when the difference variance was zero and the t statistic is
    /// undefined; the p-value is then 1 for a zero mean difference and
    /// 0 otherwise.
    pub degenerate: bool,
}

/// Single-factor repeated-measures ANOVA over a `subjects x conditions`
/// matrix: subject effects are removed, `F = MS_conditions / MS_error`
/// with `df = (k - 1, (k - 1)(n - 1))`, and the p-value is the upper
/// tail of the F distribution.
pub fn rm_anova(data: &[Vec<f64>]) -> Result<AnovaResult, StatsError> {
    let n = data.len();
    if n < 2 {
        return Err(StatsError::NeedTwoSubjects);
    }
    let k = data[0].len();
    if k < 2 {
        return Err(StatsError::NeedTwoConditions);
    }
    if data.iter().any(|row| row.len() != k) {
        return Err(StatsError::RaggedMatrix);
    }

    let nf = n as f64;
    let kf = k as f64;
    let grand = data.iter().flatten().sum::<f64>() / (nf * kf);
    let subject_means: Vec<f64> = data.iter().map(|row| row.iter().sum::<f64>() / kf).collect();
    let mut condition_means = alloc::vec![0.0f64; k];
    for row in data {
        for (j, &v) in row.iter().enumerate() {
            condition_means[j] += v;
        }
    }
    for m in &mut condition_means {
        *m /= nf;
    }

    let ss_conditions: f64 = condition_means
        .iter()
        .map(|&m| nf * (m - grand) * (m - grand))
        .sum();
    let ss_error: f64 = data
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let r = v - subject_means[i] - condition_means[j] + grand;
                    r * r
                })
                .sum::<f64>()
        })
        .sum();

    let df = (k - 1, (k - 1) * (n - 1));
    let ms_conditions = ss_conditions / df.0 as f64;
    let ms_error = ss_error / df.1 as f64;
    let f_statistic = if ss_conditions <= 0.0 {
        0.0
    } else if ms_error <= 0.0 {
        f64::INFINITY
    } else {
        ms_conditions / ms_error
    };
    Ok(AnovaResult {
        f_statistic,
        df,
        p_value: f_tail_probability(f_statistic, df.0, df.1),
    })
}

/// Two-sided paired t-test: `t = mean(d) / (sd(d) / sqrt(n))` with
/// `df = n - 1` on the pairwise differences `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch);
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::TooShort);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    let df = n - 1;
    if var <= 0.0 {
        return Ok(TTestResult {
            t_statistic: 0.0,
            df,
            p_value: if mean == 0.0 { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    let t_statistic = mean / (var / nf).sqrt();
    Ok(TTestResult {
        t_statistic,
        df,
        p_value: student_two_sided(t_statistic, df),
        degenerate: false,
    })
}

/// Upper tail of the F distribution,
/// `P(F(df1, df2) > f) = I_{df2/(df2 + df1 f)}(df2/2, df1/2)`.
pub fn f_tail_probability(f: f64, df1: usize, df2: usize) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let d1 = df1 as f64;
    let d2 = df2 as f64;
    reg_inc_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f))
}

/// Two-sided Student-t p-value,
/// `P(|T_df| > |t|) = I_{df/(df + t^2)}(df/2, 1/2)`.
pub fn student_two_sided(t: f64, df: usize) -> f64 {
    let d = df as f64;
    reg_inc_beta(0.5 * d, 0.5, d / (d + t * t))
}

/// Regularized incomplete beta function `I_x(a, b)` by the continued
/// fraction expansion with modified Lentz evaluation.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fast on the side of the split point.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 400;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let numerator = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let numerator = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    let pi = core::f64::consts::PI;
    if x < 0.5 {
        // Reflection formula keeps the series in its stable range.
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = 0.999_999_999_999_809_9_f64;
        for (i, &c) in COEFFS.iter().enumerate() {
            acc += c / (x + (i + 1) as f64);
        }
        let t = x + 7.5;
        0.5 * (2.0 * pi).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}
