use serde::{Deserialize, Serialize};

use super::lenient_f64;
use super::special::{f_tail, t_tail};
use crate::error::{Error, Result};

/// Results with `p` below this are flagged significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    #[serde(with = "lenient_f64")]
    pub t: f64,
    pub df: usize,
    pub p_two_sided: f64,
    pub mean_diff: f64,
    pub n_pairs: usize,
}

impl TTestResult {
    pub fn is_significant(&self, alpha: f64) -> bool {
        self.p_two_sided < alpha
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub adj_r2: f64,
    #[serde(with = "lenient_f64")]
    pub f_stat: f64,
    /// `(1, n - 2)`
    pub df: (usize, usize),
    pub p: f64,
    #[serde(with = "lenient_f64")]
    pub slope_t: f64,
    pub slope_se: f64,
    pub n: usize,
}

impl RegressionResult {
    pub fn is_significant(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<TTestResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewPairs { needed: 2, got: n });
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    if d.iter().all(|v| *v == d[0]) {
        return Err(Error::ZeroVarianceDifferences);
    }
    let m = mean(&d);
    let var = d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    let t = m / (var.sqrt() / (n as f64).sqrt());
    let df = n - 1;
    Ok(TTestResult {
        t,
        df,
        p_two_sided: t_tail(t, df as f64)?,
        mean_diff: m,
        n_pairs: n,
    })
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ConstantPredictor);
    }
    if syy == 0.0 {
        return Err(Error::ConstantResponse);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0);
    let dfe = (n - 2) as f64;
    let adj_r2 = 1.0 - (1.0 - r2) * (n - 1) as f64 / dfe;
    // Residuals summed directly; syy (1 - r2) cancels badly for a tight fit.
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = (b - my) - slope * (a - mx);
            r * r
        })
        .sum();
    let slope_se = (sse / dfe / sxx).sqrt();
    let (f_stat, slope_t) = if sse > 0.0 && r2 < 1.0 {
        (slope * sxy * dfe / sse, slope / slope_se)
    } else {
        (f64::INFINITY, f64::INFINITY.copysign(slope))
    };
    Ok(RegressionResult {
        slope,
        intercept,
        r2,
        adj_r2,
        f_stat,
        df: (1, n - 2),
        p: f_tail(f_stat, 1.0, dfe)?,
        slope_t,
        slope_se,
        n,
    })
}
