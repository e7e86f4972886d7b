//! Paired Student's t-tests, fold-averaged p-value curves and
//! discriminative power.

use alloc::vec::Vec;

use crate::math;
use crate::metrics::Metric;
use crate::{Error, Result};

/// Smallest positive `f64`; reported when a difference has zero variance
/// but non-zero mean.
pub const SMALLEST_P: f64 = 5e-324;

/// Sidedness of the paired test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Tail {
    #[default]
    Two,
    /// One-sided in the direction of the observed mean difference: half the
    /// two-sided p-value.
    One,
}

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_087_071_713_675_677;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// Tail of the Stirling series for ln Gamma(z), z >= 10.
fn stirling_tail(z: f64) -> f64 {
    // B_2k / (2k (2k - 1))
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let z2 = 1.0 / (z * z);
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * z2 + c;
    }
    acc / z
}

/// ln Gamma(a) - ln Gamma(a + b) for a >= 10, without forming either term.
fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    -(a - 0.5) * math::ln1p(b / a) - b * math::ln(a + b) + b + stirling_tail(a) - stirling_tail(a + b)
}

fn ln_gamma(x: f64) -> f64 {
    if x == 0.5 {
        LN_SQRT_PI
    } else if x >= 10.0 {
        (x - 0.5) * math::ln(x) - x + HALF_LN_2PI + stirling_tail(x)
    } else {
        libm::lgamma(x)
    }
}

/// ln B(a, b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (small, big) = if a < b { (a, b) } else { (b, a) };
    if big >= 10.0 {
        ln_gamma(small) + ln_gamma_ratio(big, small)
    } else {
        ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
    }
}

/// Continued fraction for I_x(a, b) (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
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
    for m in 1..100_000 {
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

/// Regularized incomplete beta I_x(a, b), with `x` and `1 - x` passed
/// separately so callers can supply an accurately computed complement.
fn inc_beta_parts(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    let ln_front = |a: f64, b: f64, x: f64, y: f64| a * math::ln(x) + b * math::ln(y) - ln_beta(a, b) - math::ln(a);
    if x < (a + 1.0) / (a + b + 2.0) {
        math::exp(ln_front(a, b, x, one_minus_x)) * beta_cf(a, b, x)
    } else {
        1.0 - math::exp(ln_front(b, a, one_minus_x, x)) * beta_cf(b, a, one_minus_x)
    }
}

/// Regularized incomplete beta function I_x(a, b).
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    inc_beta_parts(a, b, x, 1.0 - x)
}

/// Two-sided tail probability P(|T| >= |t|) of Student's t with `df`
/// degrees of freedom.
pub fn student_two_tail(t: f64, df: u64) -> f64 {
    if t == 0.0 || df == 0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let nu = df as f64;
    let t2 = t * t;
    let denom = nu + t2;
    let p = inc_beta_parts(0.5 * nu, 0.5, nu / denom, t2 / denom);
    p.clamp(0.0, 1.0)
}

/// Paired t-test on `x - y`. Both slices are paired by position.
///
/// All-zero differences give p = 1. Constant non-zero differences give
/// [`SMALLEST_P`].
pub fn paired_t_test(x: &[f64], y: &[f64], tail: Tail) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(n));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let p = if d.iter().all(|v| *v == d[0]) {
        if d[0] == 0.0 {
            return Ok(1.0);
        }
        SMALLEST_P
    } else {
        let mean = math::mean(&d);
        let sd = math::sample_sd(&d);
        if sd == 0.0 {
            SMALLEST_P
        } else {
            let t = mean * math::sqrt(n as f64) / sd;
            student_two_tail(t, (n - 1) as u64)
        }
    };
    let p = match tail {
        Tail::Two => p,
        Tail::One => 0.5 * p,
    };
    Ok(p.clamp(SMALLEST_P, 1.0))
}

/// Sorted per-fold p-values with their rank-wise mean and spread.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PValueCurve {
    pub metric: Metric,
    pub pairs: usize,
    pub per_fold: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Sorts each fold's p-values descending and averages rank-wise across
/// folds; `sigma` is the rank-wise sample standard deviation.
pub fn build_curve(metric: Metric, per_fold: Vec<Vec<f64>>) -> Result<PValueCurve> {
    let Some(first) = per_fold.first() else {
        return Err(Error::InvalidArgument("no folds to build a curve from".into()));
    };
    let m = first.len();
    if m == 0 || per_fold.iter().any(|f| f.len() != m) {
        return Err(Error::InvalidArgument(
            "every fold must contribute the same non-zero number of p-values".into(),
        ));
    }
    if per_fold.iter().flatten().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        return Err(Error::InvalidArgument("p-values must lie in (0, 1]".into()));
    }
    let mut per_fold = per_fold;
    for f in &mut per_fold {
        f.sort_by(|a, b| b.total_cmp(a));
    }
    let mut mean = Vec::with_capacity(m);
    let mut sigma = Vec::with_capacity(m);
    let mut column = Vec::with_capacity(per_fold.len());
    for r in 0..m {
        column.clear();
        column.extend(per_fold.iter().map(|f| f[r]));
        mean.push(math::mean(&column));
        sigma.push(math::sample_sd(&column));
    }
    Ok(PValueCurve {
        metric,
        pairs: m,
        per_fold,
        mean,
        sigma,
    })
}

/// `(dp, dp_plus_sigma)`: the sum of the mean curve, and the sum of the
/// mean + sigma curve clamped at 1 per rank.
pub fn discriminative_power(curve: &PValueCurve) -> (f64, f64) {
    let dp = curve.mean.iter().sum();
    let dp_sigma = curve.mean.iter().zip(&curve.sigma).map(|(m, s)| (m + s).min(1.0)).sum();
    (dp, dp_sigma)
}
