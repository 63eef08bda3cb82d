//! Statistical utilities: error function, normal CDF, one- and two-sample
//! Kolmogorov-Smirnov tests, ordinary least squares on scaling data and
//! compensated summation.

use crate::{Error, Result};

/// Error function, accurate to ~1e-15. Series for small arguments,
/// continued fraction (modified Lentz) for the complementary function at
/// large arguments.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x <= 3.0 {
        erf_series(x)
    } else {
        1.0 - erfc_cf(x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x <= 3.0 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

/// erf(x) = 2x e^{-x^2}/sqrt(pi) * sum_k (2x^2)^k / (2k+1)!!
fn erf_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = 2.0 * x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 1u32;
    while term > 1e-18 * sum && k < 200 {
        term *= x2 / (2.0 * k as f64 + 1.0);
        sum += term;
        k += 1;
    }
    2.0 * x * (-x * x).exp() / std::f64::consts::PI.sqrt() * sum
}

/// Laplace continued fraction,
/// `erfc(x) = e^{-x^2}/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated with the modified Lentz algorithm. Fast for x >= 3.
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x; // b0
    let mut c = f;
    let mut d = 0.0f64;
    for j in 1..200 {
        let a = j as f64 / 2.0;
        let b = x;
        d = b + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() / f
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Survival function of the Kolmogorov distribution,
/// `Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0f64;
    for k in 1..200 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        if term < 1e-18 {
            break;
        }
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS statistic of `samples` against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((f - i as f64 / n).abs());
        sup = sup.max(((i as f64 + 1.0) / n - f).abs());
    }
    sup
}

/// One-sample KS statistic against the standard normal.
pub fn ks_statistic_normal(samples: &[f64]) -> f64 {
    ks_statistic(samples, normal_cdf)
}

/// Two-sample KS statistic and asymptotic p-value. Ties (e.g. integer
/// counts) are handled by stepping both empirical CDFs across equal
/// values; the asymptotic p-value is conservative for discrete data.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        sup = sup.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    (sup, kolmogorov_sf(sup * ne.sqrt()))
}

/// Least-squares line fit with a confidence interval on the slope.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Half-width of the 95% confidence interval on the slope.
    pub slope_ci95: f64,
}

/// Two-sided 97.5% Student-t quantiles for small degrees of freedom.
const T975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];

fn t975(df: usize) -> f64 {
    if df == 0 {
        f64::INFINITY
    } else if df <= 30 {
        T975[df - 1]
    } else {
        1.96
    }
}

/// Ordinary least squares of `ys` on `xs`.
pub fn ols_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::InvalidArgument { detail: "need at least 2 points".into() });
    }
    let xbar = xs.iter().sum::<f64>() / n as f64;
    let ybar = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|&x| (x - xbar) * (x - xbar)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument { detail: "degenerate abscissae".into() });
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let df = n.saturating_sub(2);
    let resid_var = if df > 0 {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum::<f64>()
            / df as f64
    } else {
        0.0
    };
    let slope_se = (resid_var / sxx).sqrt();
    Ok(LineFit { slope, intercept, slope_se, slope_ci95: t975(df) * slope_se })
}

/// Kahan-compensated accumulator; order-independent aggregation to within
/// one rounding step, so parallel and serial reductions agree when fed in
/// a fixed order.
#[derive(Debug, Clone, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Mean and standard error of a sample (Kahan-compensated).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = KahanSum::default();
    for &x in xs {
        s.add(x);
    }
    let mean = s.value() / n;
    let mut sq = KahanSum::default();
    for &x in xs {
        sq.add((x - mean) * (x - mean));
    }
    let var = if xs.len() > 1 { sq.value() / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}
