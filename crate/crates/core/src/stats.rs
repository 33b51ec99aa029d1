//! Descriptive statistics, distribution fitting and correlation helpers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, LogNormal, Weibull};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

/// Values at 0 or 1 are clamped to `[CLAMP_EPS, 1 - CLAMP_EPS]` before fitting.
pub const CLAMP_EPS: f64 = 1e-6;
/// Number of free parameters of every supported family.
pub const FIT_PARAMETERS: usize = 2;
const LL_TOLERANCE: f64 = 1e-9;
const MAX_ITERATIONS: usize = 500;
const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Beta,
    Weibull,
    LogNormal,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Beta, Family::Weibull, Family::LogNormal];

    pub fn name(self) -> &'static str {
        match self {
            Family::Beta => "beta",
            Family::Weibull => "weibull",
            Family::LogNormal => "lognormal",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "beta" => Ok(Family::Beta),
            "weibull" => Ok(Family::Weibull),
            "lognormal" => Ok(Family::LogNormal),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }
}

/// Maximum-likelihood fit of one family.
///
/// `params` are `(α, β)` for beta, `(shape, scale)` for Weibull and `(μ, σ)`
/// for lognormal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFit {
    pub family: Family,
    pub params: [f64; 2],
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
}

impl DistributionFit {
    /// Completes a fit from its log-likelihood: `aic = 2k - 2LL`,
    /// `bic = k ln n - 2LL` with `k = 2`.
    pub fn from_log_likelihood(family: Family, params: [f64; 2], log_likelihood: f64, n: usize) -> Self {
        let (aic, bic) = information_criteria(log_likelihood, n);
        DistributionFit {
            family,
            params,
            log_likelihood,
            aic,
            bic,
            n,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let [a, b] = self.params;
        match self.family {
            Family::Beta => Beta::new(a, b).map(|d| d.cdf(x)).unwrap_or(f64::NAN),
            Family::Weibull => Weibull::new(a, b).map(|d| d.cdf(x)).unwrap_or(f64::NAN),
            Family::LogNormal => LogNormal::new(a, b).map(|d| d.cdf(x)).unwrap_or(f64::NAN),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let [a, b] = self.params;
        match self.family {
            Family::Beta => Beta::new(a, b).map(|d| d.inverse_cdf(p)).unwrap_or(f64::NAN),
            // Closed forms are exact where statrs would bisect.
            Family::Weibull => b * (-(1.0 - p).ln()).powf(1.0 / a),
            Family::LogNormal => LogNormal::new(a, b).map(|d| d.inverse_cdf(p)).unwrap_or(f64::NAN),
        }
    }
}

/// `(aic, bic)` for a two-parameter model.
pub fn information_criteria(log_likelihood: f64, n: usize) -> (f64, f64) {
    let k = FIT_PARAMETERS as f64;
    let aic = 2.0 * k - 2.0 * log_likelihood;
    let bic = k * (n as f64).ln() - 2.0 * log_likelihood;
    (aic, bic)
}

fn clamp_unit(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| v.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS))
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Maximum-likelihood fit of `family` to values in `[0, 1]`.
pub fn fit_distribution(values: &[f64], family: Family) -> Result<DistributionFit> {
    if values.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_SAMPLES} values, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Fit(format!("value {v} outside [0, 1]")));
    }
    let xs = clamp_unit(values);
    let first = xs[0];
    if xs.iter().all(|&x| x == first) {
        return Err(Error::Fit("degenerate sample: zero variance".into()));
    }
    let (params, ll) = match family {
        Family::Weibull => fit_weibull(&xs)?,
        Family::LogNormal => fit_lognormal(&xs),
        Family::Beta => fit_beta(&xs)?,
    };
    Ok(DistributionFit::from_log_likelihood(family, params, ll, xs.len()))
}

/// Maximum-likelihood fit of a positive-support family (Weibull or
/// log-normal) to arbitrary positive values, without clamping.
pub fn fit_positive(values: &[f64], family: Family) -> Result<DistributionFit> {
    if family == Family::Beta {
        return Err(Error::Fit("beta support is (0, 1); use fit_distribution".into()));
    }
    if values.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_SAMPLES} values, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Fit(format!("value {v} is not a positive real")));
    }
    if values.iter().all(|&x| x == values[0]) {
        return Err(Error::Fit("degenerate sample: zero variance".into()));
    }
    let (params, ll) = match family {
        Family::Weibull => fit_weibull(values)?,
        _ => fit_lognormal(values),
    };
    Ok(DistributionFit::from_log_likelihood(family, params, ll, values.len()))
}

fn weibull_log_likelihood(xs: &[f64], shape: f64, scale: f64) -> f64 {
    let n = xs.len() as f64;
    let sum_ln: f64 = xs.iter().map(|x| x.ln()).sum();
    let sum_pow: f64 = xs.iter().map(|x| (x / scale).powf(shape)).sum();
    n * shape.ln() - n * shape * scale.ln() + (shape - 1.0) * sum_ln - sum_pow
}

/// Profile score in the shape parameter; increasing in `shape`, zero at the MLE.
fn weibull_profile(logs: &[f64], shape: f64) -> (f64, f64) {
    // Rescale by the largest value so powers stay in (0, 1].
    let lmax = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &l in logs {
        let w = (shape * (l - lmax)).exp();
        s0 += w;
        s1 += w * l;
        s2 += w * l * l;
    }
    let mean_log = mean(logs);
    let g = s1 / s0 - 1.0 / shape - mean_log;
    let dg = s2 / s0 - (s1 / s0).powi(2) + 1.0 / (shape * shape);
    (g, dg)
}

fn weibull_scale(logs: &[f64], shape: f64) -> f64 {
    let lmax = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let m = logs.iter().map(|&l| (shape * (l - lmax)).exp()).sum::<f64>() / logs.len() as f64;
    (lmax * shape + m.ln()).exp().powf(1.0 / shape)
}

fn fit_weibull(xs: &[f64]) -> Result<([f64; 2], f64)> {
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    // Bracket the root of the increasing profile score.
    let mut lo = 1e-3;
    let mut hi = 1.0;
    while weibull_profile(&logs, hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e7 {
            return Err(Error::Fit("Weibull shape diverged".into()));
        }
    }
    while weibull_profile(&logs, lo).0 > 0.0 {
        hi = lo;
        lo /= 2.0;
        if lo < 1e-12 {
            return Err(Error::Fit("Weibull shape collapsed".into()));
        }
    }
    let mut shape = 0.5 * (lo + hi);
    let mut prev_ll = f64::NEG_INFINITY;
    for iteration in 0..MAX_ITERATIONS {
        let (g, dg) = weibull_profile(&logs, shape);
        if g < 0.0 {
            lo = shape;
        } else {
            hi = shape;
        }
        let newton = shape - g / dg;
        shape = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = weibull_scale(&logs, shape);
        let ll = weibull_log_likelihood(xs, shape, scale);
        if (ll - prev_ll).abs() < LL_TOLERANCE && iteration > 0 {
            return Ok(([shape, scale], ll));
        }
        prev_ll = ll;
    }
    let scale = weibull_scale(&logs, shape);
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        best_log_likelihood: weibull_log_likelihood(xs, shape, scale),
        best_params: [shape, scale],
    })
}

fn lognormal_log_likelihood(xs: &[f64], mu: f64, sigma: f64) -> f64 {
    let n = xs.len() as f64;
    let sum_ln: f64 = xs.iter().map(|x| x.ln()).sum();
    let ss: f64 = xs.iter().map(|x| (x.ln() - mu).powi(2)).sum();
    -sum_ln - n * sigma.ln() - 0.5 * n * (2.0 * std::f64::consts::PI).ln() - ss / (2.0 * sigma * sigma)
}

/// Closed-form MLE on the log scale.
fn fit_lognormal(xs: &[f64]) -> ([f64; 2], f64) {
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let mu = mean(&logs);
    let sigma = (logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / logs.len() as f64).sqrt();
    ([mu, sigma], lognormal_log_likelihood(xs, mu, sigma))
}

/// Trigamma via upward recurrence and the asymptotic series.
pub(crate) fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + inv2 / 2.0
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))
}

fn beta_log_likelihood(n: f64, mean_ln: f64, mean_ln1m: f64, a: f64, b: f64) -> f64 {
    let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    n * ((a - 1.0) * mean_ln + (b - 1.0) * mean_ln1m - ln_beta)
}

/// Newton iterations on the score equations, started from the method of
/// moments and damped so the log-likelihood never decreases.
fn fit_beta(xs: &[f64]) -> Result<([f64; 2], f64)> {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let common = (m * (1.0 - m) / var - 1.0).max(1e-3);
    let mut a = (m * common).max(1e-3);
    let mut b = ((1.0 - m) * common).max(1e-3);
    let s1 = xs.iter().map(|x| x.ln()).sum::<f64>() / n;
    let s2 = xs.iter().map(|x| (1.0 - x).ln()).sum::<f64>() / n;
    let mut ll = beta_log_likelihood(n, s1, s2, a, b);
    for _ in 0..MAX_ITERATIONS {
        let dab = digamma(a + b);
        let g1 = s1 - digamma(a) + dab;
        let g2 = s2 - digamma(b) + dab;
        let tab = trigamma(a + b);
        // Negative Hessian (per sample), positive definite.
        let h11 = trigamma(a) - tab;
        let h22 = trigamma(b) - tab;
        let h12 = -tab;
        let det = h11 * h22 - h12 * h12;
        let (da, db) = if det > 0.0 {
            ((h22 * g1 - h12 * g2) / det, (h11 * g2 - h12 * g1) / det)
        } else {
            (g1, g2)
        };
        let mut step = 1.0;
        let mut improved = None;
        while step > 1e-12 {
            let na = a + step * da;
            let nb = b + step * db;
            if na > 0.0 && nb > 0.0 {
                let nll = beta_log_likelihood(n, s1, s2, na, nb);
                if nll >= ll - 1e-12 {
                    improved = Some((na, nb, nll));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((na, nb, nll)) = improved else {
            // No ascent direction left: at the optimum to machine precision.
            return Ok(([a, b], ll));
        };
        let delta = nll - ll;
        a = na;
        b = nb;
        ll = nll;
        if delta.abs() < LL_TOLERANCE && g1.abs() + g2.abs() < 1e-6 {
            return Ok(([a, b], ll));
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        best_log_likelihood: ll,
        best_params: [a, b],
    })
}

/// Fits of all three families, mirroring a likelihood/AIC/BIC comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitComparison {
    pub fits: Vec<DistributionFit>,
}

impl FitComparison {
    pub fn compute(values: &[f64]) -> Result<Self> {
        let fits = Family::ALL
            .iter()
            .map(|&f| fit_distribution(values, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(FitComparison { fits })
    }

    /// Family with the lowest AIC.
    pub fn best_by_aic(&self) -> Option<&DistributionFit> {
        self.fits
            .iter()
            .min_by(|a, b| a.aic.total_cmp(&b.aic))
    }

    /// Rows `log_likelihood, aic, bic`; one column per family.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<&str> = self.fits.iter().map(|f| f.family.name()).collect();
        writeln!(w, "statistic,{}", header.join(","))?;
        let row = |name: &str, get: fn(&DistributionFit) -> f64| -> String {
            let cells: Vec<String> = self.fits.iter().map(|f| get(f).to_string()).collect();
            format!("{name},{}", cells.join(","))
        };
        writeln!(w, "{}", row("log_likelihood", |f| f.log_likelihood))?;
        writeln!(w, "{}", row("aic", |f| f.aic))?;
        writeln!(w, "{}", row("bic", |f| f.bic))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityKind {
    Histogram,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DensityMethod {
    /// Normalized histogram over the sample range.
    Histogram { bins: usize },
    /// Gaussian kernel estimate on a uniform grid. `None` selects
    /// Silverman's rule of thumb.
    Kernel {
        bandwidth: Option<f64>,
        grid_points: usize,
    },
}

impl Default for DensityMethod {
    fn default() -> Self {
        DensityMethod::Histogram { bins: 20 }
    }
}

/// Piecewise density. For histograms `points` are the `bins + 1` edges and
/// `density` the per-bin heights; for kernels `points` is the evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub kind: DensityKind,
    pub points: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityCurve {
    pub fn integral(&self) -> f64 {
        match self.kind {
            DensityKind::Histogram => self
                .points
                .windows(2)
                .zip(&self.density)
                .map(|(e, d)| (e[1] - e[0]) * d)
                .sum(),
            DensityKind::Kernel => trapezoid(&self.points, &self.density),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().expect("non-empty curve"))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match self.kind {
            DensityKind::Histogram => {
                let bin = self.points.partition_point(|&e| e <= x).saturating_sub(1);
                self.density[bin.min(self.density.len() - 1)]
            }
            DensityKind::Kernel => {
                let i = self.points.partition_point(|&p| p <= x).saturating_sub(1);
                if i + 1 >= self.points.len() {
                    return *self.density.last().expect("non-empty curve");
                }
                let (x0, x1) = (self.points[i], self.points[i + 1]);
                let t = (x - x0) / (x1 - x0);
                self.density[i] * (1.0 - t) + self.density[i + 1] * t
            }
        }
    }

    /// Histogram bin masses (`height × width`).
    pub fn bin_masses(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .zip(&self.density)
            .map(|(e, d)| (e[1] - e[0]) * d)
            .collect()
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

pub fn empirical_density(values: &[f64], method: DensityMethod) -> Result<DensityCurve> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("density of an empty sample".into()));
    }
    if values.len() < 2 {
        return Err(Error::InvalidParameter("density needs at least 2 values".into()));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    match method {
        DensityMethod::Histogram { bins } => {
            if lo == hi {
                return Ok(DensityCurve {
                    kind: DensityKind::Histogram,
                    points: vec![lo - 0.5, lo + 0.5],
                    density: vec![1.0],
                });
            }
            histogram_on(values, lo, hi, bins)
        }
        DensityMethod::Kernel {
            bandwidth,
            grid_points,
        } => {
            let h = match bandwidth {
                Some(h) if h > 0.0 => h,
                Some(h) => return Err(Error::InvalidParameter(format!("bandwidth {h} must be positive"))),
                None => silverman_bandwidth(values),
            };
            kernel_on(values, h, lo - 5.0 * h, hi + 5.0 * h, grid_points)
        }
    }
}

/// Histogram with fixed edges over `[lo, hi]`; values outside are dropped and
/// the result renormalized over the kept values.
pub fn histogram_on(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<DensityCurve> {
    if bins == 0 || hi <= lo {
        return Err(Error::InvalidParameter(format!(
            "histogram needs bins >= 1 and lo < hi (bins={bins}, lo={lo}, hi={hi})"
        )));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut kept = 0usize;
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::InvalidParameter("no values inside histogram range".into()));
    }
    let points = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let density = counts
        .iter()
        .map(|&c| c as f64 / (kept as f64 * width))
        .collect();
    Ok(DensityCurve {
        kind: DensityKind::Histogram,
        points,
        density,
    })
}

pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = mean(values);
    let sd = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        sorted[i] + f * (sorted[(i + 1).min(sorted.len() - 1)] - sorted[i])
    };
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * n.powf(-0.2);
    if h > 0.0 {
        h
    } else {
        1e-3
    }
}

/// Gaussian kernel estimate on a uniform grid over `[lo, hi]`, renormalized
/// so its trapezoidal integral is one.
pub fn kernel_on(values: &[f64], bandwidth: f64, lo: f64, hi: f64, grid_points: usize) -> Result<DensityCurve> {
    if grid_points < 2 || hi <= lo || bandwidth <= 0.0 {
        return Err(Error::InvalidParameter(
            "kernel density needs >= 2 grid points, lo < hi and a positive bandwidth".into(),
        ));
    }
    let step = (hi - lo) / (grid_points - 1) as f64;
    let points: Vec<f64> = (0..grid_points).map(|i| lo + i as f64 * step).collect();
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let mut density: Vec<f64> = points
        .iter()
        .map(|&x| {
            values
                .iter()
                .map(|&v| (-0.5 * ((x - v) / bandwidth).powi(2)).exp())
                .sum::<f64>()
                * norm
        })
        .collect();
    let total = trapezoid(&points, &density);
    if total <= 0.0 {
        return Err(Error::Degenerate("kernel density vanished on its grid".into()));
    }
    density.iter_mut().for_each(|d| *d /= total);
    Ok(DensityCurve {
        kind: DensityKind::Kernel,
        points,
        density,
    })
}

/// L1 distance between two densities, integrated on a uniform grid of
/// `resolution` points over the union of their supports.
pub fn l1_distance(a: &DensityCurve, b: &DensityCurve, resolution: usize) -> f64 {
    let (alo, ahi) = a.support();
    let (blo, bhi) = b.support();
    let lo = alo.min(blo);
    let hi = ahi.max(bhi);
    let resolution = resolution.max(2);
    let step = (hi - lo) / (resolution - 1) as f64;
    let xs: Vec<f64> = (0..resolution).map(|i| lo + i as f64 * step).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| (a.eval(x) - b.eval(x)).abs()).collect();
    trapezoid(&xs, &ys)
}

/// Lag-`lag` autocorrelation with the full-series mean `f̄`: the mean of
/// `(f_i - f̄)(f_{i+lag} - f̄)` over the `n - lag` lagged pairs divided by the
/// series variance. Clamped to `[-1, 1]`.
pub fn autocorrelation(series: &[f64], lag: usize) -> Result<f64> {
    if lag >= series.len() {
        return Err(Error::InvalidParameter(format!(
            "lag {lag} requires a series longer than {}",
            series.len()
        )));
    }
    let first = series[0];
    if series.iter().all(|&f| f == first) {
        return Err(Error::Degenerate("autocorrelation undefined for a zero-variance series".into()));
    }
    let m = mean(series);
    let var = series.iter().map(|f| (f - m).powi(2)).sum::<f64>() / series.len() as f64;
    let cov = series
        .iter()
        .zip(&series[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / (series.len() - lag) as f64;
    Ok((cov / var).clamp(-1.0, 1.0))
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

fn check_pairs(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Degenerate("need at least 2 points".into()));
    }
    Ok(())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pairs(xs, ys)?;
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if is_constant(xs) || is_constant(ys) || sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("pearson undefined for zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Least-squares line `(slope, intercept)`.
pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    check_pairs(xs, ys)?;
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
    }
    if is_constant(xs) || sxx == 0.0 {
        return Err(Error::Degenerate("regression undefined for constant xs".into()));
    }
    let slope = if is_constant(ys) { 0.0 } else { sxy / sxx };
    Ok((slope, my - slope * mx))
}

/// Plot-ready quantile-quantile and percentile-percentile pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqPpData {
    /// `(theoretical quantile, empirical quantile)`.
    pub qq: Vec<(f64, f64)>,
    /// `(theoretical CDF, empirical CDF)`.
    pub pp: Vec<(f64, f64)>,
}

pub fn qq_pp_data(values: &[f64], fit: &DistributionFit) -> Result<QqPpData> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("qq/pp data of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let qq = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (fit.quantile((i as f64 + 0.5) / n), v))
        .collect();
    let pp = sorted
        .iter()
        .map(|&v| {
            let rank = sorted.partition_point(|&x| x <= v);
            (fit.cdf(v), rank as f64 / n)
        })
        .collect();
    Ok(QqPpData { qq, pp })
}

pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let m = mean(values);
    let n = values.len() as f64;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((m, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn information_criteria_identities() {
        let f = DistributionFit::from_log_likelihood(Family::Weibull, [1.0, 1.0], 534817.0, 1000);
        assert_eq!(f.aic, -1069630.0);
        let (aic, bic) = information_criteria(92.24, 100);
        assert!((aic + 180.48).abs() < 1e-9);
        assert!((bic + 175.27).abs() < 0.1);
        // ln n = 4.6052 puts this likelihood at -159.70; -157.43 belongs to LL 83.32.
        let (aic, bic) = information_criteria(84.455, 100);
        assert!((aic + 164.91).abs() < 0.1);
        assert!((bic + 159.70).abs() < 0.1);
        let (_, bic) = information_criteria(83.32, 100);
        assert!((bic + 157.43).abs() < 0.1);
    }

    #[test]
    fn fit_rejects_small_and_degenerate_samples() {
        assert!(fit_distribution(&[0.5; 4], Family::Beta).is_err());
        assert!(matches!(fit_distribution(&[0.5; 20], Family::Weibull), Err(Error::Fit(_))));
        assert!(fit_distribution(&[1.5; 20], Family::Weibull).is_err());
    }

    #[test]
    fn endpoints_are_clamped() {
        let mut v: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        v.push(0.0);
        v.push(1.0);
        for fam in Family::ALL {
            let f = fit_distribution(&v, fam).unwrap();
            assert!(f.log_likelihood.is_finite(), "{fam}");
        }
    }

    #[test]
    fn fits_are_reproducible() {
        let v: Vec<f64> = (0..50).map(|i| 0.3 + 0.01 * ((i * 7) % 50) as f64).collect();
        for fam in Family::ALL {
            let a = fit_distribution(&v, fam).unwrap();
            let b = fit_distribution(&v, fam).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.aic.to_bits(), (4.0 - 2.0 * a.log_likelihood).to_bits());
        }
    }

    #[test]
    fn weibull_mle_is_a_stationary_point() {
        let v: Vec<f64> = (1..60).map(|i| (i as f64 / 61.0).powf(0.7)).collect();
        let f = fit_distribution(&v, Family::Weibull).unwrap();
        let [k, l] = f.params;
        let ll = |k: f64, l: f64| weibull_log_likelihood(&v, k, l);
        let h = 1e-5;
        assert!(ll(k, l) >= ll(k + h, l) && ll(k, l) >= ll(k - h, l));
        assert!(ll(k, l) >= ll(k, l + h) && ll(k, l) >= ll(k, l - h));
    }

    #[test]
    fn beta_mle_is_a_stationary_point() {
        let v: Vec<f64> = (1..80).map(|i| 0.5 + 0.4 * ((i as f64) * 0.37).sin()).collect();
        let f = fit_distribution(&v, Family::Beta).unwrap();
        let n = v.len() as f64;
        let s1 = v.iter().map(|x| x.ln()).sum::<f64>() / n;
        let s2 = v.iter().map(|x| (1.0 - x).ln()).sum::<f64>() / n;
        let [a, b] = f.params;
        let ll = |a, b| beta_log_likelihood(n, s1, s2, a, b);
        let h = 1e-5;
        assert!(ll(a, b) >= ll(a + h, b) && ll(a, b) >= ll(a - h, b));
        assert!(ll(a, b) >= ll(a, b + h) && ll(a, b) >= ll(a, b - h));
        assert!((f.log_likelihood - ll(a, b)).abs() < 1e-9);
    }

    #[test]
    fn trigamma_matches_known_values() {
        assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-10);
        assert!((trigamma(0.5) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn identical_values_single_bin() {
        let d = empirical_density(&[0.3; 10], DensityMethod::default()).unwrap();
        assert_eq!(d.density.iter().filter(|&&x| x > 0.0).count(), 1);
        assert!((d.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_grid_gives_flat_histogram() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = empirical_density(&v, DensityMethod::Histogram { bins: 10 }).unwrap();
        let first = d.density[0];
        assert!(d.density.iter().all(|&x| (x - first).abs() < 1e-9));
        assert!((d.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_integrates_to_one() {
        let v: Vec<f64> = (0..40).map(|i| ((i * 37) % 40) as f64 / 40.0).collect();
        let d = empirical_density(&v, DensityMethod::Kernel { bandwidth: None, grid_points: 256 }).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-6);
        assert!(d.density.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn density_errors() {
        assert!(empirical_density(&[], DensityMethod::default()).is_err());
        assert!(empirical_density(&[0.4], DensityMethod::default()).is_err());
    }

    #[test]
    fn autocorrelation_edge_cases() {
        let alt: Vec<f64> = (0..10).map(|i| (i % 2) as f64).collect();
        assert_eq!(autocorrelation(&alt, 1).unwrap(), -1.0);
        assert_eq!(autocorrelation(&[0.1, 0.5, 0.2], 0).unwrap(), 1.0);
        assert!(matches!(autocorrelation(&[0.2; 5], 1), Err(Error::Degenerate(_))));
        assert!(autocorrelation(&[0.1, 0.2], 2).is_err());
    }

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [1.0, 0.5, 0.0];
        assert!((pearson(&xs, &ys).unwrap() + 1.0).abs() < 1e-15);
        let (slope, intercept) = ols_fit(&xs, &ys).unwrap();
        assert!((slope + 0.5).abs() < 1e-15);
        assert!((intercept - 1.5).abs() < 1e-15);
    }

    #[test]
    fn constant_ys() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [0.4; 3];
        assert!(pearson(&xs, &ys).is_err());
        assert_eq!(ols_fit(&xs, &ys).unwrap().0, 0.0);
    }

    #[test]
    fn qq_on_exact_quantiles_is_diagonal() {
        let fit = DistributionFit::from_log_likelihood(Family::Weibull, [2.0, 0.5], 0.0, 10);
        let v: Vec<f64> = (0..10).map(|i| fit.quantile((i as f64 + 0.5) / 10.0)).collect();
        let d = qq_pp_data(&v, &fit).unwrap();
        for (t, e) in d.qq {
            assert!((t - e).abs() < 1e-12);
        }
        for (i, (t, e)) in d.pp.iter().enumerate() {
            assert!((0.0..=1.0).contains(t));
            assert_eq!(*e, (i + 1) as f64 / 10.0);
        }
    }

    #[test]
    fn comparison_csv_layout() {
        let v: Vec<f64> = (1..40).map(|i| 0.5 + 0.3 * ((i as f64) * 0.71).sin()).collect();
        let c = FitComparison::compute(&v).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "statistic,beta,weibull,lognormal");
        assert!(lines[1].starts_with("log_likelihood,"));
        assert!(lines[2].starts_with("aic,"));
        assert!(lines[3].starts_with("bic,"));
    }
}
