//! Moments, distribution fits, log-log slopes and bootstrap intervals for
//! ensemble error studies.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::sampling::stream_rng;
use crate::error::{Error, Module, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (x.len() as f64 - 1.0)).sqrt()
}

/// Moment skewness m₃ / m₂^{3/2}.
pub fn skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = mean(x);
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu: f64,
    pub sigma: f64,
}

/// Moment fit.
pub fn fit_gaussian(x: &[f64]) -> Result<GaussianFit> {
    require_len(x, 2)?;
    Ok(GaussianFit {
        mu: mean(x),
        sigma: std_dev(x),
    })
}

/// Log-normal fit by the moments of ln x, with the Kolmogorov-Smirnov
/// distance of the sample from the fitted law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalFit {
    pub mu: f64,
    pub sigma: f64,
    pub ks_distance: f64,
}

impl LogNormalFit {
    /// 5 % Kolmogorov-Smirnov critical distance for a sample of size n.
    pub fn ks_critical(n: usize) -> f64 {
        1.36 / (n as f64).sqrt()
    }
}

pub fn fit_lognormal(x: &[f64]) -> Result<LogNormalFit> {
    require_len(x, 2)?;
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::domain(
            Module::Tomography,
            "log-normal fit needs strictly positive data",
        ));
    }
    let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mu = mean(&logs);
    let sigma = std_dev(&logs);
    let ks_distance = if sigma > 0.0 {
        let normal = Normal::new(mu, sigma)
            .map_err(|e| Error::domain(Module::Tomography, e.to_string()))?;
        ks_distance(&logs, |v| normal.cdf(v))
    } else {
        1.0
    };
    Ok(LogNormalFit {
        mu,
        sigma,
        ks_distance,
    })
}

/// sup |F_n − F|.
pub fn ks_distance(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(Module::Tomography, "slope inputs differ in length"));
    }
    require_len(x, 2)?;
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::domain(Module::Tomography, "log-log slope needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Percentile bootstrap (95 %) of σ(a)/σ(b) with paired resampling.
pub fn bootstrap_sigma_ratio(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<BootstrapInterval> {
    if a.len() != b.len() {
        return Err(Error::domain(Module::Tomography, "paired samples differ in length"));
    }
    require_len(a, 2)?;
    let n = a.len();
    let mut rng = stream_rng(seed, &[0xB007]);
    let mut ratios = Vec::with_capacity(resamples);
    let mut ra = vec![0.0; n];
    let mut rb = vec![0.0; n];
    for _ in 0..resamples {
        for i in 0..n {
            let k = rng.random_range(0..n);
            ra[i] = a[k];
            rb[i] = b[k];
        }
        ratios.push(std_dev(&ra) / std_dev(&rb));
    }
    ratios.sort_by(f64::total_cmp);
    let pick = |q: f64| ratios[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok(BootstrapInterval {
        estimate: std_dev(a) / std_dev(b),
        lower: pick(0.025),
        upper: pick(0.975),
    })
}

fn require_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() < n {
        return Err(Error::domain(
            Module::Tomography,
            format!("need at least {n} samples, got {}", x.len()),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn moments_of_known_data() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&x), 2.5);
        assert!((std_dev(&x) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(skewness(&x).abs() < 1e-15);
        assert!(skewness(&[0.0, 0.0, 0.0, 10.0]) > 1.0);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1e2, 1e3, 1e4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert!(loglog_slope(&x, &[1.0, -1.0, 2.0]).is_err());
    }

    #[test]
    fn lognormal_fit_recovers_parameters() {
        let mut rng = stream_rng(3, &[]);
        let x: Vec<f64> = (0..5000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (0.7 + 0.2 * z).exp()
            })
            .collect();
        let fit = fit_lognormal(&x).unwrap();
        assert!((fit.mu - 0.7).abs() < 0.02 && (fit.sigma - 0.2).abs() < 0.02);
        assert!(fit.ks_distance < LogNormalFit::ks_critical(x.len()));
        assert!(fit_lognormal(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn bootstrap_detects_wider_sample() {
        let mut rng = stream_rng(4, &[]);
        let base: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let wide: Vec<f64> = base.iter().map(|v| 2.0 * v).collect();
        let iv = bootstrap_sigma_ratio(&wide, &base, 500, 1).unwrap();
        assert!((iv.estimate - 2.0).abs() < 1e-12);
        assert!(iv.lower <= iv.estimate && iv.estimate <= iv.upper);
        let noise: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let iv = bootstrap_sigma_ratio(&noise, &base, 500, 1).unwrap();
        assert!(iv.lower < 1.0 && iv.upper > 1.0 || (iv.estimate - 1.0).abs() < 0.2);
    }
}
