//! Sample means, standard errors, medians and a two-parameter regression.
//! Every reduction runs sequentially in index order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = if xs.len() > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1.0) / n).sqrt()
        } else {
            f64::NAN
        };
        Ok(Self { mean, se })
    }

    /// `|mean - target| / se`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.se
    }
}

pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::EmptySample);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// `mean(a) / mean(b)` with a delta-method standard error.
pub fn ratio_of_means(a: &[f64], b: &[f64]) -> Result<Estimate> {
    if a.len() < 2 || a.len() != b.len() {
        return Err(Error::EmptySample);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let q = ma / mb;
    let var: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let r = (x - ma) - q * (y - mb);
            r * r
        })
        .sum::<f64>()
        / (n - 1.0);
    Ok(Estimate {
        mean: q,
        se: (var / n).sqrt() / mb.abs(),
    })
}

/// Least squares fit `y = intercept + slope x` with heteroskedasticity
/// consistent (White) standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub intercept_se: f64,
    pub slope: f64,
    pub slope_se: f64,
}

impl LinearFit {
    pub fn fit(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() < 3 || x.len() != y.len() {
            return Err(Error::EmptySample);
        }
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        if sxx <= 0.0 {
            return Err(Error::Config("regression on a constant regressor".into()));
        }
        let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        // (X'X)^{-1} X' diag(e^2) X (X'X)^{-1} with X = [1, x], written
        // through the centred regressor.
        let (mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0);
        for (u, v) in x.iter().zip(y) {
            let e = v - intercept - slope * u;
            let e2 = e * e;
            let c = u - mx;
            m00 += e2;
            m01 += e2 * c;
            m11 += e2 * c * c;
        }
        let slope_var = m11 / (sxx * sxx);
        // intercept = mean(y) - slope mean(x), with mean(y) - slope mean(c) = 0
        let cov_mean_slope = m01 / (n * sxx);
        let mean_var = m00 / (n * n);
        let intercept_var = mean_var - 2.0 * mx * cov_mean_slope + mx * mx * slope_var;
        Ok(Self {
            intercept,
            intercept_se: intercept_var.max(0.0).sqrt(),
            slope,
            slope_se: slope_var.sqrt(),
        })
    }
}

/// Least squares slope through the origin, `sum x y / sum x^2`.
pub fn origin_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::EmptySample);
    }
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
    let sxx: f64 = x.iter().map(|u| u * u).sum();
    Ok(sxy / sxx)
}
