//! Log-space normalization of spread time and film thickness.
//!
//! `t* = (ln t − μ_t)/σ_t` and `h* = (ln h − μ_h)/σ_h`, with the mean and
//! population standard deviation taken over the training split only.

use std::fmt;
use std::path::Path;

use super::DatasetPartition;
use crate::error::{Error, Result};
use crate::numerics;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormStats {
    pub mu_t: f64,
    pub sigma_t: f64,
    pub mu_h: f64,
    pub sigma_h: f64,
}

/// Mean and population standard deviation of `ln x`.
pub fn log_moments(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::Stats(format!("need at least 2 values, got {}", xs.len())));
    }
    if let Some(bad) = xs.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Stats(format!("cannot take the log of {bad}")));
    }
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let n = logs.len() as f64;
    let mu = numerics::sum(&logs) / n;
    let sq: Vec<f64> = logs.iter().map(|l| (l - mu) * (l - mu)).collect();
    let sigma = (numerics::sum(&sq) / n).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::Stats("zero variance".into()));
    }
    Ok((mu, sigma))
}

pub fn compute_norm_stats(training: &DatasetPartition) -> Result<NormStats> {
    let (mu_t, sigma_t) = log_moments(&training.t).map_err(|e| Error::Stats(format!("t: {e}")))?;
    let (mu_h, sigma_h) = log_moments(&training.h).map_err(|e| Error::Stats(format!("h: {e}")))?;
    Ok(NormStats {
        mu_t,
        sigma_t,
        mu_h,
        sigma_h,
    })
}

pub fn normalize(x: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Stats(format!("cannot normalize nonpositive value {x}")));
    }
    Ok((x.ln() - mu) / sigma)
}

pub fn denormalize(z: f64, mu: f64, sigma: f64) -> f64 {
    (z * sigma + mu).exp()
}

impl NormStats {
    pub fn normalize_t(&self, t: f64) -> Result<f64> {
        normalize(t, self.mu_t, self.sigma_t)
    }

    pub fn normalize_h(&self, h: f64) -> Result<f64> {
        normalize(h, self.mu_h, self.sigma_h)
    }

    pub fn denormalize_t(&self, z: f64) -> f64 {
        denormalize(z, self.mu_t, self.sigma_t)
    }

    pub fn denormalize_h(&self, z: f64) -> f64 {
        denormalize(z, self.mu_h, self.sigma_h)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut vals = [None; 4];
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected key = value"))?;
            let slot = match k.trim() {
                "mu_t" => 0,
                "sigma_t" => 1,
                "mu_h" => 2,
                "sigma_h" => 3,
                other => return Err(Error::parse(path, i + 1, format!("unknown key {other}"))),
            };
            let v: f64 = v.trim().parse().map_err(|_| Error::parse(path, i + 1, "not a number"))?;
            vals[slot] = Some(v);
        }
        match vals {
            [Some(mu_t), Some(sigma_t), Some(mu_h), Some(sigma_h)] => Ok(NormStats {
                mu_t,
                sigma_t,
                mu_h,
                sigma_h,
            }),
            _ => Err(Error::Stats(format!("{}: missing keys", path.display()))),
        }
    }
}

impl fmt::Display for NormStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mu_t = {:e}", self.mu_t)?;
        writeln!(f, "sigma_t = {:e}", self.sigma_t)?;
        writeln!(f, "mu_h = {:e}", self.mu_h)?;
        writeln!(f, "sigma_h = {:e}", self.sigma_h)
    }
}
