//! Power-law fits `value ~ C delta^slope` by least squares in log-log.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub slope: f64,
    /// `log C`.
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
}

pub const MIN_SAMPLES: usize = 4;
/// Fits below this coefficient of determination are not reported as slopes.
pub const MIN_R2: f64 = 0.99;

/// Ordinary least squares of `log value` against `log delta`.
pub fn fit_blowup_exponent(samples: &[(f64, f64)]) -> Result<PowerFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "{} samples, at least {MIN_SAMPLES} needed",
            samples.len()
        )));
    }
    if let Some(&(d, v)) = samples.iter().find(|(d, v)| !(*d > 0.0 && *v > 0.0)) {
        return Err(Error::InvalidArgument(format!("nonpositive sample ({d}, {v})")));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|(d, v)| (d.ln(), v.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::Degenerate("all depths are equal".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy <= 1e-300 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerFit {
        slope,
        intercept: my - slope * mx,
        r2,
        samples: pts.len(),
    })
}

impl PowerFit {
    pub fn is_reliable(&self) -> bool {
        self.samples >= MIN_SAMPLES && self.r2 >= MIN_R2
    }
}

/// `count` depths from `start` down by the factor `ratio`.
pub fn geometric_grid(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| start * ratio.powi(j as i32)).collect()
}

/// `count` depths spaced evenly in `log` from `hi` down to `lo`.
pub fn log_grid(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![hi];
    }
    let step = (lo / hi).ln() / (count - 1) as f64;
    (0..count).map(|j| hi * (step * j as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_laws() {
        let ds = log_grid(1e-2, 1e-5, 8);
        let f = fit_blowup_exponent(&ds.iter().map(|d| (*d, d.powf(-0.75))).collect::<Vec<_>>()).unwrap();
        assert!((f.slope + 0.75).abs() < 1e-12);
        let f = fit_blowup_exponent(&ds.iter().map(|d| (*d, 5.0 * d.powf(-0.5))).collect::<Vec<_>>()).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ds = log_grid(1e-2, 1e-6, 12);
        let s: Vec<(f64, f64)> = ds
            .iter()
            .map(|d| (*d, d.powf(-0.75) * (1.0 + rng.gen_range(-0.01..0.01))))
            .collect();
        let f = fit_blowup_exponent(&s).unwrap();
        assert!((f.slope + 0.75).abs() < 0.01 && f.r2 >= 0.999);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_blowup_exponent(&[(1.0, 1.0); 3]).is_err());
        assert!(fit_blowup_exponent(&[(1.0, 1.0), (0.1, 0.0), (0.01, 1.0), (1e-3, 1.0)]).is_err());
        assert!(fit_blowup_exponent(&[(0.1, 1.0); 4]).is_err());
    }
}
