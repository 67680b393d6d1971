use super::{closed_count, TrialRecord};
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Records with `|κ_n − k| < 0.05` fall in the bin centred at `k`.
pub const BIN_HALF_WIDTH: f64 = 0.05;

/// `{0.1, 0.2, …, 0.9}`.
pub fn default_bin_centers() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    pub center: f64,
    pub count: usize,
    /// Mean of f_c; `None` for an empty bin.
    pub mean: Option<f64>,
    /// Sample standard deviation (n − 1) of f_c; 0 for a single record.
    pub std: Option<f64>,
}

pub fn bin_stats(records: &[TrialRecord], centers: &[f64]) -> Result<Vec<BinStats>> {
    if records.is_empty() {
        return Err(Error::param("no records to bin"));
    }
    Ok(centers
        .iter()
        .map(|&center| {
            let (lo, hi) = (center - BIN_HALF_WIDTH, center + BIN_HALF_WIDTH);
            let values: Vec<f64> = records
                .iter()
                .filter(|r| lo < r.kappa_n && r.kappa_n < hi)
                .map(|r| r.f_c)
                .collect();
            let count = values.len();
            if count == 0 {
                return BinStats {
                    center,
                    count,
                    mean: None,
                    std: None,
                };
            }
            let mean = values.iter().sum::<f64>() / count as f64;
            let std = if count == 1 {
                0.0
            } else {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
            };
            BinStats {
                center,
                count,
                mean: Some(mean),
                std: Some(std),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdEstimate {
    /// Mean over trials of the smallest f_c with κ_n = 0.
    pub f_c_star: f64,
    pub p_c: f64,
    pub trials_used: usize,
}

impl ThresholdEstimate {
    /// Open-channel count at the threshold, `(1 − f_c*)·M`.
    pub fn n_hat(&self, channels: usize) -> f64 {
        (1.0 - self.f_c_star) * channels as f64
    }
}

/// Groups records by trial, takes each trial's smallest blocking f_c and
/// averages them. Trials that never block are left out.
pub fn estimate_threshold(records: &[TrialRecord]) -> Result<ThresholdEstimate> {
    let mut first_block: BTreeMap<usize, f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.kappa_n == 0.0) {
        first_block
            .entry(r.trial)
            .and_modify(|f| *f = f.min(r.f_c))
            .or_insert(r.f_c);
    }
    if first_block.is_empty() {
        return Err(Error::Estimation(
            "no blocked configuration; extend the stage range".into(),
        ));
    }
    let trials_used = first_block.len();
    let f_c_star = first_block.values().sum::<f64>() / trials_used as f64;
    Ok(ThresholdEstimate {
        f_c_star,
        p_c: 1.0 - f_c_star,
        trials_used,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    /// `b` in `κ_n = c·(N_o − N̂)^b`.
    pub exponent: f64,
    /// `c`.
    pub prefactor: f64,
    /// Smallest and largest `N_o − N̂` used.
    pub fit_range: (f64, f64),
    /// RMS residual in natural-log units.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares line through `(ln(N_o − N̂), ln κ_n)` for records above
/// the threshold whose open fraction `N_o/M` is at least
/// `min_open_fraction`. κ_n is proportional to Q, so `b` is the flow
/// exponent as well.
pub fn fit_power_law(
    records: &[TrialRecord],
    threshold: &ThresholdEstimate,
    channels: usize,
    min_open_fraction: f64,
) -> Result<PowerLawFit> {
    let n_hat = threshold.n_hat(channels);
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.kappa_n > 0.0)
        .filter_map(|r| {
            let n_open = (channels - closed_count(r.stage_fraction, channels)) as f64;
            let excess = n_open - n_hat;
            (excess > 0.0 && n_open >= min_open_fraction * channels as f64)
                .then_some((excess, r.kappa_n))
        })
        .collect();
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    if pts.len() < 2 || !(hi > lo) {
        return Err(Error::Fit(format!(
            "{} usable point(s) above the threshold",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(PowerLawFit {
        exponent: b,
        prefactor: a.exp(),
        fit_range: (lo, hi),
        residual,
        points: pts.len(),
    })
}
