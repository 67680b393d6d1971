//! Monte-Carlo channel closure.
//!
//! Each trial draws one random permutation of the channels; stage `s`
//! closes the first `round(s·M)` entries. Stages within a trial are
//! therefore nested, and the first stage at which the inlet and outlet
//! disconnect is well defined per trial.

pub(crate) mod io;
mod stats;

pub(crate) use io::write_comments;
pub use io::{read_records, write_bins, write_records, write_threshold};
pub use stats::{
    bin_stats, default_bin_centers, estimate_threshold, fit_power_law, BinStats, PowerLawFit,
    ThresholdEstimate, BIN_HALF_WIDTH,
};

use crate::error::{Error, Result};
use crate::network::{network_permeability, percolates, solve_pressure_with, PoreNetwork};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

// κ_n does not depend on these; they only set the scale of the solve.
const PROBE_DELTA_P: f64 = 1.0;
const PROBE_ETA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    /// Nominal closed fraction by channel count.
    pub stage_fraction: f64,
    pub trial: usize,
    /// Closed volume fraction `V_c / V_t`.
    pub f_c: f64,
    /// Permeability normalized by the all-open network.
    pub kappa_n: f64,
    /// Seed of the trial's closure permutation.
    pub seed: u64,
}

/// `{0.01, 0.02, …, 1.00}`.
pub fn default_stages() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 100.0).collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master_seed`: two SplitMix64 rounds over the
/// pair, so neighbouring trials get unrelated ChaCha8 streams.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(master_seed) ^ (trial as u64).wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Number of channels closed at `stage_fraction`.
pub fn closed_count(stage_fraction: f64, channels: usize) -> usize {
    ((stage_fraction * channels as f64).round() as usize).min(channels)
}

pub struct MonteCarlo<'a> {
    net: &'a PoreNetwork,
    kappa0: f64,
}

impl<'a> MonteCarlo<'a> {
    /// Computes the all-open permeability once; the network must percolate
    /// with every channel open.
    pub fn new(net: &'a PoreNetwork) -> Result<Self> {
        let open = vec![true; net.channel_count()];
        if !percolates(net, &open) {
            return Err(Error::param(
                "all-open network does not connect inlet to outlet",
            ));
        }
        let sol = solve_pressure_with(net, &open, PROBE_DELTA_P, PROBE_ETA)?;
        let kappa0 = network_permeability(net, &sol, PROBE_DELTA_P, PROBE_ETA);
        if !(kappa0 > 0.0) {
            return Err(Error::Solver("all-open network carries no flow".into()));
        }
        Ok(Self { net, kappa0 })
    }

    pub fn network(&self) -> &PoreNetwork {
        self.net
    }

    /// All-open permeability (m²).
    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    /// Closure order for a trial seed.
    pub fn closure_order(&self, seed: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.net.channel_count()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        order
    }

    fn kappa_n(&self, open: &[bool]) -> Result<f64> {
        if !percolates(self.net, open) {
            return Ok(0.0);
        }
        let sol = solve_pressure_with(self.net, open, PROBE_DELTA_P, PROBE_ETA)?;
        let k = network_permeability(self.net, &sol, PROBE_DELTA_P, PROBE_ETA);
        Ok((k / self.kappa0).clamp(0.0, 1.0))
    }

    /// One closure at `stage_fraction`, using the first entries of the
    /// seed's permutation.
    pub fn run_trial(&self, stage_fraction: f64, seed: u64) -> Result<TrialRecord> {
        Ok(self.run_sequence(&[stage_fraction], 0, seed)?.remove(0))
    }

    /// Every stage of one trial along a single permutation. Once the
    /// network blocks, later stages are blocked too and are not solved.
    pub fn run_sequence(
        &self,
        stages: &[f64],
        trial: usize,
        seed: u64,
    ) -> Result<Vec<TrialRecord>> {
        check_stages(stages)?;
        let m = self.net.channel_count();
        let channels = self.net.channels();
        let total = self.net.total_volume();
        let order = self.closure_order(seed);
        let mut open = vec![true; m];
        let mut closed = 0;
        let mut closed_volume = 0.0;
        let mut blocked = false;
        let mut out = Vec::with_capacity(stages.len());
        for &s in stages {
            let target = closed_count(s, m);
            while closed < target {
                let c = order[closed];
                open[c] = false;
                closed_volume += channels[c].volume();
                closed += 1;
            }
            let kappa_n = if blocked { 0.0 } else { self.kappa_n(&open)? };
            blocked = kappa_n == 0.0;
            let f_c = if closed == m {
                1.0
            } else {
                (closed_volume / total).min(1.0)
            };
            out.push(TrialRecord {
                stage_fraction: s,
                trial,
                f_c,
                kappa_n,
                seed,
            });
        }
        Ok(out)
    }

    /// `trials` independent sequences over `stages`, in parallel. Records
    /// come back stage-major, trial-minor, independent of scheduling.
    pub fn sweep(
        &self,
        stages: &[f64],
        trials: usize,
        master_seed: u64,
    ) -> Result<Vec<TrialRecord>> {
        check_stages(stages)?;
        let per_trial: Vec<Vec<TrialRecord>> = (0..trials)
            .into_par_iter()
            .map(|t| self.run_sequence(stages, t, trial_seed(master_seed, t)))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(stages.len() * trials);
        for k in 0..stages.len() {
            out.extend(per_trial.iter().map(|seq| seq[k]));
        }
        Ok(out)
    }
}

fn check_stages(stages: &[f64]) -> Result<()> {
    if stages.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::param("stage fractions must lie in [0, 1]"));
    }
    if stages.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("stage fractions must be sorted"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_rectangular, build_triangular, open_porosity};

    #[test]
    fn endpoints() {
        let net = build_rectangular(8, 5, 1e-4, 1e-5, 0.4).unwrap();
        let mc = MonteCarlo::new(&net).unwrap();
        let r = mc.run_trial(0.0, 1).unwrap();
        assert_eq!((r.f_c, r.kappa_n), (0.0, 1.0));
        let r = mc.run_trial(1.0, 1).unwrap();
        assert_eq!((r.f_c, r.kappa_n), (1.0, 0.0));
        assert_eq!(mc.run_trial(0.3, 9).unwrap(), mc.run_trial(0.3, 9).unwrap());
    }

    #[test]
    fn closes_exact_count() {
        let net = build_triangular(6, 4, 1e-4, 1e-5, 0.4).unwrap();
        let mc = MonteCarlo::new(&net).unwrap();
        let order = mc.closure_order(5);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..net.channel_count()).collect::<Vec<_>>());
        assert_eq!(net.channel_count(), 53);
        assert_eq!(closed_count(0.25, 53), 13);
        assert_eq!(closed_count(1.0, 53), 53);
    }

    #[test]
    fn sweep_cardinality_and_order() {
        let net = build_rectangular(6, 4, 1e-4, 1e-5, 0.4).unwrap();
        let mc = MonteCarlo::new(&net).unwrap();
        let recs = mc.sweep(&[0.1, 0.5], 3, 42).unwrap();
        assert_eq!(recs.len(), 6);
        assert_eq!(
            recs.iter().map(|r| r.trial).collect::<Vec<_>>(),
            vec![0, 1, 2, 0, 1, 2]
        );
        assert!(recs[..3].iter().all(|r| r.stage_fraction == 0.1));
        assert_eq!(recs[1].seed, trial_seed(42, 1));
        assert!(matches!(
            mc.sweep(&[0.5, 0.1], 1, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn trial_order_does_not_matter() {
        let net = build_rectangular(6, 4, 1e-4, 1e-5, 0.4).unwrap();
        let mc = MonteCarlo::new(&net).unwrap();
        let stages = default_stages();
        let forward: Vec<_> = (0..4)
            .map(|t| mc.run_sequence(&stages, t, trial_seed(3, t)).unwrap())
            .collect();
        let backward: Vec<_> = (0..4)
            .rev()
            .map(|t| mc.run_sequence(&stages, t, trial_seed(3, t)).unwrap())
            .collect();
        assert_eq!(forward[0], backward[3]);
        assert_eq!(forward[3], backward[0]);
    }

    #[test]
    fn uniform_channels_give_complementary_porosity() {
        let net = build_rectangular(7, 7, 1e-4, 1e-5, 0.4).unwrap();
        let mc = MonteCarlo::new(&net).unwrap();
        for s in [0.1, 0.37, 0.8] {
            let order = mc.closure_order(11);
            let mut open = vec![true; net.channel_count()];
            order[..closed_count(s, net.channel_count())]
                .iter()
                .for_each(|&c| open[c] = false);
            let r = mc.run_trial(s, 11).unwrap();
            let theta_norm = open_porosity(&net, &open) / net.theta0();
            assert!((theta_norm - (1.0 - r.f_c)).abs() < 1e-14);
        }
    }

    #[test]
    fn seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| trial_seed(7, t)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(trial_seed(7, 0), trial_seed(8, 0));
    }
}
