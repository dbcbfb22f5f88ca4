//! Seeded reward sampling.
//!
//! Every trial owns an [`RngStream`]: a ChaCha20 generator keyed by the
//! master seed and positioned on a stream derived from the
//! `(instance_id, trial_id)` pair. Equal triples give bitwise-equal reward
//! sequences no matter how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::BanditInstance;

/// Identity of the random generator, echoed into every CSV header.
pub const RNG_IDENTITY: &str = "ChaCha20Rng(rand_chacha 0.9); key=seed_from_u64(master_seed); \
stream=(instance_id<<32)|trial_id; gaussian=rand_distr::StandardNormal";

/// Largest sub-Gaussian parameter admitted for Gaussian rewards.
pub const MAX_SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum RewardModel {
    /// Rewards in `{0, 1}` with success probability equal to the arm mean.
    #[default]
    Bernoulli,
    /// `N(mean, sigma^2)`. `sigma = 0` yields the noise-free test double.
    Gaussian { sigma: f64 },
}

impl RewardModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardModel::Bernoulli => Ok(()),
            RewardModel::Gaussian { sigma } if (0.0..=MAX_SIGMA).contains(&sigma) => Ok(()),
            RewardModel::Gaussian { sigma } => Err(Error::usage(format!(
                "gaussian sigma must lie in [0, {MAX_SIGMA}], got {sigma}"
            ))),
        }
    }

    /// Zero-variance rewards that always equal the arm mean.
    pub fn noiseless() -> Self {
        RewardModel::Gaussian { sigma: 0.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RewardModel::Bernoulli => "bernoulli",
            RewardModel::Gaussian { .. } => "gaussian",
        }
    }

    #[inline]
    pub(crate) fn sample(&self, mean: f64, rng: &mut RngStream) -> f64 {
        match *self {
            RewardModel::Bernoulli => {
                if rng.rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardModel::Gaussian { sigma: 0.0 } => mean,
            RewardModel::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(&mut rng.rng);
                mean + sigma * z
            }
        }
    }
}

/// Per-trial random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    instance_id: u32,
    trial_id: u32,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, instance_id: u32, trial_id: u32) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
        rng.set_stream((u64::from(instance_id) << 32) | u64::from(trial_id));
        Self {
            master_seed,
            instance_id,
            trial_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn instance_id(&self) -> u32 {
        self.instance_id
    }

    pub fn trial_id(&self) -> u32 {
        self.trial_id
    }

    /// Raw generator access for samplers other than rewards (instance
    /// generation, shuffles).
    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}

impl BanditInstance {
    /// Draws one reward of arm `arm`, advancing the stream.
    pub fn pull(&self, arm: usize, stream: &mut RngStream) -> Result<f64> {
        if arm >= self.n() {
            return Err(Error::usage(format!(
                "arm {} out of range (1..={})",
                arm + 1,
                self.n()
            )));
        }
        Ok(self.sample(arm, stream))
    }

    #[inline]
    pub(crate) fn sample(&self, arm: usize, stream: &mut RngStream) -> f64 {
        self.reward_model().sample(self.mean(arm), stream)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::GroupStructure;

    fn instance(means: Vec<f64>, model: RewardModel) -> BanditInstance {
        let n = means.len();
        let groups = GroupStructure::new(n, vec![(0..n).collect()]).unwrap();
        BanditInstance::new(means, groups, model).unwrap()
    }

    #[test]
    fn degenerate_bernoulli_arms() {
        let inst = instance(vec![1.0, 0.0], RewardModel::Bernoulli);
        let mut s = RngStream::new(7, 0, 0);
        for _ in 0..1000 {
            assert_eq!(inst.pull(0, &mut s).unwrap(), 1.0);
            assert_eq!(inst.pull(1, &mut s).unwrap(), 0.0);
        }
    }

    #[test]
    fn fair_coin_mean_concentrates() {
        // Hoeffding: P(|mean - 0.5| >= 0.02) <= 2 exp(-2 * 10^4 * 0.02^2) ~ 6.7e-4.
        let inst = instance(vec![0.5], RewardModel::Bernoulli);
        let mut s = RngStream::new(11, 3, 4);
        let sum: f64 = (0..10_000).map(|_| inst.pull(0, &mut s).unwrap()).sum();
        assert!((sum / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn invalid_arm_is_usage_error() {
        let inst = instance(vec![0.5], RewardModel::Bernoulli);
        let mut s = RngStream::new(0, 0, 0);
        assert!(matches!(inst.pull(1, &mut s), Err(Error::Usage(_))));
    }

    #[test]
    fn equal_triples_reproduce_sequences() {
        let inst = instance(vec![0.3, 0.6], RewardModel::Gaussian { sigma: 0.5 });
        let draw = |seed, i, t| {
            let mut s = RngStream::new(seed, i, t);
            (0..500)
                .map(|k| inst.pull(k % 2, &mut s).unwrap().to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5, 1, 2), draw(5, 1, 2));
        assert_ne!(draw(5, 1, 2), draw(5, 2, 1));
        assert_ne!(draw(5, 1, 2), draw(6, 1, 2));
    }

    #[test]
    fn bernoulli_samples_are_binary() {
        let inst = instance(vec![0.37], RewardModel::Bernoulli);
        let mut s = RngStream::new(1, 0, 0);
        assert!((0..10_000).all(|_| {
            let r = inst.pull(0, &mut s).unwrap();
            r == 0.0 || r == 1.0
        }));
    }

    #[test]
    fn gaussian_standard_deviation_matches_sigma() {
        let sigma = 0.5;
        let inst = instance(vec![0.4], RewardModel::Gaussian { sigma });
        let mut s = RngStream::new(2, 0, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| inst.pull(0, &mut s).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - sigma).abs() < 0.05 * sigma);
    }

    #[test]
    fn noiseless_model_returns_the_mean() {
        let inst = instance(vec![0.123], RewardModel::noiseless());
        let mut s = RngStream::new(0, 0, 0);
        assert_eq!(inst.pull(0, &mut s).unwrap(), 0.123);
    }

    #[test]
    fn sigma_above_half_is_rejected() {
        assert!(RewardModel::Gaussian { sigma: 0.6 }.validate().is_err());
        assert!(RewardModel::Gaussian { sigma: -0.1 }.validate().is_err());
    }
}
