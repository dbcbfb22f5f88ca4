//! Max-min grouped bandits: identify the group whose worst arm is best.
//!
//! The crate holds the instance model, reward sampling, anytime confidence
//! bounds, three identification algorithms (successive elimination, a
//! StableOpt variant and a group-by-group baseline), closed-form bounds, a
//! random instance generator and the experiment harness behind the `maxmin`
//! command-line tool.
//!
//! Arms and groups are 0-based in the API and 1-based in every file format.

pub mod bounds;
pub mod confidence;
pub mod error;
pub mod generator;
pub mod harness;
pub mod instance;
pub mod naive;
pub mod reward;
pub mod se;
pub mod stableopt;

pub use confidence::{ArmStats, ConfidencePolicy, ConfidenceTracker, PolicyKind};
pub use error::{Error, Result};
pub use generator::{generate, GeneratorSpec};
pub use instance::{BanditInstance, GapProfile, GroupStructure};
pub use naive::{run_naive, NaiveReport};
pub use reward::{RewardModel, RngStream, RNG_IDENTITY};
pub use se::{run_se, SeOptions, SeReport};
pub use stableopt::{run_stableopt, RecommendRule, StableOptOptions, StableOptReport, StopRule};

/// Recommendation and its simple regret after `round` pulls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretSample {
    pub round: u64,
    pub group: usize,
    /// Arm pulled at `round`; `None` at round 0 and for the closing sample.
    pub arm: Option<usize>,
    pub regret: f64,
}
