//! Max-min grouped bandit instances and their ground-truth gap quantities.
//!
//! Arms and groups are 0-based inside the library. The on-disk instance
//! format and every CSV column use 1-based indices.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::RewardModel;

/// Gap assigned to `delta0` when an instance has a single group and there is
/// no competitor to separate from. Means live in `[0, 1]`, so 1 is the widest
/// possible separation.
pub const NO_COMPETITOR_GAP: f64 = 1.0;

/// The known (possibly overlapping) grouping of arms.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    n: usize,
    groups: Vec<Vec<usize>>,
    arm_groups: Vec<Vec<usize>>,
}

impl GroupStructure {
    /// Builds a structure from 0-based member lists.
    ///
    /// Members are sorted; duplicate members, out-of-range indices, empty
    /// groups and arms belonging to no group are rejected.
    pub fn new(n: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::usage("an instance needs at least one arm"));
        }
        if groups.is_empty() {
            return Err(Error::usage("an instance needs at least one group"));
        }
        let mut arm_groups = vec![Vec::new(); n];
        let mut sorted = Vec::with_capacity(groups.len());
        for (g, mut members) in groups.into_iter().enumerate() {
            if members.is_empty() {
                return Err(Error::usage(format!("group {} is empty", g + 1)));
            }
            members.sort_unstable();
            if members.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::usage(format!("group {} lists an arm twice", g + 1)));
            }
            if let Some(&bad) = members.iter().find(|&&j| j >= n) {
                return Err(Error::usage(format!(
                    "group {} references arm {} but n = {n}",
                    g + 1,
                    bad + 1
                )));
            }
            for &j in &members {
                arm_groups[j].push(g);
            }
            sorted.push(members);
        }
        if let Some(orphan) = arm_groups.iter().position(Vec::is_empty) {
            return Err(Error::usage(format!(
                "arm {} belongs to no group",
                orphan + 1
            )));
        }
        Ok(Self {
            n,
            groups: sorted,
            arm_groups,
        })
    }

    /// Builds a structure from 1-based member lists, as stored in files.
    pub fn from_one_based(n: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut zero = Vec::with_capacity(groups.len());
        for (g, members) in groups.iter().enumerate() {
            let mut shifted = Vec::with_capacity(members.len());
            for &j in members {
                if j == 0 {
                    return Err(Error::usage(format!(
                        "group {} contains arm 0; indices are 1-based",
                        g + 1
                    )));
                }
                shifted.push(j - 1);
            }
            zero.push(shifted);
        }
        Self::new(n, zero)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Sorted members of group `g`.
    pub fn members(&self, g: usize) -> &[usize] {
        &self.groups[g]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Groups containing arm `j`, ascending.
    pub fn groups_of(&self, j: usize) -> &[usize] {
        &self.arm_groups[j]
    }

    /// Largest number of groups any single arm belongs to.
    pub fn max_overlap(&self) -> usize {
        self.arm_groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.groups
            .iter()
            .map(|m| m.iter().map(|j| j + 1).collect())
            .collect()
    }
}

/// Ground truth of a simulation: arm means, grouping and reward model.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    means: Vec<f64>,
    groups: GroupStructure,
    reward_model: RewardModel,
}

impl BanditInstance {
    pub fn new(means: Vec<f64>, groups: GroupStructure, reward_model: RewardModel) -> Result<Self> {
        if means.len() != groups.n() {
            return Err(Error::usage(format!(
                "{} means supplied for {} arms",
                means.len(),
                groups.n()
            )));
        }
        if let Some(j) = means
            .iter()
            .position(|m| !m.is_finite() || !(0.0..=1.0).contains(m))
        {
            return Err(Error::usage(format!(
                "mean of arm {} is {}, outside [0, 1]",
                j + 1,
                means[j]
            )));
        }
        reward_model.validate()?;
        Ok(Self {
            means,
            groups,
            reward_model,
        })
    }

    pub fn n(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.means[j]
    }

    pub fn groups(&self) -> &GroupStructure {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn reward_model(&self) -> RewardModel {
        self.reward_model
    }

    /// Same means and grouping under a different reward model.
    pub fn with_reward_model(&self, reward_model: RewardModel) -> Result<Self> {
        Self::new(self.means.clone(), self.groups.clone(), reward_model)
    }

    fn check_group(&self, g: usize) -> Result<()> {
        if g >= self.groups.len() {
            return Err(Error::usage(format!(
                "group index {} out of range (1..={})",
                g + 1,
                self.groups.len()
            )));
        }
        Ok(())
    }

    /// Lowest-mean arm of group `g`; ties go to the lowest arm index.
    pub fn worst_arm(&self, g: usize) -> Result<usize> {
        self.check_group(g)?;
        Ok(self.worst_arm_unchecked(g))
    }

    fn worst_arm_unchecked(&self, g: usize) -> usize {
        let members = self.groups.members(g);
        let mut best = members[0];
        for &j in &members[1..] {
            if self.means[j] < self.means[best] {
                best = j;
            }
        }
        best
    }

    /// Mean of the worst arm of group `g`.
    pub fn group_value(&self, g: usize) -> f64 {
        self.means[self.worst_arm_unchecked(g)]
    }

    /// Max-min optimal group; ties go to the lowest group index.
    pub fn optimal_group(&self) -> usize {
        let mut best = 0;
        let mut best_value = self.group_value(0);
        for g in 1..self.groups.len() {
            let v = self.group_value(g);
            if v > best_value {
                best = g;
                best_value = v;
            }
        }
        best
    }

    /// Whether the optimal group's worst mean strictly beats every other group.
    pub fn is_identifiable(&self) -> bool {
        self.tied_with_optimal().is_empty()
    }

    fn tied_with_optimal(&self) -> Vec<usize> {
        let star = self.optimal_group();
        let top = self.group_value(star);
        (0..self.groups.len())
            .filter(|&g| g != star && self.group_value(g) >= top)
            .collect()
    }

    /// Simple regret of returning group `g`.
    pub fn simple_regret(&self, g: usize) -> Result<f64> {
        self.check_group(g)?;
        Ok(self.group_value(self.optimal_group()) - self.group_value(g))
    }

    /// All gap quantities of an identifiable instance.
    pub fn gap_profile(&self) -> Result<GapProfile> {
        let tied = self.tied_with_optimal();
        let star = self.optimal_group();
        if !tied.is_empty() {
            let names: Vec<String> = std::iter::once(star)
                .chain(tied)
                .map(|g| (g + 1).to_string())
                .collect();
            return Err(Error::domain(format!(
                "instance is not identifiable: groups {} share the max-min value {}",
                names.join(", "),
                self.group_value(star)
            )));
        }

        let m = self.groups.len();
        let worst_arm: Vec<usize> = (0..m).map(|g| self.worst_arm_unchecked(g)).collect();
        let top = self.means[worst_arm[star]];
        let delta_group: Vec<f64> = worst_arm.iter().map(|&w| top - self.means[w]).collect();
        let delta0 = (0..m)
            .filter(|&g| g != star)
            .map(|g| delta_group[g])
            .fold(f64::INFINITY, f64::min);
        let delta0 = if delta0.is_finite() {
            delta0
        } else {
            NO_COMPETITOR_GAP
        };

        let n = self.n();
        let mut delta_prime = vec![0.0; n];
        let mut delta_dprime = vec![0.0; n];
        let mut delta = vec![0.0; n];
        for j in 0..n {
            let containing = self.groups.groups_of(j);
            delta_prime[j] = containing
                .iter()
                .map(|&g| self.means[j] - self.means[worst_arm[g]])
                .fold(f64::INFINITY, f64::min);
            delta_dprime[j] = containing
                .iter()
                .map(|&g| delta_group[g])
                .fold(f64::INFINITY, f64::min);
            delta[j] = delta_prime[j].max(delta_dprime[j]).max(delta0);
        }

        Ok(GapProfile {
            delta_prime,
            delta_dprime,
            delta0,
            delta,
            delta_group,
            optimal_group: star,
            worst_arm,
        })
    }

    /// Parses the JSON instance format.
    pub fn from_json_str(text: &str) -> std::result::Result<Self, String> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        file.into_instance().map_err(|e| e.to_string())
    }

    pub fn to_json_string(&self) -> String {
        // Serialising plain numbers and vectors cannot fail.
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serialises")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json_string();
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Per-arm and per-group separations governing when arms stop being pulled.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    /// Distance from each arm to the worst arm of its closest containing group.
    pub delta_prime: Vec<f64>,
    /// Smallest group gap among the groups containing each arm.
    pub delta_dprime: Vec<f64>,
    /// Smallest gap between the optimal group and any other group.
    pub delta0: f64,
    /// `max(delta_prime, delta_dprime, delta0)` per arm.
    pub delta: Vec<f64>,
    /// Worst-arm gap of each group to the optimal group (0 for the optimum).
    pub delta_group: Vec<f64>,
    pub optimal_group: usize,
    /// Worst arm of every group.
    pub worst_arm: Vec<usize>,
}

/// On-disk representation. Indices are 1-based.
///
/// ```json
/// {
///   "n": 4,
///   "means": [0.9, 0.5, 0.8, 0.3],
///   "groups": [[1, 2], [3, 4]],
///   "reward_model": { "name": "bernoulli" }
/// }
/// ```
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    means: Vec<f64>,
    groups: Vec<Vec<usize>>,
    reward_model: RewardModel,
}

impl InstanceFile {
    fn into_instance(self) -> Result<BanditInstance> {
        let groups = GroupStructure::from_one_based(self.n, &self.groups)?;
        BanditInstance::new(self.means, groups, self.reward_model)
    }
}

impl From<&BanditInstance> for InstanceFile {
    fn from(inst: &BanditInstance) -> Self {
        Self {
            n: inst.n(),
            means: inst.means.clone(),
            groups: inst.groups.to_one_based(),
            reward_model: inst.reward_model,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn i0() -> BanditInstance {
        let groups = GroupStructure::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        BanditInstance::new(vec![0.9, 0.5, 0.8, 0.3], groups, RewardModel::Bernoulli).unwrap()
    }

    #[test]
    fn worst_arm_examples() {
        assert_eq!(i0().worst_arm(1).unwrap(), 3);

        let groups = GroupStructure::new(8, vec![(0..7).collect(), vec![7]]).unwrap();
        let inst = BanditInstance::new(vec![0.5; 8], groups, RewardModel::Bernoulli).unwrap();
        assert_eq!(inst.worst_arm(1).unwrap(), 7);

        let groups = GroupStructure::new(2, vec![vec![0, 1]]).unwrap();
        let inst = BanditInstance::new(vec![0.5, 0.5], groups, RewardModel::Bernoulli).unwrap();
        assert_eq!(inst.worst_arm(0).unwrap(), 0);
    }

    #[test]
    fn invalid_group_is_usage_error() {
        assert!(matches!(i0().worst_arm(2), Err(Error::Usage(_))));
        assert!(matches!(i0().simple_regret(5), Err(Error::Usage(_))));
    }

    #[test]
    fn optimal_group_examples() {
        assert_eq!(i0().optimal_group(), 0);
        let single = GroupStructure::new(2, vec![vec![0, 1]]).unwrap();
        let inst = BanditInstance::new(vec![0.2, 0.7], single, RewardModel::Bernoulli).unwrap();
        assert_eq!(inst.optimal_group(), 0);

        let overlap = GroupStructure::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let inst =
            BanditInstance::new(vec![0.9, 0.5, 0.8], overlap, RewardModel::Bernoulli).unwrap();
        assert_eq!(inst.optimal_group(), 0);
        assert!(!inst.is_identifiable());
    }

    #[test]
    fn identifiability_examples() {
        assert!(i0().is_identifiable());
        let single = GroupStructure::new(1, vec![vec![0]]).unwrap();
        let inst = BanditInstance::new(vec![0.3], single, RewardModel::Bernoulli).unwrap();
        assert!(inst.is_identifiable());
    }

    #[test]
    fn gap_profile_of_i0() {
        let p = i0().gap_profile().unwrap();
        assert_relative_eq!(p.delta0, 0.2, epsilon = 1e-12);
        for (got, want) in p.delta_prime.iter().zip([0.4, 0.0, 0.5, 0.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        for (got, want) in p.delta_dprime.iter().zip([0.0, 0.0, 0.2, 0.2]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        for (got, want) in p.delta.iter().zip([0.4, 0.2, 0.5, 0.2]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        assert_eq!(p.optimal_group, 0);
        assert_eq!(p.worst_arm, vec![1, 3]);
    }

    #[test]
    fn singleton_groups_reduce_to_best_arm() {
        let groups = GroupStructure::new(2, vec![vec![0], vec![1]]).unwrap();
        let inst = BanditInstance::new(vec![0.9, 0.5], groups, RewardModel::Bernoulli).unwrap();
        let p = inst.gap_profile().unwrap();
        assert_eq!(p.delta_prime, vec![0.0, 0.0]);
        assert_relative_eq!(p.delta0, 0.4, epsilon = 1e-12);
        assert_relative_eq!(p.delta[0], 0.4, epsilon = 1e-12);
        assert_relative_eq!(p.delta[1], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn worst_arm_of_suboptimal_group_has_group_gap() {
        let groups = GroupStructure::new(6, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        let inst = BanditInstance::new(
            vec![0.9, 0.6, 0.7, 0.35, 0.8, 0.2],
            groups,
            RewardModel::Bernoulli,
        )
        .unwrap();
        let p = inst.gap_profile().unwrap();
        for g in 1..3 {
            let w = p.worst_arm[g];
            assert_eq!(p.delta_prime[w], 0.0);
            assert_relative_eq!(p.delta[w], p.delta_group[g], epsilon = 1e-12);
        }
    }

    #[test]
    fn non_identifiable_profile_names_groups() {
        let overlap = GroupStructure::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let inst =
            BanditInstance::new(vec![0.9, 0.5, 0.8], overlap, RewardModel::Bernoulli).unwrap();
        match inst.gap_profile() {
            Err(Error::Domain(msg)) => assert!(msg.contains("groups 1, 2"), "{msg}"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn simple_regret_examples() {
        let inst = i0();
        assert_eq!(inst.simple_regret(0).unwrap(), 0.0);
        assert_relative_eq!(inst.simple_regret(1).unwrap(), 0.2, epsilon = 1e-12);

        let tie = GroupStructure::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let inst =
            BanditInstance::new(vec![0.4, 0.9, 0.4, 0.7], tie, RewardModel::Bernoulli).unwrap();
        assert_eq!(inst.simple_regret(0).unwrap(), 0.0);
        assert_eq!(inst.simple_regret(1).unwrap(), 0.0);
    }

    #[test]
    fn structure_validation() {
        assert!(GroupStructure::new(3, vec![vec![0, 1]]).is_err());
        assert!(GroupStructure::new(2, vec![vec![0, 1], vec![]]).is_err());
        assert!(GroupStructure::new(2, vec![vec![0, 2]]).is_err());
        assert!(GroupStructure::new(2, vec![vec![0, 0, 1]]).is_err());
        assert!(GroupStructure::from_one_based(2, &[vec![0, 1]]).is_err());
        let g = GroupStructure::new(2, vec![vec![1, 0]]).unwrap();
        assert_eq!(g.members(0), &[0, 1]);
    }

    #[test]
    fn means_outside_unit_interval_rejected() {
        let g = GroupStructure::new(2, vec![vec![0, 1]]).unwrap();
        assert!(BanditInstance::new(vec![0.5, 1.2], g.clone(), RewardModel::Bernoulli).is_err());
        assert!(BanditInstance::new(vec![0.5], g, RewardModel::Bernoulli).is_err());
    }

    #[test]
    fn json_schema_is_one_based() {
        let text = i0().to_json_string();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["groups"], serde_json::json!([[1, 2], [3, 4]]));
        assert_eq!(v["reward_model"]["name"], "bernoulli");
        assert_eq!(BanditInstance::from_json_str(&text).unwrap(), i0());
    }

    proptest! {
        #[test]
        fn json_round_trip_is_lossless(
            means in prop::collection::vec(0.0f64..=1.0, 1..12),
            sigma in prop_oneof![Just(None), (0.0f64..=0.5).prop_map(Some)],
        ) {
            let n = means.len();
            let groups = GroupStructure::new(n, vec![(0..n).collect(), vec![n - 1]]).unwrap();
            let model = match sigma {
                None => RewardModel::Bernoulli,
                Some(sigma) => RewardModel::Gaussian { sigma },
            };
            let inst = BanditInstance::new(means, groups, model).unwrap();
            let back = BanditInstance::from_json_str(&inst.to_json_string()).unwrap();
            prop_assert_eq!(back, inst);
        }
    }
}
