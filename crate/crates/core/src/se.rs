//! Successive elimination over candidate worst arms and candidate groups.
//!
//! Each epoch pulls every active arm once (ascending index), then shrinks
//! the per-group sets of potential worst arms, the set of candidate optimal
//! groups and the active set. Eliminated arms and groups never return.

use crate::confidence::{ConfidencePolicy, ConfidenceTracker};
use crate::error::{Error, Result};
use crate::instance::BanditInstance;
use crate::reward::RngStream;
use crate::RegretSample;

/// Default pull budget guarding against non-identifiable inputs.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Slack on both elimination tests. Bounds that are equal in exact
/// arithmetic can differ by an ulp after rounding; such ties keep the arm or
/// group.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Epoch-level state of one run.
#[derive(Debug, Clone)]
pub struct SeState {
    epoch: u64,
    /// Potential worst arms per group; only meaningful for candidate groups.
    worst_candidates: Vec<Vec<usize>>,
    candidate_groups: Vec<usize>,
    active: Vec<usize>,
    tracker: ConfidenceTracker,
    total_pulls: u64,
}

/// Sizes recorded after an epoch (`--trace`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochSnapshot {
    pub epoch: u64,
    pub candidate_groups: usize,
    pub active_arms: usize,
    pub total_pulls: u64,
}

impl SeState {
    pub fn new(instance: &BanditInstance, policy: ConfidencePolicy) -> Self {
        let groups = instance.groups();
        Self {
            epoch: 0,
            worst_candidates: groups.groups().to_vec(),
            candidate_groups: (0..groups.len()).collect(),
            active: (0..instance.n()).collect(),
            tracker: ConfidenceTracker::new(policy, instance.n()),
            total_pulls: 0,
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn candidate_groups(&self) -> &[usize] {
        &self.candidate_groups
    }

    /// Potential worst arms of group `g`.
    pub fn worst_candidates(&self, g: usize) -> &[usize] {
        &self.worst_candidates[g]
    }

    pub fn active_arms(&self) -> &[usize] {
        &self.active
    }

    pub fn tracker(&self) -> &ConfidenceTracker {
        &self.tracker
    }

    pub fn total_pulls(&self) -> u64 {
        self.total_pulls
    }

    pub fn is_finished(&self) -> bool {
        self.candidate_groups.len() <= 1
    }

    pub fn snapshot(&self) -> EpochSnapshot {
        EpochSnapshot {
            epoch: self.epoch,
            candidate_groups: self.candidate_groups.len(),
            active_arms: self.active.len(),
            total_pulls: self.total_pulls,
        }
    }

    /// Runs one epoch: one pull per active arm followed by the elimination
    /// updates.
    pub fn step(&mut self, instance: &BanditInstance, stream: &mut RngStream) {
        self.step_with(instance, stream, |_, _| {});
    }

    /// Like [`SeState::step`], calling `on_pull(total_pulls)` after each pull.
    pub fn step_with(
        &mut self,
        instance: &BanditInstance,
        stream: &mut RngStream,
        mut on_pull: impl FnMut(u64, usize),
    ) {
        for &j in &self.active {
            let reward = instance.sample(j, stream);
            self.tracker.record(j, reward, instance.mean(j));
            self.total_pulls += 1;
            on_pull(self.total_pulls, j);
        }
        self.eliminate(instance);
        self.epoch += 1;
    }

    fn min_ucb_over(&self, arms: &[usize]) -> f64 {
        arms.iter()
            .map(|&j| self.tracker.ucb(j))
            .fold(f64::INFINITY, f64::min)
    }

    fn min_lcb_over(&self, arms: &[usize]) -> f64 {
        arms.iter()
            .map(|&j| self.tracker.lcb(j))
            .fold(f64::INFINITY, f64::min)
    }

    fn eliminate(&mut self, instance: &BanditInstance) {
        let groups = instance.groups();

        // Candidate groups are compared on the potential-worst sets held at
        // the start of the epoch, with the freshly updated bounds.
        let optimistic: Vec<f64> = self
            .candidate_groups
            .iter()
            .map(|&g| self.min_ucb_over(&self.worst_candidates[g]))
            .collect();
        let best_pessimistic = self
            .candidate_groups
            .iter()
            .map(|&g| self.min_lcb_over(&self.worst_candidates[g]))
            .fold(f64::NEG_INFINITY, f64::max);

        for &g in &self.candidate_groups {
            let threshold = self.min_ucb_over(groups.members(g));
            let tracker = &self.tracker;
            self.worst_candidates[g].retain(|&j| tracker.lcb(j) <= threshold + TIE_TOLERANCE);
        }

        let mut kept = Vec::with_capacity(self.candidate_groups.len());
        for (&g, &ucb) in self.candidate_groups.iter().zip(&optimistic) {
            if best_pessimistic <= ucb + TIE_TOLERANCE {
                kept.push(g);
            }
        }
        self.candidate_groups = kept;

        let mut in_active = vec![false; instance.n()];
        for &g in &self.candidate_groups {
            for &j in &self.worst_candidates[g] {
                in_active[j] = true;
            }
        }
        self.active = (0..instance.n()).filter(|&j| in_active[j]).collect();
    }

    /// Current best guess: the candidate group whose potential worst arms
    /// have the highest minimum LCB. Ties go to the lower group index.
    pub fn recommendation(&self) -> usize {
        let mut best = self.candidate_groups[0];
        let mut best_value = self.min_lcb_over(&self.worst_candidates[best]);
        for &g in &self.candidate_groups[1..] {
            let v = self.min_lcb_over(&self.worst_candidates[g]);
            if v > best_value {
                best = g;
                best_value = v;
            }
        }
        best
    }

    /// Whether the optimal group and its worst arm are both still candidates.
    pub fn retains_optimum(&self, optimal_group: usize, optimal_worst: usize) -> bool {
        self.candidate_groups.contains(&optimal_group)
            && self.worst_candidates[optimal_group].contains(&optimal_worst)
    }
}

/// Run options.
#[derive(Debug, Clone, Copy)]
pub struct SeOptions {
    pub max_pulls: u64,
    /// Record per-epoch snapshots.
    pub trace: bool,
    /// Record the regret of the current recommendation every `k` pulls.
    pub regret_stride: Option<u64>,
}

impl Default for SeOptions {
    fn default() -> Self {
        Self {
            max_pulls: DEFAULT_BUDGET,
            trace: false,
            regret_stride: None,
        }
    }
}

impl SeOptions {
    pub fn with_budget(max_pulls: u64) -> Self {
        Self {
            max_pulls,
            ..Self::default()
        }
    }
}

/// Outcome of a run.
#[derive(Debug, Clone)]
pub struct SeReport {
    /// Surviving candidate groups; a single group when `terminated`.
    pub returned: Vec<usize>,
    /// Group reported as the answer: the sole survivor, or the current best
    /// guess among survivors on budget exhaustion.
    pub recommended: usize,
    pub pulls: Vec<u64>,
    pub total_pulls: u64,
    pub epochs: u64,
    pub terminated: bool,
    /// No true mean ever left its confidence interval.
    pub bounds_valid: bool,
    /// The optimal group and its worst arm survived every epoch.
    pub optimum_retained: bool,
    /// Candidate sets only ever shrank.
    pub monotone: bool,
    pub trace: Vec<EpochSnapshot>,
    pub regret: Vec<RegretSample>,
}

/// Successive elimination until one candidate group remains or the next
/// epoch would exceed the budget.
pub fn run_se(
    instance: &BanditInstance,
    policy: ConfidencePolicy,
    stream: &mut RngStream,
    options: SeOptions,
) -> Result<SeReport> {
    let n = instance.n() as u64;
    if options.max_pulls < n {
        return Err(Error::usage(format!(
            "budget {} is smaller than the {n} pulls of the first epoch",
            options.max_pulls
        )));
    }
    if options.regret_stride == Some(0) {
        return Err(Error::usage("regret stride must be positive"));
    }

    let star = instance.optimal_group();
    let star_worst = instance.worst_arm(star)?;
    let regret_of: Vec<f64> = (0..instance.num_groups())
        .map(|g| instance.simple_regret(g))
        .collect::<Result<_>>()?;

    let mut state = SeState::new(instance, policy);
    let mut trace = Vec::new();
    let mut regret = Vec::new();
    let mut optimum_retained = true;
    let mut monotone = true;

    if options.regret_stride.is_some() {
        let g = state.recommendation();
        regret.push(RegretSample {
            round: 0,
            group: g,
            arm: None,
            regret: regret_of[g],
        });
    }
    if options.trace {
        trace.push(state.snapshot());
    }

    while !state.is_finished() {
        if state.total_pulls + state.active.len() as u64 > options.max_pulls {
            break;
        }
        let before_groups = state.candidate_groups.clone();
        let before_sizes: Vec<usize> = state.worst_candidates.iter().map(Vec::len).collect();

        match options.regret_stride {
            Some(stride) => {
                let group = state.recommendation();
                let current = regret_of[group];
                state.step_with(instance, stream, |t, arm| {
                    if t % stride == 0 {
                        regret.push(RegretSample {
                            round: t,
                            group,
                            arm: Some(arm),
                            regret: current,
                        });
                    }
                });
            }
            None => state.step(instance, stream),
        }

        if !state
            .candidate_groups
            .iter()
            .all(|g| before_groups.contains(g))
            || state
                .worst_candidates
                .iter()
                .zip(&before_sizes)
                .any(|(m, &before)| m.len() > before)
        {
            monotone = false;
        }
        if !state.retains_optimum(star, star_worst) {
            optimum_retained = false;
        }
        if options.trace {
            trace.push(state.snapshot());
        }
    }

    let terminated = state.is_finished();
    let recommended = state.recommendation();
    if options.regret_stride.is_some() {
        let final_regret = regret_of[recommended];
        match regret.last_mut() {
            Some(s) if s.round == state.total_pulls => {
                s.group = recommended;
                s.regret = final_regret;
            }
            _ => regret.push(RegretSample {
                round: state.total_pulls,
                group: recommended,
                arm: None,
                regret: final_regret,
            }),
        }
    }

    Ok(SeReport {
        returned: state.candidate_groups.clone(),
        recommended,
        pulls: state.tracker.stats().counts().to_vec(),
        total_pulls: state.total_pulls,
        epochs: state.epoch,
        terminated,
        bounds_valid: state.tracker.bounds_valid(),
        optimum_retained,
        monotone,
        trace,
        regret,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::GroupStructure;
    use crate::reward::RewardModel;

    fn i0(model: RewardModel) -> BanditInstance {
        let groups = GroupStructure::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        BanditInstance::new(vec![0.9, 0.5, 0.8, 0.3], groups, model).unwrap()
    }

    fn practical(c: f64) -> ConfidencePolicy {
        ConfidencePolicy::practical(c).unwrap()
    }

    #[test]
    fn first_epoch_with_vacuous_bounds_eliminates_nothing() {
        let inst = i0(RewardModel::noiseless());
        let mut state = SeState::new(&inst, practical(1.0));
        let mut s = RngStream::new(0, 0, 0);
        state.step(&inst, &mut s);
        assert_eq!(state.candidate_groups(), &[0, 1]);
        assert_eq!(state.worst_candidates(0), &[0, 1]);
        assert_eq!(state.worst_candidates(1), &[2, 3]);
        assert_eq!(state.active_arms(), &[0, 1, 2, 3]);
    }

    #[test]
    fn noiseless_i0_elimination_schedule() {
        // Arm 3 leaves group 2's worst set once 2/sqrt(t) < 0.5, i.e. t = 17;
        // group 2 leaves the candidates once 2/sqrt(t) < 0.2, i.e. t = 101.
        let inst = i0(RewardModel::noiseless());
        let mut state = SeState::new(&inst, practical(1.0));
        let mut s = RngStream::new(0, 0, 0);
        let mut arm3_out = None;
        let mut group2_out = None;
        while !state.is_finished() {
            state.step(&inst, &mut s);
            let t = state.tracker().count(3);
            if arm3_out.is_none() && !state.worst_candidates(1).contains(&2) {
                arm3_out = Some(t);
            }
            if group2_out.is_none() && !state.candidate_groups().contains(&1) {
                group2_out = Some(t);
            }
        }
        assert_eq!(arm3_out, Some(17));
        assert_eq!(group2_out, Some(101));
        assert_eq!(state.candidate_groups(), &[0]);
        assert_eq!(state.tracker().count(1), 101);
        // Arm 1 leaves group 1's worst set after 2/sqrt(t) < 0.4, i.e. t = 26.
        assert_eq!(state.tracker().count(0), 26);
    }

    #[test]
    fn single_group_returns_without_pulls() {
        let groups = GroupStructure::new(3, vec![vec![0, 1, 2]]).unwrap();
        let inst =
            BanditInstance::new(vec![0.1, 0.2, 0.3], groups, RewardModel::Bernoulli).unwrap();
        let mut s = RngStream::new(0, 0, 0);
        let report = run_se(&inst, practical(1.0), &mut s, SeOptions::default()).unwrap();
        assert_eq!(report.returned, vec![0]);
        assert_eq!(report.total_pulls, 0);
        assert!(report.terminated);
    }

    #[test]
    fn budget_below_one_epoch_is_usage_error() {
        let inst = i0(RewardModel::Bernoulli);
        let mut s = RngStream::new(0, 0, 0);
        let err = run_se(&inst, practical(1.0), &mut s, SeOptions::with_budget(3));
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn budget_exhaustion_reports_survivors() {
        let inst = i0(RewardModel::Bernoulli);
        let mut s = RngStream::new(0, 0, 0);
        let report = run_se(&inst, practical(1.0), &mut s, SeOptions::with_budget(10)).unwrap();
        assert!(!report.terminated);
        assert_eq!(report.returned.len(), 2);
        assert!(report.total_pulls <= 10);
        assert_eq!(report.total_pulls, report.pulls.iter().sum::<u64>());
    }

    #[test]
    fn non_identifiable_instance_exhausts_budget() {
        let groups = GroupStructure::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let inst =
            BanditInstance::new(vec![0.9, 0.5, 0.8], groups, RewardModel::noiseless()).unwrap();
        let mut s = RngStream::new(0, 0, 0);
        let report = run_se(
            &inst,
            practical(1.0),
            &mut s,
            SeOptions::with_budget(20_000),
        )
        .unwrap();
        assert!(!report.terminated);
        assert_eq!(report.returned, vec![0, 1]);
    }

    #[test]
    fn active_arms_share_pull_counts_after_each_epoch() {
        let inst = i0(RewardModel::Bernoulli);
        let mut state = SeState::new(&inst, practical(1.0));
        let mut s = RngStream::new(3, 1, 4);
        while !state.is_finished() {
            state.step(&inst, &mut s);
            let counts: Vec<u64> = state
                .active_arms()
                .iter()
                .map(|&j| state.tracker().count(j))
                .collect();
            assert!(counts.windows(2).all(|w| w[0] == w[1]));
            // Active set is the union of candidate groups' worst sets.
            let mut union: Vec<usize> = state
                .candidate_groups()
                .iter()
                .flat_map(|&g| state.worst_candidates(g).iter().copied())
                .collect();
            union.sort_unstable();
            union.dedup();
            assert_eq!(union, state.active_arms());
        }
    }

    #[test]
    fn trace_and_regret_are_recorded() {
        let inst = i0(RewardModel::Bernoulli);
        let mut s = RngStream::new(0, 0, 0);
        let opts = SeOptions {
            trace: true,
            regret_stride: Some(10),
            ..SeOptions::default()
        };
        let report = run_se(&inst, practical(1.0), &mut s, opts).unwrap();
        assert!(report.terminated);
        assert_eq!(report.trace.len() as u64, report.epochs + 1);
        assert_eq!(report.trace.last().unwrap().total_pulls, report.total_pulls);
        assert_eq!(report.regret[0].round, 0);
        assert!(report.regret.windows(2).all(|w| w[0].round < w[1].round));
        assert!(report.monotone);
    }
}
