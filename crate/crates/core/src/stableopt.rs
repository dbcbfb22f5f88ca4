//! StableOpt adapted to max-min grouped bandits.
//!
//! Round `t` picks the group with the highest minimum UCB (optimistic
//! group) and pulls its member with the lowest LCB (pessimistic arm). The
//! run ends after a fixed horizon or, in stopping mode, once the group with
//! the best minimum LCB beats every other group's minimum UCB up to a
//! tolerance `eta`.

use serde::{Deserialize, Serialize};

use crate::confidence::{ConfidencePolicy, ConfidenceTracker};
use crate::error::{Error, Result};
use crate::instance::BanditInstance;
use crate::reward::RngStream;
use crate::RegretSample;

pub const DEFAULT_ETA: f64 = 0.01;
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// How the run ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Exactly `T` rounds.
    Horizon(u64),
    /// Stop at the first round where the leader's minimum LCB is at least
    /// every other group's minimum UCB minus `eta`, or after `budget` rounds.
    Tolerance { eta: f64, budget: u64 },
}

impl StopRule {
    /// Builds a rule from optional settings; exactly one of `horizon` and
    /// `eta` must be given.
    pub fn from_settings(horizon: Option<u64>, eta: Option<f64>, budget: u64) -> Result<Self> {
        match (horizon, eta) {
            (Some(_), Some(_)) => Err(Error::config(
                "set either a horizon or a stopping tolerance, not both",
            )),
            (None, None) => Err(Error::config(
                "either a horizon or a stopping tolerance is required",
            )),
            (Some(t), None) => Ok(StopRule::Horizon(t)),
            (None, Some(eta)) if eta >= 0.0 && eta.is_finite() => {
                Ok(StopRule::Tolerance { eta, budget })
            }
            (None, Some(eta)) => Err(Error::config(format!(
                "stopping tolerance must be non-negative, got {eta}"
            ))),
        }
    }

    fn max_rounds(&self) -> u64 {
        match *self {
            StopRule::Horizon(t) => t,
            StopRule::Tolerance { budget, .. } => budget,
        }
    }
}

/// Which group is declared the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecommendRule {
    /// The group with the best minimum LCB under the current statistics.
    #[default]
    CurrentLcb,
    /// The group selected in the round whose selection-time minimum LCB was
    /// highest (earliest such round on ties).
    BestHistorical,
}

/// One round of selection history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub round: u64,
    pub group: usize,
    pub arm: usize,
    /// Minimum LCB over the selected group before the pull.
    pub min_lcb: f64,
}

/// Entry with the highest `min_lcb`, earliest on ties.
pub fn best_round(history: &[HistoryEntry]) -> Option<&HistoryEntry> {
    history
        .iter()
        .fold(None, |best: Option<&HistoryEntry>, e| match best {
            Some(b) if b.min_lcb >= e.min_lcb => Some(b),
            _ => Some(e),
        })
}

/// Per-round state with cached per-group minima.
#[derive(Debug, Clone)]
pub struct StableOptState {
    round: u64,
    tracker: ConfidenceTracker,
    group_min_ucb: Vec<f64>,
    group_min_lcb: Vec<f64>,
    group_argmin_lcb: Vec<usize>,
    best: Option<HistoryEntry>,
    history: Option<Vec<HistoryEntry>>,
}

impl StableOptState {
    pub fn new(instance: &BanditInstance, policy: ConfidencePolicy, keep_history: bool) -> Self {
        let groups = instance.groups();
        let mut state = Self {
            round: 0,
            tracker: ConfidenceTracker::new(policy, instance.n()),
            group_min_ucb: vec![1.0; groups.len()],
            group_min_lcb: vec![0.0; groups.len()],
            group_argmin_lcb: vec![0; groups.len()],
            best: None,
            history: keep_history.then(Vec::new),
        };
        for g in 0..groups.len() {
            state.refresh_group(instance, g);
        }
        state
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn tracker(&self) -> &ConfidenceTracker {
        &self.tracker
    }

    pub fn history(&self) -> Option<&[HistoryEntry]> {
        self.history.as_deref()
    }

    pub fn group_min_ucb(&self, g: usize) -> f64 {
        self.group_min_ucb[g]
    }

    pub fn group_min_lcb(&self, g: usize) -> f64 {
        self.group_min_lcb[g]
    }

    fn refresh_group(&mut self, instance: &BanditInstance, g: usize) {
        let members = instance.groups().members(g);
        let mut min_ucb = f64::INFINITY;
        let mut min_lcb = f64::INFINITY;
        let mut arg = members[0];
        for &j in members {
            min_ucb = min_ucb.min(self.tracker.ucb(j));
            let l = self.tracker.lcb(j);
            if l < min_lcb {
                min_lcb = l;
                arg = j;
            }
        }
        self.group_min_ucb[g] = min_ucb;
        self.group_min_lcb[g] = min_lcb;
        self.group_argmin_lcb[g] = arg;
    }

    /// Optimistic group and its pessimistic arm.
    ///
    /// Ties on the minimum UCB prefer the group with the lower minimum LCB,
    /// then the lower group index.
    pub fn select(&self) -> (usize, usize) {
        let mut best = 0;
        for g in 1..self.group_min_ucb.len() {
            let (u, bu) = (self.group_min_ucb[g], self.group_min_ucb[best]);
            if u > bu || (u == bu && self.group_min_lcb[g] < self.group_min_lcb[best]) {
                best = g;
            }
        }
        (best, self.group_argmin_lcb[best])
    }

    /// Group with the highest minimum LCB; ties go to the lower index.
    pub fn lcb_leader(&self) -> usize {
        let mut best = 0;
        for g in 1..self.group_min_lcb.len() {
            if self.group_min_lcb[g] > self.group_min_lcb[best] {
                best = g;
            }
        }
        best
    }

    /// Recommendation after at least one round.
    pub fn recommend(&self, rule: RecommendRule) -> Result<usize> {
        if self.round == 0 {
            return Err(Error::domain("no rounds played yet"));
        }
        Ok(match rule {
            RecommendRule::CurrentLcb => self.lcb_leader(),
            RecommendRule::BestHistorical => self.best.map(|e| e.group).unwrap_or(0),
        })
    }

    /// Tolerance stopping test on the current statistics.
    pub fn should_stop(&self, eta: f64) -> bool {
        let leader = self.lcb_leader();
        let lead = self.group_min_lcb[leader];
        self.group_min_ucb
            .iter()
            .enumerate()
            .all(|(g, &u)| g == leader || lead >= u - eta)
    }

    /// Plays one round and returns its history entry.
    pub fn play_round(
        &mut self,
        instance: &BanditInstance,
        stream: &mut RngStream,
    ) -> HistoryEntry {
        let (group, arm) = self.select();
        self.round += 1;
        let entry = HistoryEntry {
            round: self.round,
            group,
            arm,
            min_lcb: self.group_min_lcb[group],
        };
        if self.best.is_none_or(|b| entry.min_lcb > b.min_lcb) {
            self.best = Some(entry);
        }
        if let Some(h) = self.history.as_mut() {
            h.push(entry);
        }

        let reward = instance.sample(arm, stream);
        self.tracker.record(arm, reward, instance.mean(arm));
        for &g in instance.groups().groups_of(arm) {
            self.refresh_group(instance, g);
        }
        entry
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StableOptOptions {
    pub stop: StopRule,
    pub recommend: RecommendRule,
    /// Record regret of the current recommendation every `k` rounds.
    pub regret_stride: Option<u64>,
    /// Check the per-round regret bound each round.
    pub diagnostics: bool,
    pub keep_history: bool,
}

impl StableOptOptions {
    pub fn new(stop: StopRule) -> Self {
        Self {
            stop,
            recommend: RecommendRule::default(),
            regret_stride: None,
            diagnostics: false,
            keep_history: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StableOptReport {
    pub recommended: usize,
    /// Recommendation of the best-historical rule, whichever rule was used.
    pub historical: usize,
    pub rounds: u64,
    /// Tolerance rule fired (always `false` in horizon mode).
    pub stopped: bool,
    pub pulls: Vec<u64>,
    pub bounds_valid: bool,
    /// `(1/T) sum_t 2 U(T_{j_t}(t-1))`.
    pub mean_width: f64,
    /// Rounds, among those with valid bounds so far, where the regret of the
    /// selected group exceeded `2 U(T_{j_t}(t-1))`. Only counted with
    /// diagnostics on.
    pub width_violations: u64,
    pub regret: Vec<RegretSample>,
    pub history: Option<Vec<HistoryEntry>>,
}

pub fn run_stableopt(
    instance: &BanditInstance,
    policy: ConfidencePolicy,
    stream: &mut RngStream,
    options: StableOptOptions,
) -> Result<StableOptReport> {
    if let StopRule::Tolerance { eta, .. } = options.stop {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::config(format!(
                "stopping tolerance must be non-negative, got {eta}"
            )));
        }
    }
    if options.regret_stride == Some(0) {
        return Err(Error::usage("regret stride must be positive"));
    }

    let regret_of: Vec<f64> = (0..instance.num_groups())
        .map(|g| instance.simple_regret(g))
        .collect::<Result<_>>()?;
    let mut state = StableOptState::new(instance, policy, options.keep_history);
    let mut regret = Vec::new();
    let mut width_sum = 0.0;
    let mut width_violations = 0;
    let mut stopped = false;

    if options.regret_stride.is_some() {
        let g = state.lcb_leader();
        regret.push(RegretSample {
            round: 0,
            group: g,
            arm: None,
            regret: regret_of[g],
        });
    }

    let max_rounds = options.stop.max_rounds();
    while state.round < max_rounds {
        let (group, arm) = state.select();
        let width = 2.0 * state.tracker.radius(arm);
        width_sum += width;
        if options.diagnostics && state.tracker.bounds_valid() && regret_of[group] > width {
            width_violations += 1;
        }

        state.play_round(instance, stream);

        if let Some(stride) = options.regret_stride {
            if state.round.is_multiple_of(stride) {
                let g = state.recommend(options.recommend)?;
                regret.push(RegretSample {
                    round: state.round,
                    group: g,
                    arm: Some(arm),
                    regret: regret_of[g],
                });
            }
        }
        if let StopRule::Tolerance { eta, .. } = options.stop {
            if state.should_stop(eta) {
                stopped = true;
                break;
            }
        }
    }

    let recommended = if state.round == 0 {
        state.lcb_leader()
    } else {
        state.recommend(options.recommend)?
    };
    let historical = state.best.map_or(recommended, |e| e.group);
    if options.regret_stride.is_some() && regret.last().map(|s| s.round) != Some(state.round) {
        regret.push(RegretSample {
            round: state.round,
            group: recommended,
            arm: None,
            regret: regret_of[recommended],
        });
    }

    Ok(StableOptReport {
        recommended,
        historical,
        rounds: state.round,
        stopped,
        pulls: state.tracker.stats().counts().to_vec(),
        bounds_valid: state.tracker.bounds_valid(),
        mean_width: if state.round == 0 {
            0.0
        } else {
            width_sum / state.round as f64
        },
        width_violations,
        regret,
        history: state.history,
    })
}
