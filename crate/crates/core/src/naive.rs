//! Group-wise baseline: find each group's worst arm in isolation, then
//! return the group whose identified worst arm has the highest LCB.
//!
//! Each group is a separate worst-arm search with fresh statistics, even
//! for arms shared with other groups. Within a group, every member is
//! pulled once and then the member with the lowest LCB is pulled until one
//! member's UCB is at most every other member's LCB plus `eta`.

use crate::confidence::{ConfidencePolicy, ConfidenceTracker};
use crate::error::{Error, Result};
use crate::instance::BanditInstance;
use crate::reward::RngStream;

/// Outcome of one group's worst-arm search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSearch {
    pub group: usize,
    /// Identified worst arm (the lowest-UCB member if the search was cut
    /// short by the budget).
    pub arm: usize,
    /// LCB of `arm` within this group's statistics.
    pub lcb: f64,
    pub pulls: u64,
    pub finished: bool,
}

#[derive(Debug, Clone)]
pub struct NaiveReport {
    pub returned: usize,
    /// Pulls per arm summed over all group searches.
    pub pulls: Vec<u64>,
    pub total_pulls: u64,
    pub terminated: bool,
    /// Every group search kept all its true means inside their intervals.
    pub bounds_valid: bool,
    pub searches: Vec<GroupSearch>,
}

/// Index (into `members`) of a member whose UCB is within `eta` of every
/// other member's LCB. The lowest such UCB wins, then the lowest index.
fn identified(members: &[usize], tracker: &ConfidenceTracker, eta: f64) -> Option<usize> {
    if members.len() == 1 {
        return Some(0);
    }
    // Two smallest LCBs so each member can be compared against the others.
    let (mut lo1, mut lo2, mut arg1) = (f64::INFINITY, f64::INFINITY, 0);
    for (k, &j) in members.iter().enumerate() {
        let l = tracker.lcb(j);
        if l < lo1 {
            lo2 = lo1;
            lo1 = l;
            arg1 = k;
        } else if l < lo2 {
            lo2 = l;
        }
    }
    let mut found: Option<(usize, f64)> = None;
    for (k, &j) in members.iter().enumerate() {
        let others = if k == arg1 { lo2 } else { lo1 };
        let u = tracker.ucb(j);
        if u <= others + eta && found.is_none_or(|(_, bu)| u < bu) {
            found = Some((k, u));
        }
    }
    found.map(|(k, _)| k)
}

fn lowest_ucb(members: &[usize], tracker: &ConfidenceTracker) -> usize {
    let mut best = 0;
    for k in 1..members.len() {
        if tracker.ucb(members[k]) < tracker.ucb(members[best]) {
            best = k;
        }
    }
    best
}

fn lowest_lcb(members: &[usize], tracker: &ConfidenceTracker) -> usize {
    let mut best = 0;
    for k in 1..members.len() {
        if tracker.lcb(members[k]) < tracker.lcb(members[best]) {
            best = k;
        }
    }
    best
}

pub fn run_naive(
    instance: &BanditInstance,
    policy: ConfidencePolicy,
    stream: &mut RngStream,
    eta: f64,
    budget: u64,
) -> Result<NaiveReport> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::config(format!(
            "stopping tolerance must be non-negative, got {eta}"
        )));
    }
    let groups = instance.groups();
    let initial: u64 = groups.groups().iter().map(|m| m.len() as u64).sum();
    if budget < initial {
        return Err(Error::usage(format!(
            "budget {budget} cannot pull each of the {initial} group members once"
        )));
    }

    let mut pulls = vec![0u64; instance.n()];
    let mut total = 0u64;
    let mut bounds_valid = true;
    let mut searches = Vec::with_capacity(groups.len());

    for g in 0..groups.len() {
        let members = groups.members(g);
        let mut tracker = ConfidenceTracker::new(policy, instance.n());
        let mut local = 0u64;
        let mut pull = |j: usize, tracker: &mut ConfidenceTracker, local: &mut u64| {
            let r = instance.sample(j, stream);
            tracker.record(j, r, instance.mean(j));
            pulls[j] += 1;
            *local += 1;
        };

        let mut finished = total + members.len() as u64 <= budget;
        if finished {
            for &j in members {
                pull(j, &mut tracker, &mut local);
            }
            total += members.len() as u64;
            loop {
                if identified(members, &tracker, eta).is_some() {
                    break;
                }
                if total >= budget {
                    finished = false;
                    break;
                }
                let k = lowest_lcb(members, &tracker);
                pull(members[k], &mut tracker, &mut local);
                total += 1;
            }
        }

        let k = identified(members, &tracker, eta)
            .filter(|_| finished)
            .unwrap_or_else(|| lowest_ucb(members, &tracker));
        bounds_valid &= tracker.bounds_valid();
        searches.push(GroupSearch {
            group: g,
            arm: members[k],
            lcb: tracker.lcb(members[k]),
            pulls: local,
            finished,
        });
    }

    let terminated = searches.iter().all(|s| s.finished);
    let mut returned = 0;
    for s in &searches[1..] {
        if s.lcb > searches[returned].lcb {
            returned = s.group;
        }
    }

    Ok(NaiveReport {
        returned,
        pulls,
        total_pulls: total,
        terminated,
        bounds_valid,
        searches,
    })
}
