//! Random instances with a prescribed gap between the best and second-best
//! group.
//!
//! Group 1 is the optimum (worst-arm mean 0.5), group 2 is the runner-up
//! (worst-arm mean `0.5 - gap`) and every other group has a worst-arm mean
//! drawn from `[0, 0.5 - gap]`. Remaining arms are drawn above the highest
//! floor among the groups that contain them.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{BanditInstance, GroupStructure};
use crate::reward::{RewardModel, RngStream};

/// Regeneration attempts before giving up.
pub const MAX_ATTEMPTS: usize = 100;

/// Number of random arms put into a group that received no members.
pub const FILL_SIZE: usize = 10;

/// Trial id reserved for generator streams, so that an instance's
/// construction never shares randomness with its trials.
pub const GENERATOR_TRIAL: u32 = u32::MAX;

const OPTIMAL_FLOOR: f64 = 0.5;

/// Tolerance on `delta0 == gap`; `0.5 - (0.5 - gap)` is not always `gap` in
/// binary floating point.
pub const GAP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub num_groups: usize,
    pub gap: f64,
    pub reward_model: RewardModel,
}

impl GeneratorSpec {
    /// 100 Bernoulli arms in 10 groups.
    pub fn new(gap: f64) -> Self {
        Self {
            n: 100,
            num_groups: 10,
            gap,
            reward_model: RewardModel::Bernoulli,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gap > 0.0 && self.gap <= 0.5) {
            return Err(Error::config(format!(
                "gap must lie in (0, 0.5], got {}",
                self.gap
            )));
        }
        if self.num_groups < 2 {
            return Err(Error::config(
                "at least two groups are needed to realise a gap",
            ));
        }
        if self.n < 2 {
            return Err(Error::config("at least two arms are needed"));
        }
        self.reward_model.validate()
    }
}

/// Draws one instance from `stream`.
pub fn generate(spec: &GeneratorSpec, stream: &mut RngStream) -> Result<BanditInstance> {
    spec.validate()?;
    let mut last = String::new();
    for _ in 0..MAX_ATTEMPTS {
        match attempt(spec, stream.rng()) {
            Ok(instance) => return Ok(instance),
            Err(reason) => last = reason,
        }
    }
    Err(Error::Generation {
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

/// Generates the `instance_id`-th instance of a suite seeded by `master_seed`.
pub fn generate_indexed(
    spec: &GeneratorSpec,
    master_seed: u64,
    instance_id: u32,
) -> Result<BanditInstance> {
    let mut stream = RngStream::new(master_seed, instance_id, GENERATOR_TRIAL);
    generate(spec, &mut stream)
}

fn membership<R: Rng>(spec: &GeneratorSpec, rng: &mut R) -> Vec<Vec<usize>> {
    let (n, k) = (spec.n, spec.num_groups);
    let p = 1.0 / k as f64;
    let mut groups = vec![Vec::new(); k];
    for j in 0..n {
        let mut placed = false;
        for group in groups.iter_mut() {
            if rng.random::<f64>() < p {
                group.push(j);
                placed = true;
            }
        }
        if !placed {
            groups[rng.random_range(0..k)].push(j);
        }
    }
    for group in groups.iter_mut() {
        if group.is_empty() {
            *group = index::sample(rng, n, FILL_SIZE.min(n)).into_vec();
            group.sort_unstable();
        }
    }
    groups
}

fn pick<R: Rng>(rng: &mut R, items: &[usize]) -> Option<usize> {
    if items.is_empty() {
        None
    } else {
        Some(items[rng.random_range(0..items.len())])
    }
}

fn attempt<R: Rng>(
    spec: &GeneratorSpec,
    rng: &mut R,
) -> std::result::Result<BanditInstance, String> {
    let (n, k, gap) = (spec.n, spec.num_groups, spec.gap);
    let mut groups = membership(spec, rng);

    // Designated worst arms of groups 1 and 2 belong to exactly one group.
    let j0 = pick(rng, &groups[0]).expect("groups are non-empty");
    let runner_up: Vec<usize> = groups[1].iter().copied().filter(|&j| j != j0).collect();
    let j1 = pick(rng, &runner_up).ok_or("group 2 contains only the optimal worst arm")?;
    for (g, group) in groups.iter_mut().enumerate() {
        if g != 0 {
            group.retain(|&j| j != j0);
        }
        if g != 1 {
            group.retain(|&j| j != j1);
        }
        if group.is_empty() {
            return Err(format!(
                "group {} emptied by isolating the worst arms",
                g + 1
            ));
        }
    }

    let mut floor = vec![0.0; k];
    floor[0] = OPTIMAL_FLOOR;
    floor[1] = OPTIMAL_FLOOR - gap;
    for f in floor.iter_mut().skip(2) {
        *f = rng.random::<f64>() * (OPTIMAL_FLOOR - gap);
    }

    let mut arm_groups = vec![Vec::new(); n];
    for (g, group) in groups.iter().enumerate() {
        for &j in group {
            arm_groups[j].push(g);
        }
    }

    let mut means = vec![f64::NAN; n];
    means[j0] = floor[0];
    means[j1] = floor[1];
    // A worst arm of group g >= 3 sits outside groups 1 and 2 and in no
    // group with a higher floor, so it cannot undercut any other floor.
    for g in 2..k {
        let candidates: Vec<usize> = groups[g]
            .iter()
            .copied()
            .filter(|&j| {
                arm_groups[j]
                    .iter()
                    .all(|&h| h == g || (h >= 2 && floor[h] < floor[g]))
            })
            .collect();
        let w = pick(rng, &candidates)
            .ok_or_else(|| format!("no admissible worst arm for group {}", g + 1))?;
        means[w] = floor[g];
    }
    for j in 0..n {
        if means[j].is_nan() {
            let lo = arm_groups[j].iter().map(|&g| floor[g]).fold(0.0, f64::max);
            means[j] = lo + (1.0 - lo) * rng.random::<f64>();
        }
    }

    let structure = GroupStructure::new(n, groups).map_err(|e| e.to_string())?;
    let instance =
        BanditInstance::new(means, structure, spec.reward_model).map_err(|e| e.to_string())?;
    for (g, &f) in floor.iter().enumerate() {
        if instance.group_value(g) != f {
            return Err(format!("group {} floor not respected", g + 1));
        }
    }
    let profile = instance.gap_profile().map_err(|e| e.to_string())?;
    if profile.optimal_group != 0 {
        return Err("group 1 is not optimal".into());
    }
    if (profile.delta0 - gap).abs() > GAP_TOLERANCE {
        return Err(format!(
            "realised gap {} differs from {gap}",
            profile.delta0
        ));
    }
    Ok(instance)
}
