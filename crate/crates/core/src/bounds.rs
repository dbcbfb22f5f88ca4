//! Closed-form sample-complexity and regret guarantees.
//!
//! * [`se_upper_bound`]: pulls used by successive elimination when the LIL
//!   bounds hold, `sum_j 2 gamma / D_j^2 * ln(2 ln(gamma (1+eps) / D_j^2) / (delta/n))`.
//! * [`regret_upper_bound`]: instance-independent StableOpt regret,
//!   `2n/T + 4 C2 sqrt(n/T)`.
//! * [`lower_bound_optimal_arm`] and [`lower_bound_total`]: expected pulls any
//!   uniformly delta-successful algorithm needs.

use crate::confidence::{inversion_bound_continuous, lil_delta_limit};
use crate::error::{Error, Result};
use crate::instance::{BanditInstance, GapProfile, GroupStructure};

fn check_lil(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let limit = lil_delta_limit(epsilon);
    if !(delta > 0.0 && delta < limit) {
        return Err(Error::config(format!(
            "delta must lie in (0, {limit:.6}), got {delta}"
        )));
    }
    Ok(())
}

/// Per-arm pull bound for gap `gap` (`inversion_bound` before rounding).
pub fn se_arm_bound(gap: f64, epsilon: f64, delta: f64, n: usize) -> Result<f64> {
    check_lil(epsilon, delta)?;
    if gap.is_nan() || gap <= 0.0 {
        return Err(Error::domain(format!(
            "gap must be positive (instance not identifiable?), got {gap}"
        )));
    }
    Ok(inversion_bound_continuous(epsilon, delta / n as f64, gap))
}

/// Total pull bound of successive elimination.
pub fn se_upper_bound(profile: &GapProfile, epsilon: f64, delta: f64, n: usize) -> Result<f64> {
    profile
        .delta
        .iter()
        .map(|&gap| se_arm_bound(gap, epsilon, delta, n))
        .sum()
}

/// `C1(eps) = (1 + sqrt(eps)) sqrt(1 + eps)`.
pub fn regret_c1(epsilon: f64) -> f64 {
    (1.0 + epsilon.sqrt()) * (1.0 + epsilon).sqrt()
}

/// `C2 = C1 / sqrt(2) * (sqrt(ln(n/delta)) + sqrt(ln(ln((1+eps) T))))`.
pub fn regret_c2(n: usize, delta: f64, epsilon: f64, horizon: u64) -> f64 {
    let inner = ((1.0 + epsilon) * horizon as f64).ln().ln().max(0.0);
    regret_c1(epsilon) / 2f64.sqrt() * ((n as f64 / delta).ln().sqrt() + inner.sqrt())
}

/// StableOpt simple-regret bound after `horizon` rounds.
pub fn regret_upper_bound(n: usize, delta: f64, epsilon: f64, horizon: u64) -> Result<f64> {
    check_lil(epsilon, delta)?;
    if n == 0 || horizon < n as u64 {
        return Err(Error::usage(format!(
            "regret bound needs T >= n >= 1, got T = {horizon}, n = {n}"
        )));
    }
    let ratio = n as f64 / horizon as f64;
    Ok(2.0 * ratio + 4.0 * regret_c2(n, delta, epsilon, horizon) * ratio.sqrt())
}

/// KL-to-squared-gap constant presets.
pub mod c_tilde {
    /// Gaussian rewards with standard deviation `sigma`: `1 / (2 sigma^2)`.
    pub fn gaussian(sigma: f64) -> f64 {
        1.0 / (2.0 * sigma * sigma)
    }

    /// Smallest mean admitted by the Bernoulli preset (and `1 - ` the largest).
    pub const BERNOULLI_MARGIN: f64 = 0.01;

    /// Bernoulli rewards with means in `[0.01, 0.99]`.
    ///
    /// `KL(p || q) <= chi^2(p || q) = (p - q)^2 / (q (1 - q))`, and
    /// `q (1 - q) >= 0.01 * 0.99` on that range.
    pub fn bernoulli() -> f64 {
        1.0 / (BERNOULLI_MARGIN * (1.0 - BERNOULLI_MARGIN))
    }
}

/// Parameters of the lower bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundParams {
    c_tilde: f64,
    delta: f64,
    m: usize,
}

/// Lower bounds require `ln(1 / (2.4 delta)) > 0`.
pub const LOWER_BOUND_DELTA_LIMIT: f64 = 1.0 / 2.4;

impl LowerBoundParams {
    pub fn new(c_tilde: f64, delta: f64, m: usize) -> Result<Self> {
        if !(c_tilde > 0.0 && c_tilde.is_finite()) {
            return Err(Error::config(format!("C~ must be positive, got {c_tilde}")));
        }
        if !(delta > 0.0 && delta < LOWER_BOUND_DELTA_LIMIT) {
            return Err(Error::config(format!(
                "delta must lie in (0, 1/2.4), got {delta}"
            )));
        }
        if m == 0 {
            return Err(Error::config("groups-per-arm bound m must be at least 1"));
        }
        Ok(Self { c_tilde, delta, m })
    }

    pub fn c_tilde(&self) -> f64 {
        self.c_tilde
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn log_term(&self) -> f64 {
        (1.0 / (2.4 * self.delta)).ln()
    }
}

/// Expected-pull lower bound for an arm of the optimal group:
/// `ln(1/(2.4 delta)) / (C~ (D'_j + D0)^2)`.
pub fn lower_bound_optimal_arm(
    groups: &GroupStructure,
    profile: &GapProfile,
    params: &LowerBoundParams,
    arm: usize,
) -> Result<f64> {
    if !groups.members(profile.optimal_group).contains(&arm) {
        return Err(Error::usage(format!(
            "arm {} is not in the optimal group {}",
            arm + 1,
            profile.optimal_group + 1
        )));
    }
    let gap = profile.delta_prime[arm] + profile.delta0;
    Ok(params.log_term() / (params.c_tilde * gap * gap))
}

/// Lower bound on the expected total number of pulls.
pub fn lower_bound_total(
    groups: &GroupStructure,
    profile: &GapProfile,
    params: &LowerBoundParams,
) -> Result<f64> {
    let overlap = groups.max_overlap();
    if params.m < overlap {
        return Err(Error::usage(format!(
            "m = {} is below the structure's {} groups per arm",
            params.m, overlap
        )));
    }
    let star = profile.optimal_group;
    let mut total = 0.0;
    for &j in groups.members(star) {
        total += lower_bound_optimal_arm(groups, profile, params, j)?;
    }
    let log_term = params.log_term();
    let suboptimal: f64 = (0..groups.len())
        .filter(|&g| g != star)
        .map(|g| log_term / (params.c_tilde * profile.delta_group[g].powi(2)))
        .sum();
    Ok(total + suboptimal / params.m as f64)
}

/// Weighted-pull constraint for a suboptimal group: for the arms strictly
/// below the optimal worst mean, `sum_j E[N_j] * weight_j >= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupConstraint {
    pub group: usize,
    /// `(arm, C~ (mu* - mu_j)^2)` for members strictly below `mu*`.
    pub weights: Vec<(usize, f64)>,
    pub rhs: f64,
    /// Members whose mean equals `mu*` exactly; they are left out.
    pub excluded_ties: Vec<usize>,
}

pub fn suboptimal_group_constraint(
    instance: &BanditInstance,
    profile: &GapProfile,
    params: &LowerBoundParams,
    group: usize,
) -> Result<GroupConstraint> {
    if group >= instance.num_groups() || group == profile.optimal_group {
        return Err(Error::usage(format!(
            "group {} is not a suboptimal group",
            group + 1
        )));
    }
    let top = instance.mean(profile.worst_arm[profile.optimal_group]);
    let mut weights = Vec::new();
    let mut excluded_ties = Vec::new();
    for &j in instance.groups().members(group) {
        let mu = instance.mean(j);
        if mu < top {
            weights.push((j, params.c_tilde * (top - mu).powi(2)));
        } else if mu == top {
            excluded_ties.push(j);
        }
    }
    Ok(GroupConstraint {
        group,
        weights,
        rhs: params.log_term(),
        excluded_ties,
    })
}

/// One line of [`bound_table`]. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub quantity: &'static str,
    pub arm: Option<usize>,
    pub group: Option<usize>,
    pub value: f64,
    pub note: String,
}

impl BoundRow {
    fn new(quantity: &'static str, arm: Option<usize>, group: Option<usize>, value: f64) -> Self {
        Self {
            quantity,
            arm,
            group,
            value,
            note: String::new(),
        }
    }
}

/// Gap quantities and every bound for one instance. The regret bound is
/// included when `horizon` is given.
pub fn bound_table(
    instance: &BanditInstance,
    epsilon: f64,
    delta: f64,
    params: &LowerBoundParams,
    horizon: Option<u64>,
) -> Result<Vec<BoundRow>> {
    let profile = instance.gap_profile()?;
    let groups = instance.groups();
    let n = instance.n();
    let mut rows = Vec::new();
    rows.push(BoundRow::new(
        "optimal_group",
        None,
        Some(profile.optimal_group),
        profile.optimal_group as f64 + 1.0,
    ));
    rows.push(BoundRow::new("delta0", None, None, profile.delta0));
    for g in 0..groups.len() {
        rows.push(BoundRow::new(
            "delta_group",
            None,
            Some(g),
            profile.delta_group[g],
        ));
    }
    for j in 0..n {
        rows.push(BoundRow::new(
            "delta_prime",
            Some(j),
            None,
            profile.delta_prime[j],
        ));
        rows.push(BoundRow::new(
            "delta_dprime",
            Some(j),
            None,
            profile.delta_dprime[j],
        ));
        rows.push(BoundRow::new("delta", Some(j), None, profile.delta[j]));
    }
    for j in 0..n {
        rows.push(BoundRow::new(
            "se_arm_bound",
            Some(j),
            None,
            se_arm_bound(profile.delta[j], epsilon, delta, n)?,
        ));
    }
    rows.push(BoundRow::new(
        "se_upper_bound",
        None,
        None,
        se_upper_bound(&profile, epsilon, delta, n)?,
    ));
    rows.push(BoundRow::new(
        "lil_failure_probability",
        None,
        None,
        crate::confidence::lil_failure_probability(epsilon, delta),
    ));
    for &j in groups.members(profile.optimal_group) {
        rows.push(BoundRow::new(
            "lower_bound_arm",
            Some(j),
            Some(profile.optimal_group),
            lower_bound_optimal_arm(groups, &profile, params, j)?,
        ));
    }
    for g in (0..groups.len()).filter(|&g| g != profile.optimal_group) {
        let c = suboptimal_group_constraint(instance, &profile, params, g)?;
        for &j in &c.excluded_ties {
            let mut row = BoundRow::new("excluded_tie", Some(j), Some(g), instance.mean(j));
            row.note =
                "mean equals the optimal worst-arm mean; left out of the group constraint".into();
            rows.push(row);
        }
    }
    let mut total = BoundRow::new(
        "lower_bound_total",
        None,
        None,
        lower_bound_total(groups, &profile, params)?,
    );
    total.note = format!("C~ = {}, m = {}", params.c_tilde, params.m);
    rows.push(total);
    if let Some(t) = horizon {
        rows.push(BoundRow::new(
            "regret_upper_bound",
            None,
            None,
            regret_upper_bound(n, delta, epsilon, t)?,
        ));
    }
    Ok(rows)
}
