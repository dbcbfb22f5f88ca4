//! Anytime confidence radii and the UCB/LCB accessors built on them.
//!
//! Two radii are supported:
//!
//! * the law-of-the-iterated-logarithm radius
//!   `U(t, d) = (1 + sqrt(eps)) * sqrt((1 + eps) / (2t) * ln(ln((1 + eps) t) / d))`
//!   evaluated at `d = delta / n` so that a union bound covers all arms;
//! * the practical width `c / sqrt(t)`.
//!
//! Both return 1 at `t = 0`, and an unpulled arm has `UCB = 1`, `LCB = 0`
//! because means are known to lie in `[0, 1]`.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// Parameterisation of the confidence radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidencePolicy {
    kind: Kind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Lil {
        epsilon: f64,
        delta: f64,
        n: usize,
        per_arm_delta: f64,
        lead: f64,
    },
    Practical {
        c: f64,
    },
}

/// Which radius a policy uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Lil,
    Practical,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Lil => "lil",
            PolicyKind::Practical => "practical",
        }
    }
}

/// Largest admissible `delta` for a given `epsilon`: `ln(1 + eps) / e`.
pub fn lil_delta_limit(epsilon: f64) -> f64 {
    (1.0 + epsilon).ln() / E
}

/// Probability that the LIL bound fails for a single arm at confidence
/// `delta`: `(2 + eps) / (eps / 2) * (delta / ln(1 + eps))^(1 + eps)`.
pub fn lil_failure_probability(epsilon: f64, delta: f64) -> f64 {
    (2.0 + epsilon) / (epsilon / 2.0) * (delta / (1.0 + epsilon).ln()).powf(1.0 + epsilon)
}

/// `8 (1 + sqrt(eps))^2 (1 + eps)`.
pub fn gamma(epsilon: f64) -> f64 {
    8.0 * (1.0 + epsilon.sqrt()).powi(2) * (1.0 + epsilon)
}

impl ConfidencePolicy {
    /// LIL radius with global confidence `delta` split evenly over `n` arms.
    pub fn lil(epsilon: f64, delta: f64, n: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::config(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let limit = lil_delta_limit(epsilon);
        if !(delta > 0.0 && delta < limit) {
            return Err(Error::config(format!(
                "delta must lie in (0, ln(1+eps)/e) = (0, {limit:.6}), got {delta}"
            )));
        }
        if n == 0 {
            return Err(Error::config("arm count must be positive"));
        }
        Ok(Self {
            kind: Kind::Lil {
                epsilon,
                delta,
                n,
                per_arm_delta: delta / n as f64,
                lead: 1.0 + epsilon.sqrt(),
            },
        })
    }

    /// Width `c / sqrt(t)`.
    pub fn practical(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::config(format!("c must be positive, got {c}")));
        }
        Ok(Self {
            kind: Kind::Practical { c },
        })
    }

    pub fn kind(&self) -> PolicyKind {
        match self.kind {
            Kind::Lil { .. } => PolicyKind::Lil,
            Kind::Practical { .. } => PolicyKind::Practical,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self.kind {
            Kind::Lil { epsilon, .. } => Some(epsilon),
            Kind::Practical { .. } => None,
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match self.kind {
            Kind::Lil { delta, .. } => Some(delta),
            Kind::Practical { .. } => None,
        }
    }

    pub fn arms(&self) -> Option<usize> {
        match self.kind {
            Kind::Lil { n, .. } => Some(n),
            Kind::Practical { .. } => None,
        }
    }

    pub fn c(&self) -> Option<f64> {
        match self.kind {
            Kind::Practical { c } => Some(c),
            Kind::Lil { .. } => None,
        }
    }

    /// Confidence radius after `t` pulls.
    #[inline]
    pub fn radius(&self, t: u64) -> f64 {
        if t == 0 {
            return 1.0;
        }
        let t = t as f64;
        match self.kind {
            Kind::Practical { c } => c / t.sqrt(),
            Kind::Lil {
                epsilon,
                per_arm_delta,
                lead,
                ..
            } => {
                // The inner argument exceeds e whenever delta is in range;
                // the clamp keeps the double log finite regardless.
                let inner = (((1.0 + epsilon) * t).ln() / per_arm_delta).max(E);
                lead * ((1.0 + epsilon) / (2.0 * t) * inner.ln()).sqrt()
            }
        }
    }

    /// Upper bound on `min { k : U(k, delta/n) <= gap / 4 }`:
    /// `ceil(2 gamma / gap^2 * ln(2 ln(gamma (1 + eps) / gap^2) / (delta / n)))`.
    pub fn inversion_bound(&self, gap: f64) -> Result<u64> {
        let Kind::Lil {
            epsilon,
            per_arm_delta,
            ..
        } = self.kind
        else {
            return Err(Error::usage("inversion bound requires the LIL policy"));
        };
        if !(gap > 0.0 && gap < 1.0) {
            return Err(Error::usage(format!("gap must lie in (0, 1), got {gap}")));
        }
        Ok(inversion_bound_continuous(epsilon, per_arm_delta, gap).ceil() as u64)
    }

    /// Failure probability of the LIL bound for this policy's global delta.
    pub fn failure_probability(&self) -> Option<f64> {
        match self.kind {
            Kind::Lil { epsilon, delta, .. } => Some(lil_failure_probability(epsilon, delta)),
            Kind::Practical { .. } => None,
        }
    }

    pub fn ucb(&self, stats: &ArmStats, arm: usize) -> f64 {
        match stats.mean_or_none(arm) {
            None => 1.0,
            Some(mean) => mean + self.radius(stats.count(arm)),
        }
    }

    pub fn lcb(&self, stats: &ArmStats, arm: usize) -> f64 {
        match stats.mean_or_none(arm) {
            None => 0.0,
            Some(mean) => mean - self.radius(stats.count(arm)),
        }
    }
}

/// `2 gamma / gap^2 * ln(2 ln(gamma (1 + eps) / gap^2) / per_arm_delta)`.
pub(crate) fn inversion_bound_continuous(epsilon: f64, per_arm_delta: f64, gap: f64) -> f64 {
    let g = gamma(epsilon);
    let inv_sq = 1.0 / (gap * gap);
    2.0 * g * inv_sq * (2.0 * (g * (1.0 + epsilon) * inv_sq).ln() / per_arm_delta).ln()
}

/// Pull counts and running reward sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmStats {
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl ArmStats {
    pub fn new(n: usize) -> Self {
        Self {
            counts: vec![0; n],
            sums: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    #[inline]
    pub fn record(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
    }

    #[inline]
    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Empirical mean of `arm`; unpulled arms are a domain error.
    pub fn empirical_mean(&self, arm: usize) -> Result<f64> {
        self.mean_or_none(arm).ok_or_else(|| {
            Error::domain(format!(
                "arm {} has not been pulled; use UCB = 1 / LCB = 0 instead",
                arm + 1
            ))
        })
    }

    #[inline]
    fn mean_or_none(&self, arm: usize) -> Option<f64> {
        match self.counts[arm] {
            0 => None,
            t => Some(self.sums[arm] / t as f64),
        }
    }
}

/// Arm statistics with cached confidence bounds.
///
/// Both radii depend only on an arm's own pull count, so bounds change only
/// for the arm that was just pulled. The tracker also monitors whether any
/// true mean has ever left its interval.
#[derive(Debug, Clone)]
pub struct ConfidenceTracker {
    policy: ConfidencePolicy,
    stats: ArmStats,
    ucb: Vec<f64>,
    lcb: Vec<f64>,
    bounds_valid: bool,
}

impl ConfidenceTracker {
    pub fn new(policy: ConfidencePolicy, n: usize) -> Self {
        Self {
            policy,
            stats: ArmStats::new(n),
            ucb: vec![1.0; n],
            lcb: vec![0.0; n],
            bounds_valid: true,
        }
    }

    pub fn policy(&self) -> &ConfidencePolicy {
        &self.policy
    }

    pub fn stats(&self) -> &ArmStats {
        &self.stats
    }

    /// Records a reward and refreshes the arm's bounds; `true_mean` feeds the
    /// validity monitor.
    #[inline]
    pub fn record(&mut self, arm: usize, reward: f64, true_mean: f64) {
        self.stats.record(arm, reward);
        let t = self.stats.count(arm);
        let mean = self.stats.sums[arm] / t as f64;
        let r = self.policy.radius(t);
        let (lo, hi) = (mean - r, mean + r);
        self.lcb[arm] = lo;
        self.ucb[arm] = hi;
        if true_mean < lo || true_mean > hi {
            self.bounds_valid = false;
        }
    }

    #[inline]
    pub fn ucb(&self, arm: usize) -> f64 {
        self.ucb[arm]
    }

    #[inline]
    pub fn lcb(&self, arm: usize) -> f64 {
        self.lcb[arm]
    }

    #[inline]
    pub fn count(&self, arm: usize) -> u64 {
        self.stats.count(arm)
    }

    /// Current radius of `arm` (1 when unpulled).
    #[inline]
    pub fn radius(&self, arm: usize) -> f64 {
        self.policy.radius(self.stats.count(arm))
    }

    /// Whether every true mean has stayed inside its interval so far.
    pub fn bounds_valid(&self) -> bool {
        self.bounds_valid
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{BanditInstance, GroupStructure};
    use crate::reward::{RewardModel, RngStream};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn lil(epsilon: f64, delta: f64, n: usize) -> ConfidencePolicy {
        ConfidencePolicy::lil(epsilon, delta, n).unwrap()
    }

    #[test]
    fn zero_pulls_radius_is_one() {
        assert_eq!(lil(0.5, 0.05, 10).radius(0), 1.0);
        assert_eq!(ConfidencePolicy::practical(3.0).unwrap().radius(0), 1.0);
    }

    #[test]
    fn practical_radius() {
        let p = ConfidencePolicy::practical(1.0).unwrap();
        assert_eq!(p.radius(4), 0.5);
    }

    #[test]
    fn lil_radius_matches_high_precision_value() {
        // delta' = delta / n = 0.1; reference from a 40-digit evaluation.
        let p = lil(0.5, 0.1, 1);
        assert_relative_eq!(p.radius(1), 1.749_179_345_744_032_5, max_relative = 1e-14);
    }

    #[test]
    fn gamma_at_half() {
        assert_relative_eq!(gamma(0.5), 34.970_562_748_477_14, max_relative = 1e-14);
    }

    #[test]
    fn policy_domain_is_checked_at_construction() {
        assert!(ConfidencePolicy::lil(0.0, 0.01, 1).is_err());
        assert!(ConfidencePolicy::lil(1.0, 0.01, 1).is_err());
        // ln(1.5) / e ~ 0.1492
        assert!(ConfidencePolicy::lil(0.5, 0.15, 1).is_err());
        assert!(ConfidencePolicy::lil(0.5, 0.149, 1).is_ok());
        assert!(ConfidencePolicy::lil(0.5, 0.05, 0).is_err());
        assert!(ConfidencePolicy::practical(0.0).is_err());
        assert!(ConfidencePolicy::practical(f64::NAN).is_err());
    }

    #[test]
    fn inversion_bound_errors() {
        let p = lil(0.5, 0.05, 100);
        assert!(p.inversion_bound(0.0).is_err());
        assert!(p.inversion_bound(1.0).is_err());
        assert!(ConfidencePolicy::practical(1.0)
            .unwrap()
            .inversion_bound(0.5)
            .is_err());
    }

    #[test]
    fn inversion_bound_grows_at_least_fourfold_when_gap_halves() {
        let p = lil(0.5, 0.05, 100);
        for gap in [0.8, 0.4, 0.2, 0.1, 0.05] {
            let wide = p.inversion_bound(gap).unwrap() as f64;
            let narrow = p.inversion_bound(gap / 2.0).unwrap() as f64;
            assert!(narrow >= 4.0 * wide - 4.0, "gap {gap}: {wide} -> {narrow}");
        }
    }

    #[test]
    fn inversion_bound_dominates_scan() {
        let p = lil(0.5, 0.05, 100);
        for gap in [0.1, 0.2, 0.4] {
            let k = (1..).find(|&k| p.radius(k) <= gap / 4.0).unwrap();
            assert!(k <= p.inversion_bound(gap).unwrap());
        }
    }

    #[test]
    fn ucb_lcb_conventions() {
        let p = ConfidencePolicy::practical(1.0).unwrap();
        let mut stats = ArmStats::new(2);
        assert_eq!(p.ucb(&stats, 0), 1.0);
        assert_eq!(p.lcb(&stats, 0), 0.0);
        for k in 0..25 {
            stats.record(1, if k < 15 { 1.0 } else { 0.0 });
        }
        assert_relative_eq!(p.ucb(&stats, 1), 0.8, epsilon = 1e-12);
        assert_relative_eq!(p.lcb(&stats, 1), 0.4, epsilon = 1e-12);
        assert_relative_eq!(
            p.ucb(&stats, 1) - p.lcb(&stats, 1),
            2.0 * p.radius(25),
            epsilon = 1e-12
        );
    }

    #[test]
    fn empirical_mean_examples() {
        let mut stats = ArmStats::new(2);
        assert!(matches!(stats.empirical_mean(0), Err(Error::Domain(_))));
        for r in [1.0, 0.0, 1.0, 1.0] {
            stats.record(0, r);
        }
        assert_eq!(stats.empirical_mean(0).unwrap(), 0.75);
        stats.record(1, 0.42);
        assert_eq!(stats.empirical_mean(1).unwrap(), 0.42);
    }

    #[test]
    fn running_sum_is_accurate_over_a_million_pulls() {
        let mut stats = ArmStats::new(1);
        for _ in 0..1_000_000 {
            stats.record(0, 0.3);
        }
        assert!((stats.empirical_mean(0).unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn tracker_agrees_with_policy_accessors() {
        let p = lil(0.3, 0.05, 3);
        let mut tr = ConfidenceTracker::new(p, 3);
        for (arm, r) in [(0, 1.0), (0, 0.0), (2, 1.0)] {
            tr.record(arm, r, 0.5);
        }
        for arm in 0..3 {
            assert_eq!(tr.ucb(arm), p.ucb(tr.stats(), arm));
            assert_eq!(tr.lcb(arm), p.lcb(tr.stats(), arm));
        }
    }

    #[test]
    fn lil_coverage_respects_failure_probability() {
        let (epsilon, delta) = (0.5, 0.05);
        let p = lil(epsilon, delta, 1);
        let groups = GroupStructure::new(1, vec![vec![0]]).unwrap();
        let inst = BanditInstance::new(vec![0.5], groups, RewardModel::Bernoulli).unwrap();
        let arms = 1000;
        let mut violated = 0;
        for a in 0..arms {
            let mut s = RngStream::new(99, a, 0);
            let mut tr = ConfidenceTracker::new(p, 1);
            for _ in 0..10_000 {
                let r = inst.sample(0, &mut s);
                tr.record(0, r, 0.5);
            }
            if !tr.bounds_valid() {
                violated += 1;
            }
        }
        let frac = f64::from(violated) / f64::from(arms);
        assert!(frac <= lil_failure_probability(epsilon, delta), "{frac}");
    }

    proptest! {
        #[test]
        fn lil_radius_non_increasing_after_first_pull(
            epsilon in 0.01f64..0.99,
            frac in 0.001f64..0.999,
            n in 1usize..200,
            t in 2u64..100_000,
        ) {
            let delta = frac * lil_delta_limit(epsilon);
            let p = lil(epsilon, delta, n);
            prop_assert!(p.radius(t + 1) <= p.radius(t));
        }

        #[test]
        fn practical_radius_strictly_decreasing(c in 0.01f64..10.0, t in 1u64..1_000_000) {
            let p = ConfidencePolicy::practical(c).unwrap();
            prop_assert!(p.radius(t + 1) < p.radius(t));
        }
    }
}
