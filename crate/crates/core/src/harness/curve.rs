use std::collections::BTreeMap;

use super::config::Algorithm;
use super::run::TrialRecord;

/// Mean regret of the current recommendation at one sampled round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub round: u64,
    pub mean: f64,
    /// Half the sample standard deviation across trials.
    pub half_std: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub algorithm: Algorithm,
    pub gap: f64,
    pub points: Vec<CurvePoint>,
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Per-(algorithm, gap) regret curves over the union of sampled rounds.
///
/// A trial that ended before a round contributes its final recommendation's
/// regret there. Records without a trajectory are skipped.
pub fn regret_curves(records: &[TrialRecord]) -> Vec<RegretCurve> {
    let mut cells: BTreeMap<(Algorithm, u64), (f64, Vec<&TrialRecord>)> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.trajectory.is_empty()) {
        cells
            .entry((r.algorithm, r.gap.to_bits()))
            .or_insert_with(|| (r.gap, Vec::new()))
            .1
            .push(r);
    }

    let mut curves = Vec::new();
    for ((algorithm, _), (gap, trials)) in cells {
        let mut rounds: Vec<u64> = trials
            .iter()
            .flat_map(|r| r.trajectory.iter().map(|s| s.round))
            .collect();
        rounds.sort_unstable();
        rounds.dedup();

        let mut cursors = vec![0usize; trials.len()];
        let mut points = Vec::with_capacity(rounds.len());
        let mut values = vec![0.0; trials.len()];
        for &round in &rounds {
            for (k, r) in trials.iter().enumerate() {
                let traj = &r.trajectory;
                while cursors[k] + 1 < traj.len() && traj[cursors[k] + 1].round <= round {
                    cursors[k] += 1;
                }
                values[k] = traj[cursors[k]].regret;
            }
            let (mean, std) = mean_std(&values);
            points.push(CurvePoint {
                round,
                mean,
                half_std: std / 2.0,
                trials: trials.len(),
            });
        }
        curves.push(RegretCurve {
            algorithm,
            gap,
            points,
        });
    }
    curves
}
