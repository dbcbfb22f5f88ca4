use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{Algorithm, ExperimentConfig, InstanceSource};
use crate::error::{Error, Result};
use crate::generator::{generate_indexed, GeneratorSpec};
use crate::instance::{BanditInstance, GapProfile};
use crate::naive::run_naive;
use crate::reward::RngStream;
use crate::se::{run_se, EpochSnapshot, SeOptions};
use crate::stableopt::{run_stableopt, StableOptOptions};
use crate::RegretSample;

/// An instance ready for simulation.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub id: u32,
    /// Gap label: the generator's target gap, or the realised `delta0` of a
    /// file instance (0 when it is not identifiable).
    pub gap: f64,
    pub instance: BanditInstance,
    pub profile: Option<GapProfile>,
}

/// Loads or generates every instance of the grid and checks each against
/// the configured budgets. Nothing is simulated.
pub fn prepare_instances(config: &ExperimentConfig) -> Result<Vec<PreparedInstance>> {
    config.validate()?;
    let mut prepared = Vec::new();
    match &config.instances {
        InstanceSource::Files { paths } => {
            for (id, path) in paths.iter().enumerate() {
                let instance = BanditInstance::load(path)?;
                let profile = instance.gap_profile().ok();
                prepared.push(PreparedInstance {
                    id: id as u32,
                    gap: profile.as_ref().map_or(0.0, |p| p.delta0),
                    instance,
                    profile,
                });
            }
        }
        InstanceSource::Generated {
            n,
            groups,
            gaps,
            count,
            reward_model,
        } => {
            for (k, &gap) in gaps.iter().enumerate() {
                let spec = GeneratorSpec {
                    n: *n,
                    num_groups: *groups,
                    gap,
                    reward_model: *reward_model,
                };
                for i in 0..*count {
                    let id = k as u32 * count + i;
                    let instance = generate_indexed(&spec, config.seed, id)?;
                    let profile = instance.gap_profile().ok();
                    prepared.push(PreparedInstance {
                        id,
                        gap,
                        instance,
                        profile,
                    });
                }
            }
        }
    }
    for p in &prepared {
        check_budget(config, p)?;
        config.policy.build(p.instance.n())?;
    }
    Ok(prepared)
}

fn check_budget(config: &ExperimentConfig, p: &PreparedInstance) -> Result<()> {
    let budget = config.pull_budget();
    let n = p.instance.n() as u64;
    let members: u64 = p
        .instance
        .groups()
        .groups()
        .iter()
        .map(|m| m.len() as u64)
        .sum();
    for &a in &config.algorithms {
        let need = match a {
            Algorithm::Se => n,
            Algorithm::Naive => members,
            Algorithm::Stableopt => 1,
        };
        if budget < need {
            return Err(Error::usage(format!(
                "instance {}: budget {budget} is below the {need} pulls {a} needs to start",
                p.id
            )));
        }
    }
    Ok(())
}

/// One simulated trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub instance: u32,
    pub gap: f64,
    pub trial: u32,
    pub returned: usize,
    /// Returned group has zero simple regret.
    pub success: bool,
    pub simple_regret: f64,
    pub total_pulls: u64,
    pub pulls: Vec<u64>,
    /// Ended by the algorithm's own rule (or at the fixed horizon) rather
    /// than by the budget.
    pub terminated: bool,
    pub bounds_valid: bool,
    /// SE epochs, StableOpt rounds, or naive pulls.
    pub steps: u64,
    pub wall_clock: Duration,
    pub trajectory: Vec<RegretSample>,
    pub trace: Vec<EpochSnapshot>,
}

pub fn run_trial(
    config: &ExperimentConfig,
    prepared: &PreparedInstance,
    algorithm: Algorithm,
    trial: u32,
) -> Result<TrialRecord> {
    let instance = &prepared.instance;
    let policy = config.policy.build(instance.n())?;
    let mut stream = RngStream::new(config.seed, prepared.id, trial);
    let stride = config.trajectories.then_some(config.stride);
    let started = Instant::now();

    let (returned, pulls, terminated, bounds_valid, steps, trajectory, trace) = match algorithm {
        Algorithm::Se => {
            let options = SeOptions {
                max_pulls: config.pull_budget(),
                trace: config.trace,
                regret_stride: stride,
            };
            let r = run_se(instance, policy, &mut stream, options)?;
            (
                r.recommended,
                r.pulls,
                r.terminated,
                r.bounds_valid,
                r.epochs,
                r.regret,
                r.trace,
            )
        }
        Algorithm::Stableopt => {
            let options = StableOptOptions {
                recommend: config.recommend,
                regret_stride: stride,
                ..StableOptOptions::new(config.stop_rule())
            };
            let r = run_stableopt(instance, policy, &mut stream, options)?;
            let terminated = config.horizon.is_some() || r.stopped;
            (
                r.recommended,
                r.pulls,
                terminated,
                r.bounds_valid,
                r.rounds,
                r.regret,
                Vec::new(),
            )
        }
        Algorithm::Naive => {
            let r = run_naive(
                instance,
                policy,
                &mut stream,
                config.eta,
                config.pull_budget(),
            )?;
            let steps = r.total_pulls;
            (
                r.returned,
                r.pulls,
                r.terminated,
                r.bounds_valid,
                steps,
                Vec::new(),
                Vec::new(),
            )
        }
    };
    let wall_clock = started.elapsed();
    let simple_regret = instance.simple_regret(returned)?;

    Ok(TrialRecord {
        algorithm,
        instance: prepared.id,
        gap: prepared.gap,
        trial,
        returned,
        success: simple_regret == 0.0,
        simple_regret,
        total_pulls: pulls.iter().sum(),
        pulls,
        terminated,
        bounds_valid,
        steps,
        wall_clock,
        trajectory,
        trace,
    })
}

/// Runs every (algorithm, instance, trial) cell. Records are ordered by
/// algorithm (config order), instance and trial in both execution modes.
pub fn run_cells(
    config: &ExperimentConfig,
    instances: &[PreparedInstance],
) -> Result<Vec<TrialRecord>> {
    let cells: Vec<(Algorithm, usize, u32)> = config
        .algorithms
        .iter()
        .flat_map(|&a| {
            (0..instances.len()).flat_map(move |i| (0..config.trials).map(move |t| (a, i, t)))
        })
        .collect();
    let run = |&(a, i, t): &(Algorithm, usize, u32)| run_trial(config, &instances[i], a, t);
    if config.serial {
        cells.iter().map(run).collect()
    } else {
        cells.par_iter().map(run).collect()
    }
}

/// Prepares the instances and runs the whole grid.
pub fn run_grid(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let instances = prepare_instances(config)?;
    run_cells(config, &instances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::PolicyConfig;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(InstanceSource::Generated {
            n: 12,
            groups: 3,
            gaps: vec![0.3],
            count: 2,
            reward_model: Default::default(),
        });
        c.algorithms = Algorithm::ALL.to_vec();
        c.trials = 2;
        c.eta = 0.05;
        c.policy = PolicyConfig::Practical { c: 1.0 };
        c
    }

    #[test]
    fn grid_has_one_row_per_cell() {
        let records = run_grid(&small()).unwrap();
        assert_eq!(records.len(), 3 * 2 * 2);
        for r in &records {
            assert_eq!(r.total_pulls, r.pulls.iter().sum::<u64>());
            assert_eq!(r.success, r.simple_regret == 0.0);
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let mut c = small();
        let a = run_grid(&c).unwrap();
        c.serial = true;
        let b = run_grid(&c).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                (x.algorithm, x.instance, x.trial),
                (y.algorithm, y.instance, y.trial)
            );
            assert_eq!(x.pulls, y.pulls);
            assert_eq!(x.returned, y.returned);
        }
    }

    #[test]
    fn small_budget_fails_before_simulation() {
        let mut c = small();
        c.budget = 5;
        assert!(matches!(prepare_instances(&c), Err(Error::Usage(_))));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let mut c = small();
        c.budget = 40;
        c.algorithms = vec![Algorithm::Se, Algorithm::Naive];
        let records = run_grid(&c).unwrap();
        assert!(records.iter().all(|r| !r.terminated && r.total_pulls <= 40));
    }

    #[test]
    fn missing_instance_file_is_io_error() {
        let c = ExperimentConfig::new(InstanceSource::Files {
            paths: vec!["/nonexistent/instance.json".into()],
        });
        assert!(matches!(prepare_instances(&c), Err(Error::Io { .. })));
    }
}
