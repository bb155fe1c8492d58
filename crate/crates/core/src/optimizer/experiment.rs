//! Restart and trajectory protocol producing best feasible probability per level.
//!
//! Attempt `a` at level `r` draws its start from a ChaCha stream seeded by
//! `(seed, r, a)`. Attempts are evaluated in parallel batches but accepted in
//! index order, so results do not depend on the worker count.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, MinimizeResult, OptimizerConfig};
use crate::error::{bail_arg, Result};
use crate::simulator::{feasible_probability, qaoa_state, DiagonalHamiltonian, QaoaParams};

/// Appends a copy of the last angle of each list.
pub fn extend_trajectory(p: &QaoaParams) -> Result<QaoaParams> {
    let r = p.levels();
    if r == 0 {
        bail_arg!("cannot extend a zero-level parameter vector");
    }
    let mut mix = p.theta_mix.clone();
    let mut obj = p.theta_obj.clone();
    mix.push(mix[r - 1]);
    obj.push(obj[r - 1]);
    QaoaParams::new(mix, obj, p.period)
}

/// Uniform start on `[0, π)^r × [0, R)^r`.
pub fn random_start(r: usize, period: f64, rng: &mut impl Rng) -> QaoaParams {
    let mix = (0..r).map(|_| rng.gen_range(0.0..PI)).collect();
    let obj = (0..r).map(|_| rng.gen_range(0.0..period)).collect();
    QaoaParams::new(mix, obj, period).expect("valid start")
}

fn attempt_rng(seed: u64, r: usize, attempt: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((r as u64) << 32) | attempt as u64);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub params: QaoaParams,
    pub energy: f64,
    pub feasible_probability: f64,
    pub converged: bool,
}

impl RunRecord {
    fn from_result(h: &DiagonalHamiltonian, res: MinimizeResult) -> Self {
        let prob = feasible_probability(&qaoa_state(h, &res.params), h);
        Self {
            params: res.params,
            energy: res.energy,
            feasible_probability: prob,
            converged: res.converged,
        }
    }
}

/// Levels `trajectory_from..=r_max` reached from one starting point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub start_level: usize,
    pub levels: Vec<RunRecord>,
}

/// Best values over accepted runs at one level; `None` when nothing converged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub r: usize,
    pub best_feasible_prob: Option<f64>,
    pub best_energy: Option<f64>,
    pub n_accepted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub levels: Vec<LevelSummary>,
}

fn summarize(r: usize, runs: &[RunRecord]) -> LevelSummary {
    let accepted: Vec<&RunRecord> = runs.iter().filter(|x| x.converged).collect();
    LevelSummary {
        r,
        best_feasible_prob: accepted
            .iter()
            .map(|x| x.feasible_probability)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))),
        best_energy: accepted
            .iter()
            .map(|x| x.energy)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v)))),
        n_accepted: accepted.len(),
    }
}

/// Up to `cfg.restarts` converged runs from random starts at level `r`,
/// drawing at most `retry_factor × restarts` starts.
pub fn restarts_at_level(h: &DiagonalHamiltonian, r: usize, cfg: &OptimizerConfig, period: f64) -> Vec<RunRecord> {
    let budget = cfg.restarts * cfg.retry_factor;
    let mut accepted = Vec::with_capacity(cfg.restarts);
    let mut next = 0;
    while accepted.len() < cfg.restarts && next < budget {
        let batch = (cfg.restarts - accepted.len()).min(budget - next);
        let runs: Vec<RunRecord> = (next..next + batch)
            .into_par_iter()
            .map(|a| {
                let init = random_start(r, period, &mut attempt_rng(cfg.seed, r, a));
                RunRecord::from_result(h, minimize(h, &init, cfg))
            })
            .collect();
        next += batch;
        accepted.extend(runs.into_iter().filter(|x| x.converged));
    }
    accepted.truncate(cfg.restarts);
    accepted
}

/// Extends and re-optimizes `start` up to `r_max`, stopping at the first level
/// that fails to converge (that level is kept, marked unconverged).
pub fn run_trajectory(h: &DiagonalHamiltonian, start: &RunRecord, r_max: usize, cfg: &OptimizerConfig) -> TrajectoryResult {
    let start_level = start.params.levels();
    let mut levels = vec![start.clone()];
    let mut current = start.clone();
    while current.converged && current.params.levels() < r_max {
        let init = extend_trajectory(&current.params).expect("nonzero level");
        current = RunRecord::from_result(h, minimize(h, &init, cfg));
        levels.push(current.clone());
    }
    TrajectoryResult { start_level, levels }
}

/// Full protocol for levels `1..=r_max`.
pub fn run_experiment(h: &DiagonalHamiltonian, r_max: usize, cfg: &OptimizerConfig, period: f64) -> Result<ExperimentResult> {
    if r_max == 0 {
        bail_arg!("r_max must be at least 1");
    }
    cfg.validate()?;
    let switch = cfg.trajectory_from.max(1);
    let mut levels = Vec::with_capacity(r_max);
    for r in 1..=r_max.min(switch - 1) {
        levels.push(summarize(r, &restarts_at_level(h, r, cfg, period)));
    }
    if r_max >= switch {
        let starts = restarts_at_level(h, switch, cfg, period);
        let trajectories: Vec<TrajectoryResult> = starts
            .par_iter()
            .map(|s| run_trajectory(h, s, r_max, cfg))
            .collect();
        for r in switch..=r_max {
            let runs: Vec<RunRecord> = trajectories
                .iter()
                .filter_map(|t| t.levels.get(r - t.start_level).cloned())
                .collect();
            levels.push(summarize(r, &runs));
        }
    }
    Ok(ExperimentResult { levels })
}

/// Mean and range of per-instance best probabilities at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateLevel {
    pub r: usize,
    pub mean_best_prob: Option<f64>,
    pub min_best_prob: Option<f64>,
    pub max_best_prob: Option<f64>,
    pub n_instances: usize,
}

/// Combines experiments over several instances; instances missing a level are skipped.
pub fn aggregate(results: &[ExperimentResult], r_max: usize) -> Vec<AggregateLevel> {
    (1..=r_max)
        .map(|r| {
            let vals: Vec<f64> = results
                .iter()
                .filter_map(|e| e.levels.iter().find(|l| l.r == r))
                .filter_map(|l| l.best_feasible_prob)
                .collect();
            let n = vals.len();
            AggregateLevel {
                r,
                mean_best_prob: (n > 0).then(|| vals.iter().sum::<f64>() / n as f64),
                min_best_prob: vals.iter().copied().reduce(f64::min),
                max_best_prob: vals.iter().copied().reduce(f64::max),
                n_instances: n,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{encode_hobo, TspInstance};
    use crate::simulator::build_diagonal;

    fn hobo_zero() -> DiagonalHamiltonian {
        build_diagonal(&encode_hobo(&TspInstance::zero(3).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn extend_copies_last_entry() {
        let p = QaoaParams::new(vec![0.2], vec![1.5], 2.0 * PI).unwrap();
        let e = extend_trajectory(&p).unwrap();
        assert_eq!(e.theta_mix, vec![0.2, 0.2]);
        assert_eq!(e.theta_obj, vec![1.5, 1.5]);
        assert!(extend_trajectory(&QaoaParams::zeros(0, PI)).is_err());
        let back = QaoaParams::new(e.theta_mix[..1].to_vec(), e.theta_obj[..1].to_vec(), e.period).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn deterministic_under_seed() {
        let h = hobo_zero();
        let cfg = OptimizerConfig {
            restarts: 3,
            seed: 11,
            ..Default::default()
        };
        let a = run_experiment(&h, 2, &cfg, 2.0 * PI).unwrap();
        let b = run_experiment(&h, 2, &cfg, 2.0 * PI).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.levels.len(), 2);
    }

    #[test]
    fn more_restarts_never_hurt() {
        let h = hobo_zero();
        let few = OptimizerConfig { restarts: 2, seed: 5, ..Default::default() };
        let many = OptimizerConfig { restarts: 6, ..few.clone() };
        let a = summarize(1, &restarts_at_level(&h, 1, &few, 2.0 * PI));
        let b = summarize(1, &restarts_at_level(&h, 1, &many, 2.0 * PI));
        assert!(b.best_feasible_prob.unwrap() >= a.best_feasible_prob.unwrap());
    }

    #[test]
    fn trajectory_levels_have_matching_lengths() {
        let h = hobo_zero();
        let cfg = OptimizerConfig { restarts: 2, trajectory_from: 2, seed: 1, ..Default::default() };
        let res = run_experiment(&h, 4, &cfg, 2.0 * PI).unwrap();
        assert_eq!(res.levels.iter().map(|l| l.r).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        let start = restarts_at_level(&h, 2, &cfg, 2.0 * PI);
        let t = run_trajectory(&h, &start[0], 4, &cfg);
        for (i, rec) in t.levels.iter().enumerate() {
            assert_eq!(rec.params.levels(), 2 + i);
        }
    }

    #[test]
    fn aggregate_mean_and_band() {
        let mk = |p: Option<f64>| ExperimentResult {
            levels: vec![LevelSummary { r: 1, best_feasible_prob: p, best_energy: None, n_accepted: 1 }],
        };
        let agg = aggregate(&[mk(Some(0.2)), mk(Some(0.6)), mk(None)], 1);
        assert_eq!(agg[0].n_instances, 2);
        assert!((agg[0].mean_best_prob.unwrap() - 0.4).abs() < 1e-12);
        assert_eq!((agg[0].min_best_prob, agg[0].max_best_prob), (Some(0.2), Some(0.6)));
    }
}
