//! Seeded experiment runner with per-trial RNG streams.

mod allocation;
mod emit;
mod fit;
pub mod validate;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use allocation::{bruteforce_allocation, MAX_SEARCH_TERMS};
pub use emit::{emit, parse_csv, plotdata, to_csv, OutputFormat, CSV_HEADER};
pub use fit::{fit_loglog_slope, SlopeFit};

use crate::error::{Error, Result};
use crate::strategies::{infer, InferOptions, Instance, PreparedInstance, StrategyId};

#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub instance: Instance,
    pub strategies: Vec<StrategyId>,
    pub epsilon_grid: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub options: InferOptions,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.strategies.is_empty() || self.epsilon_grid.is_empty() {
            return Err(Error::invalid("plan needs at least one strategy and one epsilon"));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(**e > 0.0 && **e <= 0.5)) {
            return Err(Error::invalid(format!("epsilon {e} outside (0, 0.5]")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub strategy: StrategyId,
    pub epsilon: f64,
    pub seed: u64,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
    pub total_queries: u64,
    pub modeled_gates: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuerySlope {
    pub strategy: StrategyId,
    /// Slope of mean total queries against `1 / epsilon`.
    pub fit: SlopeFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    /// One entry per strategy when the plan has at least 3 distinct epsilons.
    pub query_slopes: Vec<QuerySlope>,
}

/// Seed of trial `trial` for `strategy` at the `eps_index`-th epsilon.
pub fn stream_seed(base_seed: u64, strategy: StrategyId, eps_index: usize, trial: usize) -> u64 {
    derive_seed(base_seed, strategy.name(), eps_index, trial)
}

/// First 8 bytes of SHA-256 over `(base_seed, label, a, b)`.
pub fn derive_seed(base_seed: u64, label: &str, a: usize, b: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update((a as u64).to_le_bytes());
    h.update((b as u64).to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

/// Runs every (strategy, epsilon, trial) cell. Trials run in parallel;
/// rows come back in plan order.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let prepared = PreparedInstance::new(plan.instance.clone())?;
    let cells: Vec<(StrategyId, usize, usize)> = plan
        .strategies
        .iter()
        .flat_map(|&s| (0..plan.epsilon_grid.len()).flat_map(move |e| (0..plan.trials).map(move |t| (s, e, t))))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(strategy, e, t)| {
            let epsilon = plan.epsilon_grid[e];
            let seed = stream_seed(plan.base_seed, strategy, e, t);
            let r = infer(strategy, &prepared, epsilon, plan.delta, &plan.options, seed)?;
            Ok(ResultRow {
                strategy,
                epsilon,
                seed,
                estimate: r.estimate,
                exact: r.exact,
                abs_error: r.abs_error(),
                total_queries: r.total_queries(),
                modeled_gates: r.modeled_gates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let query_slopes = query_slopes(&rows, &plan.strategies)?;
    Ok(ExperimentResult { rows, query_slopes })
}

/// Mean total queries per (strategy, epsilon), in order of first appearance.
pub fn mean_queries(rows: &[ResultRow], strategy: StrategyId) -> Vec<(f64, f64)> {
    group_by_epsilon(rows, strategy)
        .into_iter()
        .map(|(eps, rs)| (eps, rs.iter().map(|r| r.total_queries as f64).sum::<f64>() / rs.len() as f64))
        .collect()
}

pub(crate) fn group_by_epsilon(rows: &[ResultRow], strategy: StrategyId) -> Vec<(f64, Vec<&ResultRow>)> {
    let mut groups: Vec<(f64, Vec<&ResultRow>)> = Vec::new();
    for r in rows.iter().filter(|r| r.strategy == strategy) {
        match groups.iter_mut().find(|(e, _)| *e == r.epsilon) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.epsilon, vec![r])),
        }
    }
    groups
}

fn query_slopes(rows: &[ResultRow], strategies: &[StrategyId]) -> Result<Vec<QuerySlope>> {
    let mut out = Vec::new();
    for &strategy in strategies {
        let pts: Vec<(f64, f64)> = mean_queries(rows, strategy).into_iter().map(|(e, q)| (1.0 / e, q)).collect();
        if pts.len() >= 3 {
            out.push(QuerySlope { strategy, fit: fit_loglog_slope(&pts)? });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate, GeneratorConfig};

    fn plan(strategies: Vec<StrategyId>, eps: Vec<f64>, trials: usize) -> ExperimentPlan {
        let f = generate(&GeneratorConfig { num_qubits: 2, num_points: 4, seed: 3, ..Default::default() }).unwrap();
        ExperimentPlan {
            instance: f.instance(None).unwrap(),
            strategies,
            epsilon_grid: eps,
            delta: 1.0 / 3.0,
            trials,
            base_seed: 17,
            options: InferOptions::default(),
        }
    }

    #[test]
    fn one_cell_one_row() {
        let r = run_plan(&plan(vec![StrategyId::AllAtOnceQae], vec![0.1], 1)).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.query_slopes.is_empty());
    }

    #[test]
    fn rows_are_complete_and_repeatable() {
        let p = plan(vec![StrategyId::ListSumFixedSampling, StrategyId::AllAtOnceQae], vec![0.1, 0.05], 3);
        let a = run_plan(&p).unwrap();
        assert_eq!(a.rows.len(), 2 * 2 * 3);
        assert_eq!(a, run_plan(&p).unwrap());
    }

    #[test]
    fn strategy_order_does_not_change_results() {
        let ids = vec![StrategyId::SampleAverage, StrategyId::ListSumAdaptiveQae];
        let a = run_plan(&plan(ids.clone(), vec![0.1], 4)).unwrap();
        let b = run_plan(&plan(ids.into_iter().rev().collect(), vec![0.1], 4)).unwrap();
        for row in &a.rows {
            assert!(b.rows.contains(row));
        }
    }

    #[test]
    fn sampling_query_slope_is_two() {
        let p = plan(vec![StrategyId::AllAtOnceSampling], vec![0.1, 0.05, 0.025, 0.0125], 2);
        let r = run_plan(&p).unwrap();
        assert!((r.query_slopes[0].fit.slope - 2.0).abs() < 0.1);
    }

    #[test]
    fn seeds_differ_per_cell() {
        let s = StrategyId::AllAtOnceQae;
        let seeds = [stream_seed(1, s, 0, 0), stream_seed(1, s, 0, 1), stream_seed(1, s, 1, 0), stream_seed(2, s, 0, 0)];
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        assert_ne!(stream_seed(1, s, 0, 0), stream_seed(1, StrategyId::SampleAverage, 0, 0));
    }

    #[test]
    fn invalid_plans() {
        assert!(run_plan(&plan(vec![StrategyId::AllAtOnceQae], vec![0.1], 0)).is_err());
        assert!(run_plan(&plan(vec![StrategyId::AllAtOnceQae], vec![0.7], 1)).is_err());
        assert!(run_plan(&plan(vec![], vec![0.1], 1)).is_err());
    }
}
