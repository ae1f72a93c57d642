use std::sync::Arc;

use rayon::prelude::*;

use crate::cluster::{CommLedger, RoundLog, World};
use crate::config::{BudgetConfig, ExperimentConfig};
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::vecmath::DenseVector;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub logs: Vec<RoundLog>,
    pub ledger: CommLedger,
    pub initial_objective: f64,
    pub final_w: DenseVector,
    pub optimum_value: Option<f64>,
    /// The round that would have exceeded `max_bits`; it is not part of
    /// `logs`, the ledger, or `final_w`.
    pub overshoot: Option<RoundLog>,
}

/// Builds the problem from the config and runs to the budget.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    run_experiment_with(config, config.problem.build()?)
}

/// Runs on an already-built problem (useful to share one dataset and its
/// solved optimum across many runs).
pub fn run_experiment_with(config: &ExperimentConfig, problem: Arc<Problem>) -> Result<RunOutput> {
    run_world(World::new(config, problem)?, &config.budget)
}

/// Steps `world` until `max_rounds` rounds have run or the next round would
/// push cumulative bits past `max_bits`.
pub fn run_world(mut world: World, budget: &BudgetConfig) -> Result<RunOutput> {
    if budget.max_rounds.is_none() && budget.max_bits.is_none() {
        return Err(Error::config("budget", "set max_rounds and/or max_bits"));
    }
    let initial_objective = world.problem().objective(world.w())?;
    let mut logs = Vec::new();
    let mut overshoot = None;
    while budget.max_rounds.is_none_or(|max| world.round() < max) {
        let Some(max_bits) = budget.max_bits else {
            logs.push(world.run_round()?);
            continue;
        };
        // The ledger only grows, so it is rolled back by truncation instead
        // of being cloned every round.
        let ledger = std::mem::take(&mut world.ledger);
        let entries_before = ledger.entries().len();
        let before = world.clone();
        world.ledger = ledger;
        let log = world.run_round()?;
        if log.cumulative_bits > max_bits {
            let mut ledger = std::mem::take(&mut world.ledger);
            ledger.truncate(entries_before);
            world = before;
            world.ledger = ledger;
            overshoot = Some(log);
            break;
        }
        logs.push(log);
    }
    Ok(RunOutput {
        logs,
        ledger: world.ledger().clone(),
        initial_objective,
        final_w: world.w().clone(),
        optimum_value: world.optimum_value(),
        overshoot,
    })
}

/// Suboptimality (or objective when `F(w⋆)` is unknown) of the last round
/// whose cumulative bits are at or below `budget`.
pub fn suboptimality_at_budget(run: &RunOutput, budget: u64) -> Result<f64> {
    let last = run.logs.iter().take_while(|l| l.cumulative_bits <= budget).last();
    match last {
        Some(log) => Ok(log.suboptimality.unwrap_or(log.objective)),
        None => {
            let first = run.logs.first().or(run.overshoot.as_ref());
            Err(Error::BudgetTooSmall {
                budget,
                first_round: first.map_or(0, RoundLog::round_bits),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub budget_bits: u64,
    pub rows: Vec<ComparisonRow>,
    pub median_a: f64,
    pub median_b: f64,
}

impl ComparisonReport {
    pub fn wins(&self, who: Winner) -> usize {
        self.rows.iter().filter(|r| r.winner == who).count()
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Builds the shared problem from `a` and compares both configs at exactly
/// `budget_bits` of cumulative communication on every seed.
pub fn matched_budget_compare(
    a: &ExperimentConfig,
    b: &ExperimentConfig,
    budget_bits: u64,
    seeds: &[u64],
) -> Result<ComparisonReport> {
    matched_budget_compare_with(a, b, a.problem.build()?, budget_bits, seeds)
}

/// Like [`matched_budget_compare`] on a prebuilt problem. Seeds run in
/// parallel; each run is deterministic so the report does not depend on
/// scheduling.
pub fn matched_budget_compare_with(
    a: &ExperimentConfig,
    b: &ExperimentConfig,
    problem: Arc<Problem>,
    budget_bits: u64,
    seeds: &[u64],
) -> Result<ComparisonReport> {
    if a.problem != b.problem {
        return Err(Error::config("problem", "compared configs must share the problem"));
    }
    if a.optimizer.kind != b.optimizer.kind {
        return Err(Error::config(
            "optimizer.type",
            "compared configs must share the optimizer",
        ));
    }
    if seeds.is_empty() {
        return Err(Error::config("seeds", "need at least one seed"));
    }
    let budget = BudgetConfig {
        max_rounds: None,
        max_bits: Some(budget_bits),
    };
    let at_budget = |config: &ExperimentConfig, seed: u64| -> Result<f64> {
        let mut config = config.with_seed(seed);
        config.budget = budget;
        let run = run_world(World::new(&config, problem.clone())?, &budget)?;
        suboptimality_at_budget(&run, budget_bits)
    };
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let sa = at_budget(a, seed)?;
            let sb = at_budget(b, seed)?;
            let winner = match sa.total_cmp(&sb) {
                std::cmp::Ordering::Less => Winner::A,
                std::cmp::Ordering::Greater => Winner::B,
                std::cmp::Ordering::Equal => Winner::Tie,
            };
            Ok(ComparisonRow {
                seed,
                a: sa,
                b: sb,
                winner,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut va: Vec<f64> = rows.iter().map(|r| r.a).collect();
    let mut vb: Vec<f64> = rows.iter().map(|r| r.b).collect();
    Ok(ComparisonReport {
        budget_bits,
        median_a: median(&mut va),
        median_b: median(&mut vb),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn booth(budget: &str) -> ExperimentConfig {
        ExperimentConfig::from_json_str(&format!(
            r#"{{
                "problem": {{ "type": "booth" }},
                "cluster": {{ "workers": 2 }},
                "optimizer": {{ "type": "sgd", "step": {{ "policy": "constant", "eta": 0.001 }} }},
                "codec": {{ "type": "ternary" }},
                "budget": {budget},
                "master_seed": 11
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn zero_rounds_is_empty() {
        let run = run_experiment(&booth(r#"{ "max_rounds": 0 }"#)).unwrap();
        assert!(run.logs.is_empty());
        assert_eq!(run.final_w.as_slice(), &[0.0, 0.0]);
        assert_eq!(run.initial_objective, 74.0);
    }

    #[test]
    fn reruns_are_identical() {
        let c = booth(r#"{ "max_rounds": 40 }"#);
        assert_eq!(run_experiment(&c).unwrap().logs, run_experiment(&c).unwrap().logs);
    }

    #[test]
    fn bit_budget_excludes_the_overshooting_round() {
        let run = run_experiment(&booth(r#"{ "max_bits": 1000 }"#)).unwrap();
        let last = run.logs.last().unwrap();
        assert!(last.cumulative_bits <= 1000);
        assert!(run.overshoot.as_ref().unwrap().cumulative_bits > 1000);
        assert_eq!(run.ledger.total(), last.cumulative_bits);
    }

    #[test]
    fn identical_configs_tie() {
        let c = booth(r#"{ "max_rounds": 1 }"#);
        let report = matched_budget_compare(&c, &c, 2000, &[1, 2, 3]).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.wins(Winner::Tie), 3);
        assert_eq!(report.median_a, report.median_b);
    }

    #[test]
    fn budget_below_first_round() {
        let c = booth(r#"{ "max_rounds": 1 }"#);
        let err = matched_budget_compare(&c, &c, 10, &[1]).unwrap_err();
        assert!(matches!(err, Error::BudgetTooSmall { budget: 10, first_round } if first_round > 10));
    }
}
