//! Seeded Monte Carlo execution with stratified trial allocation.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::source::TrialSource;
use super::stats::{wilson95, MeanVar};
use crate::error::{BsecError, Result};
use crate::model::{run_policy, OnlinePolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    /// Selected some value ≥ v(g₂).
    OrdinalSuccess,
    /// Selected value over V*; success means reaching V*.
    ValueRatio,
    /// Selected g_max.
    MaxSuccess,
}

impl std::str::FromStr for PayoffKind {
    type Err = BsecError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ordinal_success" => PayoffKind::OrdinalSuccess,
            "value_ratio" => PayoffKind::ValueRatio,
            "max_success" => PayoffKind::MaxSuccess,
            other => return Err(BsecError::Config(format!("unknown payoff kind {other}"))),
        })
    }
}

/// Builds a fresh policy for one worker.
pub type PolicyFactory<'a> = dyn Fn() -> Result<Box<dyn OnlinePolicy>> + Send + Sync + 'a;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub trials: usize,
    pub seed: u64,
    pub payoff: PayoffKind,
    /// None: BSEC_WORKERS or all cores.
    pub workers: Option<usize>,
}

impl RunSettings {
    pub fn new(trials: usize, seed: u64, payoff: PayoffKind) -> Self {
        RunSettings { trials, seed, payoff, workers: None }
    }

    pub fn serial(mut self) -> Self {
        self.workers = Some(1);
        self
    }
}

/// One trial's outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub stratum: usize,
    pub success: bool,
    pub value: f64,
    pub benchmark: f64,
    pub benchmark_exact: bool,
    pub selected: usize,
    pub violations: usize,
    pub arm: Option<String>,
    pub audit_failures: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub trials: usize,
    pub success_rate: f64,
    pub mean_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub algo: String,
    pub family: String,
    pub n: usize,
    pub capacity: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub payoff: PayoffKind,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_value: f64,
    /// Standard error of `mean_value`.
    pub value_std_err: f64,
    pub mean_benchmark: f64,
    /// E[value] / E[V*].
    pub ratio: f64,
    pub benchmark_exact: bool,
    pub violations: usize,
    pub audit_failed_trials: usize,
    pub first_audit_failure: Option<String>,
    pub wall_ms: u128,
    pub arms: BTreeMap<String, ArmStats>,
}

/// Trials per stratum: proportional to weight, at least one each, with
/// largest-remainder rounding.
pub fn allocate_trials(weights: &[f64], trials: usize) -> Vec<usize> {
    let k = weights.len();
    if k == 0 {
        return Vec::new();
    }
    let extra = trials.saturating_sub(k);
    let total: f64 = weights.iter().sum();
    let raw: Vec<f64> = weights.iter().map(|w| w / total * extra as f64).collect();
    let mut alloc: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut left = extra - alloc.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        alloc[i] += 1;
        left -= 1;
    }
    alloc.iter().map(|a| a + 1).collect()
}

/// RNG for trial `index` of an experiment: ChaCha8 keyed by the seed, one
/// stream per trial.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// BSEC_WORKERS if set and positive.
pub fn env_workers() -> Option<usize> {
    std::env::var("BSEC_WORKERS").ok().and_then(|v| v.trim().parse().ok()).filter(|&w: &usize| w > 0)
}

fn run_one(
    source: &dyn TrialSource,
    policy: &mut dyn OnlinePolicy,
    stratum: usize,
    index: u64,
    settings: &RunSettings,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(settings.seed, index);
    let input = source.realize(stratum, &mut rng)?;
    let trace = run_policy(&input.stream, policy, source.feasibility(), &mut rng)?;
    let value = trace.total_value(&input.stream);
    let success = match settings.payoff {
        PayoffKind::OrdinalSuccess => {
            let target = input.g2_value.unwrap_or(f64::NEG_INFINITY);
            let by_id: std::collections::HashMap<usize, f64> =
                input.stream.arrivals().iter().map(|a| (a.id, a.value)).collect();
            trace.selected_ids.iter().any(|id| by_id[id] >= target)
        }
        PayoffKind::ValueRatio => value >= input.benchmark * (1.0 - 1e-12),
        PayoffKind::MaxSuccess => trace.selected_ids.contains(&input.g_max_id),
    };
    Ok(TrialOutcome {
        stratum,
        success,
        value,
        benchmark: input.benchmark,
        benchmark_exact: input.benchmark_exact,
        selected: trace.selected_ids.len(),
        violations: trace.violations.len(),
        arm: trace.arm,
        audit_failures: trace.audit_failures,
    })
}

/// Runs every trial and returns the outcomes in trial order. The result does
/// not depend on the worker count.
pub fn run_outcomes(
    source: &dyn TrialSource,
    factory: &PolicyFactory<'_>,
    settings: &RunSettings,
) -> Result<Vec<TrialOutcome>> {
    if settings.trials == 0 {
        return Err(BsecError::Config("trials must be at least 1".into()));
    }
    let alloc = allocate_trials(&source.strata(), settings.trials);
    let plan: Vec<usize> = alloc.iter().enumerate().flat_map(|(s, &c)| std::iter::repeat_n(s, c)).collect();
    let workers = settings.workers.or_else(env_workers).unwrap_or_else(rayon::current_num_threads);
    if workers <= 1 {
        let mut policy = factory()?;
        return plan
            .iter()
            .enumerate()
            .map(|(i, &s)| run_one(source, policy.as_mut(), s, i as u64, settings))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BsecError::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        plan.par_iter()
            .enumerate()
            .map_init(factory, |policy, (i, &s)| match policy {
                Ok(p) => run_one(source, p.as_mut(), s, i as u64, settings),
                Err(e) => Err(BsecError::Config(format!("policy construction failed: {e}"))),
            })
            .collect()
    })
}

/// Weighted per-stratum aggregation of outcomes.
#[allow(clippy::too_many_arguments)]
pub fn summarize(
    outcomes: &[TrialOutcome],
    weights: &[f64],
    algo: &str,
    family: &str,
    n: usize,
    capacity: Option<f64>,
    settings: &RunSettings,
    wall_ms: u128,
) -> ExperimentReport {
    let k = weights.len();
    let mut succ = vec![MeanVar::default(); k];
    let mut val = vec![MeanVar::default(); k];
    let mut bench = vec![MeanVar::default(); k];
    let mut arms: BTreeMap<String, (usize, f64, f64)> = BTreeMap::new();
    let (mut violations, mut audit_failed, mut first_audit, mut exact) = (0, 0, None, true);
    for o in outcomes {
        succ[o.stratum].push(if o.success { 1.0 } else { 0.0 });
        val[o.stratum].push(o.value);
        bench[o.stratum].push(o.benchmark);
        violations += o.violations;
        exact &= o.benchmark_exact;
        if !o.audit_failures.is_empty() {
            audit_failed += 1;
            if first_audit.is_none() {
                first_audit = o.audit_failures.first().cloned();
            }
        }
        if let Some(a) = &o.arm {
            let e = arms.entry(a.clone()).or_insert((0, 0.0, 0.0));
            e.0 += 1;
            e.1 += if o.success { 1.0 } else { 0.0 };
            e.2 += o.value;
        }
    }
    let total_w: f64 = weights.iter().sum();
    let wsum = |m: &[MeanVar]| m.iter().zip(weights).map(|(x, w)| x.mean() * w / total_w).sum::<f64>();
    let success_rate = wsum(&succ);
    let mean_value = wsum(&val);
    let mean_benchmark = wsum(&bench);
    let value_var: f64 = val
        .iter()
        .zip(weights)
        .filter(|(x, _)| x.count() > 0)
        .map(|(x, w)| (w / total_w).powi(2) * x.variance() / x.count() as f64)
        .sum();
    let (ci_low, ci_high) = wilson95(success_rate * outcomes.len() as f64, outcomes.len() as f64);
    ExperimentReport {
        algo: algo.to_string(),
        family: family.to_string(),
        n,
        capacity,
        trials: outcomes.len(),
        seed: settings.seed,
        payoff: settings.payoff,
        success_rate,
        ci_low,
        ci_high,
        mean_value,
        value_std_err: value_var.sqrt(),
        mean_benchmark,
        ratio: if mean_benchmark > 0.0 { mean_value / mean_benchmark } else { 0.0 },
        benchmark_exact: exact,
        violations,
        audit_failed_trials: audit_failed,
        first_audit_failure: first_audit,
        wall_ms,
        arms: arms
            .into_iter()
            .map(|(k, (t, s, v))| (k, ArmStats { trials: t, success_rate: s / t as f64, mean_value: v / t as f64 }))
            .collect(),
    }
}

/// Runs an experiment from a trial source and a policy factory.
pub fn run_trials(source: &dyn TrialSource, factory: &PolicyFactory<'_>, settings: &RunSettings) -> Result<ExperimentReport> {
    let start = Instant::now();
    let name = factory()?.name();
    let outcomes = run_outcomes(source, factory, settings)?;
    let capacity = match source.feasibility() {
        crate::model::Feasibility::Knapsack { capacity } => Some(*capacity),
        _ => None,
    };
    Ok(summarize(
        &outcomes,
        &source.strata(),
        &name,
        &source.family(),
        source.n(),
        capacity,
        settings,
        start.elapsed().as_millis(),
    ))
}
