//! Experiment configuration files and the one-call experiment runner.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::registry::{build_policy, default_feasibility, default_payoff, AlgoContext};
use super::runner::{run_trials, ExperimentReport, PayoffKind, RunSettings};
use super::source::{InstanceSource, TrialSource, TwoBlueSource};
use crate::adversaries::{FamilySpec, Generated};
use crate::error::{BsecError, Result};
use crate::model::instance::{InstanceJson, MixedJson};
use crate::model::{MixedInstance, PartitionStructure, PureInstance, RealizeOptions};
use crate::single_item::two_blue::MixedTwoBlueJson;
use crate::single_item::{MixedTwoBlue, TwoBluePrior};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Path to an instance file; relative paths resolve against the config.
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    pub algo: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub payoff: Option<PayoffKind>,
    #[serde(default)]
    pub discretize: bool,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        if let (Some(inst), Some(dir)) = (&cfg.instance, path.parent()) {
            if inst.is_relative() {
                cfg.instance = Some(dir.join(inst));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(BsecError::Config("trials must be at least 1".into()));
        }
        match (&self.instance, &self.family) {
            (Some(_), Some(_)) => Err(BsecError::Config("give either instance or family, not both".into())),
            (None, None) => Err(BsecError::Config("config needs an instance or a family".into())),
            _ => Ok(()),
        }
    }

    pub fn load_input(&self) -> Result<LoadedInput> {
        match (&self.instance, &self.family) {
            (Some(p), _) => load_instance_file(p),
            (None, Some(f)) => Ok(LoadedInput::from_generated(f.generate()?)),
            (None, None) => Err(BsecError::Config("config needs an instance or a family".into())),
        }
    }
}

/// Any instance file the CLI understands.
#[derive(Clone, Debug)]
pub enum LoadedInput {
    Pure { inst: PureInstance, partition: Option<PartitionStructure> },
    Mixed(MixedInstance),
    TwoBlue(MixedTwoBlue),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyJson {
    Pure(InstanceJson),
    Mixed(MixedJson),
    TwoBlue(MixedTwoBlueJson),
}

impl LoadedInput {
    pub fn from_generated(g: Generated) -> Self {
        match g {
            Generated::Pure(inst) => LoadedInput::Pure { inst, partition: None },
            Generated::Mixed(m) => LoadedInput::Mixed(m),
            Generated::TwoBlue(t) => LoadedInput::TwoBlue(t),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let any: AnyJson =
            serde_json::from_str(text).map_err(|e| BsecError::Config(format!("unrecognized instance file: {e}")))?;
        Ok(match any {
            AnyJson::Pure(j) => {
                let inst = PureInstance::try_from(&j)?;
                let partition = match (&j.parts, &j.capacities) {
                    (Some(p), Some(c)) => Some(PartitionStructure::from_maps(p, c, inst.n(), |id| inst.index_of(id))?),
                    (None, None) => None,
                    _ => return Err(BsecError::InvalidInstance("parts and capacities must come together".into())),
                };
                LoadedInput::Pure { inst, partition }
            }
            AnyJson::Mixed(m) => LoadedInput::Mixed(MixedInstance::try_from(&m)?),
            AnyJson::TwoBlue(t) => LoadedInput::TwoBlue(MixedTwoBlue::from_json(&t)?),
        })
    }

    pub fn to_json(&self) -> Value {
        match self {
            LoadedInput::Pure { inst, .. } => serde_json::to_value(InstanceJson::from(inst)),
            LoadedInput::Mixed(m) => serde_json::to_value(MixedJson::from(m)),
            LoadedInput::TwoBlue(t) => serde_json::to_value(t.to_json()),
        }
        .unwrap_or(Value::Null)
    }

    pub fn n(&self) -> usize {
        match self {
            LoadedInput::Pure { inst, .. } => inst.n(),
            LoadedInput::Mixed(m) => m.n(),
            LoadedInput::TwoBlue(t) => t.n(),
        }
    }

    /// Knapsack capacity recorded in the instance metadata.
    pub fn meta_capacity(&self) -> Option<f64> {
        let inst = match self {
            LoadedInput::Pure { inst, .. } => inst,
            LoadedInput::Mixed(m) => &m.states().first()?.1,
            LoadedInput::TwoBlue(_) => return None,
        };
        inst.meta().get("capacity").and_then(Value::as_f64)
    }
}

pub fn load_instance_file(path: &Path) -> Result<LoadedInput> {
    let text = std::fs::read_to_string(path).map_err(|e| BsecError::Io(format!("{}: {e}", path.display())))?;
    LoadedInput::from_json_str(&text)
}

/// Context for `algo` over `input`. Capacity comes from `params.K`, then the
/// instance metadata.
pub fn context_for(input: &LoadedInput, params: &Map<String, Value>, discretize: bool) -> AlgoContext {
    let mut ctx = AlgoContext::new(input.n()).with_params(params.clone()).with_discretize(discretize);
    if let Some(k) = params.get("K").and_then(Value::as_f64).or_else(|| input.meta_capacity()) {
        ctx = ctx.with_capacity(k);
    }
    match input {
        LoadedInput::Pure { inst, partition } => {
            ctx = ctx.with_mixed(MixedInstance::single(inst.clone()));
            if let Some(p) = partition {
                ctx = ctx.with_partition(p.clone());
            }
        }
        LoadedInput::Mixed(m) => ctx = ctx.with_mixed(m.clone()),
        LoadedInput::TwoBlue(t) => ctx = ctx.with_two_blue(Arc::new(t.clone()) as Arc<dyn TwoBluePrior>),
    }
    ctx
}

/// Trial source for `input` under the default constraint of `algo`.
pub fn source_for(input: &LoadedInput, algo: &str, ctx: &AlgoContext, discretize: bool) -> Result<Box<dyn TrialSource>> {
    let feas = default_feasibility(algo, ctx)?;
    let opts = RealizeOptions { discretize };
    Ok(match input {
        LoadedInput::Pure { inst, .. } => Box::new(InstanceSource::pure(inst, feas, opts)?),
        LoadedInput::Mixed(m) => Box::new(InstanceSource::mixed(m, feas, opts)?),
        LoadedInput::TwoBlue(t) => Box::new(TwoBlueSource::new(Arc::new(t.clone()))),
    })
}

/// Loads the input, builds the policy and runs every trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let input = cfg.load_input()?;
    let ctx = context_for(&input, &cfg.params, cfg.discretize);
    build_policy(&cfg.algo, &ctx)?;
    let source = source_for(&input, &cfg.algo, &ctx, cfg.discretize)?;
    let settings = RunSettings {
        trials: cfg.trials,
        seed: cfg.seed,
        payoff: cfg.payoff.unwrap_or_else(|| default_payoff(&cfg.algo)),
        workers: cfg.workers,
    };
    let factory = || build_policy(&cfg.algo, &ctx);
    run_trials(source.as_ref(), &factory, &settings)
}
