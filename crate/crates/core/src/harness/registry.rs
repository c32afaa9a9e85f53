//! Name-based policy construction.
//!
//! Names: `random`, `dynkin`, `two_checkpoint[:T1,T2]`, `value_logstar`,
//! `ordinal_knowndist`, `two_blue`, `knapsack_core`, `knapsack_general`,
//! `uniform_constant`, `partition`, `general_matroid:<uniform:R|partition>`,
//! `filter:<base>:r,r'`, `guess_n:<base>` and `estimate_n:<base>`.

use std::sync::{Arc, OnceLock};

use serde_json::{Map, Value};

use super::n_estimate::{EstimateN, GuessN, PolicyBuilder};
use super::runner::PayoffKind;
use crate::error::{BsecError, Result};
use crate::matroid::{GeneralMatroidPolicy, PartitionPolicy};
use crate::model::{Feasibility, IndependenceOracle, MixedInstance, OnlinePolicy, PartitionOracle, PartitionStructure, UniformOracle};
use crate::multi_select::{uniform_constant, GeneralKnapsackParams, KnapsackCore, KnapsackParams, SubsampleFilter};
use crate::single_item::{OrdinalKnownDist, PosteriorConfig, PosteriorModel, TwoBluePolicy, TwoBluePrior, ValueMaxLogStar};
use crate::subroutines::{Dynkin, IntervalWindow, RandomElement, TwoCheckpoints};

/// Single-item policies that work on any instance.
pub const SINGLE_ITEM_POLICIES: &[&str] = &["random", "dynkin", "two_checkpoint", "value_logstar", "ordinal_knowndist"];

/// Everything a policy may need besides its name.
#[derive(Default)]
pub struct AlgoContext {
    pub n: usize,
    /// Known distribution for `ordinal_knowndist`.
    pub mixed: Option<Arc<MixedInstance>>,
    pub two_blue: Option<Arc<dyn TwoBluePrior>>,
    pub partition: Option<PartitionStructure>,
    pub capacity: Option<f64>,
    pub params: Map<String, Value>,
    pub discretize: bool,
    posterior: OnceLock<Arc<PosteriorModel>>,
}

impl AlgoContext {
    pub fn new(n: usize) -> Self {
        AlgoContext { n, ..Default::default() }
    }

    pub fn with_mixed(mut self, mixed: MixedInstance) -> Self {
        self.mixed = Some(Arc::new(mixed));
        self
    }

    pub fn with_two_blue(mut self, prior: Arc<dyn TwoBluePrior>) -> Self {
        self.two_blue = Some(prior);
        self
    }

    pub fn with_partition(mut self, p: PartitionStructure) -> Self {
        self.partition = Some(p);
        self
    }

    pub fn with_capacity(mut self, k: f64) -> Self {
        self.capacity = Some(k);
        self
    }

    pub fn with_params(mut self, params: Map<String, Value>) -> Self {
        self.params = params;
        self
    }

    pub fn with_discretize(mut self, d: bool) -> Self {
        self.discretize = d;
        self
    }

    /// Numeric parameter by key.
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(Value::as_f64)
    }

    pub fn param_usize(&self, key: &str) -> Option<usize> {
        self.params.get(key).and_then(Value::as_u64).map(|v| v as usize)
    }

    /// Posterior model over `mixed`, built on first use and shared.
    pub fn posterior(&self) -> Result<Arc<PosteriorModel>> {
        if let Some(p) = self.posterior.get() {
            return Ok(p.clone());
        }
        let mixed = self
            .mixed
            .as_ref()
            .ok_or_else(|| BsecError::Config("ordinal_knowndist needs a known distribution".into()))?;
        Ok(self.posterior.get_or_init(|| Arc::new(PosteriorModel::new(mixed, self.discretize))).clone())
    }

    fn capacity_or_err(&self, algo: &str) -> Result<f64> {
        self.capacity.ok_or_else(|| BsecError::Config(format!("{algo} needs a knapsack capacity")))
    }

    fn epsilon(&self) -> f64 {
        self.param("epsilon").unwrap_or(0.2)
    }

    fn uniform_r(&self) -> Option<usize> {
        self.param_usize("r")
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(',').ok_or_else(|| BsecError::UnknownAlgorithm(format!("expected a,b in {s}")))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|_| BsecError::UnknownAlgorithm(format!("bad number {x}")));
    Ok((p(a)?, p(b)?))
}

/// Splits `filter:<base>:r,r'` into base and the trailing pair.
fn split_filter(rest: &str) -> Result<(&str, usize, usize)> {
    let (base, pair) =
        rest.rsplit_once(':').ok_or_else(|| BsecError::UnknownAlgorithm(format!("filter:{rest} needs :r,r'")))?;
    let (r, rp) = parse_pair(pair)?;
    if r < 1.0 || rp < r || r.fract() != 0.0 || rp.fract() != 0.0 {
        return Err(BsecError::UnknownAlgorithm(format!("filter needs integers 1 <= r <= r', got {pair}")));
    }
    Ok((base, r as usize, rp as usize))
}

fn oracle_for(spec: &str, ctx: &AlgoContext) -> Result<Arc<dyn IndependenceOracle>> {
    if let Some(r) = spec.strip_prefix("uniform:") {
        let r: usize = r.parse().map_err(|_| BsecError::UnknownAlgorithm(format!("bad rank in {spec}")))?;
        return Ok(Arc::new(UniformOracle { r }));
    }
    if spec == "partition" {
        let p = ctx.partition.clone().ok_or_else(|| BsecError::Config("partition oracle needs parts".into()))?;
        return Ok(Arc::new(PartitionOracle(p)));
    }
    Err(BsecError::UnknownAlgorithm(format!("unknown oracle {spec}")))
}

/// Builds policy `name` for `n` elements.
pub fn build_policy_for(name: &str, ctx: &AlgoContext, n: usize) -> Result<Box<dyn OnlinePolicy>> {
    if let Some(rest) = name.strip_prefix("filter:") {
        let (base, r, rp) = split_filter(rest)?;
        let inner = build_policy_for(base, ctx, n)?;
        return Ok(Box::new(SubsampleFilter::new(inner, r, rp)?));
    }
    if let Some(base) = name.strip_prefix("guess_n:") {
        return Ok(Box::new(GuessN::new(builder(base, ctx)?, base)));
    }
    if let Some(base) = name.strip_prefix("estimate_n:") {
        return Ok(Box::new(EstimateN::new(builder(base, ctx)?, base)));
    }
    if let Some(spec) = name.strip_prefix("general_matroid:") {
        return Ok(Box::new(GeneralMatroidPolicy::new(oracle_for(spec, ctx)?, n)?));
    }
    if let Some(pair) = name.strip_prefix("two_checkpoint:") {
        let (t1, t2) = parse_pair(pair)?;
        return Ok(Box::new(TwoCheckpoints::new(IntervalWindow::new(t1, t2)?)));
    }
    Ok(match name {
        "random" => Box::new(RandomElement::new(n)),
        "dynkin" => Box::new(Dynkin::new(n)),
        "two_checkpoint" => Box::new(TwoCheckpoints::new(IntervalWindow::new(0.25, 0.5)?)),
        "value_logstar" => Box::new(ValueMaxLogStar::new(n)?),
        "ordinal_knowndist" => {
            let mut cfg = PosteriorConfig::default();
            if let Some(b) = ctx.param("completion_budget") {
                cfg.completion_budget = b;
            }
            Box::new(OrdinalKnownDist::new(ctx.posterior()?).with_config(cfg))
        }
        "two_blue" => {
            let prior = ctx.two_blue.clone().ok_or_else(|| BsecError::Config("two_blue needs a two-blue prior".into()))?;
            Box::new(TwoBluePolicy::new(prior))
        }
        "knapsack_core" => {
            let mut p = KnapsackParams::new(n, ctx.capacity_or_err(name)?, ctx.epsilon());
            if let Some(c) = ctx.param("c") {
                p.c = c;
            }
            p.delta = ctx.param("delta");
            p.dedicated = ctx.param("H").or_else(|| ctx.param("dedicated"));
            p.reject_prob = ctx.param("reject_prob");
            Box::new(KnapsackCore::new(p)?)
        }
        "knapsack_general" => {
            let mut p = GeneralKnapsackParams::new(n, ctx.capacity_or_err(name)?, ctx.epsilon());
            p.delta = ctx.param("delta");
            p.dedicated = ctx.param("H").or_else(|| ctx.param("dedicated"));
            p.slots = ctx.param_usize("slots");
            p.keep_prob = ctx.param("keep_prob");
            Box::new(crate::multi_select::KnapsackGeneral::new(p)?)
        }
        "uniform_constant" => {
            let r = ctx.uniform_r().ok_or_else(|| BsecError::Config("uniform_constant needs params.r".into()))?;
            Box::new(uniform_constant(n, r)?)
        }
        "partition" => {
            let p = ctx.partition.clone().ok_or_else(|| BsecError::Config("partition needs parts".into()))?;
            Box::new(PartitionPolicy::new(p, n)?)
        }
        other => return Err(BsecError::UnknownAlgorithm(other.to_string())),
    })
}

pub fn build_policy(name: &str, ctx: &AlgoContext) -> Result<Box<dyn OnlinePolicy>> {
    build_policy_for(name, ctx, ctx.n)
}

/// A builder that re-creates `base` for any n; used by the n-estimation
/// wrappers. The known distribution, if any, stays attached.
fn builder(base: &str, ctx: &AlgoContext) -> Result<PolicyBuilder> {
    // Fail early on names that cannot be built at all.
    build_policy_for(base, ctx, ctx.n)?;
    let shared = Arc::new(AlgoContext {
        n: ctx.n,
        mixed: ctx.mixed.clone(),
        two_blue: ctx.two_blue.clone(),
        partition: ctx.partition.clone(),
        capacity: ctx.capacity,
        params: ctx.params.clone(),
        discretize: ctx.discretize,
        posterior: ctx.posterior.clone(),
    });
    let base = base.to_string();
    Ok(Arc::new(move |n| build_policy_for(&base, &shared, n)))
}

/// Whether `name` is registered, checked by building it.
pub fn is_registered(name: &str, ctx: &AlgoContext) -> bool {
    !matches!(build_policy(name, ctx), Err(BsecError::UnknownAlgorithm(_)))
}

fn base_name(name: &str) -> &str {
    if name.starts_with("filter:") {
        return "filter";
    } else if let Some(b) = name.strip_prefix("guess_n:").or_else(|| name.strip_prefix("estimate_n:")) {
        return base_name(b);
    }
    name.split(':').next().unwrap_or(name)
}

/// The constraint a policy is evaluated under by default.
pub fn default_feasibility(name: &str, ctx: &AlgoContext) -> Result<Feasibility> {
    if let Some(rest) = name.strip_prefix("filter:") {
        let (_, r, _) = split_filter(rest)?;
        return Ok(Feasibility::Uniform { r });
    }
    Ok(match base_name(name) {
        "knapsack_core" | "knapsack_general" => Feasibility::Knapsack { capacity: ctx.capacity_or_err(name)? },
        "uniform_constant" => Feasibility::Uniform {
            r: ctx.uniform_r().ok_or_else(|| BsecError::Config("uniform_constant needs params.r".into()))?,
        },
        "partition" => Feasibility::Partition(
            ctx.partition.clone().ok_or_else(|| BsecError::Config("partition needs parts".into()))?,
        ),
        "general_matroid" => {
            let spec = name.rsplit_once("general_matroid:").map(|x| x.1).unwrap_or("");
            Feasibility::Matroid(oracle_for(spec, ctx)?)
        }
        _ => Feasibility::SingleItem,
    })
}

/// Ordinal success for single-item policies, value ratio otherwise.
pub fn default_payoff(name: &str) -> PayoffKind {
    if name.starts_with("filter:") {
        return PayoffKind::ValueRatio;
    }
    match base_name(name) {
        "knapsack_core" | "knapsack_general" | "uniform_constant" | "partition" | "general_matroid" => {
            PayoffKind::ValueRatio
        }
        _ => PayoffKind::OrdinalSuccess,
    }
}
