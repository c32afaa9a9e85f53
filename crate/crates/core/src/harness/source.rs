//! Where trials come from: pure instances, mixed instances, per-trial
//! resampled families and the two-blue model.

use std::sync::Arc;

use rand::RngCore;

use crate::error::{BsecError, Result};
use crate::model::{
    compute_benchmark, realize_stream_with, Feasibility, MixedInstance, PureInstance, RealizeOptions, RealizedStream,
};
use crate::single_item::two_blue::{sequence_stream, TwoBluePrior, TwoBlueState};

/// One realized trial input with what the payoff needs.
#[derive(Clone, Debug)]
pub struct TrialInput {
    pub stream: RealizedStream,
    /// V* for this input.
    pub benchmark: f64,
    pub benchmark_exact: bool,
    /// v(g₂), the ordinal target.
    pub g2_value: Option<f64>,
    pub g_max_id: usize,
}

pub trait TrialSource: Send + Sync {
    fn n(&self) -> usize;

    /// Stratum weights summing to one.
    fn strata(&self) -> Vec<f64>;

    fn realize(&self, stratum: usize, rng: &mut dyn RngCore) -> Result<TrialInput>;

    fn feasibility(&self) -> &Feasibility;

    fn family(&self) -> String {
        "custom".into()
    }
}

#[derive(Clone, Debug)]
struct PreparedState {
    inst: PureInstance,
    benchmark: f64,
    exact: bool,
}

fn prepare(inst: &PureInstance, feas: &Feasibility) -> Result<PreparedState> {
    let b = compute_benchmark(inst, feas).map_err(|e| BsecError::Oracle(e.to_string()))?;
    Ok(PreparedState { inst: inst.clone(), benchmark: b.value, exact: b.exact })
}

fn realize_state(p: &PreparedState, rng: &mut dyn RngCore, opts: &RealizeOptions) -> Result<TrialInput> {
    let stream = realize_stream_with(&p.inst, rng, *opts)?;
    Ok(TrialInput {
        stream,
        benchmark: p.benchmark,
        benchmark_exact: p.exact,
        g2_value: p.inst.g2().map(|g| p.inst.element(g).value),
        g_max_id: p.inst.g_max(),
    })
}

fn family_of(inst: &PureInstance) -> String {
    inst.meta().get("family").and_then(|v| v.as_str()).unwrap_or("custom").to_string()
}

/// Pure or mixed instance; the benchmark is computed once per state.
pub struct InstanceSource {
    states: Vec<(f64, PreparedState)>,
    feas: Feasibility,
    opts: RealizeOptions,
    family: String,
}

impl InstanceSource {
    pub fn pure(inst: &PureInstance, feas: Feasibility, opts: RealizeOptions) -> Result<Self> {
        Ok(InstanceSource { states: vec![(1.0, prepare(inst, &feas)?)], family: family_of(inst), feas, opts })
    }

    pub fn mixed(mixed: &MixedInstance, feas: Feasibility, opts: RealizeOptions) -> Result<Self> {
        let states: Result<Vec<(f64, PreparedState)>> =
            mixed.states().iter().map(|(w, s)| Ok((*w, prepare(s, &feas)?))).collect();
        let family = mixed.states().first().map(|s| family_of(&s.1)).unwrap_or_default();
        Ok(InstanceSource { states: states?, feas, opts, family })
    }

    pub fn benchmark(&self, stratum: usize) -> f64 {
        self.states[stratum].1.benchmark
    }
}

impl TrialSource for InstanceSource {
    fn n(&self) -> usize {
        self.states[0].1.inst.n()
    }

    fn strata(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.0).collect()
    }

    fn realize(&self, stratum: usize, rng: &mut dyn RngCore) -> Result<TrialInput> {
        realize_state(&self.states[stratum].1, rng, &self.opts)
    }

    fn feasibility(&self) -> &Feasibility {
        &self.feas
    }

    fn family(&self) -> String {
        self.family.clone()
    }
}

type Generator = dyn Fn(&mut dyn RngCore) -> Result<PureInstance> + Send + Sync;

/// Draws a fresh pure instance every trial (e.g. continuous red times).
pub struct ResampledSource {
    n: usize,
    generator: Box<Generator>,
    feas: Feasibility,
    opts: RealizeOptions,
    family: String,
}

impl ResampledSource {
    pub fn new(
        n: usize,
        family: &str,
        feas: Feasibility,
        opts: RealizeOptions,
        generator: impl Fn(&mut dyn RngCore) -> Result<PureInstance> + Send + Sync + 'static,
    ) -> Self {
        ResampledSource { n, generator: Box::new(generator), feas, opts, family: family.to_string() }
    }
}

impl TrialSource for ResampledSource {
    fn n(&self) -> usize {
        self.n
    }

    fn strata(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn realize(&self, _stratum: usize, rng: &mut dyn RngCore) -> Result<TrialInput> {
        let inst = (self.generator)(rng)?;
        realize_state(&prepare(&inst, &self.feas)?, rng, &self.opts)
    }

    fn feasibility(&self) -> &Feasibility {
        &self.feas
    }

    fn family(&self) -> String {
        self.family.clone()
    }
}

/// Two-blue trials: a state from the prior, blues at a uniformly random
/// ordered pair of positions. Explicit priors are stratified by state.
pub struct TwoBlueSource {
    prior: Arc<dyn TwoBluePrior>,
    feas: Feasibility,
}

impl TwoBlueSource {
    pub fn new(prior: Arc<dyn TwoBluePrior>) -> Self {
        TwoBlueSource { prior, feas: Feasibility::SingleItem }
    }

    fn input(state: &TwoBlueState, rng: &mut dyn RngCore) -> TrialInput {
        let (seq, _, _) = state.realize(rng);
        TrialInput {
            stream: sequence_stream(&seq, state.b1, state.b2),
            benchmark: state.b2 as f64,
            benchmark_exact: true,
            g2_value: Some(state.b2 as f64),
            g_max_id: state.b1 as usize - 1,
        }
    }
}

impl TrialSource for TwoBlueSource {
    fn n(&self) -> usize {
        self.prior.n()
    }

    fn strata(&self) -> Vec<f64> {
        match self.prior.explicit_states() {
            Some(s) => s.iter().map(|x| x.0).collect(),
            None => vec![1.0],
        }
    }

    fn realize(&self, stratum: usize, rng: &mut dyn RngCore) -> Result<TrialInput> {
        match self.prior.explicit_states() {
            Some(s) => Ok(Self::input(&s[stratum].1, rng)),
            None => {
                let st = self.prior.sample_state(rng);
                Ok(Self::input(&st, rng))
            }
        }
    }

    fn feasibility(&self) -> &Feasibility {
        &self.feas
    }

    fn family(&self) -> String {
        "two_blue".into()
    }
}
