//! Knapsack selection without prior knowledge of the benchmark scale: three
//! rules run side by side and the union of their picks is thinned at the end.

use std::collections::HashMap;

use rand::{Rng, RngCore};

use super::knapsack::{KnapsackCore, KnapsackParams};
use crate::error::{BsecError, Result};
use crate::model::{Arrival, Decision, OnlinePolicy};
use crate::subroutines::RandomElement;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralKnapsackParams {
    pub n: usize,
    pub capacity: f64,
    pub epsilon: f64,
    /// Interval length of the inner cascading run.
    pub delta: Option<f64>,
    /// Dedicated budget per level of the inner run.
    pub dedicated: Option<f64>,
    /// Slots per (checkpoint, value level); default ⌈(10/ε)·log₂(1/ε)⌉.
    pub slots: Option<usize>,
    /// Probability of keeping each union pick; default 1 − ε.
    pub keep_prob: Option<f64>,
}

impl GeneralKnapsackParams {
    pub fn new(n: usize, capacity: f64, epsilon: f64) -> Self {
        GeneralKnapsackParams { n, capacity, epsilon, delta: None, dedicated: None, slots: None, keep_prob: None }
    }

    pub fn resolved_slots(&self) -> usize {
        self.slots.unwrap_or_else(|| ((10.0 / self.epsilon) * (1.0 / self.epsilon).log2()).ceil().max(1.0) as usize)
    }

    /// ⌈(10/ε)·log₂ n⌉ value levels.
    pub fn value_levels(&self) -> usize {
        ((10.0 / self.epsilon) * (self.n as f64).log2()).ceil().max(2.0) as usize
    }

    pub fn num_checkpoints(&self) -> usize {
        (1.0 / self.epsilon - 1e-9).ceil() as usize
    }

    pub fn resolved_keep_prob(&self) -> f64 {
        self.keep_prob.unwrap_or(1.0 - self.epsilon)
    }

    fn inner(&self, value_scale: f64) -> KnapsackParams {
        KnapsackParams {
            n: self.n,
            capacity: self.capacity,
            epsilon: self.epsilon,
            c: 4.0,
            delta: self.delta,
            dedicated: self.dedicated,
            reject_prob: Some(0.0),
            start_time: self.epsilon,
            value_scale,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GeneralStats {
    pub by_random: usize,
    pub by_core: usize,
    pub by_slots: usize,
    pub thinned: usize,
}

pub struct KnapsackGeneral {
    params: GeneralKnapsackParams,
    random: RandomElement,
    core: Option<KnapsackCore>,
    early_max: f64,
    /// v̂_i for the checkpoints processed so far
    checkpoint_max: Vec<f64>,
    running_max: f64,
    slots: HashMap<(usize, i64), usize>,
    ln_step: f64,
    stats: GeneralStats,
}

impl KnapsackGeneral {
    pub fn new(params: GeneralKnapsackParams) -> Result<Self> {
        if !(params.epsilon > 0.0 && params.epsilon < 1.0) {
            return Err(BsecError::InvalidParameter(format!("epsilon must lie in (0,1), got {}", params.epsilon)));
        }
        let kp = params.resolved_keep_prob();
        if !(kp > 0.0 && kp <= 1.0) {
            return Err(BsecError::InvalidParameter(format!("keep probability must lie in (0,1], got {kp}")));
        }
        params.inner(1.0).validate()?;
        Ok(KnapsackGeneral {
            random: RandomElement::new(params.n),
            ln_step: params.epsilon.ln_1p(),
            params,
            core: None,
            early_max: f64::NEG_INFINITY,
            checkpoint_max: Vec::new(),
            running_max: f64::NEG_INFINITY,
            slots: HashMap::new(),
            stats: GeneralStats::default(),
        })
    }

    pub fn stats(&self) -> &GeneralStats {
        &self.stats
    }

    pub fn params(&self) -> &GeneralKnapsackParams {
        &self.params
    }

    /// Value level of v relative to v̂: ℓ with v ∈ (v̂/(1+ε)^{ℓ+1}, v̂/(1+ε)^ℓ].
    pub fn value_level(&self, v_hat: f64, v: f64) -> i64 {
        let x = (v_hat / v).ln() / self.ln_step;
        let mut l = x.floor() as i64;
        let tau = |l: i64| v_hat * (-(l as f64) * self.ln_step).exp();
        if v > tau(l) {
            l -= 1;
        } else if v <= tau(l + 1) {
            l += 1;
        }
        l
    }

    fn slot_pick(&mut self, v: f64) -> bool {
        let half = (self.params.value_levels() / 2) as i64;
        let d = self.params.resolved_slots();
        for i in 0..self.checkpoint_max.len() {
            let v_hat = self.checkpoint_max[i];
            if !(v_hat > 0.0) {
                continue;
            }
            let l = self.value_level(v_hat, v);
            if l <= -half || l >= half {
                continue;
            }
            let used = self.slots.entry((i, l)).or_insert(0);
            if *used < d {
                *used += 1;
                return true;
            }
        }
        false
    }
}

pub fn knapsack_general(params: GeneralKnapsackParams) -> Result<KnapsackGeneral> {
    KnapsackGeneral::new(params)
}

impl OnlinePolicy for KnapsackGeneral {
    fn name(&self) -> String {
        "knapsack_general".into()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        self.random.reset(rng);
        self.core = None;
        self.early_max = f64::NEG_INFINITY;
        self.checkpoint_max.clear();
        self.running_max = f64::NEG_INFINITY;
        self.slots.clear();
        self.stats = GeneralStats::default();
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        let eps = self.params.epsilon;
        // checkpoints T_i = iε strictly before this arrival
        while self.checkpoint_max.len() < self.params.num_checkpoints()
            && ((self.checkpoint_max.len() + 1) as f64) * eps < a.time
        {
            self.checkpoint_max.push(self.running_max);
        }

        let by_random = matches!(self.random.on_arrival(a, rng), Decision::Select(_));

        let mut by_core = false;
        if a.time < eps {
            self.early_max = self.early_max.max(a.value);
        } else if self.early_max > 0.0 {
            if self.core.is_none() {
                let n = self.params.n as f64;
                let mut core = KnapsackCore::new(self.params.inner(n * n / self.early_max))
                    .expect("parameters validated at construction");
                core.reset(rng);
                self.core = Some(core);
            }
            by_core = self.core.as_mut().map(|c| c.consider(a)).unwrap_or(false);
        }

        let by_slots = self.slot_pick(a.value);
        self.running_max = self.running_max.max(a.value);

        if !(by_random || by_core || by_slots) {
            return Decision::Skip;
        }
        if by_random {
            self.stats.by_random += 1;
        } else if by_core {
            self.stats.by_core += 1;
        } else {
            self.stats.by_slots += 1;
        }
        let kp = self.params.resolved_keep_prob();
        if kp < 1.0 && !rng.gen_bool(kp) {
            self.stats.thinned += 1;
            return Decision::Skip;
        }
        Decision::take(a)
    }

    fn finish(&mut self, rng: &mut dyn RngCore) {
        if let Some(c) = self.core.as_mut() {
            c.finish(rng);
        }
    }

    fn audit_failures(&self) -> Vec<String> {
        self.core.as_ref().map(|c| c.audit_failures()).unwrap_or_default()
    }
}
