//! Turns a policy that selects up to r' elements into one that selects at
//! most r by keeping each selection independently.

use rand::{Rng, RngCore};

use crate::error::{BsecError, Result};
use crate::model::{Arrival, Decision, OnlinePolicy};

pub struct SubsampleFilter<P> {
    base: P,
    r: usize,
    r_prime: usize,
    keep_prob: f64,
    kept: usize,
    base_selected: usize,
    label: Option<String>,
}

impl<P: OnlinePolicy> SubsampleFilter<P> {
    pub fn new(base: P, r: usize, r_prime: usize) -> Result<Self> {
        if r == 0 || r > r_prime {
            return Err(BsecError::InvalidParameter(format!("filter needs 1 <= r <= r', got r = {r}, r' = {r_prime}")));
        }
        Ok(SubsampleFilter { base, r, r_prime, keep_prob: r as f64 / (2.0 * r_prime as f64), kept: 0, base_selected: 0, label: None })
    }

    /// Reports `name` instead of the generic filter name.
    pub fn set_name(&mut self, name: &str) {
        self.label = Some(name.to_string());
    }

    /// r/(2r').
    pub fn keep_prob(&self) -> f64 {
        self.keep_prob
    }

    pub fn base(&self) -> &P {
        &self.base
    }

    /// Selections the base policy made in the last trial.
    pub fn base_selected(&self) -> usize {
        self.base_selected
    }
}

pub fn subsample_filter<P: OnlinePolicy>(base: P, r: usize, r_prime: usize) -> Result<SubsampleFilter<P>> {
    SubsampleFilter::new(base, r, r_prime)
}

impl<P: OnlinePolicy> OnlinePolicy for SubsampleFilter<P> {
    fn name(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        format!("filter:{}:{},{}", self.base.name(), self.r, self.r_prime)
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        self.base.reset(rng);
        self.kept = 0;
        self.base_selected = 0;
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        match self.base.on_arrival(a, rng) {
            Decision::Skip => Decision::Skip,
            d @ Decision::Select(_) => {
                self.base_selected += 1;
                if self.kept < self.r && rng.gen_bool(self.keep_prob) {
                    self.kept += 1;
                    d
                } else {
                    Decision::Skip
                }
            }
        }
    }

    fn finish(&mut self, rng: &mut dyn RngCore) {
        self.base.finish(rng);
    }

    fn arm(&self) -> Option<String> {
        self.base.arm()
    }

    fn is_ordinal(&self) -> bool {
        self.base.is_ordinal()
    }

    fn audit_failures(&self) -> Vec<String> {
        self.base.audit_failures()
    }
}
