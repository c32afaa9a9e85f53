//! The online-policy contract and the evaluator that runs a policy over a
//! realized stream.

use rand::RngCore;

use super::constraint::{Feasibility, FeasibilityTracker};
use super::stream::{Arrival, RealizedStream};
use crate::error::{BsecError, Result};

/// A decision about the current arrival. `Select` must name the arrival
/// being offered; naming anything else is a contract violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Skip,
    Select(usize),
}

impl Decision {
    pub fn take(a: &Arrival) -> Self {
        Decision::Select(a.id)
    }

    pub fn is_select(&self) -> bool {
        matches!(self, Decision::Select(_))
    }
}

/// An online selection rule. One value is confined to one trial at a time;
/// `reset` starts a fresh trial.
pub trait OnlinePolicy: Send {
    fn name(&self) -> String;

    fn reset(&mut self, rng: &mut dyn RngCore);

    fn on_arrival(&mut self, arrival: &Arrival, rng: &mut dyn RngCore) -> Decision;

    /// Called once after the last arrival.
    fn finish(&mut self, _rng: &mut dyn RngCore) {}

    /// Which internal branch ran this trial, for per-arm breakdowns.
    fn arm(&self) -> Option<String> {
        None
    }

    /// Ordinal policies only compare values.
    fn is_ordinal(&self) -> bool {
        false
    }

    /// Internal audit failures of the last trial; empty when all checks held.
    fn audit_failures(&self) -> Vec<String> {
        Vec::new()
    }
}

impl<P: OnlinePolicy + ?Sized> OnlinePolicy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn reset(&mut self, rng: &mut dyn RngCore) {
        (**self).reset(rng)
    }
    fn on_arrival(&mut self, arrival: &Arrival, rng: &mut dyn RngCore) -> Decision {
        (**self).on_arrival(arrival, rng)
    }
    fn finish(&mut self, rng: &mut dyn RngCore) {
        (**self).finish(rng)
    }
    fn arm(&self) -> Option<String> {
        (**self).arm()
    }
    fn is_ordinal(&self) -> bool {
        (**self).is_ordinal()
    }
    fn audit_failures(&self) -> Vec<String> {
        (**self).audit_failures()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRecord {
    pub id: usize,
    pub time: f64,
    /// The policy asked to select this arrival.
    pub selected: bool,
    /// The evaluator kept it (false when it would break feasibility).
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTrace {
    pub selected_ids: Vec<usize>,
    pub log: Vec<DecisionRecord>,
    /// Ids whose selection was refused by the feasibility check.
    pub violations: Vec<usize>,
    pub arm: Option<String>,
    pub audit_failures: Vec<String>,
}

impl PolicyTrace {
    pub fn total_value(&self, stream: &RealizedStream) -> f64 {
        let by_id: std::collections::HashMap<usize, f64> =
            stream.arrivals().iter().map(|a| (a.id, a.value)).collect();
        self.selected_ids.iter().map(|id| by_id[id]).sum()
    }
}

/// Feeds the stream to the policy one arrival at a time and records every
/// decision. The policy is reset first.
pub fn run_policy(
    stream: &RealizedStream,
    policy: &mut dyn OnlinePolicy,
    feasibility: &Feasibility,
    rng: &mut dyn RngCore,
) -> Result<PolicyTrace> {
    policy.reset(rng);
    let mut tracker = FeasibilityTracker::new(feasibility);
    let mut log = Vec::with_capacity(stream.len());
    let mut violations = Vec::new();
    for a in stream.arrivals() {
        let selected = match policy.on_arrival(a, rng) {
            Decision::Skip => false,
            Decision::Select(id) if id == a.id => true,
            Decision::Select(id) => {
                return Err(BsecError::ContractViolation(format!(
                    "policy {} tried to select element {id} while element {} was offered",
                    policy.name(),
                    a.id
                )))
            }
        };
        let accepted = selected && tracker.try_add(a.id, a.size);
        if selected && !accepted {
            violations.push(a.id);
        }
        log.push(DecisionRecord { id: a.id, time: a.time, selected, accepted });
    }
    policy.finish(rng);
    Ok(PolicyTrace { selected_ids: tracker.selected().to_vec(), log, violations, arm: policy.arm(), audit_failures: policy.audit_failures() })
}
