//! Knapsack selection with cascading per-density budgets, assuming the
//! benchmark is known up to a polynomial factor.

use rand::{Rng, RngCore};

use crate::error::{BsecError, Result};
use crate::model::{Arrival, Decision, OnlinePolicy};

/// Geometric density grid ρ_ℓ = n^{c+1}/(1+ε)^ℓ for ℓ ∈ [0, L).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityLevels {
    rho0: f64,
    ln_step: f64,
    count: usize,
}

impl DensityLevels {
    pub fn new(n: usize, c: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(BsecError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if n < 2 {
            return Err(BsecError::InvalidParameter(format!("density levels need n >= 2, got {n}")));
        }
        let count = 1 + (((c + 3.0) / epsilon) * (n as f64).log2()).ceil() as usize;
        Ok(DensityLevels { rho0: (n as f64).powf(c + 1.0), ln_step: epsilon.ln_1p(), count })
    }

    /// L.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn rho(&self, level: usize) -> f64 {
        self.rho0 * (-(level as f64) * self.ln_step).exp()
    }

    /// ℓ with density ∈ (ρ_{ℓ+1}, ρ_ℓ]. Densities above ρ_0 map to 0; `None`
    /// when the density is below the last level.
    pub fn level(&self, density: f64) -> Option<usize> {
        if !(density > 0.0) {
            return None;
        }
        if density >= self.rho0 {
            return Some(0);
        }
        let mut l = ((self.rho0 / density).ln() / self.ln_step).floor().max(0.0) as usize;
        if l > 0 && density > self.rho(l) {
            l -= 1;
        } else if density <= self.rho(l + 1) {
            l += 1;
        }
        (l < self.count).then_some(l)
    }
}

/// Explicit constants behind the asymptotic parameter choices.
#[derive(Clone, Debug, PartialEq)]
pub struct KnapsackParams {
    pub n: usize,
    pub capacity: f64,
    pub epsilon: f64,
    pub c: f64,
    /// Interval length; default 1/⌈10·L/ε⌉.
    pub delta: Option<f64>,
    /// Dedicated budget per level; default ⌈10·L·ln(L/ε)/ε³⌉.
    pub dedicated: Option<f64>,
    /// Online rejection probability; default 2ε.
    pub reject_prob: Option<f64>,
    /// The schedule runs on [start_time, 1]; earlier arrivals are skipped.
    pub start_time: f64,
    /// Multiplier applied to every value before levelling.
    pub value_scale: f64,
}

impl KnapsackParams {
    pub fn new(n: usize, capacity: f64, epsilon: f64) -> Self {
        KnapsackParams {
            n,
            capacity,
            epsilon,
            c: 1.0,
            delta: None,
            dedicated: None,
            reject_prob: None,
            start_time: 0.0,
            value_scale: 1.0,
        }
    }

    pub fn levels(&self) -> Result<DensityLevels> {
        DensityLevels::new(self.n, self.c, self.epsilon)
    }

    fn big_l(&self) -> f64 {
        self.levels().map(|l| l.count() as f64).unwrap_or(1.0)
    }

    pub fn resolved_delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| 1.0 / (10.0 * self.big_l() / self.epsilon).ceil())
    }

    pub fn resolved_dedicated(&self) -> f64 {
        let l = self.big_l();
        self.dedicated.unwrap_or_else(|| (10.0 * l * (l / self.epsilon).ln() / self.epsilon.powi(3)).ceil())
    }

    pub fn resolved_reject_prob(&self) -> f64 {
        self.reject_prob.unwrap_or(2.0 * self.epsilon)
    }

    /// ⌈10·L²·ln(L/ε)/ε⁴⌉.
    pub fn capacity_floor(&self) -> f64 {
        let l = self.big_l();
        (10.0 * l * l * (l / self.epsilon).ln() / self.epsilon.powi(4)).ceil()
    }

    pub fn num_intervals(&self) -> usize {
        (1.0 / self.resolved_delta() - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(BsecError::InvalidParameter(format!("epsilon must lie in (0,1), got {}", self.epsilon)));
        }
        let delta = self.resolved_delta();
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(BsecError::InvalidParameter(format!("delta must lie in (0,1], got {delta}")));
        }
        if !(self.capacity > 0.0) {
            return Err(BsecError::InvalidParameter(format!("capacity must be positive, got {}", self.capacity)));
        }
        if !(self.resolved_dedicated() >= 0.0) {
            return Err(BsecError::InvalidParameter("dedicated budget must be non-negative".into()));
        }
        let p = self.resolved_reject_prob();
        if !(0.0..1.0).contains(&p) {
            return Err(BsecError::InvalidParameter(format!("reject probability must lie in [0,1), got {p}")));
        }
        if !(0.0..1.0).contains(&self.start_time) || !(self.value_scale > 0.0) {
            return Err(BsecError::InvalidParameter("start_time must lie in [0,1) and value_scale be positive".into()));
        }
        self.levels()?;
        Ok(())
    }
}

/// Snapshot of one closed interval.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalRecord {
    pub interval: usize,
    /// B_{ℓ,i} at the start of the interval.
    pub budget: Vec<f64>,
    /// C_{ℓ,i}, capped at the budget.
    pub consumed: Vec<f64>,
}

impl IntervalRecord {
    pub fn remaining(&self, level: usize) -> f64 {
        self.budget[level] - self.consumed[level]
    }
}

/// Where a selection was charged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Charge {
    Cascading(usize),
    Dedicated(usize),
}

/// Cascading and dedicated budgets for one trial plus the running audits.
#[derive(Clone, Debug)]
pub struct BudgetLedger {
    per_interval: f64,
    num_intervals: usize,
    interval: usize,
    budget: Vec<f64>,
    consumed: Vec<f64>,
    dedicated: Vec<f64>,
    /// levels below `lo` and above `hi` carry no cascading budget
    lo: usize,
    hi: usize,
    min_declined: Option<usize>,
    record: bool,
    history: Vec<IntervalRecord>,
    failures: Vec<String>,
}

const AUDIT_TOL: f64 = 1e-9;
/// Balances at or below this count as exhausted.
const POS_TOL: f64 = 1e-12;
const MAX_AUDIT_MESSAGES: usize = 8;

impl BudgetLedger {
    pub fn new(levels: usize, per_interval: f64, num_intervals: usize, dedicated: f64) -> Self {
        let mut budget = vec![0.0; levels];
        budget[0] = per_interval;
        BudgetLedger {
            per_interval,
            num_intervals,
            interval: 1,
            budget,
            consumed: vec![0.0; levels],
            dedicated: vec![dedicated; levels],
            lo: 0,
            hi: 0,
            min_declined: None,
            record: false,
            history: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Keep a full per-interval history (memory L × intervals).
    pub fn with_history(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn levels(&self) -> usize {
        self.budget.len()
    }

    pub fn interval(&self) -> usize {
        self.interval
    }

    pub fn budget(&self, level: usize) -> f64 {
        self.budget[level]
    }

    pub fn consumed(&self, level: usize) -> f64 {
        self.consumed[level]
    }

    pub fn remaining(&self, level: usize) -> f64 {
        self.budget[level] - self.consumed[level]
    }

    pub fn dedicated_remaining(&self, level: usize) -> f64 {
        self.dedicated[level]
    }

    pub fn history(&self) -> &[IntervalRecord] {
        &self.history
    }

    pub fn audit_failures(&self) -> &[String] {
        &self.failures
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < MAX_AUDIT_MESSAGES {
            self.failures.push(msg);
        }
    }

    /// B_{ℓ,i} = C_{ℓ,i−1} + R_{ℓ−1,i−1}; the last level also keeps its own
    /// remainder so the total stays δK.
    pub fn next_budgets(budget: &[f64], consumed: &[f64]) -> Vec<f64> {
        let l = budget.len();
        let mut next = vec![0.0; l];
        for i in 0..l {
            let carried = if i > 0 { budget[i - 1] - consumed[i - 1] } else { 0.0 };
            next[i] = consumed[i] + carried;
        }
        next[l - 1] += budget[l - 1] - consumed[l - 1];
        next
    }

    fn close_interval(&mut self) {
        let top = self.budget.len() - 1;
        if let Some(d) = self.min_declined {
            for l in d.max(self.lo)..=self.hi {
                if self.remaining(l) > AUDIT_TOL {
                    let msg = format!(
                        "interval {}: level {} declined while level {} kept {:.3e} cascading budget",
                        self.interval,
                        d,
                        l,
                        self.remaining(l)
                    );
                    self.fail(msg);
                    break;
                }
            }
        }
        if self.record {
            self.history.push(IntervalRecord {
                interval: self.interval,
                budget: self.budget.clone(),
                consumed: self.consumed.clone(),
            });
        }
        let hi_next = (self.hi + 1).min(top);
        let mut carried = 0.0;
        let (mut new_lo, mut new_hi) = (usize::MAX, 0);
        for l in self.lo..=hi_next {
            let (b, c) = (self.budget[l], self.consumed[l]);
            let mut nb = c + carried;
            carried = b - c;
            if l == top {
                nb += carried;
            }
            self.budget[l] = nb;
            self.consumed[l] = 0.0;
            if nb > POS_TOL {
                new_lo = new_lo.min(l);
                new_hi = l;
            }
        }
        if new_lo == usize::MAX {
            new_lo = self.lo;
            new_hi = self.lo;
        }
        for l in self.lo..new_lo {
            self.budget[l] = 0.0;
        }
        self.lo = new_lo;
        self.hi = new_hi;
        self.interval += 1;
        self.min_declined = None;
        let total: f64 = self.budget.iter().sum();
        if (total - self.per_interval).abs() > AUDIT_TOL * self.per_interval.max(1.0) {
            let msg = format!("interval {}: cascading total {total} differs from {}", self.interval, self.per_interval);
            self.fail(msg);
        }
    }

    /// Closes intervals until `interval` is current.
    pub fn advance_to(&mut self, interval: usize) {
        let target = interval.min(self.num_intervals);
        while self.interval < target {
            self.close_interval();
        }
    }

    /// Closes every interval including the last one.
    pub fn finish(&mut self) {
        self.advance_to(self.num_intervals);
        if self.interval == self.num_intervals {
            self.close_interval();
        }
    }

    /// Charges the smallest level ℓ' ≥ `level` with positive remaining
    /// cascading budget, else the dedicated budget at `level`.
    pub fn charge(&mut self, level: usize, size: f64) -> Option<Charge> {
        for l in level.max(self.lo)..=self.hi {
            let r = self.remaining(l);
            if r > POS_TOL {
                self.consumed[l] += size.min(r);
                return Some(Charge::Cascading(l));
            }
        }
        self.min_declined = Some(self.min_declined.map_or(level, |d| d.min(level)));
        if self.dedicated[level] > POS_TOL {
            self.dedicated[level] -= size;
            return Some(Charge::Dedicated(level));
        }
        None
    }

    /// Records a full decline; the dedicated budget at that level must be
    /// exhausted.
    fn audit_decline(&mut self, level: usize) {
        if self.dedicated[level] > POS_TOL {
            let msg = format!("level {level} declined with dedicated budget {} left", self.dedicated[level]);
            self.fail(msg);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnapsackStats {
    pub auto_selected: usize,
    pub cascading: usize,
    pub dedicated: usize,
    pub declined: usize,
    pub dropped_low_value: usize,
    pub rejected: usize,
}

/// The cascading-budget policy. Values are multiplied by `value_scale` and
/// should then put the benchmark in [1, n^c].
#[derive(Clone, Debug)]
pub struct KnapsackCore {
    params: KnapsackParams,
    levels: DensityLevels,
    delta: f64,
    reject_prob: f64,
    ledger: BudgetLedger,
    stats: KnapsackStats,
    record: bool,
}

impl KnapsackCore {
    pub fn new(params: KnapsackParams) -> Result<Self> {
        params.validate()?;
        let levels = params.levels()?;
        let delta = params.resolved_delta();
        if params.capacity < params.capacity_floor() {
            log::warn!(
                "knapsack capacity {} is below the configured floor {}; guarantees are not promised",
                params.capacity,
                params.capacity_floor()
            );
        }
        let ledger =
            BudgetLedger::new(levels.count(), delta * params.capacity, params.num_intervals(), params.resolved_dedicated());
        Ok(KnapsackCore { reject_prob: params.resolved_reject_prob(), params, levels, delta, ledger, stats: KnapsackStats::default(), record: false })
    }

    /// Record the full per-interval ledger history in every trial.
    pub fn with_history(mut self) -> Self {
        self.record = true;
        self.ledger = self.ledger.with_history();
        self
    }

    pub fn params(&self) -> &KnapsackParams {
        &self.params
    }

    pub fn levels(&self) -> &DensityLevels {
        &self.levels
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn stats(&self) -> &KnapsackStats {
        &self.stats
    }

    /// 1-based interval of time t on the shifted schedule.
    pub fn interval_of(&self, t: f64) -> usize {
        let s = (t - self.params.start_time) / (1.0 - self.params.start_time);
        ((s / self.delta - 1e-12).ceil().max(1.0) as usize).min(self.params.num_intervals())
    }

    fn fresh_ledger(&self) -> BudgetLedger {
        let l = BudgetLedger::new(
            self.levels.count(),
            self.delta * self.params.capacity,
            self.params.num_intervals(),
            self.params.resolved_dedicated(),
        );
        if self.record {
            l.with_history()
        } else {
            l
        }
    }

    /// The internal rule without the online rejection step.
    pub fn consider(&mut self, a: &Arrival) -> bool {
        if a.time < self.params.start_time {
            return false;
        }
        let n = self.params.n as f64;
        self.ledger.advance_to(self.interval_of(a.time));
        if a.size <= 1.0 / n {
            self.stats.auto_selected += 1;
            return true;
        }
        let v = a.value * self.params.value_scale;
        if v < 1.0 / (n * n) {
            self.stats.dropped_low_value += 1;
            return false;
        }
        let Some(level) = self.levels.level(v / a.size) else {
            self.stats.dropped_low_value += 1;
            return false;
        };
        match self.ledger.charge(level, a.size) {
            Some(Charge::Cascading(_)) => {
                self.stats.cascading += 1;
                true
            }
            Some(Charge::Dedicated(_)) => {
                self.stats.dedicated += 1;
                true
            }
            None => {
                self.stats.declined += 1;
                self.ledger.audit_decline(level);
                false
            }
        }
    }
}

pub fn knapsack_core(params: KnapsackParams) -> Result<KnapsackCore> {
    KnapsackCore::new(params)
}

impl OnlinePolicy for KnapsackCore {
    fn name(&self) -> String {
        "knapsack_core".into()
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) {
        self.ledger = self.fresh_ledger();
        self.stats = KnapsackStats::default();
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        if !self.consider(a) {
            return Decision::Skip;
        }
        if self.reject_prob > 0.0 && rng.gen_bool(self.reject_prob) {
            self.stats.rejected += 1;
            return Decision::Skip;
        }
        Decision::take(a)
    }

    fn finish(&mut self, _rng: &mut dyn RngCore) {
        self.ledger.finish();
    }

    fn audit_failures(&self) -> Vec<String> {
        self.ledger.audit_failures().to_vec()
    }
}
