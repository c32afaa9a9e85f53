//! Value maximization with iterated-logarithm checkpoints.

use rand::{Rng, RngCore};

use crate::error::{BsecError, Result};
use crate::model::{Arrival, Decision, OnlinePolicy};
use crate::subroutines::{IntervalWindow, RandomElement, TwoCheckpoints};

/// ⌈log₂ x⌉ for x ≥ 1.
pub fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// Iterated logs with ceiling: `[n, ⌈log₂ n⌉, ⌈log₂⌈log₂ n⌉⌉, ..., 1]`.
pub fn iterated_logs(n: u64) -> Vec<u64> {
    let mut out = vec![n];
    let mut x = n;
    while x > 1 {
        x = ceil_log2(x);
        out.push(x);
    }
    out
}

/// Number of log applications until the value is at most 1.
pub fn log_star(n: u64) -> usize {
    iterated_logs(n).len() - 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogStarSchedule {
    log_star: usize,
    logs: Vec<u64>,
    checkpoints: Vec<f64>,
}

impl LogStarSchedule {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(BsecError::InvalidParameter(format!("log* schedule needs n >= 4, got {n}")));
        }
        let logs = iterated_logs(n as u64);
        let ls = logs.len() - 1;
        let checkpoints = (0..=ls).map(|i| 0.5 + i as f64 / (4.0 * ls as f64)).collect();
        Ok(LogStarSchedule { log_star: ls, logs, checkpoints })
    }

    pub fn log_star(&self) -> usize {
        self.log_star
    }

    /// log^(i) n.
    pub fn iter_log(&self, i: usize) -> u64 {
        self.logs[i]
    }

    /// T_i for i ∈ [0..log* n].
    pub fn checkpoint(&self, i: usize) -> f64 {
        self.checkpoints[i]
    }

    pub fn checkpoints(&self) -> &[f64] {
        &self.checkpoints
    }

    /// Interval index of time t: 0 for [0, ½], i for (T_{i-1}, T_i], and
    /// log* n + 1 for the tail.
    pub fn interval_of(&self, t: f64) -> usize {
        self.checkpoints.iter().position(|&c| t <= c).unwrap_or(self.log_star + 1)
    }

    /// v · log^(i) n / 2^s.
    pub fn scaled_threshold(&self, v: f64, i: usize, s: u64) -> f64 {
        v * self.logs[i] as f64 * (-(s as f64)).exp2()
    }
}

#[derive(Clone, Debug)]
enum LogStarArm {
    Random(RandomElement),
    Window(TwoCheckpoints),
    Scaled { i: usize, s: u64, v_i: f64, tau: Option<f64>, done: bool },
}

/// Picks one of three rules uniformly at random per trial: a random element,
/// a two-checkpoint rule on the first half of a random interval, or a scaled
/// threshold built from the max of a random interval.
#[derive(Clone, Debug)]
pub struct ValueMaxLogStar {
    n: usize,
    schedule: LogStarSchedule,
    arm: LogStarArm,
}

impl ValueMaxLogStar {
    pub fn new(n: usize) -> Result<Self> {
        Ok(ValueMaxLogStar { n, schedule: LogStarSchedule::new(n)?, arm: LogStarArm::Random(RandomElement::new(n)) })
    }

    pub fn schedule(&self) -> &LogStarSchedule {
        &self.schedule
    }

    /// Threshold of the scaled arm once fixed, as (i, s, τ).
    pub fn scaled_threshold(&self) -> Option<(usize, u64, f64)> {
        match &self.arm {
            LogStarArm::Scaled { i, s, tau: Some(t), .. } => Some((*i, *s, *t)),
            _ => None,
        }
    }

    /// Observed interval max of the scaled arm (−∞ before any arrival).
    pub fn scaled_interval_max(&self) -> Option<f64> {
        match &self.arm {
            LogStarArm::Scaled { v_i, .. } => Some(*v_i),
            _ => None,
        }
    }
}

pub fn value_max_logstar(n: usize) -> Result<ValueMaxLogStar> {
    ValueMaxLogStar::new(n)
}

impl OnlinePolicy for ValueMaxLogStar {
    fn name(&self) -> String {
        "value_logstar".into()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        let ls = self.schedule.log_star();
        self.arm = match rng.gen_range(0..3) {
            0 => {
                let mut r = RandomElement::new(self.n);
                r.reset(rng);
                LogStarArm::Random(r)
            }
            1 => {
                let i = rng.gen_range(1..=ls);
                let lo = self.schedule.checkpoint(i - 1);
                let hi = 0.5 * (lo + self.schedule.checkpoint(i));
                let w = IntervalWindow::new(lo, hi).expect("checkpoints increase");
                LogStarArm::Window(TwoCheckpoints::new(w))
            }
            _ => {
                let i = rng.gen_range(0..=ls);
                let s = rng.gen_range(0..=2 * self.schedule.iter_log(i));
                LogStarArm::Scaled { i, s, v_i: f64::NEG_INFINITY, tau: None, done: false }
            }
        };
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        let interval = self.schedule.interval_of(a.time);
        match &mut self.arm {
            LogStarArm::Random(r) => r.on_arrival(a, rng),
            LogStarArm::Window(w) => w.on_arrival(a, rng),
            LogStarArm::Scaled { i, s, v_i, tau, done } => {
                if *done {
                    return Decision::Skip;
                }
                if interval == *i {
                    *v_i = v_i.max(a.value);
                    return Decision::Skip;
                }
                if interval < *i {
                    return Decision::Skip;
                }
                if v_i.is_infinite() {
                    // nothing arrived in I_i
                    *done = true;
                    return Decision::Skip;
                }
                let t = *tau.get_or_insert_with(|| self.schedule.scaled_threshold(*v_i, *i, *s));
                if a.value >= t {
                    *done = true;
                    return Decision::take(a);
                }
                Decision::Skip
            }
        }
    }

    fn arm(&self) -> Option<String> {
        Some(
            match self.arm {
                LogStarArm::Random(_) => "random",
                LogStarArm::Window(_) => "two_checkpoint",
                LogStarArm::Scaled { .. } => "scaled_max",
            }
            .into(),
        )
    }
}
