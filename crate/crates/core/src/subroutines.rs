//! Building-block single-item policies: uniform random element, the two
//! checkpoint threshold rule and classical Dynkin.

use rand::{Rng, RngCore};

use crate::error::{BsecError, Result};
use crate::model::{Arrival, Decision, OnlinePolicy};

/// Picks k ~ U[1..n] at reset and selects the k-th arrival.
#[derive(Clone, Debug)]
pub struct RandomElement {
    n: usize,
    k: usize,
    seen: usize,
}

impl RandomElement {
    pub fn new(n: usize) -> Self {
        RandomElement { n: n.max(1), k: 1, seen: 0 }
    }

    pub fn target(&self) -> usize {
        self.k
    }
}

pub fn select_random_element(n: usize) -> RandomElement {
    RandomElement::new(n)
}

impl OnlinePolicy for RandomElement {
    fn name(&self) -> String {
        "random".into()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        self.k = rng.gen_range(1..=self.n);
        self.seen = 0;
    }

    fn on_arrival(&mut self, a: &Arrival, _rng: &mut dyn RngCore) -> Decision {
        self.seen += 1;
        if self.seen == self.k {
            Decision::take(a)
        } else {
            Decision::Skip
        }
    }

    fn finish(&mut self, _rng: &mut dyn RngCore) {
        if self.seen < self.k {
            log::debug!("random element: stream of {} ended before index {}", self.seen, self.k);
        }
    }

    fn is_ordinal(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalWindow {
    t1: f64,
    t2: f64,
}

impl IntervalWindow {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(0.0 <= t1 && t1 < t2 && t2 <= 1.0) {
            return Err(BsecError::InvalidParameter(format!("window [{t1}, {t2}] must satisfy 0 <= T1 < T2 <= 1")));
        }
        Ok(IntervalWindow { t1, t2 })
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }
}

/// Ignores arrivals before T1, records the max value τ seen in [T1, T2]
/// and after T2 selects the first value ≥ τ (anything, if the window was
/// empty).
#[derive(Clone, Debug)]
pub struct TwoCheckpoints {
    window: IntervalWindow,
    tau: f64,
    done: bool,
}

impl TwoCheckpoints {
    pub fn new(window: IntervalWindow) -> Self {
        TwoCheckpoints { window, tau: f64::NEG_INFINITY, done: false }
    }

    pub fn threshold(&self) -> f64 {
        self.tau
    }
}

pub fn two_checkpoints(window: IntervalWindow) -> TwoCheckpoints {
    TwoCheckpoints::new(window)
}

impl OnlinePolicy for TwoCheckpoints {
    fn name(&self) -> String {
        format!("two_checkpoint:{},{}", self.window.t1, self.window.t2)
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) {
        self.tau = f64::NEG_INFINITY;
        self.done = false;
    }

    fn on_arrival(&mut self, a: &Arrival, _rng: &mut dyn RngCore) -> Decision {
        if self.done || a.time < self.window.t1 {
            return Decision::Skip;
        }
        if a.time <= self.window.t2 {
            self.tau = self.tau.max(a.value);
            return Decision::Skip;
        }
        if a.value >= self.tau {
            self.done = true;
            return Decision::take(a);
        }
        Decision::Skip
    }

    fn is_ordinal(&self) -> bool {
        true
    }
}

/// Observes the first ⌈n/e⌉ arrivals, then takes the first arrival that beats
/// everything seen so far.
#[derive(Clone, Debug)]
pub struct Dynkin {
    n: usize,
    cutoff: usize,
    seen: usize,
    best: f64,
    done: bool,
}

impl Dynkin {
    pub fn new(n: usize) -> Self {
        let cutoff = (n as f64 / std::f64::consts::E).ceil() as usize;
        Dynkin { n, cutoff, seen: 0, best: f64::NEG_INFINITY, done: false }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }
}

pub fn dynkin(n: usize) -> Dynkin {
    Dynkin::new(n)
}

impl OnlinePolicy for Dynkin {
    fn name(&self) -> String {
        format!("dynkin(n={})", self.n)
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) {
        self.seen = 0;
        self.best = f64::NEG_INFINITY;
        self.done = false;
    }

    fn on_arrival(&mut self, a: &Arrival, _rng: &mut dyn RngCore) -> Decision {
        self.seen += 1;
        if self.done {
            return Decision::Skip;
        }
        let record = a.value > self.best;
        self.best = self.best.max(a.value);
        if self.seen > self.cutoff && record {
            self.done = true;
            return Decision::take(a);
        }
        Decision::Skip
    }

    fn is_ordinal(&self) -> bool {
        true
    }
}
