//! Running policies when n is unknown: sampling a guess ñ from a heavy-tailed
//! law over k ≥ 100, or estimating n from the arrivals before t = ½.

use std::f64::consts::LN_2;
use std::sync::{Arc, OnceLock};

use rand::{Rng, RngCore};

use crate::error::Result;
use crate::model::{Arrival, Decision, OnlinePolicy, RealizedStream};

/// Smallest value the guess can take.
pub const N_GUESS_MIN: u64 = 100;
/// Weights up to this k are summed exactly; beyond it the continuous
/// density is used.
pub const N_GUESS_TABLE_MAX: u64 = 1 << 16;

/// a_k = 1/(k·log₂k·(log₂log₂k)²).
pub fn n_guess_weight(k: u64) -> f64 {
    let x = k as f64;
    let l = x.log2();
    let ll = l.log2();
    1.0 / (x * l * ll * ll)
}

/// ∫_K^∞ a(x) dx = (ln 2)² / log₂log₂K.
pub fn n_guess_tail_mass(k: f64) -> f64 {
    LN_2 * LN_2 / k.log2().log2()
}

fn table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut acc = 0.0;
        (N_GUESS_MIN..=N_GUESS_TABLE_MAX)
            .map(|k| {
                acc += n_guess_weight(k);
                acc
            })
            .collect()
    })
}

/// Normalizer Z: exact sum up to the table limit plus the continuous tail.
pub fn n_guess_normalizer() -> f64 {
    table().last().copied().unwrap_or(0.0) + n_guess_tail_mass(N_GUESS_TABLE_MAX as f64)
}

/// Σ a_k over k ∈ (lo, hi] under the same law `sample_n_guess` draws from.
pub fn n_guess_mass(lo: u64, hi: u64) -> f64 {
    let t = table();
    let cum = |k: u64| -> f64 {
        if k < N_GUESS_MIN {
            0.0
        } else if k <= N_GUESS_TABLE_MAX {
            t[(k - N_GUESS_MIN) as usize]
        } else {
            let tail = n_guess_tail_mass(N_GUESS_TABLE_MAX as f64) - n_guess_tail_mass(k as f64);
            t.last().copied().unwrap_or(0.0) + tail
        }
    };
    if hi <= lo {
        0.0
    } else {
        cum(hi) - cum(lo)
    }
}

/// Pr[ñ ∈ (lo, hi]].
pub fn n_guess_probability(lo: u64, hi: u64) -> f64 {
    n_guess_mass(lo, hi) / n_guess_normalizer()
}

/// Draws ñ with Pr[ñ = k] ∝ a_k for k ≥ 100. Past 2^16 the draw comes from
/// the continuous density; values beyond u64 saturate.
pub fn sample_n_guess<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    let t = table();
    let head = t.last().copied().unwrap_or(0.0);
    let z = n_guess_normalizer();
    let x = rng.gen::<f64>() * z;
    if x < head {
        let i = t.partition_point(|&c| c <= x);
        return N_GUESS_MIN + i as u64;
    }
    let u_k = (N_GUESS_TABLE_MAX as f64).log2().log2();
    let v: f64 = rng.gen();
    let u = u_k / (1.0 - v);
    let e = u.exp2();
    if e >= 64.0 {
        return u64::MAX;
    }
    (e.exp2().floor() as u64).max(N_GUESS_TABLE_MAX + 1)
}

/// 2 × the number of arrivals with t < ½.
pub fn estimate_n_first_half(stream: &RealizedStream) -> usize {
    2 * stream.arrivals().iter().filter(|a| a.time < 0.5).count()
}

/// Builds a base policy for a given n.
pub type PolicyBuilder = Arc<dyn Fn(usize) -> Result<Box<dyn OnlinePolicy>> + Send + Sync>;

fn usize_of(n: u64) -> usize {
    usize::try_from(n).unwrap_or(usize::MAX)
}

/// Rebuilds the base every trial with n replaced by a fresh guess ñ.
pub struct GuessN {
    builder: PolicyBuilder,
    label: String,
    base: Option<Box<dyn OnlinePolicy>>,
    guess: u64,
    failure: Option<String>,
}

impl GuessN {
    pub fn new(builder: PolicyBuilder, label: &str) -> Self {
        GuessN { builder, label: label.to_string(), base: None, guess: 0, failure: None }
    }

    pub fn last_guess(&self) -> u64 {
        self.guess
    }
}

impl OnlinePolicy for GuessN {
    fn name(&self) -> String {
        format!("guess_n:{}", self.label)
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        self.guess = sample_n_guess(rng);
        self.failure = None;
        self.base = match (self.builder)(usize_of(self.guess)) {
            Ok(mut b) => {
                b.reset(rng);
                Some(b)
            }
            Err(e) => {
                self.failure = Some(format!("base {} failed for guess {}: {e}", self.label, self.guess));
                None
            }
        };
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        match &mut self.base {
            Some(b) => b.on_arrival(a, rng),
            None => Decision::Skip,
        }
    }

    fn finish(&mut self, rng: &mut dyn RngCore) {
        if let Some(b) = &mut self.base {
            b.finish(rng);
        }
    }

    fn arm(&self) -> Option<String> {
        self.base.as_ref().and_then(|b| b.arm())
    }

    fn is_ordinal(&self) -> bool {
        self.base.as_ref().is_some_and(|b| b.is_ordinal())
    }

    fn audit_failures(&self) -> Vec<String> {
        let mut v: Vec<String> = self.failure.iter().cloned().collect();
        if let Some(b) = &self.base {
            v.extend(b.audit_failures());
        }
        v
    }
}

/// Skips everything before t = ½, then builds the base with n replaced by
/// twice the count seen so far and hands it the remaining arrivals.
pub struct EstimateN {
    builder: PolicyBuilder,
    label: String,
    seen: usize,
    base: Option<Box<dyn OnlinePolicy>>,
    estimate: Option<usize>,
    failure: Option<String>,
}

impl EstimateN {
    pub fn new(builder: PolicyBuilder, label: &str) -> Self {
        EstimateN { builder, label: label.to_string(), seen: 0, base: None, estimate: None, failure: None }
    }

    pub fn last_estimate(&self) -> Option<usize> {
        self.estimate
    }
}

impl OnlinePolicy for EstimateN {
    fn name(&self) -> String {
        format!("estimate_n:{}", self.label)
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) {
        self.seen = 0;
        self.base = None;
        self.estimate = None;
        self.failure = None;
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        if a.time < 0.5 {
            self.seen += 1;
            return Decision::Skip;
        }
        if self.estimate.is_none() {
            let n_hat = (2 * self.seen).max(1);
            self.estimate = Some(n_hat);
            match (self.builder)(n_hat) {
                Ok(mut b) => {
                    b.reset(rng);
                    self.base = Some(b);
                }
                Err(e) => self.failure = Some(format!("base {} failed for estimate {n_hat}: {e}", self.label)),
            }
        }
        match &mut self.base {
            Some(b) => b.on_arrival(a, rng),
            None => Decision::Skip,
        }
    }

    fn finish(&mut self, rng: &mut dyn RngCore) {
        if let Some(b) = &mut self.base {
            b.finish(rng);
        }
    }

    fn arm(&self) -> Option<String> {
        self.base.as_ref().and_then(|b| b.arm())
    }

    fn audit_failures(&self) -> Vec<String> {
        let mut v: Vec<String> = self.failure.iter().cloned().collect();
        if let Some(b) = &self.base {
            v.extend(b.audit_failures());
        }
        v
    }
}
