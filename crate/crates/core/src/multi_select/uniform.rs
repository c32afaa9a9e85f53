//! Constant-competitive selection under a uniform matroid of rank r.

use rand::{Rng, RngCore};

use super::filter::SubsampleFilter;
use crate::error::{BsecError, Result};
use crate::model::{Arrival, Decision, OnlinePolicy};
use crate::single_item::logstar::ceil_log2;
use crate::subroutines::RandomElement;

/// Threshold that doubles on every selection and halves at interval ends,
/// never dropping below its floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoublingThreshold {
    tau: f64,
    floor: f64,
}

impl DoublingThreshold {
    /// Starts at the floor v₀/(2·n·r').
    pub fn new(v0: f64, n: usize, r_prime: usize) -> Self {
        let floor = v0 / (2.0 * n as f64 * r_prime as f64);
        DoublingThreshold { tau: floor, floor }
    }

    pub fn value(&self) -> f64 {
        self.tau
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn on_select(&mut self) {
        self.tau *= 2.0;
    }

    pub fn on_interval_end(&mut self) {
        self.tau = (self.tau / 2.0).max(self.floor);
    }
}

#[derive(Clone, Debug)]
enum UniformArm {
    Random(RandomElement),
    Doubling { v0: f64, threshold: Option<DoublingThreshold>, interval: usize, selected: usize },
}

/// With probability ½ a random element, otherwise the doubling threshold
/// rule on (½, 1] with checkpoints T_i = ½ + i/(2r'), r' = r + ⌈log₂ n⌉.
/// Selects up to r' elements; wrap in [`SubsampleFilter`] to respect rank r.
#[derive(Clone, Debug)]
pub struct DoublingPolicy {
    n: usize,
    r_prime: usize,
    arm: UniformArm,
}

impl DoublingPolicy {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        if r == 0 || n == 0 {
            return Err(BsecError::InvalidParameter(format!("uniform policy needs n, r >= 1, got n = {n}, r = {r}")));
        }
        Ok(DoublingPolicy { n, r_prime: Self::r_prime(n, r), arm: UniformArm::Random(RandomElement::new(n)) })
    }

    pub fn r_prime(n: usize, r: usize) -> usize {
        r + ceil_log2(n as u64) as usize
    }

    pub fn checkpoint(&self, i: usize) -> f64 {
        0.5 + i as f64 / (2.0 * self.r_prime as f64)
    }

    pub fn threshold(&self) -> Option<DoublingThreshold> {
        match &self.arm {
            UniformArm::Doubling { threshold, .. } => *threshold,
            _ => None,
        }
    }

    fn interval_of(&self, t: f64) -> usize {
        if t <= 0.5 {
            return 0;
        }
        (((t - 0.5) * 2.0 * self.r_prime as f64 - 1e-12).ceil() as usize).clamp(1, self.r_prime)
    }
}

impl OnlinePolicy for DoublingPolicy {
    fn name(&self) -> String {
        "doubling".into()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        self.arm = if rng.gen_bool(0.5) {
            let mut r = RandomElement::new(self.n);
            r.reset(rng);
            UniformArm::Random(r)
        } else {
            UniformArm::Doubling { v0: f64::NEG_INFINITY, threshold: None, interval: 0, selected: 0 }
        };
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        let idx = self.interval_of(a.time);
        let (n, r_prime) = (self.n, self.r_prime);
        match &mut self.arm {
            UniformArm::Random(r) => r.on_arrival(a, rng),
            UniformArm::Doubling { v0, threshold, interval, selected } => {
                if idx == 0 {
                    *v0 = v0.max(a.value);
                    return Decision::Skip;
                }
                if v0.is_infinite() {
                    // nothing arrived in the first half
                    return Decision::Skip;
                }
                let th = threshold.get_or_insert_with(|| DoublingThreshold::new(*v0, n, r_prime));
                if *interval == 0 {
                    *interval = 1;
                }
                while *interval < idx {
                    th.on_interval_end();
                    *interval += 1;
                }
                if *selected < r_prime && a.value >= th.value() {
                    th.on_select();
                    *selected += 1;
                    return Decision::take(a);
                }
                Decision::Skip
            }
        }
    }

    fn arm(&self) -> Option<String> {
        Some(
            match self.arm {
                UniformArm::Random(_) => "random",
                UniformArm::Doubling { .. } => "doubling",
            }
            .into(),
        )
    }
}

/// The doubling policy filtered down to rank r.
pub fn uniform_constant(n: usize, r: usize) -> Result<SubsampleFilter<DoublingPolicy>> {
    let base = DoublingPolicy::new(n, r)?;
    let rp = base.r_prime;
    let mut f = SubsampleFilter::new(base, r, rp)?;
    f.set_name("uniform_constant");
    Ok(f)
}
