//! Matroid-constrained policies: partition matroids with per-part level
//! guessing, and a greedy level guess for any matroid behind an oracle.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{BsecError, Result};
use crate::model::{Arrival, Decision, IndependenceOracle, OnlinePolicy, PartitionStructure};
use crate::single_item::logstar::ceil_log2;
use crate::subroutines::RandomElement;

/// ⌈(log₂ n)^{1/i}⌉ for i ≥ 1.
pub fn root_log(n: usize, i: usize) -> u64 {
    let l = (n.max(2) as f64).log2();
    let x = l.powf(1.0 / i as f64);
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// max(1, ⌈log₂⌈log₂ n⌉⌉).
pub fn log_log(n: usize) -> usize {
    (ceil_log2(ceil_log2(n.max(2) as u64)) as usize).max(1)
}

/// Checkpoints T_0 = ½ and T_i = ½ + i/(2·loglog n).
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSchedule {
    n: usize,
    ll: usize,
}

impl PartitionSchedule {
    pub fn new(n: usize) -> Self {
        PartitionSchedule { n, ll: log_log(n) }
    }

    pub fn num_intervals(&self) -> usize {
        self.ll
    }

    pub fn checkpoint(&self, i: usize) -> f64 {
        0.5 + i as f64 / (2.0 * self.ll as f64)
    }

    /// 0 for [0, ½], i for (T_{i−1}, T_i].
    pub fn interval_of(&self, t: f64) -> usize {
        if t <= 0.5 {
            return 0;
        }
        (((t - 0.5) * 2.0 * self.ll as f64 - 1e-12).ceil() as usize).clamp(1, self.ll)
    }

    /// log^{1/i} n.
    pub fn lambda(&self, i: usize) -> u64 {
        root_log(self.n, i)
    }

    /// v·λ_i/2^j, the arm (ii) floor for level j.
    pub fn level_floor(&self, v: f64, i: usize, j: u64) -> f64 {
        v * self.lambda(i) as f64 * (-(j as f64)).exp2()
    }

    pub fn num_levels(&self, i: usize) -> u64 {
        4 * self.lambda(i)
    }
}

#[derive(Clone, Debug)]
struct SubPart {
    interval: usize,
    level: u64,
    /// max seen in this sub-part per interval
    interval_max: Vec<f64>,
    done: bool,
}

#[derive(Clone, Debug)]
enum PartitionArm {
    Random(RandomElement),
    Levels,
    Jump,
}

/// The partition-matroid policy. Each part of capacity r_p is split at
/// random into r_p sub-parts of capacity one at the start of every trial.
#[derive(Clone, Debug)]
pub struct PartitionPolicy {
    structure: PartitionStructure,
    schedule: PartitionSchedule,
    n: usize,
    arm: PartitionArm,
    /// refined sub-part of each element id
    refined: Vec<usize>,
    offsets: Vec<usize>,
    subs: Vec<SubPart>,
    v0: f64,
    jump_prob: f64,
}

impl PartitionPolicy {
    pub fn new(structure: PartitionStructure, n: usize) -> Result<Self> {
        if structure.num_elements() != n {
            return Err(BsecError::InvalidParameter(format!(
                "partition covers {} elements but n = {n}",
                structure.num_elements()
            )));
        }
        let mut offsets = Vec::with_capacity(structure.num_parts() + 1);
        let mut total = 0;
        for p in 0..structure.num_parts() {
            offsets.push(total);
            total += structure.capacity(p);
        }
        offsets.push(total);
        Ok(PartitionPolicy {
            schedule: PartitionSchedule::new(n),
            n,
            arm: PartitionArm::Levels,
            refined: vec![0; n],
            offsets,
            subs: Vec::new(),
            structure,
            v0: f64::NEG_INFINITY,
            jump_prob: 0.01,
        })
    }

    pub fn schedule(&self) -> &PartitionSchedule {
        &self.schedule
    }

    pub fn structure(&self) -> &PartitionStructure {
        &self.structure
    }

    /// Refined sub-part of element `id` in the current trial.
    pub fn refined_part(&self, id: usize) -> usize {
        self.refined[id]
    }

    /// Original part owning refined sub-part `sub`.
    pub fn parent_part(&self, sub: usize) -> usize {
        self.offsets.partition_point(|&o| o <= sub) - 1
    }

    /// Forces the arm (0, 1 or 2) for the current trial.
    pub fn force_arm(&mut self, arm: usize, rng: &mut dyn RngCore) {
        self.start(arm, rng);
    }

    fn start(&mut self, arm: usize, rng: &mut dyn RngCore) {
        for id in 0..self.n {
            let p = self.structure.part_of(id);
            self.refined[id] = self.offsets[p] + rng.gen_range(0..self.structure.capacity(p));
        }
        let ll = self.schedule.num_intervals();
        let total = *self.offsets.last().unwrap_or(&0);
        self.subs = (0..total)
            .map(|_| {
                let i = rng.gen_range(1..=ll);
                let level = rng.gen_range(1..=self.schedule.num_levels(i));
                SubPart { interval: i, level, interval_max: vec![f64::NEG_INFINITY; ll + 1], done: false }
            })
            .collect();
        self.v0 = f64::NEG_INFINITY;
        self.arm = match arm {
            0 => {
                let mut r = RandomElement::new(self.n);
                r.reset(rng);
                PartitionArm::Random(r)
            }
            1 => PartitionArm::Levels,
            _ => PartitionArm::Jump,
        };
    }
}

impl OnlinePolicy for PartitionPolicy {
    fn name(&self) -> String {
        "partition".into()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        let arm = rng.gen_range(0..3);
        self.start(arm, rng);
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        let k = self.schedule.interval_of(a.time);
        if k == 0 {
            self.v0 = self.v0.max(a.value);
        }
        let sub_id = self.refined[a.id];
        let prev_max = {
            let sub = &mut self.subs[sub_id];
            let m = sub.interval_max[k];
            sub.interval_max[k] = m.max(a.value);
            m
        };
        if let PartitionArm::Random(r) = &mut self.arm {
            return r.on_arrival(a, rng);
        }
        let v0 = self.v0;
        let sched = &self.schedule;
        let sub = &mut self.subs[sub_id];
        if sub.done || k == 0 || k != sub.interval {
            return Decision::Skip;
        }
        let take = match self.arm {
            PartitionArm::Levels => {
                let base = if k == 1 { v0 } else { sub.interval_max[k - 1] };
                base > 0.0 && a.value > sched.level_floor(base, k, sub.level)
            }
            PartitionArm::Jump => {
                let factor = (sched.lambda(k) as f64).exp2();
                a.value > factor * prev_max.max(0.0) && rng.gen_bool(self.jump_prob)
            }
            PartitionArm::Random(_) => unreachable!(),
        };
        if take {
            sub.done = true;
            return Decision::take(a);
        }
        Decision::Skip
    }

    fn arm(&self) -> Option<String> {
        Some(
            match self.arm {
                PartitionArm::Random(_) => "random",
                PartitionArm::Levels => "levels",
                PartitionArm::Jump => "jump",
            }
            .into(),
        )
    }
}

pub fn partition_policy(structure: PartitionStructure, n: usize) -> Result<PartitionPolicy> {
    PartitionPolicy::new(structure, n)
}

#[derive(Clone, Debug)]
enum MatroidArm {
    Random(RandomElement),
    Greedy { v: f64, level: i64 },
}

/// With probability 1/n a random element; otherwise observe the max v of
/// the first half, guess one of 2·⌈log₂(n·r)⌉ levels [v·2^{−j}, v·2^{1−j})
/// and greedily take independent arrivals at or above it.
pub struct GeneralMatroidPolicy {
    oracle: Arc<dyn IndependenceOracle>,
    n: usize,
    half_levels: i64,
    arm: MatroidArm,
    selected: Vec<usize>,
    failures: Vec<String>,
}

impl GeneralMatroidPolicy {
    pub fn new(oracle: Arc<dyn IndependenceOracle>, n: usize) -> Result<Self> {
        if n == 0 || oracle.rank() == 0 {
            return Err(BsecError::InvalidParameter("general matroid policy needs n >= 1 and rank >= 1".into()));
        }
        let half_levels = ceil_log2((n * oracle.rank()) as u64).max(1) as i64;
        Ok(GeneralMatroidPolicy {
            oracle,
            n,
            half_levels,
            arm: MatroidArm::Random(RandomElement::new(n)),
            selected: Vec::new(),
            failures: Vec::new(),
        })
    }

    /// Number of levels, 2·⌈log₂(n·r)⌉.
    pub fn num_levels(&self) -> usize {
        2 * self.half_levels as usize
    }

    /// Lower end of level j ∈ (−K, K]: v·2^{−j}.
    pub fn level_floor(v: f64, j: i64) -> f64 {
        v * (-(j as f64)).exp2()
    }

    /// Forces the greedy arm at level j.
    pub fn force_greedy(&mut self, level: i64) {
        self.arm = MatroidArm::Greedy { v: f64::NEG_INFINITY, level };
        self.selected.clear();
        self.failures.clear();
    }

    pub fn oracle_name(&self) -> String {
        self.oracle.name()
    }
}

impl OnlinePolicy for GeneralMatroidPolicy {
    fn name(&self) -> String {
        format!("general_matroid:{}", self.oracle.name())
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        self.selected.clear();
        self.failures.clear();
        self.arm = if rng.gen_range(0..self.n) == 0 {
            let mut r = RandomElement::new(self.n);
            r.reset(rng);
            MatroidArm::Random(r)
        } else {
            let k = self.half_levels;
            MatroidArm::Greedy { v: f64::NEG_INFINITY, level: rng.gen_range(-k + 1..=k) }
        };
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        if !self.failures.is_empty() {
            return Decision::Skip;
        }
        let (v, level) = match &mut self.arm {
            MatroidArm::Random(r) => return r.on_arrival(a, rng),
            MatroidArm::Greedy { v, level } => {
                if a.time <= 0.5 {
                    *v = v.max(a.value);
                    return Decision::Skip;
                }
                (*v, *level)
            }
        };
        if !(v > 0.0) || a.value < Self::level_floor(v, level) {
            return Decision::Skip;
        }
        let mut cand = self.selected.clone();
        cand.push(a.id);
        if !self.oracle.is_independent(&cand) {
            return Decision::Skip;
        }
        // downward closure spot check on the accepted set
        for drop in 0..cand.len() {
            let sub: Vec<usize> = cand.iter().enumerate().filter(|&(k, _)| k != drop).map(|(_, &e)| e).collect();
            if !self.oracle.is_independent(&sub) {
                self.failures.push(format!(
                    "oracle {} accepted {:?} but rejected its subset {:?}",
                    self.oracle.name(),
                    cand,
                    sub
                ));
                return Decision::Skip;
            }
        }
        self.selected.push(a.id);
        Decision::take(a)
    }

    fn arm(&self) -> Option<String> {
        Some(
            match self.arm {
                MatroidArm::Random(_) => "random",
                MatroidArm::Greedy { .. } => "greedy",
            }
            .into(),
        )
    }

    fn audit_failures(&self) -> Vec<String> {
        self.failures.clone()
    }
}

pub fn general_matroid_policy(oracle: Arc<dyn IndependenceOracle>, n: usize) -> Result<GeneralMatroidPolicy> {
    GeneralMatroidPolicy::new(oracle, n)
}
