//! The two-blue model: values are a permutation of 1..=n, n−2 reds keep a
//! fixed relative order π and two blues b₁ > b₂ are inserted at uniformly
//! random positions. Success means selecting a value ≥ b₂.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{BsecError, Result};
use crate::model::{Arrival, Color, Decision, OnlinePolicy, RealizedStream};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoBlueState {
    pub pi: Vec<u32>,
    pub b1: u32,
    pub b2: u32,
}

impl TwoBlueState {
    pub fn new(pi: Vec<u32>, b1: u32, b2: u32) -> Result<Self> {
        let s = TwoBlueState { pi, b1, b2 };
        s.validate()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.pi.len() + 2
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n() as u32;
        if self.b1 <= self.b2 {
            return Err(BsecError::InvalidInstance(format!("b1 = {} must exceed b2 = {}", self.b1, self.b2)));
        }
        let mut seen = vec![false; n as usize + 1];
        for &v in self.pi.iter().chain([&self.b1, &self.b2]) {
            if v == 0 || v > n || seen[v as usize] {
                return Err(BsecError::InvalidInstance(format!("value {v} breaks the permutation of 1..={n}")));
            }
            seen[v as usize] = true;
        }
        Ok(())
    }

    /// Sequence with b₁ at `pos_b1` and b₂ at `pos_b2` (distinct positions).
    pub fn realize_at(&self, pos_b1: usize, pos_b2: usize) -> Vec<u32> {
        let n = self.n();
        let mut out = Vec::with_capacity(n);
        let mut reds = self.pi.iter();
        for p in 0..n {
            if p == pos_b1 {
                out.push(self.b1);
            } else if p == pos_b2 {
                out.push(self.b2);
            } else {
                out.push(*reds.next().expect("n - 2 reds"));
            }
        }
        out
    }

    /// Uniformly random ordered pair of distinct positions for (b₁, b₂).
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<u32>, usize, usize) {
        let n = self.n();
        let p1 = rng.gen_range(0..n);
        let mut p2 = rng.gen_range(0..n - 1);
        if p2 >= p1 {
            p2 += 1;
        }
        (self.realize_at(p1, p2), p1, p2)
    }
}

/// Turns a realized sequence into a stream: position p arrives at time
/// (p+1)/(n+1), element id = value − 1, blues are the greens.
pub fn sequence_stream(seq: &[u32], b1: u32, b2: u32) -> RealizedStream {
    let n = seq.len();
    let arrivals = seq
        .iter()
        .enumerate()
        .map(|(p, &v)| Arrival { time: (p + 1) as f64 / (n + 1) as f64, id: v as usize - 1, value: v as f64, size: 1.0 })
        .collect();
    let colors = (1..=n as u32).map(|v| if v == b1 || v == b2 { Color::Green } else { Color::Red }).collect();
    RealizedStream::from_parts(arrivals, colors).expect("ids below n")
}

/// Knowledge the algorithm has about the adversary's mixed strategy.
pub trait TwoBluePrior: Send + Sync {
    fn n(&self) -> usize;

    fn sample_state(&self, rng: &mut dyn RngCore) -> TwoBlueState;

    /// Posterior over the value of b₂ given the first ⌊n/2⌋ values, conditioned
    /// on b₂ being among them and b₁ arriving later. `None` when the
    /// conditioning event has zero mass.
    fn posterior_b2(&self, first_half: &[u32]) -> Option<Vec<(u32, f64)>>;

    /// Explicit weighted states when the prior is a finite list.
    fn explicit_states(&self) -> Option<&[(f64, TwoBlueState)]> {
        None
    }
}

/// A finite weighted list of states.
#[derive(Clone, Debug)]
pub struct MixedTwoBlue {
    n: usize,
    states: Vec<(f64, TwoBlueState)>,
    /// (first h−1 reds, b₂) -> total weight
    index: HashMap<(Vec<u32>, u32), f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoBlueStateJson {
    pub weight: f64,
    pub pi: Vec<u32>,
    pub b1: u32,
    pub b2: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedTwoBlueJson {
    pub n: usize,
    pub states: Vec<TwoBlueStateJson>,
}

impl MixedTwoBlue {
    pub fn new(states: Vec<(f64, TwoBlueState)>) -> Result<Self> {
        if states.is_empty() {
            return Err(BsecError::InvalidInstance("two-blue mixture has no states".into()));
        }
        let n = states[0].1.n();
        let total: f64 = states.iter().map(|s| s.0).sum();
        if states.iter().any(|s| !(s.0 > 0.0) || s.1.n() != n) {
            return Err(BsecError::InvalidInstance("weights must be positive and states share n".into()));
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(BsecError::InvalidInstance(format!("weights sum to {total}, not 1")));
        }
        for s in &states {
            s.1.validate()?;
        }
        let h = n / 2;
        let mut index = HashMap::new();
        for (w, s) in &states {
            *index.entry((s.pi[..h - 1].to_vec(), s.b2)).or_insert(0.0) += w;
        }
        Ok(MixedTwoBlue { n, states, index })
    }

    pub fn normalized(states: Vec<(f64, TwoBlueState)>) -> Result<Self> {
        let total: f64 = states.iter().map(|s| s.0).sum();
        Self::new(states.into_iter().map(|(w, s)| (w / total, s)).collect())
    }

    pub fn states(&self) -> &[(f64, TwoBlueState)] {
        &self.states
    }

    pub fn to_json(&self) -> MixedTwoBlueJson {
        MixedTwoBlueJson {
            n: self.n,
            states: self
                .states
                .iter()
                .map(|(w, s)| TwoBlueStateJson { weight: *w, pi: s.pi.clone(), b1: s.b1, b2: s.b2 })
                .collect(),
        }
    }

    pub fn from_json(j: &MixedTwoBlueJson) -> Result<Self> {
        let states: Result<Vec<(f64, TwoBlueState)>> = j
            .states
            .iter()
            .map(|s| Ok((s.weight, TwoBlueState::new(s.pi.clone(), s.b1, s.b2)?)))
            .collect();
        let m = Self::new(states?)?;
        if m.n != j.n {
            return Err(BsecError::InvalidInstance(format!("declared n = {} but states have n = {}", j.n, m.n)));
        }
        Ok(m)
    }
}

impl TwoBluePrior for MixedTwoBlue {
    fn n(&self) -> usize {
        self.n
    }

    fn sample_state(&self, rng: &mut dyn RngCore) -> TwoBlueState {
        let mut u: f64 = rng.gen();
        for (w, s) in &self.states {
            if u < *w {
                return s.clone();
            }
            u -= w;
        }
        self.states[self.states.len() - 1].1.clone()
    }

    fn posterior_b2(&self, first_half: &[u32]) -> Option<Vec<(u32, f64)>> {
        // every (q, b₁ position) placement has the same probability, so only
        // the state weights matter
        let mut masses = Vec::with_capacity(first_half.len());
        for q in 0..first_half.len() {
            let mut rest = first_half.to_vec();
            let v = rest.remove(q);
            if let Some(&w) = self.index.get(&(rest, v)) {
                masses.push((v, w));
            }
        }
        let z: f64 = masses.iter().map(|m| m.1).sum();
        (z > 0.0).then(|| masses.into_iter().map(|(v, w)| (v, w / z)).collect())
    }

    fn explicit_states(&self) -> Option<&[(f64, TwoBlueState)]> {
        Some(&self.states)
    }
}

// ---------------------------------------------------------------------------
// the four-armed policy

#[derive(Clone, Debug)]
enum TwoBlueArm {
    Interval { l: usize, r: usize, max: f64 },
    Random { k: usize },
    Posterior,
    Quarter,
}

/// Picks one of four rules uniformly: beat the max of a random position
/// interval; a random element; beat the most likely b₂ after the first half;
/// beat a random top-⌈n^{2/3}⌉ element of the first quarter.
pub struct TwoBluePolicy {
    n: usize,
    prior: Arc<dyn TwoBluePrior>,
    arm: TwoBlueArm,
    pos: usize,
    seen: Vec<u32>,
    tau: Option<f64>,
    done: bool,
}

impl TwoBluePolicy {
    pub fn new(prior: Arc<dyn TwoBluePrior>) -> Self {
        TwoBluePolicy { n: prior.n(), prior, arm: TwoBlueArm::Posterior, pos: 0, seen: Vec::new(), tau: None, done: false }
    }

    /// ⌈n^{2/3}⌉.
    pub fn top_count(n: usize) -> usize {
        let c = (n as f64).powf(2.0 / 3.0);
        let r = c.round();
        if (c - r).abs() < 1e-9 {
            r as usize
        } else {
            c.ceil() as usize
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        self.tau
    }

    /// Forces a specific arm (0..4) for the current trial; used by
    /// enumeration tests.
    pub fn force_arm(&mut self, arm: usize, rng: &mut dyn RngCore) {
        self.start(arm, rng);
    }

    fn start(&mut self, arm: usize, rng: &mut dyn RngCore) {
        let n = self.n;
        self.arm = match arm {
            0 => {
                // uniform over pairs 1 ≤ L ≤ R ≤ n
                let total = n * (n + 1) / 2;
                let mut idx = rng.gen_range(0..total);
                let mut l = 1;
                while idx > n - l {
                    idx -= n - l + 1;
                    l += 1;
                }
                TwoBlueArm::Interval { l, r: l + idx, max: f64::NEG_INFINITY }
            }
            1 => TwoBlueArm::Random { k: rng.gen_range(1..=n) },
            2 => TwoBlueArm::Posterior,
            _ => TwoBlueArm::Quarter,
        };
        self.pos = 0;
        self.seen.clear();
        self.tau = None;
        self.done = false;
    }
}

impl OnlinePolicy for TwoBluePolicy {
    fn name(&self) -> String {
        "two_blue".into()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        let arm = rng.gen_range(0..4);
        self.start(arm, rng);
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        self.pos += 1;
        let p = self.pos;
        if self.done {
            return Decision::Skip;
        }
        let h = self.n / 2;
        let q = self.n / 4;
        match &mut self.arm {
            TwoBlueArm::Interval { l, r, max } => {
                if p < *l {
                    return Decision::Skip;
                }
                if p <= *r {
                    *max = max.max(a.value);
                    return Decision::Skip;
                }
                self.tau = Some(*max);
            }
            TwoBlueArm::Random { k } => {
                if p == *k {
                    self.done = true;
                    return Decision::take(a);
                }
                return Decision::Skip;
            }
            TwoBlueArm::Posterior => {
                if p <= h {
                    self.seen.push(a.value as u32);
                    return Decision::Skip;
                }
                if self.tau.is_none() {
                    match self.prior.posterior_b2(&self.seen) {
                        Some(post) => {
                            let best = post.iter().fold((0u32, -1.0), |acc, &(v, pr)| if pr > acc.1 { (v, pr) } else { acc });
                            self.tau = Some(best.0 as f64);
                        }
                        None => {
                            log::debug!("two_blue: zero posterior mass, no selection");
                            self.done = true;
                            return Decision::Skip;
                        }
                    }
                }
            }
            TwoBlueArm::Quarter => {
                if p <= q {
                    self.seen.push(a.value as u32);
                    return Decision::Skip;
                }
                if self.tau.is_none() {
                    if self.seen.is_empty() {
                        self.done = true;
                        return Decision::Skip;
                    }
                    let mut top = self.seen.clone();
                    top.sort_unstable_by(|x, y| y.cmp(x));
                    top.truncate(Self::top_count(self.n));
                    self.tau = Some(top[rng.gen_range(0..top.len())] as f64);
                }
            }
        }
        match self.tau {
            Some(t) if a.value > t => {
                self.done = true;
                Decision::take(a)
            }
            _ => Decision::Skip,
        }
    }

    fn arm(&self) -> Option<String> {
        Some(
            match self.arm {
                TwoBlueArm::Interval { .. } => "interval",
                TwoBlueArm::Random { .. } => "random",
                TwoBlueArm::Posterior => "posterior",
                TwoBlueArm::Quarter => "quarter",
            }
            .into(),
        )
    }

    fn is_ordinal(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// reduced model: one marked element among N

/// Red order π over N−1 values plus the marked (blue) value b; together a
/// permutation of 1..=N.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReducedState {
    pub pi: Vec<u32>,
    pub b: u32,
}

impl ReducedState {
    pub fn insert_at(&self, q: usize) -> Vec<u32> {
        let mut v = self.pi.clone();
        v.insert(q, self.b);
        v
    }
}

#[derive(Clone, Debug)]
pub struct MixedReduced {
    pub big_n: usize,
    pub states: Vec<(BigRational, ReducedState)>,
}

impl MixedReduced {
    pub fn new(states: Vec<(BigRational, ReducedState)>) -> Result<Self> {
        let big_n = states.first().map(|s| s.1.pi.len() + 1).unwrap_or(0);
        if big_n < 2 {
            return Err(BsecError::InvalidInstance("reduced model needs N >= 2".into()));
        }
        let total: BigRational = states.iter().map(|s| s.0.clone()).sum();
        if total != BigRational::one() {
            return Err(BsecError::InvalidInstance(format!("weights sum to {total}")));
        }
        Ok(MixedReduced { big_n, states })
    }

    /// Normalizes positive integer weights.
    pub fn from_integer_weights(states: Vec<(u64, ReducedState)>) -> Result<Self> {
        let total: u64 = states.iter().map(|s| s.0).sum();
        Self::new(
            states
                .into_iter()
                .map(|(w, s)| (BigRational::new(BigInt::from(w), BigInt::from(total)), s))
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputClass {
    Good,
    Bad,
}

/// Left/right mass of the mini-states (state, blue position) that realize
/// `input`; left means the blue sits in the first ⌊N/2⌋ positions.
pub fn side_masses(mixed: &MixedReduced, input: &[u32]) -> (BigRational, BigRational) {
    let n = mixed.big_n;
    let per_pos = BigRational::new(BigInt::one(), BigInt::from(n));
    let (mut left, mut right) = (BigRational::zero(), BigRational::zero());
    for (w, s) in &mixed.states {
        for q in 0..n {
            if input[q] == s.b && s.insert_at(q) == input {
                let m = w * &per_pos;
                if q < n / 2 {
                    left += m;
                } else {
                    right += m;
                }
            }
        }
    }
    (left, right)
}

/// Bad when the right-side mass is at least 99 times the left-side mass.
pub fn classify_input_good_bad(mixed: &MixedReduced, input: &[u32]) -> Result<InputClass> {
    let (left, right) = side_masses(mixed, input);
    if left.is_zero() && right.is_zero() {
        return Err(BsecError::InvalidInstance("input has zero probability".into()));
    }
    if right >= left * BigRational::from_integer(BigInt::from(99)) {
        Ok(InputClass::Bad)
    } else {
        Ok(InputClass::Good)
    }
}

/// Exact Pr[input is good] by enumerating every mini-state.
pub fn probability_good(mixed: &MixedReduced) -> BigRational {
    let n = mixed.big_n;
    let per_pos = BigRational::new(BigInt::one(), BigInt::from(n));
    let mut inputs: HashMap<Vec<u32>, (BigRational, BigRational)> = HashMap::new();
    for (w, s) in &mixed.states {
        for q in 0..n {
            let e = inputs.entry(s.insert_at(q)).or_insert_with(|| (BigRational::zero(), BigRational::zero()));
            let m = w * &per_pos;
            if q < n / 2 {
                e.0 += m;
            } else {
                e.1 += m;
            }
        }
    }
    let ninety_nine = BigRational::from_integer(BigInt::from(99));
    inputs
        .into_values()
        .filter(|(l, r)| *r < l * &ninety_nine)
        .map(|(l, r)| l + r)
        .sum()
}
