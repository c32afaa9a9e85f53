//! Instance generators: lower-bound and hard families for the single-item
//! policies, knapsack families, two-blue adversaries and plain baselines.
//! Every generator is deterministic given its seed.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BsecError, Result};
use crate::model::{Color, Element, MixedInstance, PureInstance};
use crate::multi_select::DensityLevels;
use crate::single_item::ordinal::OrdinalSchedule;
use crate::single_item::two_blue::{MixedTwoBlue, TwoBluePrior, TwoBlueState};

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Distinct uniform times in [lo, hi), none inside any excluded window.
fn distinct_times<R: Rng + ?Sized>(rng: &mut R, count: usize, lo: f64, hi: f64, exclude: &[(f64, f64)]) -> Vec<f64> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = rng.gen_range(lo..hi);
        if exclude.iter().any(|&(a, b)| t > a && t <= b) {
            continue;
        }
        if seen.insert(t.to_bits()) {
            out.push(t);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// baselines

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueProfile {
    /// values 1..=n
    DistinctRanks,
    /// values ratio^i
    Geometric { ratio: f64 },
    /// 1 plus a tiny distinct jitter
    EqualPlusJitter,
}

/// All-green instance; element i has value given by the profile, and ids
/// are shuffled so index order carries no information.
pub fn gen_pure_green(n: usize, profile: ValueProfile, seed: u64) -> Result<PureInstance> {
    if n == 0 {
        return Err(BsecError::InvalidParameter("pure green family needs n >= 1".into()));
    }
    let mut rng = seeded(seed);
    let mut values: Vec<f64> = match profile {
        ValueProfile::DistinctRanks => (1..=n).map(|v| v as f64).collect(),
        ValueProfile::Geometric { ratio } => {
            if !(ratio > 1.0) || (n as f64 - 1.0) * ratio.log2() > 1000.0 {
                return Err(BsecError::InvalidParameter(format!("geometric ratio {ratio} unusable at n = {n}")));
            }
            (0..n).map(|i| ratio.powi(i as i32)).collect()
        }
        ValueProfile::EqualPlusJitter => (0..n).map(|i| 1.0 + (i as f64 + rng.gen::<f64>()) * 1e-9).collect(),
    };
    values.shuffle(&mut rng);
    let elements = values.into_iter().enumerate().map(|(i, v)| Element::green(format!("g{i}"), v)).collect();
    Ok(PureInstance::from_indexed(elements, vec![None; n])?
        .with_meta("family", "pure_green".into())
        .with_meta("profile", serde_json::to_value(profile).unwrap_or_default()))
}

// ---------------------------------------------------------------------------
// lower bound: reds increase with arrival time

/// One state: red times i.i.d. U[0,1], red values increasing with time in
/// powers of n, g_max above every red and the other greens below all reds.
pub fn sample_lower_bound_state<R: Rng + ?Sized>(n: usize, num_reds: usize, rng: &mut R) -> Result<PureInstance> {
    if num_reds + 1 > n {
        return Err(BsecError::InvalidParameter(format!("need num_reds <= n - 1, got {num_reds} reds at n = {n}")));
    }
    let nf = n as f64;
    let mut times = distinct_times(rng, num_reds, 0.0, 1.0, &[]);
    times.sort_by(f64::total_cmp);
    let small = n - num_reds - 1;
    let mut elements = Vec::with_capacity(n);
    let mut red_times = Vec::with_capacity(n);
    for j in 0..small {
        // distinct and below 1
        elements.push(Element::green(format!("g{}", j + 1), (j + 1) as f64 / (small + 1) as f64));
        red_times.push(None);
    }
    for (k, &t) in times.iter().enumerate() {
        elements.push(Element::red(format!("r{k}"), nf.powi(k as i32 + 1)));
        red_times.push(Some(t));
    }
    elements.push(Element::green("g0", nf.powi(num_reds as i32 + 1) * nf));
    red_times.push(None);
    Ok(PureInstance::from_indexed(elements, red_times)?.with_meta("family", "lower_bound".into()))
}

/// A finite mixture of `states` sampled lower-bound states with equal weights.
pub fn gen_lower_bound_increasing_reds(n: usize, num_reds: usize, states: usize, seed: u64) -> Result<MixedInstance> {
    let mut rng = seeded(seed);
    let count = states.max(1);
    let list: Result<Vec<(f64, PureInstance)>> =
        (0..count).map(|_| Ok((1.0 / count as f64, sample_lower_bound_state(n, num_reds, &mut rng)?))).collect();
    MixedInstance::normalized(list?)
}

// ---------------------------------------------------------------------------
// hard single-item family

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardOptions {
    /// g_max above every red; otherwise it sits just above g₂, below the big reds.
    pub gmax_above: bool,
    /// Leave interval I_j (1-based) without any red.
    pub easy_interval: Option<usize>,
    /// Insert g₂ at a random rank among the filler reds instead of above all of them.
    pub random_g2_rank: bool,
}

impl Default for HardOptions {
    fn default() -> Self {
        HardOptions { gmax_above: true, easy_interval: None, random_g2_rank: false }
    }
}

/// Two greens g_max and g₂; one red above v(g₂) in every interval
/// I_1..I_{log n}, decreasing over time; n − 2 − log n filler reds.
pub fn gen_hard_single_item(n: usize, opts: &HardOptions, seed: u64) -> Result<PureInstance> {
    if n < 8 {
        return Err(BsecError::InvalidParameter(format!("hard family needs n >= 8, got {n}")));
    }
    let sched = OrdinalSchedule::new(n);
    let k = sched.log_n();
    if let Some(j) = opts.easy_interval {
        if j == 0 || j > k {
            return Err(BsecError::InvalidParameter(format!("easy interval {j} outside 1..={k}")));
        }
    }
    if n < k + 2 {
        return Err(BsecError::InvalidParameter(format!("n = {n} too small for {k} intervals")));
    }
    let mut rng = seeded(seed);
    let big: Vec<usize> = (1..=k).filter(|&i| Some(i) != opts.easy_interval).collect();
    let fillers = n - 2 - big.len();
    let exclude: Vec<(f64, f64)> =
        opts.easy_interval.map(|j| vec![(sched.checkpoint(j - 1), sched.checkpoint(j))]).unwrap_or_default();
    let filler_times = distinct_times(&mut rng, fillers, 0.0, 1.0, &exclude);

    let g2_value = if opts.random_g2_rank { rng.gen_range(0..=fillers) as f64 + 0.5 } else { fillers as f64 + 0.5 };
    let top = fillers as f64 + 1.0;
    let mut elements = Vec::with_capacity(n);
    let mut red_times = Vec::with_capacity(n);
    for (f, &t) in filler_times.iter().enumerate() {
        elements.push(Element::red(format!("f{f}"), (f + 1) as f64));
        red_times.push(Some(t));
    }
    for (rank, &i) in big.iter().enumerate() {
        // earlier intervals carry larger reds
        let v = top + (big.len() - rank) as f64;
        let t = 0.5 * (sched.checkpoint(i - 1) + sched.checkpoint(i));
        elements.push(Element::red(format!("m{i}"), v));
        red_times.push(Some(t));
    }
    elements.push(Element::green("g2", g2_value));
    red_times.push(None);
    let gmax = if opts.gmax_above { top + big.len() as f64 + 1.0 } else { top - 0.25 };
    elements.push(Element::green("g0", gmax));
    red_times.push(None);
    let inst = PureInstance::from_indexed(elements, red_times)?
        .with_meta("family", "hard_single_item".into())
        .with_meta("log_n", k.into());
    if opts.easy_interval.is_none() && !satisfies_hard_event(&inst) {
        return Err(BsecError::InvalidInstance("generated hard instance misses the hard event".into()));
    }
    Ok(inst)
}

/// Whether every interval I_1..I_{log n} holds a red above v(g₂).
pub fn satisfies_hard_event(inst: &PureInstance) -> bool {
    let sched = OrdinalSchedule::new(inst.n());
    let Some(g2) = inst.g2() else { return false };
    let v2 = inst.element(g2).value;
    let mut hit = vec![false; sched.log_n() + 2];
    for r in inst.reds() {
        if inst.element(r).value > v2 {
            hit[sched.interval_of(inst.red_time(r).expect("red time"))] = true;
        }
    }
    (1..=sched.log_n()).all(|i| hit[i])
}

/// `count` hard states with independent filler times, equally weighted.
pub fn gen_hard_mixed(n: usize, count: usize, opts: &HardOptions, seed: u64) -> Result<MixedInstance> {
    let mut rng = seeded(seed);
    let count = count.max(1);
    let states: Result<Vec<(f64, PureInstance)>> =
        (0..count).map(|_| Ok((1.0, gen_hard_single_item(n, opts, rng.gen())?))).collect();
    MixedInstance::normalized(states?)
}

// ---------------------------------------------------------------------------
// knapsack families

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnapsackKind {
    Heavy,
    Light,
    HeavyLight,
    Spread,
    Spiky,
}

impl std::str::FromStr for KnapsackKind {
    type Err = BsecError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "heavy" => KnapsackKind::Heavy,
            "light" => KnapsackKind::Light,
            "heavy_light" => KnapsackKind::HeavyLight,
            "spread" => KnapsackKind::Spread,
            "spiky" => KnapsackKind::Spiky,
            other => return Err(BsecError::Config(format!("unknown knapsack family kind {other}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnapsackFamily {
    pub kind: KnapsackKind,
    pub n: usize,
    pub capacity: f64,
    pub epsilon: f64,
    pub c: f64,
    /// Heavy/light cut-off H used to size the bands.
    pub dedicated: f64,
    /// Large elements of the spiky kind.
    pub spikes: usize,
    pub seed: u64,
}

impl KnapsackFamily {
    pub fn new(kind: KnapsackKind, n: usize, capacity: f64, epsilon: f64, seed: u64) -> Self {
        KnapsackFamily { kind, n, capacity, epsilon, c: 1.0, dedicated: 4.0, spikes: 2, seed }
    }
}

/// Green mass planted at one density level.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub level: usize,
    pub total_size: f64,
}

/// Output of the knapsack generator with its planted structure.
#[derive(Clone, Debug)]
pub struct KnapsackInstance {
    pub instance: PureInstance,
    pub heavy: Vec<Band>,
    pub light: Vec<Band>,
}

fn band_items<R: Rng + ?Sized>(
    rng: &mut R,
    levels: &DensityLevels,
    eps: f64,
    band: &Band,
    size_range: (f64, f64),
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut left = band.total_size;
    let hi = levels.rho(band.level);
    while left > 1e-9 {
        let s = rng.gen_range(size_range.0..=size_range.1).min(left.max(size_range.0));
        // keep the density strictly inside the level
        let d = hi / (1.0 + eps).powf(rng.gen_range(0.1..0.9));
        out.push((d * s, s));
        left -= s;
    }
    out
}

/// Planted-level knapsack instances. Densities are placed relative to the
/// grid of `DensityLevels(n, c, ε)`; heavy bands carry at least H of size,
/// light bands less. Junk reds sit far below every band.
pub fn gen_knapsack_family(fam: &KnapsackFamily) -> Result<KnapsackInstance> {
    let n = fam.n;
    if n < 20 || !(fam.capacity > 1.0) {
        return Err(BsecError::InvalidParameter("knapsack family needs n >= 20 and capacity > 1".into()));
    }
    let levels = DensityLevels::new(n, fam.c, fam.epsilon)?;
    let mut rng = seeded(fam.seed);
    let k = fam.capacity;
    let h = fam.dedicated;
    // benchmark around n^c / 2 spread over capacity K
    let base_density = (n as f64).powf(fam.c) / 2.0 / k;
    let base = levels.level(base_density).ok_or_else(|| BsecError::InvalidParameter("density out of range".into()))?;
    let (heavy, light): (Vec<Band>, Vec<Band>) = match fam.kind {
        KnapsackKind::Heavy => (vec![Band { level: base, total_size: 1.05 * k }], vec![]),
        KnapsackKind::Light => {
            let per = 0.5 * h;
            let bands = (0..((k / per).ceil() as usize).min(base)).map(|j| Band { level: base - j, total_size: per }).collect();
            (vec![], bands)
        }
        KnapsackKind::HeavyLight => {
            let light: Vec<Band> = (1..=3).map(|j| Band { level: base.saturating_sub(3 * j), total_size: 0.5 * h }).collect();
            let lt: f64 = light.iter().map(|b| b.total_size).sum();
            let rest = 1.05 * k - lt;
            (vec![Band { level: base, total_size: 0.7 * rest }, Band { level: base + 1, total_size: 0.3 * rest }], light)
        }
        KnapsackKind::Spread => {
            let spread = 8;
            let per = 1.05 * k / spread as f64;
            ((0..spread).map(|j| Band { level: base + j, total_size: per }).collect(), vec![])
        }
        KnapsackKind::Spiky => (vec![Band { level: base, total_size: 1.05 * k }], vec![]),
    };
    if matches!(fam.kind, KnapsackKind::Heavy | KnapsackKind::HeavyLight) {
        if let Some(b) = heavy.iter().find(|b| b.total_size < h) {
            return Err(BsecError::InvalidParameter(format!(
                "heavy band at level {} holds {:.3} < H = {h}; raise K or lower H",
                b.level, b.total_size
            )));
        }
    }
    let mut greens: Vec<(f64, f64)> = Vec::new();
    for b in heavy.iter().chain(light.iter()) {
        greens.extend(band_items(&mut rng, &levels, fam.epsilon, b, (0.2, 0.45)));
    }
    if fam.kind == KnapsackKind::Spiky {
        let tiny = 1.0 / (n as f64).powi(3);
        for g in greens.iter_mut() {
            g.0 *= tiny;
        }
        for _ in 0..fam.spikes {
            greens.push((rng.gen_range(0.8..1.2) * (n as f64).powf(fam.c) / (fam.spikes + 1) as f64, rng.gen_range(0.5..1.0)));
        }
    }
    if greens.len() + 2 > n {
        return Err(BsecError::InvalidParameter(format!(
            "{} planted greens do not fit n = {n}; raise n or lower the capacity",
            greens.len()
        )));
    }
    let junk = n - greens.len() - 1;
    let junk_density = levels.rho((base + 12).min(levels.count() - 1));
    let mut elements = Vec::with_capacity(n);
    let mut red_times = Vec::with_capacity(n);
    let times = distinct_times(&mut rng, junk, 0.0, 1.0, &[]);
    let mut used = HashSet::new();
    let mut uniq = |v: f64, rng: &mut ChaCha8Rng| {
        let mut v = v;
        while !used.insert(v.to_bits()) {
            v *= 1.0 + 1e-12 * rng.gen_range(1.0..2.0);
        }
        v
    };
    for (i, (v, s)) in greens.into_iter().enumerate() {
        let v = uniq(v, &mut rng);
        elements.push(Element::green(format!("g{}", i + 1), v).with_size(s));
        red_times.push(None);
    }
    for (j, t) in times.into_iter().enumerate() {
        let s = rng.gen_range(0.2..0.45);
        let v = uniq(junk_density * s * rng.gen_range(0.5..1.0), &mut rng);
        elements.push(Element::red(format!("r{j}"), v).with_size(s));
        red_times.push(Some(t));
    }
    // g_max sits just above the best planted item so V* loses little by excluding it
    let best = elements.iter().filter(|e| e.color == Color::Green).map(|e| e.value).fold(0.0, f64::max);
    let top = uniq(1.01 * best, &mut rng);
    elements.push(Element::green("g0", top).with_size(0.45));
    red_times.push(None);
    let instance = PureInstance::from_indexed(elements, red_times)?
        .with_meta("family", "knapsack".into())
        .with_meta("kind", serde_json::to_value(fam.kind).unwrap_or_default())
        .with_meta("capacity", k.into());
    Ok(KnapsackInstance { instance, heavy, light })
}

// ---------------------------------------------------------------------------
// two-blue adversaries

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoBlueAdversary {
    UniformReds,
    PosteriorConcentrated,
    PosteriorFlat,
}

impl std::str::FromStr for TwoBlueAdversary {
    type Err = BsecError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform_reds" => TwoBlueAdversary::UniformReds,
            "posterior_concentrated" => TwoBlueAdversary::PosteriorConcentrated,
            "posterior_flat" => TwoBlueAdversary::PosteriorFlat,
            other => return Err(BsecError::Config(format!("unknown two-blue adversary {other}"))),
        })
    }
}

/// Smallest m with m³ ≥ n.
pub fn cube_root_ceil(n: usize) -> usize {
    let mut m = 1;
    while m * m * m < n {
        m += 1;
    }
    m
}

/// Symmetric candidate family. b₁ = n; the m candidate values alternate with
/// m "between" decoys just below n. b₂ is one candidate, the other m − 1
/// candidates are reds placed in a random slot set of the first h − 1 red
/// positions in random order, h = ⌊n/2⌋. Between decoys come right after,
/// smallest first; small decoys fill the rest in increasing order. Every
/// (b₂, slots, order) is equally likely, so given a first half holding b₂
/// the posterior is uniform over the m candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricTwoBlue {
    n: usize,
    m: usize,
    h: usize,
    /// descending
    candidates: Vec<u32>,
    /// ascending
    between: Vec<u32>,
    /// ascending
    small: Vec<u32>,
}

impl SymmetricTwoBlue {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        let h = n / 2;
        if n < 8 || m < 1 || 2 * m + 1 > n || m > h {
            return Err(BsecError::InvalidParameter(format!("symmetric two-blue family needs n >= 8 and m <= n/2, got n = {n}, m = {m}")));
        }
        let candidates: Vec<u32> = (0..m).map(|k| (n - 1 - 2 * k) as u32).collect();
        let mut between: Vec<u32> = (0..m).map(|k| (n - 2 - 2 * k) as u32).collect();
        between.sort_unstable();
        let small: Vec<u32> = (1..=(n - 1 - 2 * m) as u32).collect();
        Ok(SymmetricTwoBlue { n, m, h, candidates, between, small })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn candidates(&self) -> &[u32] {
        &self.candidates
    }

    /// m · C(h−1, m−1) · (m−1)!, or `None` on overflow.
    pub fn num_states(&self) -> Option<u128> {
        let mut c: u128 = self.m as u128;
        for j in 0..(self.m - 1) {
            c = c.checked_mul((self.h - 1 - j) as u128)?;
        }
        Some(c)
    }

    /// The red order for b₂ = candidates[b2_idx] with the other candidates in
    /// `slots` (ascending positions < h − 1) in the given order.
    pub fn state_for(&self, b2_idx: usize, slots: &[usize], order: &[u32]) -> TwoBlueState {
        let mut pi = Vec::with_capacity(self.n - 2);
        let mut small = self.small.iter();
        let mut cands = order.iter();
        for p in 0..self.h - 1 {
            if slots.contains(&p) {
                pi.push(*cands.next().expect("one candidate per slot"));
            } else {
                pi.push(*small.next().expect("enough small decoys"));
            }
        }
        pi.extend(self.between.iter().copied());
        pi.extend(small.copied());
        TwoBlueState { pi, b1: self.n as u32, b2: self.candidates[b2_idx] }
    }

    /// Every state with equal weight; refuses above `limit` states.
    pub fn enumerate(&self, limit: usize) -> Result<MixedTwoBlue> {
        let total = self.num_states().filter(|&c| c <= limit as u128).ok_or_else(|| {
            BsecError::InvalidParameter(format!("symmetric family has more than {limit} states"))
        })?;
        let mut states = Vec::with_capacity(total as usize);
        for b2 in 0..self.m {
            let others: Vec<u32> = self.candidates.iter().enumerate().filter(|&(i, _)| i != b2).map(|(_, &c)| c).collect();
            for slots in combinations(self.h - 1, self.m - 1) {
                for order in permutations(&others) {
                    states.push((1.0, self.state_for(b2, &slots, &order)));
                }
            }
        }
        MixedTwoBlue::normalized(states)
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

impl TwoBluePrior for SymmetricTwoBlue {
    fn n(&self) -> usize {
        self.n
    }

    fn sample_state(&self, rng: &mut dyn RngCore) -> TwoBlueState {
        let b2 = rng.gen_range(0..self.m);
        let mut others: Vec<u32> = self.candidates.iter().enumerate().filter(|&(i, _)| i != b2).map(|(_, &c)| c).collect();
        others.shuffle(rng);
        let mut slots = rand::seq::index::sample(rng, self.h - 1, self.m - 1).into_vec();
        slots.sort_unstable();
        self.state_for(b2, &slots, &others)
    }

    fn posterior_b2(&self, first_half: &[u32]) -> Option<Vec<(u32, f64)>> {
        if first_half.len() != self.h {
            return None;
        }
        let cand: HashSet<u32> = self.candidates.iter().copied().collect();
        let present: Vec<u32> = first_half.iter().copied().filter(|v| cand.contains(v)).collect();
        if present.len() != self.m {
            return None;
        }
        let rest: Vec<u32> = first_half.iter().copied().filter(|v| !cand.contains(v)).collect();
        if rest.as_slice() != &self.small[..self.h - self.m] {
            return None;
        }
        let p = 1.0 / self.m as f64;
        Some(present.into_iter().map(|v| (v, p)).collect())
    }
}

/// Explicit two-blue mixture for an adversary. Symmetric variants enumerate
/// every state when there are at most `count` of them and otherwise sample
/// `count` states; uniform_reds always samples `count` random states.
pub fn gen_two_blue_states(n: usize, adversary: TwoBlueAdversary, count: usize, seed: u64) -> Result<MixedTwoBlue> {
    if n < 8 {
        return Err(BsecError::InvalidParameter(format!("two-blue adversaries need n >= 8, got {n}")));
    }
    let mut rng = seeded(seed);
    let count = count.max(1);
    match adversary {
        TwoBlueAdversary::UniformReds => {
            let states = (0..count)
                .map(|_| {
                    let mut vals: Vec<u32> = (1..=n as u32).collect();
                    vals.shuffle(&mut rng);
                    let (a, b) = (vals[0], vals[1]);
                    let pi = vals[2..].to_vec();
                    (1.0, TwoBlueState { pi, b1: a.max(b), b2: a.min(b) })
                })
                .collect();
            MixedTwoBlue::normalized(merge_states(states))
        }
        TwoBlueAdversary::PosteriorConcentrated | TwoBlueAdversary::PosteriorFlat => {
            let fam = symmetric_family(n, adversary)?;
            if fam.num_states().is_some_and(|c| c <= count as u128) {
                return fam.enumerate(count);
            }
            let states = (0..count).map(|_| (1.0, fam.sample_state(&mut rng))).collect();
            MixedTwoBlue::normalized(merge_states(states))
        }
    }
}

fn merge_states(states: Vec<(f64, TwoBlueState)>) -> Vec<(f64, TwoBlueState)> {
    let mut index: HashMap<TwoBlueState, usize> = HashMap::new();
    let mut out: Vec<(f64, TwoBlueState)> = Vec::new();
    for (w, s) in states {
        match index.get(&s) {
            Some(&i) => out[i].0 += w,
            None => {
                index.insert(s.clone(), out.len());
                out.push((w, s));
            }
        }
    }
    out
}

/// The symmetric family behind a posterior adversary: m = 2 candidates for
/// the concentrated variant, m = ⌈n^{1/3}⌉ for the flat one.
pub fn symmetric_family(n: usize, adversary: TwoBlueAdversary) -> Result<SymmetricTwoBlue> {
    match adversary {
        TwoBlueAdversary::PosteriorConcentrated => SymmetricTwoBlue::new(n, 2),
        TwoBlueAdversary::PosteriorFlat => SymmetricTwoBlue::new(n, cube_root_ceil(n)),
        TwoBlueAdversary::UniformReds => {
            Err(BsecError::InvalidParameter("uniform_reds has no symmetric form".into()))
        }
    }
}

// ---------------------------------------------------------------------------
// family spec for the CLI

/// A reproducible family request: name, size, free-form parameters and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: String,
    pub n: usize,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub seed: u64,
}

/// A generated family: pure, mixed or two-blue.
#[derive(Clone, Debug)]
pub enum Generated {
    Pure(PureInstance),
    Mixed(MixedInstance),
    TwoBlue(MixedTwoBlue),
}

impl FamilySpec {
    fn param_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| BsecError::Config(format!("parameter {key} must be a number"))),
        }
    }

    fn param_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| BsecError::Config(format!("parameter {key} must be a non-negative integer"))),
        }
    }

    fn param_str(&self, key: &str, default: &str) -> Result<String> {
        match self.params.get(key) {
            None => Ok(default.to_string()),
            Some(v) => {
                v.as_str().map(str::to_string).ok_or_else(|| BsecError::Config(format!("parameter {key} must be a string")))
            }
        }
    }

    pub fn generate(&self) -> Result<Generated> {
        let n = self.n;
        match self.family.as_str() {
            "pure_green" => {
                let profile = match self.param_str("profile", "distinct_ranks")?.as_str() {
                    "distinct_ranks" => ValueProfile::DistinctRanks,
                    "geometric" => ValueProfile::Geometric { ratio: self.param_f64("ratio", 2.0)? },
                    "equal_plus_jitter" => ValueProfile::EqualPlusJitter,
                    other => return Err(BsecError::Config(format!("unknown value profile {other}"))),
                };
                Ok(Generated::Pure(gen_pure_green(n, profile, self.seed)?))
            }
            "lower_bound" => {
                let reds = self.param_usize("num_reds", (n.saturating_sub(2)) / 2)?;
                let states = self.param_usize("states", 1000)?;
                Ok(Generated::Mixed(gen_lower_bound_increasing_reds(n, reds, states, self.seed)?))
            }
            "hard_single_item" => {
                let opts = HardOptions {
                    gmax_above: self.params.get("gmax_above").and_then(|v| v.as_bool()).unwrap_or(true),
                    easy_interval: self.params.get("easy_interval").and_then(|v| v.as_u64()).map(|x| x as usize),
                    random_g2_rank: self.params.get("random_g2_rank").and_then(|v| v.as_bool()).unwrap_or(false),
                };
                match self.param_usize("states", 1)? {
                    1 => Ok(Generated::Pure(gen_hard_single_item(n, &opts, self.seed)?)),
                    c => Ok(Generated::Mixed(gen_hard_mixed(n, c, &opts, self.seed)?)),
                }
            }
            "knapsack" => {
                let kind: KnapsackKind = self.param_str("kind", "heavy_light")?.parse()?;
                let mut fam = KnapsackFamily::new(
                    kind,
                    n,
                    self.param_f64("K", n as f64 / 5.0)?,
                    self.param_f64("epsilon", 0.2)?,
                    self.seed,
                );
                fam.c = self.param_f64("c", 1.0)?;
                fam.dedicated = self.param_f64("H", fam.dedicated)?;
                fam.spikes = self.param_usize("spikes", fam.spikes)?;
                Ok(Generated::Pure(gen_knapsack_family(&fam)?.instance))
            }
            "two_blue" => {
                let adv: TwoBlueAdversary = self.param_str("adversary", "uniform_reds")?.parse()?;
                let count = self.param_usize("count", 1000)?;
                Ok(Generated::TwoBlue(gen_two_blue_states(n, adv, count, self.seed)?))
            }
            other => Err(BsecError::Config(format!("unknown family {other}"))),
        }
    }
}
