//! Single-item selection against a known distribution over adversarial
//! inputs, judged ordinally: success means picking a value at least that of
//! the second best green.
//!
//! The posterior p_e^i = Pr[e = g₂ | hard event, history up to T_i] is exact:
//! for each state we match observed arrivals to that state's reds by grid
//! time, and count the order-preserving ways to assign the remaining
//! observed arrivals to its greens. Every such completion has the same
//! likelihood within a state, so a small DP over (slot, green) suffices.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, RngCore};

use crate::error::{BsecError, Result};
use crate::model::{discretize_time, Arrival, Decision, MixedInstance, OnlinePolicy};
use crate::subroutines::{IntervalWindow, TwoCheckpoints};

use super::logstar::ceil_log2;

/// Checkpoints T_0 = ¼, T_i = ¼ + i/(2·log n) with log n = ⌈log₂ n⌉.
#[derive(Clone, Debug, PartialEq)]
pub struct OrdinalSchedule {
    log_n: usize,
    checkpoints: Vec<f64>,
}

impl OrdinalSchedule {
    pub fn new(n: usize) -> Self {
        let log_n = (ceil_log2(n as u64) as usize).max(1);
        let checkpoints = (0..=log_n).map(|i| 0.25 + i as f64 / (2.0 * log_n as f64)).collect();
        OrdinalSchedule { log_n, checkpoints }
    }

    pub fn log_n(&self) -> usize {
        self.log_n
    }

    pub fn checkpoint(&self, i: usize) -> f64 {
        self.checkpoints[i]
    }

    /// 0 for [0, ¼], i for (T_{i-1}, T_i], log n + 1 for (¾, 1].
    pub fn interval_of(&self, t: f64) -> usize {
        self.checkpoints.iter().position(|&c| t <= c).unwrap_or(self.log_n + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PosteriorMode {
    Exact,
    Sampled { accepted: usize, std_err: f64 },
}

/// Posterior probability that each observed element is g₂, plus the mass on
/// g₂ not having arrived yet.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorTable {
    pub entries: Vec<(usize, f64)>,
    pub unobserved: f64,
    pub mode: PosteriorMode,
    /// Number of consistent (state, assignment) completions.
    pub completions: f64,
}

impl PosteriorTable {
    pub fn get(&self, id: usize) -> f64 {
        self.entries.iter().find(|e| e.0 == id).map_or(0.0, |e| e.1)
    }

    pub fn mass(&self, ids: &[usize]) -> f64 {
        ids.iter().map(|&id| self.get(id)).sum()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum::<f64>() + self.unobserved
    }

    pub fn is_exact(&self) -> bool {
        self.mode == PosteriorMode::Exact
    }
}

#[derive(Clone, Debug)]
pub struct PosteriorConfig {
    /// Exact counting is used while the number of completions stays at or
    /// below this budget.
    pub completion_budget: f64,
    pub min_accepted: usize,
    pub max_attempts: u64,
    /// Skip the exact path (for cross-checks).
    pub force_sampled: bool,
}

impl Default for PosteriorConfig {
    fn default() -> Self {
        PosteriorConfig { completion_budget: 1e7, min_accepted: 100_000, max_attempts: 100_000_000, force_sampled: false }
    }
}

#[derive(Clone, Debug)]
struct StateModel {
    ln_weight: f64,
    /// (time, raw time, tie rank, value), sorted by arrival order.
    reds: Vec<(f64, f64, usize, f64)>,
    /// green values ascending
    greens: Vec<f64>,
    hard: bool,
}

/// Precomputed per-state data for posterior queries over one mixed instance.
#[derive(Clone, Debug)]
pub struct PosteriorModel {
    n: usize,
    grid: bool,
    schedule: OrdinalSchedule,
    states: Vec<StateModel>,
}

struct Consistent {
    state: usize,
    ln_unit: f64,
    /// observed ids of green slots, ascending by value
    slot_ids: Vec<usize>,
    /// allowed green index ranges [lo, hi) per slot
    ranges: Vec<(usize, usize)>,
}

impl PosteriorModel {
    /// `grid` must match whether streams are discretized.
    pub fn new(mixed: &MixedInstance, grid: bool) -> Self {
        let n = mixed.n();
        let schedule = OrdinalSchedule::new(n);
        let time = |t: f64| if grid { discretize_time(t, n) } else { t };
        let states = mixed
            .states()
            .iter()
            .map(|(w, s)| {
                let mut reds: Vec<(f64, f64, usize, f64)> = s
                    .reds()
                    .map(|i| {
                        let t = s.red_time(i).expect("red time");
                        (time(t), t, s.red_rank(i), s.element(i).value)
                    })
                    .collect();
                reds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
                let mut greens: Vec<f64> = s.greens().map(|g| s.element(g).value).collect();
                greens.sort_by(f64::total_cmp);
                let hard = greens.len() >= 2 && {
                    let v2 = greens[greens.len() - 2];
                    let mut big = vec![false; schedule.log_n() + 2];
                    for r in &reds {
                        if r.3 > v2 {
                            big[schedule.interval_of(r.0)] = true;
                        }
                    }
                    (1..=schedule.log_n()).all(|i| big[i])
                };
                StateModel { ln_weight: w.ln(), reds, greens, hard }
            })
            .collect();
        PosteriorModel { n, grid, schedule, states }
    }

    pub fn schedule(&self) -> &OrdinalSchedule {
        &self.schedule
    }

    pub fn is_grid(&self) -> bool {
        self.grid
    }

    /// Whether state `s` satisfies the hard event.
    pub fn state_is_hard(&self, s: usize) -> bool {
        self.states[s].hard
    }

    /// Probability that one green is visible by time `t`, and the per-green
    /// log-likelihood of being seen at a particular observed time.
    fn observation_terms(&self, t: f64) -> (f64, f64) {
        if self.grid {
            let big_n = (self.n as f64).powi(3);
            let p = (((big_n * t).floor() + 1.0) / big_n).min(1.0);
            (p, -big_n.ln())
        } else {
            (t.min(1.0), 0.0)
        }
    }

    fn consistent_states(&self, observed: &[Arrival], t: f64) -> Vec<Consistent> {
        let (p_seen, ln_point) = self.observation_terms(t);
        let ln_unseen = (1.0 - p_seen).max(0.0).ln();
        let mut out = Vec::new();
        'states: for (si, st) in self.states.iter().enumerate() {
            if !st.hard {
                continue;
            }
            // match reds by time
            let reds: Vec<&(f64, f64, usize, f64)> = st.reds.iter().filter(|r| r.0 <= t).collect();
            let mut is_red = vec![None; observed.len()];
            let (mut a, mut b) = (0usize, 0usize);
            while a < observed.len() || b < reds.len() {
                let ta = observed.get(a).map_or(f64::INFINITY, |o| o.time);
                let tb = reds.get(b).map_or(f64::INFINITY, |r| r.0);
                if tb < ta {
                    continue 'states; // red of this state missing from the history
                }
                let a_end = (a..observed.len()).find(|&x| observed[x].time != ta).unwrap_or(observed.len());
                if tb == ta {
                    let b_end = (b..reds.len()).find(|&x| reds[x].0 != tb).unwrap_or(reds.len());
                    if a_end - a != b_end - b {
                        continue 'states;
                    }
                    for k in 0..(a_end - a) {
                        is_red[a + k] = Some(reds[b + k].3);
                    }
                    b = b_end;
                } else if a_end - a > 1 {
                    continue 'states; // two greens on one grid point
                }
                a = a_end;
            }
            // value order: observed reds must be increasing along observed rank
            let mut by_value: Vec<usize> = (0..observed.len()).collect();
            by_value.sort_by(|&x, &y| observed[x].value.total_cmp(&observed[y].value));
            let mut last_red = f64::NEG_INFINITY;
            let mut pending: Vec<(usize, f64)> = Vec::new(); // (observed idx, lower bound)
            let mut slots: Vec<(usize, f64, f64)> = Vec::new();
            for &x in &by_value {
                match is_red[x] {
                    Some(v) => {
                        if v <= last_red {
                            continue 'states;
                        }
                        for (o, lo) in pending.drain(..) {
                            slots.push((o, lo, v));
                        }
                        last_red = v;
                    }
                    None => pending.push((x, last_red)),
                }
            }
            for (o, lo) in pending.drain(..) {
                slots.push((o, lo, f64::INFINITY));
            }
            let m = st.greens.len();
            let k = slots.len();
            if k > m {
                continue;
            }
            let ranges: Vec<(usize, usize)> = slots
                .iter()
                .map(|&(_, lo, hi)| {
                    let l = st.greens.partition_point(|&g| g <= lo);
                    let h = st.greens.partition_point(|&g| g < hi);
                    (l, h.max(l))
                })
                .collect();
            let ln_unit = st.ln_weight + k as f64 * ln_point + (m - k) as f64 * ln_unseen;
            out.push(Consistent { state: si, ln_unit, slot_ids: slots.iter().map(|s| observed[s.0].id).collect(), ranges });
        }
        out
    }

    /// p_e at time `t` given every arrival observed so far (arrivals after
    /// `t` are ignored).
    pub fn posterior(
        &self,
        observed_prefix: &[Arrival],
        t: f64,
        cfg: &PosteriorConfig,
        rng: &mut dyn RngCore,
    ) -> Result<PosteriorTable> {
        let observed: Vec<Arrival> = observed_prefix.iter().copied().filter(|a| a.time <= t).collect();
        let cons = self.consistent_states(&observed, t);
        let counted: Vec<(InjectionCounts, &Consistent)> =
            cons.iter().map(|c| (InjectionCounts::new(&c.ranges, self.states[c.state].greens.len()), c)).collect();
        let completions: f64 = counted.iter().map(|(ic, _)| ic.total).sum();
        if completions == 0.0 {
            return Err(BsecError::UndefinedPosterior(format!(
                "no hard state is consistent with the {} arrivals seen by t={t}",
                observed.len()
            )));
        }
        if !cfg.force_sampled && completions <= cfg.completion_budget {
            return Ok(self.exact_table(&observed, &counted, completions));
        }
        self.sampled_table(&observed, &cons, completions, cfg, rng)
    }

    /// Convenience wrapper taking the checkpoint index.
    pub fn posterior_at(
        &self,
        observed_prefix: &[Arrival],
        checkpoint_i: usize,
        cfg: &PosteriorConfig,
        rng: &mut dyn RngCore,
    ) -> Result<PosteriorTable> {
        self.posterior(observed_prefix, self.schedule.checkpoint(checkpoint_i), cfg, rng)
    }

    fn exact_table(&self, observed: &[Arrival], counted: &[(InjectionCounts, &Consistent)], completions: f64) -> PosteriorTable {
        let max_ln = counted
            .iter()
            .filter(|(ic, _)| ic.total > 0.0)
            .map(|(_, c)| c.ln_unit)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut mass = vec![0.0; observed.len()];
        let pos = |id: usize| observed.iter().position(|a| a.id == id).expect("slot id observed");
        for (ic, c) in counted {
            if ic.total == 0.0 {
                continue;
            }
            let unit = (c.ln_unit - max_ln).exp();
            z += unit * ic.total;
            let g2 = self.states[c.state].greens.len() - 2;
            for (j, &id) in c.slot_ids.iter().enumerate() {
                mass[pos(id)] += unit * ic.through(j, g2);
            }
        }
        let entries: Vec<(usize, f64)> = observed.iter().zip(&mass).map(|(a, &m)| (a.id, m / z)).collect();
        let seen: f64 = entries.iter().map(|e| e.1).sum();
        PosteriorTable { entries, unobserved: (1.0 - seen).max(0.0), mode: PosteriorMode::Exact, completions }
    }

    fn sampled_table(
        &self,
        observed: &[Arrival],
        cons: &[Consistent],
        completions: f64,
        cfg: &PosteriorConfig,
        rng: &mut dyn RngCore,
    ) -> Result<PosteriorTable> {
        // draw a state with weight (unit likelihood × #subsets), then a uniform
        // subset of its greens for the slots; accept when it fits the order
        let ln_w: Vec<f64> = cons
            .iter()
            .map(|c| c.ln_unit + ln_choose(self.states[c.state].greens.len(), c.slot_ids.len()))
            .collect();
        let max_ln = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = ln_w.iter().map(|l| (l - max_ln).exp()).collect();
        let wsum: f64 = w.iter().sum();
        let mut hits = vec![0usize; observed.len()];
        let (mut accepted, mut attempts) = (0usize, 0u64);
        while accepted < cfg.min_accepted {
            attempts += 1;
            if attempts > cfg.max_attempts {
                return Err(BsecError::PosteriorBudget(format!(
                    "{completions:.3e} completions exceed the exact budget and only {accepted} of {} samples were accepted after {} attempts",
                    cfg.min_accepted, cfg.max_attempts
                )));
            }
            let mut u = rng.gen::<f64>() * wsum;
            let mut pick = cons.len() - 1;
            for (i, wi) in w.iter().enumerate() {
                if u < *wi {
                    pick = i;
                    break;
                }
                u -= wi;
            }
            let c = &cons[pick];
            let m = self.states[c.state].greens.len();
            let mut subset = sample(rng, m, c.slot_ids.len()).into_vec();
            subset.sort_unstable();
            if subset.iter().zip(&c.ranges).all(|(&g, &(lo, hi))| lo <= g && g < hi) {
                accepted += 1;
                if let Some(j) = subset.iter().position(|&g| g == m - 2) {
                    let id = c.slot_ids[j];
                    hits[observed.iter().position(|a| a.id == id).expect("slot observed")] += 1;
                }
            }
        }
        let a = accepted as f64;
        let entries: Vec<(usize, f64)> = observed.iter().zip(&hits).map(|(o, &h)| (o.id, h as f64 / a)).collect();
        let seen: f64 = entries.iter().map(|e| e.1).sum();
        let p_max = entries.iter().map(|e| e.1).fold(0.0, f64::max);
        Ok(PosteriorTable {
            entries,
            unobserved: (1.0 - seen).max(0.0),
            mode: PosteriorMode::Sampled { accepted, std_err: (p_max * (1.0 - p_max) / a).sqrt() },
            completions,
        })
    }
}

fn ln_choose(m: usize, k: usize) -> f64 {
    (0..k).map(|i| ((m - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Counts of strictly increasing maps slot j -> green index within
/// `ranges[j]`.
struct InjectionCounts {
    prefix: Vec<Vec<f64>>,
    suffix: Vec<Vec<f64>>,
    total: f64,
}

impl InjectionCounts {
    fn new(ranges: &[(usize, usize)], m: usize) -> Self {
        let k = ranges.len();
        if k == 0 {
            return InjectionCounts { prefix: vec![], suffix: vec![], total: 1.0 };
        }
        let mut prefix = vec![vec![0.0; m]; k];
        for j in 0..k {
            let mut run = 0.0; // Σ_{a' < a} prefix[j-1][a']
            #[allow(clippy::needless_range_loop)]
            for a in 0..m {
                let ways = if j == 0 { 1.0 } else { run };
                if j > 0 {
                    run += prefix[j - 1][a];
                }
                if ranges[j].0 <= a && a < ranges[j].1 {
                    prefix[j][a] = ways;
                }
            }
        }
        let mut suffix = vec![vec![0.0; m]; k];
        for j in (0..k).rev() {
            let mut run = 0.0; // Σ_{a' > a} suffix[j+1][a']
            for a in (0..m).rev() {
                let ways = if j == k - 1 { 1.0 } else { run };
                if j < k - 1 {
                    run += suffix[j + 1][a];
                }
                if ranges[j].0 <= a && a < ranges[j].1 {
                    suffix[j][a] = ways;
                }
            }
        }
        let total = prefix[k - 1].iter().sum();
        InjectionCounts { prefix, suffix, total }
    }

    /// Number of maps sending slot j to green a.
    fn through(&self, j: usize, a: usize) -> f64 {
        self.prefix[j][a] * self.suffix[j][a]
    }
}

// ---------------------------------------------------------------------------
// candidate sets

/// One refinement step S_{i-1} -> S_i.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateStep {
    pub i: usize,
    pub set: Vec<usize>,
    pub center: Option<usize>,
    /// p^{i-1}(S_{i-1})
    pub prev_mass: f64,
    /// p^i(S_{i-1}); differs from `prev_mass` when new arrivals move mass
    pub drift_mass: f64,
    /// p^i(bot_{i-1})
    pub bot_mass: f64,
    pub took_bot: bool,
}

/// The shrinking candidate sets S_0 ⊇ S_1 ⊇ ... for g₂ together with the
/// posterior tables that drove each step.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateState {
    log_n: usize,
    /// (id, value) ascending by value, one entry per computed S_i
    sets: Vec<Vec<(usize, f64)>>,
    tables: Vec<Option<PosteriorTable>>,
    steps: Vec<CandidateStep>,
}

impl CandidateState {
    /// S_0 = everything observed in [0, T_0].
    pub fn start(log_n: usize, first_interval: &[Arrival], p0: Option<PosteriorTable>) -> Self {
        let mut s0: Vec<(usize, f64)> = first_interval.iter().map(|a| (a.id, a.value)).collect();
        s0.sort_by(|a, b| a.1.total_cmp(&b.1));
        CandidateState { log_n, sets: vec![s0], tables: vec![p0], steps: Vec::new() }
    }

    pub fn current(&self) -> &[(usize, f64)] {
        self.sets.last().expect("S_0 exists")
    }

    pub fn set(&self, i: usize) -> &[(usize, f64)] {
        &self.sets[i]
    }

    pub fn index(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn steps(&self) -> &[CandidateStep] {
        &self.steps
    }

    /// Element of S_i with exactly ⌊|S_i|/2⌋ smaller members.
    pub fn center(set: &[(usize, f64)]) -> Option<(usize, f64)> {
        set.get(set.len() / 2).copied()
    }

    /// Computes S_i from S_{i-1} using p^i. Equality of masses is decided
    /// with tolerance 1e-9 for exact tables; for sampled ones the bot branch
    /// is taken when the ratio is at least 1 − 1/(2 log n).
    pub fn advance(&mut self, p_i: PosteriorTable) -> &[(usize, f64)] {
        let i = self.sets.len();
        let prev = self.current().to_vec();
        let prev_ids: Vec<usize> = prev.iter().map(|e| e.0).collect();
        let prev_mass = self.tables[i - 1].as_ref().map_or(0.0, |t| t.mass(&prev_ids));
        let drift_mass = p_i.mass(&prev_ids);
        let (next, center, bot_mass, took_bot) = match Self::center(&prev) {
            None => (Vec::new(), None, 0.0, true),
            Some((cid, cv)) => {
                let bot: Vec<(usize, f64)> = prev.iter().copied().filter(|e| e.1 <= cv).collect();
                let bot_ids: Vec<usize> = bot.iter().map(|e| e.0).collect();
                let bot_mass = p_i.mass(&bot_ids);
                let take_bot = if p_i.is_exact() {
                    (bot_mass - prev_mass).abs() <= 1e-9
                } else if prev_mass > 0.0 {
                    bot_mass / prev_mass >= 1.0 - 1.0 / (2.0 * self.log_n as f64)
                } else {
                    true
                };
                let next = if take_bot { bot } else { prev.iter().copied().filter(|e| e.1 > cv).collect() };
                (next, Some(cid), bot_mass, take_bot)
            }
        };
        if (drift_mass - prev_mass).abs() > 1e-9 {
            log::trace!("posterior drift at step {i}: p^i(S) = {drift_mass}, p^(i-1)(S) = {prev_mass}");
        }
        self.steps.push(CandidateStep {
            i,
            set: next.iter().map(|e| e.0).collect(),
            center,
            prev_mass,
            drift_mass,
            bot_mass,
            took_bot,
        });
        self.sets.push(next);
        self.tables.push(Some(p_i));
        self.current()
    }

    /// k* = min{ i : 1/log n ≤ p^i(bot_{i-1}) / p^{i-1}(S_{i-1}) < 1 }, or
    /// log n + 1 when no step qualifies.
    pub fn k_star(&self) -> usize {
        let lo = 1.0 / self.log_n as f64;
        self.steps
            .iter()
            .find(|s| {
                s.prev_mass > 0.0 && {
                    let r = s.bot_mass / s.prev_mass;
                    lo <= r && r < 1.0 - 1e-9
                }
            })
            .map_or(self.log_n + 1, |s| s.i)
    }
}

// ---------------------------------------------------------------------------
// the policy

#[derive(Clone, Debug)]
enum OrdinalArm {
    Window(TwoCheckpoints),
    Center { i: usize },
    Shrink,
}

/// Runs one of three rules uniformly at random: a two-checkpoint rule on a
/// random interval I_i, the center of S_i for a random i as threshold, or a
/// random member of the first S_k with at most 10 candidates.
pub struct OrdinalKnownDist {
    model: Arc<PosteriorModel>,
    cfg: PosteriorConfig,
    arm: OrdinalArm,
    seen: Vec<Arrival>,
    next_checkpoint: usize,
    candidates: Option<CandidateState>,
    tau: Option<f64>,
    gave_up: bool,
    done: bool,
    posterior_failures: usize,
}

impl OrdinalKnownDist {
    pub fn new(model: Arc<PosteriorModel>) -> Self {
        OrdinalKnownDist {
            model,
            cfg: PosteriorConfig::default(),
            arm: OrdinalArm::Shrink,
            seen: Vec::new(),
            next_checkpoint: 0,
            candidates: None,
            tau: None,
            gave_up: false,
            done: false,
            posterior_failures: 0,
        }
    }

    pub fn with_config(mut self, cfg: PosteriorConfig) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn candidates(&self) -> Option<&CandidateState> {
        self.candidates.as_ref()
    }

    pub fn threshold(&self) -> Option<f64> {
        self.tau
    }

    pub fn posterior_failures(&self) -> usize {
        self.posterior_failures
    }

    /// Whether the arm still needs S_j at checkpoint j.
    fn needs_checkpoint(&self, j: usize) -> bool {
        match self.arm {
            OrdinalArm::Window(_) => false,
            OrdinalArm::Center { i } => j <= i && self.tau.is_none(),
            OrdinalArm::Shrink => self.tau.is_none() && j <= self.model.schedule().log_n(),
        }
    }

    fn posterior(&mut self, j: usize, rng: &mut dyn RngCore) -> Option<PosteriorTable> {
        match self.model.posterior_at(&self.seen, j, &self.cfg, rng) {
            Ok(t) => Some(t),
            Err(e) => {
                self.posterior_failures += 1;
                log::debug!("ordinal arm gives up at checkpoint {j}: {e}");
                None
            }
        }
    }

    fn process_checkpoint(&mut self, j: usize, rng: &mut dyn RngCore) {
        let log_n = self.model.schedule().log_n();
        let needs_tables = match self.arm {
            OrdinalArm::Center { i } => i > 0,
            OrdinalArm::Shrink => true,
            OrdinalArm::Window(_) => false,
        };
        if j == 0 {
            let s0_len = self.seen.len();
            let small = matches!(self.arm, OrdinalArm::Shrink) && s0_len <= 10;
            let p0 = if needs_tables && !small { self.posterior(0, rng) } else { None };
            if needs_tables && !small && p0.is_none() {
                self.gave_up = true;
                return;
            }
            self.candidates = Some(CandidateState::start(log_n, &self.seen, p0));
        } else {
            let Some(p) = self.posterior(j, rng) else {
                self.gave_up = true;
                return;
            };
            self.candidates.as_mut().expect("S_0 computed first").advance(p);
        }
        let cand = self.candidates.as_ref().expect("candidates");
        match self.arm {
            OrdinalArm::Center { i } if i == j => match CandidateState::center(cand.current()) {
                Some((_, v)) => self.tau = Some(v),
                None => self.gave_up = true,
            },
            OrdinalArm::Shrink if cand.current().len() <= 10 => {
                let s = cand.current();
                if s.is_empty() {
                    self.gave_up = true;
                } else {
                    self.tau = Some(s[rng.gen_range(0..s.len())].1);
                }
            }
            OrdinalArm::Shrink if j == log_n => self.gave_up = true,
            _ => {}
        }
    }
}

impl OnlinePolicy for OrdinalKnownDist {
    fn name(&self) -> String {
        "ordinal_knowndist".into()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) {
        let sch = self.model.schedule();
        let log_n = sch.log_n();
        self.arm = match rng.gen_range(0..3) {
            0 => {
                let i = rng.gen_range(1..=log_n);
                let w = IntervalWindow::new(sch.checkpoint(i - 1), sch.checkpoint(i)).expect("increasing checkpoints");
                OrdinalArm::Window(TwoCheckpoints::new(w))
            }
            1 => OrdinalArm::Center { i: rng.gen_range(0..=log_n) },
            _ => OrdinalArm::Shrink,
        };
        if let OrdinalArm::Window(w) = &mut self.arm {
            w.reset(rng);
        }
        self.seen.clear();
        self.next_checkpoint = 0;
        self.candidates = None;
        self.tau = None;
        self.gave_up = false;
        self.done = false;
    }

    fn on_arrival(&mut self, a: &Arrival, rng: &mut dyn RngCore) -> Decision {
        if let OrdinalArm::Window(w) = &mut self.arm {
            return w.on_arrival(a, rng);
        }
        let log_n = self.model.schedule().log_n();
        while !self.gave_up
            && self.next_checkpoint <= log_n
            && a.time > self.model.schedule().checkpoint(self.next_checkpoint)
        {
            let j = self.next_checkpoint;
            self.next_checkpoint += 1;
            if self.needs_checkpoint(j) {
                self.process_checkpoint(j, rng);
            }
        }
        self.seen.push(*a);
        if self.done || self.gave_up {
            return Decision::Skip;
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
                OrdinalArm::Window(_) => "two_checkpoint",
                OrdinalArm::Center { .. } => "center",
                OrdinalArm::Shrink => "shrink",
            }
            .into(),
        )
    }

    fn is_ordinal(&self) -> bool {
        true
    }
}
