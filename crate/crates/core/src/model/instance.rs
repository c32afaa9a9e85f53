//! Elements, pure instances and mixed (randomized) instances.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BsecError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Green,
    Red,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub id: String,
    pub value: f64,
    #[serde(default = "unit_size")]
    pub size: f64,
    pub color: Color,
}

fn unit_size() -> f64 {
    1.0
}

impl Element {
    pub fn green(id: impl Into<String>, value: f64) -> Self {
        Element { id: id.into(), value, size: 1.0, color: Color::Green }
    }

    pub fn red(id: impl Into<String>, value: f64) -> Self {
        Element { id: id.into(), value, size: 1.0, color: Color::Red }
    }

    pub fn with_size(mut self, size: f64) -> Self {
        self.size = size;
        self
    }
}

/// The adversary's committed input: every element with its value and color,
/// plus a fixed arrival time for each red element.
///
/// Elements are addressed internally by their index in `elements()`; the
/// string ids only matter for I/O.
#[derive(Clone, Debug, PartialEq)]
pub struct PureInstance {
    elements: Vec<Element>,
    red_times: Vec<Option<f64>>,
    red_rank: Option<Vec<usize>>,
    meta: serde_json::Map<String, serde_json::Value>,
}

impl PureInstance {
    /// Builds an instance from elements and a map red-id -> arrival time.
    pub fn new(elements: Vec<Element>, red_arrivals: &HashMap<String, f64>) -> Result<Self> {
        let mut red_times = vec![None; elements.len()];
        let index: HashMap<&str, usize> =
            elements.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
        for (id, &t) in red_arrivals {
            let &i = index
                .get(id.as_str())
                .ok_or_else(|| BsecError::InvalidInstance(format!("arrival for unknown id {id}")))?;
            red_times[i] = Some(t);
        }
        Self::from_indexed(elements, red_times)
    }

    /// Builds an instance where `red_times[i]` is the arrival time of element `i`
    /// (`None` for greens).
    pub fn from_indexed(elements: Vec<Element>, red_times: Vec<Option<f64>>) -> Result<Self> {
        let inst = PureInstance {
            elements,
            red_times,
            red_rank: None,
            meta: serde_json::Map::new(),
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Explicit order for reds that share an arrival time: `order` lists red
    /// element indices, earlier entries arrive first.
    pub fn with_red_order(mut self, order: &[usize]) -> Result<Self> {
        let mut rank = vec![usize::MAX; self.elements.len()];
        for (pos, &i) in order.iter().enumerate() {
            if i >= self.elements.len() || self.elements[i].color != Color::Red {
                return Err(BsecError::InvalidInstance(format!("red order names non-red index {i}")));
            }
            rank[i] = pos;
        }
        if self.reds().any(|i| rank[i] == usize::MAX) {
            return Err(BsecError::InvalidInstance("red order must list every red".into()));
        }
        self.red_rank = Some(rank);
        self.validate()?;
        Ok(self)
    }

    pub fn with_meta(mut self, key: &str, value: serde_json::Value) -> Self {
        self.meta.insert(key.to_string(), value);
        self
    }

    pub fn meta(&self) -> &serde_json::Map<String, serde_json::Value> {
        &self.meta
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BsecError::InvalidInstance(m));
        if self.red_times.len() != self.elements.len() {
            return bad("red time table length mismatch".into());
        }
        let mut ids = HashSet::new();
        for (i, e) in self.elements.iter().enumerate() {
            if !ids.insert(e.id.as_str()) {
                return bad(format!("duplicate id {}", e.id));
            }
            if !(e.value.is_finite() && e.value > 0.0) {
                return bad(format!("element {} has non-positive value {}", e.id, e.value));
            }
            if !(e.size > 0.0 && e.size <= 1.0) {
                return bad(format!("element {} has size {} outside (0,1]", e.id, e.size));
            }
            match (e.color, self.red_times[i]) {
                (Color::Red, None) => return bad(format!("red {} has no arrival time", e.id)),
                (Color::Green, Some(_)) => return bad(format!("green {} has a fixed arrival time", e.id)),
                (Color::Red, Some(t)) if !(0.0..=1.0).contains(&t) => {
                    return bad(format!("red {} arrives at {t} outside [0,1]", e.id))
                }
                _ => {}
            }
        }
        if self.greens().next().is_none() {
            return bad("instance needs at least one green element".into());
        }
        let mut values: Vec<f64> = self.elements.iter().map(|e| e.value).collect();
        values.sort_by(f64::total_cmp);
        if values.windows(2).any(|w| w[0] == w[1]) {
            return bad("values must be pairwise distinct".into());
        }
        if self.red_rank.is_none() {
            let mut times: Vec<f64> = self.red_times.iter().flatten().copied().collect();
            times.sort_by(f64::total_cmp);
            if times.windows(2).any(|w| w[0] == w[1]) {
                return bad("two reds share an arrival time and no red order is given".into());
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Element {
        &self.elements[i]
    }

    pub fn red_time(&self, i: usize) -> Option<f64> {
        self.red_times[i]
    }

    /// Tie-break rank among reds with equal times (lower arrives first).
    pub fn red_rank(&self, i: usize) -> usize {
        self.red_rank.as_ref().map_or(0, |r| r[i])
    }

    pub fn has_red_order(&self) -> bool {
        self.red_rank.is_some()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.id == id)
    }

    pub fn greens(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(|&i| self.elements[i].color == Color::Green)
    }

    pub fn reds(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(|&i| self.elements[i].color == Color::Red)
    }

    pub fn num_greens(&self) -> usize {
        self.greens().count()
    }

    /// Greens sorted by decreasing value.
    pub fn greens_by_value(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.greens().collect();
        g.sort_by(|&a, &b| self.elements[b].value.total_cmp(&self.elements[a].value));
        g
    }

    pub fn g_max(&self) -> usize {
        self.greens_by_value()[0]
    }

    /// Second most valuable green, if there are two.
    pub fn g2(&self) -> Option<usize> {
        self.greens_by_value().get(1).copied()
    }

    /// Same instance with a strictly increasing map applied to every value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = self.clone();
        for e in &mut out.elements {
            e.value = f(e.value);
        }
        out.validate()?;
        Ok(out)
    }
}

/// A finite distribution over pure instances sharing the same `n`.
#[derive(Clone, Debug)]
pub struct MixedInstance {
    states: Vec<(f64, PureInstance)>,
}

impl MixedInstance {
    pub fn new(states: Vec<(f64, PureInstance)>) -> Result<Self> {
        if states.is_empty() {
            return Err(BsecError::InvalidInstance("mixed instance has no states".into()));
        }
        let n = states[0].1.n();
        let mut total = 0.0;
        for (w, s) in &states {
            if !(w.is_finite() && *w > 0.0) {
                return Err(BsecError::InvalidInstance(format!("state weight {w} must be positive")));
            }
            if s.n() != n {
                return Err(BsecError::InvalidInstance("states disagree on n".into()));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(BsecError::InvalidInstance(format!("weights sum to {total}, not 1")));
        }
        Ok(MixedInstance { states })
    }

    /// Normalizes arbitrary positive weights before validating.
    pub fn normalized(states: Vec<(f64, PureInstance)>) -> Result<Self> {
        let total: f64 = states.iter().map(|(w, _)| *w).sum();
        Self::new(states.into_iter().map(|(w, s)| (w / total, s)).collect())
    }

    pub fn single(inst: PureInstance) -> Self {
        MixedInstance { states: vec![(1.0, inst)] }
    }

    pub fn states(&self) -> &[(f64, PureInstance)] {
        &self.states
    }

    pub fn n(&self) -> usize {
        self.states[0].1.n()
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> &PureInstance {
        let mut u: f64 = rng.gen();
        for (w, s) in &self.states {
            if u < *w {
                return s;
            }
            u -= w;
        }
        &self.states[self.states.len() - 1].1
    }
}

// ---------------------------------------------------------------------------
// JSON forms

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n: usize,
    pub elements: Vec<Element>,
    pub red_arrivals: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub red_order: Option<Vec<String>>,
    #[serde(default)]
    pub meta: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacities: Option<BTreeMap<String, usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedStateJson {
    pub weight: f64,
    pub instance: InstanceJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedJson {
    pub states: Vec<MixedStateJson>,
}

impl From<&PureInstance> for InstanceJson {
    fn from(inst: &PureInstance) -> Self {
        let red_arrivals = inst
            .reds()
            .map(|i| (inst.elements[i].id.clone(), inst.red_times[i].unwrap_or(0.0)))
            .collect();
        let red_order = inst.red_rank.as_ref().map(|rank| {
            let mut reds: Vec<usize> = inst.reds().collect();
            reds.sort_by_key(|&i| rank[i]);
            reds.into_iter().map(|i| inst.elements[i].id.clone()).collect()
        });
        InstanceJson {
            n: inst.n(),
            elements: inst.elements.clone(),
            red_arrivals,
            red_order,
            meta: inst.meta.clone(),
            parts: None,
            capacities: None,
        }
    }
}

impl TryFrom<&InstanceJson> for PureInstance {
    type Error = BsecError;

    fn try_from(j: &InstanceJson) -> Result<Self> {
        if j.n != j.elements.len() {
            return Err(BsecError::InvalidInstance(format!(
                "n = {} but {} elements listed",
                j.n,
                j.elements.len()
            )));
        }
        let arrivals: HashMap<String, f64> = j.red_arrivals.clone().into_iter().collect();
        let mut inst = PureInstance::new(j.elements.clone(), &arrivals)?;
        if let Some(order) = &j.red_order {
            let idx: Result<Vec<usize>> = order
                .iter()
                .map(|id| {
                    inst.index_of(id)
                        .ok_or_else(|| BsecError::InvalidInstance(format!("red order names unknown id {id}")))
                })
                .collect();
            inst = inst.with_red_order(&idx?)?;
        }
        inst.meta = j.meta.clone();
        Ok(inst)
    }
}

impl From<&MixedInstance> for MixedJson {
    fn from(m: &MixedInstance) -> Self {
        MixedJson {
            states: m
                .states
                .iter()
                .map(|(w, s)| MixedStateJson { weight: *w, instance: s.into() })
                .collect(),
        }
    }
}

impl TryFrom<&MixedJson> for MixedInstance {
    type Error = BsecError;

    fn try_from(j: &MixedJson) -> Result<Self> {
        let states: Result<Vec<(f64, PureInstance)>> = j
            .states
            .iter()
            .map(|s| Ok((s.weight, PureInstance::try_from(&s.instance)?)))
            .collect();
        MixedInstance::new(states?)
    }
}
