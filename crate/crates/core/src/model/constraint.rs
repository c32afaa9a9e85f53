//! Feasibility constraints shared by the evaluator, the benchmark oracles and
//! the matroid policies.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{BsecError, Result};

/// Partition of element indices into parts with per-part capacities.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionStructure {
    part_of: Vec<usize>,
    capacities: Vec<usize>,
    names: Vec<String>,
}

impl PartitionStructure {
    /// `part_of[i]` is the part of element `i`.
    pub fn new(part_of: Vec<usize>, capacities: Vec<usize>) -> Result<Self> {
        let names = (0..capacities.len()).map(|p| format!("P{p}")).collect();
        Self::with_names(part_of, capacities, names)
    }

    pub fn with_names(part_of: Vec<usize>, capacities: Vec<usize>, names: Vec<String>) -> Result<Self> {
        if names.len() != capacities.len() {
            return Err(BsecError::InvalidInstance("part names and capacities differ in length".into()));
        }
        if let Some(&p) = part_of.iter().find(|&&p| p >= capacities.len()) {
            return Err(BsecError::InvalidInstance(format!("element assigned to unknown part {p}")));
        }
        if capacities.contains(&0) {
            return Err(BsecError::InvalidInstance("capacities must be at least 1".into()));
        }
        Ok(PartitionStructure { part_of, capacities, names })
    }

    /// Builds the structure from the JSON maps, resolving ids through `index_of`.
    pub fn from_maps(
        parts: &BTreeMap<String, Vec<String>>,
        capacities: &BTreeMap<String, usize>,
        n: usize,
        index_of: impl Fn(&str) -> Option<usize>,
    ) -> Result<Self> {
        let mut part_of = vec![usize::MAX; n];
        let mut caps = Vec::new();
        let mut names = Vec::new();
        for (p, (name, ids)) in parts.iter().enumerate() {
            for id in ids {
                let i = index_of(id)
                    .ok_or_else(|| BsecError::InvalidInstance(format!("part {name} names unknown id {id}")))?;
                if part_of[i] != usize::MAX {
                    return Err(BsecError::InvalidInstance(format!("id {id} appears in two parts")));
                }
                part_of[i] = p;
            }
            caps.push(*capacities.get(name).unwrap_or(&1));
            names.push(name.clone());
        }
        if part_of.contains(&usize::MAX) {
            return Err(BsecError::InvalidInstance("parts must cover every element".into()));
        }
        Self::with_names(part_of, caps, names)
    }

    pub fn part_of(&self, id: usize) -> usize {
        self.part_of[id]
    }

    pub fn capacity(&self, part: usize) -> usize {
        self.capacities[part]
    }

    pub fn num_parts(&self) -> usize {
        self.capacities.len()
    }

    pub fn name(&self, part: usize) -> &str {
        &self.names[part]
    }

    pub fn num_elements(&self) -> usize {
        self.part_of.len()
    }

    pub fn members(&self, part: usize) -> Vec<usize> {
        (0..self.part_of.len()).filter(|&i| self.part_of[i] == part).collect()
    }

    pub fn rank(&self) -> usize {
        (0..self.num_parts())
            .map(|p| self.capacities[p].min(self.members(p).len()))
            .sum()
    }
}

/// Membership oracle for a matroid over element indices.
pub trait IndependenceOracle: Send + Sync {
    fn is_independent(&self, set: &[usize]) -> bool;
    fn rank(&self) -> usize;
    fn name(&self) -> String;
}

#[derive(Clone, Debug)]
pub struct UniformOracle {
    pub r: usize,
}

impl IndependenceOracle for UniformOracle {
    fn is_independent(&self, set: &[usize]) -> bool {
        set.len() <= self.r
    }
    fn rank(&self) -> usize {
        self.r
    }
    fn name(&self) -> String {
        format!("uniform:{}", self.r)
    }
}

#[derive(Clone, Debug)]
pub struct PartitionOracle(pub PartitionStructure);

impl IndependenceOracle for PartitionOracle {
    fn is_independent(&self, set: &[usize]) -> bool {
        let mut used = vec![0usize; self.0.num_parts()];
        for &i in set {
            let p = self.0.part_of(i);
            used[p] += 1;
            if used[p] > self.0.capacity(p) {
                return false;
            }
        }
        true
    }
    fn rank(&self) -> usize {
        self.0.rank()
    }
    fn name(&self) -> String {
        "partition".into()
    }
}

/// Constraint a run is evaluated under.
#[derive(Clone)]
pub enum Feasibility {
    Unconstrained,
    SingleItem,
    Uniform { r: usize },
    Knapsack { capacity: f64 },
    Partition(PartitionStructure),
    Matroid(Arc<dyn IndependenceOracle>),
}

impl fmt::Debug for Feasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feasibility::Unconstrained => write!(f, "Unconstrained"),
            Feasibility::SingleItem => write!(f, "SingleItem"),
            Feasibility::Uniform { r } => write!(f, "Uniform({r})"),
            Feasibility::Knapsack { capacity } => write!(f, "Knapsack({capacity})"),
            Feasibility::Partition(p) => write!(f, "Partition({} parts)", p.num_parts()),
            Feasibility::Matroid(o) => write!(f, "Matroid({})", o.name()),
        }
    }
}

/// Incremental feasibility check for one trial.
pub struct FeasibilityTracker<'a> {
    kind: &'a Feasibility,
    selected: Vec<usize>,
    used_size: f64,
    part_used: Vec<usize>,
}

impl<'a> FeasibilityTracker<'a> {
    pub fn new(kind: &'a Feasibility) -> Self {
        let parts = match kind {
            Feasibility::Partition(p) => p.num_parts(),
            _ => 0,
        };
        FeasibilityTracker { kind, selected: Vec::new(), used_size: 0.0, part_used: vec![0; parts] }
    }

    /// Adds `id` if the result stays feasible.
    pub fn try_add(&mut self, id: usize, size: f64) -> bool {
        let ok = match self.kind {
            Feasibility::Unconstrained => true,
            Feasibility::SingleItem => self.selected.is_empty(),
            Feasibility::Uniform { r } => self.selected.len() < *r,
            Feasibility::Knapsack { capacity } => self.used_size + size <= capacity + 1e-9,
            Feasibility::Partition(p) => {
                let part = p.part_of(id);
                self.part_used[part] < p.capacity(part)
            }
            Feasibility::Matroid(o) => {
                let mut s = self.selected.clone();
                s.push(id);
                o.is_independent(&s)
            }
        };
        if ok {
            self.selected.push(id);
            self.used_size += size;
            if let Feasibility::Partition(p) = self.kind {
                self.part_used[p.part_of(id)] += 1;
            }
        }
        ok
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }
}
