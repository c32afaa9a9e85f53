//! Offline oracles for the leave-one-out benchmark V*: the best feasible set
//! of greens once the top green is removed.

use super::constraint::Feasibility;
use super::instance::PureInstance;
use crate::error::{BsecError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub value: f64,
    /// Element indices of one optimal set.
    pub set: Vec<usize>,
    /// False when branch-and-bound stopped at its node budget.
    pub exact: bool,
}

/// Largest number of candidate greens solved by plain subset enumeration.
pub const KNAPSACK_EXHAUSTIVE_MAX: usize = 20;
const BNB_NODE_BUDGET: u64 = 50_000_000;

pub fn compute_benchmark(inst: &PureInstance, kind: &Feasibility) -> Result<Benchmark> {
    let g_max = inst.g_max();
    let mut cand: Vec<usize> = inst.greens().filter(|&g| g != g_max).collect();
    cand.sort_by(|&a, &b| inst.element(b).value.total_cmp(&inst.element(a).value));
    let value_of = |set: &[usize]| set.iter().map(|&i| inst.element(i).value).sum::<f64>();
    let exact = |set: Vec<usize>| Benchmark { value: value_of(&set), set, exact: true };
    match kind {
        Feasibility::Unconstrained => Ok(exact(cand)),
        Feasibility::SingleItem => Ok(exact(cand.into_iter().take(1).collect())),
        Feasibility::Uniform { r } => Ok(exact(cand.into_iter().take(*r).collect())),
        Feasibility::Partition(p) => {
            let mut used = vec![0usize; p.num_parts()];
            let mut set = Vec::new();
            for i in cand {
                let part = p.part_of(i);
                if used[part] < p.capacity(part) {
                    used[part] += 1;
                    set.push(i);
                }
            }
            Ok(exact(set))
        }
        Feasibility::Matroid(o) => {
            // greedy is optimal on a matroid
            let mut set = Vec::new();
            for i in cand {
                set.push(i);
                if !o.is_independent(&set) {
                    set.pop();
                }
            }
            Ok(exact(set))
        }
        Feasibility::Knapsack { capacity } => {
            if !(*capacity > 0.0) {
                return Err(BsecError::InvalidParameter(format!("knapsack capacity {capacity} must be positive")));
            }
            let items: Vec<(f64, f64)> =
                cand.iter().map(|&i| (inst.element(i).value, inst.element(i).size)).collect();
            let (chosen, exact_flag) = if items.len() <= KNAPSACK_EXHAUSTIVE_MAX {
                (knapsack_exhaustive(&items, *capacity), true)
            } else {
                knapsack_branch_and_bound(&items, *capacity, BNB_NODE_BUDGET)
            };
            let set: Vec<usize> = chosen.into_iter().map(|k| cand[k]).collect();
            Ok(Benchmark { value: value_of(&set), set, exact: exact_flag })
        }
    }
}

/// Best subset of `(value, size)` items by full enumeration.
pub fn knapsack_exhaustive(items: &[(f64, f64)], capacity: f64) -> Vec<usize> {
    let m = items.len();
    assert!(m < 31, "exhaustive knapsack limited to 30 items");
    let mut best = (0.0, 0u32);
    for mask in 0u32..(1u32 << m) {
        let (mut v, mut s) = (0.0, 0.0);
        for (k, it) in items.iter().enumerate() {
            if mask >> k & 1 == 1 {
                v += it.0;
                s += it.1;
            }
        }
        if s <= capacity + 1e-9 && v > best.0 {
            best = (v, mask);
        }
    }
    (0..m).filter(|k| best.1 >> k & 1 == 1).collect()
}

/// Depth-first branch-and-bound with the fractional relaxation as bound.
/// Returns the chosen indices and whether the search finished.
pub fn knapsack_branch_and_bound(items: &[(f64, f64)], capacity: f64, node_budget: u64) -> (Vec<usize>, bool) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| (items[b].0 / items[b].1).total_cmp(&(items[a].0 / items[a].1)));
    let sorted: Vec<(f64, f64)> = order.iter().map(|&k| items[k]).collect();

    struct Search<'a> {
        items: &'a [(f64, f64)],
        capacity: f64,
        best_value: f64,
        best: Vec<bool>,
        current: Vec<bool>,
        nodes: u64,
        budget: u64,
    }

    impl Search<'_> {
        fn bound(&self, k: usize, value: f64, room: f64) -> f64 {
            let mut b = value;
            let mut room = room;
            for &(v, s) in &self.items[k..] {
                if s <= room {
                    room -= s;
                    b += v;
                } else {
                    return b + v * room / s;
                }
            }
            b
        }

        fn go(&mut self, k: usize, value: f64, room: f64) {
            self.nodes += 1;
            if value > self.best_value {
                self.best_value = value;
                self.best = self.current.clone();
            }
            if k == self.items.len() || self.nodes > self.budget {
                return;
            }
            if self.bound(k, value, room) <= self.best_value + 1e-12 {
                return;
            }
            let (v, s) = self.items[k];
            if s <= room + 1e-9 {
                self.current[k] = true;
                self.go(k + 1, value + v, room - s);
                self.current[k] = false;
            }
            self.go(k + 1, value, room);
        }
    }

    let mut search = Search {
        items: &sorted,
        capacity,
        best_value: 0.0,
        best: vec![false; sorted.len()],
        current: vec![false; sorted.len()],
        nodes: 0,
        budget: node_budget,
    };
    let room = search.capacity;
    search.go(0, 0.0, room);
    let finished = search.nodes <= search.budget;
    let chosen = (0..sorted.len()).filter(|&k| search.best[k]).map(|k| order[k]).collect();
    (chosen, finished)
}
