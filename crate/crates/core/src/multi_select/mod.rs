//! Policies that select many elements: knapsack, uniform matroids and the
//! subsampling filter.

pub mod filter;
pub mod general;
pub mod knapsack;
pub mod uniform;

pub use filter::{subsample_filter, SubsampleFilter};
pub use general::{knapsack_general, GeneralKnapsackParams, KnapsackGeneral};
pub use knapsack::{knapsack_core, BudgetLedger, Charge, DensityLevels, KnapsackCore, KnapsackParams, KnapsackStats};
pub use uniform::{uniform_constant, DoublingPolicy, DoublingThreshold};
