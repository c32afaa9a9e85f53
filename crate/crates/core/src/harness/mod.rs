//! Experiment plumbing: trial sources, seeded execution, statistics,
//! the policy registry, n-estimation wrappers and report output.

pub mod config;
pub mod n_estimate;
pub mod registry;
pub mod report;
pub mod runner;
pub mod source;
pub mod stats;

pub use config::{load_instance_file, run_experiment, ExperimentConfig, LoadedInput};
pub use n_estimate::{estimate_n_first_half, sample_n_guess, EstimateN, GuessN};
pub use registry::{build_policy, default_feasibility, default_payoff, AlgoContext, SINGLE_ITEM_POLICIES};
pub use report::{markdown, read_csv, write_csv, ReportRow};
pub use runner::{run_outcomes, run_trials, trial_rng, ExperimentReport, PayoffKind, RunSettings, TrialOutcome};
pub use source::{InstanceSource, ResampledSource, TrialInput, TrialSource, TwoBlueSource};
pub use stats::{wilson95, wilson_interval, MeanVar};
