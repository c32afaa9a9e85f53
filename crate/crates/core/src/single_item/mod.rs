//! Single-item policies.

pub mod logstar;
pub mod ordinal;
pub mod two_blue;

pub use logstar::{log_star, value_max_logstar, LogStarSchedule, ValueMaxLogStar};
pub use ordinal::{
    CandidateState, CandidateStep, OrdinalKnownDist, OrdinalSchedule, PosteriorConfig, PosteriorMode, PosteriorModel,
    PosteriorTable,
};
pub use two_blue::{
    classify_input_good_bad, probability_good, sequence_stream, InputClass, MixedReduced, MixedTwoBlue, ReducedState,
    TwoBluePolicy, TwoBluePrior, TwoBlueState,
};
