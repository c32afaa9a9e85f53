//! Instances, streams, benchmarks and the online execution contract.

pub mod benchmark;
pub mod constraint;
pub mod instance;
pub mod policy;
pub mod stream;

pub use benchmark::{compute_benchmark, Benchmark};
pub use constraint::{Feasibility, IndependenceOracle, PartitionOracle, PartitionStructure, UniformOracle};
pub use instance::{Color, Element, MixedInstance, PureInstance};
pub use policy::{run_policy, Decision, DecisionRecord, OnlinePolicy, PolicyTrace};
pub use stream::{discretize_time, realize_stream, realize_stream_with, Arrival, RealizeOptions, RealizedStream};
