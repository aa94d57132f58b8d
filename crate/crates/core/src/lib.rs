//! Joint parsing of multi-agent trajectories with a spatiotemporal AND-OR
//! grammar: people groupings, group events, human roles and latent sub-event
//! segmentations.
//!
//! The pipeline is: [`learning::train`] a [`Model`] from annotated
//! [`Dataset`]s, then [`inference::infer`] a [`Solution`] for new data and
//! score it with [`metrics::evaluate`].

pub mod error;
pub mod features;
pub mod grammar;
pub mod grid;
pub mod inference;
pub mod io;
pub mod learning;
pub mod likelihood;
pub mod metrics;
pub mod model;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureConfig, FeatureStandardizer, RelationLayout, RelationVector};
pub use grammar::{DurationPrior, Grammar, Model, TemplateNode, Violation};
pub use inference::InferenceConfig;
pub use learning::TrainingConfig;
pub use likelihood::{EnergyBreakdown, GroupEnergy, SegmentEnergy};
pub use model::{
    Dataset, Geometry, ParseGraph, PhaseSpan, Point, Sample, SceneModel, SceneObject, SegmentLabel, Solution,
    SolvedGroup, Trajectory, TrajectorySegment, TruthGroup, Vocabulary,
};
