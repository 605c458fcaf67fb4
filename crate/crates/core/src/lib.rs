//! Opacity-preserving compositional abstractions of interconnected
//! discrete-time control systems.

pub mod abstraction;
pub mod design;
pub mod error;
pub mod geometry;
pub mod kinf;
pub mod model;
pub mod opacity;
mod parallel;
pub mod pipeline;
pub mod relations;

pub use abstraction::{FiniteSystem, QuantParams};
pub use design::{design_parameters, DesignOptions, DesignResult};
pub use error::{Error, Result};
pub use geometry::{BoxUnion, GridSet, Hyperbox, Interval};
pub use kinf::MonotoneFn;
pub use model::{IssCertificate, NetworkSpec, SubsystemSpec};
pub use opacity::{Notion, OpacityVerdict};
pub use pipeline::{run_pipeline, PipelineOptions, RunReport};
