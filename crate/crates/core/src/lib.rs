//! Simulation and classification of rolling tactile exploration with a
//! two-finger gripper on an actuated palm.
//!
//! The kinematic and sensing modules are generic over [`Real`]; the aliases
//! below fix the scalar to `f64`, which is what the CLI and the stored file
//! formats use. Classification always runs in `f64`.

pub mod classify;
pub mod error;
pub mod features;
pub mod geometry;
pub mod io;
pub mod numeric;
pub mod palm_control;
pub mod plot;
pub mod procedure;
pub mod scalar;
pub mod sensor_model;

pub use error::{Error, Result};
pub use procedure::Shape;
pub use scalar::Real;

pub type ConvexProfile = geometry::ConvexProfile<f64>;
pub type HandGeometry = geometry::HandGeometry<f64>;
pub type GraspState = geometry::GraspState<f64>;
pub type ControllerConfig = palm_control::ControllerConfig<f64>;
pub type PalmController = palm_control::PalmController<f64>;
pub type SensorConfig = sensor_model::SensorConfig<f64>;
pub type SensorArray = sensor_model::SensorArray<f64>;
pub type ProcedureConfig = procedure::ProcedureConfig<f64>;
pub type SimulationConfig = procedure::SimulationConfig<f64>;
pub type Simulator = procedure::Simulator<f64>;
pub type RunConfig = procedure::RunConfig<f64>;
pub type SensorTrace = procedure::SensorTrace<f64>;
pub type Fig2Report = procedure::Fig2Report<f64>;
pub type FeatureConfig = features::FeatureConfig<f64>;
pub type FeatureMatrix = features::FeatureMatrix<f64>;
