//! Seeded simulator of automated vehicles crossing a four-branch
//! non-signalized intersection under three coordination strategies.

pub mod config;
pub mod control;
pub mod engine;
pub mod error;
pub mod events;
pub mod geometry;
pub mod metrics;
pub mod safety;
pub mod scenario;
pub mod scalar;
pub mod strategy;
pub mod sweep;
pub mod traffic;

pub use config::SimConfig;
pub use engine::{simulate, SimOutcome};
pub use error::{ConfigError, LayoutError, ScenarioError, SimError, SweepError};
pub use geometry::{Branch, ConflictCase, ConflictPair, Intention, IntersectionLayout, Path};
pub use safety::Zone;
pub use scalar::Scalar;
pub use strategy::StrategyKind;

/// Double-precision forms of the generic safety types.
pub type BrakeParams64 = safety::BrakeParams<f64>;
pub type ZoneLengths64 = safety::ZoneLengths<f64>;
pub type Kinematics64 = traffic::Kinematics<f64>;
