//! Autonomous exploration with occlusion-free spheres.
//!
//! The crate contains the planner (frontier tracking, sphere-based viewpoint
//! generation, gain-ranked tour planning), a ray-casting baseline front-end,
//! a simplified trajectory follower and a deterministic simulator that runs
//! whole exploration episodes on synthetic voxel worlds.

pub mod baseline;
pub mod bench;
pub mod bubble;
pub mod error;
pub mod frontier;
pub mod grid;
pub mod mapio;
pub mod motion;
pub mod obstacle_index;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod sensor;
pub mod sim;
pub mod tour;
pub mod verify;
pub mod worldgen;

pub use error::{Error, Result};

/// World-frame vector, meters.
pub type Vec3 = nalgebra::Vector3<f64>;
