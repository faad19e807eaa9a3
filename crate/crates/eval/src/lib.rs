//! Analysis of bench artifacts written by `bubble-core`: finite-difference
//! kinematics of executed trajectories, paired comparison of front-end arms
//! with timed-out runs treated as censored, and byte comparison of reruns.
//!
//! Everything here reads the files on disk rather than the simulator's own
//! bookkeeping, so it can be used to check that bookkeeping.

pub mod artifacts;
pub mod compare;
pub mod kinematics;
