//! Batch reward labeling for driving logs with an occluded pedestrian
//! crossing, plus the desk-scale tooling needed to validate the labels:
//! a 1-D longitudinal crossing simulator, a tabular fitted-Q learner, and
//! the dataset pipeline that ties them together.
//!
//! The crate is organized around the frame flow:
//!
//! * [`semantics`] decodes per-pixel class maps and extracts pedestrian /
//!   crossing / vehicle structure from them,
//! * [`risk`] turns that structure into risk factors and the binary safety
//!   flag `c_t` that gates the reward,
//! * [`geometry`] estimates pedestrian distance from blob height,
//! * [`reward`] computes the per-transition reward terms,
//! * [`attention`] re-weights encoder feature cubes with semantic layers,
//! * [`sim`] generates synthetic crossing episodes and renders them back
//!   into semantic maps,
//! * [`policy`] fits a tabular Q function to labeled transitions and
//!   evaluates it in the simulator,
//! * [`pipeline`] ingests recorded episodes, labels them, and round-trips
//!   datasets to disk.

pub mod attention;
pub mod config;
pub mod geometry;
pub mod pipeline;
pub mod policy;
pub mod reward;
pub mod risk;
pub mod semantics;
pub mod sim;
