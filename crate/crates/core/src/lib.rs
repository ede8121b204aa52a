//! Crossing-minimization toolkit for straight-line graph drawings.
//!
//! The pipeline: load or generate a graph, preprocess it (connectivity,
//! leaf stripping, planarity filter), lay it out with a stress-based
//! algorithm, then post-process the drawing with a reinforcement-learning
//! agent that moves one vertex at a time to reduce either the global
//! crossing number (total pairwise edge crossings) or the local crossing
//! number (maximum crossings on any single edge). A benchmark harness
//! runs the agent against force/stress baselines and a sampled
//! vertex-movement local search, and summarizes results with box-plot
//! statistics, pairwise win percentages, and Wilcoxon signed-rank tests
//! with Holm correction.

pub mod agent;
pub mod bench;
pub mod embedding;
pub mod env;
pub mod geometry;
pub mod graph;
pub mod layout;
pub mod nn;
pub mod rng;
pub mod stats;
pub mod svg;

pub use geometry::{CrossingIndex, Drawing, Point};
pub use graph::Graph;
