//! Grid worlds, object transformations, compositional episodes and their scoring.

pub mod episodes;
pub mod grammar;
pub mod grid;
pub mod jsonl;
pub mod metrics;
pub mod prompt;
pub mod render;
pub mod shapes;
pub mod solver;
pub mod split;
pub mod taxonomy;
pub mod transforms;

pub use episodes::{Episode, GenConfig, GenError, Sample, Setup, Tier};
pub use grammar::{Kind, Triplet, VisualGrammar};
pub use grid::{Color, Grid, GridError, Object, Shape};
pub use transforms::{Composite, Mode, Transform};
