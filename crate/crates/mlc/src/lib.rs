//! Patch-token transformer for grid episodes.

pub mod checkpoint;
pub mod float;
pub mod gradcheck;
pub mod model;
pub mod tape;
pub mod train;
pub mod vocab;
