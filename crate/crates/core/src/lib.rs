//! Exact compulsory and capacity miss counts for affine loop nests on fully
//! associative LRU caches, computed symbolically from stack distances, plus
//! a trace-driven simulator to check them against.

pub mod polyhedra;
pub mod frontend;
pub mod model;
pub mod simulator;
pub mod cli;
