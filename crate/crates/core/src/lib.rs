//! Event-by-event simulation of a two-station Bell experiment driven by a
//! classical vector hidden variable, with threshold detection and a
//! contextual master/slave instruction, plus tools for counting statistics
//! and for reordering outcome tables with empty boxes.

pub mod cli;
pub mod engine;
pub mod geometry;
pub mod io;
pub mod model;
pub mod sica;
pub mod stats;
