//! And-Inverter Graph toolkit: AIGER I/O, bit-parallel logic simulation, a
//! small reverse-mode tensor engine, and a polarity-dual relational graph
//! network trained for signal-probability and truth-table-distance
//! prediction.

pub mod aig;
pub mod error;
pub mod model;
pub mod numerics;
pub mod sim;
pub mod train;
