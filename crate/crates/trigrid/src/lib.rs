//! Parallel dispatch engine, benchmark harness and file formats on top of
//! [`trigrid_core`].

pub mod bench;
pub mod exec;
pub mod pedm;
pub mod report;
pub mod verify;

pub use trigrid_core as core;
