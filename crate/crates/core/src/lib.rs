//! Contact-process engine.
//!
//! Graph families and truncations ([`graph`]), Harris's graphical
//! construction with forward, backward and direct-rate evolution
//! ([`graphical`]), and the samplers built on top of it ([`process`]).
//! The crate is `no_std` and needs only `alloc`; replicate batches are
//! scheduled through the [`Replicate`] trait so a caller can supply a
//! thread pool.

#![no_std]

extern crate alloc;

pub mod error;
pub mod graph;
pub mod graphical;
pub mod process;
pub mod rng;

pub use error::SimError;
pub use graph::{build_graph, Family, Graph, GraphError, GraphSpec};
pub use graphical::{Configuration, GraphicalSample, PoissonSource, Trajectory};

use alloc::vec::Vec;

/// Runs independent replicas. Implementations must return results in
/// replica order, so merges do not depend on scheduling.
pub trait Replicate: Sync {
    fn run<T, F>(&self, count: u64, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs replicas one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Replicate for Serial {
    fn run<T, F>(&self, count: u64, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..count).map(job).collect()
    }
}
