//! Statistical estimators, consistency checks, file formats and the
//! scenario runner built on `contact-core`.

pub mod estimators;
pub mod events;
pub mod exec;
pub mod stats;
pub mod checks;
pub mod io;
pub mod plot;
pub mod scenario;
pub mod runner;
