use alloc::string::String;

use crate::graph::GraphError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("initial configuration is tagged at t={found}, sample window starts at t={expected}")]
    TimeTagMismatch { expected: f64, found: f64 },
    #[error("configuration has {found} sites, graph has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("path runs backwards in time ({from} > {to})")]
    ReversedTimes { from: f64, to: f64 },
    #[error("time {time} lies outside the sample window [{start}, {end}]")]
    OutsideWindow { time: f64, start: f64, end: f64 },
    #[error("dual run down to t={needed} underflows the sample window starting at t={start}")]
    WindowUnderflow { needed: f64, start: f64 },
    #[error(
        "acceptance rate {accepted}/{attempts} is below the floor {floor} (pilot estimate {estimate:.2e})"
    )]
    AcceptanceFloor { accepted: u64, attempts: u64, floor: f64, estimate: f64 },
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("infection front reached the truncation boundary at t={time}")]
    FrontAtBoundary { time: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
