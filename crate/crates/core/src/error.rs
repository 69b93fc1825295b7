use thiserror::Error;

use crate::conflict::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the modelling and algorithm layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("received power must be positive, got {0}")]
    NonPositivePower(f64),

    #[error("invalid frequency map: {0}")]
    InvalidMap(String),

    #[error("unsupported sector count n = {0} (expected one of 1, 2, 3, 4, 6, 12)")]
    UnsupportedSectorCount(u32),

    #[error("sessions {0} and {1} are in the same cell")]
    SameCell(VertexId, VertexId),

    #[error("vertex {0} is already admitted")]
    DuplicateVertex(VertexId),

    #[error("neighbor {0} is not an admitted vertex")]
    UnknownNeighbor(VertexId),

    #[error("vertex {0} is not admitted")]
    UnknownVertex(VertexId),

    #[error("cell {0} has no frequency channel but a fixed plan was requested")]
    PlanMissing(usize),

    #[error("delay budget {delay_budget} ms does not exceed beacon duration {beacon} ms")]
    InfeasibleBudget { delay_budget: f64, beacon: f64 },

    #[error("slot holds {0} packets, fewer than one packet plus guard time")]
    SlotTooSmall(f64),
}
