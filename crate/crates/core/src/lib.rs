//! Capacity planning for VoIP over multi-cell 802.11 networks.
//!
//! The crate covers hexagonal topologies, conflict graphs between voice
//! sessions, clique-based admission control, two-layer channel/slot
//! coloring for co-channel TDMA, closed-form capacity estimates and a
//! config-driven scenario runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admission;
pub mod capacity;
pub mod coloring;
pub mod conflict;
pub mod error;
pub mod geometry;
pub mod rng;
pub mod scenario;

pub use admission::{AdmissionReport, AdmissionState, Clique, Decision};
pub use capacity::{capacity_report, CapacityReport, CodecProfile, TimingParams};
pub use coloring::{color, validate_assignment, CoTdmaParams, ColorAssignment, FrequencyPlan, Violation};
pub use conflict::{build_admission_graph, build_coloring_graph, ConflictGraph, GraphMode, Session, VertexId};
pub use error::{Error, Result};
pub use geometry::{FrequencyScheme, Point, RadioParams, Topology};
pub use scenario::{run, Mode, RunManifest, ScenarioConfig, ScenarioError};
