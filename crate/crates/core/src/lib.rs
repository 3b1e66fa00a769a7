//! Port logistics simulation and scheduling engine.
//!
//! Pipeline: AIS/IoT ingestion and synthetic traffic ([`ingest`]), ship-centred
//! feature tensors ([`grid`]), delay detection and ETA prediction ([`eta`]),
//! berth planning with dynamic re-planning ([`berth`]), and a seeded
//! discrete-event simulation of quay-crane throughput ([`sim`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geo;
pub mod grid;
pub mod ingest;
pub mod model;
pub mod num;
pub mod seed;
pub mod units;
pub mod berth;
pub mod eta;
pub mod sim;
pub mod weather;

pub use num::Scalar;

/// Default scalar for the concrete aliases below.
pub type Real = f64;
pub type Position = geo::LatLon<Real>;
pub type Tensor = grid::GridTensor<Real>;
