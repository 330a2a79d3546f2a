//! Zonal interface transfer limits (ITLs) from nodal AC transmission data.
//!
//! The library builds a cleaned nodal network, computes its PTDF matrix, and
//! solves per-interface linear programs that maximize the total flow on
//! interface-crossing lines subject to line ratings, PTDF flow coupling, and
//! bus-type injection limits. On top of that sit n-1 contingency analysis,
//! zone-to-region aggregation, and the CSV/JSON reporting pipeline used by
//! the `itl` command-line tool.

pub mod contingency;
pub mod error;
pub mod geo;
pub mod io;
pub mod lp;
pub mod network;
pub mod pipeline;
pub mod prep;
pub mod ptdf;
pub mod solver;
pub mod stats;
pub mod synth;
pub mod testnet;

pub use error::{ItlError, Result};
pub use network::{Bus, BusType, Interface, Line, LineKind, Network};
