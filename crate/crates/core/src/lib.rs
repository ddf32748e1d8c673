//! Distributed memory parallel data structures.
//!
//! Three layers: [`transport`] moves frames between ranked endpoints,
//! [`groups`] builds collectives (reduce, broadcast, all-reduce, scan,
//! circular shift) on top of it, and [`dpd`] exposes distributed values,
//! sequences and grids whose operations map onto those collectives.
//! [`costmodel`] accounts for what the collectives actually sent and
//! [`runtime`] launches SPMD programs. [`apps`] holds the sample programs.

pub mod apps;
pub mod costmodel;
pub mod dpd;
pub mod error;
pub mod groups;
pub mod runtime;
pub mod transport;

pub use costmodel::{CostLedger, CostParams, Pattern};
pub use dpd::{DistGrid, DistSeq, DistVal, GridShape, Lazy, Numeric, ShouldEqual};
pub use error::{Error, Result};
pub use groups::{BinaryOp, Comm, Group, Wire};
pub use runtime::{run, run_loopback_tcp, simulate, BackendKind, RunConfig, RunOutput};
pub use transport::{Endpoint, Rank};
