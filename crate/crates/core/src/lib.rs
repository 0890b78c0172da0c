//! Brownian motions on a star graph with Feller–Wentzell vertex conditions.

pub mod cli;
pub mod error;
pub mod graph;
pub mod kernels;
pub mod quad;
pub mod resolvents;
pub mod samplers;
pub mod scattering;
pub mod sim;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
pub use graph::{BoundaryParams, GraphFunction, GraphPoint, ProcessKind, StarGraph};
