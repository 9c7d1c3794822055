//! Hyperideal circle patterns on singular Euclidean and hyperbolic surfaces.

pub mod angle;
pub mod complex;
pub mod hypgeom;
pub mod linalg;
pub mod conditions;
pub mod solver;
pub mod reconstruct;
pub mod io;
pub mod pipeline;
pub mod demos;
