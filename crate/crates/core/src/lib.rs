//! Finite-horizon analysis of dominated and partially dominated splittings
//! for smooth flows and locally constant suspension cocycles, including the
//! associated linear Poincare flow and cone-field certificates.

pub mod cocycle;
pub mod cones;
pub mod domination;
pub mod linalg;
pub mod poincare;
pub mod systems;
