//! Horizontal magnetic fields on three-dimensional contact sub-Riemannian
//! manifolds.

pub mod contact;
pub mod expr;
pub mod lift;
pub mod magnetic;
pub mod numeric;
pub mod rumin;
pub mod scenario;
