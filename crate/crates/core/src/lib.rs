//! Exact verification and search of ping-pong certificates for symplectic
//! hypergeometric groups.

pub mod algebra;
pub mod certstore;
pub mod cone;
pub mod group;
pub mod search;
pub mod verify;
