//! Bergman kernels, Fubini–Study measures and zeros of random sections on the
//! singular plane curves `X_Q = { z0^(d-1) z2 = Q(z0, z1) }`.

pub mod bergman;
pub mod config;
pub mod curve;
pub mod diagnostics;
pub mod linalg;
pub mod plot;
pub mod quadrature;
pub mod roots;
pub mod runner;
pub mod weights;
pub mod zeros;
