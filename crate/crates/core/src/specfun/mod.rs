//! Special functions and quadrature primitives.
//!
//! Everything here is a pure function of its arguments and generic over
//! [`Real`](crate::scalar::Real).

mod gamma;
mod lambert;
mod quadrature;

pub use gamma::{ln_gamma, reg_gamma_lower, reg_gamma_pair, reg_gamma_upper};
pub use lambert::{lambert_w0, lambert_w0_from_log, lambert_wm1, lambert_wm1_from_log};
pub use quadrature::{chebyshev_rule, integrate_adaptive, QuadratureRule};
