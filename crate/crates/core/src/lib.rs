//! Numerical laboratory for generalized gamma convolutions.
//!
//! The crate evaluates densities of finite gamma sums, Laplace transforms of
//! powers of such variables, and runs numerical checks of complete
//! monotonicity (CM) and hyperbolic complete monotonicity (HCM).

pub mod error;
pub mod gammaconv;
pub mod monotone;
pub mod output;
pub mod quadrature;
pub mod specfun;
pub mod stochastics;

pub use error::{Error, Result};
pub use quadrature::{QuadratureConfig, UnitPoint};
