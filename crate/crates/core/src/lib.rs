//! Noncommutative spherical maximal means on the groups Z_{m+1}^d.
//!
//! Matrix-valued fields on the group, radial kernels and their multipliers,
//! vector-valued Schatten norms with duality certificates, the Cesàro and
//! noise-semigroup operator families, and ergodic actions by commuting
//! unitaries.

pub mod actions;
pub mod cesaro;
pub mod convolution;
pub mod error;
pub mod experiments;
pub mod families;
pub mod field;
pub mod fourier;
pub mod group;
pub mod kernels;
pub mod matrix;
pub mod noise;
pub mod norms;
pub mod quadrature;

pub use convolution::{apply_multiplier, convolve, sphere_means};
pub use error::{Error, Result};
pub use field::{field_norm, positivity_decompose, OperatorField, PositiveDecomposition};
pub use fourier::{forward_transform, inverse_transform};
pub use group::{hamming_weight, FrequencyPoint, GroupPoint, GroupSpec, RadialSpec};
pub use kernels::{MultiplierProfile, RadialKernel};
pub use matrix::CMatrix;
