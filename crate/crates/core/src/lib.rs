//! Hitting and coalescence times of random walks on the two-dimensional
//! discrete torus `T_L = (-L/2, L/2]^2`.
//!
//! The exact side works in frequency space: a jump kernel's characteristic
//! function on the torus frequencies gives transition probabilities,
//! Green's functions and the Laplace transform of the hitting time of the
//! origin. Dense linear-algebra oracles check it on small tori, Monte Carlo
//! simulation checks it statistically, and [`limits`] holds the closed-form
//! large-torus targets the exact values are compared against.
//!
//! The numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fft2;
pub mod kernels;
pub mod limits;
pub mod mc;
pub mod oracle;
pub mod quadrature;
pub mod real;
pub mod spectral;
pub mod sum;
pub mod torus;
pub mod wrapped;

pub use kernels::{sample_jump, JumpSampler, KernelDensity, KernelError};
pub use mc::{McError, SeedSpec, TorusWalk};
pub use quadrature::{QuadratureError, QuadratureSpec};
pub use real::Real;
pub use spectral::{char_fn, ConditionParams, ConditionRow, SpectralError, UniformityGap};
pub use torus::{Region, Site, TorusError, TorusSpec};
pub use wrapped::WrapError;

pub type JumpKernel = kernels::JumpKernel<f64>;
pub type JumpKernel32 = kernels::JumpKernel<f32>;
pub type TorusKernel = wrapped::TorusKernel<f64>;
pub type TorusKernel32 = wrapped::TorusKernel<f32>;
pub type SpectralGrid = spectral::SpectralGrid<f64>;
pub type SpectralGrid32 = spectral::SpectralGrid<f32>;
pub type HeatGrid = spectral::HeatGrid<f64>;
pub type GreenField = spectral::GreenField<f64>;
pub type LaplaceField = spectral::LaplaceField<f64>;
