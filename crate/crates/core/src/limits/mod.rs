//! Large-torus targets: time scale `t_L = log L / M^2`, the mean scale
//! `beta = rho + 1/(pi sigma^2)`, the atom-splitting weight `alpha'`, the
//! limiting Laplace transforms and means, the mixture constant `beta_0`,
//! the pure-death lineage-count law, and the lattice-sum audits used by the
//! Fourier estimates.

mod death;
mod lattice;

pub use death::{death_process_dist, DENSE_FALLBACK_ABOVE};
pub use lattice::{
    bound_check, disc_character_sum, disc_log_sum_ratio, lemma21_audit, log_sum_ratio, shell_inverse_square_sum,
    shell_weighted_sum, torus_square_character_sum, BoundCheck, Lemma21Audit, ShellCheck,
};

use thiserror::Error;

use crate::kernels::JumpKernel;
use crate::quadrature::{integrate_square, QuadEstimate, QuadratureError, QuadratureSpec};
use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitsError {
    #[error("regime with rho = infinity has no {0}")]
    InfiniteRho(&'static str),
    #[error("invalid regime parameters: {0}")]
    BadParams(String),
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `rho = lim M_L^2 / log L`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho<T> {
    Finite(T),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams<T> {
    pub rho: Rho<T>,
    /// Normalised variance `sigma^2 = lim sigma_M^2 / M^2`.
    pub sigma2: T,
    pub alpha: T,
}

impl<T: Real> RegimeParams<T> {
    pub fn new(rho: Rho<T>, sigma2: T, alpha: T) -> Result<Self, LimitsError> {
        let params = RegimeParams { rho, sigma2, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), LimitsError> {
        if !(self.alpha >= T::zero() && self.alpha <= T::one()) {
            return Err(LimitsError::BadParams(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.sigma2 > T::zero() && self.sigma2.is_finite()) {
            return Err(LimitsError::BadParams(format!("sigma2 {} must be positive", self.sigma2)));
        }
        if let Rho::Finite(r) = self.rho {
            if !(r >= T::zero() && r.is_finite()) {
                return Err(LimitsError::BadParams(format!("rho {r} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    fn finite_rho(&self, what: &'static str) -> Result<T, LimitsError> {
        match self.rho {
            Rho::Finite(r) => Ok(r),
            Rho::Infinite => Err(LimitsError::InfiniteRho(what)),
        }
    }
}

/// `t_L = log L / M^2` (natural log).
pub fn t_scale(l: usize, m: usize) -> f64 {
    (l as f64).ln() / (m * m) as f64
}

/// `beta = rho + 1 / (pi sigma^2)`.
pub fn beta<T: Real>(params: &RegimeParams<T>) -> Result<T, LimitsError> {
    let rho = params.finite_rho("beta")?;
    Ok(rho + T::one() / (T::PI() * params.sigma2))
}

/// `alpha' = (alpha + rho pi sigma^2) / (1 + rho pi sigma^2)`.
pub fn alpha_prime<T: Real>(params: &RegimeParams<T>) -> Result<T, LimitsError> {
    let rho = params.finite_rho("alpha'")?;
    let w = rho * T::PI() * params.sigma2;
    Ok((params.alpha + w) / (T::one() + w))
}

/// Limit of `E_x exp(-lambda H_L / L^2)` (`rho = inf`) or of
/// `E_x exp(-lambda H_L / (L^2 t_L))` (`rho < inf`).
pub fn target_laplace<T: Real>(params: &RegimeParams<T>, lambda: T) -> Result<T, LimitsError> {
    if !(lambda > T::zero() && lambda.is_finite()) {
        return Err(LimitsError::BadArgument(format!("lambda {lambda} must be positive")));
    }
    match params.rho {
        Rho::Infinite => Ok(T::one() / (T::one() + lambda)),
        Rho::Finite(_) => {
            let a = alpha_prime(params)?;
            let b = beta(params)?;
            Ok((T::one() - a) + a / (T::one() + b * lambda))
        }
    }
}

/// Limit of the scaled mean hitting time: `1` or `alpha' beta`.
pub fn target_mean<T: Real>(params: &RegimeParams<T>) -> Result<T, LimitsError> {
    match params.rho {
        Rho::Infinite => Ok(T::one()),
        Rho::Finite(_) => Ok(alpha_prime(params)? * beta(params)?),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beta0Estimate<T> {
    pub value: T,
    /// Levels of the normalised integral `(2 pi)^-2 int_{B(pi)} ...`.
    pub integral: QuadEstimate<T>,
}

/// `beta_0 = 12/(c pi) + (2 pi)^-2 int_{B(pi)} d theta / (1 - (1 - c) q0_hat(theta))`.
pub fn beta0<T: Real>(c: T, q0: &JumpKernel<T>, quad: &QuadratureSpec) -> Result<Beta0Estimate<T>, LimitsError> {
    if !(c > T::zero() && c <= T::one()) {
        return Err(LimitsError::BadArgument(format!("c {c} must lie in (0, 1]")));
    }
    let pi = T::PI();
    let area = (pi + pi) * (pi + pi);
    let short = T::one() - c;
    let integrand = |th: [T; 2]| T::one() / (T::one() - short * q0.char_fn(th)) / area;
    // Convergence is judged on the normalised integral.
    let integral = integrate_square(&integrand, pi, quad)?;
    let value = T::lit(12.0) / (c * pi) + integral.value;
    Ok(Beta0Estimate { value, integral })
}
