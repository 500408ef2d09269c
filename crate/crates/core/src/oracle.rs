//! Dense reference computations on small tori (`L <= 16`, at most 256
//! states): matrix exponentials and direct linear solves against the
//! transition matrix of the folded walk.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::kernels::JumpKernel;
use crate::torus::{Site, TorusSpec};
use crate::wrapped::{TorusKernel, WrapError};

pub const MAX_SIDE: usize = 16;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dense oracle limited to L <= {MAX_SIDE}, got L = {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Wrap(#[from] WrapError),
    #[error("lambda must be finite and > 0, got {0}")]
    BadLambda(f64),
    #[error("time must be finite and >= 0, got {0}")]
    BadTime(f64),
    #[error("linear system is singular")]
    Singular,
    #[error("linear solve residual {0:e} exceeds tolerance")]
    Residual(f64),
}

/// Rate-one continuous-time walk on `T_L` with generator `Q = P - I`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseChain {
    spec: TorusSpec,
    transition: DMatrix<f64>,
}

impl DenseChain {
    pub fn from_kernel(kernel: &JumpKernel<f64>, spec: TorusSpec) -> Result<Self, OracleError> {
        Self::from_torus_kernel(&TorusKernel::from_kernel(kernel, spec)?)
    }

    pub fn from_torus_kernel(kernel: &TorusKernel<f64>) -> Result<Self, OracleError> {
        let spec = kernel.spec();
        if spec.side() > MAX_SIDE {
            return Err(OracleError::TooLarge(spec.side()));
        }
        let n = spec.size();
        let transition = DMatrix::from_fn(n, n, |i, j| kernel.mass(spec.site(j) - spec.site(i)));
        Ok(DenseChain { spec, transition })
    }

    pub fn spec(&self) -> TorusSpec {
        self.spec
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn generator(&self) -> DMatrix<f64> {
        let n = self.spec.size();
        &self.transition - DMatrix::identity(n, n)
    }

    /// Largest row-sum defect and largest `|P(x,y) - P(-x,-y)|`.
    pub fn invariant_defects(&self) -> (f64, f64) {
        let n = self.spec.size();
        let row = (0..n).map(|i| (self.transition.row(i).sum() - 1.0).abs()).fold(0.0, f64::max);
        let mut sym = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let (ni, nj) = (self.spec.index(-self.spec.site(i)), self.spec.index(-self.spec.site(j)));
                sym = sym.max((self.transition[(i, j)] - self.transition[(ni, nj)]).abs());
            }
        }
        (row, sym)
    }

    /// `exp(t Q)` by scaling and squaring.
    pub fn semigroup(&self, t: f64) -> Result<DMatrix<f64>, OracleError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(OracleError::BadTime(t));
        }
        Ok((self.generator() * t).exp())
    }

    fn solve(&self, a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>, OracleError> {
        let x = a.clone().lu().solve(&b).ok_or(OracleError::Singular)?;
        let residual = (&a * &x - &b).amax();
        if residual > RESIDUAL_TOL {
            return Err(OracleError::Residual(residual));
        }
        Ok(x)
    }
}

/// `P_0(X_t = x)` in storage order.
pub fn dense_heat(chain: &DenseChain, t: f64) -> Result<Vec<f64>, OracleError> {
    let e = chain.semigroup(t)?;
    let o = chain.spec.origin_index();
    Ok(e.row(o).iter().copied().collect())
}

/// `G_L(x, lambda)` from `(lambda I - Q) g = e_0`.
pub fn dense_green(chain: &DenseChain, lambda: f64) -> Result<Vec<f64>, OracleError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(OracleError::BadLambda(lambda));
    }
    let n = chain.spec.size();
    let a = DMatrix::identity(n, n) * lambda - chain.generator();
    let mut b = DVector::zeros(n);
    b[chain.spec.origin_index()] = 1.0;
    Ok(chain.solve(a, b)?.iter().copied().collect())
}

/// `F_L(x, lambda)` from the absorbing system `F(0) = 1`,
/// `(1 + lambda) F(x) = sum_y P(x, y) F(y)` for `x != 0`.
pub fn dense_laplace_hit(chain: &DenseChain, lambda: f64) -> Result<Vec<f64>, OracleError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(OracleError::BadLambda(lambda));
    }
    let spec = chain.spec;
    let o = spec.origin_index();
    let free: Vec<usize> = (0..spec.size()).filter(|&i| i != o).collect();
    let m = free.len();
    let p = &chain.transition;
    let a = DMatrix::from_fn(m, m, |r, c| {
        let diag = if r == c { 1.0 + lambda } else { 0.0 };
        diag - p[(free[r], free[c])]
    });
    let b = DVector::from_fn(m, |r, _| p[(free[r], o)]);
    let x = chain.solve(a, b)?;
    let mut out = vec![1.0; spec.size()];
    for (r, &i) in free.iter().enumerate() {
        out[i] = x[r];
    }
    Ok(out)
}

/// Convenience lookup into a storage-order vector.
pub fn at(spec: TorusSpec, values: &[f64], x: Site) -> f64 {
    values[spec.index(x)]
}
