//! Jump kernels folded onto a torus.
//!
//! A kernel of range `M < L` injects into `T_L` without collisions, so the
//! folded mass array carries exactly the same characteristic function at
//! every torus frequency. The meanfield kernel (uniform on `T'_L`) only
//! exists in folded form.

use num_traits::Float;
use thiserror::Error;

use crate::kernels::{JumpKernel, JumpSampler, KernelError};
use crate::real::Real;
use crate::sum::pairwise_sum_by;
use crate::torus::{Site, TorusSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WrapError {
    #[error("kernel range M = {m} must be smaller than the torus side L = {l}")]
    RangeTooLarge { m: usize, l: usize },
}

/// Jump masses indexed by torus storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusKernel<T> {
    spec: TorusSpec,
    label: String,
    range: usize,
    masses: Vec<T>,
    sigma2: T,
    sigma2_limit: Option<T>,
}

impl<T: Real> TorusKernel<T> {
    pub fn from_kernel(kernel: &JumpKernel<T>, spec: TorusSpec) -> Result<Self, WrapError> {
        if kernel.range() >= spec.side() {
            return Err(WrapError::RangeTooLarge { m: kernel.range(), l: spec.side() });
        }
        let mut masses = vec![T::zero(); spec.size()];
        for &(p, q) in kernel.support() {
            masses[spec.index(p)] = q;
        }
        Ok(TorusKernel {
            spec,
            label: kernel.label().to_string(),
            range: kernel.range(),
            masses,
            sigma2: kernel.sigma2(),
            sigma2_limit: kernel.sigma2_limit(),
        })
    }

    /// Folds any kernel, accumulating masses of jumps that coincide mod `L`.
    /// The walk is still `Y_t mod L` and the folded array still carries
    /// `phi` at every torus frequency; only the one-to-one correspondence
    /// between torus offsets and plane jumps is lost when `M >= L`.
    pub fn fold(kernel: &JumpKernel<T>, spec: TorusSpec) -> Self {
        let mut masses = vec![T::zero(); spec.size()];
        for &(p, q) in kernel.support() {
            let i = spec.index(p);
            masses[i] = masses[i] + q;
        }
        TorusKernel {
            spec,
            label: kernel.label().to_string(),
            range: kernel.range(),
            masses,
            sigma2: kernel.sigma2(),
            sigma2_limit: kernel.sigma2_limit(),
        }
    }

    /// Uniform jumps to every other site: mass `1 / (L^2 - 1)` on `T'_L`.
    pub fn meanfield(spec: TorusSpec) -> Self {
        let n = T::from_count(spec.size() - 1);
        let mass = T::one() / n;
        let mut masses = vec![mass; spec.size()];
        masses[spec.origin_index()] = T::zero();
        let sigma2 = pairwise_sum_by(spec.size(), &|i| {
            let x = T::lit(spec.site(i).x as f64);
            x * x * masses[i]
        });
        TorusKernel {
            spec,
            label: format!("meanfield(L={})", spec.side()),
            range: spec.side(),
            masses,
            sigma2,
            sigma2_limit: None,
        }
    }

    pub fn spec(&self) -> TorusSpec {
        self.spec
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `M` for folded kernels, `L` for the meanfield kernel.
    pub fn range(&self) -> usize {
        self.range
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn mass(&self, p: Site) -> T {
        self.masses[self.spec.index(p)]
    }

    /// Coordinate variance of the increments in canonical coordinates.
    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn sigma2_limit(&self) -> Option<T> {
        self.sigma2_limit
    }

    /// Nonzero `(offset, mass)` pairs in storage order.
    pub fn support(&self) -> Vec<(Site, T)> {
        self.masses.iter().enumerate().filter(|(_, &q)| q != T::zero()).map(|(i, &q)| (self.spec.site(i), q)).collect()
    }

    /// Direct characteristic function `sum_x cos(theta . x) m(x)` over canonical offsets.
    pub fn char_fn(&self, theta: [T; 2]) -> T {
        let support = self.support();
        pairwise_sum_by(support.len(), &|i| {
            let (p, q) = support[i];
            (theta[0] * T::lit(p.x as f64) + theta[1] * T::lit(p.y as f64)).cos() * q
        })
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.spec.sites().all(|p| Float::abs(self.mass(p) - self.mass(-p)) <= tol)
    }

    pub fn sampler(&self) -> Result<JumpSampler, KernelError> {
        JumpSampler::new(self.support().into_iter().map(|(p, q)| (p, q.to_f64_lossy())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_preserves_masses() {
        let spec = TorusSpec::new(8).unwrap();
        let k = JumpKernel::<f64>::uniform(4).unwrap();
        let w = TorusKernel::from_kernel(&k, spec).unwrap();
        for &(p, q) in k.support() {
            assert_eq!(w.mass(p), q);
        }
        assert_eq!(w.mass(Site::ORIGIN), 0.0);
        assert_eq!(w.support().len(), k.support().len());
        assert!(w.is_symmetric(0.0));
    }

    #[test]
    fn range_must_be_below_side() {
        let k = JumpKernel::<f64>::uniform(8).unwrap();
        let err = TorusKernel::from_kernel(&k, TorusSpec::new(8).unwrap()).unwrap_err();
        assert_eq!(err, WrapError::RangeTooLarge { m: 8, l: 8 });
    }

    #[test]
    fn fold_agrees_with_lossless_wrap_and_accumulates_collisions() {
        let k = JumpKernel::<f64>::uniform(4).unwrap();
        let spec = TorusSpec::new(8).unwrap();
        assert_eq!(TorusKernel::fold(&k, spec), TorusKernel::from_kernel(&k, spec).unwrap());

        let small = TorusSpec::new(2).unwrap();
        let folded = TorusKernel::fold(&JumpKernel::<f64>::uniform(2).unwrap(), small);
        // (1,0),(-1,0) -> (1,0); (0,+-1) -> (0,1); four diagonals -> (1,1)
        assert_eq!(folded.mass(Site::new(1, 0)), 0.25);
        assert_eq!(folded.mass(Site::new(0, 1)), 0.25);
        assert_eq!(folded.mass(Site::new(1, 1)), 0.5);
        assert!(folded.is_symmetric(0.0));
    }

    #[test]
    fn meanfield_masses() {
        let spec = TorusSpec::new(4).unwrap();
        let w = TorusKernel::<f64>::meanfield(spec);
        assert_eq!(w.support().len(), 15);
        assert!(w.support().iter().all(|&(_, q)| q == 1.0 / 15.0));
        // x coordinates {-1, 0, 1, 2}, each 4 times, minus the origin
        assert!((w.sigma2() - (4.0 * (1.0 + 1.0 + 4.0)) / 15.0).abs() < 1e-15);
        assert!(w.is_symmetric(0.0));
    }
}
