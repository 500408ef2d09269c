//! Jump distributions on the punctured box `Lambda'_M`: the uniform family,
//! density-shaped kernels `q_M(x) = c_M f(x/M) u_M(x)`, and short/long-range
//! mixtures `c u_M + (1 - c) q_0`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_distr::{weighted::WeightedAliasIndex, Distribution};
use thiserror::Error;

use crate::quadrature::{integrate_square, QuadratureError, QuadratureSpec};
use crate::real::Real;
use crate::sum::{pairwise_sum, pairwise_sum_by};
use crate::torus::{Region, Site};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("range M must be a positive even integer, got {0}")]
    BadRange(usize),
    #[error("mixture weight c must lie in (0, 1), got {0}")]
    BadMixtureWeight(f64),
    #[error("short-range kernel has range {inner} > M = {outer}")]
    RangeMismatch { inner: usize, outer: usize },
    #[error("density `{name}` is not positive at {at:?}")]
    NonPositiveDensity { name: String, at: [f64; 2] },
    #[error("density `{name}` violates the symmetry f(x1,x2) = f(x2,x1) = f(-x1,x2) at {at:?}")]
    AsymmetricDensity { name: String, at: [f64; 2] },
    #[error("unknown density `{0}`")]
    UnknownDensity(String),
    #[error("kernel invariant violated: {0}")]
    Invariant(String),
    #[error("cannot sample from kernel: {0}")]
    Sampler(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

type DensityFn<T> = dyn Fn([T; 2]) -> T + Send + Sync;

/// A positive continuous function on `B(1/2)` with the dihedral symmetry
/// `f(x1, x2) = f(x2, x1) = f(-x1, x2)`, checked at construction.
#[derive(Clone)]
pub struct KernelDensity<T> {
    name: String,
    f: Arc<DensityFn<T>>,
}

impl<T> fmt::Debug for KernelDensity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelDensity").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Names accepted by [`KernelDensity::by_name`].
pub const DENSITY_NAMES: [&str; 4] = ["constant", "quartic", "gaussian", "cosine"];

const SYMMETRY_GRID: usize = 33;
const SYMMETRY_RANDOM_POINTS: usize = 1000;
const SYMMETRY_SEED: u64 = 0x5eed_f00d;

impl<T: Real> KernelDensity<T> {
    /// Wraps `f` after sampling it on a 33 x 33 grid and 1000 random points
    /// of `B(1/2)`: it must be finite and positive, and the three symmetry
    /// relations must hold to `1e-12` (relative, floored by the precision).
    pub fn new(name: impl Into<String>, f: impl Fn([T; 2]) -> T + Send + Sync + 'static) -> Result<Self, KernelError> {
        let density = KernelDensity { name: name.into(), f: Arc::new(f) };
        density.certify()?;
        Ok(density)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: [T; 2]) -> T {
        (self.f)(x)
    }

    fn certify(&self) -> Result<(), KernelError> {
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        let check = |p: [T; 2]| -> Result<(), KernelError> {
            let at = [p[0].to_f64_lossy(), p[1].to_f64_lossy()];
            let v = self.eval(p);
            if !(v.is_finite() && v > T::zero()) {
                return Err(KernelError::NonPositiveDensity { name: self.name.clone(), at });
            }
            let scale = T::one().max(v);
            let swapped = self.eval([p[1], p[0]]);
            let reflected = self.eval([-p[0], p[1]]);
            if Float::abs(v - swapped) > tol * scale || Float::abs(v - reflected) > tol * scale {
                return Err(KernelError::AsymmetricDensity { name: self.name.clone(), at });
            }
            Ok(())
        };
        let half = T::lit(0.5);
        let step = T::one() / T::from_count(SYMMETRY_GRID - 1);
        for i in 0..SYMMETRY_GRID {
            for j in 0..SYMMETRY_GRID {
                check([-half + T::from_count(i) * step, -half + T::from_count(j) * step])?;
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SYMMETRY_SEED);
        for _ in 0..SYMMETRY_RANDOM_POINTS {
            let a: f64 = rng.random_range(-0.5..=0.5);
            let b: f64 = rng.random_range(-0.5..=0.5);
            check([T::lit(a), T::lit(b)])?;
        }
        Ok(())
    }

    /// `f = 1`; reproduces the uniform family.
    pub fn constant() -> Self {
        Self::new("constant", |_| T::one()).expect("constant density is valid")
    }

    /// `f(x) = 1 + x1^2 x2^2`.
    pub fn quartic() -> Self {
        Self::new("quartic", |x: [T; 2]| T::one() + x[0] * x[0] * x[1] * x[1]).expect("quartic density is valid")
    }

    /// `f(x) = exp(-|x|^2)`.
    pub fn gaussian() -> Self {
        Self::new("gaussian", |x: [T; 2]| (-(x[0] * x[0] + x[1] * x[1])).exp()).expect("gaussian density is valid")
    }

    /// `f(x) = 3 + cos(2 pi x1) + cos(2 pi x2)`.
    pub fn cosine() -> Self {
        Self::new("cosine", |x: [T; 2]| T::lit(3.0) + (T::TAU() * x[0]).cos() + (T::TAU() * x[1]).cos())
            .expect("cosine density is valid")
    }

    pub fn by_name(name: &str) -> Result<Self, KernelError> {
        match name {
            "constant" => Ok(Self::constant()),
            "quartic" => Ok(Self::quartic()),
            "gaussian" => Ok(Self::gaussian()),
            "cosine" => Ok(Self::cosine()),
            other => Err(KernelError::UnknownDensity(other.to_string())),
        }
    }
}

/// A finite symmetric jump distribution supported on `Lambda'_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpKernel<T> {
    label: String,
    range: usize,
    /// Sorted by site; no zero masses, never the origin.
    support: Vec<(Site, T)>,
    sigma2: T,
    sigma2_limit: Option<T>,
    exact_mass: Option<Ratio<u64>>,
}

fn check_range(m: usize) -> Result<(), KernelError> {
    if m < 2 || !m.is_multiple_of(2) {
        Err(KernelError::BadRange(m))
    } else {
        Ok(())
    }
}

fn punctured_box(m: usize) -> Vec<Site> {
    Region::lattice_box(m as f64).punctured().enumerate().expect("box parameters are valid")
}

fn second_moment<T: Real>(support: &[(Site, T)], axis: usize) -> T {
    pairwise_sum_by(support.len(), &|i| {
        let (p, q) = support[i];
        let c = T::lit(if axis == 0 { p.x } else { p.y } as f64);
        c * c * q
    })
}

impl<T: Real> JumpKernel<T> {
    /// Uniform mass `1 / ((M+1)^2 - 1)` on `Lambda'_M`.
    pub fn uniform(m: usize) -> Result<Self, KernelError> {
        check_range(m)?;
        let sites = punctured_box(m);
        let count = sites.len();
        let mass = T::one() / T::from_count(count);
        let support: Vec<(Site, T)> = sites.into_iter().map(|p| (p, mass)).collect();
        let sigma2 = second_moment(&support, 0);
        let kernel = JumpKernel {
            label: format!("uniform(M={m})"),
            range: m,
            support,
            sigma2,
            sigma2_limit: Some(T::one() / T::lit(12.0)),
            exact_mass: Some(Ratio::new(1, count as u64)),
        };
        kernel.validate()?;
        Ok(kernel)
    }

    /// `q_M(x) = c_M f(x/M) u_M(x)` with the default quadrature schedule
    /// for the limiting variance.
    pub fn from_density(m: usize, f: &KernelDensity<T>) -> Result<Self, KernelError> {
        Self::from_density_with(m, f, &QuadratureSpec::default())
    }

    pub fn from_density_with(m: usize, f: &KernelDensity<T>, quad: &QuadratureSpec) -> Result<Self, KernelError> {
        check_range(m)?;
        let sites = punctured_box(m);
        let scale = T::from_count(m);
        let mut weights = Vec::with_capacity(sites.len());
        for &p in &sites {
            let at = [T::lit(p.x as f64) / scale, T::lit(p.y as f64) / scale];
            let w = f.eval(at);
            if !(w.is_finite() && w > T::zero()) {
                return Err(KernelError::NonPositiveDensity {
                    name: f.name().to_string(),
                    at: [at[0].to_f64_lossy(), at[1].to_f64_lossy()],
                });
            }
            weights.push(w);
        }
        // Dividing by the computed total is both the c_M normalisation and
        // the final renormalisation.
        let total = pairwise_sum(&weights);
        let support: Vec<(Site, T)> = sites.into_iter().zip(weights).map(|(p, w)| (p, w / total)).collect();
        let sigma2 = second_moment(&support, 0);

        let half = T::lit(0.5);
        let mass = integrate_square(&|x: [T; 2]| f.eval(x), half, quad)?;
        let moment = integrate_square(&|x: [T; 2]| x[0] * x[0] * f.eval(x), half, quad)?;
        let sigma2_limit = moment.value / mass.value;

        let kernel = JumpKernel {
            label: format!("density(M={m},f={})", f.name()),
            range: m,
            support,
            sigma2,
            sigma2_limit: Some(sigma2_limit),
            exact_mass: None,
        };
        kernel.validate()?;
        Ok(kernel)
    }

    /// `q_M = c u_M + (1 - c) q_0` for a fixed short-range `q_0`.
    pub fn mixture(c: T, m: usize, q0: &JumpKernel<T>) -> Result<Self, KernelError> {
        check_range(m)?;
        if !(c > T::zero() && c < T::one()) {
            return Err(KernelError::BadMixtureWeight(c.to_f64_lossy()));
        }
        if q0.range > m {
            return Err(KernelError::RangeMismatch { inner: q0.range, outer: m });
        }
        let uniform = Self::uniform(m)?;
        let short: HashMap<Site, T> = q0.support.iter().copied().collect();
        let raw: Vec<(Site, T)> = uniform
            .support
            .iter()
            .map(|&(p, u)| (p, c * u + (T::one() - c) * short.get(&p).copied().unwrap_or(T::zero())))
            .collect();
        let total = pairwise_sum_by(raw.len(), &|i| raw[i].1);
        let support = raw.into_iter().map(|(p, q)| (p, q / total)).collect();
        let sigma2 = c * uniform.sigma2 + (T::one() - c) * q0.sigma2;
        let kernel = JumpKernel {
            label: format!("mixture(c={c},M={m},q0={})", q0.label),
            range: m,
            support,
            sigma2,
            sigma2_limit: Some(c / T::lit(12.0)),
            exact_mass: None,
        };
        kernel.validate()?;
        Ok(kernel)
    }

    /// A kernel given by explicit masses; they are renormalised by their sum
    /// and must satisfy every invariant.
    pub fn from_masses(label: impl Into<String>, m: usize, masses: Vec<(Site, T)>) -> Result<Self, KernelError> {
        check_range(m)?;
        let mut support: Vec<(Site, T)> = masses.into_iter().filter(|&(_, q)| q != T::zero()).collect();
        support.sort_by_key(|&(p, _)| p);
        for w in support.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(KernelError::Invariant(format!("duplicate site {}", w[0].0)));
            }
        }
        let total = pairwise_sum_by(support.len(), &|i| support[i].1);
        for entry in &mut support {
            entry.1 = entry.1 / total;
        }
        let sigma2 = second_moment(&support, 0);
        let kernel =
            JumpKernel { label: label.into(), range: m, support, sigma2, sigma2_limit: None, exact_mass: None };
        kernel.validate()?;
        Ok(kernel)
    }

    /// Checks puncture, support, normalisation, symmetry and equal
    /// coordinate variances.
    pub fn validate(&self) -> Result<(), KernelError> {
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        let half = (self.range / 2) as i64;
        let mut by_site = HashMap::with_capacity(self.support.len());
        for &(p, q) in &self.support {
            if p.is_origin() {
                return Err(KernelError::Invariant("mass at the origin".into()));
            }
            if p.sup_norm() > half {
                return Err(KernelError::Invariant(format!("site {p} outside Lambda'_{}", self.range)));
            }
            if !(q.is_finite() && q >= T::zero()) {
                return Err(KernelError::Invariant(format!("mass {q} at {p}")));
            }
            by_site.insert(p, q);
        }
        let total = pairwise_sum_by(self.support.len(), &|i| self.support[i].1);
        if Float::abs(total - T::one()) > tol {
            return Err(KernelError::Invariant(format!("masses sum to {total}")));
        }
        for (&p, &q) in &by_site {
            let mirror = by_site.get(&-p).copied().unwrap_or(T::zero());
            if Float::abs(q - mirror) > tol {
                return Err(KernelError::Invariant(format!("q({p}) != q(-{p})")));
            }
        }
        let (vx, vy) = (second_moment(&self.support, 0), second_moment(&self.support, 1));
        if !(vx > T::zero()) {
            return Err(KernelError::Invariant("zero coordinate variance".into()));
        }
        if Float::abs(vx - vy) > tol * vx.max(T::one()) {
            return Err(KernelError::Invariant(format!("coordinate variances differ: {vx} vs {vy}")));
        }
        if Float::abs(vx - self.sigma2) > tol * vx.max(T::one()) {
            return Err(KernelError::Invariant(format!("stored sigma2 {} != {vx}", self.sigma2)));
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The range parameter `M`.
    pub fn range(&self) -> usize {
        self.range
    }

    pub fn support(&self) -> &[(Site, T)] {
        &self.support
    }

    pub fn mass(&self, p: Site) -> T {
        self.support.binary_search_by_key(&p, |&(s, _)| s).map(|i| self.support[i].1).unwrap_or(T::zero())
    }

    /// Coordinate variance `sigma_M^2 = sum x_1^2 q(x)`.
    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    /// `sigma_M^2 / M^2`.
    pub fn sigma2_scaled(&self) -> T {
        let m = T::from_count(self.range);
        self.sigma2 / (m * m)
    }

    /// The limiting `lim sigma_M^2 / M^2` of the family, when it has one.
    pub fn sigma2_limit(&self) -> Option<T> {
        self.sigma2_limit
    }

    /// Exact common mass for the uniform family.
    pub fn exact_mass(&self) -> Option<Ratio<u64>> {
        self.exact_mass
    }

    /// `phi(theta) = sum_x cos(theta . x) q(x)`; the sine part cancels by symmetry.
    pub fn char_fn(&self, theta: [T; 2]) -> T {
        pairwise_sum_by(self.support.len(), &|i| {
            let (p, q) = self.support[i];
            (theta[0] * T::lit(p.x as f64) + theta[1] * T::lit(p.y as f64)).cos() * q
        })
    }

    /// `1 - phi(theta)` as `sum 2 sin^2(theta . x / 2) q(x)`, accurate near 0.
    pub fn one_minus_char_fn(&self, theta: [T; 2]) -> T {
        let two = T::lit(2.0);
        pairwise_sum_by(self.support.len(), &|i| {
            let (p, q) = self.support[i];
            let s = ((theta[0] * T::lit(p.x as f64) + theta[1] * T::lit(p.y as f64)) / two).sin();
            two * s * s * q
        })
    }

    /// `sum_x sin(theta . x) q(x)`, zero up to rounding for symmetric kernels.
    pub fn char_fn_imag(&self, theta: [T; 2]) -> T {
        pairwise_sum_by(self.support.len(), &|i| {
            let (p, q) = self.support[i];
            (theta[0] * T::lit(p.x as f64) + theta[1] * T::lit(p.y as f64)).sin() * q
        })
    }

    /// Like [`JumpKernel::char_fn`] but fails if the imaginary part exceeds `1e-12`.
    pub fn char_fn_checked(&self, theta: [T; 2]) -> Result<T, KernelError> {
        let imag = self.char_fn_imag(theta);
        if Float::abs(imag) > T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) {
            return Err(KernelError::Invariant(format!("characteristic function has imaginary part {imag}")));
        }
        Ok(self.char_fn(theta))
    }

    pub fn sampler(&self) -> Result<JumpSampler, KernelError> {
        JumpSampler::new(self.support.iter().map(|&(p, q)| (p, q.to_f64_lossy())))
    }
}

/// Alias-table sampler over a finite set of jumps.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    jumps: Vec<Site>,
    table: WeightedAliasIndex<f64>,
}

impl JumpSampler {
    pub fn new(masses: impl IntoIterator<Item = (Site, f64)>) -> Result<Self, KernelError> {
        let (jumps, weights): (Vec<Site>, Vec<f64>) = masses.into_iter().filter(|&(_, w)| w > 0.0).unzip();
        let table = WeightedAliasIndex::new(weights).map_err(|e| KernelError::Sampler(e.to_string()))?;
        Ok(JumpSampler { jumps, table })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Site {
        self.jumps[self.table.sample(rng)]
    }

    pub fn jumps(&self) -> &[Site] {
        &self.jumps
    }
}

/// Draws one increment from `kernel`.
pub fn sample_jump<R: Rng + ?Sized>(sampler: &JumpSampler, rng: &mut R) -> Site {
    sampler.sample(rng)
}
