//! Characteristic functions on torus frequencies and the quantities built
//! from them by Fourier inversion: transition probabilities, Green's
//! function, the hitting-time Laplace transform, and the uniformity gap.
//!
//! For `y` in `T_L` the grid holds `phi(2 pi y / L)`. Then
//!
//! ```text
//! P_0(X_t = x)  = L^-2 sum_y exp(-t (1 - phi_y)) e^{2 pi i x.y / L}
//! G_L(x, lam)   = L^-2 sum_y e^{2 pi i x.y / L} / (1 + lam - phi_y)
//! F_L(x, lam)   = G_L(x, lam) / G_L(0, lam)
//! ```

use num_complex::Complex;
use num_traits::Float;
use rayon::prelude::*;
use thiserror::Error;

use crate::fft2::{dft2, dft_to_storage_real, storage_to_dft};
use crate::kernels::{JumpKernel, KernelError};
use crate::real::Real;
use crate::sum::{pairwise_sum, pairwise_sum_by};
use crate::torus::{Site, TorusSpec};
use crate::wrapped::{TorusKernel, WrapError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Wrap(#[from] WrapError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("time must be finite and >= 0, got {0}")]
    BadTime(f64),
    #[error("lambda must be finite and > 0, got {0}")]
    BadLambda(f64),
    #[error("empty probe region: {0}")]
    EmptyProbeRegion(String),
}

fn check_time<T: Real>(t: T) -> Result<(), SpectralError> {
    if t.is_finite() && t >= T::zero() {
        Ok(())
    } else {
        Err(SpectralError::BadTime(t.to_f64_lossy()))
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<(), SpectralError> {
    if lambda.is_finite() && lambda > T::zero() {
        Ok(())
    } else {
        Err(SpectralError::BadLambda(lambda.to_f64_lossy()))
    }
}

/// `phi(theta)` for a kernel on the plane lattice.
pub fn char_fn<T: Real>(kernel: &JumpKernel<T>, theta: [T; 2]) -> T {
    kernel.char_fn(theta)
}

/// `sum_{y in T_L} e^{2 pi i x.y / L}` by direct summation; zero for `x != 0`.
pub fn character_sum<T: Real>(spec: TorusSpec, x: Site) -> Complex<T> {
    let scale = T::TAU() / T::from_count(spec.side());
    let phase = |i: usize| {
        let y = spec.site(i);
        T::lit((x.x * y.x + x.y * y.y) as f64) * scale
    };
    let re = pairwise_sum_by(spec.size(), &|i| phase(i).cos());
    let im = pairwise_sum_by(spec.size(), &|i| phase(i).sin());
    Complex::new(re, im)
}

/// `phi_M` at every torus frequency, in storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid<T> {
    spec: TorusSpec,
    label: String,
    range: usize,
    sigma2: T,
    sigma2_limit: Option<T>,
    values: Vec<T>,
}

fn finish_values<T: Real>(spec: TorusSpec, mut values: Vec<T>) -> Vec<T> {
    values[spec.origin_index()] = T::one();
    for v in &mut values {
        *v = v.max(-T::one()).min(T::one());
    }
    values
}

impl<T: Real> SpectralGrid<T> {
    /// Folds the kernel onto the torus and transforms the mass array.
    pub fn build(kernel: &JumpKernel<T>, spec: TorusSpec) -> Result<Self, SpectralError> {
        let folded = TorusKernel::from_kernel(kernel, spec)?;
        Ok(Self::from_torus_kernel(&folded))
    }

    /// Evaluates `char_fn` at each torus frequency. Slow; the independent
    /// route used to cross-check [`SpectralGrid::build`].
    pub fn build_direct(kernel: &JumpKernel<T>, spec: TorusSpec) -> Result<Self, SpectralError> {
        if kernel.range() >= spec.side() {
            return Err(WrapError::RangeTooLarge { m: kernel.range(), l: spec.side() }.into());
        }
        let freqs = spec.frequencies::<T>();
        let values: Vec<T> = freqs.par_iter().map(|f| kernel.char_fn(f.theta)).collect();
        Ok(SpectralGrid {
            spec,
            label: kernel.label().to_string(),
            range: kernel.range(),
            sigma2: kernel.sigma2(),
            sigma2_limit: kernel.sigma2_limit(),
            values: finish_values(spec, values),
        })
    }

    pub fn from_torus_kernel(kernel: &TorusKernel<T>) -> Self {
        let spec = kernel.spec();
        let mut data = storage_to_dft(spec, kernel.masses());
        dft2(&mut data, spec.side(), false);
        let values = dft_to_storage_real(spec, &data);
        SpectralGrid {
            spec,
            label: kernel.label().to_string(),
            range: kernel.range(),
            sigma2: kernel.sigma2(),
            sigma2_limit: kernel.sigma2_limit(),
            values: finish_values(spec, values),
        }
    }

    pub fn spec(&self) -> TorusSpec {
        self.spec
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn range(&self) -> usize {
        self.range
    }

    /// `sigma_M^2` of the underlying kernel.
    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn sigma2_limit(&self) -> Option<T> {
        self.sigma2_limit
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `phi(2 pi y / L)`.
    pub fn value(&self, y: Site) -> T {
        self.values[self.spec.index(y)]
    }

    /// Inverse transform of `f(phi_y)`, divided by `L^2`, in storage order.
    fn invert(&self, f: impl Fn(T) -> T + Sync) -> Vec<T> {
        let spectrum: Vec<T> = self.values.par_iter().map(|&v| f(v)).collect();
        let mut data = storage_to_dft(self.spec, &spectrum);
        dft2(&mut data, self.spec.side(), true);
        let norm = T::from_count(self.spec.size());
        dft_to_storage_real(self.spec, &data).into_iter().map(|v| v / norm).collect()
    }

    /// Law of `X_t` started at the origin.
    pub fn heat(&self, t: T) -> Result<HeatGrid<T>, SpectralError> {
        check_time(t)?;
        let probs = self.invert(|phi| (-(t * (T::one() - phi))).exp());
        Ok(HeatGrid { spec: self.spec, t, probs })
    }

    /// `G_L(x, lambda)` for every `x`.
    pub fn green(&self, lambda: T) -> Result<GreenField<T>, SpectralError> {
        check_lambda(lambda)?;
        let values = self.invert(|phi| T::one() / (T::one() + lambda - phi));
        Ok(GreenField { spec: self.spec, lambda, values })
    }

    /// `G_L(x, lambda)` at a single site by direct summation, with phases
    /// reduced exactly mod `L`. Memory-light alternative to [`SpectralGrid::green`].
    pub fn green_at(&self, lambda: T, x: Site) -> Result<T, SpectralError> {
        check_lambda(lambda)?;
        let l = self.spec.side();
        let scale = T::TAU() / T::from_count(l);
        let cos_table: Vec<T> = (0..l).map(|k| (T::from_count(k) * scale).cos()).collect();
        let li = l as i64;
        let terms: Vec<T> = (0..self.spec.size())
            .into_par_iter()
            .map(|i| {
                let y = self.spec.site(i);
                let k = (x.x * y.x + x.y * y.y).rem_euclid(li) as usize;
                cos_table[k] / (T::one() + lambda - self.values[i])
            })
            .collect();
        Ok(pairwise_sum(&terms) / T::from_count(self.spec.size()))
    }

    /// `F_L(x, lambda) = E_x exp(-lambda H_L)` for every `x`.
    pub fn laplace_hit(&self, lambda: T) -> Result<LaplaceField<T>, SpectralError> {
        let green = self.green(lambda)?;
        let origin = green.value(Site::ORIGIN);
        let mut values: Vec<T> = green.values.iter().map(|&g| g / origin).collect();
        values[self.spec.origin_index()] = T::one();
        Ok(LaplaceField { spec: self.spec, lambda, values })
    }

    /// `F_L(x, lambda)` at selected sites via [`SpectralGrid::green_at`].
    pub fn laplace_hit_at(&self, lambda: T, sites: &[Site]) -> Result<Vec<T>, SpectralError> {
        let origin = self.green_at(lambda, Site::ORIGIN)?;
        sites
            .iter()
            .map(|&x| if self.spec.wrap(x).is_origin() { Ok(T::one()) } else { Ok(self.green_at(lambda, x)? / origin) })
            .collect()
    }

    /// `sup_x L^2 |P_0(X_t = x) - L^-2|` and its bound `sum_{y != 0} exp(-t (1 - phi_y))`.
    pub fn uniformity_gap(&self, t: T) -> Result<UniformityGap<T>, SpectralError> {
        let heat = self.heat(t)?;
        let n = T::from_count(self.spec.size());
        let inv = T::one() / n;
        let gap = heat.probs.iter().fold(T::zero(), |acc, &p| acc.max(Float::abs(p - inv) * n));
        let origin = self.spec.origin_index();
        let bound = pairwise_sum_by(self.values.len(), &|i| {
            if i == origin {
                T::zero()
            } else {
                (-(t * (T::one() - self.values[i]))).exp()
            }
        });
        Ok(UniformityGap { t, gap, bound })
    }
}

/// `P_0(X_t = x)` over the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatGrid<T> {
    spec: TorusSpec,
    t: T,
    probs: Vec<T>,
}

impl<T: Real> HeatGrid<T> {
    pub fn spec(&self) -> TorusSpec {
        self.spec
    }

    pub fn time(&self) -> T {
        self.t
    }

    /// Unclamped inversion output; entries may dip below zero by rounding.
    pub fn raw(&self) -> &[T] {
        &self.probs
    }

    /// Probabilities with rounding residue below zero clamped to zero.
    pub fn probabilities(&self) -> Vec<T> {
        self.probs.iter().map(|&p| p.max(T::zero())).collect()
    }

    pub fn prob(&self, x: Site) -> T {
        self.probs[self.spec.index(x)].max(T::zero())
    }

    pub fn total_mass(&self) -> T {
        pairwise_sum(&self.probs)
    }
}

/// `G_L(x, lambda)` over the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenField<T> {
    spec: TorusSpec,
    lambda: T,
    values: Vec<T>,
}

impl<T: Real> GreenField<T> {
    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, x: Site) -> T {
        self.values[self.spec.index(x)]
    }
}

/// `F_L(x, lambda)` over the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceField<T> {
    spec: TorusSpec,
    lambda: T,
    values: Vec<T>,
}

impl<T: Real> LaplaceField<T> {
    pub fn spec(&self) -> TorusSpec {
        self.spec
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, x: Site) -> T {
        self.values[self.spec.index(x)]
    }

    /// `sup_{x in sites} |F_L(x) - target|`; `None` for an empty set.
    pub fn sup_deviation(&self, sites: &[Site], target: T) -> Option<T> {
        sites
            .iter()
            .map(|&x| Float::abs(self.value(x) - target))
            .fold(None, |acc, d| Some(acc.map_or(d, |a: T| a.max(d))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformityGap<T> {
    pub t: T,
    pub gap: T,
    pub bound: T,
}

/// Probe parameters for the small-, intermediate- and large-frequency
/// conditions on a family of characteristic functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionParams<T> {
    /// `delta` in `B'(delta/M)` and `B(delta') \ B(delta/M)`.
    pub delta: T,
    pub delta_prime: T,
    /// Inner radius of `B(pi) \ B(a)`.
    pub a: T,
}

/// Measured extrema for one kernel of the ladder; no verdict attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRow<T> {
    pub range: usize,
    /// The `sigma^2` used in the small-frequency ratio.
    pub sigma2: T,
    /// `max |(1 - phi) / (sigma^2 M^2 |theta|^2 / 2) - 1|` over `B'(delta/M)`.
    pub small_freq_deviation: T,
    /// `min (1 - phi)` over `B(delta') \ B(delta/M)`.
    pub mid_freq_min_gap: T,
    /// `max |phi|` over `B(pi) \ B(a)`.
    pub large_freq_max_abs: T,
}

pub const PROBE_RADII: usize = 64;
pub const PROBE_ANGLES: usize = 64;
/// Smallest probed radius in `B'(r)`, relative to `r`.
pub const PROBE_INNER_RATIO: f64 = 1e-3;

/// Points on the sup-norm spheres `||theta||_inf = r` for log-spaced `r` in `[lo, hi]`.
fn probe_points<T: Real>(lo: T, hi: T) -> Vec<[T; 2]> {
    let ratio = hi / lo;
    let mut out = Vec::with_capacity(PROBE_RADII * PROBE_ANGLES);
    for i in 0..PROBE_RADII {
        let r = lo * ratio.powf(T::from_count(i) / T::from_count(PROBE_RADII - 1));
        for j in 0..PROBE_ANGLES {
            let ang = T::TAU() * T::from_count(j) / T::from_count(PROBE_ANGLES);
            let (s, c) = ang.sin_cos();
            let scale = r / Float::abs(c).max(Float::abs(s));
            out.push([c * scale, s * scale]);
        }
    }
    out
}

fn check_region<T: Real>(name: &str, lo: T, hi: T) -> Result<(), SpectralError> {
    if lo > T::zero() && hi > lo && hi.is_finite() {
        Ok(())
    } else {
        Err(SpectralError::EmptyProbeRegion(format!("{name}: radii [{lo}, {hi}]")))
    }
}

/// Diagnostics for one kernel. The `sigma^2` in the small-frequency ratio is
/// the family's limit when it has one, else `sigma_M^2 / M^2`.
pub fn condition_row<T: Real>(
    kernel: &JumpKernel<T>,
    params: &ConditionParams<T>,
) -> Result<ConditionRow<T>, SpectralError> {
    let m = T::from_count(kernel.range());
    let inner = params.delta / m;
    let pi = T::PI();
    check_region("B'(delta/M)", inner * T::lit(PROBE_INNER_RATIO), inner)?;
    check_region("B(delta') \\ B(delta/M)", inner, params.delta_prime)?;
    check_region("B(pi) \\ B(a)", params.a, pi)?;

    let sigma2 = kernel.sigma2_limit().unwrap_or_else(|| kernel.sigma2_scaled());
    let half = T::lit(0.5);

    let small = probe_points(inner * T::lit(PROBE_INNER_RATIO), inner)
        .par_iter()
        .map(|th| {
            let norm_sq = th[0] * th[0] + th[1] * th[1];
            let ratio = kernel.one_minus_char_fn(*th) / (sigma2 * m * m * norm_sq * half);
            Float::abs(ratio - T::one())
        })
        .collect::<Vec<T>>()
        .into_iter()
        .fold(T::zero(), T::max);
    let mid = probe_points(inner, params.delta_prime)
        .par_iter()
        .map(|th| kernel.one_minus_char_fn(*th))
        .collect::<Vec<T>>()
        .into_iter()
        .fold(T::infinity(), T::min);
    let large = probe_points(params.a, pi)
        .par_iter()
        .map(|th| Float::abs(kernel.char_fn(*th)))
        .collect::<Vec<T>>()
        .into_iter()
        .fold(T::zero(), T::max);

    Ok(ConditionRow {
        range: kernel.range(),
        sigma2,
        small_freq_deviation: small,
        mid_freq_min_gap: mid,
        large_freq_max_abs: large,
    })
}

/// [`condition_row`] over a ladder of kernels.
pub fn condition_report<T: Real>(
    kernels: &[JumpKernel<T>],
    params: &ConditionParams<T>,
) -> Result<Vec<ConditionRow<T>>, SpectralError> {
    kernels.iter().map(|k| condition_row(k, params)).collect()
}
