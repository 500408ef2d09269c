//! Tensor midpoint quadrature over centred squares with dyadic refinement.
//!
//! Each level doubles the points per axis. Midpoint errors expand in even
//! powers of the step for smooth integrands, so the level sequence is
//! Richardson-extrapolated (a Romberg table on the midpoint column) and
//! convergence is judged on the extrapolated diagonal.

use rayon::prelude::*;
use thiserror::Error;

use crate::real::Real;
use crate::sum::{pairwise_sum, pairwise_sum_by};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("points per axis must be a power of two with base <= cap (base {base}, cap {cap})")]
    BadResolution { base: usize, cap: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("no convergence within {per_axis} points per axis: last {last}, previous {previous}")]
    NotConverged { per_axis: usize, last: f64, previous: f64 },
}

/// Refinement schedule: start at `base_per_axis`, double up to `max_per_axis`,
/// stop when successive extrapolated estimates differ by less than `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub base_per_axis: usize,
    pub max_per_axis: usize,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { base_per_axis: 8, max_per_axis: 1 << 12, tolerance: 1e-9 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        let pow2 = |n: usize| n > 0 && n.is_power_of_two();
        if !pow2(self.base_per_axis) || !pow2(self.max_per_axis) || self.base_per_axis > self.max_per_axis {
            return Err(QuadratureError::BadResolution { base: self.base_per_axis, cap: self.max_per_axis });
        }
        if !(self.tolerance > 0.0) {
            return Err(QuadratureError::BadTolerance(self.tolerance));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadLevel<T> {
    pub per_axis: usize,
    /// Plain midpoint value at this level.
    pub midpoint: T,
    /// Romberg diagonal entry at this level.
    pub extrapolated: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadEstimate<T> {
    pub value: T,
    pub levels: Vec<QuadLevel<T>>,
}

impl<T: Real> QuadEstimate<T> {
    /// `|R_k - R_{k-1}|` on the extrapolated diagonal, if two levels exist.
    pub fn last_delta(&self) -> Option<T> {
        let n = self.levels.len();
        (n >= 2).then(|| num_traits::Float::abs(self.levels[n - 1].extrapolated - self.levels[n - 2].extrapolated))
    }
}

/// Midpoint rule with `n` points per axis on `[-h, h]^2`.
pub fn midpoint_square<T, F>(f: &F, half_width: T, n: usize) -> T
where
    T: Real,
    F: Fn([T; 2]) -> T + Sync,
{
    let step = (half_width + half_width) / T::from_count(n);
    let node = |i: usize| -half_width + (T::from_count(i) + T::lit(0.5)) * step;
    let rows: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = node(i);
            pairwise_sum_by(n, &|j| f([x, node(j)]))
        })
        .collect();
    pairwise_sum(&rows) * step * step
}

/// Integral of `f` over `[-h, h]^2` under the given refinement schedule.
pub fn integrate_square<T, F>(f: &F, half_width: T, spec: &QuadratureSpec) -> Result<QuadEstimate<T>, QuadratureError>
where
    T: Real,
    F: Fn([T; 2]) -> T + Sync,
{
    spec.validate()?;
    let mut table: Vec<Vec<T>> = Vec::new();
    let mut levels = Vec::new();
    let mut n = spec.base_per_axis;
    loop {
        let mut row = vec![midpoint_square(f, half_width, n)];
        if let Some(prev) = table.last() {
            let mut factor = T::one();
            for j in 1..=prev.len() {
                factor = factor * T::lit(4.0);
                let refined = row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - T::one());
                row.push(refined);
            }
        }
        levels.push(QuadLevel { per_axis: n, midpoint: row[0], extrapolated: *row.last().unwrap() });
        table.push(row);

        if levels.len() >= 2 {
            let k = levels.len();
            let (last, prev) = (levels[k - 1].extrapolated, levels[k - 2].extrapolated);
            if num_traits::Float::abs(last - prev).to_f64_lossy() < spec.tolerance {
                return Ok(QuadEstimate { value: last, levels });
            }
            if n >= spec.max_per_axis {
                return Err(QuadratureError::NotConverged {
                    per_axis: n,
                    last: last.to_f64_lossy(),
                    previous: prev.to_f64_lossy(),
                });
            }
        }
        if n >= spec.max_per_axis {
            // base == cap: a single level cannot demonstrate convergence
            let last = levels[0].extrapolated.to_f64_lossy();
            return Err(QuadratureError::NotConverged { per_axis: n, last, previous: f64::NAN });
        }
        n *= 2;
    }
}
