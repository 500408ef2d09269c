//! Exponential and inverse-square sums over lattice squares and discs.
//!
//! With `T_K = (-K/2, K/2]^2` and `D_K = { |x| <= K/2 }`, for `theta` in
//! `B(pi)`:
//!
//! * `|sum_{T_K} e^{i theta x}| <= 4 (K + 1)(1 + 1/||theta||_inf)`
//! * `|sum_{D_K} e^{i theta x}| <= 4 (K + 1) / ||theta||_inf`
//! * `|sum_{D_K \ D_J} e^{i theta y} / |y|^2|` is at most `C_0 / (1 ^ J ||theta||_inf)`
//!   for some unspecified `C_0`; we report the implied lower bound on `C_0`.
//! * `(1 / log K) sum_{T'_K} |y|^-2 -> 2 pi` and
//!   `sum_{D_{2K} \ D_K} |y|^-2 -> 2 pi log 2`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::sum::{pairwise_sum, pairwise_sum_by};

fn sup_norm(theta: [f64; 2]) -> f64 {
    theta[0].abs().max(theta[1].abs())
}

/// Coordinates of `T_K` along one axis: integers in `(-K/2, K/2]`.
fn torus_axis(k: usize) -> std::ops::RangeInclusive<i64> {
    let k = k as i64;
    let lo = -(k / 2) + if k % 2 == 0 { 1 } else { 0 };
    lo..=k / 2
}

/// Largest `w >= 0` with `4 (x^2 + w^2) <= K^2`, or `None` if `x` is outside `D_K`.
fn disc_half_width(k: usize, x: i64) -> Option<i64> {
    let room = (k * k) as i64 - 4 * x * x;
    if room < 0 {
        return None;
    }
    let mut w = ((room as f64) / 4.0).sqrt() as i64;
    while 4 * (w + 1) * (w + 1) <= room {
        w += 1;
    }
    while w > 0 && 4 * w * w > room {
        w -= 1;
    }
    Some(w)
}

/// `sum_{j=-w}^{w} e^{i u j}`, real by symmetry.
fn dirichlet(w: i64, u: f64) -> f64 {
    let s = (u / 2.0).sin();
    if s.abs() > 1e-4 {
        ((w as f64 + 0.5) * u).sin() / s
    } else {
        1.0 + 2.0 * (1..=w).map(|j| (u * j as f64).cos()).sum::<f64>()
    }
}

/// `|sum_{x in T_K} e^{i theta . x}|`, using that the sum factorises over axes.
pub fn torus_square_character_sum(k: usize, theta: [f64; 2]) -> f64 {
    let axis = |u: f64| -> Complex64 { torus_axis(k).map(|j| Complex64::from_polar(1.0, u * j as f64)).sum() };
    (axis(theta[0]) * axis(theta[1])).norm()
}

/// `|sum_{x in D_K} e^{i theta . x}|`, summing each row in closed form.
pub fn disc_character_sum(k: usize, theta: [f64; 2]) -> f64 {
    let r = (k / 2) as i64;
    let total: Complex64 = (-r..=r)
        .filter_map(|x| {
            disc_half_width(k, x).map(|w| Complex64::from_polar(dirichlet(w, theta[1]), theta[0] * x as f64))
        })
        .sum();
    total.norm()
}

/// `|sum_{y in D_K \ D_J} e^{i theta . y} / |y|^2|` by direct summation.
pub fn shell_weighted_sum(k: usize, j: usize, theta: [f64; 2]) -> f64 {
    let r = (k / 2) as i64;
    let rows: Vec<Complex64> = (-r..=r)
        .into_par_iter()
        .map(|x| {
            let mut acc = Complex64::new(0.0, 0.0);
            let Some(w) = disc_half_width(k, x) else { return acc };
            for y in -w..=w {
                let sq = x * x + y * y;
                // y in D_J  <=>  4 |y|^2 <= J^2
                if 4 * sq <= (j * j) as i64 {
                    continue;
                }
                acc += Complex64::from_polar(1.0 / sq as f64, theta[0] * x as f64 + theta[1] * y as f64);
            }
            acc
        })
        .collect();
    let re: Vec<f64> = rows.iter().map(|c| c.re).collect();
    let im: Vec<f64> = rows.iter().map(|c| c.im).collect();
    Complex64::new(pairwise_sum(&re), pairwise_sum(&im)).norm()
}

/// `sum_{y in T'_K} |y|^-2`.
fn torus_inverse_square_sum(k: usize) -> f64 {
    let axis: Vec<i64> = torus_axis(k).collect();
    let rows: Vec<f64> = axis
        .par_iter()
        .map(|&x| {
            pairwise_sum_by(axis.len(), &|i| {
                let y = axis[i];
                let sq = x * x + y * y;
                if sq == 0 {
                    0.0
                } else {
                    1.0 / sq as f64
                }
            })
        })
        .collect();
    pairwise_sum(&rows)
}

/// `sum |y|^-2` over `D_outer \ D_inner` (`inner = 0` gives `D'_outer`).
fn disc_shell_inverse_square(outer: usize, inner: usize) -> f64 {
    let r = (outer / 2) as i64;
    let rows: Vec<f64> = (-r..=r)
        .into_par_iter()
        .map(|x| {
            let Some(w) = disc_half_width(outer, x) else { return 0.0 };
            let len = (2 * w + 1) as usize;
            pairwise_sum_by(len, &|i| {
                let y = i as i64 - w;
                let sq = x * x + y * y;
                if sq == 0 || 4 * sq <= (inner * inner) as i64 {
                    0.0
                } else {
                    1.0 / sq as f64
                }
            })
        })
        .collect();
    pairwise_sum(&rows)
}

/// `(1 / log K) sum_{y in T'_K} |y|^-2`, tending to `2 pi`.
pub fn log_sum_ratio(k: usize) -> f64 {
    torus_inverse_square_sum(k) / (k as f64).ln()
}

/// `(1 / log K) sum_{y in D'_K} |y|^-2`, tending to `2 pi`.
pub fn disc_log_sum_ratio(k: usize) -> f64 {
    disc_shell_inverse_square(k, 0) / (k as f64).ln()
}

/// `sum_{y in D_{2K} \ D_K} |y|^-2`, tending to `2 pi log 2`.
pub fn shell_inverse_square_sum(k: usize) -> f64 {
    disc_shell_inverse_square(2 * k, k)
}

/// The two proven character-sum bounds at one `(K, theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub k: usize,
    pub theta: [f64; 2],
    pub torus_sum: f64,
    pub torus_bound: f64,
    pub disc_sum: f64,
    pub disc_bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.torus_sum <= self.torus_bound && self.disc_sum <= self.disc_bound
    }
}

pub fn bound_check(k: usize, theta: [f64; 2]) -> BoundCheck {
    let n = sup_norm(theta);
    let scale = 4.0 * (k as f64 + 1.0);
    BoundCheck {
        k,
        theta,
        torus_sum: torus_square_character_sum(k, theta),
        torus_bound: scale * (1.0 + 1.0 / n),
        disc_sum: disc_character_sum(k, theta),
        disc_bound: scale / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellCheck {
    pub theta: [f64; 2],
    pub sum: f64,
    /// `sum * (1 ^ J ||theta||_inf)`: any admissible `C_0` is at least this.
    pub c0_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma21Audit {
    pub k: usize,
    pub j: usize,
    pub bounds: Vec<BoundCheck>,
    pub shells: Vec<ShellCheck>,
    pub log_ratio: f64,
    /// `log_ratio - 2 pi`.
    pub log_ratio_gap: f64,
}

impl Lemma21Audit {
    pub fn bounds_hold(&self) -> bool {
        self.bounds.iter().all(BoundCheck::holds)
    }

    /// Largest implied lower bound on `C_0` over the sampled angles.
    pub fn c0_sup(&self) -> f64 {
        self.shells.iter().map(|s| s.c0_lower_bound).fold(0.0, f64::max)
    }
}

/// Full audit at `(K, J)` over the given angles. Requires `K > J >= 1` and
/// every angle in `B'(pi)`.
pub fn lemma21_audit(k: usize, j: usize, thetas: &[[f64; 2]]) -> Result<Lemma21Audit, super::LimitsError> {
    if !(k > j && j >= 1) {
        return Err(super::LimitsError::BadArgument(format!("need K > J >= 1, got K={k}, J={j}")));
    }
    for th in thetas {
        let n = sup_norm(*th);
        if !(n > 0.0 && n <= std::f64::consts::PI) {
            return Err(super::LimitsError::BadArgument(format!("theta {th:?} outside B'(pi)")));
        }
    }
    let bounds = thetas.iter().map(|&th| bound_check(k, th)).collect();
    let shells = thetas
        .iter()
        .map(|&th| {
            let sum = shell_weighted_sum(k, j, th);
            ShellCheck { theta: th, sum, c0_lower_bound: sum * (j as f64 * sup_norm(th)).min(1.0) }
        })
        .collect();
    let log_ratio = log_sum_ratio(k);
    Ok(Lemma21Audit { k, j, bounds, shells, log_ratio, log_ratio_gap: log_ratio - 2.0 * std::f64::consts::PI })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::Region;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn brute(points: &[crate::torus::Site], theta: [f64; 2]) -> f64 {
        points
            .iter()
            .map(|p| Complex64::from_polar(1.0, theta[0] * p.x as f64 + theta[1] * p.y as f64))
            .sum::<Complex64>()
            .norm()
    }

    #[test]
    fn fast_sums_match_brute_force_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for k in [1usize, 2, 3, 7, 10, 25] {
            let torus = Region::torus_square(k as f64).enumerate().unwrap();
            let disc = Region::disc(k as f64).enumerate().unwrap();
            for _ in 0..10 {
                let th = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
                assert!((torus_square_character_sum(k, th) - brute(&torus, th)).abs() < 1e-9);
                assert!((disc_character_sum(k, th) - brute(&disc, th)).abs() < 1e-9);
            }
            // near-zero angle goes through the direct Dirichlet branch
            let th = [1e-6, 1e-7];
            assert!((disc_character_sum(k, th) - brute(&disc, th)).abs() < 1e-9);
        }
    }

    #[test]
    fn shell_sum_matches_enumeration() {
        let th = [0.4, -1.3];
        let (k, j) = (20, 6);
        let outer = Region::disc(k as f64).enumerate().unwrap();
        let expect: Complex64 = outer
            .iter()
            .filter(|p| !Region::disc(j as f64).contains(**p))
            .map(|p| Complex64::from_polar(1.0 / p.norm_sq() as f64, th[0] * p.x as f64 + th[1] * p.y as f64))
            .sum();
        assert!((shell_weighted_sum(k, j, th) - expect.norm()).abs() < 1e-12);
    }

    #[test]
    fn box_bound_at_corner_frequency() {
        let b = bound_check(10, [PI, PI]);
        assert!(b.holds());
        assert!((b.torus_bound - 44.0 * (1.0 + 1.0 / PI)).abs() < 1e-12);
    }

    #[test]
    fn proven_bounds_hold_on_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let k = rng.random_range(1..=300usize);
            let th = [rng.random_range(-PI..=PI), rng.random_range(-PI..=PI)];
            if sup_norm(th) == 0.0 {
                continue;
            }
            assert!(bound_check(k, th).holds(), "K={k} theta={th:?}");
        }
    }

    #[test]
    fn inverse_square_sums_approach_their_limits() {
        // slow logarithmic convergence: only check the trend at moderate K
        let gaps: Vec<f64> = [100, 400, 1600].iter().map(|&k| (log_sum_ratio(k) - 2.0 * PI).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        let shell = shell_inverse_square_sum(1000);
        assert!((shell / (2.0 * PI * 2f64.ln()) - 1.0).abs() < 0.02);
        assert!((disc_log_sum_ratio(2000) / (2.0 * PI) - 1.0).abs() < 0.1);
    }

    #[test]
    fn audit_rejects_bad_arguments() {
        assert!(lemma21_audit(5, 5, &[[1.0, 1.0]]).is_err());
        assert!(lemma21_audit(5, 2, &[[0.0, 0.0]]).is_err());
        assert!(lemma21_audit(5, 2, &[[4.0, 0.0]]).is_err());
        let a = lemma21_audit(40, 4, &[[0.5, 0.1], [PI, -2.0]]).unwrap();
        assert!(a.bounds_hold());
        assert!(a.c0_sup() > 0.0);
        assert_eq!(a.shells.len(), 2);
    }
}
