//! Law of the pure death process `k -> k - 1` at rate `C(k, 2)`.

use nalgebra::DMatrix;

use super::LimitsError;

/// Above this many lineages the exponential-mixture expansion loses too
/// much to cancellation and the dense matrix exponential is used instead.
pub const DENSE_FALLBACK_ABOVE: usize = 30;

fn rate(k: usize) -> f64 {
    (k * (k - 1) / 2) as f64
}

/// `P(D_t = k)` for `k = 1..=n`, started from `D_0 = n`; entry `k - 1` holds `k`.
pub fn death_process_dist(n: usize, t: f64) -> Result<Vec<f64>, LimitsError> {
    if n < 2 {
        return Err(LimitsError::BadArgument(format!("need n >= 2 lineages, got {n}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(LimitsError::BadArgument(format!("time {t} must be finite and >= 0")));
    }
    if t == 0.0 {
        let mut p = vec![0.0; n];
        p[n - 1] = 1.0;
        return Ok(p);
    }
    if n > DENSE_FALLBACK_ABOVE {
        Ok(dense(n, t))
    } else {
        Ok(expansion(n, t))
    }
}

/// Sum of exponentials over the distinct rates `mu_i = C(i, 2)`:
/// `P(D_t = k) = prod_{j=k+1}^n mu_j * sum_{i=k}^n e^{-mu_i t} / prod_{j=k..n, j != i} (mu_j - mu_i)`.
fn expansion(n: usize, t: f64) -> Vec<f64> {
    let mut p = vec![0.0; n];
    for k in 2..=n {
        let lead: f64 = (k + 1..=n).map(rate).product();
        let mut acc = 0.0;
        for i in k..=n {
            let denom: f64 = (k..=n).filter(|&j| j != i).map(|j| rate(j) - rate(i)).product();
            acc += (-rate(i) * t).exp() / denom;
        }
        p[k - 1] = (lead * acc).clamp(0.0, 1.0);
    }
    let rest: f64 = p[1..].iter().sum();
    p[0] = (1.0 - rest).max(0.0);
    p
}

fn dense(n: usize, t: f64) -> Vec<f64> {
    let g = death_generator(n) * t;
    let e = g.exp();
    (0..n).map(|k| e[(n - 1, k)].max(0.0)).collect()
}

/// Generator over states `1..=n` (row/column `k - 1` is state `k`).
pub(crate) fn death_generator(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n);
    for k in 2..=n {
        q[(k - 1, k - 1)] = -rate(k);
        q[(k - 1, k - 2)] = rate(k);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_lineages_is_a_single_exponential_clock() {
        for t in [0.1, 0.7, 3.0] {
            let p = death_process_dist(2, t).unwrap();
            assert!((p[1] - (-t).exp()).abs() < 1e-15);
            assert!((p[0] - (1.0 - (-t).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn time_zero_is_point_mass() {
        assert_eq!(death_process_dist(5, 0.0).unwrap(), vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn four_lineages_match_dense_exponential() {
        let a = expansion(4, 0.7);
        let b = dense(4, 0.7);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn expansion_stays_accurate_up_to_fallback() {
        for n in [8, 16, 24, DENSE_FALLBACK_ABOVE] {
            for t in [0.01, 0.1, 0.5, 2.0] {
                let a = expansion(n, t);
                let b = dense(n, t);
                let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(err < 1e-8, "n={n} t={t}: {err}");
            }
        }
    }

    #[test]
    fn sums_to_one_and_decreases_stochastically() {
        for n in [2, 5, 12, 40] {
            let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.05).collect();
            let mut prev_cdf = vec![0.0; n];
            for &t in &times {
                let p = death_process_dist(n, t).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12, "n={n} t={t}");
                let cdf: Vec<f64> = p
                    .iter()
                    .scan(0.0, |acc, &x| {
                        *acc += x;
                        Some(*acc)
                    })
                    .collect();
                for k in 0..n {
                    assert!(cdf[k] >= prev_cdf[k] - 1e-12);
                }
                prev_cdf = cdf;
            }
        }
    }

    #[test]
    fn bad_arguments() {
        assert!(death_process_dist(1, 1.0).is_err());
        assert!(death_process_dist(3, -1.0).is_err());
    }
}
