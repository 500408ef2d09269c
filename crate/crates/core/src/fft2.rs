//! Square 2-D DFT in natural order plus conversions to torus storage order.
//!
//! Rows are transformed independently (in parallel), then the array is
//! transposed and the rows transformed again, so the arithmetic performed
//! for each output entry does not depend on the worker count.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::real::Real;
use crate::torus::TorusSpec;

fn transform_rows<T: Real>(data: &mut [Complex<T>], n: usize, direction: FftDirection) {
    let fft = FftPlanner::<T>::new().plan_fft(n, direction);
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex::new(T::zero(), T::zero()); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

fn transpose<T: Real>(src: &[Complex<T>], dst: &mut [Complex<T>], n: usize) {
    dst.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            *out = src[j * n + i];
        }
    });
}

/// Unnormalised 2-D DFT of an `n x n` row-major array, in place.
/// `inverse` selects the `+i` sign.
pub fn dft2<T: Real>(data: &mut [Complex<T>], n: usize, inverse: bool) {
    assert_eq!(data.len(), n * n, "dft2 expects an n x n array");
    let direction = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); n * n];
    transform_rows(data, n, direction);
    transpose(data, &mut scratch, n);
    transform_rows(&mut scratch, n, direction);
    transpose(&scratch, data, n);
}

/// Storage-order reals to a natural-order complex array (`v mod L` layout).
pub fn storage_to_dft<T: Real>(spec: TorusSpec, values: &[T]) -> Vec<Complex<T>> {
    let n = spec.side();
    let mut out = vec![Complex::new(T::zero(), T::zero()); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
        let src_row = (r + n / 2 - 1) % n;
        for (c, slot) in row.iter_mut().enumerate() {
            let src_col = (c + n / 2 - 1) % n;
            *slot = Complex::new(values[src_row * n + src_col], T::zero());
        }
    });
    out
}

/// Real parts of a natural-order array, back in storage order.
pub fn dft_to_storage_real<T: Real>(spec: TorusSpec, data: &[Complex<T>]) -> Vec<T> {
    let n = spec.side();
    let mut out = vec![T::zero(); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
        let src_row = (r + n / 2 + 1) % n;
        for (c, slot) in row.iter_mut().enumerate() {
            let src_col = (c + n / 2 + 1) % n;
            *slot = data[src_row * n + src_col].re;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::Site;

    #[test]
    fn layout_conversions_follow_dft_index() {
        let spec = TorusSpec::new(6).unwrap();
        let values: Vec<f64> = (0..36).map(|i| i as f64).collect();
        let dft = storage_to_dft(spec, &values);
        for p in spec.sites() {
            assert_eq!(dft[spec.dft_index(p)].re, values[spec.index(p)]);
        }
        assert_eq!(dft_to_storage_real(spec, &dft), values);
        assert_eq!(dft[0].re, values[spec.index(Site::ORIGIN)]);
    }

    #[test]
    fn matches_naive_dft() {
        let n = 6;
        let input: Vec<Complex<f64>> =
            (0..n * n).map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut fast = input.clone();
        dft2(&mut fast, n, false);
        for k1 in 0..n {
            for k2 in 0..n {
                let mut acc = Complex::new(0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        let ang = -2.0 * std::f64::consts::PI * ((k1 * a + k2 * b) as f64) / n as f64;
                        acc += input[a * n + b] * Complex::from_polar(1.0, ang);
                    }
                }
                assert!((acc - fast[k1 * n + k2]).norm() < 1e-12);
            }
        }
        dft2(&mut fast, n, true);
        for (a, b) in input.iter().zip(&fast) {
            assert!((a * (n * n) as f64 - b).norm() < 1e-11);
        }
    }
}
