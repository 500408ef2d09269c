use proptest::prelude::*;
use torwalk::kernels::{JumpKernel, KernelDensity};
use torwalk::oracle::{dense_green, dense_heat, dense_laplace_hit, DenseChain};
use torwalk::spectral::SpectralGrid;
use torwalk::wrapped::TorusKernel;
use torwalk::{Site, TorusSpec};

fn spec(l: usize) -> TorusSpec {
    TorusSpec::new(l).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn kernel_matrix() -> Vec<JumpKernel<f64>> {
    let q0 = JumpKernel::uniform(2).unwrap();
    vec![
        JumpKernel::uniform(2).unwrap(),
        JumpKernel::uniform(6).unwrap(),
        JumpKernel::mixture(0.5, 6, &q0).unwrap(),
        JumpKernel::from_density(6, &KernelDensity::quartic()).unwrap(),
        JumpKernel::from_density(4, &KernelDensity::cosine()).unwrap(),
    ]
}

#[test]
fn fft_and_direct_frequency_routes_agree() {
    for k in kernel_matrix() {
        for l in [8usize, 10, 16] {
            let a = SpectralGrid::build(&k, spec(l)).unwrap();
            let b = SpectralGrid::build_direct(&k, spec(l)).unwrap();
            assert!(max_abs_diff(a.values(), b.values()) < 1e-13, "{} L={l}", k.label());
        }
    }
}

#[test]
fn spectral_matches_dense_oracle_across_matrix() {
    for k in kernel_matrix() {
        for l in [8usize, 12, 16] {
            let grid = SpectralGrid::build(&k, spec(l)).unwrap();
            let chain = DenseChain::from_kernel(&k, spec(l)).unwrap();
            for lambda in [1e-3, 0.3, 4.0] {
                let g = grid.green(lambda).unwrap();
                let tol = 1e-9 * g.value(Site::ORIGIN).max(1.0);
                assert!(max_abs_diff(g.values(), &dense_green(&chain, lambda).unwrap()) < tol);
                let f = grid.laplace_hit(lambda).unwrap();
                assert!(max_abs_diff(f.values(), &dense_laplace_hit(&chain, lambda).unwrap()) < 1e-9);
            }
            for t in [0.0, 0.7, 25.0] {
                let h = grid.heat(t).unwrap();
                assert!(max_abs_diff(h.raw(), &dense_heat(&chain, t).unwrap()) < 1e-10);
            }
        }
    }
}

#[test]
fn pointwise_green_matches_full_field() {
    let k = JumpKernel::<f64>::uniform(4).unwrap();
    let grid = SpectralGrid::build(&k, spec(32)).unwrap();
    let lambda = 0.01;
    let field = grid.green(lambda).unwrap();
    for x in [Site::ORIGIN, Site::new(3, -5), Site::new(16, 16), Site::new(-7, 2)] {
        let direct = grid.green_at(lambda, x).unwrap();
        assert!((direct - field.value(x)).abs() < 1e-11 * field.value(Site::ORIGIN));
    }
    let at = grid.laplace_hit_at(lambda, &[Site::new(3, -5), Site::new(32, 0)]).unwrap();
    let full = grid.laplace_hit(lambda).unwrap();
    assert!((at[0] - full.value(Site::new(3, -5))).abs() < 1e-11);
    assert_eq!(at[1], 1.0);
}

#[test]
fn single_precision_tracks_double() {
    let k64 = JumpKernel::<f64>::uniform(4).unwrap();
    let k32 = JumpKernel::<f32>::uniform(4).unwrap();
    let g64 = SpectralGrid::build(&k64, spec(16)).unwrap();
    let g32 = SpectralGrid::build(&k32, spec(16)).unwrap();
    let f64s = g64.laplace_hit(0.5).unwrap();
    let f32s = g32.laplace_hit(0.5f32).unwrap();
    let worst = f64s.values().iter().zip(f32s.values()).map(|(a, &b)| (a - b as f64).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-5, "{worst}");
    let h = g32.heat(3.0f32).unwrap();
    assert!((h.total_mass() - 1.0).abs() < 1e-5);
}

#[test]
fn meanfield_heat_has_closed_form() {
    // P_0(X_t = 0) = 1/L^2 + (1 - 1/L^2) exp(-t L^2 / (L^2 - 1))
    let l = 8usize;
    let n = (l * l) as f64;
    let grid = SpectralGrid::from_torus_kernel(&TorusKernel::meanfield(spec(l)));
    for t in [0.0, 0.5, 3.0] {
        let p0 = grid.heat(t).unwrap().prob(Site::ORIGIN);
        let exact = 1.0 / n + (1.0 - 1.0 / n) * (-t * n / (n - 1.0)).exp();
        assert!((p0 - exact).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplace_field_is_a_symmetric_probability_transform(
        half_l in 2usize..10,
        m_half in 1usize..4,
        lambda in 1e-4f64..10.0,
    ) {
        let l = 2 * half_l;
        let m = 2 * m_half;
        prop_assume!(m < l);
        let grid = SpectralGrid::build(&JumpKernel::uniform(m).unwrap(), spec(l)).unwrap();
        let f = grid.laplace_hit(lambda).unwrap();
        prop_assert_eq!(f.value(Site::ORIGIN), 1.0);
        for x in spec(l).sites() {
            let v = f.value(x);
            prop_assert!(v > 0.0 && v <= 1.0 + 1e-12);
            prop_assert!((v - f.value(-x)).abs() < 1e-12);
            prop_assert!((v - f.value(Site::new(x.y, x.x))).abs() < 1e-12);
        }
        // larger lambda, smaller transform
        let g = grid.laplace_hit(lambda * 2.0).unwrap();
        for x in spec(l).sites().filter(|x| !x.is_origin()) {
            prop_assert!(g.value(x) < f.value(x));
        }
    }

    #[test]
    fn heat_is_a_probability_vector(half_l in 1usize..10, t in 0.0f64..50.0) {
        let l = 2 * half_l;
        let k = TorusKernel::fold(&JumpKernel::uniform(2).unwrap(), spec(l));
        let h = SpectralGrid::from_torus_kernel(&k).heat(t).unwrap();
        prop_assert!((h.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(h.raw().iter().all(|&p| p > -1e-14));
    }
}
