mod common;

use common::{orthogonal, similar, spectrum_distance, stable_triangular};
use doa_cert::matrix::{
    eig_general, eig_symmetric, is_negative_definite, lyapunov_residual, solve, solve_lyapunov,
    Matrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (usize, Vec<f64>)> {
    n.prop_flat_map(|n| (Just(n), prop::collection::vec(-2.0..2.0f64, n * n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_on_random_hurwitz_family(
        (n, raw) in square(2..=6),
        diag in prop::collection::vec(0.2..4.0f64, 6),
        upper in prop::collection::vec(-2.0..2.0f64, 15),
    ) {
        let q = orthogonal(n, &raw);
        prop_assume!(q.is_some());
        let d: Vec<f64> = diag[..n].iter().map(|v| -v).collect();
        let f = similar(&stable_triangular(&d, &upper), &q.unwrap());
        let p = solve_lyapunov(&f).unwrap();
        prop_assert!(lyapunov_residual(&f, &p).unwrap() <= 1e-9);
        prop_assert!(p.max_abs_diff(&p.transpose()).unwrap() <= 1e-12 * p.max_abs().max(1.0));
        prop_assert!(eig_symmetric(&p).unwrap()[0] > 0.0);
    }

    #[test]
    fn negative_definite_agrees_with_sampling((n, raw) in square(2..=5), seed in any::<u64>()) {
        let a = Matrix::from_fn(n, n, |i, j| raw[i * n + j] - if i == j { 1.5 } else { 0.0 });
        if is_negative_definite(&a).unwrap() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let ax = a.mul_vec(&x).unwrap();
                let q: f64 = x.iter().zip(&ax).map(|(u, v)| u * v).sum();
                let norm2: f64 = x.iter().map(|v| v * v).sum();
                prop_assert!(norm2 == 0.0 || q < 0.0);
            }
        }
    }

    #[test]
    fn spectrum_is_similarity_invariant(
        (n, raw) in square(2..=5),
        pert in prop::collection::vec(-0.3..0.3f64, 25),
    ) {
        let a = Matrix::from_fn(n, n, |i, j| raw[i * n + j]);
        let t = Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + pert[i * n + j] / n as f64);
        let at = a.matmul(&t).unwrap();
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| solve(&t, &(0..n).map(|i| at.get(i, j)).collect::<Vec<_>>()).unwrap())
            .collect();
        let b = Matrix::from_fn(n, n, |i, j| cols[j][i]);
        let ea = eig_general(&a).unwrap();
        let eb = eig_general(&b).unwrap();
        prop_assert!(spectrum_distance(&ea.eigenvalues, &eb.eigenvalues) <= 1e-6);
    }

    #[test]
    fn symmetric_spectrum_sums_to_trace((n, raw) in square(2..=6)) {
        let m = Matrix::from_fn(n, n, |i, j| raw[i * n + j] + raw[j * n + i]);
        let eig = eig_symmetric(&m).unwrap();
        prop_assert!(eig.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((eig.iter().sum::<f64>() - m.trace()).abs() <= 1e-9);
        let fro: f64 = m.as_slice().iter().map(|v| v * v).sum();
        prop_assert!((eig.iter().map(|v| v * v).sum::<f64>() - fro).abs() <= 1e-8 * fro.max(1.0));
    }
}
