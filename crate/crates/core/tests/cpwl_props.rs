use doa_cert::cpwl::{cpwl_eval, fit_pieces, global_lambda, SimplicialPartition};
use doa_cert::matrix::{solve, Matrix};
use doa_cert::{fixtures, parse_system};
use proptest::prelude::*;

/// Barycentric coordinates of `x` in the simplex `v`.
fn barycentric(v: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = Matrix::from_fn(n + 1, n + 1, |r, c| if r < n { v[c][r] } else { 1.0 });
    let mut rhs = x.to_vec();
    rhs.push(1.0);
    solve(&m, &rhs).unwrap()
}

/// Cofactor expansion; fine for the small dimensions used here.
fn det(m: &[Vec<f64>]) -> f64 {
    if m.len() == 1 {
        return m[0][0];
    }
    (0..m.len())
        .map(|c| {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(k, _)| k != c).map(|(_, v)| *v).collect())
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][c] * det(&minor)
        })
        .sum()
}

fn partition() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<usize>)> {
    (1usize..=3).prop_flat_map(|n| {
        (
            prop::collection::vec((-2.0..0.0f64, 0.1..2.0f64).prop_map(|(lo, w)| (lo, lo + w)), n),
            prop::collection::vec(1usize..5, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn located_simplex_contains_point((bounds, div) in partition(), t in prop::collection::vec(0.0..=1.0f64, 3)) {
        let part = SimplicialPartition::new(&bounds, &div).unwrap();
        let x: Vec<f64> = bounds.iter().zip(&t).map(|(&(lo, hi), s)| lo + s * (hi - lo)).collect();
        let id = part.locate(&x).unwrap();
        let w = barycentric(&part.vertices(id), &x);
        prop_assert!(w.iter().all(|&c| c >= -1e-9), "{:?}", w);
        let outside: Vec<f64> = x.iter().enumerate().map(|(i, v)| if i == 0 { bounds[0].1 + 0.5 } else { *v }).collect();
        prop_assert!(part.locate(&outside).is_none());
    }

    #[test]
    fn simplices_tile_the_box((bounds, div) in partition()) {
        let part = SimplicialPartition::new(&bounds, &div).unwrap();
        let fact: usize = (1..=bounds.len()).product();
        prop_assert_eq!(part.simplex_count(), fact * div.iter().product::<usize>());
        let vol_box: f64 = bounds.iter().map(|(lo, hi)| hi - lo).product();
        let mut total = 0.0;
        for id in 0..part.simplex_count() {
            let v = part.vertices(id);
            let n = bounds.len();
            let e: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| v[c + 1][r] - v[0][r]).collect()).collect();
            total += det(&e).abs() / fact as f64;
        }
        prop_assert!((total - vol_box).abs() <= 1e-9 * vol_box);
    }

    #[test]
    fn error_bound_holds_inside_each_simplex(
        which in 0usize..3,
        div in 2usize..8,
        t in prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64), 50),
    ) {
        let text = [fixtures::EXAMPLE1, fixtures::VANDERPOL, fixtures::HOPF][which];
        let vf = parse_system(text).unwrap();
        let bounds = [(-1.0, 1.0), (-1.0, 1.0)];
        let part = SimplicialPartition::new(&bounds, &[div, div]).unwrap();
        let pieces = fit_pieces(&vf, &part).unwrap();
        for (s, r) in t {
            let x = [-1.0 + 2.0 * s, -1.0 + 2.0 * r];
            let id = part.locate(&x).unwrap();
            let f = vf.eval(&x).unwrap();
            let g = pieces[id].eval(&x);
            for j in 0..2 {
                prop_assert!((f[j] - g[j]).abs() <= pieces[id].lambda[j] + 1e-12);
            }
        }
    }
}

#[test]
fn interpolation_is_exact_at_vertices() {
    let vf = parse_system(fixtures::HOPF).unwrap();
    let part = SimplicialPartition::new(&[(-1.0, 1.0), (-0.5, 1.5)], &[5, 3]).unwrap();
    let pieces = fit_pieces(&vf, &part).unwrap();
    for (id, piece) in pieces.iter().enumerate() {
        for v in part.vertices(id) {
            let f = vf.eval(&v).unwrap();
            for (a, b) in f.iter().zip(piece.eval(&v)) {
                assert!((a - b).abs() <= 1e-12, "simplex {id}");
            }
        }
    }
}

#[test]
fn approximation_is_continuous_across_faces() {
    let vf = parse_system(fixtures::VANDERPOL).unwrap();
    let part = SimplicialPartition::new(&[(-1.0, 1.0), (-1.0, 1.0)], &[6, 6]).unwrap();
    let pieces = fit_pieces(&vf, &part).unwrap();
    for id in 0..part.simplex_count() {
        let v = part.vertices(id);
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                let mid: Vec<f64> = v[a].iter().zip(&v[b]).map(|(p, q)| 0.5 * (p + q)).collect();
                let here = pieces[id].eval(&mid);
                let there = cpwl_eval(&part, &pieces, &mid).unwrap();
                for (p, q) in here.iter().zip(&there) {
                    assert!((p - q).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn refinement_does_not_increase_lambda() {
    for text in [fixtures::EXAMPLE1, fixtures::VANDERPOL, fixtures::HOPF] {
        let vf = parse_system(text).unwrap();
        let mut prev = vec![f64::INFINITY; 2];
        for div in [2, 4, 8, 16] {
            let part = SimplicialPartition::new(&[(-1.0, 1.0), (-1.0, 1.0)], &[div, div]).unwrap();
            let lam = global_lambda(&fit_pieces(&vf, &part).unwrap());
            for j in 0..2 {
                assert!(lam[j] <= prev[j] + 1e-15, "{div}: {lam:?} after {prev:?}");
            }
            prev = lam;
        }
    }
}

#[test]
fn linear_field_has_zero_lambda() {
    let vf = parse_system(fixtures::LINEAR).unwrap();
    let n = vf.dim();
    let part = SimplicialPartition::new(&vec![(-1.0, 1.0); n], &vec![3; n]).unwrap();
    let pieces = fit_pieces(&vf, &part).unwrap();
    assert!(global_lambda(&pieces).iter().all(|&l| l <= 1e-12));
    let j = vf.jacobian(&vec![0.0; n]).unwrap();
    for p in &pieces {
        assert!(p.a.max_abs_diff(&j).unwrap() <= 1e-12);
    }
}
