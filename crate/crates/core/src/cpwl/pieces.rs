use rayon::prelude::*;

use super::partition::{barycentric_lattice, SimplicialPartition};
use super::CpwlError;
use crate::matrix::{is_negative_definite, Lu, Matrix};
use crate::system::VectorField;

/// Margin applied to the sampled approximation error.
pub const LAMBDA_SAFETY_FACTOR: f64 = 1.25;
/// Barycentric denominator of the error sample lattice (vertices, edge
/// midpoints and quarter points).
pub const SAMPLE_DENOMINATOR: usize = 4;
/// Minimum distance between a piece equilibrium and its simplex frontier.
pub const FRONTIER_TOL: f64 = 1e-9;

/// The affine map `A x + B` interpolating `f` on one simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub simplex: usize,
    pub a: Matrix,
    pub b: Vec<f64>,
    /// Componentwise bound on `|f(x) - (A x + B)|` over the simplex.
    pub lambda: Vec<f64>,
}

impl AffinePiece {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.a.mul_vec(x).expect("piece dimension");
        for (yi, bi) in y.iter_mut().zip(&self.b) {
            *yi += bi;
        }
        y
    }
}

/// Points where the approximation error is sampled on a simplex.
pub fn error_samples(vertices: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts = barycentric_lattice(vertices, SAMPLE_DENOMINATOR);
    let k = vertices.len() as f64;
    let n = vertices.first().map_or(0, Vec::len);
    pts.push(
        (0..n)
            .map(|axis| vertices.iter().map(|v| v[axis]).sum::<f64>() / k)
            .collect(),
    );
    pts
}

/// Affine interpolant of `values[m] = f(vertices[m])`.
pub fn interpolate(vertices: &[Vec<f64>], values: &[Vec<f64>]) -> Option<(Matrix, Vec<f64>)> {
    let n = vertices[0].len();
    let origin = &vertices[0];
    // Rows [v_m - v_0, 1]; translating keeps the system well scaled.
    let m = Matrix::from_fn(n + 1, n + 1, |r, c| {
        if c < n {
            vertices[r][c] - origin[c]
        } else {
            1.0
        }
    });
    let lu = Lu::factor(&m).ok()?;
    let mut a = Matrix::zeros(n, n);
    let mut b = vec![0.0; n];
    for j in 0..n {
        let rhs: Vec<f64> = values.iter().map(|v| v[j]).collect();
        let coef = lu.solve(&rhs).ok()?;
        for k in 0..n {
            a[(j, k)] = coef[k];
        }
        b[j] = coef[n] - (0..n).map(|k| coef[k] * origin[k]).sum::<f64>();
    }
    Some((a, b))
}

fn fit_one(vf: &VectorField, part: &SimplicialPartition, id: usize) -> Result<AffinePiece, CpwlError> {
    let vertices = part.vertices(id);
    let eval = |x: &[f64]| vf.eval(x).map_err(|e| CpwlError::Field { simplex: id, source: e });
    let values = vertices.iter().map(|v| eval(v)).collect::<Result<Vec<_>, _>>()?;
    let (a, b) = interpolate(&vertices, &values).ok_or(CpwlError::SingularSimplex(id))?;
    let mut piece = AffinePiece {
        simplex: id,
        a,
        b,
        lambda: vec![0.0; vertices.len() - 1],
    };
    let mut worst = vec![0.0f64; piece.lambda.len()];
    for s in error_samples(&vertices) {
        let f = eval(&s)?;
        for (j, (fj, pj)) in f.iter().zip(piece.eval(&s)).enumerate() {
            worst[j] = worst[j].max((fj - pj).abs());
        }
    }
    piece.lambda = worst.into_iter().map(|w| LAMBDA_SAFETY_FACTOR * w).collect();
    Ok(piece)
}

/// Fits one affine piece per simplex (in simplex-id order).
pub fn fit_pieces(
    vf: &VectorField,
    part: &SimplicialPartition,
) -> Result<Vec<AffinePiece>, CpwlError> {
    if vf.dim() != part.dim() {
        return Err(CpwlError::InvalidInput(format!(
            "field has dimension {} but the partition has {}",
            vf.dim(),
            part.dim()
        )));
    }
    (0..part.simplex_count())
        .into_par_iter()
        .map(|id| fit_one(vf, part, id))
        .collect()
}

/// Evaluates the CPWL approximation; `None` outside the box.
pub fn cpwl_eval(part: &SimplicialPartition, pieces: &[AffinePiece], x: &[f64]) -> Option<Vec<f64>> {
    part.locate(x).map(|id| pieces[id].eval(x))
}

/// Componentwise maximum of `lambda` over all pieces.
pub fn global_lambda(pieces: &[AffinePiece]) -> Vec<f64> {
    let n = pieces.first().map_or(0, |p| p.lambda.len());
    (0..n)
        .map(|j| pieces.iter().map(|p| p.lambda[j]).fold(0.0, f64::max))
        .collect()
}

/// Planes `A x + B ± λ` enclosing `f` on a simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCasePlanes {
    pub a: Matrix,
    pub b_plus: Vec<f64>,
    pub b_minus: Vec<f64>,
}

impl WorstCasePlanes {
    /// `(lower, upper)` plane values at `x`.
    pub fn envelope(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ax = self.a.mul_vec(x).expect("plane dimension");
        let lower = ax.iter().zip(&self.b_minus).map(|(p, b)| p + b).collect();
        let upper = ax.iter().zip(&self.b_plus).map(|(p, b)| p + b).collect();
        (lower, upper)
    }
}

/// Shifts the interpolant by `±lambda`; both planes keep the interpolant's slope.
pub fn worst_case_planes(piece: &AffinePiece, lambda: &[f64]) -> WorstCasePlanes {
    assert!(lambda.iter().all(|&l| l >= 0.0), "lambda must be nonnegative");
    WorstCasePlanes {
        a: piece.a.clone(),
        b_plus: piece.b.iter().zip(lambda).map(|(b, l)| b + l).collect(),
        b_minus: piece.b.iter().zip(lambda).map(|(b, l)| b - l).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem1Failure {
    NotNegativeDefinite,
    EquilibriumOnFrontier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem1Verdict {
    Certified,
    NotCertified {
        simplex: usize,
        reason: Theorem1Failure,
    },
}

/// Lower bound on the distance from `x` to the boundary of the simplex.
///
/// Inside: `min_m β_m h_m`, with `h_m` the height over the facet opposite
/// vertex `m`. Outside: the largest distance to a facet hyperplane that
/// separates `x` from the simplex.
pub fn frontier_distance(vertices: &[Vec<f64>], x: &[f64]) -> Option<f64> {
    let n = x.len();
    let m = Matrix::from_fn(n + 1, n + 1, |r, c| {
        if r < n {
            vertices[c][r]
        } else {
            1.0
        }
    });
    let lu = Lu::factor(&m).ok()?;
    let mut rhs = x.to_vec();
    rhs.push(1.0);
    let beta = lu.solve(&rhs).ok()?;
    // Height h_m = 1 / |∇β_m|, where ∇β_m is row m of the inverse minus its last entry.
    let mut heights = Vec::with_capacity(n + 1);
    let mut inv_rows = vec![vec![0.0; n + 1]; n + 1];
    for c in 0..=n {
        let mut e = vec![0.0; n + 1];
        e[c] = 1.0;
        let col = lu.solve(&e).ok()?;
        for r in 0..=n {
            inv_rows[r][c] = col[r];
        }
    }
    for row in &inv_rows {
        let g: f64 = row[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        heights.push(1.0 / g);
    }
    if beta.iter().all(|&b| b >= 0.0) {
        Some(
            beta.iter()
                .zip(&heights)
                .map(|(b, h)| b * h)
                .fold(f64::INFINITY, f64::min),
        )
    } else {
        Some(
            beta.iter()
                .zip(&heights)
                .filter(|(b, _)| **b < 0.0)
                .map(|(b, h)| -b * h)
                .fold(0.0, f64::max),
        )
    }
}

/// Checks every piece: `A` negative definite and the piece equilibrium
/// `-A⁻¹B` away from the simplex frontier. Reports the first failure.
pub fn check_theorem1(part: &SimplicialPartition, pieces: &[AffinePiece]) -> Theorem1Verdict {
    for p in pieces {
        let fail = |reason| Theorem1Verdict::NotCertified {
            simplex: p.simplex,
            reason,
        };
        if !is_negative_definite(&p.a).unwrap_or(false) {
            return fail(Theorem1Failure::NotNegativeDefinite);
        }
        let Ok(lu) = Lu::factor(&p.a) else {
            return fail(Theorem1Failure::NotNegativeDefinite);
        };
        let neg_b: Vec<f64> = p.b.iter().map(|v| -v).collect();
        let eq = lu.solve(&neg_b).expect("factored");
        match frontier_distance(&part.vertices(p.simplex), &eq) {
            Some(d) if d > FRONTIER_TOL => {}
            _ => return fail(Theorem1Failure::EquilibriumOnFrontier),
        }
    }
    Theorem1Verdict::Certified
}

/// CSV dump: simplex id, vertex coordinates, row-major `A`, `B`, `lambda`.
pub fn pieces_csv(part: &SimplicialPartition, pieces: &[AffinePiece]) -> String {
    let n = part.dim();
    let mut header = vec!["simplex".to_string()];
    for m in 0..=n {
        for k in 1..=n {
            header.push(format!("v{m}_x{k}"));
        }
    }
    for j in 1..=n {
        for k in 1..=n {
            header.push(format!("a{j}{k}"));
        }
    }
    header.extend((1..=n).map(|j| format!("b{j}")));
    header.extend((1..=n).map(|j| format!("lambda{j}")));
    let mut out = header.join(",");
    out.push('\n');
    for p in pieces {
        let mut row = vec![p.simplex.to_string()];
        row.extend(part.vertices(p.simplex).iter().flatten().map(f64::to_string));
        row.extend(p.a.as_slice().iter().map(f64::to_string));
        row.extend(p.b.iter().map(f64::to_string));
        row.extend(p.lambda.iter().map(f64::to_string));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpwl::build_partition;
    use crate::system::parse_system;

    #[test]
    fn linear_field_is_reproduced() {
        let vf = parse_system("dim = 2\nf1 = -x1\nf2 = -x2").unwrap();
        // The origin sits strictly inside one simplex of this grid.
        let part = build_partition(&[(-1.0, 1.0), (-0.8, 1.2)], &[3, 3]).unwrap();
        let pieces = fit_pieces(&vf, &part).unwrap();
        for p in &pieces {
            assert!(p.a.max_abs_diff(&Matrix::identity(2).scale(-1.0)).unwrap() < 1e-10);
            assert!(p.b.iter().all(|v| v.abs() < 1e-10));
            assert!(p.lambda.iter().all(|&l| l <= 1e-10));
        }
        assert_eq!(check_theorem1(&part, &pieces), Theorem1Verdict::Certified);
    }

    #[test]
    fn square_on_unit_interval() {
        let vf = parse_system("dim = 1\nf1 = x1^2").unwrap();
        let part = build_partition(&[(0.0, 1.0)], &[1]).unwrap();
        let p = &fit_pieces(&vf, &part).unwrap()[0];
        assert!((p.a.get(0, 0) - 1.0).abs() < 1e-14);
        assert!(p.b[0].abs() < 1e-14);
        assert!(p.lambda[0] >= 0.25);
        let planes = worst_case_planes(p, &[0.25]);
        assert!((planes.b_plus[0] - 0.25).abs() < 1e-14);
        assert!((planes.b_minus[0] + 0.25).abs() < 1e-14);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let (lo, hi) = planes.envelope(&[x]);
            assert!(lo[0] <= x * x + 1e-12 && x * x <= hi[0] + 1e-12);
        }
    }

    #[test]
    fn zero_lambda_planes_equal_interpolant() {
        let vf = parse_system("dim = 1\nf1 = x1^2").unwrap();
        let part = build_partition(&[(0.0, 1.0)], &[2]).unwrap();
        let p = &fit_pieces(&vf, &part).unwrap()[1];
        let planes = worst_case_planes(p, &[0.0]);
        assert_eq!(planes.b_plus, p.b);
        assert_eq!(planes.b_minus, p.b);
        assert_eq!(planes.a, p.a);
    }

    #[test]
    fn skew_piece_is_rejected() {
        let vf = parse_system("dim = 2\nf1 = x2\nf2 = -x1").unwrap();
        let part = build_partition(&[(-1.0, 1.0), (-1.0, 1.0)], &[2, 2]).unwrap();
        let pieces = fit_pieces(&vf, &part).unwrap();
        assert_eq!(
            check_theorem1(&part, &pieces),
            Theorem1Verdict::NotCertified {
                simplex: 0,
                reason: Theorem1Failure::NotNegativeDefinite
            }
        );
    }

    #[test]
    fn equilibrium_on_vertex_is_rejected() {
        // The origin is a grid vertex, so the pieces around it have their
        // equilibrium on the frontier.
        let vf = parse_system("dim = 2\nf1 = -x1\nf2 = -x2").unwrap();
        let part = build_partition(&[(-1.0, 1.0), (-1.0, 1.0)], &[2, 2]).unwrap();
        let pieces = fit_pieces(&vf, &part).unwrap();
        assert!(matches!(
            check_theorem1(&part, &pieces),
            Theorem1Verdict::NotCertified {
                reason: Theorem1Failure::EquilibriumOnFrontier,
                ..
            }
        ));
    }

    #[test]
    fn frontier_distance_inside_and_outside() {
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let d = frontier_distance(&tri, &[0.75, 0.25]).unwrap();
        assert!((d - 0.25).abs() < 1e-12);
        let d = frontier_distance(&tri, &[2.0, 0.5]).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert!(frontier_distance(&tri, &[1.0, 0.5]).unwrap() < 1e-12);
    }

    #[test]
    fn csv_header() {
        let vf = parse_system("dim = 1\nf1 = -x1").unwrap();
        let part = build_partition(&[(0.0, 1.0)], &[1]).unwrap();
        let csv = pieces_csv(&part, &fit_pieces(&vf, &part).unwrap());
        assert_eq!(csv.lines().next().unwrap(), "simplex,v0_x1,v1_x1,a11,b1,lambda1");
        assert_eq!(csv.lines().count(), 2);
    }
}
