//! Grid scans of a certificate over a box, planar boundary extraction and
//! the `λ̃* = λ̄*/2` tuning heuristic.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::certificates::{
    omega_membership, systematic_test, BoundMatrix, CertError, CertMode, CertificateParams,
    PointVerdict,
};
use crate::matrix::Matrix;
use crate::system::VectorField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Cert(#[from] CertError),
}

/// Which membership test a scan applies at every point.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// `Ω` for a fixed `F` (user supplied or `J(0)`).
    Params(CertificateParams),
    /// `λ_R(x) < 1` with `F = J(x)`.
    Systematic,
}

impl Certificate {
    pub fn verdict(&self, vf: &VectorField, x: &[f64]) -> PointVerdict {
        match self {
            Certificate::Params(p) => omega_membership(vf, p, x),
            Certificate::Systematic => systematic_test(vf, x),
        }
    }

    pub fn mode(&self) -> CertMode {
        match self {
            Certificate::Params(p) => p.mode,
            Certificate::Systematic => CertMode::JacobianPointwise,
        }
    }
}

pub type Polyline = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionEstimate {
    pub bounds: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
    /// Row-major over cell indices, axis 0 slowest.
    pub verdicts: Vec<PointVerdict>,
    pub certified_fraction: f64,
    /// Marching-squares contour between certified and uncertified cells;
    /// empty unless the box is planar.
    pub boundary: Vec<Polyline>,
}

fn validate_grid(bounds: &[(f64, f64)], resolution: &[usize]) -> Result<(), RegionError> {
    if bounds.is_empty() || bounds.len() != resolution.len() {
        return Err(RegionError::InvalidInput(format!(
            "box has {} axes but resolution has {}",
            bounds.len(),
            resolution.len()
        )));
    }
    if resolution.iter().any(|&r| r < 2) {
        return Err(RegionError::InvalidInput("resolution must be at least 2 per axis".into()));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(RegionError::InvalidInput(format!("degenerate interval [{lo}, {hi}]")));
        }
    }
    Ok(())
}

fn center(bounds: &[(f64, f64)], resolution: &[usize], axis: usize, k: usize) -> f64 {
    let (lo, hi) = bounds[axis];
    lo + (k as f64 + 0.5) * (hi - lo) / resolution[axis] as f64
}

/// Cell centers in scan order.
pub fn grid_points(bounds: &[(f64, f64)], resolution: &[usize]) -> Vec<Vec<f64>> {
    let total: usize = resolution.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; resolution.len()];
            for axis in (0..resolution.len()).rev() {
                x[axis] = center(bounds, resolution, axis, idx % resolution[axis]);
                idx /= resolution[axis];
            }
            x
        })
        .collect()
}

/// Evaluates `certificate` at every cell center of `bounds`.
pub fn scan_region(
    vf: &VectorField,
    certificate: &Certificate,
    bounds: &[(f64, f64)],
    resolution: &[usize],
) -> Result<RegionEstimate, RegionError> {
    validate_grid(bounds, resolution)?;
    if bounds.len() != vf.dim() {
        return Err(RegionError::InvalidInput(format!(
            "box has {} axes but the system has dimension {}",
            bounds.len(),
            vf.dim()
        )));
    }
    let verdicts: Vec<PointVerdict> = grid_points(bounds, resolution)
        .par_iter()
        .map(|x| certificate.verdict(vf, x))
        .collect();
    let certified = verdicts.iter().filter(|v| v.in_omega).count();
    let mut est = RegionEstimate {
        bounds: bounds.to_vec(),
        resolution: resolution.to_vec(),
        certified_fraction: certified as f64 / verdicts.len() as f64,
        verdicts,
        boundary: Vec::new(),
    };
    if est.dim() == 2 {
        est.boundary = extract_boundary_2d(&est)?;
    }
    Ok(est)
}

impl RegionEstimate {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn certified_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.in_omega).count()
    }

    pub fn certified_points(&self) -> Vec<Vec<f64>> {
        self.verdicts
            .iter()
            .filter(|v| v.in_omega)
            .map(|v| v.x.clone())
            .collect()
    }

    /// Verdict of the cell with the given per-axis indices.
    pub fn at(&self, idx: &[usize]) -> &PointVerdict {
        let flat = idx
            .iter()
            .zip(&self.resolution)
            .fold(0, |acc, (&i, &r)| acc * r + i);
        &self.verdicts[flat]
    }

    /// Width of a cell along each axis.
    pub fn cell_size(&self) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(&self.resolution)
            .map(|(&(lo, hi), &r)| (hi - lo) / r as f64)
            .collect()
    }

    /// `x1,…,xn,in_omega,lambda_R,hurwitz_ok,reason`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 1..=self.dim() {
            let _ = write!(out, "x{i},");
        }
        out.push_str("in_omega,lambda_R,hurwitz_ok,reason\n");
        for v in &self.verdicts {
            for c in &v.x {
                let _ = write!(out, "{c},");
            }
            let lr = if v.lambda_r.is_nan() {
                "nan".to_string()
            } else {
                v.lambda_r.to_string()
            };
            let _ = writeln!(
                out,
                "{},{lr},{},{}",
                v.in_omega, v.hurwitz_ok, v.failed_condition
            );
        }
        out
    }

    /// `polyline,x1,x2`, one vertex per row.
    pub fn boundary_csv(&self) -> String {
        boundary_csv(&self.boundary)
    }

    /// Certified cells as rectangles and the boundary as a path, in a unit
    /// viewBox with `x2` pointing up. Planar boxes only.
    pub fn to_svg(&self) -> Result<String, RegionError> {
        if self.dim() != 2 {
            return Err(RegionError::Unsupported("SVG output needs a planar box".into()));
        }
        let (nx, ny) = (self.resolution[0], self.resolution[1]);
        let (wx, wy) = (1.0 / nx as f64, 1.0 / ny as f64);
        let mut out = String::from(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1 1\" width=\"600\" height=\"600\">\n",
        );
        out.push_str("<rect x=\"0\" y=\"0\" width=\"1\" height=\"1\" fill=\"white\" stroke=\"black\" stroke-width=\"0.002\"/>\n");
        for i in 0..nx {
            for j in 0..ny {
                if self.at(&[i, j]).in_omega {
                    let _ = writeln!(
                        out,
                        "<rect x=\"{:.6}\" y=\"{:.6}\" width=\"{wx:.6}\" height=\"{wy:.6}\" fill=\"#9ecae1\"/>",
                        i as f64 * wx,
                        1.0 - (j + 1) as f64 * wy
                    );
                }
            }
        }
        let (x0, x1) = self.bounds[0];
        let (y0, y1) = self.bounds[1];
        for line in &self.boundary {
            let mut d = String::new();
            for (k, p) in line.iter().enumerate() {
                let u = (p[0] - x0) / (x1 - x0);
                let v = 1.0 - (p[1] - y0) / (y1 - y0);
                let _ = write!(d, "{}{u:.6} {v:.6} ", if k == 0 { "M" } else { "L" });
            }
            let _ = writeln!(
                out,
                "<path d=\"{}\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"0.004\"/>",
                d.trim_end()
            );
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

pub fn boundary_csv(lines: &[Polyline]) -> String {
    let mut out = String::from("polyline,x1,x2\n");
    for (k, line) in lines.iter().enumerate() {
        for p in line {
            let _ = writeln!(out, "{k},{},{}", p[0], p[1]);
        }
    }
    out
}

/// A grid edge between two adjacent sample points: horizontal edges join
/// `(i, j)` and `(i + 1, j)`, vertical ones `(i, j)` and `(i, j + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeKey {
    H(i64, i64),
    V(i64, i64),
}

/// Contour of a boolean grid sampled at `xs[i], ys[j]`.
///
/// Crossings sit at edge midpoints. Saddle squares keep their two inside
/// corners apart. Open polylines come first, then closed ones (with the
/// first vertex repeated at the end), each in a deterministic order.
pub fn marching_squares(inside: impl Fn(i64, i64) -> bool, xs: &[f64], ys: &[f64], offset: i64) -> Vec<Polyline> {
    let (nx, ny) = (xs.len() as i64, ys.len() as i64);
    let pos = |key: EdgeKey| -> [f64; 2] {
        let (i, j) = match key {
            EdgeKey::H(i, j) | EdgeKey::V(i, j) => ((i - offset) as usize, (j - offset) as usize),
        };
        match key {
            EdgeKey::H(..) => [(xs[i] + xs[i + 1]) / 2.0, ys[j]],
            EdgeKey::V(..) => [xs[i], (ys[j] + ys[j + 1]) / 2.0],
        }
    };
    let mut adj: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
    let mut link = |a: EdgeKey, b: EdgeKey| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    for i in offset..offset + nx - 1 {
        for j in offset..offset + ny - 1 {
            let bl = inside(i, j);
            let br = inside(i + 1, j);
            let tr = inside(i + 1, j + 1);
            let tl = inside(i, j + 1);
            let bottom = EdgeKey::H(i, j);
            let top = EdgeKey::H(i, j + 1);
            let left = EdgeKey::V(i, j);
            let right = EdgeKey::V(i + 1, j);
            let mut cut = Vec::with_capacity(4);
            if bl != br {
                cut.push(bottom);
            }
            if br != tr {
                cut.push(right);
            }
            if tr != tl {
                cut.push(top);
            }
            if tl != bl {
                cut.push(left);
            }
            match cut.len() {
                2 => link(cut[0], cut[1]),
                4 if bl => {
                    link(left, bottom);
                    link(right, top);
                }
                4 => {
                    link(bottom, right);
                    link(top, left);
                }
                _ => {}
            }
        }
    }

    let mut lines = Vec::new();
    let mut used: BTreeMap<EdgeKey, bool> = adj.keys().map(|&k| (k, false)).collect();
    let walk = |start: EdgeKey, used: &mut BTreeMap<EdgeKey, bool>| -> Polyline {
        let mut line = vec![pos(start)];
        used.insert(start, true);
        let mut cur = start;
        loop {
            let next = adj[&cur].iter().copied().find(|k| !used[k]);
            match next {
                Some(k) => {
                    used.insert(k, true);
                    line.push(pos(k));
                    cur = k;
                }
                None => {
                    if adj[&cur].contains(&start) && line.len() > 2 {
                        line.push(pos(start));
                    }
                    return line;
                }
            }
        }
    };
    let ends: Vec<EdgeKey> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(&k, _)| k).collect();
    for k in ends {
        if !used[&k] {
            lines.push(walk(k, &mut used));
        }
    }
    let keys: Vec<EdgeKey> = adj.keys().copied().collect();
    for k in keys {
        if !used[&k] {
            lines.push(walk(k, &mut used));
        }
    }
    lines
}

/// Boundary between certified and uncertified cell centers of a planar scan.
pub fn extract_boundary_2d(est: &RegionEstimate) -> Result<Vec<Polyline>, RegionError> {
    if est.dim() != 2 {
        return Err(RegionError::Unsupported(
            "boundary extraction needs a planar box".into(),
        ));
    }
    let (nx, ny) = (est.resolution[0], est.resolution[1]);
    let xs: Vec<f64> = (0..nx).map(|i| center(&est.bounds, &est.resolution, 0, i)).collect();
    let ys: Vec<f64> = (0..ny).map(|j| center(&est.bounds, &est.resolution, 1, j)).collect();
    Ok(marching_squares(
        |i, j| est.at(&[i as usize, j as usize]).in_omega,
        &xs,
        &ys,
        0,
    ))
}

/// Like [`extract_boundary_2d`] but with a ring of uncertified cells around
/// the box, so every polyline is closed.
pub fn closed_boundary_2d(est: &RegionEstimate) -> Result<Vec<Polyline>, RegionError> {
    if est.dim() != 2 {
        return Err(RegionError::Unsupported(
            "boundary extraction needs a planar box".into(),
        ));
    }
    let (nx, ny) = (est.resolution[0] as i64, est.resolution[1] as i64);
    let xs: Vec<f64> = (-1..=nx)
        .map(|i| center(&est.bounds, &est.resolution, 0, 0) + i as f64 * est.cell_size()[0])
        .collect();
    let ys: Vec<f64> = (-1..=ny)
        .map(|j| center(&est.bounds, &est.resolution, 1, 0) + j as f64 * est.cell_size()[1])
        .collect();
    Ok(marching_squares(
        |i, j| {
            (0..nx).contains(&i)
                && (0..ny).contains(&j)
                && est.at(&[i as usize, j as usize]).in_omega
        },
        &xs,
        &ys,
        -1,
    ))
}

/// Even-odd containment of `p` in the closed polylines.
pub fn point_in_polylines(p: [f64; 2], lines: &[Polyline]) -> bool {
    let mut inside = false;
    for line in lines {
        for w in line.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Candidate scales `s = 2^-6, …, 2^3` for [`tune_parameters`].
pub fn tune_scales() -> Vec<f64> {
    (-6..=3).map(|e| 2f64.powi(e)).collect()
}

/// Per-axis resolution of the coarse scan used while tuning.
pub fn tune_resolution(dim: usize) -> usize {
    if dim <= 2 {
        41
    } else {
        ((40_000f64).powf(1.0 / dim as f64).floor() as usize).max(3)
    }
}

/// Picks `λ̄* = s·I`, `λ̃* = s/2·I` (off-diagonal entries unbounded) with
/// `λ_R < 1` and the largest certified fraction on a coarse scan of `bounds`.
/// Ties go to the larger `s`.
pub fn tune_parameters(
    vf: &VectorField,
    f: &Matrix,
    bounds: &[(f64, f64)],
) -> Result<CertificateParams, RegionError> {
    let n = vf.dim();
    let res = vec![tune_resolution(n); n];
    validate_grid(bounds, &res)?;
    let mut best: Option<(f64, CertificateParams)> = None;
    for s in tune_scales() {
        let params = CertificateParams::new(
            f.clone(),
            BoundMatrix::diagonal(&vec![s; n]),
            BoundMatrix::diagonal(&vec![s / 2.0; n]),
            CertMode::FixedF,
        )?;
        if !params.globally_certified() {
            continue;
        }
        let est = scan_region(vf, &Certificate::Params(params.clone()), bounds, &res)?;
        if best.as_ref().map_or(true, |(frac, _)| est.certified_fraction >= *frac) {
            best = Some((est.certified_fraction, params));
        }
    }
    best.map(|(_, p)| p).ok_or_else(|| {
        RegionError::Cert(CertError::NotApplicable(
            "no scale s gives lambda_R < 1".into(),
        ))
    })
}

fn square_certified(vf: &VectorField, cert: &Certificate, h: f64, samples: usize) -> bool {
    let n = vf.dim();
    let total = samples.pow(n as u32);
    (0..total).into_par_iter().all(|mut idx| {
        let mut x = vec![0.0; n];
        for c in x.iter_mut().rev() {
            let k = idx % samples;
            idx /= samples;
            *c = -h + 2.0 * h * k as f64 / (samples - 1) as f64;
        }
        cert.verdict(vf, &x).in_omega
    })
}

/// Largest `h ≤ h_max` (to bisection accuracy `1e-6`) such that a
/// `samples`-per-axis grid over `[-h, h]^n`, edges included, is certified.
pub fn certified_half_width(vf: &VectorField, cert: &Certificate, h_max: f64, samples: usize) -> f64 {
    let samples = samples.max(2);
    if !cert.verdict(vf, &vec![0.0; vf.dim()]).in_omega {
        return 0.0;
    }
    if square_certified(vf, cert, h_max, samples) {
        return h_max;
    }
    let (mut lo, mut hi) = (0.0, h_max);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if square_certified(vf, cert, mid, samples) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
