use super::CpwlError;

/// Kuhn triangulation of a box.
///
/// Each grid cell is split into `n!` simplices, one per permutation `π` of the
/// axes. The simplex for `π` walks from the cell's lower corner along
/// `π(0)`, then `π(1)`, ..., so consecutive vertices differ by exactly one grid
/// step on one axis. It contains the points whose local cell coordinates
/// satisfy `u[π(0)] ≥ u[π(1)] ≥ ... ≥ u[π(n-1)]`.
///
/// Simplex ids are `cell * n! + perm`, where `cell` is the row-major cell
/// index (axis 0 most significant) and `perm` the rank of `π` in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialPartition {
    bounds: Vec<(f64, f64)>,
    divisions: Vec<usize>,
    delta: Vec<f64>,
    perms: Vec<Vec<usize>>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Builds the Kuhn triangulation of `bounds` with `divisions[i]` cells on axis `i`.
pub fn build_partition(
    bounds: &[(f64, f64)],
    divisions: &[usize],
) -> Result<SimplicialPartition, CpwlError> {
    SimplicialPartition::new(bounds, divisions)
}

impl SimplicialPartition {
    pub fn new(bounds: &[(f64, f64)], divisions: &[usize]) -> Result<Self, CpwlError> {
        if bounds.is_empty() || bounds.len() != divisions.len() {
            return Err(CpwlError::InvalidInput(format!(
                "box has {} axes but {} division counts were given",
                bounds.len(),
                divisions.len()
            )));
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CpwlError::InvalidInput(format!(
                    "degenerate interval [{lo}, {hi}] on axis {}",
                    axis + 1
                )));
            }
        }
        if divisions.iter().any(|&d| d == 0) {
            return Err(CpwlError::InvalidInput("divisions must be at least 1".into()));
        }
        let delta = bounds
            .iter()
            .zip(divisions)
            .map(|(&(lo, hi), &d)| (hi - lo) / d as f64)
            .collect();
        Ok(Self {
            bounds: bounds.to_vec(),
            divisions: divisions.to_vec(),
            delta,
            perms: permutations(bounds.len()),
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn divisions(&self) -> &[usize] {
        &self.divisions
    }

    /// Grid size per axis.
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn cell_count(&self) -> usize {
        self.divisions.iter().product()
    }

    pub fn simplices_per_cell(&self) -> usize {
        self.perms.len()
    }

    pub fn simplex_count(&self) -> usize {
        self.cell_count() * self.perms.len()
    }

    /// Axis walk order of a simplex.
    pub fn permutation(&self, id: usize) -> &[usize] {
        &self.perms[id % self.perms.len()]
    }

    fn cell_coords(&self, cell: usize) -> Vec<usize> {
        let mut coords = vec![0; self.dim()];
        let mut rest = cell;
        for axis in (0..self.dim()).rev() {
            coords[axis] = rest % self.divisions[axis];
            rest /= self.divisions[axis];
        }
        coords
    }

    fn cell_index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.divisions)
            .fold(0, |acc, (&c, &d)| acc * d + c)
    }

    fn grid_point(&self, axis: usize, k: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        if k == self.divisions[axis] {
            hi
        } else {
            lo + k as f64 * self.delta[axis]
        }
    }

    /// The `n + 1` vertices of simplex `id`, in walk order.
    pub fn vertices(&self, id: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut idx = self.cell_coords(id / self.perms.len());
        let perm = self.permutation(id);
        let point = |idx: &[usize]| -> Vec<f64> {
            (0..n).map(|axis| self.grid_point(axis, idx[axis])).collect()
        };
        let mut out = Vec::with_capacity(n + 1);
        out.push(point(&idx));
        for &axis in perm {
            idx[axis] += 1;
            out.push(point(&idx));
        }
        out
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.bounds).all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    /// Simplex containing `x`, or `None` outside the box.
    ///
    /// On shared faces the smallest id wins: grid lines belong to the lower
    /// cell and equal local coordinates are ordered by ascending axis.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let n = self.dim();
        let mut coords = vec![0usize; n];
        let mut local = vec![0.0; n];
        for axis in 0..n {
            let (lo, _) = self.bounds[axis];
            let s = (x[axis] - lo) / self.delta[axis];
            let last = self.divisions[axis] - 1;
            let mut c = (s.floor().max(0.0) as usize).min(last);
            let mut u = s - c as f64;
            if u == 0.0 && c > 0 {
                c -= 1;
                u = 1.0;
            }
            coords[axis] = c;
            local[axis] = u.clamp(0.0, 1.0);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| local[b].total_cmp(&local[a]).then(a.cmp(&b)));
        let perm = self
            .perms
            .binary_search(&order)
            .expect("every ordering is a permutation");
        Some(self.cell_index(&coords) * self.perms.len() + perm)
    }

    /// Centroid of simplex `id`.
    pub fn barycenter(&self, id: usize) -> Vec<f64> {
        let v = self.vertices(id);
        let k = v.len() as f64;
        (0..self.dim())
            .map(|axis| v.iter().map(|p| p[axis]).sum::<f64>() / k)
            .collect()
    }

    /// Smallest grid size.
    pub fn delta_min(&self) -> f64 {
        self.delta.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Points with barycentric coordinates `k / denom` (all `k ≥ 0` summing to
/// `denom`) inside a simplex with the given vertices.
pub fn barycentric_lattice(vertices: &[Vec<f64>], denom: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, weights: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == 1 {
            weights.push(left);
            out.push(weights.clone());
            weights.pop();
            return;
        }
        for k in 0..=left {
            weights.push(k);
            rec(m - 1, left - k, weights, out);
            weights.pop();
        }
    }
    let mut all = Vec::new();
    rec(vertices.len(), denom, &mut Vec::new(), &mut all);
    let n = vertices.first().map_or(0, Vec::len);
    all.into_iter()
        .map(|w| {
            (0..n)
                .map(|axis| {
                    w.iter()
                        .zip(vertices)
                        .map(|(&k, v)| k as f64 * v[axis])
                        .sum::<f64>()
                        / denom as f64
                })
                .collect()
        })
        .collect()
}
