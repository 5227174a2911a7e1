use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use doa_cert::certificates::BoundMatrix;
use doa_cert::Matrix;

/// `"lo1:hi1,lo2:hi2"`.
pub fn parse_box(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| anyhow!("box interval '{part}' is not of the form lo:hi"))?;
            let lo: f64 = lo.trim().parse().with_context(|| format!("bad bound '{lo}'"))?;
            let hi: f64 = hi.trim().parse().with_context(|| format!("bad bound '{hi}'"))?;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                bail!("box interval [{lo}, {hi}] is empty or not finite");
            }
            Ok((lo, hi))
        })
        .collect()
}

/// `"N"` (all axes) or `"N1,N2,…"`.
pub fn parse_counts(s: &str, dim: usize, min: usize, what: &str) -> Result<Vec<usize>> {
    let counts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse().with_context(|| format!("bad {what} '{p}'")))
        .collect::<Result<_>>()?;
    let counts = if counts.len() == 1 {
        vec![counts[0]; dim]
    } else {
        counts
    };
    if counts.len() != dim {
        bail!("{what} has {} entries but the system has dimension {dim}", counts.len());
    }
    if let Some(c) = counts.iter().find(|&&c| c < min) {
        bail!("{what} must be at least {min} per axis, got {c}");
    }
    Ok(counts)
}

/// `"name=value"`.
pub fn parse_override(s: &str) -> Result<(String, f64)> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("parameter override '{s}' is not of the form name=value"))?;
    let value: f64 = value.trim().parse().with_context(|| format!("bad value in '{s}'"))?;
    Ok((name.trim().to_string(), value))
}

/// Comma-separated rows; blank lines and `#` comments are skipped. `inf`
/// parses as `f64::INFINITY`.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| {
                    let v = v.trim();
                    v.parse::<f64>().with_context(|| format!("bad matrix entry '{v}'"))
                })
                .collect()
        })
        .collect()
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn read_matrix(path: &Path, dim: usize) -> Result<Matrix> {
    let rows = parse_rows(&read(path)?)?;
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        bail!("{} must hold a {dim}x{dim} matrix", path.display());
    }
    Matrix::from_rows(&rows).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// `2n` rows: `λ̄*` first, then `λ̃*`.
pub fn read_lambdas(path: &Path, dim: usize) -> Result<(BoundMatrix, BoundMatrix)> {
    let rows = parse_rows(&read(path)?)?;
    if rows.len() != 2 * dim || rows.iter().any(|r| r.len() != dim) {
        bail!(
            "{} must hold {} rows of {dim} entries (lambda_bar then lambda_tilde)",
            path.display(),
            2 * dim
        );
    }
    let bar = BoundMatrix::from_rows(&rows[..dim]).map_err(|e| anyhow!("{e}"))?;
    let tilde = BoundMatrix::from_rows(&rows[dim..]).map_err(|e| anyhow!("{e}"))?;
    Ok((bar, tilde))
}

/// Points and membership flags from a region CSV.
pub struct RegionFile {
    pub points: Vec<Vec<f64>>,
    pub in_omega: Vec<bool>,
}

impl RegionFile {
    pub fn bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        let first = self.points.first()?;
        let mut b: Vec<(f64, f64)> = first.iter().map(|&v| (v, v)).collect();
        for p in &self.points {
            for (axis, &v) in p.iter().enumerate() {
                b[axis].0 = b[axis].0.min(v);
                b[axis].1 = b[axis].1.max(v);
            }
        }
        for (lo, hi) in &mut b {
            if lo == hi {
                *lo -= 1.0;
                *hi += 1.0;
            }
        }
        Some(b)
    }
}

pub fn parse_region_csv(text: &str) -> Result<RegionFile> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("region file is empty"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let dim = cols
        .iter()
        .position(|&c| c == "in_omega")
        .ok_or_else(|| anyhow!("region file header lacks an in_omega column"))?;
    if dim == 0 || cols[..dim].iter().enumerate().any(|(i, c)| *c != format!("x{}", i + 1)) {
        bail!("region file header must start with x1,…,xn");
    }
    let mut points = Vec::new();
    let mut in_omega = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < dim + 1 {
            bail!("region file line {} has too few fields", k + 2);
        }
        let x = fields[..dim]
            .iter()
            .map(|v| v.trim().parse::<f64>().with_context(|| format!("line {}: bad coordinate '{v}'", k + 2)))
            .collect::<Result<Vec<f64>>>()?;
        let flag = match fields[dim].trim() {
            "true" | "1" => true,
            "false" | "0" => false,
            other => bail!("line {}: bad in_omega value '{other}'", k + 2),
        };
        points.push(x);
        in_omega.push(flag);
    }
    Ok(RegionFile { points, in_omega })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxes() {
        assert_eq!(parse_box("-1:1, 0:2.5").unwrap(), vec![(-1.0, 1.0), (0.0, 2.5)]);
        assert!(parse_box("1:1").is_err());
        assert!(parse_box("0-1").is_err());
    }

    #[test]
    fn counts_broadcast() {
        assert_eq!(parse_counts("8", 2, 2, "res").unwrap(), vec![8, 8]);
        assert_eq!(parse_counts("3,4", 2, 2, "res").unwrap(), vec![3, 4]);
        assert!(parse_counts("1", 2, 2, "res").is_err());
        assert!(parse_counts("3,4,5", 2, 2, "res").is_err());
    }

    #[test]
    fn rows_with_inf_and_comments() {
        let rows = parse_rows("# lambda\n1, inf\n\n0.5,2 # tail\n").unwrap();
        assert_eq!(rows, vec![vec![1.0, f64::INFINITY], vec![0.5, 2.0]]);
    }

    #[test]
    fn region_csv() {
        let r = parse_region_csv("x1,x2,in_omega,lambda_R,hurwitz_ok,reason\n0.1,0.2,true,0.3,true,none\n1,1,false,nan,false,hurwitz\n").unwrap();
        assert_eq!(r.points, vec![vec![0.1, 0.2], vec![1.0, 1.0]]);
        assert_eq!(r.in_omega, vec![true, false]);
        assert!(parse_region_csv("a,b\n").is_err());
    }

    #[test]
    fn overrides() {
        assert_eq!(parse_override("mu=-0.5").unwrap(), ("mu".to_string(), -0.5));
        assert!(parse_override("mu").is_err());
    }
}
