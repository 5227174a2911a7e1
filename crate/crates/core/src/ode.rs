//! Reference integrators and the attraction oracle.
//!
//! The oracle is deliberately independent of the certificates: it only
//! evaluates `f` and integrates forward in time.

use std::fmt;

use rayon::prelude::*;

use crate::system::VectorField;

/// Radius of the convergence ball around the origin.
pub const CONVERGENCE_RADIUS: f64 = 1e-4;
/// Time a trajectory must stay inside the convergence ball.
pub const CONVERGENCE_DWELL: f64 = 1.0;
/// The escape box is the analysis box scaled by this factor about its center.
pub const ESCAPE_FACTOR: f64 = 10.0;
/// Smallest step the adaptive integrator accepts.
pub const MIN_ADAPTIVE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepper {
    /// Classical fourth-order Runge–Kutta with a fixed step.
    Rk4 { h: f64 },
    /// Runge–Kutta–Fehlberg 4(5); the 5th-order solution is propagated.
    Rkf45 { rtol: f64, atol: f64, h0: f64 },
}

impl Stepper {
    /// Fixed step `1e-3 * max(1, diameter)`.
    pub fn rk4_for_box(bounds: &[(f64, f64)]) -> Self {
        Stepper::Rk4 {
            h: 1e-3 * box_diameter(bounds).max(1.0),
        }
    }

    pub fn rkf45_default() -> Self {
        Stepper::Rkf45 {
            rtol: 1e-8,
            atol: 1e-10,
            h0: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminalStatus {
    Converged,
    EscapedBox,
    HorizonReached,
    DomainError,
}

impl fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalStatus::Converged => "converged",
            TerminalStatus::EscapedBox => "escaped_box",
            TerminalStatus::HorizonReached => "horizon_reached",
            TerminalStatus::DomainError => "domain_error",
        })
    }
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub horizon: f64,
    pub stepper: Stepper,
    /// Trajectories leaving this box stop with [`TerminalStatus::EscapedBox`].
    pub escape_box: Option<Vec<(f64, f64)>>,
    /// Stop as soon as convergence is declared.
    pub stop_on_converge: bool,
    /// Keep every `record_every`-th step (the last state is always kept).
    pub record_every: usize,
}

impl IntegrateOptions {
    /// Oracle policy for an analysis box: RK4 sized to the box, escape box
    /// 10x the analysis box, stop on convergence.
    pub fn for_box(bounds: &[(f64, f64)], horizon: f64) -> Self {
        Self {
            horizon,
            stepper: Stepper::rk4_for_box(bounds),
            escape_box: Some(scaled_box(bounds, ESCAPE_FACTOR)),
            stop_on_converge: true,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub status: TerminalStatus,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// CSV with header `t,x1,...,xn`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&t.to_string());
            for v in x {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn box_diameter(bounds: &[(f64, f64)]) -> f64 {
    bounds.iter().map(|(lo, hi)| (hi - lo) * (hi - lo)).sum::<f64>().sqrt()
}

/// Box with the same center and every side scaled by `factor`.
pub fn scaled_box(bounds: &[(f64, f64)], factor: f64) -> Vec<(f64, f64)> {
    bounds
        .iter()
        .map(|&(lo, hi)| {
            let c = 0.5 * (lo + hi);
            let r = 0.5 * (hi - lo) * factor;
            (c - r, c + r)
        })
        .collect()
}

fn inside(x: &[f64], bounds: &[(f64, f64)]) -> bool {
    x.iter().zip(bounds).all(|(v, (lo, hi))| v >= lo && v <= hi)
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

/// One classical RK4 step. Returns `None` if `f` fails at any stage.
pub fn rk4_step<F>(f: &F, x: &[f64], h: f64) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + ?Sized,
{
    let k1 = f(x)?;
    let k2 = f(&axpy(x, 0.5 * h, &k1))?;
    let k3 = f(&axpy(x, 0.5 * h, &k2))?;
    let k4 = f(&axpy(x, h, &k3))?;
    Some(
        (0..x.len())
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect(),
    )
}

// Fehlberg tableau (the nodes are unused: fields are autonomous).
const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];

/// One RKF45 trial step: returns the 5th-order solution and the scaled error norm.
fn rkf45_trial<F>(f: &F, x: &[f64], h: f64, rtol: f64, atol: f64) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + ?Sized,
{
    let n = x.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(6);
    for s in 0..6 {
        let mut y = x.to_vec();
        for (j, kj) in k.iter().enumerate() {
            for i in 0..n {
                y[i] += h * A[s][j] * kj[i];
            }
        }
        k.push(f(&y)?);
    }
    let mut y5 = x.to_vec();
    let mut err: f64 = 0.0;
    for i in 0..n {
        let mut d4 = 0.0;
        let mut d5 = 0.0;
        for s in 0..6 {
            d4 += B4[s] * k[s][i];
            d5 += B5[s] * k[s][i];
        }
        y5[i] += h * d5;
        let y4 = x[i] + h * d4;
        let scale = atol + rtol * x[i].abs().max(y5[i].abs());
        err = err.max((y5[i] - y4).abs() / scale);
    }
    if y5.iter().all(|v| v.is_finite()) && err.is_finite() {
        Some((y5, err))
    } else {
        None
    }
}

/// Integrates `ẋ = f(x)` from `x0` up to `opts.horizon`.
pub fn integrate<F>(f: &F, x0: &[f64], opts: &IntegrateOptions) -> Trajectory
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + ?Sized,
{
    assert!(opts.horizon > 0.0, "horizon must be positive");
    let record_every = opts.record_every.max(1);
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut ball_since: Option<f64> = (norm(&x) <= CONVERGENCE_RADIUS).then_some(0.0);
    let mut converged = false;
    let mut h_adapt = match opts.stepper {
        Stepper::Rkf45 { h0, .. } => h0,
        Stepper::Rk4 { h } => h,
    };

    let finish = |times: &mut Vec<f64>, states: &mut Vec<Vec<f64>>, t: f64, x: &[f64], status| {
        if times.last() != Some(&t) {
            times.push(t);
            states.push(x.to_vec());
        }
        Trajectory {
            times: std::mem::take(times),
            states: std::mem::take(states),
            status,
        }
    };

    if !x.iter().all(|v| v.is_finite()) {
        return finish(&mut times, &mut states, t, &x, TerminalStatus::DomainError);
    }

    while t < opts.horizon {
        let remaining = opts.horizon - t;
        let (next, dt) = match opts.stepper {
            Stepper::Rk4 { h } => {
                let dt = h.min(remaining);
                match rk4_step(f, &x, dt) {
                    Some(y) if y.iter().all(|v| v.is_finite()) => (y, dt),
                    _ => return finish(&mut times, &mut states, t, &x, TerminalStatus::DomainError),
                }
            }
            Stepper::Rkf45 { rtol, atol, .. } => loop {
                let dt = h_adapt.min(remaining);
                if dt < MIN_ADAPTIVE_STEP && dt < remaining {
                    return finish(&mut times, &mut states, t, &x, TerminalStatus::DomainError);
                }
                match rkf45_trial(f, &x, dt, rtol, atol) {
                    Some((y, err)) if err <= 1.0 => {
                        let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).min(5.0) };
                        if dt == h_adapt {
                            h_adapt *= grow.max(1.0);
                        }
                        break (y, dt);
                    }
                    Some((_, err)) => h_adapt = dt * (0.9 * err.powf(-0.25)).max(0.1),
                    None => h_adapt = dt * 0.25,
                }
            },
        };
        x = next;
        t += dt;
        steps += 1;
        if remaining - dt <= 1e-12 * opts.horizon.max(1.0) {
            t = opts.horizon;
        }
        if steps % record_every == 0 {
            times.push(t);
            states.push(x.clone());
        }
        if let Some(bounds) = &opts.escape_box {
            if !inside(&x, bounds) {
                return finish(&mut times, &mut states, t, &x, TerminalStatus::EscapedBox);
            }
        }
        if norm(&x) <= CONVERGENCE_RADIUS {
            let since = *ball_since.get_or_insert(t);
            if t - since >= CONVERGENCE_DWELL {
                converged = true;
                if opts.stop_on_converge {
                    return finish(&mut times, &mut states, t, &x, TerminalStatus::Converged);
                }
            }
        } else {
            ball_since = None;
            converged = false;
        }
    }
    let status = if converged {
        TerminalStatus::Converged
    } else {
        TerminalStatus::HorizonReached
    };
    finish(&mut times, &mut states, t, &x, status)
}

/// Integrates a parsed vector field.
pub fn integrate_field(vf: &VectorField, x0: &[f64], opts: &IntegrateOptions) -> Trajectory {
    integrate(&|x: &[f64]| vf.eval(x).ok(), x0, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// Per-point verdict: true iff the trajectory converged.
    pub converged: Vec<bool>,
    pub statuses: Vec<TerminalStatus>,
    /// Indices of points that did not converge.
    pub failures: Vec<usize>,
}

impl OracleReport {
    pub fn converged_fraction(&self) -> f64 {
        if self.converged.is_empty() {
            return 1.0;
        }
        self.converged.iter().filter(|&&c| c).count() as f64 / self.converged.len() as f64
    }

    pub fn count(&self, status: TerminalStatus) -> usize {
        self.statuses.iter().filter(|&&s| s == status).count()
    }

    /// `key=value` summary, one per line.
    pub fn summary(&self) -> String {
        format!(
            "points={}\nconverged={}\nescaped_box={}\nhorizon_reached={}\ndomain_error={}\nconverged_fraction={}\n",
            self.statuses.len(),
            self.count(TerminalStatus::Converged),
            self.count(TerminalStatus::EscapedBox),
            self.count(TerminalStatus::HorizonReached),
            self.count(TerminalStatus::DomainError),
            self.converged_fraction(),
        )
    }
}

/// Integrates every point in parallel and reports which ones reach the origin.
pub fn attraction_oracle(
    vf: &VectorField,
    points: &[Vec<f64>],
    opts: &IntegrateOptions,
) -> OracleReport {
    let opts = IntegrateOptions {
        record_every: usize::MAX,
        ..opts.clone()
    };
    let statuses: Vec<TerminalStatus> = points
        .par_iter()
        .map(|p| integrate_field(vf, p, &opts).status)
        .collect();
    let converged: Vec<bool> = statuses.iter().map(|&s| s == TerminalStatus::Converged).collect();
    let failures = converged
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| i)
        .collect();
    OracleReport {
        converged,
        statuses,
        failures,
    }
}
