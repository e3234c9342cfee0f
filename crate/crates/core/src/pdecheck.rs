//! Method-of-lines simulation of `u_t = u_xx - u + g(u(t - h, x))` on
//! `[0, L]` with zero-flux ends, used to cross-check computed fronts.
//!
//! Time stepping is explicit Euler with `dt = h / m`, the smallest such step
//! under the diffusion limit `dx^2 / 4`. Because the step divides the delay,
//! the delayed field is an exact ring-buffer entry.

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::model::BirthFunction;
use crate::profiles::{Profile, ProfileError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("CFL violated: dt = {dt} > dx^2/4 = {limit}")]
    CflViolated { dt: f64, limit: f64 },
    #[error("front hit boundary: crossing at x = {x} at t = {t}")]
    FrontHitBoundary { x: f64, t: f64 },
    #[error("no crossing of level {level} in snapshot at t = {t}")]
    NoCrossing { level: f64, t: f64 },
    #[error("only {got} snapshots after the transient, need 10")]
    TooFewSnapshots { got: usize },
    #[error("profile window not contained in domain")]
    WindowNotContained,
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Initial data on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// Spatial samples at spacing `dx` (interpolated if the grid differs).
    Field(Profile),
    /// `u(0, x) = phi((x - x0) / c)`.
    Front { phi: Profile, c: f64, x0: f64 },
}

/// Field on `[-h, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryMode {
    /// `u(t, .) = u(0, .)`.
    Frozen,
    /// `u(t, x) = phi((x - x0) / c + t)`; needs a front initial condition.
    Travelling,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSetup {
    pub length: f64,
    pub dx: f64,
    pub t_end: f64,
    /// Time between stored snapshots (rounded to whole steps).
    pub snapshot_every: f64,
    /// Explicit step; by default the largest `h / m` under `dx^2 / 4`.
    pub dt: Option<f64>,
    /// Level whose crossing must stay inside `[0.1 L, 0.9 L]`; `None` skips
    /// the boundary check.
    pub watch_level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRun {
    pub length: f64,
    pub dx: f64,
    pub dt_pde: f64,
    pub delay: f64,
    pub snapshots: Vec<Snapshot>,
    /// Fields over the last delay, oldest first, one per step.
    #[serde(skip)]
    pub history: Vec<Vec<f64>>,
}

impl FieldRun {
    /// Wraps externally produced snapshots (for speed measurement).
    pub fn from_snapshots(length: f64, dx: f64, snapshots: Vec<Snapshot>) -> Self {
        FieldRun { length, dx, dt_pde: f64::NAN, delay: 0.0, snapshots, history: Vec::new() }
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.snapshots.first().map_or(0, |s| s.u.len());
        (0..n).map(|i| i as f64 * self.dx)
    }

    /// Snapshot CSV with header `x,u`.
    pub fn write_snapshot_csv<W: Write>(&self, k: usize, mut w: W) -> Result<(), PdeError> {
        let io = |e: std::io::Error| PdeError::Io(e.to_string());
        writeln!(w, "x,u").map_err(io)?;
        for (x, u) in self.xs().zip(&self.snapshots[k].u) {
            writeln!(w, "{:.16e},{:.16e}", x, u).map_err(io)?;
        }
        Ok(())
    }

    /// Run parameters and snapshot times.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "length": self.length,
            "dx": self.dx,
            "dt_pde": self.dt_pde,
            "delay": self.delay,
            "points": self.snapshots.first().map_or(0, |s| s.u.len()),
            "snapshot_times": self.snapshots.iter().map(|s| s.t).collect::<Vec<_>>(),
        })
    }
}

/// First up-crossing of `level` scanning in `x`, by linear interpolation.
fn crossing(u: &[f64], dx: f64, level: f64) -> Option<f64> {
    let k = u.iter().position(|&v| v >= level)?;
    if k == 0 {
        return None;
    }
    let (a, b) = (u[k - 1], u[k]);
    Some(((k - 1) as f64 + (level - a) / (b - a)) * dx)
}

pub fn simulate_pde(
    g: &BirthFunction,
    h: f64,
    setup: &PdeSetup,
    init: &Initial,
    mode: HistoryMode,
) -> Result<FieldRun, PdeError> {
    let PdeSetup { length, dx, t_end, snapshot_every, .. } = *setup;
    if !(h > 0.0 && length > 0.0 && dx > 0.0 && t_end > 0.0 && snapshot_every > 0.0) {
        return Err(PdeError::InvalidInput("h, L, dx, T and snapshot spacing must be > 0".into()));
    }
    let npts = (length / dx).round() as usize + 1;
    if npts < 8 || ((npts - 1) as f64 * dx - length).abs() > 1e-9 * length {
        return Err(PdeError::InvalidInput(format!("dx = {dx} must divide L = {length}")));
    }
    let limit = 0.25 * dx * dx;
    let m = match setup.dt {
        Some(dt) if dt > limit * (1.0 + 1e-12) => return Err(PdeError::CflViolated { dt, limit }),
        Some(dt) => (h / dt).round().max(1.0) as usize,
        None => (h / limit).ceil() as usize,
    };
    let dt = h / m as f64;
    if dt > limit * (1.0 + 1e-12) {
        return Err(PdeError::CflViolated { dt, limit });
    }
    let xs: Vec<f64> = (0..npts).map(|i| i as f64 * dx).collect();
    let field_at = |t: f64| -> Vec<f64> {
        match init {
            Initial::Field(p) => xs.iter().map(|&x| p.eval(x)).collect(),
            Initial::Front { phi, c, x0 } => xs.iter().map(|&x| phi.eval((x - x0) / c + t)).collect(),
        }
    };
    if mode == HistoryMode::Travelling && !matches!(init, Initial::Front { .. }) {
        return Err(PdeError::InvalidInput("travelling history needs a front initial condition".into()));
    }
    let mut hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(m + 1);
    let u0 = field_at(0.0);
    for k in 0..=m {
        let t = -h + k as f64 * dt;
        hist.push_back(match mode {
            HistoryMode::Frozen => u0.clone(),
            HistoryMode::Travelling => field_at(t),
        });
    }
    let snap_steps = ((snapshot_every / dt).round() as usize).max(1);
    let nsteps = (t_end / dt).round() as usize;
    let mut snapshots = vec![Snapshot { t: 0.0, u: u0.clone() }];
    let mut u = u0;
    let mut next = vec![0.0; npts];
    let inv = 1.0 / (dx * dx);
    for step in 1..=nsteps {
        // hist.front() is u(t - h), hist.back() is u(t)
        let delayed = hist.front().unwrap();
        for i in 0..npts {
            let left = if i == 0 { u[1] } else { u[i - 1] };
            let right = if i == npts - 1 { u[npts - 2] } else { u[i + 1] };
            let lap = (left - 2.0 * u[i] + right) * inv;
            next[i] = u[i] + dt * (lap - u[i] + g.eval(delayed[i]));
        }
        std::mem::swap(&mut u, &mut next);
        let mut recycled = hist.pop_front().unwrap();
        recycled.copy_from_slice(&u);
        hist.push_back(recycled);
        if step % snap_steps == 0 || step == nsteps {
            let t = step as f64 * dt;
            if let Some(level) = setup.watch_level {
                if let Some(x) = crossing(&u, dx, level) {
                    if x < 0.1 * length || x > 0.9 * length {
                        return Err(PdeError::FrontHitBoundary { x, t });
                    }
                }
            }
            snapshots.push(Snapshot { t, u: u.clone() });
        }
    }
    Ok(FieldRun { length, dx, dt_pde: dt, delay: h, snapshots, history: hist.into_iter().collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedFit {
    /// Absolute value of the fitted slope.
    pub c_est: f64,
    pub slope: f64,
    /// RMS deviation of crossing positions from the fitted line.
    pub residual: f64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

/// Fits the position of the `level` crossing against time over the second
/// half of the run.
pub fn measure_front_speed(run: &FieldRun, level: f64) -> Result<SpeedFit, PdeError> {
    let t_last = run.snapshots.last().map_or(0.0, |s| s.t);
    let late: Vec<&Snapshot> = run.snapshots.iter().filter(|s| s.t >= 0.5 * t_last).collect();
    if late.len() < 10 {
        return Err(PdeError::TooFewSnapshots { got: late.len() });
    }
    let mut times = Vec::new();
    let mut positions = Vec::new();
    for s in late {
        let x = crossing(&s.u, run.dx, level).ok_or(PdeError::NoCrossing { level, t: s.t })?;
        times.push(s.t);
        positions.push(x);
    }
    let n = times.len() as f64;
    let mt = times.iter().sum::<f64>() / n;
    let mx = positions.iter().sum::<f64>() / n;
    let sxy: f64 = times.iter().zip(&positions).map(|(t, x)| (t - mt) * (x - mx)).sum();
    let sxx: f64 = times.iter().map(|t| (t - mt) * (t - mt)).sum();
    let slope = sxy / sxx;
    let residual = (times
        .iter()
        .zip(&positions)
        .map(|(t, x)| (x - mx - slope * (t - mt)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SpeedFit { c_est: slope.abs(), slope, residual, times, positions })
}

/// Sup difference between the final field, read in the front's time variable
/// `s = x / c`, and `phi`, after aligning both at `level`. The comparison
/// window is where `phi` lies in `[0.01 kappa, 0.99 kappa]`.
pub fn compare_profile(run: &FieldRun, phi: &Profile, c: f64, level: f64) -> Result<f64, PdeError> {
    let last = run.snapshots.last().ok_or(PdeError::InvalidInput("run has no snapshots".into()))?;
    let kappa = phi.right_limit;
    let field = Profile::raw(0.0, run.dx / c, last.u.clone(), 0.0, kappa)?;
    let (field, _) = field.align_by_level(level)?;
    let (phi, _) = phi.align_by_level(level)?;
    let lo = phi.times().zip(&phi.values).find(|(_, v)| **v >= 0.01 * kappa).map(|(t, _)| t);
    let hi = phi.times().zip(&phi.values).find(|(_, v)| **v >= 0.99 * kappa).map(|(t, _)| t);
    let (lo, hi) = match (lo, hi) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(PdeError::WindowNotContained),
    };
    if lo < field.t0 || hi > field.t_end() {
        return Err(PdeError::WindowNotContained);
    }
    let sup = phi
        .times()
        .zip(&phi.values)
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .map(|(t, v)| (field.interp(t) - v).abs())
        .fold(0.0, f64::max);
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, Builtin};

    fn nich() -> BirthFunction {
        make_builtin(Builtin::Nicholson { p: 2.0 }).unwrap()
    }

    fn setup(t_end: f64) -> PdeSetup {
        PdeSetup { length: 20.0, dx: 0.2, t_end, snapshot_every: 0.5, dt: None, watch_level: None }
    }

    fn constant(v: f64) -> Initial {
        Initial::Field(Profile::raw(0.0, 0.2, vec![v; 101], v, v).unwrap())
    }

    #[test]
    fn equilibria_stay() {
        let k = 2f64.ln();
        let run = simulate_pde(&nich(), 1.0, &setup(5.0), &constant(k), HistoryMode::Frozen).unwrap();
        for s in &run.snapshots {
            assert!(s.u.iter().all(|v| (v - k).abs() < 1e-10));
        }
        let run = simulate_pde(&nich(), 1.0, &setup(5.0), &constant(0.0), HistoryMode::Frozen).unwrap();
        assert!(run.snapshots.iter().all(|s| s.u.iter().all(|&v| v == 0.0)));
        assert!(run.history.len() as f64 * run.dt_pde >= 1.0);
    }

    #[test]
    fn cfl_guard() {
        let s = PdeSetup { dt: Some(0.02), ..setup(1.0) };
        assert!(matches!(
            simulate_pde(&nich(), 1.0, &s, &constant(0.1), HistoryMode::Frozen),
            Err(PdeError::CflViolated { .. })
        ));
        assert!(simulate_pde(&nich(), 1.0, &setup(1.0), &constant(0.1), HistoryMode::Travelling).is_err());
    }

    #[test]
    fn synthetic_translation_speed() {
        let (l, dx) = (200.0, 0.1);
        let snaps = (0..=40)
            .map(|k| {
                let t = k as f64 * 0.25;
                let u = (0..=2000).map(|i| 1.0 / (1.0 + (-(i as f64 * dx - 50.0 - 3.0 * t)).exp())).collect();
                Snapshot { t, u }
            })
            .collect();
        let run = FieldRun::from_snapshots(l, dx, snaps);
        let fit = measure_front_speed(&run, 0.5).unwrap();
        assert!((fit.c_est - 3.0).abs() < 1e-3);
    }

    #[test]
    fn snapshot_csv() {
        let run = simulate_pde(&nich(), 1.0, &setup(1.0), &constant(0.3), HistoryMode::Frozen).unwrap();
        let mut buf = Vec::new();
        run.write_snapshot_csv(0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,u\n"));
        assert_eq!(text.lines().count(), 102);
        assert_eq!(run.manifest()["snapshot_times"].as_array().unwrap().len(), run.snapshots.len());
    }
}
