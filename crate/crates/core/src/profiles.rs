//! Sampled functions on the real line.
//!
//! A [`Profile`] is a uniform grid `t_i = t0 + i dt` with values and the
//! limits it is asserted to approach at `-inf` and `+inf`. Off-grid reads use
//! four-point cubic interpolation.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("profile needs at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("grid step dt = {0} must be finite and > 0")]
    BadStep(f64),
    #[error("grid does not reach far enough left: |x[0]| = {first} > 1e-3 * {max}")]
    LeftTailNotReached { first: f64, max: f64 },
    #[error("no crossing of level {level}")]
    NoCrossing { level: f64 },
    #[error("non-unique first crossing of level {level} near t = {t}")]
    NonUniqueCrossing { level: f64, t: f64 },
    #[error("level {level} is not strictly between the left limit {left} and the maximum {max}")]
    LevelOutOfRange { level: f64, left: f64, max: f64 },
    #[error("fit window [{lo}, {hi}] holds {got} samples, at least 20 required")]
    WindowTooShort { lo: f64, hi: f64, got: usize },
    #[error("window touches noise floor at t = {t}")]
    NoiseFloor { t: f64 },
    #[error("profiles do not overlap")]
    NoOverlap,
    #[error("mu = {0} must be >= 0")]
    NegativeMu(f64),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

fn io_err(e: impl std::fmt::Display) -> ProfileError {
    ProfileError::Io(e.to_string())
}

pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub left_limit: f64,
    pub right_limit: f64,
}

/// Metadata stored next to a profile CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub t0: f64,
    pub dt: f64,
    pub left_limit: f64,
    pub right_limit: f64,
}

fn check_grid(dt: f64, values: &[f64], min: usize) -> Result<(), ProfileError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ProfileError::BadStep(dt));
    }
    if values.len() < min {
        return Err(ProfileError::TooShort { min, got: values.len() });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(ProfileError::NonFinite(i));
    }
    Ok(())
}

impl Profile {
    /// Validated constructor. When `left_limit == 0` the first sample must
    /// already be within `1e-3 max|x|` of zero.
    pub fn new(
        t0: f64,
        dt: f64,
        values: Vec<f64>,
        left_limit: f64,
        right_limit: f64,
    ) -> Result<Self, ProfileError> {
        check_grid(dt, &values, MIN_SAMPLES)?;
        if !t0.is_finite() {
            return Err(ProfileError::Parse(format!("t0 = {t0}")));
        }
        let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if left_limit == 0.0 && values[0].abs() > 1e-3 * max {
            return Err(ProfileError::LeftTailNotReached { first: values[0].abs(), max });
        }
        Ok(Profile { t0, dt, values, left_limit, right_limit })
    }

    /// Constructor for raw snapshots (spatial fields, windows of a run) that
    /// do not need to reach their limits. Requires two finite samples.
    pub fn raw(t0: f64, dt: f64, values: Vec<f64>, left_limit: f64, right_limit: f64) -> Result<Self, ProfileError> {
        check_grid(dt, &values, 2)?;
        Ok(Profile { t0, dt, values, left_limit, right_limit })
    }

    /// Samples `f` on `n` grid points.
    pub fn from_fn(
        t0: f64,
        dt: f64,
        n: usize,
        left_limit: f64,
        right_limit: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, ProfileError> {
        let values = (0..n).map(|i| f(t0 + i as f64 * dt)).collect();
        Profile::new(t0, dt, values, left_limit, right_limit)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.t(i))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cubic interpolation inside the grid; the asserted limits outside it.
    pub fn eval(&self, t: f64) -> f64 {
        if t < self.t0 {
            return self.left_limit;
        }
        if t > self.t_end() {
            return self.right_limit;
        }
        self.interp(t)
    }

    /// Cubic interpolation, extrapolating with the end stencils outside.
    pub fn interp(&self, t: f64) -> f64 {
        let n = self.len();
        let s = (t - self.t0) / self.dt;
        if n < 4 {
            let i = (s.floor().max(0.0) as usize).min(n - 2);
            let u = s - i as f64;
            return self.values[i] * (1.0 - u) + self.values[i + 1] * u;
        }
        let i = (s.floor() as isize).clamp(0, n as isize - 2) as usize;
        let base = i.saturating_sub(1).min(n - 4);
        let u = s - base as f64;
        let v = &self.values[base..base + 4];
        // Lagrange basis on nodes 0, 1, 2, 3
        let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3]
    }

    /// Samples this profile on a new uniform grid (values outside the old
    /// grid come from the asserted limits).
    pub fn resample(&self, t0: f64, dt: f64, n: usize) -> Result<Profile, ProfileError> {
        let values = (0..n).map(|i| self.eval(t0 + i as f64 * dt)).collect();
        Profile::raw(t0, dt, values, self.left_limit, self.right_limit)
    }

    /// The same samples with the grid moved right by `s`: `y(t) = x(t - s)`.
    pub fn translated(&self, s: f64) -> Profile {
        Profile { t0: self.t0 + s, ..self.clone() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Profile {
        Profile { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// `max(sup_{t >= 0} |x|, sup_{t < 0} e^{-mu t} |x|)` over grid samples.
    pub fn weighted_norm(&self, mu: f64) -> f64 {
        self.times()
            .zip(&self.values)
            .map(|(t, v)| if t >= 0.0 { v.abs() } else { (-mu * t).exp() * v.abs() })
            .fold(0.0, f64::max)
    }

    /// Location of the first up-crossing of `level`.
    pub fn first_crossing(&self, level: f64) -> Result<f64, ProfileError> {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(level > self.left_limit && level < max) {
            return Err(ProfileError::LevelOutOfRange { level, left: self.left_limit, max });
        }
        let k = self
            .values
            .iter()
            .position(|&v| v >= level)
            .ok_or(ProfileError::NoCrossing { level })?;
        if k == 0 {
            return Err(ProfileError::NoCrossing { level });
        }
        let (a, b) = (self.values[k - 1], self.values[k]);
        if b - a <= 1e-14 * max.abs().max(1e-300) {
            return Err(ProfileError::NonUniqueCrossing { level, t: self.t(k) });
        }
        if b == level {
            return Ok(self.t(k));
        }
        // bisection on the cubic interpolant inside the bracketing cell
        let f = |t: f64| self.interp(t) - level;
        let (mut lo, mut hi) = (self.t(k - 1), self.t(k));
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (f(mid) < 0.0) == (flo < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Translates so the first up-crossing of `level` sits at `t = 0`.
    /// Returns the aligned profile and the amount it was moved.
    pub fn align_by_level(&self, level: f64) -> Result<(Profile, f64), ProfileError> {
        let tc = self.first_crossing(level)?;
        Ok((self.translated(-tc), -tc))
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar { t0: self.t0, dt: self.dt, left_limit: self.left_limit, right_limit: self.right_limit }
    }

    /// CSV with header `t,x` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), ProfileError> {
        writeln!(w, "t,x").map_err(io_err)?;
        for (t, v) in self.times().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e}", t, v).map_err(io_err)?;
        }
        Ok(())
    }

    /// Writes `path` (CSV) and the JSON sidecar next to it.
    pub fn save(&self, path: &Path) -> Result<(), ProfileError> {
        let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
        self.write_csv(&mut f)?;
        f.flush().map_err(io_err)?;
        let json = serde_json::to_string_pretty(&self.sidecar()).map_err(io_err)?;
        fs::write(sidecar_path(path), json + "\n").map_err(io_err)
    }

    /// Reads a CSV and its sidecar. Without a sidecar the limits are taken
    /// from the end samples.
    pub fn load(path: &Path) -> Result<Profile, ProfileError> {
        let f = fs::File::open(path).map_err(io_err)?;
        let (ts, xs) = read_columns(std::io::BufReader::new(f))?;
        let side = sidecar_path(path);
        let meta: Option<Sidecar> = if side.exists() {
            let text = fs::read_to_string(&side).map_err(io_err)?;
            Some(serde_json::from_str(&text).map_err(|e| ProfileError::Parse(e.to_string()))?)
        } else {
            None
        };
        if ts.len() < 2 {
            return Err(ProfileError::TooShort { min: MIN_SAMPLES, got: ts.len() });
        }
        let dt = meta.map_or(ts[1] - ts[0], |m| m.dt);
        let t0 = meta.map_or(ts[0], |m| m.t0);
        for (i, t) in ts.iter().enumerate() {
            if (t - (t0 + i as f64 * dt)).abs() > 1e-9 * dt.max(t.abs() * 1e-6) {
                return Err(ProfileError::Parse(format!("row {i}: grid is not uniform")));
            }
        }
        let left = meta.map_or(xs[0], |m| m.left_limit);
        let right = meta.map_or(xs[xs.len() - 1], |m| m.right_limit);
        Profile::new(t0, dt, xs, left, right)
    }
}

/// `foo.csv` -> `foo.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn read_columns<R: BufRead>(r: R) -> Result<(Vec<f64>, Vec<f64>), ProfileError> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers().map_err(|e| ProfileError::Parse(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "x" {
        return Err(ProfileError::Parse(format!("expected header t,x, got {:?}", headers)));
    }
    let (mut ts, mut xs) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ProfileError::Parse(e.to_string()))?;
        let num = |k: usize| -> Result<f64, ProfileError> {
            rec[k].trim().parse().map_err(|_| ProfileError::Parse(format!("row {}: bad number {:?}", i + 1, &rec[k])))
        };
        ts.push(num(0)?);
        xs.push(num(1)?);
    }
    Ok((ts, xs))
}

/// Weighted norm of `x - y`. Profiles on the same grid are compared sample
/// by sample; otherwise `y` is interpolated onto the grid points of `x` that
/// lie inside `y`'s domain.
pub fn profile_distance(x: &Profile, y: &Profile, mu: f64) -> Result<f64, ProfileError> {
    if !(mu >= 0.0) {
        return Err(ProfileError::NegativeMu(mu));
    }
    let same = x.len() == y.len() && x.dt == y.dt && (x.t0 - y.t0).abs() <= 1e-12 * x.dt;
    let mut sup = 0.0f64;
    let mut any = false;
    for i in 0..x.len() {
        let t = x.t(i);
        let yv = if same {
            y.values[i]
        } else if t >= y.t0 - 1e-12 * y.dt && t <= y.t_end() + 1e-12 * y.dt {
            y.interp(t)
        } else {
            continue;
        };
        any = true;
        let d = (x.values[i] - yv).abs();
        sup = sup.max(if t >= 0.0 { d } else { (-mu * t).exp() * d });
    }
    if !any {
        return Err(ProfileError::NoOverlap);
    }
    Ok(sup)
}

/// Log-linear fit `x ~ B e^{exponent t}` on a left-tail window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    #[serde(rename = "B")]
    pub b: f64,
    pub exponent: f64,
    pub window: (f64, f64),
    /// `sup |x - B e^{exponent t}| e^{-rate_factor lambda_ref t}` over the
    /// window, when a reference rate was supplied.
    pub max_residual: Option<f64>,
}

/// Reference decay used to weight the remainder of a tail fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderWeight {
    pub lambda_ref: f64,
    pub rate_factor: f64,
}

impl RemainderWeight {
    pub fn new(lambda_ref: f64) -> Self {
        RemainderWeight { lambda_ref, rate_factor: 1.99 }
    }
}

fn window_samples(x: &Profile, window: (f64, f64)) -> Result<Vec<(f64, f64)>, ProfileError> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = x
        .times()
        .zip(x.values.iter().copied())
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .collect();
    if pts.len() < 20 {
        return Err(ProfileError::WindowTooShort { lo, hi, got: pts.len() });
    }
    let floor = 1e3 * f64::EPSILON * x.max_abs();
    if let Some(&(t, _)) = pts.iter().find(|(_, v)| *v < floor) {
        return Err(ProfileError::NoiseFloor { t });
    }
    Ok(pts)
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mt)
}

/// Least-squares line through `log x(t)` over the samples in `window`.
pub fn fit_tail_exponent(
    x: &Profile,
    window: (f64, f64),
    weight: Option<RemainderWeight>,
) -> Result<AsymptoticFit, ProfileError> {
    let pts = window_samples(x, window)?;
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t, v.ln())).collect();
    let (slope, icept) = least_squares(&logs);
    let b = icept.exp();
    let max_residual = weight.map(|w| {
        pts.iter()
            .map(|&(t, v)| (v - b * (slope * t).exp()).abs() * (-w.rate_factor * w.lambda_ref * t).exp())
            .fold(0.0, f64::max)
    });
    Ok(AsymptoticFit { b, exponent: slope, window, max_residual })
}

/// Tail amplitude for a known rate and the observed decay of the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderFit {
    #[serde(rename = "B")]
    pub b: f64,
    pub rate: f64,
    /// Fitted exponent of `|x - B e^{rate t}|`; `None` when the remainder is
    /// below rounding level on the whole window.
    pub remainder_rate: Option<f64>,
    pub max_remainder: f64,
    pub window: (f64, f64),
}

/// Fits `x = B e^{rate t} + C e^{2 rate t}` on `window`, then measures how
/// fast `x - B e^{rate t}` decays to the left.
pub fn fit_remainder(x: &Profile, rate: f64, window: (f64, f64)) -> Result<RemainderFit, ProfileError> {
    let pts = window_samples(x, window)?;
    // x e^{-rate t} = B + C e^{rate t}
    let lin: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| ((rate * t).exp(), v * (-rate * t).exp())).collect();
    let (_, b) = least_squares(&lin);
    let rem: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t, v - b * (rate * t).exp())).collect();
    let max_remainder = rem.iter().fold(0.0f64, |m, r| m.max(r.1.abs()));
    let floor = 1e-13 * x.max_abs();
    let usable: Vec<(f64, f64)> = rem.iter().filter(|r| r.1.abs() > floor).map(|&(t, r)| (t, r.abs().ln())).collect();
    let remainder_rate = if usable.len() >= 10 { Some(least_squares(&usable).0) } else { None };
    Ok(RemainderFit { b, rate, remainder_rate, max_remainder, window })
}
