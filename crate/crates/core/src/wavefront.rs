//! Travelling fronts for finite speed `c = 1/eps`.
//!
//! The profile equation `eps^2 x'' - x' - x + g(x(t - h)) = 0` is solved in
//! integral form `x = I_eps g(x)`, where
//!
//! ```text
//! (I_eps y)(t) = (1/sigma) [ L(t - h) + R(t - h) ],
//! L(tau) = int_{-inf}^{tau} e^{-a (tau - u)} y(u) du,
//! R(tau) = int_{tau}^{inf}  e^{-b (u - tau)} y(u) du,
//! ```
//!
//! with `sigma = sqrt(1 + 4 eps^2)`, `a = 2 / (1 + sigma)` and
//! `b = (1 + sigma) / (2 eps^2)`. `L` and `R` are computed by one forward and
//! one backward sweep; each cell integrates the local cubic interpolant of `y`
//! against the exponential kernel exactly, so stiff right kernels
//! (`b dt >> 1`) cost nothing in accuracy.

use serde::Serialize;
use thiserror::Error;

use crate::charroots::{real_root_lambda, real_roots_eps, RootError};
use crate::model::{BirthFunction, GConstants};
use crate::profiles::{fit_remainder, fit_tail_exponent, profile_distance, AsymptoticFit, Profile, ProfileError, RemainderWeight};
use crate::Exec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("speed c = {c} is below the minimum {c_min}")]
    BelowMinimumSpeed { c: f64, c_min: f64 },
    #[error("grid too short on the {side}: integrand is {gap} away from its limit")]
    GridTooShort { side: &'static str, gap: f64 },
    #[error("not converged after {iterations} iterations (last step {last_delta:e}); try a larger c")]
    NotConverged { iterations: usize, last_delta: f64 },
    #[error("fronts at different speeds ({0} and {1}) cannot be compared")]
    MixedSpeeds(f64, f64),
    #[error("only {0} seeds converged, at least 2 needed")]
    TooFewConverged(usize),
    #[error("finite differences ill-conditioned: eps^2/dt^2 = {0:e} > 1e6")]
    IllConditioned(f64),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Kernel constants for a given `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveParams {
    /// Infinite when `eps = 0`.
    pub c: f64,
    pub eps: f64,
    pub sigma: f64,
    pub rate_minus: f64,
    /// Infinite when `eps = 0` (no right kernel).
    pub rate_plus: f64,
}

impl WaveParams {
    pub fn from_speed(c: f64) -> Result<Self, FrontError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(FrontError::InvalidInput(format!("speed c = {c} must be finite and > 0")));
        }
        Self::from_eps(1.0 / c)
    }

    pub fn from_eps(eps: f64) -> Result<Self, FrontError> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(FrontError::InvalidInput(format!("eps = {eps} must be >= 0")));
        }
        let sigma = (1.0 + 4.0 * eps * eps).sqrt();
        let (c, rate_plus) = if eps == 0.0 {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (1.0 / eps, (1.0 + sigma) / (2.0 * eps * eps))
        };
        Ok(WaveParams { c, eps, sigma, rate_minus: 2.0 / (1.0 + sigma), rate_plus })
    }
}

/// Smallest admissible speed: the two real roots of the second-order symbol
/// exist for `eps < 1 / (2 sqrt(p - 1))`; `margin` keeps away from the edge.
pub fn c_min(p: f64, margin: f64) -> f64 {
    2.0 * (p - 1.0).sqrt() * (1.0 + margin)
}

/// How the integrand continues left of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeftTail {
    /// Equal to the profile's left limit.
    Constant,
    /// `y(t) = y[0] e^{rate (t - t0)}`.
    Exponential { rate: f64 },
    /// `y(t) = (y[0] - second) e^{rate (t - t0)} + second e^{2 rate (t - t0)}`,
    /// the two leading terms of a front tail.
    ExponentialPair { rate: f64, second: f64 },
}

impl LeftTail {
    /// `(amplitude at t0, rate)` of each exponential term.
    fn terms(self, y0: f64) -> [(f64, f64); 2] {
        match self {
            LeftTail::Constant => [(y0, 0.0), (0.0, 0.0)],
            LeftTail::Exponential { rate } => [(y0, rate), (0.0, 2.0 * rate)],
            LeftTail::ExponentialPair { rate, second } => [(y0 - second, rate), (second, 2.0 * rate)],
        }
    }
}

/// `F_m(th) = int_0^1 e^{-th (1-w)} w^m dw` and `H_m(th) = int_0^1 e^{-th w} w^m dw`.
fn moments(th: f64) -> ([f64; 4], [f64; 4]) {
    let mut f = [0.0; 4];
    let mut hm = [0.0; 4];
    if th < 2.0 {
        for m in 0..4 {
            let mfact = [1.0, 1.0, 2.0, 6.0][m];
            let (mut fs, mut hs) = (0.0, 0.0);
            // term = (-th)^n / n!, and F_m sums (-th)^n m! / (n + m + 1)!
            let mut term = 1.0f64;
            for n in 0..60 {
                let nf = n as f64;
                let beta = mfact * beta_ratio(n, m);
                fs += term * beta;
                hs += term / (nf + m as f64 + 1.0);
                term *= -th / (nf + 1.0);
                if term.abs() < 1e-18 {
                    break;
                }
            }
            f[m] = fs;
            hm[m] = hs;
        }
        return (f, hm);
    }
    let e = (-th).exp();
    f[0] = -(-th).exp_m1() / th;
    hm[0] = f[0];
    for m in 1..4 {
        f[m] = (1.0 - m as f64 * f[m - 1]) / th;
        hm[m] = (m as f64 * hm[m - 1] - e) / th;
    }
    (f, hm)
}

/// `n! / (n + m + 1)!`.
fn beta_ratio(n: usize, m: usize) -> f64 {
    (n + 1..=n + m + 1).fold(1.0, |acc, k| acc / k as f64)
}

/// Monomial coefficients in `s` of the cubic through `v` at nodes
/// `-d, 1-d, 2-d, 3-d`.
fn cubic(v: &[f64], d: f64) -> [f64; 4] {
    let d1 = v[1] - v[0];
    let d2 = v[2] - 2.0 * v[1] + v[0];
    let d3 = v[3] - 3.0 * v[2] + 3.0 * v[1] - v[0];
    let c = [v[0], d1 - d2 / 2.0 + d3 / 3.0, d2 / 2.0 - d3 / 2.0, d3 / 6.0];
    reparam(&c, d, 1.0)
}

/// Coefficients in `w` of `p(s0 + len w)`.
fn reparam(c: &[f64; 4], s0: f64, len: f64) -> [f64; 4] {
    let p = c[0] + s0 * (c[1] + s0 * (c[2] + s0 * c[3]));
    let dp = c[1] + s0 * (2.0 * c[2] + 3.0 * s0 * c[3]);
    let ddp2 = c[2] + 3.0 * s0 * c[3];
    [p, len * dp, len * len * ddp2, len * len * len * c[3]]
}

fn dot(c: &[f64; 4], m: &[f64; 4]) -> f64 {
    c[0] * m[0] + c[1] * m[1] + c[2] * m[2] + c[3] * m[3]
}

/// Cubic on cell `[t_k, t_{k+1}]` in the local variable `s in [0, 1]`.
fn cell_poly(y: &[f64], k: usize) -> [f64; 4] {
    let n = y.len();
    let base = k.saturating_sub(1).min(n - 4);
    cubic(&y[base..base + 4], (k - base) as f64)
}

/// Applies the integral operator to an integrand profile `y`. The left tail
/// defaults to the constant left limit.
pub fn apply_i_eps(y: &Profile, params: &WaveParams, h: f64) -> Result<Profile, FrontError> {
    apply_i_eps_with_tail(y, params, h, LeftTail::Constant)
}

pub fn apply_i_eps_with_tail(
    y: &Profile,
    params: &WaveParams,
    h: f64,
    tail: LeftTail,
) -> Result<Profile, FrontError> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(FrontError::InvalidInput(format!("delay h = {h} must be >= 0")));
    }
    let n = y.len();
    if n < 4 {
        return Err(FrontError::InvalidInput("integrand needs at least 4 samples".into()));
    }
    let v = &y.values;
    let scale = y.max_abs();
    let right_gap = (v[n - 1] - y.right_limit).abs();
    if right_gap > 1e-2 * scale {
        return Err(FrontError::GridTooShort { side: "right", gap: right_gap });
    }
    if let LeftTail::Constant = tail {
        let left_gap = (v[0] - y.left_limit).abs();
        if left_gap > 1e-2 * scale {
            return Err(FrontError::GridTooShort { side: "left", gap: left_gap });
        }
    }
    let dt = y.dt;
    let a = params.rate_minus;
    let b = params.rate_plus;
    let with_right = params.eps > 0.0;

    let polys: Vec<[f64; 4]> = (0..n - 1).map(|k| cell_poly(v, k)).collect();

    // forward sweep for L at the nodes
    let (fa, _) = moments(a * dt);
    let decay_a = (-a * dt).exp();
    let mut l = vec![0.0; n];
    l[0] = match tail {
        LeftTail::Constant => y.left_limit / a,
        _ => tail.terms(v[0]).iter().map(|&(amp, rate)| amp / (a + rate)).sum(),
    };
    for k in 0..n - 1 {
        l[k + 1] = decay_a * l[k] + dt * dot(&polys[k], &fa);
    }

    // backward sweep for R at the nodes
    let mut r = vec![0.0; n];
    if with_right {
        let (_, hb) = moments(b * dt);
        let decay_b = (-b * dt).exp();
        r[n - 1] = y.right_limit / b;
        for k in (0..n - 1).rev() {
            r[k] = decay_b * r[k + 1] + dt * dot(&polys[k], &hb);
        }
    }

    // the delayed point t_i - h sits at fractional index i - h/dt
    let shift = h / dt;
    let whole = shift.floor();
    let mut frac = shift - whole;
    let mut whole = whole as isize;
    if frac > 1.0 - 1e-12 {
        whole += 1;
        frac = 0.0;
    }
    // inside cell j = i - whole - 1 at local position theta = 1 - frac
    let theta = 1.0 - frac;
    let on_node = frac < 1e-12;
    let (fpart, hpart) = if on_node {
        ([0.0; 4], [0.0; 4])
    } else {
        (moments(a * theta * dt).0, moments(b * (1.0 - theta) * dt).1)
    };

    let tail_at = |tau: f64| -> (f64, f64) {
        let delta = y.t0 - tau;
        let (lv, rv) = match tail {
            LeftTail::Constant => {
                let yl = y.left_limit;
                let rv = if with_right { yl * -(-b * delta).exp_m1() / b } else { 0.0 };
                (yl / a, rv)
            }
            _ => {
                let (mut lv, mut rv) = (0.0, 0.0);
                for (amp0, rate) in tail.terms(v[0]) {
                    let amp = amp0 * (-rate * delta).exp();
                    lv += amp / (a + rate);
                    if with_right {
                        let k = b - rate;
                        let integral = if (k * delta).abs() < 1e-12 { delta } else { -(-k * delta).exp_m1() / k };
                        rv += amp * integral;
                    }
                }
                (lv, rv)
            }
        };
        let rv = if with_right { rv + (-b * delta).exp() * r[0] } else { 0.0 };
        (lv, rv)
    };

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lv, rv) = if on_node {
            let j = i as isize - whole;
            if j < 0 {
                tail_at(y.t0 + j as f64 * dt)
            } else {
                (l[j as usize], r[j as usize])
            }
        } else {
            let j = i as isize - whole - 1;
            if j < 0 {
                tail_at(y.t(i) - h)
            } else {
                let j = j as usize;
                let lp = reparam(&polys[j], 0.0, theta);
                let lv = (-a * theta * dt).exp() * l[j] + theta * dt * dot(&lp, &fpart);
                let rv = if with_right {
                    let rp = reparam(&polys[j], theta, 1.0 - theta);
                    (-b * (1.0 - theta) * dt).exp() * r[j + 1] + (1.0 - theta) * dt * dot(&rp, &hpart)
                } else {
                    0.0
                };
                (lv, rv)
            }
        };
        out.push((lv + rv) / params.sigma);
    }
    Ok(Profile::raw(y.t0, dt, out, y.left_limit, y.right_limit)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontOptions {
    /// Grid step is `h / steps_per_delay`.
    pub steps_per_delay: usize,
    /// Left end of the grid; by default where the seed reaches `1e-8 kappa`.
    pub t_minus: Option<f64>,
    /// Right end of the grid; by default 10 delays past the point where the
    /// seed settles within `1e-8` of kappa.
    pub t_plus: Option<f64>,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Relative margin above the minimum speed.
    pub c_margin: f64,
    /// Skip the minimum-speed check.
    pub force: bool,
    /// Left-tail fit window as fractions of kappa.
    pub tail_lo: f64,
    pub tail_hi: f64,
    /// Allowed shortfall of the remainder decay rate.
    pub slack: f64,
}

impl Default for FrontOptions {
    fn default() -> Self {
        FrontOptions {
            steps_per_delay: 32,
            t_minus: None,
            t_plus: None,
            damping: 0.7,
            tol: 1e-11,
            max_iter: 3000,
            c_margin: 0.05,
            force: false,
            tail_lo: 1e-6,
            tail_hi: 1e-3,
            slack: 0.05,
        }
    }
}

/// Outcome of the left-tail check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCheck {
    pub fit: AsymptoticFit,
    pub lambda1_ref: f64,
    pub remainder_rate: Option<f64>,
    pub required_rate: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontReport {
    pub c: f64,
    pub eps: f64,
    pub profile: Profile,
    pub residual_ode: f64,
    pub residual_fix: f64,
    pub positivity_ok: bool,
    pub tau: Option<f64>,
    pub monotone_tail_ok: bool,
    pub tail: Option<TailCheck>,
    pub iterations: usize,
    pub converged: bool,
    pub last_delta: f64,
    /// Geometric mean of successive step ratios over the last 10 steps.
    pub contraction: Option<f64>,
    pub degenerate: Option<String>,
    pub messages: Vec<String>,
}

impl FrontReport {
    pub fn to_json(&self) -> serde_json::Value {
        let tail = self.tail.map(|t| {
            serde_json::json!({
                "B": t.fit.b,
                "exponent": t.fit.exponent,
                "lambda1_ref": t.lambda1_ref,
                "remainder_rate": t.remainder_rate,
                "ok": t.ok,
            })
        });
        serde_json::json!({
            "c": self.c,
            "eps": self.eps,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_fix": self.residual_fix,
            "residual_ode": self.residual_ode,
            "positivity_ok": self.positivity_ok,
            "tau": self.tau,
            "monotone_tail_ok": self.monotone_tail_ok,
            "contraction": self.contraction,
            "degenerate": self.degenerate,
            "messages": self.messages,
            "tail": tail,
        })
    }

    /// Turns a non-converged report into an error.
    pub fn ensure_converged(self) -> Result<Self, FrontError> {
        if self.converged {
            Ok(self)
        } else {
            Err(FrontError::NotConverged { iterations: self.iterations, last_delta: self.last_delta })
        }
    }
}

/// Tail exponent of the front: `lambda_1(eps)`, or `lambda` when `eps = 0`.
pub fn tail_rate(p: f64, h: f64, eps: f64) -> Result<f64, FrontError> {
    if eps == 0.0 {
        Ok(real_root_lambda(p, h)?)
    } else {
        Ok(real_roots_eps(p, h, eps)?.0)
    }
}

/// Amplitude of the `e^{2 rate t}` term in the left tail of `x`, fitted from
/// the first sample and the one `span` samples later. Zero when the profile
/// does not start in the small-amplitude regime or is not yet close to a
/// pure exponential there.
fn second_order_amplitude(values: &[f64], dt: f64, rate: f64, span: usize) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if values.len() <= span || !(values[0] > 0.0 && values[0] <= 1e-4 * scale) {
        return 0.0;
    }
    let e1 = (rate * span as f64 * dt).exp();
    let second = (values[span] - values[0] * e1) / (e1 * e1 - e1);
    // in the asymptotic regime the correction is O(x[0]) relative; anything
    // larger means the tail has not settled on `rate` yet
    if second.abs() <= 1e-2 * values[0] {
        second
    } else {
        0.0
    }
}

/// Reads `x` at `t`, continuing left of the grid with the two-term tail
/// when the left limit is zero.
fn eval_with_tail(x: &Profile, t: f64, rate: f64, second: f64) -> f64 {
    if t < x.t0 && x.left_limit == 0.0 {
        let s = t - x.t0;
        return (x.values[0] - second) * (rate * s).exp() + second * (2.0 * rate * s).exp();
    }
    // realignment shifts are a fraction of a cell; extrapolate rather than
    // snap the last node to the limit
    if t > x.t_end() && t <= x.t_end() + x.dt {
        return x.interp(t);
    }
    x.eval(t)
}

fn integrand(g: &BirthFunction, x: &Profile) -> Profile {
    Profile {
        values: x.values.iter().map(|&v| g.eval(v)).collect(),
        left_limit: g.eval(x.left_limit),
        right_limit: g.eval(x.right_limit),
        ..x.clone()
    }
}

fn left_tail_for(y: &Profile, rate: f64, span: usize) -> LeftTail {
    if y.left_limit == 0.0 {
        LeftTail::ExponentialPair { rate, second: second_order_amplitude(&y.values, y.dt, rate, span) }
    } else {
        LeftTail::Constant
    }
}

/// Grid `[t_minus, t_plus]` with step `h/m` and a node at `t = 0`.
fn front_grid(seed: &Profile, kappa: f64, h: f64, opts: &FrontOptions) -> Result<(f64, f64, usize), FrontError> {
    let dt = h / opts.steps_per_delay as f64;
    let t_minus = match opts.t_minus {
        Some(t) => t,
        None => seed
            .times()
            .zip(&seed.values)
            .find(|(_, v)| **v >= 1e-8 * kappa)
            .map(|(t, _)| t)
            .unwrap_or(seed.t0),
    };
    let t_plus = match opts.t_plus {
        Some(t) => t,
        None => {
            let last_off = seed
                .times()
                .zip(&seed.values)
                .filter(|(_, v)| (**v - kappa).abs() > 1e-8)
                .map(|(t, _)| t)
                .last()
                .unwrap_or(seed.t0);
            last_off + 10.0 * h
        }
    };
    if !(t_minus < 0.0 && t_plus > 0.0) {
        return Err(FrontError::InvalidInput(format!("grid [{t_minus}, {t_plus}] must contain 0")));
    }
    let n_left = (-t_minus / dt).ceil() as usize;
    let n_right = (t_plus / dt).ceil() as usize;
    Ok((-(n_left as f64) * dt, dt, n_left + n_right + 1))
}

/// Default grid bounds derived from a seed, for sharing across solves.
pub fn grid_from_seed(seed: &Profile, kappa: f64, h: f64, opts: &FrontOptions) -> Result<(f64, f64), FrontError> {
    let (t0, dt, n) = front_grid(seed, kappa, h, opts)?;
    Ok((t0, t0 + (n - 1) as f64 * dt))
}

/// Damped fixed-point iteration of `x = I_eps g(x)` re-aligned to the
/// `zeta1/2` crossing after every step.
pub fn solve_front(
    g: &BirthFunction,
    h: f64,
    consts: &GConstants,
    c: f64,
    seed: &Profile,
    opts: &FrontOptions,
) -> Result<FrontReport, FrontError> {
    let params = WaveParams::from_speed(c)?;
    let p = g.p();
    let cm = c_min(p, opts.c_margin);
    if !opts.force && c < cm {
        return Err(FrontError::BelowMinimumSpeed { c, c_min: cm });
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(FrontError::InvalidInput(format!("damping {} outside (0, 1]", opts.damping)));
    }
    if !(opts.tol > 0.0) || opts.steps_per_delay < 4 {
        return Err(FrontError::InvalidInput("tol must be > 0 and steps_per_delay >= 4".into()));
    }
    let rate = tail_rate(p, h, params.eps)?;
    let kappa = consts.kappa;
    let level = consts.level();
    let (t0, dt, n) = front_grid(seed, kappa, h, opts)?;
    let times: Vec<f64> = (0..n).map(|i| t0 + i as f64 * dt).collect();
    let span = opts.steps_per_delay;
    let sample = |x: &Profile, shift: f64| -> Vec<f64> {
        let second = second_order_amplitude(&x.values, x.dt, rate, span);
        times.iter().map(|&t| eval_with_tail(x, t + shift, rate, second)).collect()
    };
    let mut x = Profile::raw(t0, dt, sample(seed, 0.0), seed.left_limit, seed.right_limit)?;

    let mut messages = Vec::new();
    let mut degenerate = None;
    if let Err(e) = x.first_crossing(level) {
        degenerate = Some(format!("degenerate: no crossing ({e})"));
    }
    let mut deltas: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut lost_positivity = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let y = integrand(g, &x);
        let tx = apply_i_eps_with_tail(&y, &params, h, left_tail_for(&y, rate, span))?;
        let w = opts.damping;
        let mixed: Vec<f64> = x.values.iter().zip(&tx.values).map(|(a, b)| (1.0 - w) * a + w * b).collect();
        let mut next = Profile::raw(t0, dt, mixed, x.left_limit, x.right_limit)?;
        if degenerate.is_none() {
            let tc = next.first_crossing(level)?;
            if tc != 0.0 {
                next = Profile::raw(t0, dt, sample(&next, tc), x.left_limit, x.right_limit)?;
            }
        }
        if !lost_positivity && next.min() <= -opts.tol {
            lost_positivity = true;
            messages.push(format!("lost positivity at iteration {iterations}"));
        }
        let delta = next.values.iter().zip(&x.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        deltas.push(delta);
        x = next;
        if !delta.is_finite() {
            break;
        }
        if delta <= opts.tol {
            converged = true;
            break;
        }
    }
    let last_delta = deltas.last().copied().unwrap_or(f64::INFINITY);
    let contraction = (deltas.len() >= 11).then(|| {
        let k = deltas.len();
        let a = deltas[k - 11].max(f64::MIN_POSITIVE);
        let b = deltas[k - 1].max(f64::MIN_POSITIVE);
        (b / a).powf(0.1)
    });
    if converged {
        if let Some(cf) = contraction {
            if cf >= 1.0 {
                converged = false;
                messages.push(format!("step ratio {cf} >= 1 over the last 10 iterations"));
            }
        }
    } else {
        messages.push(format!("not converged after {iterations} iterations"));
    }

    let y = integrand(g, &x);
    let tx = apply_i_eps_with_tail(&y, &params, h, left_tail_for(&y, rate, span))?;
    let residual_fix = x.values.iter().zip(&tx.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let profile = if x.left_limit == 0.0 { Profile::new(t0, dt, x.values, x.left_limit, x.right_limit)? } else { x };
    let residual_ode = residual_ode(&profile, g, h, params.eps)?;
    let positivity_ok = profile.values.iter().all(|&v| v > 0.0);
    let (tau, monotone_tail_ok) = shape_check(&profile, consts.a);
    let mut report = FrontReport {
        c,
        eps: params.eps,
        profile,
        residual_ode,
        residual_fix,
        positivity_ok,
        tau,
        monotone_tail_ok,
        tail: None,
        iterations,
        converged,
        last_delta,
        contraction,
        degenerate,
        messages,
    };
    if report.degenerate.is_none() && report.positivity_ok {
        match verify_asymptotics(&report, p, h, opts) {
            Ok(t) => report.tail = Some(t),
            Err(e) => report.messages.push(format!("tail fit: {e}")),
        }
    }
    Ok(report)
}

/// Unique up-crossing `tau` of `a` and whether the samples left of it
/// increase strictly.
fn shape_check(x: &Profile, a: f64) -> (Option<f64>, bool) {
    let crossings = x.values.windows(2).filter(|w| (w[0] < a) != (w[1] < a)).count();
    if crossings != 1 {
        return (None, false);
    }
    let tau = match x.first_crossing(a) {
        Ok(t) => t,
        Err(_) => return (None, false),
    };
    let k = x.times().take_while(|&t| t <= tau).count();
    let mono = x.values[..(k + 1).min(x.len())].windows(2).all(|w| w[1] > w[0]);
    (Some(tau), mono)
}

/// Residual of `eps^2 x'' - x' - x + g(x(t - h))` with fourth-order central
/// differences, over grid points whose stencil and delayed read lie inside
/// the grid.
pub fn residual_ode(x: &Profile, g: &BirthFunction, h: f64, eps: f64) -> Result<f64, FrontError> {
    let dt = x.dt;
    if eps * eps / (dt * dt) > 1e6 {
        return Err(FrontError::IllConditioned(eps * eps / (dt * dt)));
    }
    let v = &x.values;
    let n = v.len();
    let mut sup = 0.0f64;
    for i in 2..n.saturating_sub(2) {
        let t = x.t(i);
        if t - h < x.t0 {
            continue;
        }
        let d1 = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * dt);
        let d2 = (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * dt * dt);
        let delayed = x.interp(t - h);
        let r = eps * eps * d2 - d1 - v[i] + g.eval(delayed);
        sup = sup.max(r.abs());
    }
    Ok(sup)
}

/// Left-tail check: the fitted exponent must match `lambda_1(eps)` within 2%
/// and the remainder `x - B e^{lambda_1 t}` must decay at least at
/// `1.99 lambda (1 - slack)`.
pub fn verify_asymptotics(front: &FrontReport, p: f64, h: f64, opts: &FrontOptions) -> Result<TailCheck, FrontError> {
    let lambda1 = tail_rate(p, h, front.eps)?;
    let lambda = real_root_lambda(p, h)?;
    let x = &front.profile;
    let kappa = x.right_limit;
    let (lo, hi) = (opts.tail_lo * kappa, opts.tail_hi * kappa);
    let mut window = (f64::NAN, f64::NAN);
    for (t, &v) in x.times().zip(&x.values) {
        if v > hi {
            break;
        }
        if v >= lo {
            if window.0.is_nan() {
                window.0 = t;
            }
            window.1 = t;
        }
    }
    if window.0.is_nan() {
        return Err(FrontError::InvalidInput("left tail never enters the fit window".into()));
    }
    let fit = fit_tail_exponent(x, window, Some(RemainderWeight::new(lambda)))?;
    let rem = fit_remainder(x, lambda1, window)?;
    let required_rate = 1.99 * lambda * (1.0 - opts.slack);
    let exponent_ok = (fit.exponent - lambda1).abs() <= 0.02 * lambda1;
    let remainder_ok = rem.remainder_rate.is_none_or(|r| r >= required_rate);
    Ok(TailCheck { fit, lambda1_ref: lambda1, remainder_rate: rem.remainder_rate, required_rate, ok: exponent_ok && remainder_ok })
}

/// Weighted distance between two fronts at the same speed.
pub fn compare_fronts(a: &FrontReport, b: &FrontReport, mu: f64) -> Result<f64, FrontError> {
    if a.c != b.c {
        return Err(FrontError::MixedSpeeds(a.c, b.c));
    }
    Ok(profile_distance(&a.profile, &b.profile, mu)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub c: f64,
    pub max_sup: f64,
    pub max_weighted: f64,
    pub mu: f64,
    pub converged: Vec<bool>,
    pub fronts: Vec<FrontReport>,
}

/// Solves from every seed on a common grid and returns the largest pairwise
/// distances (sup norm and weight `0.9 lambda`) among converged fronts.
pub fn uniqueness_probe(
    g: &BirthFunction,
    h: f64,
    consts: &GConstants,
    c: f64,
    seeds: &[Profile],
    opts: &FrontOptions,
    exec: Exec,
) -> Result<ProbeReport, FrontError> {
    if seeds.len() < 2 {
        return Err(FrontError::InvalidInput("uniqueness probe needs at least 2 seeds".into()));
    }
    let (t_minus, t_plus) = grid_from_seed(&seeds[0], consts.kappa, h, opts)?;
    let shared = FrontOptions { t_minus: Some(t_minus), t_plus: Some(t_plus), ..*opts };
    let results = exec.map(seeds, |s| solve_front(g, h, consts, c, s, &shared));
    let mut fronts = Vec::new();
    for r in results {
        fronts.push(r?);
    }
    let converged: Vec<bool> = fronts.iter().map(|f| f.converged && f.degenerate.is_none()).collect();
    let good: Vec<&FrontReport> = fronts.iter().zip(&converged).filter(|(_, ok)| **ok).map(|(f, _)| f).collect();
    if good.len() < 2 {
        return Err(FrontError::TooFewConverged(good.len()));
    }
    let mu = 0.9 * real_root_lambda(g.p(), h)?;
    let (mut max_sup, mut max_weighted) = (0.0f64, 0.0f64);
    for i in 0..good.len() {
        for j in i + 1..good.len() {
            max_sup = max_sup.max(compare_fronts(good[i], good[j], 0.0)?);
            max_weighted = max_weighted.max(compare_fronts(good[i], good[j], mu)?);
        }
    }
    Ok(ProbeReport { c, max_sup, max_weighted, mu, converged, fronts })
}

/// `kappa / (1 + e^{-t})` on `[t0, t1]` with step `dt`.
pub fn smoothed_step(kappa: f64, t0: f64, t1: f64, dt: f64) -> Result<Profile, FrontError> {
    let n = ((t1 - t0) / dt).round() as usize + 1;
    Ok(Profile::from_fn(t0, dt, n, 0.0, kappa, |t| kappa / (1.0 + (-t).exp()))?)
}
