//! The delay equation `x'(t) = -x(t) + g(x(t - h))` and its heteroclinic
//! connection from 0 to the positive equilibrium.
//!
//! Integration is classical RK4 by the method of steps. The step divides the
//! delay exactly, so delayed reads at full steps land on stored samples; the
//! half-step reads use cubic Hermite interpolation of the stored solution and
//! its derivative.

use serde::Serialize;
use thiserror::Error;

use crate::charroots::{real_root_lambda, RootError};
use crate::model::{BirthFunction, GConstants};
use crate::profiles::{Profile, ProfileError};
use crate::Exec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("blow-up: |x({t})| = {x} exceeds {limit}")]
    BlowUp { t: f64, x: f64, limit: f64 },
    #[error("no convergence to kappa by t = {t_max}")]
    NoConvergence { t_max: f64 },
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

enum Control {
    Continue,
    Stop,
}

/// Samples and derivatives of a method-of-steps run on `t0 + k dt`.
struct Steps {
    t0: f64,
    dt: f64,
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl Steps {
    fn read<H: Fn(f64) -> f64>(&self, tau: f64, hist: &H) -> f64 {
        let s = (tau - self.t0) / self.dt;
        if s <= 1e-9 {
            return hist(tau.min(self.t0));
        }
        let k = s.floor() as usize;
        let u = s - k as f64;
        if u <= 1e-9 || k + 1 >= self.xs.len() {
            return self.xs[k.min(self.xs.len() - 1)];
        }
        let (x0, x1, f0, f1) = (self.xs[k], self.xs[k + 1], self.fs[k], self.fs[k + 1]);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * x0
            + (u3 - 2.0 * u2 + u) * self.dt * f0
            + (-2.0 * u3 + 3.0 * u2) * x1
            + (u3 - u2) * self.dt * f1
    }
}

/// Integrates `x' = rhs(t, x(t), x(t - h))` from `t0` with `m` steps per
/// delay. `hist` gives the solution for `t <= t0`. `control` sees each new
/// sample and may stop the run.
fn integrate<R, H, C>(
    rhs: R,
    hist: H,
    t0: f64,
    h: f64,
    m: usize,
    max_steps: usize,
    mut control: C,
) -> Result<Steps, DdeError>
where
    R: Fn(f64, f64, f64) -> f64,
    H: Fn(f64) -> f64,
    C: FnMut(usize, f64, f64) -> Result<Control, DdeError>,
{
    let dt = h / m as f64;
    let x0 = hist(t0);
    let mut st = Steps { t0, dt, xs: vec![x0], fs: Vec::new() };
    st.fs.push(rhs(t0, x0, hist(t0 - h)));
    for n in 0..max_steps {
        let t = t0 + n as f64 * dt;
        let x = st.xs[n];
        let k1 = st.fs[n];
        // reads at t + dt/2 - h and t + dt - h lie strictly in the past
        let dmid = st.read(t + 0.5 * dt - h, &hist);
        let dend = st.read(t + dt - h, &hist);
        let k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1, dmid);
        let k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2, dmid);
        let k4 = rhs(t + dt, x + dt * k3, dend);
        let xn = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        st.xs.push(xn);
        let fnew = rhs(t + dt, xn, dend);
        st.fs.push(fnew);
        if let Control::Stop = control(n + 1, t + dt, xn)? {
            break;
        }
    }
    Ok(st)
}

fn steps_per_delay(h: f64, dt: f64) -> Result<usize, DdeError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(DdeError::InvalidInput(format!("delay h = {h} must be > 0")));
    }
    if !(dt.is_finite() && dt > 0.0 && dt <= h / 8.0 * (1.0 + 1e-12)) {
        return Err(DdeError::InvalidInput(format!("dt = {dt} must lie in (0, h/8]")));
    }
    Ok((h / dt - 1e-9).ceil() as usize)
}

/// One forward simulation of `x' = -x + g(x(t - h))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DdeRun {
    pub history: Profile,
    pub trajectory: Profile,
    /// Step actually used (`h` divided by an integer).
    pub step: f64,
    pub interpolation_order: u32,
    /// Sup difference at common samples between this run and one at half
    /// the step.
    pub halving_error: f64,
}

fn blowup_limit(g: &BirthFunction, history: &Profile) -> f64 {
    let b = g.bound();
    let b = if b.is_finite() { b } else { 1e100 };
    10.0 * b.max(history.max_abs())
}

fn simulate_fixed(
    g: &BirthFunction,
    h: f64,
    history: &Profile,
    t_end: f64,
    m: usize,
    limit: f64,
) -> Result<Vec<f64>, DdeError> {
    let dt = h / m as f64;
    let n = (t_end / dt).round().max(1.0) as usize;
    let hist = |t: f64| history.interp(t.clamp(-h, 0.0));
    let st = integrate(
        |_, x, xd| -x + g.eval(xd),
        hist,
        0.0,
        h,
        m,
        n,
        |_, t, x| {
            if !(x.abs() <= limit) {
                return Err(DdeError::BlowUp { t, x, limit });
            }
            Ok(Control::Continue)
        },
    )?;
    Ok(st.xs)
}

/// Simulates from `history` on `[-h, 0]` up to time `t_end`. The step is
/// reduced so that it divides `h`.
pub fn dde_simulate(
    g: &BirthFunction,
    h: f64,
    history: &Profile,
    t_end: f64,
    dt: f64,
) -> Result<DdeRun, DdeError> {
    let m = steps_per_delay(h, dt)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(DdeError::InvalidInput(format!("T = {t_end} must be > 0")));
    }
    let tol = 1e-9 * h;
    if history.t0 > -h + tol || history.t_end() < -tol {
        return Err(DdeError::InvalidInput(format!(
            "history covers [{}, {}], need [-h, 0]",
            history.t0,
            history.t_end()
        )));
    }
    let limit = blowup_limit(g, history);
    let coarse = simulate_fixed(g, h, history, t_end, m, limit)?;
    let fine = simulate_fixed(g, h, history, t_end, 2 * m, limit)?;
    let halving_error = coarse
        .iter()
        .enumerate()
        .map(|(k, x)| (x - fine[2 * k]).abs())
        .fold(0.0, f64::max);
    let step = h / m as f64;
    let last = *coarse.last().unwrap();
    let trajectory = Profile::raw(0.0, step, coarse, history.interp(0.0), last)?;
    Ok(DdeRun { history: history.clone(), trajectory, step, interpolation_order: 3, halving_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeteroclinicOptions {
    /// Seed amplitude relative to kappa.
    pub seed_amplitude: f64,
    pub steps_per_delay: usize,
    /// Convergence tolerance for `|x - kappa|`.
    pub tol: f64,
    /// Length of the trailing window (in delays) that must stay within `tol`.
    pub settle_delays: f64,
    /// Give up after this much time past the seed.
    pub t_max: f64,
    /// Moves the seed interval right by this amount (translation checks).
    pub seed_shift: f64,
    /// The analytic left tail is extended down to `floor * kappa`.
    pub tail_floor: f64,
}

impl Default for HeteroclinicOptions {
    fn default() -> Self {
        HeteroclinicOptions {
            seed_amplitude: 1e-8,
            steps_per_delay: 64,
            tol: 1e-8,
            settle_delays: 5.0,
            t_max: 5000.0,
            seed_shift: 0.0,
            tail_floor: 1e-14,
        }
    }
}

/// Aligned heteroclinic connection with its run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heteroclinic {
    pub profile: Profile,
    pub lambda: f64,
    /// Tail amplitude: `psi(t) ~ B e^{lambda t}` as `t -> -inf`.
    #[serde(rename = "B")]
    pub b: f64,
    /// Alignment shift applied to the integration clock.
    pub shift: f64,
    pub level: f64,
    pub kappa: f64,
    pub step: f64,
    pub seed_amplitude: f64,
    /// First aligned time of integrated (not analytic) data.
    pub seed_time: f64,
    pub monotone_below_a: bool,
    pub messages: Vec<String>,
}

/// Integrates from the unstable-manifold seed `e^{lambda t}` until the
/// solution settles at kappa, then translates it so the first crossing of
/// `zeta1 / 2` is at `t = 0`.
pub fn solve_heteroclinic(
    g: &BirthFunction,
    h: f64,
    consts: &GConstants,
    opts: &HeteroclinicOptions,
) -> Result<Heteroclinic, DdeError> {
    if opts.steps_per_delay < 8 {
        return Err(DdeError::InvalidInput("steps_per_delay must be >= 8".into()));
    }
    if !(opts.seed_amplitude > 0.0 && opts.seed_amplitude < 1e-2) {
        return Err(DdeError::InvalidInput(format!("seed amplitude {} outside (0, 1e-2)", opts.seed_amplitude)));
    }
    let kappa = consts.kappa;
    let lambda = real_root_lambda(g.p(), h)?;
    let m = opts.steps_per_delay;
    let dt = h / m as f64;
    let t_seed = (opts.seed_amplitude * kappa).ln() / lambda + opts.seed_shift;
    let settle = (opts.settle_delays * m as f64).ceil() as usize;
    let max_steps = (opts.t_max / dt).ceil() as usize;
    let limit = blowup_limit(g, &Profile::raw(0.0, 1.0, vec![kappa, kappa], 0.0, kappa)?);
    let mut run_in = 0usize;
    let mut settled = false;
    let st = integrate(
        |_, x, xd| -x + g.eval(xd),
        |t: f64| (lambda * t).exp(),
        t_seed,
        h,
        m,
        max_steps,
        |_, t, x| {
            if !(x.abs() <= limit) {
                return Err(DdeError::BlowUp { t, x, limit });
            }
            if (x - kappa).abs() <= opts.tol {
                run_in += 1;
            } else {
                run_in = 0;
            }
            if run_in >= settle {
                settled = true;
                return Ok(Control::Stop);
            }
            Ok(Control::Continue)
        },
    )?;
    if !settled {
        return Err(DdeError::NoConvergence { t_max: t_seed + opts.t_max });
    }
    let integrated = Profile::raw(t_seed, dt, st.xs, 0.0, kappa)?;
    let level = consts.level();
    let tc = integrated.first_crossing(level)?;
    // psi(t) = x(t + tc); on the seed interval x = e^{lambda t}
    let b = (lambda * tc).exp();
    let seed_time = t_seed - tc;
    let t_floor = (opts.tail_floor * kappa / b).ln() / lambda;
    let n_tail = ((seed_time - t_floor) / dt).ceil().max(0.0) as usize;
    let t0 = seed_time - n_tail as f64 * dt;
    let mut values: Vec<f64> = (0..n_tail).map(|i| b * (lambda * (t0 + i as f64 * dt)).exp()).collect();
    values.extend_from_slice(&integrated.values);
    let profile = Profile::new(t0, dt, values, 0.0, kappa)?;

    let mut messages = Vec::new();
    let below: Vec<f64> = profile.values.iter().copied().take_while(|&v| v < consts.a).collect();
    let monotone_below_a = below.windows(2).all(|w| w[1] > w[0]);
    if !monotone_below_a {
        messages.push(format!("non-monotone below A = {}", consts.a));
    }
    Ok(Heteroclinic {
        profile,
        lambda,
        b,
        shift: -tc,
        level,
        kappa,
        step: dt,
        seed_amplitude: opts.seed_amplitude,
        seed_time,
        monotone_below_a,
        messages,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationalReport {
    pub decayed: bool,
    pub sup_initial: f64,
    pub sup_final: f64,
    pub t_end: f64,
}

/// Integrates `phi' = -phi + g'(psi(t - h)) phi(t - h)` from the history
/// `phi0` on `[-h, 0]` to `t = 20h` and checks that `sup |phi|` over the last
/// `5h` fell below `1e-3 sup |phi0|`.
pub fn variational_decay_check(
    g: &BirthFunction,
    h: f64,
    psi: &Profile,
    phi0: &Profile,
) -> Result<VariationalReport, DdeError> {
    let m = 64;
    let t_end = 20.0 * h;
    let hist = |t: f64| phi0.interp(t.clamp(-h, 0.0));
    let st = integrate(
        |t, x, xd| -x + g.d1(psi.eval(t - h)) * xd,
        hist,
        0.0,
        h,
        m,
        20 * m,
        |_, _, _| Ok(Control::Continue),
    )?;
    let sup_initial = phi0
        .times()
        .zip(&phi0.values)
        .filter(|(t, _)| *t >= -h - 1e-12 && *t <= 1e-12)
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let sup_final = st.xs[15 * m..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(VariationalReport {
        decayed: sup_final <= 1e-3 * sup_initial || sup_initial == 0.0,
        sup_initial,
        sup_final,
        t_end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PersistenceResult {
    pub initial: f64,
    pub liminf: f64,
    pub limsup: f64,
    pub in_band: bool,
}

/// Runs constant histories for `t_end` and records the range over the
/// final 20% against `[zeta1 - slack, zeta2 + slack]`.
#[allow(clippy::too_many_arguments)]
pub fn persistence_batch(
    g: &BirthFunction,
    h: f64,
    consts: &GConstants,
    initials: &[f64],
    t_end: f64,
    dt: f64,
    slack: f64,
    exec: Exec,
) -> Result<Vec<PersistenceResult>, DdeError> {
    let m = steps_per_delay(h, dt)?;
    let results = exec.map(initials, |&c0| -> Result<PersistenceResult, DdeError> {
        let history = Profile::raw(-h, h, vec![c0, c0], c0, c0)?;
        let xs = simulate_fixed(g, h, &history, t_end, m, blowup_limit(g, &history))?;
        let tail = &xs[(xs.len() * 4) / 5..];
        let liminf = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let limsup = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let in_band = liminf >= consts.zeta1 - slack && limsup <= consts.zeta2 + slack;
        Ok(PersistenceResult { initial: c0, liminf, limsup, in_band })
    });
    results.into_iter().collect()
}
