//! Roots of the characteristic quasi-polynomials
//!
//! ```text
//! chi(z) = eps^2 z^2 - z - 1 + p e^{-z h}
//! ```
//!
//! (`eps = 0` is the first-order symbol `-(z + 1 - p e^{-zh})`). Roots inside a
//! rectangle are counted with the argument principle and isolated by
//! recursive bisection of the rectangle; cells holding a single root are
//! polished with Newton's method.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::Exec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no sign change for {which} on [{lo}, {hi}]")]
    NoSignChange { which: &'static str, lo: f64, hi: f64 },
    #[error("contour through root near {at}")]
    ContourThroughRoot { at: Complex64 },
    #[error("winding number {value} is not close to an integer")]
    WindingNotInteger { value: f64 },
    #[error("resonant mu = {mu}: a root has real part {re}")]
    ResonantMu { mu: f64, re: f64 },
    #[error("subdivision failed: {0}")]
    SubdivisionFailed(String),
    #[error("strip [{re_min}, {re_max}] is too wide for the delay to evaluate without overflow")]
    StripTooWide { re_min: f64, re_max: f64 },
    #[error("strip holds about {estimate:.3e} roots (imaginary extent {im_max:.3e}); narrow it or move it right")]
    TooManyRoots { estimate: f64, im_max: f64 },
    #[error("csv: {0}")]
    Io(String),
}

/// Characteristic symbol `eps^2 z^2 - z - 1 + p e^{-zh}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiPolynomial {
    pub p: f64,
    pub h: f64,
    pub eps: f64,
}

impl QuasiPolynomial {
    /// `h = 0` is accepted and collapses the symbol to a polynomial.
    pub fn new(p: f64, h: f64, eps: f64) -> Result<Self, RootError> {
        if !(p.is_finite() && p > 1.0) {
            return Err(RootError::InvalidParameter(format!("p = {p} must exceed 1")));
        }
        if !(h.is_finite() && h >= 0.0) {
            return Err(RootError::InvalidParameter(format!("h = {h} must be >= 0")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(RootError::InvalidParameter(format!("eps = {eps} must be >= 0")));
        }
        Ok(QuasiPolynomial { p, h, eps })
    }

    pub fn chi(&self, z: Complex64) -> Complex64 {
        let e2 = self.eps * self.eps;
        e2 * z * z - z - 1.0 + self.p * (-z * self.h).exp()
    }

    pub fn dchi(&self, z: Complex64) -> Complex64 {
        let e2 = self.eps * self.eps;
        2.0 * e2 * z - 1.0 - self.p * self.h * (-z * self.h).exp()
    }

    /// Radius bound on roots with real part in `[re_min, re_max]`:
    /// every such root satisfies `|z| <= bound`.
    pub fn modulus_bound(&self, re_min: f64, re_max: f64) -> f64 {
        let big_p = self.p * (-re_min * self.h).exp();
        let e2 = self.eps * self.eps;
        // |z + 1 - eps^2 z^2| = p e^{-Re z h} <= P, and |eps^2 z - 1| >= 1 - eps^2 re_max
        let linear = if e2 * re_max < 1.0 {
            (1.0 + big_p) / (1.0 - e2 * re_max.max(0.0))
        } else {
            f64::INFINITY
        };
        let quadratic = if e2 > 0.0 {
            (1.0 + (1.0 + 4.0 * e2 * (1.0 + big_p)).sqrt()) / (2.0 * e2)
        } else {
            f64::INFINITY
        };
        linear.min(quadratic)
    }
}

/// Evaluates `chi`, or `chi(z) e^{zh}` far to the left where `e^{-zh}` would
/// overflow. Both have the same zeros and winding numbers.
#[derive(Debug, Clone, Copy)]
struct Evaluator {
    qp: QuasiPolynomial,
    scaled: bool,
}

impl Evaluator {
    fn for_strip(qp: QuasiPolynomial, re_min: f64, re_max: f64) -> Result<Self, RootError> {
        if re_min * qp.h > -600.0 {
            return Ok(Evaluator { qp, scaled: false });
        }
        if re_max * qp.h > 600.0 {
            return Err(RootError::StripTooWide { re_min, re_max });
        }
        Ok(Evaluator { qp, scaled: true })
    }

    fn f(&self, z: Complex64) -> Complex64 {
        if !self.scaled {
            return self.qp.chi(z);
        }
        let e2 = self.qp.eps * self.qp.eps;
        (e2 * z * z - z - 1.0) * (z * self.qp.h).exp() + self.qp.p
    }

    fn df(&self, z: Complex64) -> Complex64 {
        if !self.scaled {
            return self.qp.dchi(z);
        }
        let e2 = self.qp.eps * self.qp.eps;
        let ez = (z * self.qp.h).exp();
        (2.0 * e2 * z - 1.0) * ez + self.qp.h * (e2 * z * z - z - 1.0) * ez
    }

    /// Magnitude below which a contour sample counts as hitting a root.
    fn floor(&self, z: Complex64) -> f64 {
        let e2 = self.qp.eps * self.qp.eps;
        let scale = if self.scaled {
            (1.0 + z.norm() + e2 * z.norm_sqr()) * (z.re * self.qp.h).exp() + self.qp.p
        } else {
            1.0 + z.norm() + e2 * z.norm_sqr() + self.qp.p * (-z.re * self.qp.h).exp()
        };
        1e-13 * scale
    }

    fn sample(&self, z: Complex64) -> Result<Complex64, RootError> {
        let v = self.f(z);
        if v.norm() <= self.floor(z) || !v.re.is_finite() || !v.im.is_finite() {
            return Err(RootError::ContourThroughRoot { at: z });
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Strip {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.x0 - slack && z.re <= self.x1 + slack && z.im >= self.y0 - slack && z.im <= self.y1 + slack
    }

    fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

const PHASE_STEP: f64 = 0.35;
const MAX_DEPTH: u32 = 48;
/// Largest strip population attempted.
const MAX_ROOTS: f64 = 1e5;

fn segment_phase(
    ev: &Evaluator,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    depth: u32,
) -> Result<f64, RootError> {
    let r = fb / fa;
    let d = r.arg();
    let ratio = r.norm();
    if d.abs() < PHASE_STEP && (0.25..4.0).contains(&ratio) {
        return Ok(d);
    }
    if depth >= MAX_DEPTH {
        return Err(RootError::ContourThroughRoot { at: 0.5 * (za + zb) });
    }
    let zm = 0.5 * (za + zb);
    let fm = ev.sample(zm)?;
    Ok(segment_phase(ev, za, fa, zm, fm, depth + 1)? + segment_phase(ev, zm, fm, zb, fb, depth + 1)?)
}

fn edge_phase(ev: &Evaluator, a: Complex64, b: Complex64) -> Result<f64, RootError> {
    let len = (b - a).norm();
    let max_step = 0.25 / ev.qp.h.max(0.25);
    let pieces = ((len / max_step).ceil() as usize).max(8);
    let mut total = 0.0;
    let mut za = a;
    let mut fa = ev.sample(za)?;
    for k in 1..=pieces {
        let zb = a + (b - a) * (k as f64 / pieces as f64);
        let fb = ev.sample(zb)?;
        total += segment_phase(ev, za, fa, zb, fb, 0)?;
        za = zb;
        fa = fb;
    }
    Ok(total)
}

/// Argument-principle count of zeros inside `rect` (counter-clockwise walk).
fn winding(ev: &Evaluator, rect: &Rect) -> Result<usize, RootError> {
    let c = [
        Complex64::new(rect.x0, rect.y0),
        Complex64::new(rect.x1, rect.y0),
        Complex64::new(rect.x1, rect.y1),
        Complex64::new(rect.x0, rect.y1),
    ];
    let mut total = 0.0;
    for k in 0..4 {
        total += edge_phase(ev, c[k], c[(k + 1) % 4])?;
    }
    let w = total / (2.0 * PI);
    let n = w.round();
    if (w - n).abs() > 0.05 || n < 0.0 {
        return Err(RootError::WindingNotInteger { value: w });
    }
    Ok(n as usize)
}

fn newton(ev: &Evaluator, mut z: Complex64) -> Option<Complex64> {
    for _ in 0..80 {
        let step = ev.f(z) / ev.df(z);
        if !step.re.is_finite() || !step.im.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            // one extra step to settle rounding
            let s = ev.f(z) / ev.df(z);
            if s.re.is_finite() && s.im.is_finite() {
                z -= s;
            }
            return Some(z);
        }
    }
    None
}

/// Splits `rect` in two across its longer side, moving the cut off any root.
fn split(ev: &Evaluator, rect: &Rect, n: usize) -> Result<[(Rect, usize); 2], RootError> {
    let mut last = None;
    for frac in [0.5, 0.437, 0.563, 0.381, 0.619, 0.29, 0.71] {
        let (a, b) = if rect.x1 - rect.x0 >= rect.y1 - rect.y0 {
            let xm = rect.x0 + frac * (rect.x1 - rect.x0);
            (Rect { x1: xm, ..*rect }, Rect { x0: xm, ..*rect })
        } else {
            let ym = rect.y0 + frac * (rect.y1 - rect.y0);
            (Rect { y1: ym, ..*rect }, Rect { y0: ym, ..*rect })
        };
        match (winding(ev, &a), winding(ev, &b)) {
            (Ok(na), Ok(nb)) if na + nb == n => return Ok([(a, na), (b, nb)]),
            (Ok(na), Ok(nb)) => {
                last = Some(RootError::SubdivisionFailed(format!("children count {na} + {nb} != {n}")))
            }
            (Err(e), _) | (_, Err(e)) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

fn isolate(
    ev: &Evaluator,
    rect: Rect,
    n: usize,
    depth: u32,
    exec: Exec,
) -> Result<Vec<Complex64>, RootError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        if let Some(z) = newton(ev, rect.center()) {
            if rect.contains(z, 1e-9 * (1.0 + rect.size())) {
                return Ok(vec![z]);
            }
        }
    }
    if depth > 200 || rect.size() < 1e-11 * (1.0 + rect.center().norm()) {
        return Err(RootError::SubdivisionFailed(format!(
            "{n} roots left in a cell of size {:e} near {}",
            rect.size(),
            rect.center()
        )));
    }
    let [(a, na), (b, nb)] = split(ev, &rect, n)?;
    let (ra, rb) = exec.join(
        || isolate(ev, a, na, depth + 1, exec),
        || isolate(ev, b, nb, depth + 1, exec),
    );
    let mut out = ra?;
    out.extend(rb?);
    Ok(out)
}

/// Certified set of roots inside a vertical strip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharRootSet {
    pub qp: QuasiPolynomial,
    pub roots: Vec<Complex64>,
    pub strip: Strip,
    pub count_by_argument_principle: usize,
    pub abs_chi: Vec<f64>,
    pub abs_dchi: Vec<f64>,
    pub simple: Vec<bool>,
}

impl CharRootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// CSV with header `re,im,abs_chi,abs_dchi`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), RootError> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| RootError::Io(e.to_string());
        out.write_record(["re", "im", "abs_chi", "abs_dchi"]).map_err(io)?;
        for (i, z) in self.roots.iter().enumerate() {
            out.write_record([
                format!("{:.16e}", z.re),
                format!("{:.16e}", z.im),
                format!("{:.16e}", self.abs_chi[i]),
                format!("{:.16e}", self.abs_dchi[i]),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| RootError::Io(e.to_string()))
    }
}

fn enumerate_rect(
    qp: QuasiPolynomial,
    rect: Rect,
    exec: Exec,
) -> Result<(Vec<Complex64>, usize), RootError> {
    let ev = Evaluator::for_strip(qp, rect.x0, rect.x1)?;
    let n = winding(&ev, &rect)?;
    let mut roots = isolate(&ev, rect, n, 0, exec)?;
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let mut uniq: Vec<Complex64> = Vec::with_capacity(roots.len());
    for z in roots {
        if !uniq.iter().any(|u| (u - z).norm() <= 1e-9 * (1.0 + z.norm())) {
            uniq.push(z);
        }
    }
    if uniq.len() != n {
        return Err(RootError::SubdivisionFailed(format!(
            "winding number {n} but {} distinct roots polished",
            uniq.len()
        )));
    }
    Ok((uniq, n))
}

fn finish(qp: QuasiPolynomial, roots: Vec<Complex64>, strip: Strip, n: usize) -> CharRootSet {
    let abs_chi: Vec<f64> = roots.iter().map(|&z| qp.chi(z).norm()).collect();
    let abs_dchi: Vec<f64> = roots.iter().map(|&z| qp.dchi(z).norm()).collect();
    let simple = abs_dchi.iter().map(|&d| d > 1e-8).collect();
    CharRootSet { qp, roots, strip, count_by_argument_principle: n, abs_chi, abs_dchi, simple }
}

fn strip_rect(qp: &QuasiPolynomial, re_min: f64, re_max: f64) -> (Rect, f64) {
    let bound = qp.modulus_bound(re_min, re_max);
    let im_max = bound * (1.0 + 1e-3) + 1.0;
    (Rect { x0: re_min, x1: re_max, y0: -im_max, y1: im_max }, im_max)
}

/// All roots with `re_min <= Re z <= re_max`. When a strip edge passes
/// through a root, both edges are pushed outward slightly (up to 5 times);
/// the strip actually used is recorded in the result.
pub fn roots_in_strip(
    qp: &QuasiPolynomial,
    re_min: f64,
    re_max: f64,
    exec: Exec,
) -> Result<CharRootSet, RootError> {
    if !(re_min < re_max) {
        return Err(RootError::InvalidParameter(format!(
            "empty strip [{re_min}, {re_max}]"
        )));
    }
    let (mut lo, mut hi) = (re_min, re_max);
    let mut last = None;
    for attempt in 0..=5 {
        if attempt > 0 {
            let nudge = 1e-7 * attempt as f64;
            lo = re_min - nudge * (1.0 + re_min.abs());
            hi = re_max + nudge * (1.0 + re_max.abs());
        }
        let (rect, im_max) = strip_rect(qp, lo, hi);
        // roots of the delay term are spaced about 2 pi / h apart vertically
        let estimate = im_max * qp.h / PI;
        if !(estimate <= MAX_ROOTS) {
            return Err(RootError::TooManyRoots { estimate, im_max });
        }
        match enumerate_rect(*qp, rect, exec) {
            Ok((roots, n)) => {
                let strip = Strip { re_min: lo, re_max: hi, im_max };
                return Ok(finish(*qp, roots, strip, n));
            }
            Err(e @ RootError::ContourThroughRoot { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

/// Roots of the second-order symbol in the half-plane `Re z > 2(p - 1)`.
pub fn roots_right_half_plane(qp: &QuasiPolynomial, exec: Exec) -> Result<CharRootSet, RootError> {
    if qp.eps <= 0.0 {
        return Err(RootError::InvalidParameter("half-plane count needs eps > 0".into()));
    }
    let lo = 2.0 * (qp.p - 1.0);
    let hi = qp.modulus_bound(lo, f64::INFINITY) + 1.0;
    roots_in_strip(qp, lo, hi, exec)
}

/// Solves `f = 0` on a sign-changing bracket by Newton steps safeguarded with
/// bisection.
fn solve_bracketed<F, D>(f: F, df: D, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let flo = f(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..300 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (flo < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let mut next = x - fx / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1e-300) || hi - lo <= 2.0 * f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// The unique real root of `z = -1 + p e^{-zh}`, which lies in `(0, p - 1)`.
pub fn real_root_lambda(p: f64, h: f64) -> Result<f64, RootError> {
    if !(p.is_finite() && p > 1.0) {
        return Err(RootError::InvalidParameter(format!("p = {p} must exceed 1")));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(RootError::InvalidParameter(format!("h = {h} must be > 0")));
    }
    let f = |z: f64| z + 1.0 - p * (-z * h).exp();
    let df = |z: f64| 1.0 + p * h * (-z * h).exp();
    Ok(solve_bracketed(f, df, 0.0, p - 1.0))
}

/// Largest `eps` for which the second-order symbol has two real roots.
pub fn eps_max(p: f64) -> f64 {
    1.0 / (2.0 * (p - 1.0).sqrt())
}

/// The two real roots `(lambda_1(eps), lambda_inf(eps))`, located in
/// `(lambda, 2(p-1))` and `(eps^-2 - 2(p-1), eps^-2 + 1)` respectively.
pub fn real_roots_eps(p: f64, h: f64, eps: f64) -> Result<(f64, f64), RootError> {
    let lambda = real_root_lambda(p, h)?;
    if !(eps > 0.0 && eps < eps_max(p)) {
        return Err(RootError::InvalidParameter(format!(
            "eps = {eps} outside (0, {})",
            eps_max(p)
        )));
    }
    let e2 = eps * eps;
    // factored so the two large terms near eps^-2 do not cancel
    let f = |z: f64| z * (e2 * z - 1.0) - 1.0 + p * (-z * h).exp();
    let df = |z: f64| 2.0 * e2 * z - 1.0 - p * h * (-z * h).exp();
    let bracket = |which, lo: f64, hi: f64| {
        if f(lo) * f(hi) < 0.0 {
            Ok(solve_bracketed(f, df, lo, hi))
        } else {
            Err(RootError::NoSignChange { which, lo, hi })
        }
    };
    let l1 = bracket("lambda_1", lambda, 2.0 * (p - 1.0))?;
    let linf = bracket("lambda_inf", 1.0 / e2 - 2.0 * (p - 1.0), 1.0 / e2 + 1.0)?;
    Ok((l1, linf))
}

/// `d(mu)`: the number of roots of the first-order symbol with `Re z > mu`.
pub fn count_d(mu: f64, p: f64, h: f64, exec: Exec) -> Result<usize, RootError> {
    if !(mu >= 0.0) {
        return Err(RootError::InvalidParameter(format!("mu = {mu} must be >= 0")));
    }
    let qp = QuasiPolynomial::new(p, h, 0.0)?;
    let hi = p;
    if mu >= hi {
        return Ok(0);
    }
    let (rect, _) = strip_rect(&qp, mu, hi);
    let (roots, n) = match enumerate_rect(qp, rect, exec) {
        Ok(r) => r,
        Err(RootError::ContourThroughRoot { at }) if (at.re - mu).abs() < 1e-12 * (1.0 + mu) => {
            return Err(RootError::ResonantMu { mu, re: at.re })
        }
        Err(e) => return Err(e),
    };
    if let Some(z) = roots.iter().find(|z| (z.re - mu).abs() <= 1e-9 * (1.0 + mu)) {
        return Err(RootError::ResonantMu { mu, re: z.re });
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect_oracle(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if (f(m) < 0.0) == (f(lo) < 0.0) {
                lo = m
            } else {
                hi = m
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn chi_direct_values() {
        let qp = QuasiPolynomial::new(2.0, 1.0, 0.0).unwrap();
        assert_eq!(qp.chi(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        let qp0 = QuasiPolynomial::new(2.0, 0.0, 0.0).unwrap();
        assert_eq!(qp0.chi(Complex64::new(1.0, 0.0)).norm(), 0.0);
        let oracle = bisect_oracle(|z| z + 1.0 - 2.0 * (-z).exp(), 0.0, 1.0);
        assert!((oracle - 0.3748).abs() < 1e-4);
        assert!(qp.chi(Complex64::new(oracle, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn lambda_matches_bisection_oracle() {
        let lam = real_root_lambda(2.0, 1.0).unwrap();
        let oracle = bisect_oracle(|z| z + 1.0 - 2.0 * (-z).exp(), 0.37, 0.38);
        assert!((lam - oracle).abs() < 1e-13);
        let lam = real_root_lambda(2.0, 1e-9).unwrap();
        assert!((lam - 1.0).abs() < 1e-6);
        let e = std::f64::consts::E;
        let lam = real_root_lambda(e, 1.0).unwrap();
        assert!(lam > 0.0 && lam < e - 1.0);
        assert!((lam + 1.0 - (1.0 - lam).exp()).abs() < 1e-13);
    }

    #[test]
    fn lambda_rejects_bad_inputs() {
        assert!(real_root_lambda(1.0, 1.0).is_err());
        assert!(real_root_lambda(2.0, 0.0).is_err());
        assert!(real_roots_eps(2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn eps_roots_inside_brackets() {
        let lam = real_root_lambda(2.0, 1.0).unwrap();
        let (l1, linf) = real_roots_eps(2.0, 1.0, 0.1).unwrap();
        assert!(lam < l1 && l1 < 2.0);
        assert!(98.0 < linf && linf < 101.0);
        let (l1, _) = real_roots_eps(2.0, 1.0, 0.24).unwrap();
        assert!(lam < l1 && l1 < 2.0);
        let (l1, _) = real_roots_eps(2.0, 1.0, 1e-4).unwrap();
        assert!((l1 - lam).abs() < 1e-7);
    }

    #[test]
    fn strip_with_only_lambda() {
        let qp = QuasiPolynomial::new(2.0, 1.0, 0.0).unwrap();
        let set = roots_in_strip(&qp, 0.1, 2.0, Exec::default()).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.count_by_argument_principle, 1);
        let lam = real_root_lambda(2.0, 1.0).unwrap();
        assert!((set.roots[0].re - lam).abs() < 1e-12);
        assert!(set.roots[0].im.abs() < 1e-12);
    }

    #[test]
    fn wide_strip_counts_match_and_are_conjugate_closed() {
        let qp = QuasiPolynomial::new(2.0, 1.0, 0.0).unwrap();
        let set = roots_in_strip(&qp, -3.0, 2.0, Exec::default()).unwrap();
        assert_eq!(set.len(), set.count_by_argument_principle);
        assert!(set.len() > 3);
        for (i, z) in set.roots.iter().enumerate() {
            assert!(set.abs_chi[i] <= 1e-10 * (1.0 + z.norm_sqr()));
            assert!(set.simple[i]);
            assert!(set.roots.iter().any(|w| (w - z.conj()).norm() < 1e-10));
        }
    }

    #[test]
    fn half_plane_holds_only_lambda_inf() {
        let qp = QuasiPolynomial::new(2.0, 1.0, 0.1).unwrap();
        let set = roots_right_half_plane(&qp, Exec::default()).unwrap();
        assert_eq!(set.len(), 1);
        let (_, linf) = real_roots_eps(2.0, 1.0, 0.1).unwrap();
        assert!((set.roots[0].re - linf).abs() < 1e-9 * linf);
    }

    #[test]
    fn d_of_mu() {
        let lam = real_root_lambda(2.0, 1.0).unwrap();
        assert_eq!(count_d(lam - 0.01, 2.0, 1.0, Exec::default()).unwrap(), 1);
        assert_eq!(count_d(lam + 0.01, 2.0, 1.0, Exec::default()).unwrap(), 0);
        let d0 = count_d(0.0, 2.0, 1.0, Exec::default()).unwrap();
        assert_eq!(d0 % 2, 1);
        assert!(matches!(
            count_d(lam, 2.0, 1.0, Exec::default()),
            Err(RootError::ResonantMu { .. })
        ));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let qp = QuasiPolynomial::new(2.0, 1.0, 0.0).unwrap();
        let set = roots_in_strip(&qp, -3.0, 2.0, Exec::Sequential).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("re,im,abs_chi,abs_dchi"));
        assert_eq!(lines.count(), set.len());
    }
}
