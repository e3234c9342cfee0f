//! Sampled certification of the hypotheses on `g`.
//!
//! Checks are evaluated on a uniform grid over `[0, scan_max]`; nothing here
//! is interval-rigorous. The grid and tolerances used are recorded in every
//! certificate.

use serde::Serialize;

use super::{schwarzian_with_tol, BirthFunction, ModelError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Samples per unit length (at least 1000).
    pub grid_density: f64,
    /// Right end of the scan; defaults to `max(5, 1.05 sup|g|)`. No fixed
    /// point can lie beyond `sup |g|`.
    pub scan_max: Option<f64>,
    /// Absolute tolerance for equality tests.
    pub tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { grid_density: 2000.0, scan_max: None, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GConstants {
    pub p: f64,
    pub kappa: f64,
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    #[serde(rename = "xM", skip_serializing_if = "Option::is_none")]
    pub x_m: Option<f64>,
}

impl GConstants {
    /// Normalization level `zeta1 / 2` used to pin translations.
    pub fn level(&self) -> f64 {
        0.5 * self.zeta1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseCheck {
    pub clause: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GCertificate {
    pub constants: GConstants,
    pub ok: bool,
    pub clauses: Vec<ClauseCheck>,
    pub critical_points: Vec<f64>,
    pub grid_density: f64,
    pub scan_max: f64,
    pub tol: f64,
}

impl GCertificate {
    pub fn first_violation(&self) -> Option<&ClauseCheck> {
        self.clauses.iter().find(|c| !c.ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HBranch {
    /// `Gamma = g'(kappa)` lies in `[0, 1]`.
    Gamma01,
    /// `Gamma < 0`; the delay inequality decides.
    GammaNeg,
    /// `Gamma > 1`: no sufficient condition applies.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    #[serde(rename = "G_ok")]
    pub g_ok: bool,
    #[serde(rename = "H_ok")]
    pub h_ok: bool,
    pub branch: HBranch,
    pub branch_ok: bool,
    pub schwarzian_ok: bool,
    pub delay: f64,
    pub constants: GConstants,
    pub messages: Vec<String>,
    pub grid_density: f64,
    pub scan_max: f64,
    pub tol: f64,
}

impl HypothesisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `Gamma < 0` and `e^{-h} > -Gamma ln((Gamma^2 - Gamma) / (Gamma^2 + 1))`.
pub fn delay_stability_holds(gamma: f64, h: f64) -> bool {
    gamma < 0.0 && (-h).exp() > delay_stability_rhs(gamma)
}

fn delay_stability_rhs(gamma: f64) -> f64 {
    -gamma * ((gamma * gamma - gamma) / (gamma * gamma + 1.0)).ln()
}

/// Largest delay for which the `Gamma < 0` inequality holds (infinite when
/// it holds for every delay).
pub fn delay_threshold(gamma: f64) -> f64 {
    let rhs = delay_stability_rhs(gamma);
    if rhs <= 0.0 {
        f64::INFINITY
    } else {
        -rhs.ln()
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

fn clause(clauses: &mut Vec<ClauseCheck>, name: &str, ok: bool, detail: String) {
    clauses.push(ClauseCheck { clause: name.to_string(), ok, detail });
}

/// Certifies the constants of the standing hypothesis on `g` on a sample grid.
pub fn certify_g(g: &BirthFunction, opts: &CertifyOptions) -> Result<GCertificate, ModelError> {
    if !(opts.grid_density >= 1000.0) {
        return Err(ModelError::InvalidParameter(format!(
            "grid_density = {} must be at least 1000 samples per unit",
            opts.grid_density
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(ModelError::InvalidParameter("tol must be positive".into()));
    }
    let tol = opts.tol;
    let scan_max = opts.scan_max.unwrap_or_else(|| {
        let b = g.bound();
        if b.is_finite() {
            (1.05 * b).max(5.0)
        } else {
            10.0
        }
    });
    let n = (scan_max * opts.grid_density).ceil() as usize;
    let dx = scan_max / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 * dx).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g.eval(x)).collect();
    let ds: Vec<f64> = xs.iter().map(|&x| g.d1(x)).collect();

    // positive fixed points
    let f = |i: usize| gs[i] - xs[i];
    let mut run = 0;
    #[allow(clippy::needless_range_loop)]
    for i in 1..=n {
        if f(i).abs() <= tol * (1.0 + xs[i]) {
            run += 1;
            if run >= 3 {
                return Err(ModelError::NoIsolatedFixedPoint { near: xs[i] });
            }
        } else {
            run = 0;
        }
    }
    let mut fixed: Vec<f64> = Vec::new();
    for i in 1..n {
        let root = if f(i) == 0.0 {
            Some(xs[i])
        } else if f(i) * f(i + 1) < 0.0 {
            Some(bisect(|x| g.eval(x) - x, xs[i], xs[i + 1]))
        } else {
            None
        };
        if let Some(r) = root {
            if fixed.last().is_none_or(|&l| r - l > 2.0 * dx) {
                fixed.push(r);
            }
        }
    }
    if f(n) == 0.0 && fixed.last().is_none_or(|&l| xs[n] - l > 2.0 * dx) {
        fixed.push(xs[n]);
    }
    let kappa = match fixed.len() {
        0 => return Err(ModelError::NoPositiveFixedPoint { scan_max }),
        1 => fixed[0],
        _ => return Err(ModelError::MultipleFixedPoints(fixed)),
    };

    let p = g.p();
    let gamma = g.d1(kappa);

    // critical points of g on the scan range
    let mut critical_points = Vec::new();
    let mut single_max = true;
    for i in 0..n {
        if ds[i] > 0.0 && ds[i + 1] <= 0.0 || ds[i] < 0.0 && ds[i + 1] >= 0.0 {
            if ds[i] < 0.0 {
                single_max = false;
            }
            let c = if ds[i + 1] == 0.0 { xs[i + 1] } else { bisect(|x| g.d1(x), xs[i], xs[i + 1]) };
            if critical_points.last().is_none_or(|&l: &f64| c - l > 2.0 * dx) {
                critical_points.push(c);
            }
        }
    }
    let x_m = (critical_points.len() == 1 && single_max).then(|| critical_points[0]);

    // A: monotonicity radius on (0, kappa/2]
    let half = 0.5 * kappa;
    let mut a = half;
    for i in 1..=n {
        let x = xs[i].min(half);
        if g.d1(x) <= 0.0 {
            a = bisect(|y| g.d1(y), xs[i - 1], x);
            break;
        }
        if xs[i] >= half {
            break;
        }
    }

    // zeta2 = max of g on [0, kappa]
    let last_in = xs.partition_point(|&x| x <= kappa) - 1;
    let (imax, _) = gs[..=last_in]
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let mut zeta2 = gs[imax].max(g.eval(kappa));
    if imax > 0 && imax < last_in {
        let xm = golden_max(|x| g.eval(x), xs[imax - 1], xs[imax + 1]);
        zeta2 = zeta2.max(g.eval(xm));
    }

    let mut clauses = Vec::new();
    clause(&mut clauses, "p > 1", p > 1.0, format!("p = g'(0) = {p}"));
    clause(
        &mut clauses,
        "exactly one positive fixed point",
        true,
        format!("kappa = {kappa}"),
    );
    let fix_err = (g.eval(kappa) - kappa).abs();
    clause(
        &mut clauses,
        "g(kappa) = kappa",
        fix_err <= tol * (1.0 + kappa),
        format!("|g(kappa) - kappa| = {fix_err:e}"),
    );
    let mono_ok = a > 0.0 && a <= half && (1..=n).take_while(|&i| xs[i] < a).all(|i| ds[i] > 0.0);
    clause(
        &mut clauses,
        "0 < A <= kappa/2 and g' > 0 on [0, A)",
        mono_ok,
        format!("A = {a}"),
    );
    let pos_ok = (1..=n).take_while(|&i| xs[i] <= zeta2).all(|i| gs[i] > 0.0);
    clause(&mut clauses, "g > 0 on (0, zeta2]", pos_ok, format!("zeta2 = {zeta2}"));

    // zeta1: largest value <= min(g(zeta2), A) minimizing g over [zeta1, zeta2]
    let cap = g.eval(zeta2).min(a);
    let mut m_above = g.eval(zeta2);
    for i in 0..=n {
        if xs[i] > cap && xs[i] <= zeta2 {
            m_above = m_above.min(gs[i]);
        }
    }
    let mut zeta1 = f64::NAN;
    if g.eval(cap) <= m_above + tol {
        zeta1 = cap;
    } else {
        let mut upper = cap;
        let mut i = ((cap / dx).floor() as usize).min(n);
        while i >= 1 {
            if xs[i] < upper {
                if gs[i] <= m_above + tol {
                    let m = m_above;
                    zeta1 = bisect(|x| g.eval(x) - m, xs[i], upper);
                    if g.eval(zeta1) > m + tol {
                        zeta1 = xs[i];
                    }
                    break;
                }
                m_above = m_above.min(gs[i]);
                upper = xs[i];
            }
            i -= 1;
        }
    }
    let zeta1_ok = zeta1 > 0.0 && zeta1 <= cap + tol && {
        let gz = g.eval(zeta1);
        (0..=n).filter(|&i| xs[i] >= zeta1 && xs[i] <= zeta2).all(|i| gs[i] >= gz - tol)
    };
    clause(
        &mut clauses,
        "0 < zeta1 <= min(g(zeta2), A) with g(zeta1) = min over [zeta1, zeta2]",
        zeta1_ok,
        format!("zeta1 = {zeta1}"),
    );
    let inv_ok = zeta1_ok
        && (0..=n)
            .filter(|&i| xs[i] >= zeta1 && xs[i] <= zeta2)
            .all(|i| gs[i] >= zeta1 - tol && gs[i] <= zeta2 + tol);
    clause(
        &mut clauses,
        "g([zeta1, zeta2]) within [zeta1, zeta2]",
        inv_ok,
        format!("band = [{zeta1}, {zeta2}]"),
    );

    let ok = clauses.iter().all(|c| c.ok);
    Ok(GCertificate {
        constants: GConstants { p, kappa, gamma, a, zeta1, zeta2, x_m },
        ok,
        clauses,
        critical_points,
        grid_density: opts.grid_density,
        scan_max,
        tol,
    })
}

/// Evaluates the sufficient condition for the stability hypothesis: the
/// `Gamma` branch plus a single critical point (a maximum) and a negative
/// Schwarzian away from it.
pub fn certify_h(
    g: &BirthFunction,
    h: f64,
    cert: &GCertificate,
) -> Result<HypothesisReport, ModelError> {
    if !(h >= 0.0) {
        return Err(ModelError::NegativeDelay(h));
    }
    let c = cert.constants;
    let mut messages: Vec<String> = Vec::new();
    if let Some(v) = cert.first_violation() {
        messages.push(format!("G violated: {} ({})", v.clause, v.detail));
    }

    let (branch, branch_ok) = if (0.0..=1.0).contains(&c.gamma) {
        messages.push(format!("Gamma = {} lies in [0, 1]", c.gamma));
        (HBranch::Gamma01, true)
    } else if c.gamma < 0.0 {
        let ok = delay_stability_holds(c.gamma, h);
        messages.push(format!(
            "Gamma = {} < 0: delay inequality {} (h = {h}, threshold h* = {})",
            c.gamma,
            if ok { "holds" } else { "fails" },
            delay_threshold(c.gamma)
        ));
        (HBranch::GammaNeg, ok)
    } else {
        messages.push(format!("Gamma = {} > 1: inconclusive", c.gamma));
        (HBranch::Inconclusive, false)
    };

    let schwarzian_ok = if !g.derivatives_exact() {
        messages.push("schwarzian unavailable for tabulated g".into());
        false
    } else if c.x_m.is_none() {
        messages.push(format!(
            "expected exactly one critical point (a maximum), found {:?}",
            cert.critical_points
        ));
        false
    } else {
        let n = (cert.scan_max * cert.grid_density).ceil() as usize;
        let dx = cert.scan_max / n as f64;
        let mut worst = f64::NEG_INFINITY;
        let mut worst_x = 0.0;
        for i in 1..=n {
            let x = i as f64 * dx;
            if let Ok(s) = schwarzian_with_tol(g, x, 1e-8) {
                if s > worst {
                    worst = s;
                    worst_x = x;
                }
            }
        }
        let ok = worst < 0.0;
        messages.push(format!(
            "max sampled Schwarzian = {worst} at x = {worst_x} ({})",
            if ok { "negative" } else { "not negative" }
        ));
        ok
    };

    let h_ok = cert.ok && branch_ok && schwarzian_ok;
    Ok(HypothesisReport {
        g_ok: cert.ok,
        h_ok,
        branch,
        branch_ok,
        schwarzian_ok,
        delay: h,
        constants: c,
        messages,
        grid_density: cert.grid_density,
        scan_max: cert.scan_max,
        tol: cert.tol,
    })
}

/// Runs [`certify_g`] followed by [`certify_h`].
pub fn check_hypotheses(
    g: &BirthFunction,
    h: f64,
    opts: &CertifyOptions,
) -> Result<(GCertificate, HypothesisReport), ModelError> {
    let cert = certify_g(g, opts)?;
    let report = certify_h(g, h, &cert)?;
    Ok((cert, report))
}
