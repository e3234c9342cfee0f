//! Birth functions `g` and sampled certification of the standing hypotheses.
//!
//! Builtins carry closed-form derivatives through third order (via [`Jet`]);
//! user tables are interpolated by a monotone cubic and only expose first and
//! second derivatives, the latter by central differences.
//!
//! All builtins except [`Builtin::Linear`] use their closed form on `x >= 0`
//! and the bounded extension `g(x) = p x e^x` on `x < 0`, where `p = g'(0)`.
//! Positive fronts never read `g` at negative arguments; the extension only
//! matters for transient iterates.

mod certify;
mod jet;
mod table;

pub use certify::{
    certify_g, certify_h, check_hypotheses, delay_stability_holds, delay_threshold, CertifyOptions, ClauseCheck,
    GCertificate, GConstants, HBranch, HypothesisReport,
};
pub use jet::Jet;
pub use table::Table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("no positive fixed point of g in (0, {scan_max}]")]
    NoPositiveFixedPoint { scan_max: f64 },
    #[error("more than one positive fixed point: {0:?}")]
    MultipleFixedPoints(Vec<f64>),
    #[error("no isolated positive fixed point (g(x) = x on a whole interval near {near})")]
    NoIsolatedFixedPoint { near: f64 },
    #[error("critical point: |g'({x})| = {slope:e} is below tolerance")]
    CriticalPoint { x: f64, slope: f64 },
    #[error("schwarzian unavailable: third derivative requires a closed-form builtin")]
    SchwarzianUnavailable,
    #[error("negative delay h = {0}")]
    NegativeDelay(f64),
}

/// Closed-form birth functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Builtin {
    /// `p x e^{-x}`, the Nicholson blowflies nonlinearity.
    Nicholson { p: f64 },
    /// `p x / (1 + x^n)`.
    MackeyGlass { p: f64, n: f64 },
    /// `p x / (1 + x)`, a monotone Möbius map.
    BevertonHolt { p: f64 },
    /// Piecewise linear: slope `p` up to `peak`, then slope `-q` down to zero.
    Tent { p: f64, q: f64, peak: f64 },
    /// `slope * x` on the whole line; used for linearization checks.
    Linear { slope: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Builtin(Builtin),
    Table(Table),
}

/// A scalar birth function with value and derivative accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthFunction {
    source: Source,
}

/// Validates parameters and builds a closed-form birth function.
pub fn make_builtin(b: Builtin) -> Result<BirthFunction, ModelError> {
    let finite = |name: &str, v: f64| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(ModelError::InvalidParameter(format!("{name} = {v} is not finite")))
        }
    };
    let above_one = |v: f64| {
        if v > 1.0 {
            Ok(())
        } else {
            Err(ModelError::InvalidParameter(format!(
                "p = {v} must exceed 1 for a positive equilibrium"
            )))
        }
    };
    match b {
        Builtin::Nicholson { p } | Builtin::BevertonHolt { p } => {
            finite("p", p)?;
            above_one(p)?;
        }
        Builtin::MackeyGlass { p, n } => {
            finite("p", p)?;
            finite("n", n)?;
            above_one(p)?;
            if n < 1.0 {
                return Err(ModelError::InvalidParameter(format!("n = {n} must be >= 1")));
            }
        }
        Builtin::Tent { p, q, peak } => {
            finite("p", p)?;
            finite("q", q)?;
            finite("peak", peak)?;
            above_one(p)?;
            if q <= 0.0 || peak <= 0.0 {
                return Err(ModelError::InvalidParameter(
                    "tent needs q > 0 and peak > 0".into(),
                ));
            }
        }
        Builtin::Linear { slope } => {
            finite("slope", slope)?;
            if slope <= 0.0 {
                return Err(ModelError::InvalidParameter(format!("slope = {slope} must be > 0")));
            }
        }
    }
    Ok(BirthFunction { source: Source::Builtin(b) })
}

impl BirthFunction {
    pub fn from_table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, ModelError> {
        Ok(BirthFunction { source: Source::Table(Table::new(xs, ys)?) })
    }

    pub fn builtin(&self) -> Option<Builtin> {
        match &self.source {
            Source::Builtin(b) => Some(*b),
            Source::Table(_) => None,
        }
    }

    pub fn table(&self) -> Option<&Table> {
        match &self.source {
            Source::Table(t) => Some(t),
            Source::Builtin(_) => None,
        }
    }

    /// False for tables, whose derivatives are numerical.
    pub fn derivatives_exact(&self) -> bool {
        matches!(self.source, Source::Builtin(_))
    }

    pub fn label(&self) -> String {
        match &self.source {
            Source::Builtin(Builtin::Nicholson { p }) => format!("nicholson(p={p})"),
            Source::Builtin(Builtin::MackeyGlass { p, n }) => format!("mackey_glass(p={p}, n={n})"),
            Source::Builtin(Builtin::BevertonHolt { p }) => format!("beverton_holt(p={p})"),
            Source::Builtin(Builtin::Tent { p, q, peak }) => {
                format!("tent(p={p}, q={q}, peak={peak})")
            }
            Source::Builtin(Builtin::Linear { slope }) => format!("linear(slope={slope})"),
            Source::Table(t) => format!("table({} samples)", t.xs().len()),
        }
    }

    /// `g'(0)`.
    pub fn p(&self) -> f64 {
        match &self.source {
            Source::Builtin(Builtin::Nicholson { p })
            | Source::Builtin(Builtin::MackeyGlass { p, .. })
            | Source::Builtin(Builtin::BevertonHolt { p })
            | Source::Builtin(Builtin::Tent { p, .. }) => *p,
            Source::Builtin(Builtin::Linear { slope }) => *slope,
            Source::Table(t) => t.slope(0.0),
        }
    }

    /// Upper bound for `|g|` on the whole line (infinite for `Linear`).
    pub fn bound(&self) -> f64 {
        let ext = self.p() / std::f64::consts::E;
        let positive = match &self.source {
            Source::Builtin(Builtin::Nicholson { p }) => p / std::f64::consts::E,
            Source::Builtin(Builtin::MackeyGlass { p, n }) => {
                if *n <= 1.0 {
                    *p
                } else {
                    let xm = (1.0 / (n - 1.0)).powf(1.0 / n);
                    p * xm / (1.0 + xm.powf(*n))
                }
            }
            Source::Builtin(Builtin::BevertonHolt { p }) => *p,
            Source::Builtin(Builtin::Tent { p, peak, .. }) => p * peak,
            Source::Builtin(Builtin::Linear { .. }) => return f64::INFINITY,
            Source::Table(t) => t.max_abs(),
        };
        positive.max(ext)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.source {
            Source::Builtin(Builtin::Linear { slope }) => slope * x,
            _ if x < 0.0 => self.p() * x * x.exp(),
            Source::Builtin(Builtin::Nicholson { p }) => p * x * (-x).exp(),
            Source::Builtin(Builtin::MackeyGlass { p, n }) => p * x / (1.0 + x.powf(*n)),
            Source::Builtin(Builtin::BevertonHolt { p }) => p * x / (1.0 + x),
            Source::Builtin(Builtin::Tent { p, q, peak }) => {
                if x <= *peak {
                    p * x
                } else {
                    (p * peak - q * (x - peak)).max(0.0)
                }
            }
            Source::Table(t) => t.eval(x),
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match &self.source {
            Source::Builtin(Builtin::Linear { slope }) => *slope,
            _ if x < 0.0 => self.p() * (1.0 + x) * x.exp(),
            Source::Builtin(Builtin::Nicholson { p }) => p * (1.0 - x) * (-x).exp(),
            Source::Table(t) => t.slope(x),
            Source::Builtin(_) => self.jet(x).map(|j| j.d1).unwrap_or(f64::NAN),
        }
    }

    /// Second derivative; central differences of the interpolant slope for tables.
    pub fn d2(&self, x: f64) -> f64 {
        match &self.source {
            Source::Table(t) => {
                let dx = 1e-5 * (1.0 + x.abs());
                (t.slope(x + dx) - t.slope(x - dx)) / (2.0 * dx)
            }
            Source::Builtin(_) => self.jet(x).map(|j| j.d2).unwrap_or(f64::NAN),
        }
    }

    /// Third derivative, available for builtins only.
    pub fn d3(&self, x: f64) -> Option<f64> {
        self.jet(x).map(|j| j.d3)
    }

    /// Value and derivatives through third order; `None` for tables.
    pub fn jet(&self, x: f64) -> Option<Jet> {
        let b = match &self.source {
            Source::Builtin(b) => *b,
            Source::Table(_) => return None,
        };
        let v = Jet::var(x);
        if x < 0.0 && !matches!(b, Builtin::Linear { .. }) {
            return Some((v * v.exp()).scale(self.p()));
        }
        Some(match b {
            Builtin::Nicholson { p } => (v * (-v).exp()).scale(p),
            Builtin::MackeyGlass { p, n } => (v / (v.powf(n) + 1.0)).scale(p),
            Builtin::BevertonHolt { p } => (v / (v + 1.0)).scale(p),
            Builtin::Tent { p, q, peak } => {
                if x <= peak {
                    v.scale(p)
                } else if x < peak + p * peak / q {
                    Jet { v: p * peak - q * (x - peak), d1: -q, d2: 0.0, d3: 0.0 }
                } else {
                    Jet::constant(0.0)
                }
            }
            Builtin::Linear { slope } => v.scale(slope),
        })
    }
}

/// Schwarzian derivative `g'''/g' - (3/2) (g''/g')^2`.
pub fn schwarzian(g: &BirthFunction, x: f64) -> Result<f64, ModelError> {
    schwarzian_with_tol(g, x, 1e-12)
}

pub fn schwarzian_with_tol(g: &BirthFunction, x: f64, tol: f64) -> Result<f64, ModelError> {
    let j = g.jet(x).ok_or(ModelError::SchwarzianUnavailable)?;
    if j.d1.abs() <= tol {
        return Err(ModelError::CriticalPoint { x, slope: j.d1 });
    }
    let r2 = j.d2 / j.d1;
    Ok(j.d3 / j.d1 - 1.5 * r2 * r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nich(p: f64) -> BirthFunction {
        make_builtin(Builtin::Nicholson { p }).unwrap()
    }

    #[test]
    fn nicholson_values() {
        let g = nich(2.0);
        assert_eq!(g.eval(0.0), 0.0);
        assert!((g.d1(0.0) - 2.0).abs() < 1e-12);
        let k = 2f64.ln();
        assert!((g.eval(k) - k).abs() < 1e-15);
    }

    #[test]
    fn mackey_glass_fixed_point() {
        let g = make_builtin(Builtin::MackeyGlass { p: 2.0, n: 1.0 }).unwrap();
        assert!((g.eval(1.0) - 1.0).abs() < 1e-15);
        let g = make_builtin(Builtin::MackeyGlass { p: 3.0, n: 2.0 }).unwrap();
        let k = 2f64.sqrt();
        assert!((g.eval(k) - k).abs() < 1e-14);
    }

    #[test]
    fn builtins_vanish_at_zero_with_slope_p() {
        let all = [
            Builtin::Nicholson { p: 2.5 },
            Builtin::MackeyGlass { p: 2.5, n: 3.0 },
            Builtin::BevertonHolt { p: 2.5 },
            Builtin::Tent { p: 2.5, q: 1.0, peak: 0.5 },
            Builtin::Linear { slope: 2.5 },
        ];
        for b in all {
            let g = make_builtin(b).unwrap();
            assert_eq!(g.eval(0.0), 0.0, "{b:?}");
            assert!((g.d1(0.0) - 2.5).abs() < 1e-12, "{b:?}");
            assert!((g.jet(0.0).unwrap().d1 - 2.5).abs() < 1e-12, "{b:?}");
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(make_builtin(Builtin::Nicholson { p: 1.0 }).is_err());
        assert!(make_builtin(Builtin::Nicholson { p: 0.5 }).is_err());
        assert!(make_builtin(Builtin::Nicholson { p: f64::NAN }).is_err());
        assert!(make_builtin(Builtin::MackeyGlass { p: 2.0, n: 0.5 }).is_err());
        assert!(make_builtin(Builtin::MackeyGlass { p: f64::INFINITY, n: 2.0 }).is_err());
        assert!(make_builtin(Builtin::Tent { p: 2.0, q: -1.0, peak: 1.0 }).is_err());
        assert!(make_builtin(Builtin::Linear { slope: 0.0 }).is_err());
    }

    #[test]
    fn negative_extension_is_bounded_and_smooth_at_zero() {
        let g = nich(2.0);
        for i in 1..400 {
            let x = -(i as f64) * 0.1;
            assert!(g.eval(x).abs() <= g.bound() + 1e-12);
        }
        assert!((g.eval(-1e-9) - g.eval(0.0)).abs() < 1e-8);
        assert!((g.d1(-1e-9) - g.d1(1e-9)).abs() < 1e-7);
    }

    #[test]
    fn schwarzian_closed_forms() {
        let id = make_builtin(Builtin::Linear { slope: 1.0 }).unwrap();
        for x in [0.1, 1.0, 5.0] {
            assert_eq!(schwarzian(&id, x).unwrap(), 0.0);
        }
        let mob = make_builtin(Builtin::BevertonHolt { p: 2.0 }).unwrap();
        assert!(schwarzian(&mob, 1.0).unwrap().abs() < 1e-14);
        assert!((schwarzian(&nich(2.0), 0.0).unwrap() + 3.0).abs() < 1e-12);
        assert!((schwarzian(&nich(7.3), 0.0).unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn schwarzian_rejects_critical_points_and_tables() {
        let g = nich(2.0);
        assert!(matches!(schwarzian(&g, 1.0), Err(ModelError::CriticalPoint { .. })));
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 * x * (-x).exp()).collect();
        let t = BirthFunction::from_table(xs, ys).unwrap();
        assert_eq!(schwarzian(&t, 0.5), Err(ModelError::SchwarzianUnavailable));
        assert!(!t.derivatives_exact());
    }

    #[test]
    fn table_derivatives_approximate_closed_form() {
        let xs: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 * x * (-x).exp()).collect();
        let t = BirthFunction::from_table(xs, ys).unwrap();
        let g = nich(2.0);
        for x in [0.2, 0.7, 1.5, 3.0] {
            assert!((t.eval(x) - g.eval(x)).abs() < 1e-6);
            assert!((t.d1(x) - g.d1(x)).abs() < 1e-3);
        }
    }
}
