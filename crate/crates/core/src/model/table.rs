//! User-supplied birth functions given as sampled tables.
//!
//! Values between samples come from a monotone (Fritsch–Carlson) cubic
//! Hermite interpolant, so monotone data never produce spurious extrema.

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Table {
    /// Builds the interpolant. The abscissae must start at `0` with `g(0) = 0`
    /// and be strictly increasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, ModelError> {
        if xs.len() != ys.len() {
            return Err(ModelError::InvalidTable("x and g columns differ in length".into()));
        }
        if xs.len() < 4 {
            return Err(ModelError::InvalidTable("need at least 4 samples".into()));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidTable("non-finite sample".into()));
        }
        if xs[0] != 0.0 || ys[0] != 0.0 {
            return Err(ModelError::InvalidTable("table must start at (0, 0)".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidTable("abscissae must be strictly increasing".into()));
        }
        let slopes = pchip_slopes(&xs, &ys);
        Ok(Table { xs, ys, slopes })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Interpolant value; held constant beyond the last sample.
    pub fn eval(&self, x: f64) -> f64 {
        if x >= self.x_max() {
            return *self.ys.last().unwrap();
        }
        let (k, t, w) = self.locate(x);
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        h00 * self.ys[k] + h10 * w * self.slopes[k] + h01 * self.ys[k + 1] + h11 * w * self.slopes[k + 1]
    }

    /// Exact derivative of the interpolant.
    pub fn slope(&self, x: f64) -> f64 {
        if x >= self.x_max() {
            return 0.0;
        }
        let (k, t, w) = self.locate(x);
        let (d00, d10, d01, d11) = (
            6.0 * t * t - 6.0 * t,
            3.0 * t * t - 4.0 * t + 1.0,
            -6.0 * t * t + 6.0 * t,
            3.0 * t * t - 2.0 * t,
        );
        (d00 * self.ys[k] + d01 * self.ys[k + 1]) / w + d10 * self.slopes[k] + d11 * self.slopes[k + 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.ys.iter().fold(0.0_f64, |m, y| m.max(y.abs()))
    }

    fn locate(&self, x: f64) -> (usize, f64, f64) {
        let k = match self.xs.partition_point(|&xi| xi <= x) {
            0 => 0,
            i => (i - 1).min(self.xs.len() - 2),
        };
        let w = self.xs[k + 1] - self.xs[k];
        (k, (x - self.xs[k]) / w, w)
    }
}

fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let hs: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let ds: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / hs[k]).collect();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if ds[k - 1] * ds[k] > 0.0 {
            let w1 = 2.0 * hs[k] + hs[k - 1];
            let w2 = hs[k] + 2.0 * hs[k - 1];
            m[k] = (w1 + w2) / (w1 / ds[k - 1] + w2 / ds[k]);
        }
    }
    m[0] = edge_slope(hs[0], hs[1], ds[0], ds[1]);
    m[n - 1] = edge_slope(hs[n - 2], hs[n - 3], ds[n - 2], ds[n - 3]);
    m
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_samples_and_preserves_monotonicity() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x / (1.0 + x)).collect();
        let t = Table::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((t.eval(*x) - y).abs() < 1e-15);
        }
        let mut prev = -1.0;
        for i in 0..2000 {
            let v = t.eval(i as f64 * 0.0025);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x * (-x).exp()).collect();
        let t = Table::new(xs, ys).unwrap();
        for &x in &[0.13, 0.9, 2.31, 4.4] {
            let fd = (t.eval(x + 1e-6) - t.eval(x - 1e-6)) / 2e-6;
            assert!((fd - t.slope(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Table::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(Table::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(Table::new(vec![0.1, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0, 1.0]).is_err());
    }
}
