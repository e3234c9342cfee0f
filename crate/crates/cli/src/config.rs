//! Run configuration, read from a TOML file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use frontlab::model::{make_builtin, BirthFunction, Builtin, CertifyOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub wave: WaveConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub roots: RootsConfig,
    #[serde(default)]
    pub backbone: BackboneConfig,
    #[serde(default)]
    pub pde: PdeConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// nicholson, mackey_glass, beverton_holt, tent, linear or table.
    pub kind: String,
    pub delay: f64,
    pub p: Option<f64>,
    pub n: Option<f64>,
    pub q: Option<f64>,
    pub peak: Option<f64>,
    pub slope: Option<f64>,
    /// CSV with header `x,g`; relative paths are resolved against the
    /// config file.
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub c: Option<f64>,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub t_minus: Option<f64>,
    pub t_plus: Option<f64>,
    pub steps_per_delay: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { t_minus: None, t_plus: None, steps_per_delay: 32 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub c_margin: f64,
    /// Solve even when the hypotheses or the minimum speed fail.
    pub force: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-11, max_iter: 3000, damping: 0.7, c_margin: 0.05, force: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub grid_density: f64,
    pub scan_max: Option<f64>,
    pub tol: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        let d = CertifyOptions::default();
        CertifyConfig { grid_density: d.grid_density, scan_max: d.scan_max, tol: d.tol }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RootsConfig {
    pub re_min: f64,
    /// Defaults to `2(p - 1)` for `eps > 0` and `p` otherwise.
    pub re_max: Option<f64>,
    pub eps: f64,
}

impl Default for RootsConfig {
    fn default() -> Self {
        RootsConfig { re_min: -5.0, re_max: None, eps: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackboneConfig {
    pub seed_amplitude: f64,
    pub steps_per_delay: usize,
    pub tol: f64,
    pub t_max: f64,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig { seed_amplitude: 1e-8, steps_per_delay: 64, tol: 1e-8, t_max: 5000.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeConfig {
    pub length: f64,
    pub dx: f64,
    pub t_end: f64,
    pub snapshot_every: f64,
    /// Position of the `zeta1/2` crossing at `t = 0`; default `0.675 L`.
    pub front_position: Option<f64>,
    /// Allowed profile error relative to kappa.
    pub max_profile_error: f64,
    /// Allowed relative speed error.
    pub max_speed_error: f64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            length: 400.0,
            dx: 0.1,
            t_end: 5.0,
            snapshot_every: 0.1,
            front_position: None,
            max_profile_error: 5e-2,
            max_speed_error: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub speeds: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { speeds: vec![8.0, 16.0, 32.0, 64.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        bail!("{name} = {v} must be finite and > 0");
    }
    Ok(())
}

impl RunConfig {
    /// Parses and validates; relative paths become relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(t) = &cfg.model.table {
            if t.is_relative() {
                cfg.model.table = Some(base.join(t));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        positive("model.delay", self.model.delay)?;
        if self.wave.c.is_some() && self.wave.eps.is_some() {
            bail!("wave.c and wave.eps are mutually exclusive");
        }
        if let Some(c) = self.wave.c {
            positive("wave.c", c)?;
        }
        if let Some(e) = self.wave.eps {
            positive("wave.eps", e)?;
        }
        positive("solver.tol", self.solver.tol)?;
        positive("certify.tol", self.certify.tol)?;
        positive("backbone.tol", self.backbone.tol)?;
        positive("backbone.seed_amplitude", self.backbone.seed_amplitude)?;
        positive("pde.max_profile_error", self.pde.max_profile_error)?;
        positive("pde.max_speed_error", self.pde.max_speed_error)?;
        if !(self.solver.damping > 0.0 && self.solver.damping <= 1.0) {
            bail!("solver.damping = {} must lie in (0, 1]", self.solver.damping);
        }
        for &c in &self.sweep.speeds {
            positive("sweep.speeds[]", c)?;
        }
        Ok(())
    }

    /// Wave speed from `c` or `1/eps`.
    pub fn speed(&self) -> Result<f64> {
        match (self.wave.c, self.wave.eps) {
            (Some(c), None) => Ok(c),
            (None, Some(e)) => Ok(1.0 / e),
            _ => bail!("set exactly one of wave.c or wave.eps"),
        }
    }

    pub fn certify_options(&self) -> CertifyOptions {
        CertifyOptions { grid_density: self.certify.grid_density, scan_max: self.certify.scan_max, tol: self.certify.tol }
    }

    pub fn birth_function(&self) -> Result<BirthFunction> {
        let m = &self.model;
        let need = |name: &str, v: Option<f64>| v.with_context(|| format!("model.{name} is required for kind {}", m.kind));
        let b = match m.kind.as_str() {
            "nicholson" => Builtin::Nicholson { p: need("p", m.p)? },
            "mackey_glass" => Builtin::MackeyGlass { p: need("p", m.p)?, n: need("n", m.n)? },
            "beverton_holt" => Builtin::BevertonHolt { p: need("p", m.p)? },
            "tent" => Builtin::Tent { p: need("p", m.p)?, q: need("q", m.q)?, peak: need("peak", m.peak)? },
            "linear" => Builtin::Linear { slope: need("slope", m.slope)? },
            "table" => {
                let path = m.table.as_ref().context("model.table is required for kind table")?;
                let (xs, ys) = read_table(path)?;
                return Ok(BirthFunction::from_table(xs, ys)?);
            }
            other => bail!("unknown model.kind {other:?}"),
        };
        Ok(make_builtin(b)?)
    }
}

fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,g") {
        bail!("{}: expected header x,g", path.display());
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut parts = line.split(',');
        let mut num = || -> Result<f64> {
            let s = parts.next().with_context(|| format!("{}: row {} too short", path.display(), i + 1))?;
            s.trim().parse().with_context(|| format!("{}: row {}: bad number {s:?}", path.display(), i + 1))
        };
        xs.push(num()?);
        ys.push(num()?);
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = parse("[model]\nkind = \"nicholson\"\np = 2.0\ndelay = 1.0\n[wave]\neps = 0.125\n").unwrap();
        assert_eq!(cfg.speed().unwrap(), 8.0);
        assert_eq!(cfg.grid.steps_per_delay, 32);
        assert_eq!(cfg.solver.damping, 0.7);
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
        assert!((cfg.birth_function().unwrap().p() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_values() {
        let base = "[model]\nkind = \"nicholson\"\np = 2.0\ndelay = 1.0\n";
        assert!(parse(&format!("{base}[wave]\nc = 8.0\neps = 0.1\n")).is_err());
        assert!(parse(&format!("{base}[solver]\ndamping = 1.5\n")).is_err());
        assert!(parse(&format!("{base}[sweep]\nspeeds = [8.0, -1.0]\n")).is_err());
        assert!(parse("[model]\nkind = \"nicholson\"\np = 2.0\ndelay = 0.0\n").is_err());
        let cfg = parse("[model]\nkind = \"mackey_glass\"\np = 2.0\ndelay = 1.0\n").unwrap();
        assert!(cfg.birth_function().is_err());
        assert!(cfg.speed().is_err());
    }

    #[test]
    fn table_path_is_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        fs_write(&dir.path().join("g.csv"), "x,g\n0,0\n1,1\n2,1.5\n3,1.6\n4,1.6\n");
        fs_write(&dir.path().join("run.toml"), "[model]\nkind = \"table\"\ndelay = 1.0\ntable = \"g.csv\"\n");
        let cfg = RunConfig::load(&dir.path().join("run.toml")).unwrap();
        assert_eq!(cfg.model.table.as_deref(), Some(dir.path().join("g.csv").as_path()));
        let (xs, ys) = read_table(cfg.model.table.as_ref().unwrap()).unwrap();
        assert_eq!(xs.len(), 5);
        assert_eq!(ys[2], 1.5);
    }

    fn fs_write(path: &Path, text: &str) {
        std::fs::write(path, text).unwrap();
    }
}
