use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use frontlab::charroots::{real_root_lambda, real_roots_eps, roots_in_strip, QuasiPolynomial};
use frontlab::heteroclinic::{solve_heteroclinic, HeteroclinicOptions};
use frontlab::model::{certify_g, check_hypotheses, BirthFunction, GConstants};
use frontlab::pdecheck::{compare_profile, measure_front_speed, simulate_pde, HistoryMode, Initial, PdeSetup};
use frontlab::profiles::{profile_distance, Profile};
use frontlab::wavefront::{solve_front, FrontOptions, FrontReport};
use frontlab::Exec;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{Cli, Command};

/// Why a command stopped.
enum Failure {
    /// Bad invocation, unreadable config or missing input artifact.
    Usage(anyhow::Error),
    /// The computation ran and the answer is negative, or a module failed.
    Domain(anyhow::Error),
}

type Outcome = Result<bool, Failure>;

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn domain(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn domain(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Domain(e.into()))
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: RunConfig,
    out: PathBuf,
    g: BirthFunction,
    artifacts: Vec<String>,
}

impl Ctx<'_> {
    fn h(&self) -> f64 {
        self.cfg.model.delay
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).usage()?;
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display())).usage()?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, v: &Value) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(v).expect("json values serialize") + "\n";
        self.write(name, &text)
    }

    fn save_profile(&mut self, name: &str, p: &Profile) -> Result<(), Failure> {
        let path = self.path(name);
        p.save(&path).domain()?;
        self.artifacts.push(name.to_string());
        self.artifacts.push(frontlab::profiles::sidecar_path(Path::new(name)).display().to_string());
        Ok(())
    }

    /// Profile from `--seed-profile`, else the named artifact of an earlier
    /// stage.
    fn input_profile(&self, default: &str, stage: &str) -> Result<Profile, Failure> {
        let path = self.cli.seed_profile.clone().unwrap_or_else(|| self.path(default));
        if !path.exists() {
            return Err(Failure::Usage(anyhow!(
                "{} not found; run `frontlab {stage}` first or pass --seed-profile",
                path.display()
            )));
        }
        Profile::load(&path).with_context(|| format!("loading {}", path.display())).usage()
    }

    fn constants(&self) -> Result<GConstants, Failure> {
        let cert = certify_g(&self.g, &self.cfg.certify_options()).domain()?;
        if !cert.ok && !self.cfg.solver.force {
            let why = cert.first_violation().map_or(String::new(), |c| format!("{}: {}", c.clause, c.detail));
            return Err(Failure::Domain(anyhow!("birth function fails certification ({why})")));
        }
        Ok(cert.constants)
    }

    /// Constants after the full hypothesis check (overridable by `solver.force`).
    fn certified_constants(&self) -> Result<GConstants, Failure> {
        let (cert, report) = check_hypotheses(&self.g, self.h(), &self.cfg.certify_options()).domain()?;
        if !report.h_ok && !self.cfg.solver.force {
            return Err(Failure::Domain(anyhow!(
                "hypotheses not certified: {}; set solver.force = true to proceed",
                report.messages.join("; ")
            )));
        }
        Ok(cert.constants)
    }

    fn front_options(&self) -> FrontOptions {
        let s = &self.cfg.solver;
        FrontOptions {
            steps_per_delay: self.cfg.grid.steps_per_delay,
            t_minus: self.cfg.grid.t_minus,
            t_plus: self.cfg.grid.t_plus,
            damping: s.damping,
            tol: s.tol,
            max_iter: s.max_iter,
            c_margin: s.c_margin,
            force: s.force,
            ..FrontOptions::default()
        }
    }

    fn backbone(&self, consts: &GConstants) -> Result<frontlab::heteroclinic::Heteroclinic, Failure> {
        let b = &self.cfg.backbone;
        let opts = HeteroclinicOptions {
            seed_amplitude: b.seed_amplitude,
            steps_per_delay: b.steps_per_delay,
            tol: b.tol,
            t_max: b.t_max,
            ..HeteroclinicOptions::default()
        };
        solve_heteroclinic(&self.g, self.h(), consts, &opts).domain()
    }

    fn manifest(&mut self, command: Command) -> Result<(), Failure> {
        let mut artifacts = self.artifacts.clone();
        artifacts.sort();
        let name = format!("manifest_{}.json", command.name());
        let v = json!({
            "tool": "frontlab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command.name(),
            "config": serde_json::to_value(&self.cfg).expect("config serializes"),
            "seed_profile": self.cli.seed_profile,
            "artifacts": artifacts,
        });
        let text = serde_json::to_string_pretty(&v).expect("json values serialize") + "\n";
        fs::write(self.path(&name), text).with_context(|| format!("writing {name}")).usage()
    }
}

fn exit_for(code: u8) -> ExitCode {
    ExitCode::from(code)
}

fn report_failure(out: Option<&Path>, command: Command, kind: &str, err: &anyhow::Error) {
    let v = json!({
        "error": {
            "kind": kind,
            "command": command.name(),
            "message": format!("{err:#}"),
        }
    });
    let text = serde_json::to_string_pretty(&v).expect("json values serialize");
    eprintln!("{text}");
    if let Some(dir) = out {
        if fs::create_dir_all(dir).is_ok() {
            let _ = fs::write(dir.join("error.json"), text + "\n");
        }
    }
}

pub fn run(cli: &Cli) -> ExitCode {
    let command = cli.command;
    let setup = || -> Result<Ctx<'_>, Failure> {
        let path = cli.config.as_ref().ok_or_else(|| Failure::Usage(anyhow!("--config PATH is required")))?;
        let cfg = RunConfig::load(path).usage()?;
        let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display())).usage()?;
        let g = cfg.birth_function().usage()?;
        Ok(Ctx { cli, cfg, out, g, artifacts: Vec::new() })
    };
    let mut ctx = match setup() {
        Ok(c) => c,
        Err(Failure::Usage(e)) | Err(Failure::Domain(e)) => {
            report_failure(cli.out.as_deref(), command, "usage", &e);
            return exit_for(2);
        }
    };
    let outcome = with_jobs(cli.jobs, || dispatch(&mut ctx, command));
    let outcome = outcome.and_then(|ok| ctx.manifest(command).map(|_| ok));
    match outcome {
        Ok(true) => exit_for(0),
        Ok(false) => exit_for(1),
        Err(Failure::Domain(e)) => {
            report_failure(Some(&ctx.out), command, "domain", &e);
            exit_for(1)
        }
        Err(Failure::Usage(e)) => {
            report_failure(Some(&ctx.out), command, "usage", &e);
            exit_for(2)
        }
    }
}

#[cfg(feature = "parallel")]
fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match jobs {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<R>(_jobs: Option<usize>, f: impl FnOnce() -> R) -> R {
    f()
}

fn dispatch(ctx: &mut Ctx<'_>, command: Command) -> Outcome {
    match command {
        Command::Check => cmd_check(ctx),
        Command::Roots => cmd_roots(ctx),
        Command::Backbone => cmd_backbone(ctx),
        Command::Front => cmd_front(ctx),
        Command::Simulate => cmd_simulate(ctx),
        Command::Validate => cmd_validate(ctx),
        Command::Sweep => cmd_sweep(ctx),
    }
}

fn cmd_check(ctx: &mut Ctx<'_>) -> Outcome {
    let (_, report) = check_hypotheses(&ctx.g, ctx.h(), &ctx.cfg.certify_options()).domain()?;
    let v: Value = serde_json::from_str(&report.to_json()).expect("report json parses");
    ctx.write_json("hypothesis.json", &v)?;
    if !report.h_ok {
        let msg = report.messages.join("; ");
        report_failure(Some(&ctx.out), Command::Check, "domain", &anyhow!("hypotheses not certified: {msg}"));
    }
    Ok(report.h_ok)
}

fn cmd_roots(ctx: &mut Ctx<'_>) -> Outcome {
    let p = ctx.g.p();
    let h = ctx.h();
    let eps = ctx.cfg.roots.eps;
    let qp = QuasiPolynomial::new(p, h, eps).usage()?;
    let re_max = ctx.cfg.roots.re_max.unwrap_or(if eps > 0.0 { 2.0 * (p - 1.0) } else { p });
    let set = roots_in_strip(&qp, ctx.cfg.roots.re_min, re_max, Exec::default()).domain()?;
    let mut buf = Vec::new();
    set.write_csv(&mut buf).domain()?;
    ctx.write("roots.csv", &String::from_utf8(buf).expect("csv is utf-8"))?;
    let lambda = real_root_lambda(p, h).domain()?;
    let real_eps = if eps > 0.0 { Some(real_roots_eps(p, h, eps).domain()?) } else { None };
    let summary = json!({
        "p": p,
        "h": h,
        "eps": eps,
        "lambda": lambda,
        "lambda1": real_eps.map(|r| r.0),
        "lambda_inf": real_eps.map(|r| r.1),
        "strip": set.strip,
        "count": set.count_by_argument_principle,
        "all_simple": set.simple.iter().all(|&s| s),
    });
    ctx.write_json("roots.json", &summary)?;
    Ok(true)
}

fn cmd_backbone(ctx: &mut Ctx<'_>) -> Outcome {
    let consts = ctx.certified_constants()?;
    let het = ctx.backbone(&consts)?;
    ctx.save_profile("backbone.csv", &het.profile)?;
    let meta = json!({
        "lambda": het.lambda,
        "B": het.b,
        "shift": het.shift,
        "level": het.level,
        "kappa": het.kappa,
        "step": het.step,
        "seed_amplitude": het.seed_amplitude,
        "seed_time": het.seed_time,
        "monotone_below_a": het.monotone_below_a,
        "messages": het.messages,
    });
    ctx.write_json("backbone_meta.json", &meta)?;
    Ok(true)
}

fn front_ok(r: &FrontReport) -> bool {
    r.converged && r.positivity_ok && r.degenerate.is_none()
}

fn cmd_front(ctx: &mut Ctx<'_>) -> Outcome {
    let c = ctx.cfg.speed().usage()?;
    let seed = ctx.input_profile("backbone.csv", "backbone")?;
    let consts = ctx.certified_constants()?;
    let report = solve_front(&ctx.g, ctx.h(), &consts, c, &seed, &ctx.front_options()).domain()?;
    ctx.save_profile("front.csv", &report.profile)?;
    ctx.write_json("front_report.json", &report.to_json())?;
    if !front_ok(&report) {
        let why = if report.converged { "front failed certification" } else { "not converged" };
        report_failure(Some(&ctx.out), Command::Front, "domain", &anyhow!("{why}: {}", report.messages.join("; ")));
    }
    Ok(front_ok(&report))
}

fn pde_run(ctx: &Ctx<'_>, consts: &GConstants, front: &Profile, c: f64) -> Result<frontlab::pdecheck::FieldRun, Failure> {
    let p = &ctx.cfg.pde;
    let setup = PdeSetup {
        length: p.length,
        dx: p.dx,
        t_end: p.t_end,
        snapshot_every: p.snapshot_every,
        dt: None,
        watch_level: Some(0.5 * consts.kappa),
    };
    let x0 = p.front_position.unwrap_or(0.675 * p.length);
    let (aligned, _) = front.align_by_level(consts.level()).domain()?;
    let init = Initial::Front { phi: aligned, c, x0 };
    simulate_pde(&ctx.g, ctx.h(), &setup, &init, HistoryMode::Travelling).domain()
}

fn cmd_simulate(ctx: &mut Ctx<'_>) -> Outcome {
    let c = ctx.cfg.speed().usage()?;
    let front = ctx.input_profile("front.csv", "front")?;
    let consts = ctx.constants()?;
    let run = pde_run(ctx, &consts, &front, c)?;
    for k in 0..run.snapshots.len() {
        let mut buf = Vec::new();
        run.write_snapshot_csv(k, &mut buf).domain()?;
        ctx.write(&format!("snapshots/snapshot_{k:04}.csv"), &String::from_utf8(buf).expect("csv is utf-8"))?;
    }
    let mut manifest = run.manifest();
    manifest["c"] = json!(c);
    manifest["delay"] = json!(ctx.h());
    ctx.write_json("pde_manifest.json", &manifest)?;
    let speed = measure_front_speed(&run, 0.5 * consts.kappa).domain()?;
    ctx.write_json("speed.json", &json!({ "c": c, "c_est": speed.c_est, "residual": speed.residual }))?;
    Ok(true)
}

fn cmd_validate(ctx: &mut Ctx<'_>) -> Outcome {
    let c = ctx.cfg.speed().usage()?;
    let front = ctx.input_profile("front.csv", "front")?;
    let consts = ctx.constants()?;
    let run = pde_run(ctx, &consts, &front, c)?;
    let speed = measure_front_speed(&run, 0.5 * consts.kappa).domain()?;
    let err = compare_profile(&run, &front, c, consts.level()).domain()?;
    let speed_rel = (speed.c_est - c).abs() / c;
    let p = &ctx.cfg.pde;
    let ok = speed_rel <= p.max_speed_error && err <= p.max_profile_error * consts.kappa;
    let v = json!({
        "c": c,
        "c_est": speed.c_est,
        "speed_rel_error": speed_rel,
        "profile_error": err,
        "kappa": consts.kappa,
        "max_speed_error": p.max_speed_error,
        "max_profile_error": p.max_profile_error,
        "ok": ok,
    });
    ctx.write_json("validate.json", &v)?;
    if !ok {
        report_failure(Some(&ctx.out), Command::Validate, "domain", &anyhow!("front and simulation disagree"));
    }
    Ok(ok)
}

fn cmd_sweep(ctx: &mut Ctx<'_>) -> Outcome {
    let consts = ctx.certified_constants()?;
    let seed = match &ctx.cli.seed_profile {
        Some(_) => ctx.input_profile("backbone.csv", "backbone")?,
        None => ctx.backbone(&consts)?.profile,
    };
    let lambda = real_root_lambda(ctx.g.p(), ctx.h()).domain()?;
    let opts = ctx.front_options();
    let (g, h) = (&ctx.g, ctx.h());
    let results = Exec::default().map(&ctx.cfg.sweep.speeds, |&c| solve_front(g, h, &consts, c, &seed, &opts));
    let mut csv = String::from("c,eps,converged,iterations,residual_fix,residual_ode,tail_exponent,lambda1,distance_to_backbone\n");
    let mut all_ok = true;
    for (c, r) in ctx.cfg.sweep.speeds.iter().zip(results) {
        match r {
            Ok(rep) => {
                all_ok &= front_ok(&rep);
                let dist = profile_distance(&rep.profile, &seed, 0.9 * lambda).domain()?;
                let (ex, l1) = rep.tail.map_or((f64::NAN, f64::NAN), |t| (t.fit.exponent, t.lambda1_ref));
                writeln!(
                    csv,
                    "{:.16e},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    c, rep.eps, rep.converged, rep.iterations, rep.residual_fix, rep.residual_ode, ex, l1, dist
                )
                .expect("writing to a string");
            }
            Err(e) => {
                all_ok = false;
                writeln!(csv, "{:.16e},{:.16e},false,0,nan,nan,nan,nan,nan", c, 1.0 / c).expect("writing to a string");
                eprintln!("c = {c}: {e}");
            }
        }
    }
    ctx.write("sweep.csv", &csv)?;
    Ok(all_ok)
}
