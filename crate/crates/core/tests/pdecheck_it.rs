use frontlab::heteroclinic::{solve_heteroclinic, HeteroclinicOptions};
use frontlab::model::{certify_g, make_builtin, Builtin, CertifyOptions};
use frontlab::pdecheck::{measure_front_speed, simulate_pde, HistoryMode, Initial, PdeError, PdeSetup};
use frontlab::profiles::Profile;
use frontlab::wavefront::{solve_front, FrontOptions};

fn front_run(dx: f64) -> (f64, frontlab::pdecheck::FieldRun, f64) {
    let g = make_builtin(Builtin::Nicholson { p: 2.0 }).unwrap();
    let consts = certify_g(&g, &CertifyOptions::default()).unwrap().constants;
    let het = solve_heteroclinic(&g, 1.0, &consts, &HeteroclinicOptions::default()).unwrap();
    let f = solve_front(&g, 1.0, &consts, 16.0, &het.profile, &FrontOptions::default()).unwrap();
    let (phi, _) = f.profile.align_by_level(consts.level()).unwrap();
    let setup = PdeSetup { length: 400.0, dx, t_end: 5.0, snapshot_every: 0.1, dt: None, watch_level: Some(0.5 * consts.kappa) };
    let run = simulate_pde(&g, 1.0, &setup, &Initial::Front { phi, c: 16.0, x0: 270.0 }, HistoryMode::Travelling).unwrap();
    (consts.kappa, run, 16.0)
}

#[test]
fn solutions_stay_positive_and_bounded() {
    let (kappa, run, _) = front_run(0.2);
    for s in &run.snapshots {
        let lo = s.u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo >= 0.0 && hi <= kappa * (1.0 + 1e-6), "t = {}: [{lo}, {hi}]", s.t);
    }
}

#[test]
fn halving_dx_moves_speed_less_than_one_percent() {
    let (kappa, coarse, c) = front_run(0.2);
    let (_, fine, _) = front_run(0.1);
    let a = measure_front_speed(&coarse, 0.5 * kappa).unwrap().c_est;
    let b = measure_front_speed(&fine, 0.5 * kappa).unwrap().c_est;
    assert!((a - b).abs() <= 0.01 * b, "{a} vs {b}");
    assert!((b - c).abs() <= 0.05 * c);
}

#[test]
fn guards_reject_bad_setups() {
    let g = make_builtin(Builtin::Nicholson { p: 2.0 }).unwrap();
    let flat = Profile::from_fn(0.0, 0.5, 201, 0.3, 0.3, |_| 0.3).unwrap();
    let base = PdeSetup { length: 100.0, dx: 0.5, t_end: 1.0, snapshot_every: 0.5, dt: Some(0.1), watch_level: None };
    let err = simulate_pde(&g, 1.0, &base, &Initial::Field(flat.clone()), HistoryMode::Frozen).unwrap_err();
    assert!(matches!(err, PdeError::CflViolated { .. }), "{err:?}");
    let uneven = PdeSetup { dx: 0.3, dt: None, ..base.clone() };
    assert!(matches!(simulate_pde(&g, 1.0, &uneven, &Initial::Field(flat.clone()), HistoryMode::Frozen), Err(PdeError::InvalidInput(_))));
    let travelling = simulate_pde(&g, 1.0, &PdeSetup { dt: None, ..base }, &Initial::Field(flat), HistoryMode::Travelling);
    assert!(travelling.is_err());
}
