use frontlab::charroots::real_root_lambda;
use frontlab::heteroclinic::{
    dde_simulate, persistence_batch, solve_heteroclinic, variational_decay_check, HeteroclinicOptions,
};
use frontlab::model::{certify_g, make_builtin, BirthFunction, Builtin, CertifyOptions, GConstants};
use frontlab::profiles::{fit_remainder, profile_distance, Profile};
use frontlab::Exec;
use proptest::prelude::*;

fn nicholson(p: f64) -> (BirthFunction, GConstants) {
    let g = make_builtin(Builtin::Nicholson { p }).unwrap();
    let c = certify_g(&g, &CertifyOptions::default()).unwrap().constants;
    (g, c)
}

#[test]
fn step_halving_shows_fourth_order() {
    let (g, _) = nicholson(2.0);
    let hist = Profile::from_fn(-1.0, 1.0 / 1024.0, 1025, 0.3, 0.3, |t| 0.3 + 0.1 * (3.0 * t).sin()).unwrap();
    let runs: Vec<Profile> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&dt| dde_simulate(&g, 1.0, &hist, 10.0, dt).unwrap().trajectory)
        .collect();
    // compare at t = 0, 1/8, 2/8, ... which every grid contains
    let at = |p: &Profile, k: usize| p.values[k * ((0.125 / p.dt).round() as usize)];
    let diff = |a: &Profile, b: &Profile| (0..=80).map(|k| (at(a, k) - at(b, k)).abs()).fold(0.0, f64::max);
    let e1 = diff(&runs[0], &runs[1]);
    let e2 = diff(&runs[1], &runs[2]);
    let e3 = diff(&runs[2], &runs[3]);
    let (o1, o2) = ((e1 / e2).log2(), (e2 / e3).log2());
    assert!(o1 >= 3.5 && o2 >= 3.5, "observed orders {o1:.2}, {o2:.2} ({e1:.2e} {e2:.2e} {e3:.2e})");
}

#[test]
fn translation_invariance_off_grid() {
    let (g, consts) = nicholson(2.0);
    let a = solve_heteroclinic(&g, 1.0, &consts, &HeteroclinicOptions::default()).unwrap();
    let b = solve_heteroclinic(&g, 1.0, &consts, &HeteroclinicOptions { seed_shift: 2.01, ..Default::default() }).unwrap();
    let d = profile_distance(&a.profile, &b.profile, 0.0).unwrap();
    assert!(d < 1e-6, "aligned backbones differ by {d:e}");
    assert!((a.b - b.b).abs() < 1e-4 * a.b);
}

#[test]
fn remainder_decays_at_twice_lambda() {
    for p in [1.5, 2.0, 2.5] {
        let (g, consts) = nicholson(p);
        let het = solve_heteroclinic(&g, 1.0, &consts, &HeteroclinicOptions::default()).unwrap();
        let lam = real_root_lambda(p, 1.0).unwrap();
        let k = consts.kappa;
        let psi = &het.profile;
        let lo = psi.times().zip(&psi.values).find(|(_, v)| **v >= 1e-6 * k).unwrap().0;
        let hi = psi.times().zip(&psi.values).find(|(_, v)| **v >= 1e-3 * k).unwrap().0;
        let fit = fit_remainder(psi, lam, (lo, hi)).unwrap();
        let rate = fit.remainder_rate.expect("remainder above rounding");
        assert!(rate >= 1.9 * lam, "p={p}: remainder rate {rate} vs lambda {lam}");
        assert!((psi.values.last().unwrap() - k).abs() < 1e-6);
    }
}

#[test]
fn variational_equation_decays_along_backbone() {
    let (g, consts) = nicholson(2.0);
    let het = solve_heteroclinic(&g, 1.0, &consts, &HeteroclinicOptions::default()).unwrap();
    let phi0 = Profile::from_fn(-1.0, 1.0 / 64.0, 65, 1.0, 1.0, |t| 1.0 + 0.5 * t).unwrap();
    // from the plateau onwards every solution dies out within 20 delays
    let late = variational_decay_check(&g, 1.0, &het.profile.translated(-10.0), &phi0).unwrap();
    assert!(late.decayed, "{late:?}");
    // starting mid-front the transient amplifies first, but still contracts
    let mid = variational_decay_check(&g, 1.0, &het.profile, &phi0).unwrap();
    assert!(mid.sup_final < mid.sup_initial, "{mid:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constant_histories_enter_the_band(p in 1.3f64..2.7, c0 in prop::collection::vec(0.01f64..3.0, 1..4)) {
        let (g, consts) = nicholson(p);
        let res = persistence_batch(&g, 1.0, &consts, &c0, 120.0, 1.0 / 32.0, 1e-2, Exec::Sequential).unwrap();
        for r in res {
            prop_assert!(r.in_band, "{:?} band [{}, {}]", r, consts.zeta1, consts.zeta2);
            prop_assert!(r.liminf > 0.0);
        }
    }
}
