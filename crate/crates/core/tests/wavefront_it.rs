use frontlab::charroots::{real_root_lambda, real_roots_eps};
use frontlab::heteroclinic::{solve_heteroclinic, HeteroclinicOptions};
use frontlab::model::{certify_g, make_builtin, BirthFunction, Builtin, CertifyOptions, GConstants};
use frontlab::profiles::Profile;
use frontlab::wavefront::{
    apply_i_eps, apply_i_eps_with_tail, c_min, solve_front, FrontError, FrontOptions, LeftTail, WaveParams,
};
use proptest::prelude::*;

fn nicholson(p: f64) -> (BirthFunction, GConstants) {
    let g = make_builtin(Builtin::Nicholson { p }).unwrap();
    let c = certify_g(&g, &CertifyOptions::default()).unwrap().constants;
    (g, c)
}

fn exp_profile(p: f64, rate: f64) -> Profile {
    let values: Vec<f64> = (0..1281).map(|i| p * (rate * (-10.0 + i as f64 / 64.0)).exp()).collect();
    let right = *values.last().unwrap();
    Profile::raw(-10.0, 1.0 / 64.0, values, 0.0, right).unwrap()
}

fn eigen_error(p: f64, h: f64, eps: f64, rate: f64) -> f64 {
    let out = apply_i_eps_with_tail(&exp_profile(p, rate), &WaveParams::from_eps(eps).unwrap(), h, LeftTail::Exponential { rate })
        .unwrap();
    out.times()
        .zip(&out.values)
        .filter(|(t, _)| *t <= 5.0)
        .map(|(t, v)| (v - (rate * t).exp()).abs() / (rate * t).exp())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constants_are_fixed(eps in 0.0f64..0.5, k in 0.1f64..5.0, h in 0.25f64..2.0) {
        let y = Profile::from_fn(-8.0, 1.0 / 32.0, 513, k, k, |_| k).unwrap();
        let out = apply_i_eps(&y, &WaveParams::from_eps(eps).unwrap(), h).unwrap();
        for v in &out.values {
            prop_assert!((v - k).abs() <= 1e-10 * k);
        }
    }

    #[test]
    fn lambda1_exponential_is_fixed_and_others_are_not(p in 1.3f64..4.0, f in 0.05f64..0.9) {
        let h = 1.0;
        let eps = f / (2.0 * (p - 1.0).sqrt());
        let (l1, _) = real_roots_eps(p, h, eps).unwrap();
        prop_assert!(eigen_error(p, h, eps, l1) < 1e-8);
        prop_assert!(eigen_error(p, h, eps, 1.1 * l1) >= 1e-3);
    }
}

#[test]
fn operator_gap_shrinks_as_eps_halves() {
    let (g, consts) = nicholson(2.0);
    let k = consts.kappa;
    let x = Profile::from_fn(-30.0, 1.0 / 64.0, 64 * 60 + 1, 0.0, k, |t| k / (1.0 + (-0.5 * t).exp())).unwrap();
    let y = x.map(|v| g.eval(v));
    let y = Profile::raw(y.t0, y.dt, y.values, 0.0, g.eval(k)).unwrap();
    let base = apply_i_eps(&y, &WaveParams::from_eps(0.0).unwrap(), 1.0).unwrap();
    let mut last = f64::INFINITY;
    let mut eps = 0.2;
    while eps >= 0.0125 {
        let out = apply_i_eps(&y, &WaveParams::from_eps(eps).unwrap(), 1.0).unwrap();
        let gap = out.values.iter().zip(&base.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < last, "eps {eps}: {gap} !< {last}");
        last = gap;
        eps /= 2.0;
    }
    assert!(last < 1e-4, "gap at eps = 0.0125 is {last}");
}

#[test]
fn grid_refinement_converges() {
    let (g, consts) = nicholson(2.0);
    let het = solve_heteroclinic(&g, 1.0, &consts, &HeteroclinicOptions::default()).unwrap();
    let solve = |m: usize| {
        let opts = FrontOptions { steps_per_delay: m, t_minus: Some(-60.0), t_plus: Some(40.0), ..Default::default() };
        solve_front(&g, 1.0, &consts, 16.0, &het.profile, &opts).unwrap().ensure_converged().unwrap().profile
    };
    let (a, b, c) = (solve(16), solve(32), solve(64));
    // grids share t_minus, so every coarse node is a fine node
    let nodes = |coarse: &Profile, fine: &Profile| {
        coarse.values.iter().enumerate().map(|(i, v)| (v - fine.values[2 * i]).abs()).fold(0.0, f64::max)
    };
    let d1 = nodes(&a, &b);
    let d2 = nodes(&b, &c);
    assert!(d1 > 4.0 * d2 && d2 < 1e-9, "{d1:e} then {d2:e}");
}

#[test]
fn slow_speeds_are_refused_unless_forced() {
    let (g, consts) = nicholson(2.0);
    let het = solve_heteroclinic(&g, 1.0, &consts, &HeteroclinicOptions::default()).unwrap();
    let slow = 0.9 * c_min(2.0, 0.0);
    let err = solve_front(&g, 1.0, &consts, slow, &het.profile, &FrontOptions::default()).unwrap_err();
    assert!(matches!(err, FrontError::BelowMinimumSpeed { .. }), "{err:?}");
    let capped = FrontOptions { max_iter: 3, ..Default::default() };
    let r = solve_front(&g, 1.0, &consts, 16.0, &het.profile, &capped).unwrap();
    assert!(!r.converged);
    assert!(r.clone().ensure_converged().is_err());
    assert_eq!(r.to_json()["converged"], serde_json::Value::Bool(false));
}

#[test]
fn front_tail_matches_lambda1_for_other_models() {
    for b in [Builtin::MackeyGlass { p: 2.0, n: 2.0 }, Builtin::BevertonHolt { p: 3.0 }] {
        let g = make_builtin(b).unwrap();
        let consts = certify_g(&g, &CertifyOptions::default()).unwrap().constants;
        let het = solve_heteroclinic(&g, 1.0, &consts, &HeteroclinicOptions::default()).unwrap();
        let r = solve_front(&g, 1.0, &consts, 16.0, &het.profile, &FrontOptions::default()).unwrap();
        assert!(r.converged && r.positivity_ok, "{b:?}: {:?}", r.messages);
        let tail = r.tail.expect("tail check");
        let (l1, _) = real_roots_eps(g.p(), 1.0, 1.0 / 16.0).unwrap();
        assert!((tail.fit.exponent - l1).abs() < 0.02 * l1, "{b:?}: {} vs {l1}", tail.fit.exponent);
        assert!(l1 > real_root_lambda(g.p(), 1.0).unwrap());
    }
}
