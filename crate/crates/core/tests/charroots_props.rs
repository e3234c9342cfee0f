use frontlab::charroots::{RootError, eps_max, real_root_lambda, real_roots_eps, roots_in_strip, QuasiPolynomial};
use frontlab::Exec;
use num_complex::Complex64;
use proptest::prelude::*;

fn chi(p: f64, h: f64, eps: f64, z: Complex64) -> Complex64 {
    eps * eps * z * z - z - 1.0 + p * (-z * h).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn roots_come_in_conjugate_pairs(p in 1.2f64..6.0, h in 0.1f64..2.5) {
        let qp = QuasiPolynomial::new(p, h, 0.0).unwrap();
        let set = roots_in_strip(&qp, -1.0, p, Exec::Sequential).unwrap();
        prop_assert_eq!(set.len(), set.count_by_argument_principle);
        for z in &set.roots {
            let r = chi(p, h, 0.0, *z).norm();
            prop_assert!(r <= 1e-9 * (1.0 + z.norm()), "residual {} at {}", r, z);
            let d = set.roots.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-9 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn winding_counts_add_across_a_cut(p in 1.2f64..5.0, h in 0.2f64..2.0, cut in -0.8f64..0.8) {
        let qp = QuasiPolynomial::new(p, h, 0.0).unwrap();
        let whole = roots_in_strip(&qp, -1.0, 1.0, Exec::Sequential).unwrap();
        let left = roots_in_strip(&qp, -1.0, cut, Exec::Sequential).unwrap();
        let right = roots_in_strip(&qp, cut, 1.0, Exec::Sequential).unwrap();
        prop_assert_eq!(whole.count_by_argument_principle, left.count_by_argument_principle + right.count_by_argument_principle);
    }

    #[test]
    fn bracket_chain_holds(p in 1.1f64..8.0, h in 0.05f64..3.0, f in 0.02f64..0.98) {
        let eps = f * eps_max(p);
        let lam = real_root_lambda(p, h).unwrap();
        let (l1, linf) = real_roots_eps(p, h, eps).unwrap();
        let e2 = 1.0 / (eps * eps);
        let chain = [0.0, lam, l1, 2.0 * (p - 1.0), e2 - 2.0 * (p - 1.0), linf, e2 + 1.0];
        prop_assert!(chain.windows(2).all(|w| w[0] < w[1]), "{:?}", chain);
        prop_assert!(chi(p, h, eps, Complex64::new(l1, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn lambda1_grows_with_eps(p in 1.1f64..8.0, h in 0.05f64..3.0, a in 0.02f64..0.9, da in 0.01f64..0.08) {
        let em = eps_max(p);
        let (la, _) = real_roots_eps(p, h, a * em).unwrap();
        let (lb, _) = real_roots_eps(p, h, (a + da) * em).unwrap();
        prop_assert!(real_root_lambda(p, h).unwrap() < la && la < lb);
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let qp = QuasiPolynomial::new(2.5, 1.5, 0.05).unwrap();
    let a = roots_in_strip(&qp, -3.0, 3.0, Exec::Sequential).unwrap();
    let b = roots_in_strip(&qp, -3.0, 3.0, Exec::Parallel).unwrap();
    assert_eq!(a.roots, b.roots);
}

#[test]
fn far_left_strip_is_refused() {
    // Re z = -20 with h = 40: roots there reach |Im z| ~ 2 e^{800}
    let qp = QuasiPolynomial::new(2.0, 40.0, 0.0).unwrap();
    let err = roots_in_strip(&qp, -20.0, -19.9, Exec::default()).unwrap_err();
    assert!(matches!(err, RootError::TooManyRoots { .. }), "{err:?}");
}
