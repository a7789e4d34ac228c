//! Property tests over random groups, points and fields.

use ckn_core::fields;
use ckn_core::quadrature::{GaussLegendre, QuadratureSettings};
use ckn_core::{GroupSpec, NormFamily, QuasiNorm, ToleranceProfile, Verifier};
use proptest::prelude::*;

fn norm_case() -> impl Strategy<Value = QuasiNorm> {
    prop_oneof![
        (1.0f64..6.0).prop_map(|p| QuasiNorm::new(
            GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(),
            NormFamily::PSum { p }
        )
        .unwrap()),
        (1.0f64..6.0).prop_map(|p| QuasiNorm::new(GroupSpec::heisenberg(), NormFamily::PSum { p }).unwrap()),
        Just(QuasiNorm::koranyi()),
        Just(QuasiNorm::new(GroupSpec::new(vec![1.0, 1.5]).unwrap(), NormFamily::Max).unwrap()),
        Just(QuasiNorm::euclidean(3).unwrap()),
    ]
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, n).prop_filter("away from the origin", |x| x.iter().any(|v| v.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn norms_are_dilation_homogeneous(qn in norm_case(), seed in any::<u64>(), lambda in 0.05f64..20.0) {
        let n = qn.dim();
        let x: Vec<f64> = (0..n).map(|k| ((seed >> (8 * k)) as u8 as f64 / 40.0) - 3.0 + 0.01).collect();
        let y = qn.spec().dilate(lambda, &x).unwrap();
        let (rx, ry) = (qn.eval(&x), qn.eval(&y));
        prop_assert!((ry - lambda * rx).abs() <= 1e-12 * (1.0 + lambda * rx), "{} vs {}", ry, lambda * rx);
    }

    #[test]
    fn norms_are_symmetric_and_positive(qn in norm_case(), x in point(3)) {
        prop_assume!(x.len() >= qn.dim());
        let x = &x[..qn.dim()];
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!(qn.eval(x) > 0.0);
        prop_assert_eq!(qn.eval(x), qn.eval(&neg));
        prop_assert_eq!(qn.eval(&vec![0.0; qn.dim()]), 0.0);
    }

    #[test]
    fn gradients_satisfy_euler_relation(qn in norm_case(), x in point(3)) {
        // E|x| = |x| for a 1-homogeneous function.
        let x = &x[..qn.dim()];
        prop_assume!(x.iter().all(|v| v.abs() > 1e-2));
        let mut grad = vec![0.0; qn.dim()];
        let r = qn.eval_with_gradient(x, &mut grad);
        let e: f64 = qn.spec().nu().iter().zip(x).zip(&grad).map(|((nu, xk), g)| nu * xk * g).sum();
        prop_assert!((e - r).abs() <= 1e-10 * r.max(1.0), "{} vs {}", e, r);
    }

    #[test]
    fn gauss_legendre_is_exact_for_low_degree(n in 2usize..24, coeffs in proptest::collection::vec(-2.0f64..2.0, 1..8)) {
        prop_assume!(coeffs.len() <= 2 * n);
        let gl = GaussLegendre::new(n).unwrap();
        let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let exact: f64 = coeffs.iter().enumerate().map(|(k, c)| c * (1.0 - (-1.0f64).powi(k as i32 + 1)) / (k + 1) as f64).sum();
        prop_assert!((gl.integrate(-1.0, 1.0, poly) - exact).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn remainder_identity_on_random_radial_bumps(
        which in 0usize..3,
        center in 1.0f64..3.0,
        width in 0.2f64..0.9,
        alpha in -1.5f64..0.9,
    ) {
        let qn = match which {
            0 => QuasiNorm::koranyi(),
            1 => QuasiNorm::new(GroupSpec::new(vec![1.0, 2.0, 3.0]).unwrap(), NormFamily::PSum { p: 4.0 }).unwrap(),
            _ => QuasiNorm::euclidean(4).unwrap(),
        };
        prop_assume!(center - width > 0.05);
        let verifier = Verifier::new(qn.clone(), QuadratureSettings::default(), ToleranceProfile::default()).unwrap();
        let f = fields::radial_bump(&qn, center, width).unwrap();
        let report = verifier.verify_remainder_identity(&f, alpha).unwrap();
        prop_assert!(report.pass, "{:?}", report);
        prop_assert!(report.relative_residual <= 1e-8);
        let ckn = verifier.verify_ckn_inequality(&f, alpha).unwrap();
        prop_assert!(ckn.ratio.unwrap() < 1.0);
    }

    #[test]
    fn remainder_is_dilation_invariant_in_ratio(lambda in 0.3f64..3.0, alpha in -1.0f64..0.5) {
        // rho = |mu| sqrt(B) / sqrt(A) is invariant under f -> f o D_lambda.
        let qn = QuasiNorm::koranyi();
        let verifier = Verifier::new(qn.clone(), QuadratureSettings::default(), ToleranceProfile::default()).unwrap();
        let f = fields::radial_bump(&qn, 2.0, 0.8).unwrap();
        let g = fields::dilated(&f, qn.spec(), lambda).unwrap();
        let a = verifier.verify_ckn_inequality(&f, alpha).unwrap().ratio.unwrap();
        let b = verifier.verify_ckn_inequality(&g, alpha).unwrap().ratio.unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }
}
