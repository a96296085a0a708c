use proptest::prelude::*;
use stcov::geom::{rotation, GeoTransform, Mat2, RFParams, Vec2};
use stcov::kernels::{affine_gaussian_2d, spatiotemporal_kernel, SupportConfig, TemporalKernel, TemporalKernelSpec};
use stcov::verify::{
    cascade_variance_error, kernel_identity_error, limit_kernel_dft_error, temporal_scaling_error, KERNEL_FLOOR,
};
use std::f64::consts::SQRT_2;

fn gauss() -> TemporalKernelSpec {
    TemporalKernelSpec::NonCausalGaussian
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_spatial_kernels_have_unit_mass(s in 1.0f64..6.0, l in 0.6f64..1.6, th in 0.0f64..3.1) {
        let r = rotation(th);
        let sigma = r * Mat2::new(l, 0.0, 0.0, 1.0 / l) * r.transpose();
        let k = affine_gaussian_2d(s, &(0.5 * (sigma + sigma.transpose())), 5.0, 1.0).unwrap();
        prop_assert!((k.mass() - 1.0).abs() < 1e-3, "{}", k.mass());
    }

    #[test]
    fn sampled_spatiotemporal_kernels_have_unit_mass(s in 1.0f64..6.0, tau in 1.0f64..8.0, v in -0.5f64..0.5) {
        let p = RFParams::new(s, Mat2::new(1.2, 0.1, 0.1, 0.9), tau, Vec2::new(v, 0.0)).unwrap();
        let k = spatiotemporal_kernel(&p, &gauss(), &SupportConfig::default(), [1.0; 3]).unwrap();
        prop_assert!((k.mass() - 1.0).abs() < 2e-3, "{}", k.mass());
    }

    // Point sampling a causal kernel aliases its spectrum by about
    // 2 Re Ψ̂(2π/Δ), so unit mass needs √τ well above the frame spacing.
    #[test]
    fn sampled_limit_kernels_have_unit_mass(tau in 9.0f64..24.0, c in prop::sample::select(vec![SQRT_2, 2.0])) {
        let spec = TemporalKernelSpec::limit(c, 8).unwrap();
        let k = TemporalKernel::new(tau, &spec).unwrap().sample(1.0, &SupportConfig::default()).unwrap();
        prop_assert!((k.mass() - 1.0).abs() < 2e-3, "{}", k.mass());
    }

    #[test]
    fn gaussian_temporal_scaling_holds_for_any_st(tau in 0.5f64..8.0, st in (1.0f64 / 3.0)..3.0) {
        prop_assert!(temporal_scaling_error(tau, st, &gauss(), 0.25, 1e-6).unwrap() < 1e-10);
    }

    #[test]
    fn kernel_identity_for_random_gaussian_transforms(
        sx in 0.5f64..2.0, a1 in 0.5f64..2.0, a2 in 0.5f64..2.0, th in -3.1f64..3.1, u in -2.0f64..2.0, st in 0.5f64..2.0,
    ) {
        let a = rotation(th) * Mat2::new(a1, 0.0, 0.0, a2);
        let g = GeoTransform::new(sx, a, Vec2::new(u, -0.5 * u), st).unwrap();
        let p = RFParams::new(2.0, Mat2::new(1.2, 0.2, 0.2, 0.8), 3.0, Vec2::new(0.3, 0.1)).unwrap();
        prop_assert!(kernel_identity_error(&g, &p, &gauss(), 0.5, KERNEL_FLOOR).unwrap() < 1e-9);
    }
}

#[test]
fn limit_kernel_scales_on_the_quantized_subgroup() {
    for c in [SQRT_2, 2.0] {
        let spec = TemporalKernelSpec::limit(c, 10).unwrap();
        for j in -1..=1 {
            let e = temporal_scaling_error(4.0, c.powi(j), &spec, 0.25, 1e-6).unwrap();
            assert!(e < 1e-3, "c = {c}, j = {j}: {e:e}");
        }
    }
}

#[test]
fn limit_kernel_matches_its_product_spectrum() {
    for c in [SQRT_2, 2.0] {
        assert!(limit_kernel_dft_error(16.0, c, 10, 0.125).unwrap() < 1e-3);
        assert!(cascade_variance_error(16.0, c, 10) < 5e-3);
    }
    assert!(cascade_variance_error(1.0, 2.0, 8) < 5e-3);
}

#[test]
fn limit_kernel_is_causal_with_unit_mass() {
    let h = TemporalKernel::new(4.0, &TemporalKernelSpec::limit(2.0, 8).unwrap()).unwrap();
    assert_eq!(h.eval(-0.5), 0.0);
    let k = h.sample(0.05, &SupportConfig::default()).unwrap();
    assert!((k.mass() - 1.0).abs() < 2e-3);
    assert!(k.values.iter().all(|v| *v >= 0.0));
}

#[test]
fn depth_below_minimum_is_rejected() {
    assert!(TemporalKernelSpec::limit(2.0, 3).is_err());
    assert!(TemporalKernelSpec::limit(1.0, 8).is_err());
    let s: Result<TemporalKernelSpec, _> = serde_json::from_str(r#"{"family":"TimeCausalLimit","c":2.0,"K":2}"#);
    assert!(s.is_err());
}
