use stcov::geom::{rotation, GeoTransform, Mat2, RFParams, Vec2};
use stcov::kernels::{SupportConfig, TemporalKernelSpec};
use stcov::scspace::{derivative, smooth, DerivativeSpec};
use stcov::verify::{verify_derivative_covariance, verify_smoothing_covariance, VerifyConfig};
use stcov::volume::{read_volume, write_volume, Grid3, VideoVolume};
use stcov::warp::{synthesize_test_pattern, warp_video, Pattern, PatternSpec, WarpConfig};

fn gauss() -> TemporalKernelSpec {
    TemporalKernelSpec::NonCausalGaussian
}

fn blob() -> PatternSpec {
    PatternSpec::GaussianBlob {
        center: [0.0, 0.0],
        s0: 9.0,
        tau0: Some(16.0),
        t0: 0.0,
    }
}

fn grid(n: usize, nt: usize) -> Grid3 {
    Grid3::new(
        [n, n, nt],
        [
            -(n as f64 - 1.0) / 2.0,
            -(n as f64 - 1.0) / 2.0,
            -(nt as f64 - 1.0) / 2.0,
        ],
        [1.0; 3],
    )
    .unwrap()
}

#[test]
fn spatial_scaling_by_two_converges() {
    let p = RFParams::isotropic(2.0, 1.0).unwrap();
    let g = GeoTransform::spatial_scaling(2.0).unwrap();
    let coarse_grid = grid(64, 32);
    let f = synthesize_test_pattern(&blob(), &coarse_grid).unwrap();
    let coarse = verify_smoothing_covariance(&f, &g, &p, &gauss(), &VerifyConfig::default()).unwrap();
    assert!(coarse.max_rel_error < 1e-2, "{}", coarse.max_rel_error);

    let mut fine_cfg = VerifyConfig::default();
    fine_cfg.smooth.support = SupportConfig {
        spatial_sigmas: 6.0,
        temporal_sigmas: 6.0,
        causal_tail: 1e-5,
    };
    let f2 = synthesize_test_pattern(&blob(), &coarse_grid.refined(2)).unwrap();
    let fine = verify_smoothing_covariance(&f2, &g, &p, &gauss(), &fine_cfg).unwrap();
    assert!(
        fine.max_rel_error < 0.7 * coarse.max_rel_error,
        "{} -> {}",
        coarse.max_rel_error,
        fine.max_rel_error
    );
}

#[test]
fn galilean_boost_moves_the_velocity() {
    let p = RFParams::new(2.0, Mat2::identity(), 1.0, Vec2::new(0.2, 0.0)).unwrap();
    let g = GeoTransform::galilean(Vec2::new(1.0, 0.0)).unwrap();
    let f = synthesize_test_pattern(&blob(), &grid(64, 32)).unwrap();
    let rep = verify_smoothing_covariance(&f, &g, &p, &gauss(), &VerifyConfig::default()).unwrap();
    assert!((rep.params_transformed.v - Vec2::new(1.2, 0.0)).amax() < 1e-15);
    assert!(rep.max_rel_error < 1e-2, "{}", rep.max_rel_error);
}

#[test]
fn steered_derivative_follows_rotation() {
    let p = RFParams::new(2.0, Mat2::new(1.3, 0.0, 0.0, 0.8), 1.0, Vec2::zeros()).unwrap();
    let pattern = PatternSpec::GaussianBlob {
        center: [1.0, -2.0],
        s0: 25.0,
        tau0: Some(25.0),
        t0: 0.0,
    };
    let f = synthesize_test_pattern(&pattern, &grid(64, 40)).unwrap();
    let g = GeoTransform::affine(rotation(0.6)).unwrap();
    let d = DerivativeSpec::Directional { phi: 0.3, m: 2, n: 0 };
    let rep = verify_derivative_covariance(&f, &g, &p, &d, &gauss(), &VerifyConfig::default()).unwrap();
    assert!(rep.max_rel_error < 1e-2, "{}", rep.max_rel_error);
}

#[test]
fn limit_kernel_pipeline_on_quantized_scaling() {
    let p = RFParams::isotropic(2.0, 1.0).unwrap();
    let spec = TemporalKernelSpec::limit(2.0, 8).unwrap();
    let f = synthesize_test_pattern(&blob(), &grid(48, 48)).unwrap();
    let g = GeoTransform::temporal_scaling(2.0).unwrap();
    let rep = verify_smoothing_covariance(&f, &g, &p, &spec, &VerifyConfig::default()).unwrap();
    assert!(rep.max_rel_error < 1e-2, "{}", rep.max_rel_error);
    let bad = GeoTransform::temporal_scaling(1.5).unwrap();
    assert!(verify_smoothing_covariance(&f, &bad, &p, &spec, &VerifyConfig::default()).is_err());
}

#[test]
fn smoothing_is_linear() {
    let gr = grid(32, 24);
    let a = synthesize_test_pattern(&blob(), &gr).unwrap();
    let b = synthesize_test_pattern(
        &PatternSpec::FilteredNoise {
            seed: 4,
            s0: 4.0,
            tau0: 4.0,
            modes: 24,
        },
        &gr,
    )
    .unwrap();
    let p = RFParams::new(2.0, Mat2::new(1.1, 0.2, 0.2, 0.9), 2.0, Vec2::new(0.2, 0.1)).unwrap();
    let lhs = smooth(&a.combine(2.0, &b, -0.5).unwrap(), &p, &gauss()).unwrap();
    let rhs = smooth(&a, &p, &gauss())
        .unwrap()
        .combine(2.0, &smooth(&b, &p, &gauss()).unwrap(), -0.5)
        .unwrap();
    let scale = lhs.max_abs_in(lhs.valid());
    for i in lhs.valid().iter() {
        assert!((lhs.get(i) - rhs.get(i)).abs() <= 1e-10 * scale);
    }
}

#[test]
fn derivative_of_quadratic_is_exact() {
    let gr = grid(12, 8);
    let f = VideoVolume::from_fn(gr, |x| x[0] * x[0] - 3.0 * x[0] * x[2]).unwrap();
    let d = derivative(&f, &DerivativeSpec::Partial { alpha: [2, 0], n: 0 }).unwrap();
    for i in d.valid().iter() {
        assert!((d.get(i) - 2.0).abs() < 1e-10);
    }
}

#[test]
fn warp_round_trip_recovers_the_interior() {
    let gr = grid(40, 24);
    let pattern = Pattern::new(&blob()).unwrap();
    let f = VideoVolume::from_fn(gr, |x| pattern.eval(x)).unwrap();
    let g = GeoTransform::new(1.1, rotation(0.2), Vec2::new(0.2, 0.0), 1.0).unwrap();
    let there = warp_video(&f, &g, &WarpConfig::new(gr)).unwrap();
    let back = warp_video(&there.volume, &g.inverse(), &WarpConfig::new(gr)).unwrap();
    let scale = f.max_abs_in(f.valid());
    let interior = gr.full_box().shrink([12, 12, 8], [12, 12, 8]);
    for i in interior.iter() {
        assert!((back.volume.get(i) - f.get(i)).abs() < 1e-3 * scale);
    }
}

#[test]
fn volumes_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let gr = Grid3::new([3, 4, 5], [0.5, -1.0, 2.0], [1.0, 0.5, 2.0]).unwrap();
    let f = VideoVolume::from_fn(gr, |x| x[0] + 0.25 * x[1] - x[2]).unwrap();
    let valid = gr.full_box().shrink([1, 0, 1], [0, 1, 1]);
    let f = f.with_valid(valid);
    let (h, _) = write_volume(dir.path(), "f", &f, serde_json::json!({"note": "x"})).unwrap();
    let (g, header) = read_volume(&h).unwrap();
    assert_eq!(g.grid(), f.grid());
    assert_eq!(g.valid(), f.valid());
    assert_eq!(header.params["note"], "x");
    for (a, b) in g.data().iter().zip(f.data()) {
        assert_eq!(*a, *b as f32 as f64);
    }
}
