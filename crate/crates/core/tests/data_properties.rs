use std::collections::HashSet;
use std::f64::consts::PI;

use mgdl_core::datasets::{
    build_image_split, build_manifold_split, build_mnist_split, build_synthetic_split,
    eval_lambda, raster_from_predictions, ManifoldSpec, MnistTargetSpec, SplitSeeds, SplitSizes,
    SyntheticSpec,
};
use mgdl_core::error::{IdxError, PpmError};
use mgdl_core::formats::{encode_idx, encode_ppm, parse_idx, parse_ppm, IdxTensor, RgbImage};
use mgdl_core::metrics::{psnr, psnr_unit, rse};
use mgdl_core::Matrix;
use proptest::prelude::*;

const SIZES: SplitSizes = SplitSizes {
    train: 40,
    val: 20,
    test: 20,
};

fn synthetic(setting: u8, phase_seed: u64) -> SyntheticSpec {
    SyntheticSpec::new(5, SyntheticSpec::setting_rule(setting).unwrap(), phase_seed)
        .unwrap()
        .with_frequency_step(2.0)
}

#[test]
fn synthetic_generation_is_deterministic() {
    for setting in 1..=4 {
        let a = build_synthetic_split(&synthetic(setting, 3), SIZES, SplitSeeds::default()).unwrap();
        let b = build_synthetic_split(&synthetic(setting, 3), SIZES, SplitSeeds::default()).unwrap();
        assert_eq!(a, b);
        let c = build_synthetic_split(&synthetic(setting, 4), SIZES, SplitSeeds::default()).unwrap();
        assert_ne!(a.provenance.phases, c.provenance.phases);
    }
}

#[test]
fn synthetic_targets_follow_the_formula() {
    let spec = synthetic(1, 0);
    let split = build_synthetic_split(&spec, SIZES, SplitSeeds::default()).unwrap();
    for table in [&split.train, &split.validation, &split.test] {
        for r in 0..table.len() {
            let x = table.inputs.get(r, 0);
            assert!((0.0..=1.0).contains(&x));
            let want: f64 = spec
                .frequencies
                .iter()
                .zip(&spec.phases)
                .map(|(k, p)| (2.0 * PI * k * x + p).sin())
                .sum();
            assert!((table.targets.get(r, 0) - want).abs() <= 1e-12);
            assert_eq!(table.targets.get(r, 0), eval_lambda(&spec, x));
        }
    }
}

#[test]
fn split_seeds_change_only_their_split() {
    let spec = synthetic(2, 0);
    let a = build_synthetic_split(&spec, SIZES, SplitSeeds { val: 0, test: 1 }).unwrap();
    let b = build_synthetic_split(&spec, SIZES, SplitSeeds { val: 7, test: 1 }).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
    assert_ne!(a.validation, b.validation);
}

#[test]
fn manifold_inputs_lie_on_the_curve() {
    for q in [0u32, 2, 4] {
        let spec = ManifoldSpec {
            q,
            target: synthetic(1, 0),
        };
        let a = build_manifold_split(&spec, SIZES, SplitSeeds::default()).unwrap();
        let b = build_manifold_split(&spec, SIZES, SplitSeeds::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.inputs.cols(), 2);
        assert_eq!(a.train.targets.cols(), 1);
        for r in 0..a.test.len() {
            let p = a.test.inputs.row(r);
            let radius = p[0].hypot(p[1]);
            let angle = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
            let x = angle / (2.0 * PI);
            let want = 1.0 + (2.0 * PI * q as f64 * x).sin() / 2.0;
            assert!((radius - want).abs() <= 1e-9, "q={q}");
            assert!((a.test.targets.get(r, 0) - eval_lambda(&spec.target, x)).abs() <= 1e-6);
        }
    }
}

fn image(w: usize, h: usize, seed: u8) -> RgbImage {
    let data = (0..w * h * 3)
        .map(|i| (i as u8).wrapping_mul(37).wrapping_add(seed))
        .collect();
    RgbImage::new(w, h, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn image_train_pixels_are_test_pixels(w in 2usize..20, h in 2usize..20, stride in 1usize..5) {
        let img = image(w, h, 11);
        let split = build_image_split(&img, stride).unwrap();
        prop_assert_eq!(split.test.len(), w * h);
        prop_assert_eq!(split.train.len(), h.div_ceil(stride) * w.div_ceil(stride));
        prop_assert_eq!(&split.validation, &split.train);
        let key = |t: &mgdl_core::datasets::Table, r: usize| {
            let mut k: Vec<u64> = t.inputs.row(r).iter().map(|v| v.to_bits()).collect();
            k.extend(t.targets.row(r).iter().map(|v| v.to_bits()));
            k
        };
        let test: HashSet<Vec<u64>> = (0..split.test.len()).map(|r| key(&split.test, r)).collect();
        for r in 0..split.train.len() {
            prop_assert!(test.contains(&key(&split.train, r)));
        }
    }

    #[test]
    fn test_raster_round_trips(w in 2usize..12, h in 2usize..12, seed in any::<u8>()) {
        let img = image(w, h, seed);
        let split = build_image_split(&img, 2).unwrap();
        let back = raster_from_predictions(h, w, &split.test.targets).unwrap();
        prop_assert_eq!(back, img);
    }

    #[test]
    fn idx_round_trips(dims in prop::collection::vec(1usize..5, 1..4), fill in any::<u8>()) {
        let n: usize = dims.iter().product();
        let t = IdxTensor {
            dims,
            data: (0..n).map(|i| (i as u8).wrapping_add(fill)).collect(),
        };
        prop_assert_eq!(parse_idx(&encode_idx(&t)).unwrap(), t);
    }

    #[test]
    fn ppm_round_trips(w in 1usize..9, h in 1usize..9, seed in any::<u8>()) {
        let img = image(w, h, seed);
        prop_assert_eq!(parse_ppm(&encode_ppm(&img)).unwrap(), img);
    }

    #[test]
    fn rse_is_scale_invariant(
        ys in prop::collection::vec(0.1f64..5.0, 6),
        ps in prop::collection::vec(-5.0f64..5.0, 6),
        c in 0.1f64..10.0,
    ) {
        let y = Matrix::new(3, 2, ys.clone()).unwrap();
        let p = Matrix::new(3, 2, ps.clone()).unwrap();
        let cy = Matrix::new(3, 2, ys.iter().map(|v| c * v).collect()).unwrap();
        let cp = Matrix::new(3, 2, ps.iter().map(|v| c * v).collect()).unwrap();
        let (a, b) = (rse(&p, &y).unwrap(), rse(&cp, &cy).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn psnr_falls_as_error_grows(e in 0.5f64..50.0, grow in 1.01f64..3.0) {
        let truth = vec![100.0; 12];
        let small: Vec<f64> = truth.iter().map(|v| v + e).collect();
        let large: Vec<f64> = truth.iter().map(|v| v + e * grow).collect();
        prop_assert!(psnr(&truth, &small).unwrap() > psnr(&truth, &large).unwrap());
    }
}

#[test]
fn metric_identities() {
    let y = Matrix::new(2, 2, vec![1.0, -2.0, 3.0, 0.5]).unwrap();
    assert_eq!(rse(&y, &y).unwrap(), 0.0);
    assert_eq!(rse(&Matrix::zeros(2, 2), &y).unwrap(), 1.0);
    assert!(rse(&y, &Matrix::zeros(2, 2)).is_err());
    let truth = vec![100.0; 30];
    let off: Vec<f64> = truth.iter().map(|v| v + 25.5).collect();
    assert!((psnr(&truth, &off).unwrap() - 20.0).abs() <= 1e-12);
    assert_eq!(psnr(&truth, &truth).unwrap(), f64::INFINITY);
}

#[test]
fn unit_psnr_clamps_predictions() {
    let t = Matrix::new(1, 3, vec![0.0, 1.0, 0.5]).unwrap();
    let p = Matrix::new(1, 3, vec![-4.0, 9.0, 0.5]).unwrap();
    assert_eq!(psnr_unit(&t, &p).unwrap(), f64::INFINITY);
}

fn idx_bytes(dims: &[u32], data: &[u8]) -> Vec<u8> {
    let mut b = vec![0, 0, 0x08, dims.len() as u8];
    for d in dims {
        b.extend_from_slice(&d.to_be_bytes());
    }
    b.extend_from_slice(data);
    b
}

#[test]
fn hand_built_idx_fixtures_parse() {
    let images = parse_idx(&idx_bytes(&[2, 2, 3], &[0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255])).unwrap();
    assert_eq!(images.dims, vec![2, 2, 3]);
    assert_eq!(images.item(1), &[250, 251, 252, 253, 254, 255]);
    let labels = parse_idx(&idx_bytes(&[3], &[7, 0, 9])).unwrap();
    assert_eq!(labels.dims, vec![3]);
    assert_eq!(labels.data, vec![7, 0, 9]);
    assert_eq!(encode_idx(&labels), idx_bytes(&[3], &[7, 0, 9]));
}

#[test]
fn malformed_idx_errors_are_distinct() {
    assert_eq!(parse_idx(&[1, 0, 8, 1, 0, 0, 0, 0]), Err(IdxError::BadMagic));
    assert_eq!(parse_idx(&[0, 0, 0x0D, 1, 0, 0, 0, 0]), Err(IdxError::UnsupportedType(0x0D)));
    assert_eq!(
        parse_idx(&idx_bytes(&[4], &[1, 2])),
        Err(IdxError::Truncated { expected: 12, found: 10 })
    );
    assert!(matches!(parse_idx(&[0, 0, 8, 2, 0, 0]), Err(IdxError::Truncated { .. })));
}

#[test]
fn malformed_ppm_errors_are_distinct() {
    assert_eq!(parse_ppm(b"P3\n1 1\n255\n"), Err(PpmError::BadMagic));
    assert_eq!(parse_ppm(b"P6\n1 1\n65535\n"), Err(PpmError::UnsupportedMaxval(65535)));
    assert!(matches!(parse_ppm(b"P6\nx 1\n255\n"), Err(PpmError::BadHeader(_))));
    assert!(matches!(parse_ppm(b"P6\n2 1\n255\n\x01\x02"), Err(PpmError::Truncated { .. })));
}

fn mnist_fixture(n: usize) -> (IdxTensor, IdxTensor) {
    let images = IdxTensor {
        dims: vec![n, 2, 2],
        data: (0..n * 4).map(|i| (i * 29 % 256) as u8).collect(),
    };
    let labels = IdxTensor {
        dims: vec![n],
        data: (0..n).map(|i| (i % 10) as u8).collect(),
    };
    (images, labels)
}

#[test]
fn mnist_split_shapes_and_targets() {
    let (tri, trl) = mnist_fixture(10);
    let (tei, tel) = mnist_fixture(4);
    let spec = MnistTargetSpec {
        beta: 0.5,
        kappa: 1.0,
        n_train: 7,
        n_val: 3,
    };
    let split = build_mnist_split(&tri, &trl, &tei, &tel, &spec, 0).unwrap();
    assert_eq!(split, build_mnist_split(&tri, &trl, &tei, &tel, &spec, 0).unwrap());
    assert_eq!((split.train.len(), split.validation.len(), split.test.len()), (7, 3, 4));
    assert_eq!(split.train.inputs.cols(), 4);
    for r in 0..4 {
        let row = split.test.targets.row(r);
        assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(row[r % 10], 1.0);
    }
    for r in 0..7 {
        let row = split.train.targets.row(r);
        let factor = spec.wave_factor(split.train.inputs.row(r));
        assert!(row.iter().filter(|&&v| v != 0.0).count() <= 1);
        assert!((row.iter().sum::<f64>() - factor).abs() <= 1e-15);
    }
    let wrong = MnistTargetSpec { n_train: 8, ..spec };
    assert!(build_mnist_split(&tri, &trl, &tei, &tel, &wrong, 0).is_err());
}
