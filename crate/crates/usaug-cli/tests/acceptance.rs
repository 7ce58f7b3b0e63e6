//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS line on success (run with `--nocapture` to see them).

mod common;

use std::path::Path;
use std::process::Command;

use common::{curvilinear_beam, linear_beam, pt, snapshot_tree, textured_image, write_corpus};
use usaug::beam::BeamDescriptor;
use usaug::fov::{apply_mask, build_fov_mask, crop_to_fov};
use usaug::geometry::{convex_to_linear_map, linear_to_convex_map, remap};
use usaug::image::Image;
use usaug::noise::{gaussian_noise, salt_pepper, wavelet_denoise, WaveletParams};
use usaug::photometric::{brightness_contrast, gamma_correct, solarize};
use usaug::pipeline::{
    apply_pipeline, apply_pipeline_traced, preset, PipelineConfig, TransformId, TransformKind,
};
use usaug::rng::make_rng_stream;
use usaug::spatial::{crop_resize, crop_resize_traced, rotate_shift, AffineParams, CropParams};
use usaug::wavelet::MotherWavelet;
use usaug_cli::run::{render_inspect, run_bench, run_preprocess};

fn pass(n: u32, name: &str) {
    println!("ACCEPTANCE {n:02} {name}: PASS");
}

fn usaug_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_usaug"))
}

const BYOL_TABLE: &str = "\
Pipeline: BYOL
ID   Prob    Transformation                   Parameters
B00  1.0     Crop and resize                  area U(0.08, 1.0), aspect U(0.75, 1.3333)
B01  0.5     Horizontal reflection            -
B02  0.8     Color jitter                     brightness U(0.6, 1.4), contrast U(0.6, 1.4), saturation U(0.8, 1.2), hue U(-0.1, 0.1)
B03  0.2     Conversion to grayscale          -
B04  0.5     Gaussian blur                    kernel 13, sigma U(0.1, 2.0)
B05  0.1     Solarization                     threshold 128
";

const AUGUS_O_TABLE: &str = "\
Pipeline: AugUS-O
ID   Prob    Transformation                   Parameters
U00  0.3     Probe type change                rho U(1.0, 2.0), omega U(0.7, 0.95)
U01  0.75    Convexity change                 top width fraction U(0.6, 1.0)
U02  0.5     Wavelet denoising                wavelet {db2, db5}, alpha U(2.0, 4.0), J 3, J0 2
U03  0.2     CLAHE                            clip U(30.0, 50.0), tiles 8x8
U04  0.5     Gamma correction                 gamma U(0.5, 1.75)
U05  0.5     Brightness and contrast change   brightness U(0.6, 1.4), contrast U(0.6, 1.4)
U06  0.5     Depth change simulation          depth U(0.8, 1.25)
U07  0.333   Speckle noise simulation         lateral U{35..45}, axial U{75..85}, phasors U{5..10}
U08  0.333   Gaussian noise                   sigma U(0.5, 2.5)
U09  0.1     Salt & pepper noise              salt U(0.001, 0.005), pepper U(0.001, 0.005)
U10  0.5     Horizontal reflection            -
U11  0.5     Rotation & shift                 angle U(-22.5, 22.5) deg, shift x U(-0.2, 0.2), shift y U(-0.2, 0.2)
";

/// Criterion 1: the rendered BYOL and AugUS-O tables match the published
/// transform tables exactly, and AugUS-D has the distilled order.
#[test]
fn criterion_01_preset_fidelity() {
    assert_eq!(render_inspect(&preset("BYOL").unwrap()), BYOL_TABLE);
    assert_eq!(render_inspect(&preset("AugUS-O").unwrap()), AUGUS_O_TABLE);

    // The CLI binary prints the same bytes.
    for (name, table) in [("byol", BYOL_TABLE), ("augus-o", AUGUS_O_TABLE)] {
        let output = usaug_bin().args(["inspect", "--pipeline", name]).output().unwrap();
        assert!(output.status.success());
        assert_eq!(String::from_utf8(output.stdout).unwrap(), table);
    }

    let d = preset("AugUS-D").unwrap();
    let order: Vec<TransformId> = d.transforms.iter().map(|t| t.id()).collect();
    assert_eq!(
        order,
        [TransformId::U03, TransformId::B02, TransformId::U11, TransformId::B00]
    );
    pass(1, "preset-fidelity");
}

/// Criterion 2: `pair` on a 50-image corpus is byte-identical across reruns
/// with the same seed, and a different seed changes at least one file.
#[test]
fn criterion_02_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(&dir.path().join("raw"), 50, 128);

    let emit = |seed: &str, out: &Path| {
        let status = usaug_bin()
            .args(["pair", "--manifest"])
            .arg(&manifest)
            .args(["--pipeline", "augus-d", "--seed", seed, "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let (a, b, c) = (
        dir.path().join("run_a"),
        dir.path().join("run_b"),
        dir.path().join("run_c"),
    );
    emit("7", &a);
    emit("7", &b);
    emit("8", &c);

    let (ta, tb, tc) = (snapshot_tree(&a), snapshot_tree(&b), snapshot_tree(&c));
    assert_eq!(ta, tb, "identical seeds must produce byte-identical trees");
    assert_eq!(ta.len(), 100, "two views for each of 50 entries");
    let changed = ta
        .iter()
        .zip(tc.iter())
        .filter(|((pa, da), (pc, dc))| pa == pc && da != dc)
        .count();
    assert!(changed >= 1, "changing the seed must change at least one file");
    pass(2, "determinism");
}

/// Criterion 3: linear-to-convex composed with the matched convex-to-linear
/// reconstructs a smooth gradient with interior MAE below 10/255.
#[test]
fn criterion_03_geometry_round_trip() {
    let beam = BeamDescriptor::linear(pt(40.0, 20.0), pt(160.0, 20.0), pt(40.0, 180.0), pt(160.0, 180.0))
        .unwrap();
    let image = Image::from_fn(200, 200, 1, |r, c, _| {
        (40.0 + 100.0 * (r as f64 / 199.0) + 100.0 * (c as f64 / 199.0)) as u8
    })
    .unwrap();
    let masked = apply_mask(&image, &build_fov_mask(&beam, 200, 200).unwrap()).unwrap();
    for rho in [1.2, 1.5, 2.0] {
        let (fwd, convex) = linear_to_convex_map(&beam, rho, 200, 200).unwrap();
        let intermediate = remap(&masked, &fwd);
        let omega = (beam.p2.x - beam.p1.x) / 200.0;
        let (bwd, _) = convex_to_linear_map(&convex, omega, 200, 200).unwrap();
        let restored = remap(&intermediate, &bwd);

        // Interior of the beam, excluding a 5% border band.
        let (mx, my) = ((120.0 * 0.05) as usize, (160.0 * 0.05) as usize);
        let mut total = 0.0;
        let mut count = 0usize;
        for row in (20 + my)..(180 - my) {
            for col in (40 + mx)..(160 - mx) {
                total += (restored.get(row, col, 0) as f64 - masked.get(row, col, 0) as f64).abs();
                count += 1;
            }
        }
        let mae = total / count as f64;
        assert!(mae < 10.0, "rho {rho}: interior MAE {mae:.3} >= 10 intensity levels");
    }
    pass(3, "geometry-round-trip");
}

/// Criterion 4: the hand-derived linear-to-convex example. The oracle is
/// evaluated inline, independently of the implementation.
#[test]
fn criterion_04_conversion_oracle() {
    // Hand evaluation for p1=(40,20) p2=(160,20) p3=(40,180) p4=(160,180),
    // rho = 1.5, computed directly from the published construction.
    let rho = 1.5f64;
    let (y1, y3, x1, x3, x4) = (20.0f64, 180.0f64, 40.0f64, 40.0f64, 160.0f64);
    let oracle_r_b = rho * (y3 - y1);
    let oracle_x0 = x3.max(0.0) + (x4 - x3) / 2.0;
    let oracle_y0 = y3 - oracle_r_b;
    let oracle_y3 = oracle_y0 + (oracle_r_b * oracle_r_b - (oracle_x0 - x1) * (oracle_x0 - x1)).sqrt();
    let oracle_x1 = oracle_x0 - (y1 - oracle_y0) * (oracle_x0 - x3) / (oracle_y3 - oracle_y0);
    let oracle_r_t = (oracle_x0 - oracle_x1).hypot(y1 - oracle_y0);

    let beam = BeamDescriptor::linear(pt(40.0, 20.0), pt(160.0, 20.0), pt(40.0, 180.0), pt(160.0, 180.0))
        .unwrap();
    let (_, nb) = linear_to_convex_map(&beam, rho, 200, 200).unwrap();
    let apex = nb.apex.unwrap();

    let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1.0);
    assert!(rel(nb.radius_bottom().unwrap(), oracle_r_b) < 1e-6);
    assert!(rel(apex.x, oracle_x0) < 1e-6);
    assert!(rel(apex.y, oracle_y0) < 1e-6);
    assert!(rel(nb.p1.x, oracle_x1) < 1e-6);
    assert!(rel(nb.radius_top().unwrap(), oracle_r_t) < 1e-6);

    // The published two-decimal approximations of the same quantities.
    assert!((oracle_r_b - 240.0).abs() < 1e-9);
    assert!((apex.x - 100.0).abs() < 0.01 && (apex.y - -60.0).abs() < 0.01);
    assert!((nb.p1.x - 79.34).abs() < 0.01);
    assert!((nb.radius_top().unwrap() - 82.63).abs() < 0.01);
    pass(4, "conversion-oracle");
}

/// Criterion 5: identity parameters reproduce the input bit for bit.
#[test]
fn criterion_05_identity_parameters() {
    let image = textured_image(96, 96, 11);
    let beam = linear_beam(96, 96);
    let full = usaug::FovMask::full(96, 96);

    assert_eq!(gamma_correct(&image, 1.0).unwrap(), image, "gamma 1");
    assert_eq!(
        brightness_contrast(&image, 1.0, 1.0, &full).unwrap(),
        image,
        "brightness/contrast 1"
    );
    assert_eq!(usaug::geometry::depth_change(&image, &beam, 1.0).unwrap(), image, "depth 1");
    assert_eq!(
        rotate_shift(&image, &AffineParams::default()).unwrap(),
        image,
        "zero rotation and shift"
    );
    let full_crop = CropParams {
        min_area_c: 1.0,
        max_area: 1.0,
        aspect_lo: 1.0,
        aspect_hi: 1.0,
    };
    assert_eq!(
        crop_resize(&image, &full_crop, &mut make_rng_stream(1, 0, 0)).unwrap(),
        image,
        "full-frame crop"
    );
    assert_eq!(solarize(&image, 256).unwrap(), image, "threshold-256 solarize");

    let mut config = preset("AugUS-O").unwrap();
    for spec in &mut config.transforms {
        spec.probability = 0.0;
    }
    let (out, out_beam) =
        apply_pipeline(&config, &image, &beam, &make_rng_stream(1, 2, 3)).unwrap();
    assert_eq!(out, image, "all-probability-0 pipeline");
    assert_eq!(out_beam, beam);
    pass(5, "identity-parameters");
}

/// Criterion 6: Bernoulli inclusion, multiplicative-noise std, and
/// salt & pepper counts land within their statistical bounds.
#[test]
fn criterion_06_stochastic_statistics() {
    // Inclusion rates over 10^4 pipeline invocations (4-sigma binomial).
    let config = preset("AugUS-O").unwrap().with_seed(101);
    let image = textured_image(16, 16, 0);
    let beam = linear_beam(16, 16);
    let trials = 10_000u64;
    let mut counts: std::collections::HashMap<TransformId, u64> = Default::default();
    for image_id in 0..trials {
        let stream = make_rng_stream(101, image_id, 0);
        let run = apply_pipeline_traced(&config, &image, &beam, &stream).unwrap();
        for entry in &run.trace {
            if entry.included {
                *counts.entry(entry.id).or_insert(0) += 1;
            }
        }
    }
    for spec in &config.transforms {
        let p = spec.probability;
        let observed = *counts.get(&spec.id()).unwrap_or(&0) as f64;
        let expected = p * trials as f64;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (observed - expected).abs() <= 4.0 * sigma,
            "{}: {observed} vs {expected} +/- {:.1}",
            spec.id(),
            4.0 * sigma
        );
    }

    // Multiplicative Gaussian noise: empirical std within 5% of sigma.
    let constant = Image::from_fn(320, 320, 1, |_, _, _| 100).unwrap();
    let noisy = gaussian_noise(&constant, 0.1, &mut make_rng_stream(5, 0, 0)).unwrap();
    let n = noisy.data().len() as f64;
    let mean = noisy.data().iter().map(|&v| v as f64).sum::<f64>() / n;
    let std = (noisy.data().iter().map(|&v| (v as f64 - mean) * (v as f64 - mean)).sum::<f64>() / n)
        .sqrt();
    assert!((std - 10.0).abs() / 10.0 < 0.05, "noise std {std:.3} outside 10 +/- 5%");

    // Salt & pepper: altered count within 4-sigma binomial bounds.
    let gray = Image::from_fn(200, 200, 1, |_, _, _| 128).unwrap();
    let (fs, fp) = (0.004, 0.003);
    let out = salt_pepper(&gray, fs, fp, &mut make_rng_stream(6, 0, 0)).unwrap();
    let altered = out.data().iter().filter(|&&v| v != 128).count() as f64;
    let total = 200.0 * 200.0;
    let expected = (fs + fp) * total;
    let sigma = (total * (fs + fp) * (1.0 - fs - fp)).sqrt();
    assert!((altered - expected).abs() <= 4.0 * sigma);
    pass(6, "stochastic-statistics");
}

/// Criterion 7: cropping lands exactly on the mask's bounding box, nothing
/// survives outside the mask, and preprocessing is byte-level idempotent.
#[test]
fn criterion_07_preprocessing_contract() {
    // Direct contract on a convex beam.
    let beam = curvilinear_beam(128, 128);
    let image = textured_image(128, 128, 21);
    let mask = build_fov_mask(&beam, 128, 128).unwrap();
    let masked = apply_mask(&image, &mask).unwrap();
    for row in 0..128 {
        for col in 0..128 {
            if !mask.get(row, col) {
                assert_eq!(masked.get(row, col, 0), 0);
            }
        }
    }
    let (r0, c0, r1, c1) = mask.bounding_box().unwrap();
    let cropped = crop_to_fov(&masked, &mask, &beam).unwrap();
    assert_eq!(cropped.image.height(), r1 - r0 + 1);
    assert_eq!(cropped.image.width(), c1 - c0 + 1);

    // End-to-end idempotence through the CLI runner: a second pass over its
    // own output is a byte-level no-op.
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(&dir.path().join("raw"), 9, 96);
    let out1 = dir.path().join("pass1");
    let out2 = dir.path().join("pass2");
    let s1 = run_preprocess(&manifest, &out1).unwrap();
    assert_eq!(s1.skipped, 0);
    let s2 = run_preprocess(&out1.join("manifest.json"), &out2).unwrap();
    assert_eq!(s2.skipped, 0);
    assert_eq!(snapshot_tree(&out1), snapshot_tree(&out2));
    pass(7, "preprocessing-contract");
}

/// Criterion 8: qualitative runtime ordering on a 128x128 image with 1000
/// timed iterations per transform (absolute times are hardware-dependent
/// and not asserted).
#[test]
fn criterion_08_runtime_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let img_path = dir.path().join("bench.png");
    usaug_cli::manifest::save_image(&textured_image(128, 128, 8), &img_path).unwrap();
    let beam = usaug_cli::manifest::BeamSpec::from_beam(&linear_beam(128, 128));

    let mut timings = std::collections::HashMap::new();
    for name in ["AugUS-O", "BYOL"] {
        let config = preset(name).unwrap().with_seed(1);
        let report = run_bench(&config, &img_path, &beam, 1000, 10).unwrap();
        assert_eq!(report.iterations, 1000);
        for t in report.results {
            timings.insert(t.id.clone(), t.mean_ms);
        }
    }
    for (slow, fast) in [("U02", "U09"), ("U03", "U04"), ("U07", "U08"), ("B02", "B01")] {
        let (ts, tf) = (timings[slow], timings[fast]);
        assert!(
            ts > tf,
            "expected mean time of {slow} ({ts:.4} ms) to exceed {fast} ({tf:.4} ms)"
        );
    }
    pass(8, "runtime-ordering");
}

/// Criterion 9: wavelet denoising reduces MSE against a clean reference for
/// both wavelets and alpha in {2, 3, 4}.
#[test]
fn criterion_09_denoising_sanity() {
    let clean = Image::from_fn(96, 96, 1, |r, c, _| {
        (70.0 + 50.0 * ((r as f64 / 95.0) * std::f64::consts::PI).sin()
            + 40.0 * (c as f64 / 95.0)) as u8
    })
    .unwrap();
    let mut stream = make_rng_stream(909, 0, 0);
    let mut noisy = clean.clone();
    for v in noisy.data_mut() {
        let n = stream.sample_normal(0.0, 14.0).unwrap();
        *v = usaug::image::clamp_u8(*v as f64 + n);
    }
    let mse = |a: &Image, b: &Image| {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| {
                let d = x as f64 - y as f64;
                d * d
            })
            .sum::<f64>()
            / a.data().len() as f64
    };
    let base = mse(&noisy, &clean);
    for wavelet in [MotherWavelet::Db2, MotherWavelet::Db5] {
        for alpha in [2.0, 3.0, 4.0] {
            let params = WaveletParams {
                mother_wavelet: wavelet,
                alpha,
                levels_j: 3,
                level_j0: 2,
            };
            let denoised = wavelet_denoise(&noisy, &params).unwrap();
            let got = mse(&denoised, &clean);
            assert!(
                got < base,
                "{wavelet} alpha {alpha}: MSE {got:.2} not below noisy {base:.2}"
            );
        }
    }
    pass(9, "denoising-sanity");
}

/// Criterion 10: minimum-crop-area configurations validate, round-trip, and
/// every sampled area over 10^3 draws lies in [c, 1] of the frame.
#[test]
fn criterion_10_crop_hyperparameter_plumbing() {
    let image = textured_image(64, 64, 31);
    for c in [0.05, 0.08, 0.3, 0.9] {
        let text = format!(
            r#"{{"name":"sweep-{c}","seed":3,"transforms":[{{"id":"B00","p":1.0,"params":{{"area":[{c},1.0]}}}}]}}"#
        );
        let config = PipelineConfig::from_json(&text).unwrap();
        let round_tripped = PipelineConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(round_tripped, config, "c={c} round trip");

        let bounds = match &config.transforms[0].kind {
            TransformKind::CropResize(b) => CropParams {
                min_area_c: b.area[0],
                max_area: b.area[1],
                aspect_lo: b.aspect[0],
                aspect_hi: b.aspect[1],
            },
            other => panic!("unexpected kind {other:?}"),
        };
        let mut stream = make_rng_stream(3, 0, 0);
        for _ in 0..1000 {
            let (_, draw) = crop_resize_traced(&image, &bounds, &mut stream).unwrap();
            let area = draw.area_fraction * (64.0 * 64.0);
            assert!(
                area >= c * 64.0 * 64.0 - 1e-9 && area <= 64.0 * 64.0,
                "c={c}: sampled area {area} outside [{}, {}]",
                c * 64.0 * 64.0,
                64.0 * 64.0
            );
        }
    }
    pass(10, "crop-hyperparameter-plumbing");
}
