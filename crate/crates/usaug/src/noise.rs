//! Noise injection and denoising: Gaussian blur, wavelet denoising,
//! synthetic speckle, multiplicative Gaussian noise, and salt & pepper.

use serde::{Deserialize, Serialize};

use crate::beam::{BeamDescriptor, Point};
use crate::error::{Error, Result};
use crate::fov::build_fov_mask;
use crate::image::{clamp_u8, Image};
use crate::rng::RngStream;
use crate::wavelet::{birge_massart_threshold, dwt2, idwt2, MotherWavelet, Plane};

/// Sampled wavelet-denoising parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WaveletParams {
    /// Mother wavelet, drawn from {db2, db5}.
    #[serde(with = "wavelet_serde")]
    pub mother_wavelet: MotherWavelet,
    /// Sparsity parameter of the level-dependent threshold; greater than 1.
    pub alpha: f64,
    /// Decomposition levels.
    pub levels_j: usize,
    /// Coarsest level whose details are still thresholded; levels coarser
    /// than this pass through unchanged.
    pub level_j0: usize,
}

mod wavelet_serde {
    use super::MotherWavelet;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(w: &MotherWavelet, s: S) -> Result<S::Ok, S::Error> {
        w.to_string().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<MotherWavelet, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

impl WaveletParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha <= 1.0 {
            return Err(Error::Parameter(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if self.level_j0 < 1 || self.levels_j < self.level_j0 {
            return Err(Error::Parameter(format!(
                "levels must satisfy J >= J0 >= 1, got J={} J0={}",
                self.levels_j, self.level_j0
            )));
        }
        Ok(())
    }
}

impl Default for WaveletParams {
    fn default() -> Self {
        Self {
            mother_wavelet: MotherWavelet::Db2,
            alpha: 3.0,
            levels_j: 3,
            level_j0: 2,
        }
    }
}

/// Sampled speckle-field parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpeckleParams {
    /// Grid nodes across the beam (angular direction for convex beams).
    pub lateral_resolution: usize,
    /// Grid nodes along the beam depth.
    pub axial_resolution: usize,
    /// Number of random phasors summed per node.
    pub num_phasors: usize,
}

impl SpeckleParams {
    pub fn validate(&self) -> Result<()> {
        if !(35..=45).contains(&self.lateral_resolution) {
            return Err(Error::Parameter(format!(
                "lateral resolution must be in [35, 45], got {}",
                self.lateral_resolution
            )));
        }
        if !(75..=85).contains(&self.axial_resolution) {
            return Err(Error::Parameter(format!(
                "axial resolution must be in [75, 85], got {}",
                self.axial_resolution
            )));
        }
        if !(5..=10).contains(&self.num_phasors) {
            return Err(Error::Parameter(format!(
                "phasor count must be in [5, 10], got {}",
                self.num_phasors
            )));
        }
        Ok(())
    }
}

impl Default for SpeckleParams {
    fn default() -> Self {
        Self {
            lateral_resolution: 40,
            axial_resolution: 80,
            num_phasors: 7,
        }
    }
}

/// Sampled parameters of the simple noise transforms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Standard deviation of the multiplicative Gaussian factor.
    pub gaussian_sigma: f64,
    pub salt_fraction: f64,
    pub pepper_fraction: f64,
    /// Blur kernel size in pixels; odd.
    pub blur_kernel: usize,
    pub blur_sigma: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if self.gaussian_sigma <= 0.0 {
            return Err(Error::Parameter("gaussian sigma must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.salt_fraction)
            || !(0.0..=1.0).contains(&self.pepper_fraction)
        {
            return Err(Error::Parameter("salt/pepper fractions must be in [0, 1]".into()));
        }
        if self.blur_kernel.is_multiple_of(2) || self.blur_kernel == 0 {
            return Err(Error::Parameter(format!(
                "blur kernel must be odd, got {}",
                self.blur_kernel
            )));
        }
        if self.blur_sigma <= 0.0 {
            return Err(Error::Parameter("blur sigma must be positive".into()));
        }
        Ok(())
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            gaussian_sigma: 1.0,
            salt_fraction: 0.003,
            pepper_fraction: 0.003,
            blur_kernel: 13,
            blur_sigma: 1.0,
        }
    }
}

fn reflect101(i: i64, n: i64) -> usize {
    // Mirror about the edge samples without repeating them.
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - j;
    }
    j as usize
}

/// Separable Gaussian blur with a unit-sum kernel and reflective edges.
///
/// Taps are accumulated center-out in symmetric pairs, so the result
/// commutes bit-exactly with horizontal or vertical reflection.
pub fn gaussian_blur(image: &Image, kernel: usize, sigma: f64) -> Result<Image> {
    if kernel.is_multiple_of(2) || kernel == 0 {
        return Err(Error::Parameter(format!("kernel size must be odd, got {kernel}")));
    }
    if sigma <= 0.0 {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    let radius = (kernel / 2) as i64;
    let mut weights = Vec::with_capacity(radius as usize + 1);
    for t in 0..=radius {
        weights.push((-((t * t) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
    for w in &mut weights {
        *w /= sum;
    }

    let (h, w, ch) = (image.height() as i64, image.width() as i64, image.channels());
    let src: Vec<f64> = image.data().iter().map(|&v| v as f64).collect();

    // Horizontal pass.
    let mut mid = vec![0.0f64; src.len()];
    for row in 0..h {
        for col in 0..w {
            for c in 0..ch {
                let at = |x: i64| src[((row * w) as usize + reflect101(x, w)) * ch + c];
                let mut acc = weights[0] * at(col);
                for t in 1..=radius {
                    acc += weights[t as usize] * (at(col - t) + at(col + t));
                }
                mid[((row * w + col) as usize) * ch + c] = acc;
            }
        }
    }
    // Vertical pass.
    let mut out = image.clone();
    let data = out.data_mut();
    for row in 0..h {
        for col in 0..w {
            for c in 0..ch {
                let at = |y: i64| mid[(reflect101(y, h) * w as usize + col as usize) * ch + c];
                let mut acc = weights[0] * at(row);
                for t in 1..=radius {
                    acc += weights[t as usize] * (at(row - t) + at(row + t));
                }
                data[((row * w + col) as usize) * ch + c] = clamp_u8(acc);
            }
        }
    }
    Ok(out)
}

/// Wavelet-domain denoising: forward transform, level-dependent soft
/// thresholding of the detail coefficients, inverse transform, clamp.
pub fn wavelet_denoise(image: &Image, params: &WaveletParams) -> Result<Image> {
    params.validate()?;
    let min_dim = 1usize << params.levels_j;
    if image.height() < min_dim || image.width() < min_dim {
        return Err(Error::Shape(format!(
            "image {}x{} too small for {} decomposition levels",
            image.height(),
            image.width(),
            params.levels_j
        )));
    }
    let (h, w, ch) = (image.height(), image.width(), image.channels());
    let mut out = image.clone();
    for c in 0..ch {
        let plane = Plane::from_data(
            h,
            w,
            (0..h * w).map(|i| image.data()[i * ch + c] as f64).collect(),
        );
        let mut decomp = dwt2(&plane, params.mother_wavelet, params.levels_j)?;
        birge_massart_threshold(&mut decomp, params.level_j0, params.alpha)?;
        let rec = idwt2(&decomp, params.mother_wavelet, h, w);
        let data = out.data_mut();
        for (i, v) in rec.data.iter().enumerate() {
            data[i * ch + c] = clamp_u8(*v);
        }
    }
    Ok(out)
}

/// Multiplicative speckle from a coarse grid of phasor sums.
///
/// A `lateral x axial` grid of nodes is filled with the magnitude of
/// `num_phasors` unit phasors at uniformly random phases, normalized to mean
/// 1, then bilinearly interpolated to full resolution and multiplied into
/// the in-beam pixels. Grid spacing is Cartesian for linear beams and polar
/// about the apex for convex beams. Out-of-beam pixels are untouched.
pub fn speckle(
    image: &Image,
    beam: &BeamDescriptor,
    params: &SpeckleParams,
    stream: &mut RngStream,
) -> Result<Image> {
    params.validate()?;
    beam.validate()?;
    let (h, w, ch) = (image.height(), image.width(), image.channels());
    let mask = build_fov_mask(beam, h, w)?;

    let (cols, rows) = (params.lateral_resolution, params.axial_resolution);
    let mut field = vec![0.0f64; rows * cols];
    for node in field.iter_mut() {
        let mut re = 0.0;
        let mut im = 0.0;
        for _ in 0..params.num_phasors {
            let phase = stream.sample_uniform(0.0, 2.0 * std::f64::consts::PI)?;
            re += phase.cos();
            im += phase.sin();
        }
        *node = re.hypot(im);
    }
    let mean = field.iter().sum::<f64>() / field.len() as f64;
    if mean > 1e-12 {
        for v in &mut field {
            *v /= mean;
        }
    } else {
        field.fill(1.0);
    }

    // Grid coordinates of a pixel, in the beam's native parameterization.
    let convex = beam.probe_type.is_convex();
    let (apex, a1, a2, r_top, r_bottom) = if convex {
        let apex = beam.require_apex()?;
        let (a1, a2) = beam.sector_angles()?;
        (apex, a1, a2, beam.radius_top()?, beam.radius_bottom()?)
    } else {
        (Point::new(0.0, 0.0), 0.0, 0.0, 0.0, 0.0)
    };

    let sample_field = |gx: f64, gy: f64| -> f64 {
        let gx = gx.clamp(0.0, (cols - 1) as f64);
        let gy = gy.clamp(0.0, (rows - 1) as f64);
        let x0 = gx.floor() as usize;
        let y0 = gy.floor() as usize;
        let x1 = (x0 + 1).min(cols - 1);
        let y1 = (y0 + 1).min(rows - 1);
        let fx = gx - x0 as f64;
        let fy = gy - y0 as f64;
        let top = field[y0 * cols + x0] * (1.0 - fx) + field[y0 * cols + x1] * fx;
        let bottom = field[y1 * cols + x0] * (1.0 - fx) + field[y1 * cols + x1] * fx;
        top * (1.0 - fy) + bottom * fy
    };

    let mut out = image.clone();
    let data = out.data_mut();
    for row in 0..h {
        for col in 0..w {
            if !mask.get(row, col) {
                continue;
            }
            let (gx, gy) = if convex {
                let p = Point::new(col as f64, row as f64);
                let phi = crate::beam::angle_with_vertical(apex, p);
                let r = apex.distance(&p);
                (
                    (phi - a1) / (a2 - a1) * (cols - 1) as f64,
                    (r - r_top) / (r_bottom - r_top) * (rows - 1) as f64,
                )
            } else {
                (
                    col as f64 / (w - 1) as f64 * (cols - 1) as f64,
                    row as f64 / (h - 1) as f64 * (rows - 1) as f64,
                )
            };
            let factor = sample_field(gx, gy);
            for c in 0..ch {
                let idx = (row * w + col) * ch + c;
                data[idx] = clamp_u8(data[idx] as f64 * factor);
            }
        }
    }
    Ok(out)
}

/// Multiply every pixel by an independent draw from Normal(1, sigma).
/// The factor is shared across the channels of a pixel.
pub fn gaussian_noise(image: &Image, sigma: f64, stream: &mut RngStream) -> Result<Image> {
    if sigma <= 0.0 {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    let ch = image.channels();
    let mut out = image.clone();
    let data = out.data_mut();
    for pixel in 0..image.pixel_count() {
        let factor = stream.sample_normal(1.0, sigma)?;
        for c in 0..ch {
            let idx = pixel * ch + c;
            data[idx] = clamp_u8(data[idx] as f64 * factor);
        }
    }
    Ok(out)
}

/// Set each pixel to 255 with probability `f_salt`, to 0 with probability
/// `f_pepper`, and leave it unchanged otherwise.
pub fn salt_pepper(
    image: &Image,
    f_salt: f64,
    f_pepper: f64,
    stream: &mut RngStream,
) -> Result<Image> {
    if !(0.0..=1.0).contains(&f_salt) || !(0.0..=1.0).contains(&f_pepper) || f_salt + f_pepper > 1.0
    {
        return Err(Error::Parameter(format!(
            "salt/pepper fractions must be in [0, 1] and sum to at most 1, got ({f_salt}, {f_pepper})"
        )));
    }
    let ch = image.channels();
    let mut out = image.clone();
    let data = out.data_mut();
    for pixel in 0..image.pixel_count() {
        let u = stream.sample_uniform(0.0, 1.0)?;
        if u < f_salt {
            data[pixel * ch..(pixel + 1) * ch].fill(255);
        } else if u < f_salt + f_pepper {
            data[pixel * ch..(pixel + 1) * ch].fill(0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng_stream;
    use crate::spatial::hflip;

    fn full_frame_beam(h: usize, w: usize) -> BeamDescriptor {
        BeamDescriptor::linear(
            Point::new(0.0, 0.0),
            Point::new((w - 1) as f64, 0.0),
            Point::new(0.0, (h - 1) as f64),
            Point::new((w - 1) as f64, (h - 1) as f64),
        )
        .unwrap()
    }

    #[test]
    fn blur_leaves_constant_unchanged() {
        let img = Image::from_fn(32, 32, 1, |_, _, _| 180).unwrap();
        let out = gaussian_blur(&img, 13, 1.5).unwrap();
        assert_eq!(out, img);
        assert!(gaussian_blur(&img, 12, 1.0).is_err());
        assert!(gaussian_blur(&img, 13, 0.0).is_err());
    }

    #[test]
    fn blur_commutes_with_hflip() {
        let img = Image::from_fn(24, 31, 1, |r, c, _| ((r * 13 + c * 41) % 256) as u8).unwrap();
        let a = gaussian_blur(&hflip(&img), 9, 1.2).unwrap();
        let b = hflip(&gaussian_blur(&img, 9, 1.2).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn blur_preserves_interior_blob_mass() {
        // A blob well inside the frame loses no mass to the reflective border.
        let mut img = Image::new(64, 64, 1).unwrap();
        for r in 24..40 {
            for c in 24..40 {
                img.set(r, c, 0, 200);
            }
        }
        let before = img.intensity_sum() as f64;
        let out = gaussian_blur(&img, 13, 2.0).unwrap();
        let after = out.intensity_sum() as f64;
        assert!((after - before).abs() / before < 0.005, "mass drift {}", (after - before) / before);
    }

    #[test]
    fn wavelet_denoise_keeps_constant() {
        let img = Image::from_fn(32, 32, 1, |_, _, _| 99).unwrap();
        let out = wavelet_denoise(&img, &WaveletParams::default()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn wavelet_denoise_reduces_noise() {
        // Smooth reference plus deterministic pseudo-noise.
        let clean = Image::from_fn(64, 64, 1, |r, c, _| (60.0 + 60.0 * ((r + c) as f64 / 126.0)) as u8)
            .unwrap();
        let mut stream = make_rng_stream(77, 0, 0);
        let noisy = {
            let mut img = clean.clone();
            for v in img.data_mut() {
                let n = stream.sample_normal(0.0, 12.0).unwrap();
                *v = clamp_u8(*v as f64 + n);
            }
            img
        };
        let mse = |a: &Image, b: &Image| -> f64 {
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
                    ..WaveletParams::default()
                };
                let denoised = wavelet_denoise(&noisy, &params).unwrap();
                let got = mse(&denoised, &clean);
                assert!(
                    got < base,
                    "{wavelet} alpha {alpha}: MSE {got:.2} not below noisy {base:.2}"
                );
                // Energy does not increase.
                let e_in: f64 = noisy.data().iter().map(|&v| (v as f64) * (v as f64)).sum();
                let e_out: f64 = denoised.data().iter().map(|&v| (v as f64) * (v as f64)).sum();
                assert!(e_out <= e_in);
            }
        }
    }

    #[test]
    fn wavelet_denoise_rejects_small_images() {
        let img = Image::new(4, 4, 1).unwrap();
        assert!(wavelet_denoise(&img, &WaveletParams::default()).is_err());
    }

    #[test]
    fn speckle_leaves_out_of_mask_untouched() {
        let beam = BeamDescriptor::convex(
            crate::beam::ProbeType::Curvilinear,
            Point::new(40.0, 10.0),
            Point::new(88.0, 10.0),
            Point::new(16.0, 110.0),
            Point::new(112.0, 110.0),
            None,
            None,
        )
        .unwrap();
        let img = Image::from_fn(128, 128, 1, |_, _, _| 128).unwrap();
        let mut stream = make_rng_stream(3, 1, 0);
        let out = speckle(&img, &beam, &SpeckleParams::default(), &mut stream).unwrap();
        let mask = build_fov_mask(&beam, 128, 128).unwrap();
        let mut changed_inside = false;
        for row in 0..128 {
            for col in 0..128 {
                if mask.get(row, col) {
                    changed_inside |= out.get(row, col, 0) != 128;
                } else {
                    assert_eq!(out.get(row, col, 0), img.get(row, col, 0));
                }
            }
        }
        assert!(changed_inside, "speckle should modulate in-beam pixels");
    }

    #[test]
    fn speckle_preserves_mean_intensity() {
        let beam = full_frame_beam(96, 96);
        let img = Image::from_fn(96, 96, 1, |_, _, _| 100).unwrap();
        let mut total = 0.0;
        for trial in 0..100 {
            let mut stream = make_rng_stream(40, trial, 0);
            let out = speckle(&img, &beam, &SpeckleParams::default(), &mut stream).unwrap();
            total += out.intensity_sum() as f64 / out.pixel_count() as f64;
        }
        let mean = total / 100.0;
        assert!((mean - 100.0).abs() / 100.0 < 0.10, "mean {mean} drifted more than 10%");
    }

    #[test]
    fn speckle_validates_parameter_ranges() {
        let params = SpeckleParams {
            lateral_resolution: 10,
            ..SpeckleParams::default()
        };
        assert!(params.validate().is_err());
    }

    #[test]
    fn gaussian_noise_vanishing_sigma_is_identity() {
        // In the sigma -> 0 limit every factor rounds back to the input.
        let img = Image::from_fn(32, 32, 1, |r, c, _| ((r * 17 + c) % 256) as u8).unwrap();
        let out = gaussian_noise(&img, 1e-9, &mut make_rng_stream(4, 0, 0)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn gaussian_noise_statistics() {
        let img = Image::from_fn(320, 320, 1, |_, _, _| 100).unwrap();
        let mut stream = make_rng_stream(8, 0, 0);
        let out = gaussian_noise(&img, 0.1, &mut stream).unwrap();
        let n = out.data().len() as f64;
        let mean = out.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let std = (out.data().iter().map(|&v| (v as f64 - mean) * (v as f64 - mean)).sum::<f64>()
            / n)
            .sqrt();
        assert!((std - 10.0).abs() / 10.0 < 0.05, "std {std} outside 10 +/- 5%");
        assert!(gaussian_noise(&img, 0.0, &mut stream).is_err());
    }

    #[test]
    fn salt_pepper_alters_expected_count() {
        let img = Image::from_fn(200, 200, 1, |_, _, _| 128).unwrap();
        let (fs, fp) = (0.003, 0.002);
        let mut stream = make_rng_stream(9, 0, 0);
        let out = salt_pepper(&img, fs, fp, &mut stream).unwrap();
        let altered = out.data().iter().filter(|&&v| v != 128).count() as f64;
        let n = 200.0 * 200.0;
        let expected = (fs + fp) * n;
        let sigma = (n * (fs + fp) * (1.0 - fs - fp)).sqrt();
        assert!(
            (altered - expected).abs() <= 4.0 * sigma,
            "altered {altered}, expected {expected} +/- {}",
            4.0 * sigma
        );
        // Untouched pixels are exactly preserved; touched ones are 0 or 255.
        assert!(out.data().iter().all(|&v| v == 128 || v == 0 || v == 255));
    }

    #[test]
    fn salt_pepper_zero_fractions_identity() {
        let img = Image::from_fn(16, 16, 1, |r, c, _| (r * c) as u8).unwrap();
        let mut stream = make_rng_stream(1, 0, 0);
        assert_eq!(salt_pepper(&img, 0.0, 0.0, &mut stream).unwrap(), img);
        assert!(salt_pepper(&img, 0.7, 0.7, &mut stream).is_err());
    }

    #[test]
    fn noise_ops_replay_deterministically() {
        let img = Image::from_fn(48, 48, 1, |r, c, _| ((r * 31 + c * 7) % 256) as u8).unwrap();
        let beam = full_frame_beam(48, 48);
        let a = speckle(&img, &beam, &SpeckleParams::default(), &mut make_rng_stream(5, 2, 1)).unwrap();
        let b = speckle(&img, &beam, &SpeckleParams::default(), &mut make_rng_stream(5, 2, 1)).unwrap();
        assert_eq!(a, b);
        let c = gaussian_noise(&img, 1.5, &mut make_rng_stream(5, 2, 1)).unwrap();
        let d = gaussian_noise(&img, 1.5, &mut make_rng_stream(5, 2, 1)).unwrap();
        assert_eq!(c, d);
    }
}
