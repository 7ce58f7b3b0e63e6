//! Intensity-domain transforms: gamma correction, masked brightness and
//! contrast, color jitter, grayscale conversion, solarization, and
//! contrast-limited adaptive histogram equalization.
//!
//! All operations are deterministic given their parameters; stochastic
//! parameter selection lives in the pipeline layer. Intensity arithmetic is
//! carried in `f64` and rounded/clamped once at the final write. Factors of
//! exactly 1 (and a hue shift of 0) short-circuit, so identity parameters
//! reproduce the input bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fov::FovMask;
use crate::image::{clamp_u8, Image};

/// BT.601 luminance weights; the conventional choice for 8-bit imagery.
const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Sampled photometric parameters. Fields are only meaningful for the
/// transform that draws them; defaults are the identity settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhotometricParams {
    pub gamma: f64,
    pub brightness_factor: f64,
    pub contrast_factor: f64,
    pub saturation_factor: f64,
    /// Fraction of the hue circle in [-0.5, 0.5].
    pub hue_shift: f64,
    pub clahe_clip: f64,
    pub clahe_tiles: usize,
    pub solarize_threshold: u16,
}

impl PhotometricParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 {
            return Err(Error::Parameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        for (name, v) in [
            ("brightness", self.brightness_factor),
            ("contrast", self.contrast_factor),
            ("saturation", self.saturation_factor),
        ] {
            if v <= 0.0 {
                return Err(Error::Parameter(format!("{name} factor must be positive, got {v}")));
            }
        }
        if !(-0.5..=0.5).contains(&self.hue_shift) {
            return Err(Error::Parameter(format!(
                "hue shift must be in [-0.5, 0.5], got {}",
                self.hue_shift
            )));
        }
        if self.clahe_clip <= 0.0 {
            return Err(Error::Parameter("CLAHE clip limit must be positive".into()));
        }
        if self.clahe_tiles < 1 {
            return Err(Error::Parameter("CLAHE tile grid must be at least 1".into()));
        }
        if self.solarize_threshold > 256 {
            return Err(Error::Parameter("solarize threshold must be in [0, 256]".into()));
        }
        Ok(())
    }
}

impl Default for PhotometricParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            brightness_factor: 1.0,
            contrast_factor: 1.0,
            saturation_factor: 1.0,
            hue_shift: 0.0,
            clahe_clip: 40.0,
            clahe_tiles: 8,
            solarize_threshold: 256,
        }
    }
}

/// Map every intensity through `255 * (v / 255)^gamma`.
pub fn gamma_correct(image: &Image, gamma: f64) -> Result<Image> {
    if gamma <= 0.0 {
        return Err(Error::Parameter(format!("gamma must be positive, got {gamma}")));
    }
    let mut lut = [0u8; 256];
    for (i, slot) in lut.iter_mut().enumerate() {
        *slot = clamp_u8(255.0 * (i as f64 / 255.0).powf(gamma));
    }
    let mut out = image.clone();
    for v in out.data_mut() {
        *v = lut[*v as usize];
    }
    Ok(out)
}

/// Invert every intensity at or above `threshold` (0..=256; 256 never inverts).
pub fn solarize(image: &Image, threshold: u16) -> Result<Image> {
    if threshold > 256 {
        return Err(Error::Parameter(format!(
            "solarize threshold must be in [0, 256], got {threshold}"
        )));
    }
    let mut out = image.clone();
    for v in out.data_mut() {
        if (*v as u16) >= threshold {
            *v = 255 - *v;
        }
    }
    Ok(out)
}

/// Convert to grayscale with BT.601 weights. Three-channel inputs keep three
/// identical channels; single-channel inputs are already gray and unchanged.
pub fn to_grayscale(image: &Image) -> Image {
    if image.channels() == 1 {
        return image.clone();
    }
    let mut out = image.clone();
    let data = out.data_mut();
    for px in data.chunks_mut(3) {
        let y = clamp_u8(LUMA[0] * px[0] as f64 + LUMA[1] * px[1] as f64 + LUMA[2] * px[2] as f64);
        px.fill(y);
    }
    out
}

/// Brightness then contrast inside the field of view, then mask multiplication.
///
/// Contrast pivots about the mean intensity of the in-mask samples after the
/// brightness step. Pixels outside the mask come out black regardless of the
/// factors.
pub fn brightness_contrast(image: &Image, b: f64, k: f64, mask: &FovMask) -> Result<Image> {
    if b <= 0.0 || k <= 0.0 {
        return Err(Error::Parameter(format!(
            "brightness/contrast factors must be positive, got ({b}, {k})"
        )));
    }
    if image.height() != mask.height() || image.width() != mask.width() {
        return Err(Error::Shape("image and mask dimensions differ".into()));
    }
    let ch = image.channels();
    let mut values: Vec<f64> = image.data().iter().map(|&v| v as f64).collect();
    if b != 1.0 {
        for v in &mut values {
            *v *= b;
        }
    }
    if k != 1.0 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (pixel, &keep) in mask.bits().iter().enumerate() {
            if keep {
                for c in 0..ch {
                    sum += values[pixel * ch + c];
                    count += 1;
                }
            }
        }
        if count > 0 {
            let mean = sum / count as f64;
            for v in &mut values {
                *v = mean + k * (*v - mean);
            }
        }
    }
    let mut out = image.clone();
    let data = out.data_mut();
    for (pixel, &keep) in mask.bits().iter().enumerate() {
        for c in 0..ch {
            data[pixel * ch + c] = if keep { clamp_u8(values[pixel * ch + c]) } else { 0 };
        }
    }
    Ok(out)
}

/// Brightness, contrast, saturation, and hue adjustments, in that fixed order.
///
/// Contrast pivots about the global mean luminance. Single-channel images are
/// treated as three identical channels, which makes the saturation and hue
/// steps no-ops on them.
pub fn color_jitter(image: &Image, b: f64, k: f64, s: f64, h: f64) -> Result<Image> {
    if b <= 0.0 || k <= 0.0 || s <= 0.0 {
        return Err(Error::Parameter(
            "brightness/contrast/saturation factors must be positive".into(),
        ));
    }
    if !(-0.5..=0.5).contains(&h) {
        return Err(Error::Parameter(format!("hue shift must be in [-0.5, 0.5], got {h}")));
    }
    let ch = image.channels();
    let px_count = image.pixel_count();
    // Per-pixel RGB working buffer (gray replicated when single-channel).
    let mut rgb: Vec<[f64; 3]> = Vec::with_capacity(px_count);
    for pixel in 0..px_count {
        let mut p = [0.0; 3];
        for (c, v) in p.iter_mut().enumerate() {
            *v = image.data()[pixel * ch + c.min(ch - 1)] as f64;
        }
        rgb.push(p);
    }

    if b != 1.0 {
        for p in &mut rgb {
            for v in p.iter_mut() {
                *v *= b;
            }
        }
    }
    if k != 1.0 {
        let mean = rgb
            .iter()
            .map(|p| LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2])
            .sum::<f64>()
            / px_count as f64;
        for p in &mut rgb {
            for v in p.iter_mut() {
                *v = mean + k * (*v - mean);
            }
        }
    }
    if s != 1.0 {
        for p in &mut rgb {
            let y = LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2];
            for v in p.iter_mut() {
                *v = y + s * (*v - y);
            }
        }
    }
    if h != 0.0 {
        for p in &mut rgb {
            *p = shift_hue(*p, h);
        }
    }

    let mut out = image.clone();
    let data = out.data_mut();
    for (pixel, p) in rgb.iter().enumerate() {
        if ch == 1 {
            data[pixel] = clamp_u8(p[0]);
        } else {
            for c in 0..3 {
                data[pixel * 3 + c] = clamp_u8(p[c]);
            }
        }
    }
    Ok(out)
}

/// Rotate the hue of an RGB triple by `shift` (fraction of the hue circle).
fn shift_hue(p: [f64; 3], shift: f64) -> [f64; 3] {
    let (r, g, b) = (p[0] / 255.0, p[1] / 255.0, p[2] / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta <= 0.0 {
        return p;
    }
    let mut hue = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    } / 6.0;
    hue = (hue + shift).rem_euclid(1.0);
    let sat = if max > 0.0 { delta / max } else { 0.0 };

    let hh = hue * 6.0;
    let sector = hh.floor() as i64 % 6;
    let f = hh - hh.floor();
    let v = max;
    let p0 = v * (1.0 - sat);
    let q = v * (1.0 - sat * f);
    let t = v * (1.0 - sat * (1.0 - f));
    let (r2, g2, b2) = match sector {
        0 => (v, t, p0),
        1 => (q, v, p0),
        2 => (p0, v, t),
        3 => (p0, q, v),
        4 => (t, p0, v),
        _ => (v, p0, q),
    };
    [r2 * 255.0, g2 * 255.0, b2 * 255.0]
}

/// Contrast-limited adaptive histogram equalization over a `tiles x tiles`
/// grid with bilinear blending between the per-tile mappings.
///
/// The clip limit is an absolute per-bin count ceiling; clipped mass is
/// redistributed uniformly over all bins. Tile histograms are collected from
/// in-mask pixels only, and out-of-mask pixels pass through untouched.
/// Three-channel inputs are equalized on luminance, scaling each channel by
/// the luminance ratio.
pub fn clahe(image: &Image, clip: f64, tiles: usize, mask: &FovMask) -> Result<Image> {
    if clip <= 0.0 {
        return Err(Error::Parameter(format!("clip limit must be positive, got {clip}")));
    }
    if tiles < 1 {
        return Err(Error::Parameter("tile grid must be at least 1".into()));
    }
    let (h, w) = (image.height(), image.width());
    if h < tiles || w < tiles {
        return Err(Error::Shape(format!(
            "image {h}x{w} is smaller than the {tiles}x{tiles} tile grid"
        )));
    }
    if mask.height() != h || mask.width() != w {
        return Err(Error::Shape("image and mask dimensions differ".into()));
    }

    // Luminance plane.
    let luma: Vec<u8> = if image.channels() == 1 {
        image.data().to_vec()
    } else {
        image
            .data()
            .chunks(3)
            .map(|px| clamp_u8(LUMA[0] * px[0] as f64 + LUMA[1] * px[1] as f64 + LUMA[2] * px[2] as f64))
            .collect()
    };

    // Tile boundaries by even integer split.
    let bound = |i: usize, n: usize, total: usize| i * total / n;
    let mut luts = vec![[0.0f64; 256]; tiles * tiles];

    let build_lut = |ty: usize, tx: usize| -> [f64; 256] {
        let (r0, r1) = (bound(ty, tiles, h), bound(ty + 1, tiles, h));
        let (c0, c1) = (bound(tx, tiles, w), bound(tx + 1, tiles, w));
        let mut hist = [0.0f64; 256];
        let mut count = 0usize;
        for row in r0..r1 {
            for col in c0..c1 {
                if mask.get(row, col) {
                    hist[luma[row * w + col] as usize] += 1.0;
                    count += 1;
                }
            }
        }
        let mut lut = [0.0f64; 256];
        if count == 0 {
            for (v, slot) in lut.iter_mut().enumerate() {
                *slot = v as f64;
            }
            return lut;
        }
        // Clip and redistribute.
        let mut excess = 0.0;
        for bin in hist.iter_mut() {
            if *bin > clip {
                excess += *bin - clip;
                *bin = clip;
            }
        }
        let share = excess / 256.0;
        let mut cdf = 0.0;
        for (v, slot) in lut.iter_mut().enumerate() {
            cdf += hist[v] + share;
            *slot = 255.0 * cdf / count as f64;
        }
        lut
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        luts.par_iter_mut().enumerate().for_each(|(i, lut)| {
            *lut = build_lut(i / tiles, i % tiles);
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, lut) in luts.iter_mut().enumerate() {
            *lut = build_lut(i / tiles, i % tiles);
        }
    }

    // Tile centers for the blending weights.
    let centers = |n: usize, total: usize| -> Vec<f64> {
        (0..n)
            .map(|i| (bound(i, n, total) + bound(i + 1, n, total)) as f64 / 2.0 - 0.5)
            .collect()
    };
    let cy = centers(tiles, h);
    let cx = centers(tiles, w);

    // Piecewise-linear position between neighboring tile centers; clamped
    // to the nearest tile outside the first/last center.
    let locate = |pos: f64, cs: &[f64]| -> (usize, usize, f64) {
        if pos <= cs[0] {
            return (0, 0, 0.0);
        }
        if pos >= cs[cs.len() - 1] {
            let last = cs.len() - 1;
            return (last, last, 0.0);
        }
        let mut i = 0;
        while pos > cs[i + 1] {
            i += 1;
        }
        (i, i + 1, (pos - cs[i]) / (cs[i + 1] - cs[i]))
    };

    let mut out = image.clone();
    let ch = image.channels();
    for row in 0..h {
        let (ty0, ty1, fy) = locate(row as f64, &cy);
        for col in 0..w {
            if !mask.get(row, col) {
                continue;
            }
            let (tx0, tx1, fx) = locate(col as f64, &cx);
            let v = luma[row * w + col] as usize;
            let top = luts[ty0 * tiles + tx0][v] * (1.0 - fx) + luts[ty0 * tiles + tx1][v] * fx;
            let bottom = luts[ty1 * tiles + tx0][v] * (1.0 - fx) + luts[ty1 * tiles + tx1][v] * fx;
            let mapped = top * (1.0 - fy) + bottom * fy;
            if ch == 1 {
                out.set(row, col, 0, clamp_u8(mapped));
            } else {
                let y_old = v as f64;
                for c in 0..3 {
                    let orig = image.get(row, col, c) as f64;
                    let scaled = if y_old > 0.0 { orig * mapped / y_old } else { mapped };
                    out.set(row, col, c, clamp_u8(scaled));
                }
            }
        }
    }
    Ok(out)
}
