//! Spatial transforms: random crop and resize, horizontal reflection, and
//! non-scaling rotation with shift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{remap, CoordinateMap};
use crate::image::Image;
use crate::rng::RngStream;

/// Crop sampling bounds: area fraction and width/height aspect ratio.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct CropParams {
    /// Minimum crop area as a fraction of the frame.
    pub min_area_c: f64,
    /// Maximum crop area as a fraction of the frame.
    pub max_area: f64,
    pub aspect_lo: f64,
    pub aspect_hi: f64,
}

impl CropParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_area_c > 0.0 && self.min_area_c <= self.max_area && self.max_area <= 1.0) {
            return Err(Error::Parameter(format!(
                "area bounds must satisfy 0 < min <= max <= 1, got [{}, {}]",
                self.min_area_c, self.max_area
            )));
        }
        if !(self.aspect_lo > 0.0 && self.aspect_lo <= self.aspect_hi) {
            return Err(Error::Parameter(format!(
                "aspect bounds must satisfy 0 < lo <= hi, got [{}, {}]",
                self.aspect_lo, self.aspect_hi
            )));
        }
        Ok(())
    }
}

impl Default for CropParams {
    fn default() -> Self {
        Self {
            min_area_c: 0.08,
            max_area: 1.0,
            aspect_lo: 0.75,
            aspect_hi: 4.0 / 3.0,
        }
    }
}

/// Sampled rotation angle and shift fractions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AffineParams {
    pub angle_deg: f64,
    /// Horizontal shift as a fraction of the width.
    pub shift_x_frac: f64,
    /// Vertical shift as a fraction of the height.
    pub shift_y_frac: f64,
}

impl AffineParams {
    pub fn validate(&self) -> Result<()> {
        if !(-180.0..=180.0).contains(&self.angle_deg) {
            return Err(Error::Parameter(format!(
                "angle must be in [-180, 180] degrees, got {}",
                self.angle_deg
            )));
        }
        if !(-1.0..=1.0).contains(&self.shift_x_frac) || !(-1.0..=1.0).contains(&self.shift_y_frac)
        {
            return Err(Error::Parameter("shift fractions must be in [-1, 1]".into()));
        }
        Ok(())
    }
}

impl Default for AffineParams {
    fn default() -> Self {
        Self {
            angle_deg: 0.0,
            shift_x_frac: 0.0,
            shift_y_frac: 0.0,
        }
    }
}

/// The (area, aspect) pair and rectangle actually realized by a crop draw.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CropDraw {
    pub area_fraction: f64,
    pub aspect: f64,
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

/// Random crop and resize back to the input dimensions.
///
/// Draws an area fraction and aspect ratio from the given bounds, derives the
/// crop rectangle (`height = round(sqrt(area*H*W/aspect))`, `width =
/// round(aspect*height)`, clamped to the frame), places it uniformly at
/// random, and bilinearly resizes it back to `H x W`. A degenerate rectangle
/// is re-drawn up to 10 times before falling back to the full frame.
pub fn crop_resize(image: &Image, params: &CropParams, stream: &mut RngStream) -> Result<Image> {
    let (img, _) = crop_resize_traced(image, params, stream)?;
    Ok(img)
}

/// [`crop_resize`] that also reports the realized draw.
pub fn crop_resize_traced(
    image: &Image,
    params: &CropParams,
    stream: &mut RngStream,
) -> Result<(Image, CropDraw)> {
    params.validate()?;
    let (h, w) = (image.height(), image.width());
    let frame_area = (h * w) as f64;

    let mut accepted: Option<(f64, f64, usize, usize)> = None;
    for _ in 0..10 {
        let area = stream.sample_uniform(params.min_area_c, params.max_area)?;
        let aspect = stream.sample_uniform(params.aspect_lo, params.aspect_hi)?;
        let ch = (area * frame_area / aspect).sqrt().round() as i64;
        let cw = (aspect * ch as f64).round() as i64;
        let ch = ch.clamp(0, h as i64) as usize;
        let cw = cw.clamp(0, w as i64) as usize;
        if ch >= 1 && cw >= 1 {
            accepted = Some((area, aspect, ch, cw));
            break;
        }
    }
    let (area, aspect, ch, cw) = accepted.unwrap_or((1.0, w as f64 / h as f64, h, w));

    let row0 = stream.sample_int_inclusive(0, (h - ch) as i64)? as usize;
    let col0 = stream.sample_int_inclusive(0, (w - cw) as i64)? as usize;

    let draw = CropDraw {
        area_fraction: area,
        aspect,
        row0,
        col0,
        height: ch,
        width: cw,
    };

    if ch == h && cw == w {
        // Full-frame crop: bit-identical to the input.
        return Ok((image.clone(), draw));
    }

    let chn = image.channels();
    let mut data = Vec::with_capacity(ch * cw * chn);
    for row in row0..row0 + ch {
        let start = image.sample_index(row, col0, 0);
        data.extend_from_slice(&image.data()[start..start + cw * chn]);
    }
    // A 1-pixel-thin crop cannot be represented as an Image; widen the
    // extraction window by duplicating the edge so resize still works.
    let (eh, ew) = (ch.max(2), cw.max(2));
    let crop = if eh != ch || ew != cw {
        Image::from_fn(eh, ew, chn, |r, c, k| {
            let rr = r.min(ch - 1);
            let cc = c.min(cw - 1);
            data[(rr * cw + cc) * chn + k]
        })?
    } else {
        Image::from_raw(ch, cw, chn, data)?
    };
    Ok((crop.resize_bilinear(h, w)?, draw))
}

/// Reflect about the central vertical axis: column `j` maps to `width-1-j`.
pub fn hflip(image: &Image) -> Image {
    let (h, w, ch) = (image.height(), image.width(), image.channels());
    let mut out = image.clone();
    let data = out.data_mut();
    for row in 0..h {
        for col in 0..w {
            let src = image.sample_index(row, w - 1 - col, 0);
            let dst = (row * w + col) * ch;
            data[dst..dst + ch].copy_from_slice(&image.data()[src..src + ch]);
        }
    }
    out
}

/// Rotate about the image center, then translate; bilinear sampling with
/// zero fill. Identity parameters reproduce the input bit for bit.
pub fn rotate_shift(image: &Image, params: &AffineParams) -> Result<Image> {
    params.validate()?;
    if params.angle_deg == 0.0 && params.shift_x_frac == 0.0 && params.shift_y_frac == 0.0 {
        return Ok(image.clone());
    }
    let (h, w) = (image.height(), image.width());
    let cx = (w - 1) as f64 / 2.0;
    let cy = (h - 1) as f64 / 2.0;
    let tx = params.shift_x_frac * w as f64;
    let ty = params.shift_y_frac * h as f64;
    let theta = params.angle_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    // Inverse of rotate-about-center followed by translation.
    let map = CoordinateMap::from_fn(h, w, |col, row| {
        let dx = col as f64 - cx - tx;
        let dy = row as f64 - cy - ty;
        let src_x = cx + cos * dx + sin * dy;
        let src_y = cy - sin * dx + cos * dy;
        (
            2.0 * src_x / (w - 1) as f64 - 1.0,
            2.0 * src_y / (h - 1) as f64 - 1.0,
        )
    });
    Ok(remap(image, &map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photometric::{gamma_correct, solarize, to_grayscale};
    use crate::rng::make_rng_stream;

    fn gradient(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, 1, |r, c, _| ((r * 3 + c * 5) % 256) as u8).unwrap()
    }

    #[test]
    fn default_crop_bounds() {
        let d = CropParams::default();
        assert_eq!(d.min_area_c, 0.08);
        assert_eq!(d.max_area, 1.0);
        assert_eq!(d.aspect_lo, 0.75);
        assert_eq!(d.aspect_hi, 4.0 / 3.0);
    }

    #[test]
    fn full_frame_crop_is_identity() {
        let img = gradient(32, 48);
        let params = CropParams {
            min_area_c: 1.0,
            max_area: 1.0,
            aspect_lo: 48.0 / 32.0,
            aspect_hi: 48.0 / 32.0,
        };
        let mut stream = make_rng_stream(1, 0, 0);
        let out = crop_resize(&img, &params, &mut stream).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn crop_output_dims_match_input() {
        let img = gradient(40, 56);
        let mut stream = make_rng_stream(2, 0, 0);
        for _ in 0..50 {
            let out = crop_resize(&img, &CropParams::default(), &mut stream).unwrap();
            assert_eq!((out.height(), out.width()), (40, 56));
        }
    }

    #[test]
    fn crop_area_draws_respect_bounds() {
        let img = gradient(64, 64);
        for c in [0.05, 0.08, 0.3, 0.9] {
            let params = CropParams {
                min_area_c: c,
                ..CropParams::default()
            };
            let mut stream = make_rng_stream(7, 0, 0);
            for _ in 0..200 {
                let (_, draw) = crop_resize_traced(&img, &params, &mut stream).unwrap();
                assert!(draw.area_fraction >= c && draw.area_fraction <= 1.0);
                assert!(draw.height >= 1 && draw.width >= 1);
            }
        }
    }

    #[test]
    fn constant_quadrant_crop_is_constant() {
        // Four-quadrant image; a crop confined to one quadrant must come out
        // constant at full size. Force the position by making the crop the
        // size of a quadrant and scanning seeds until it lands inside one.
        let img = Image::from_fn(64, 64, 1, |r, c, _| match (r < 32, c < 32) {
            (true, true) => 40,
            (true, false) => 90,
            (false, true) => 140,
            (false, false) => 190,
        })
        .unwrap();
        let params = CropParams {
            min_area_c: 0.05,
            max_area: 0.05,
            aspect_lo: 1.0,
            aspect_hi: 1.0,
        };
        let mut found = false;
        for seed in 0..50 {
            let mut stream = make_rng_stream(seed, 0, 0);
            let (out, draw) = crop_resize_traced(&img, &params, &mut stream).unwrap();
            let inside_quadrant = (draw.row0 % 32) + draw.height <= 32
                && (draw.col0 % 32) + draw.width <= 32
                && draw.row0 / 32 == (draw.row0 + draw.height - 1) / 32
                && draw.col0 / 32 == (draw.col0 + draw.width - 1) / 32;
            if inside_quadrant {
                found = true;
                let first = out.get(0, 0, 0);
                assert!(out.data().iter().all(|&v| v == first));
            }
        }
        assert!(found, "no seed produced a quadrant-confined crop");
    }

    #[test]
    fn degenerate_crop_falls_back_to_full_frame() {
        // An extreme aspect ratio rounds the crop height to zero on every
        // draw; after ten attempts the crop falls back to the full frame.
        let img = gradient(24, 24);
        let params = CropParams {
            min_area_c: 1e-4,
            max_area: 1e-4,
            aspect_lo: 5000.0,
            aspect_hi: 5000.0,
        };
        let mut stream = make_rng_stream(9, 0, 0);
        let out = crop_resize(&img, &params, &mut stream).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn hflip_involution_and_row_reversal() {
        let img = gradient(16, 9);
        assert_eq!(hflip(&hflip(&img)), img);
        let two = Image::from_raw(2, 2, 1, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(hflip(&two).data(), &[2, 1, 4, 3]);
        // A symmetric image is unchanged.
        let sym = Image::from_fn(8, 9, 1, |_, c, _| (c as i64 - 4).unsigned_abs() as u8 * 30).unwrap();
        assert_eq!(hflip(&sym), sym);
    }

    #[test]
    fn hflip_commutes_with_pointwise_ops() {
        let img = gradient(12, 17);
        assert_eq!(
            hflip(&gamma_correct(&img, 0.7).unwrap()),
            gamma_correct(&hflip(&img), 0.7).unwrap()
        );
        assert_eq!(hflip(&solarize(&img, 100).unwrap()), solarize(&hflip(&img), 100).unwrap());
        let rgb = Image::from_fn(8, 8, 3, |r, c, ch| ((r * c + ch * 50) % 256) as u8).unwrap();
        assert_eq!(hflip(&to_grayscale(&rgb)), to_grayscale(&hflip(&rgb)));
    }

    #[test]
    fn rotate_shift_identity() {
        let img = gradient(20, 20);
        let out = rotate_shift(&img, &AffineParams::default()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn rotate_shift_validates() {
        let img = gradient(8, 8);
        assert!(rotate_shift(
            &img,
            &AffineParams {
                angle_deg: 200.0,
                ..AffineParams::default()
            }
        )
        .is_err());
        assert!(rotate_shift(
            &img,
            &AffineParams {
                shift_x_frac: 1.5,
                ..AffineParams::default()
            }
        )
        .is_err());
    }

    #[test]
    fn rotate_preserves_constant_interior() {
        let img = Image::from_fn(40, 40, 1, |_, _, _| 150).unwrap();
        let out = rotate_shift(
            &img,
            &AffineParams {
                angle_deg: 15.0,
                ..AffineParams::default()
            },
        )
        .unwrap();
        // Away from the zero-filled corners the constant survives exactly.
        for r in 15..25 {
            for c in 15..25 {
                assert_eq!(out.get(r, c, 0), 150);
            }
        }
    }

    #[test]
    fn rotation_round_trip_small_interior_error() {
        let img = Image::from_fn(100, 100, 1, |r, c, _| {
            (100.0 + 60.0 * ((r as f64) / 99.0) + 60.0 * ((c as f64) / 99.0)) as u8
        })
        .unwrap();
        let fwd = rotate_shift(
            &img,
            &AffineParams {
                angle_deg: 10.0,
                ..AffineParams::default()
            },
        )
        .unwrap();
        let back = rotate_shift(
            &fwd,
            &AffineParams {
                angle_deg: -10.0,
                ..AffineParams::default()
            },
        )
        .unwrap();
        let mut total = 0.0;
        let mut count = 0;
        for r in 10..90 {
            for c in 10..90 {
                total += (back.get(r, c, 0) as f64 - img.get(r, c, 0) as f64).abs();
                count += 1;
            }
        }
        let mae = total / count as f64;
        assert!(mae < 10.0, "interior MAE {mae} too large");
    }

    #[test]
    fn shift_moves_content() {
        let mut img = Image::new(20, 20, 1).unwrap();
        img.set(10, 10, 0, 255);
        let out = rotate_shift(
            &img,
            &AffineParams {
                angle_deg: 0.0,
                shift_x_frac: 0.2,
                shift_y_frac: 0.1,
            },
        )
        .unwrap();
        // 20% of 20 = 4 columns right, 10% of 20 = 2 rows down.
        assert_eq!(out.get(12, 14, 0), 255);
        assert_eq!(out.get(10, 10, 0), 0);
    }
}
