//! Field-of-view preprocessing: geometric mask construction, masking, and
//! cropping to the tight bounding rectangle of the beam.
//!
//! Pixels outside the field of view carry no echo information; the
//! preprocessing here blacks them out and crops the frame so downstream
//! transforms act only on meaningful content. The whole sequence is
//! idempotent: running it on its own output is a byte-level no-op.

use crate::beam::{angle_with_vertical, BeamDescriptor, Point, ProbeType};
use crate::error::{Error, Result};
use crate::image::Image;

/// Boolean per-pixel field-of-view mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FovMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl FovMask {
    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::Shape(format!(
                "mask bits length {} does not match {}x{}",
                bits.len(),
                height,
                width
            )));
        }
        Ok(Self { height, width, bits })
    }

    /// All-true mask.
    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![true; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Tight bounding box of the true region as `(min_row, min_col, max_row, max_col)`.
    pub fn bounding_box(&self) -> Result<(usize, usize, usize, usize)> {
        let mut min_row = usize::MAX;
        let mut max_row = 0;
        let mut min_col = usize::MAX;
        let mut max_col = 0;
        for row in 0..self.height {
            for col in 0..self.width {
                if self.get(row, col) {
                    min_row = min_row.min(row);
                    max_row = max_row.max(row);
                    min_col = min_col.min(col);
                    max_col = max_col.max(col);
                }
            }
        }
        if min_row == usize::MAX {
            return Err(Error::Geometry("mask has no true bits".into()));
        }
        Ok((min_row, min_col, max_row, max_col))
    }
}

/// A masked and cropped image together with its updated geometry.
#[derive(Debug, Clone)]
pub struct PreprocessResult {
    pub image: Image,
    /// Beam vertices translated into the cropped frame.
    pub beam: BeamDescriptor,
    /// Mask cropped to the same frame.
    pub mask: FovMask,
}

/// Rasterize the beam silhouette. Linear probes fill the quadrilateral
/// `p1 p2 p4 p3`; convex probes fill the annular sector centered on the apex
/// between the radii through `p1` and `p3` and the lateral rays. Pixel
/// centers lying exactly on an edge count as inside.
pub fn build_fov_mask(beam: &BeamDescriptor, height: usize, width: usize) -> Result<FovMask> {
    beam.validate()?;
    if height < 2 || width < 2 {
        return Err(Error::Shape("mask must be at least 2x2".into()));
    }
    let bits = match beam.probe_type {
        ProbeType::Linear => {
            let ring = [beam.p1, beam.p2, beam.p4, beam.p3];
            let area = polygon_area(&ring);
            if area.abs() < 1e-9 {
                return Err(Error::Geometry("linear beam quadrilateral has zero area".into()));
            }
            rasterize(height, width, |p| point_in_convex_polygon(p, &ring, area))
        }
        ProbeType::Curvilinear | ProbeType::PhasedArray => {
            let apex = beam.require_apex()?;
            let r_top = beam.radius_top()?;
            let r_bottom = beam.radius_bottom()?;
            let (a1, a2) = beam.sector_angles()?;
            if r_bottom - r_top < 1e-9 {
                return Err(Error::Geometry("sector has zero radial extent".into()));
            }
            rasterize(height, width, |p| {
                let r = apex.distance(&p);
                if r < r_top || r > r_bottom {
                    return false;
                }
                if r < 1e-12 {
                    // The apex itself, only reachable when r_top == 0.
                    return true;
                }
                let ang = angle_with_vertical(apex, p);
                ang >= a1 && ang <= a2
            })
        }
    };
    let mask = FovMask::from_bits(height, width, bits)?;
    if mask.count_true() == 0 {
        return Err(Error::Geometry("beam does not cover any pixel of the frame".into()));
    }
    Ok(mask)
}

fn rasterize<F: Fn(Point) -> bool>(height: usize, width: usize, inside: F) -> Vec<bool> {
    let mut bits = vec![false; height * width];
    for row in 0..height {
        for col in 0..width {
            bits[row * width + col] = inside(Point::new(col as f64, row as f64));
        }
    }
    bits
}

fn polygon_area(ring: &[Point; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let a = ring[i];
        let b = ring[(i + 1) % 4];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

fn point_in_convex_polygon(p: Point, ring: &[Point; 4], signed_area: f64) -> bool {
    let orient = signed_area.signum();
    for i in 0..4 {
        let a = ring[i];
        let b = ring[(i + 1) % 4];
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if cross * orient < 0.0 {
            return false;
        }
    }
    true
}

/// Zero every sample outside the mask; in-mask samples are untouched.
pub fn apply_mask(image: &Image, mask: &FovMask) -> Result<Image> {
    if image.height() != mask.height() || image.width() != mask.width() {
        return Err(Error::Shape(format!(
            "image {}x{} does not match mask {}x{}",
            image.height(),
            image.width(),
            mask.height(),
            mask.width()
        )));
    }
    let mut out = image.clone();
    let ch = image.channels();
    let data = out.data_mut();
    for (pixel, &keep) in mask.bits().iter().enumerate() {
        if !keep {
            data[pixel * ch..(pixel + 1) * ch].fill(0);
        }
    }
    Ok(out)
}

/// Crop image, mask, and beam to the tight bounding box of the mask's true
/// region. Vertices are translated by the crop offset.
pub fn crop_to_fov(image: &Image, mask: &FovMask, beam: &BeamDescriptor) -> Result<PreprocessResult> {
    if image.height() != mask.height() || image.width() != mask.width() {
        return Err(Error::Shape("image and mask dimensions differ".into()));
    }
    let (min_row, min_col, max_row, max_col) = mask.bounding_box()?;
    let out_h = max_row - min_row + 1;
    let out_w = max_col - min_col + 1;
    if out_h < 2 || out_w < 2 {
        return Err(Error::Geometry("field of view is thinner than 2 pixels".into()));
    }
    let ch = image.channels();
    let mut data = Vec::with_capacity(out_h * out_w * ch);
    let mut bits = Vec::with_capacity(out_h * out_w);
    for row in min_row..=max_row {
        let start = image.sample_index(row, min_col, 0);
        data.extend_from_slice(&image.data()[start..start + out_w * ch]);
        for col in min_col..=max_col {
            bits.push(mask.get(row, col));
        }
    }
    Ok(PreprocessResult {
        image: Image::from_raw(out_h, out_w, ch, data)?,
        beam: beam.translated(-(min_col as f64), -(min_row as f64)),
        mask: FovMask::from_bits(out_h, out_w, bits)?,
    })
}

/// Full preprocessing: build the mask from the beam, black out everything
/// outside it, and crop to its bounding rectangle.
pub fn preprocess(image: &Image, beam: &BeamDescriptor) -> Result<PreprocessResult> {
    let mask = build_fov_mask(beam, image.height(), image.width())?;
    let masked = apply_mask(image, &mask)?;
    crop_to_fov(&masked, &mask, beam)
}
