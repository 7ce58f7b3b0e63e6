//! Beam-geometry remapping: probe type change, convexity change, depth
//! change, and the shared bilinear remap engine.
//!
//! Each remapping transform produces a [`CoordinateMap`]: for every output
//! pixel, the normalized coordinates of the source point whose intensity it
//! should take. Normalization follows the convention that `(-1, -1)` is the
//! center of the source's top-left pixel and `(+1, +1)` the center of its
//! bottom-right pixel. Samples falling outside the source resolve to 0.
//!
//! Coordinate conventions: pixel `(row, col)` has center `(x = col, y = row)`;
//! angles are measured from the downward vertical, positive to the right.
//! The lateral/axial source ranges of each map are taken from the beam's own
//! vertex extent, so new vertices always land on the old vertex loci. For
//! beams spanning the whole frame (the usual case after field-of-view
//! cropping) this reduces to normalizing by the frame dimensions.

use serde::{Deserialize, Serialize};

use crate::beam::{angle_with_vertical, line_intersection, BeamDescriptor, Point, ProbeType};
use crate::error::{Error, Result};
use crate::fov::{apply_mask, build_fov_mask};
use crate::image::{clamp_u8, Image};
use crate::rng::RngStream;

/// Default radius-factor range for linear-to-convex conversion.
pub const DEFAULT_RHO_RANGE: (f64, f64) = (1.0, 2.0);
/// Default width-fraction range for convex-to-linear conversion.
pub const DEFAULT_OMEGA_RANGE: (f64, f64) = (0.7, 0.95);
/// Default top-width fraction range for the convexity change.
pub const DEFAULT_TOP_WIDTH_FRACTION_RANGE: (f64, f64) = (0.6, 1.0);
/// Default zoom-factor range for the depth change.
pub const DEFAULT_DEPTH_RANGE: (f64, f64) = (0.8, 1.25);

/// Per-output-pixel lookup of normalized source coordinates.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    height: usize,
    width: usize,
    fx: Vec<f64>,
    fy: Vec<f64>,
}

impl CoordinateMap {
    /// Build a map by evaluating `f(col, row) -> (fx, fy)` at every output pixel.
    pub fn from_fn<F>(height: usize, width: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> (f64, f64),
    {
        let mut fx = Vec::with_capacity(height * width);
        let mut fy = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                let (x, y) = f(col, row);
                fx.push(x);
                fy.push(y);
            }
        }
        Self { height, width, fx, fy }
    }

    /// The map that reproduces the source exactly.
    pub fn identity(height: usize, width: usize) -> Self {
        Self::from_fn(height, width, |col, row| {
            (
                normalize(col as f64, width),
                normalize(row as f64, height),
            )
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> (f64, f64) {
        let i = row * self.width + col;
        (self.fx[i], self.fy[i])
    }

    /// Source position in pixel coordinates for a given output pixel.
    pub fn source_pixel(&self, row: usize, col: usize, src_height: usize, src_width: usize) -> Point {
        let (fx, fy) = self.at(row, col);
        Point::new(denormalize(fx, src_width), denormalize(fy, src_height))
    }

    /// Source position for a fractional output position, by bilinear
    /// interpolation of the stored grid (clamped at the edges).
    pub fn source_at(&self, x: f64, y: f64, src_height: usize, src_width: usize) -> Point {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let c0 = x.floor() as usize;
        let r0 = y.floor() as usize;
        let c1 = (c0 + 1).min(self.width - 1);
        let r1 = (r0 + 1).min(self.height - 1);
        let fx = x - c0 as f64;
        let fy = y - r0 as f64;
        let lerp2 = |field: &[f64]| {
            let top = field[r0 * self.width + c0] * (1.0 - fx) + field[r0 * self.width + c1] * fx;
            let bottom =
                field[r1 * self.width + c0] * (1.0 - fx) + field[r1 * self.width + c1] * fx;
            top * (1.0 - fy) + bottom * fy
        };
        Point::new(
            denormalize(lerp2(&self.fx), src_width),
            denormalize(lerp2(&self.fy), src_height),
        )
    }
}

#[inline]
fn normalize(coord: f64, dim: usize) -> f64 {
    2.0 * coord / (dim - 1) as f64 - 1.0
}

#[inline]
fn denormalize(norm: f64, dim: usize) -> f64 {
    (norm + 1.0) * 0.5 * (dim - 1) as f64
}

/// Scalar description of an annular sector in pixel space: the apex, the
/// radial extent, and the top-width scale used by the convexity change.
/// Per-pixel angle and normalized-depth fields are derived through
/// [`SectorGeometry::angle_at`] and [`SectorGeometry::normalized_radius`].
#[derive(Debug, Clone, Copy)]
pub struct SectorGeometry {
    pub apex: Point,
    pub radius_top: f64,
    pub radius_bottom: f64,
    pub scale_s: f64,
}

impl SectorGeometry {
    /// Angle of `p` with the downward vertical through the apex.
    pub fn angle_at(&self, p: Point) -> f64 {
        angle_with_vertical(self.apex, p)
    }

    /// Radial position of `p` normalized so the top arc is 0 and the bottom arc 1.
    pub fn normalized_radius(&self, p: Point) -> f64 {
        (self.apex.distance(&p) - self.radius_top) / (self.radius_bottom - self.radius_top)
    }
}

/// Sampled parameters of the geometric transforms; each field is only
/// meaningful for the transform that draws it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeometryParams {
    /// Radius factor for linear-to-convex conversion; at least 1.
    pub rho: f64,
    /// Linearized width fraction in (0, 1] for convex-to-linear conversion.
    pub omega: f64,
    /// New top width in pixels for the convexity change; positive.
    pub w_prime: f64,
    /// Zoom magnitude for the depth change; positive, 1 is the identity.
    pub depth_factor_d: f64,
}

impl GeometryParams {
    pub fn validate(&self) -> Result<()> {
        if self.rho < 1.0 {
            return Err(Error::Parameter(format!("rho must be >= 1, got {}", self.rho)));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Parameter(format!(
                "omega must be in (0, 1], got {}",
                self.omega
            )));
        }
        if self.w_prime <= 0.0 {
            return Err(Error::Parameter(format!(
                "w_prime must be positive, got {}",
                self.w_prime
            )));
        }
        if self.depth_factor_d <= 0.0 {
            return Err(Error::Parameter(format!(
                "depth factor must be positive, got {}",
                self.depth_factor_d
            )));
        }
        Ok(())
    }
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            omega: 1.0,
            w_prime: 1.0,
            depth_factor_d: 1.0,
        }
    }
}

/// Bilinear sample with zero fill outside the source.
#[inline]
fn sample_bilinear(image: &Image, x: f64, y: f64, channel: usize) -> f64 {
    if !x.is_finite() || !y.is_finite() {
        return 0.0;
    }
    let (h, w) = (image.height() as i64, image.width() as i64);
    if x <= -1.0 || y <= -1.0 || x >= w as f64 || y >= h as f64 {
        return 0.0;
    }
    let x0 = x.floor() as i64;
    let y0 = y.floor() as i64;
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let tap = |yy: i64, xx: i64| -> f64 {
        if yy < 0 || xx < 0 || yy >= h || xx >= w {
            0.0
        } else {
            image.get(yy as usize, xx as usize, channel) as f64
        }
    };
    let p00 = tap(y0, x0);
    let p01 = tap(y0, x0 + 1);
    let p10 = tap(y0 + 1, x0);
    let p11 = tap(y0 + 1, x0 + 1);
    let top = p00 + fx * (p01 - p00);
    let bottom = p10 + fx * (p11 - p10);
    top + fy * (bottom - top)
}

/// Resample `image` through `map` with bilinear interpolation and zero fill.
pub fn remap(image: &Image, map: &CoordinateMap) -> Image {
    let ch = image.channels();
    let out_w = map.width();
    let src_h = image.height();
    let src_w = image.width();
    let mut out = vec![0u8; map.height() * out_w * ch];

    let fill_row = |row: usize, row_buf: &mut [u8]| {
        for col in 0..out_w {
            let (fx, fy) = map.at(row, col);
            let x = denormalize(fx, src_w);
            let y = denormalize(fy, src_h);
            for c in 0..ch {
                row_buf[col * ch + c] = clamp_u8(sample_bilinear(image, x, y, c));
            }
        }
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(out_w * ch)
            .enumerate()
            .for_each(|(row, buf)| fill_row(row, buf));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (row, buf) in out.chunks_mut(out_w * ch).enumerate() {
            fill_row(row, buf);
        }
    }

    Image::from_raw(map.height(), out_w, ch, out).expect("map dimensions validated")
}

/// Convert a linear beam into a curvilinear one with radius factor `rho`.
///
/// Returns the coordinate map for an output frame of `height x width` pixels
/// together with the new beam vertices. The new sector is centered under the
/// old beam's bottom extent; its bottom radius is `rho` times the beam height.
pub fn linear_to_convex_map(
    beam: &BeamDescriptor,
    rho: f64,
    height: usize,
    width: usize,
) -> Result<(CoordinateMap, BeamDescriptor)> {
    beam.validate()?;
    if beam.probe_type != ProbeType::Linear {
        return Err(Error::Geometry("linear_to_convex_map requires a linear beam".into()));
    }
    if rho < 1.0 {
        return Err(Error::Parameter(format!("rho must be >= 1, got {rho}")));
    }
    let (x1, y1) = (beam.p1.x, beam.p1.y);
    let (x3, y3) = (beam.p3.x, beam.p3.y);
    let x4 = beam.p4.x;

    let r_bottom = rho * (y3 - y1);
    let apex_x = x3.max(0.0) + (x4 - x3) / 2.0;
    let apex_y = y3 - r_bottom;
    let disc = r_bottom * r_bottom - (apex_x - x1) * (apex_x - x1);
    if disc <= 0.0 {
        return Err(Error::Geometry(
            "sector radius is too small for the beam's lateral extent".into(),
        ));
    }
    let y3_new = apex_y + disc.sqrt();
    let mut x1_new = apex_x - (y1 - apex_y) * (apex_x - x3) / (y3_new - apex_y);
    // A radius factor of exactly 1 puts the apex on the top edge and
    // collapses the top arc onto it; widen the top vertices infinitesimally
    // so the descriptor stays well-formed.
    if apex_x - x1_new < 1e-6 {
        x1_new = apex_x - 1e-6;
    }
    let x2_new = 2.0 * apex_x - x1_new;
    let r_top = (apex_x - x1_new).hypot(y1 - apex_y);
    let apex = Point::new(apex_x, apex_y);

    // Half-angle of the sector, taken at the new bottom-left vertex.
    let phi_edge = angle_with_vertical(apex, Point::new(x3, y3_new)).abs();
    if phi_edge < 1e-12 {
        return Err(Error::Geometry("sector half-angle collapsed to zero".into()));
    }

    let new_beam = BeamDescriptor {
        probe_type: ProbeType::Curvilinear,
        p1: Point::new(x1_new, y1),
        p2: Point::new(x2_new, y1),
        p3: Point::new(x3, y3_new),
        p4: Point::new(x4, y3_new),
        apex: Some(apex),
        theta0: Some(2.0 * phi_edge),
        original_aspect: beam.original_aspect,
    };
    new_beam.validate()?;

    let half_width = (x4 - x3) / 2.0;
    let axial_span = y3 - y1;
    let radial_span = r_bottom - r_top;
    let map = CoordinateMap::from_fn(height, width, |col, row| {
        let p = Point::new(col as f64, row as f64);
        let phi = angle_with_vertical(apex, p);
        let r = apex.distance(&p);
        let src_x = apex_x + (phi / phi_edge) * half_width;
        let src_y = y1 + (r - r_top) / radial_span * axial_span;
        (normalize(src_x, width), normalize(src_y, height))
    });
    Ok((map, new_beam))
}

/// Flatten a convex beam into a linear one occupying a `omega` fraction of
/// the frame width, centered under the apex.
pub fn convex_to_linear_map(
    beam: &BeamDescriptor,
    omega: f64,
    height: usize,
    width: usize,
) -> Result<(CoordinateMap, BeamDescriptor)> {
    beam.validate()?;
    let apex = beam.require_apex()?;
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::Parameter(format!("omega must be in (0, 1], got {omega}")));
    }
    let r_bottom = beam.radius_bottom()?;
    let (a1, a2) = beam.sector_angles()?;
    let y1 = beam.p1.y;

    let x1_new = apex.x - omega * width as f64 / 2.0;
    let x2_new = apex.x + omega * width as f64 / 2.0;
    let y1_new = y1;
    let y3_new = apex.y + r_bottom;
    if y3_new - y1_new < 1e-9 || x2_new - x1_new < 1e-9 {
        return Err(Error::Geometry("linearized beam has zero extent".into()));
    }

    let new_beam = BeamDescriptor {
        probe_type: ProbeType::Linear,
        p1: Point::new(x1_new, y1_new),
        p2: Point::new(x2_new, y1_new),
        p3: Point::new(x1_new, y3_new),
        p4: Point::new(x2_new, y3_new),
        apex: None,
        theta0: None,
        original_aspect: beam.original_aspect,
    };
    new_beam.validate()?;

    let r_top_const = beam.radius_top()?;
    let phased = beam.probe_type == ProbeType::PhasedArray;
    let apex_depth = y1 - apex.y;
    let map = CoordinateMap::from_fn(height, width, |col, row| {
        let phi = a1 + (col as f64 - x1_new) / (x2_new - x1_new) * (a2 - a1);
        let y_n = (row as f64 - y1_new) / (y3_new - y1_new);
        // Curvilinear beams start at the top arc; phased arrays at the
        // horizontal top line, whose apex distance grows as 1/cos(phi).
        let r_top = if phased { apex_depth / phi.cos() } else { r_top_const };
        let r = r_top + y_n * (r_bottom - r_top);
        let src_x = apex.x + phi.sin() * r;
        let src_y = apex.y + phi.cos() * r;
        (normalize(src_x, width), normalize(src_y, height))
    });
    Ok((map, new_beam))
}

/// Reshape a convex beam so its top width becomes `w_prime` pixels, moving
/// the apex vertically while the bottom vertices stay fixed.
pub fn convexity_change_map(
    beam: &BeamDescriptor,
    w_prime: f64,
    height: usize,
    width: usize,
) -> Result<(CoordinateMap, BeamDescriptor)> {
    beam.validate()?;
    let apex = beam.require_apex()?;
    if w_prime <= 0.0 {
        return Err(Error::Parameter(format!("w_prime must be positive, got {w_prime}")));
    }
    let top_width = beam.top_width();
    if top_width < 1e-9 {
        return Err(Error::Geometry("beam top width is zero; cannot rescale".into()));
    }
    // Top-width scale: new width over old width, applied about the apex x.
    let scale_s = w_prime / top_width;
    let p1_new = Point::new(apex.x - scale_s * (apex.x - beam.p1.x), beam.p1.y);
    let p2_new = Point::new(apex.x + scale_s * (beam.p2.x - apex.x), beam.p2.y);
    let p3_new = Point::new(beam.p3.x, beam.p3.y);
    let p4_new = Point::new(beam.p4.x, beam.p4.y);

    let apex_new = line_intersection(p1_new, p3_new, p2_new, p4_new)?;
    if apex_new.y > p1_new.y + 1e-9 {
        return Err(Error::Geometry(
            "rescaled lateral lines intersect below the top edge".into(),
        ));
    }
    let new_beam = BeamDescriptor {
        probe_type: beam.probe_type,
        p1: p1_new,
        p2: p2_new,
        p3: p3_new,
        p4: p4_new,
        apex: Some(apex_new),
        theta0: Some(
            angle_with_vertical(apex_new, p4_new) - angle_with_vertical(apex_new, p3_new),
        ),
        original_aspect: beam.original_aspect,
    };
    new_beam.validate()?;

    let old = SectorGeometry {
        apex,
        radius_top: beam.radius_top()?,
        radius_bottom: beam.radius_bottom()?,
        scale_s,
    };
    let new = SectorGeometry {
        apex: apex_new,
        radius_top: apex_new.distance(&p1_new),
        radius_bottom: apex_new.distance(&p3_new),
        scale_s,
    };
    if new.radius_bottom - new.radius_top < 1e-9 {
        return Err(Error::Geometry("rescaled sector has zero radial extent".into()));
    }
    let (a1_old, a2_old) = beam.sector_angles()?;
    let (a1_new, a2_new) = new_beam.sector_angles()?;

    let map = CoordinateMap::from_fn(height, width, |col, row| {
        let p = Point::new(col as f64, row as f64);
        let r_new = new.apex.distance(&p);
        let r_src = (r_new - new.radius_top) * (old.radius_bottom - old.radius_top)
            / (new.radius_bottom - new.radius_top)
            + old.radius_top;
        // Affine angle remap between the sectors; for symmetric beams this
        // is the plain ratio theta0/theta0'.
        let phi_new = new.angle_at(p);
        let phi_src = a1_old + (phi_new - a1_new) * (a2_old - a1_old) / (a2_new - a1_new);
        let src_x = apex.x + phi_src.sin() * r_src;
        let src_y = apex.y + phi_src.cos() * r_src;
        (normalize(src_x, width), normalize(src_y, height))
    });
    Ok((map, new_beam))
}

/// Probe type change with the default parameter ranges: linear beams become
/// curvilinear with radius factor drawn from U(1, 2); convex beams become
/// linear with width fraction drawn from U(0.7, 0.95).
pub fn probe_type_change(
    image: &Image,
    beam: &BeamDescriptor,
    stream: &mut RngStream,
) -> Result<(Image, BeamDescriptor)> {
    probe_type_change_with(image, beam, DEFAULT_RHO_RANGE, DEFAULT_OMEGA_RANGE, stream)
}

/// Probe type change with explicit parameter ranges.
///
/// Draw accounting: always consumes exactly two uniform draws (`rho` then
/// `omega`), whichever branch applies.
pub fn probe_type_change_with(
    image: &Image,
    beam: &BeamDescriptor,
    rho_range: (f64, f64),
    omega_range: (f64, f64),
    stream: &mut RngStream,
) -> Result<(Image, BeamDescriptor)> {
    beam.validate()?;
    let rho = stream.sample_uniform(rho_range.0, rho_range.1)?;
    let omega = stream.sample_uniform(omega_range.0, omega_range.1)?;
    probe_type_change_sampled(image, beam, rho, omega)
}

/// Deterministic core of the probe type change, with the parameters already
/// drawn: linear beams become curvilinear using `rho`; convex beams become
/// linear using `omega`. When the beam records its original acquisition
/// aspect ratio, the image is resampled to that aspect before the remap
/// and back afterwards so circular arcs stay circular. The new beam's mask
/// is applied so no trace of the old silhouette remains.
pub fn probe_type_change_sampled(
    image: &Image,
    beam: &BeamDescriptor,
    rho: f64,
    omega: f64,
) -> Result<(Image, BeamDescriptor)> {
    beam.validate()?;
    let (h, w) = (image.height(), image.width());
    let (work_image, work_beam, restore) = match beam.original_aspect {
        Some(aspect) if aspect > 0.0 => {
            let new_w = ((h as f64 * aspect).round() as usize).max(2);
            if new_w == w {
                (image.clone(), beam.clone(), false)
            } else {
                let scale = new_w as f64 / w as f64;
                let resized = image.resize_bilinear(h, new_w)?;
                let mapped = beam.mapped(|p| Point::new((p.x + 0.5) * scale - 0.5, p.y));
                (resized, mapped, true)
            }
        }
        _ => (image.clone(), beam.clone(), false),
    };

    let (wh, ww) = (work_image.height(), work_image.width());
    let (map, new_beam) = if beam.probe_type == ProbeType::Linear {
        linear_to_convex_map(&work_beam, rho, wh, ww)?
    } else {
        convex_to_linear_map(&work_beam, omega, wh, ww)?
    };
    let remapped = remap(&work_image, &map);

    let (mut out, mut out_beam) = (remapped, new_beam);
    if restore {
        let scale = w as f64 / out.width() as f64;
        out_beam = out_beam.mapped(|p| Point::new((p.x + 0.5) * scale - 0.5, p.y));
        out = out.resize_bilinear(h, w)?;
    }

    let mask = build_fov_mask(&out_beam, out.height(), out.width())?;
    let masked = apply_mask(&out, &mask)?;
    Ok((masked, out_beam))
}

/// Zoom by factor `d` about the image center (linear beams) or the apex
/// (convex beams); `d > 1` zooms out. The field-of-view mask is re-applied
/// so the beam silhouette is unchanged. `d = 1` is the exact identity.
pub fn depth_change(image: &Image, beam: &BeamDescriptor, d: f64) -> Result<Image> {
    beam.validate()?;
    if d <= 0.0 {
        return Err(Error::Parameter(format!("depth factor must be positive, got {d}")));
    }
    if d == 1.0 {
        return Ok(image.clone());
    }
    let (h, w) = (image.height(), image.width());
    let center = if beam.probe_type.is_convex() {
        beam.require_apex()?
    } else {
        Point::new((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0)
    };
    let map = CoordinateMap::from_fn(h, w, |col, row| {
        let src_x = center.x + (col as f64 - center.x) * d;
        let src_y = center.y + (row as f64 - center.y) * d;
        (normalize(src_x, w), normalize(src_y, h))
    });
    let zoomed = remap(image, &map);
    let mask = build_fov_mask(beam, h, w)?;
    apply_mask(&zoomed, &mask)
}
