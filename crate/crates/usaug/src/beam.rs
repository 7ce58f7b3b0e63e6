//! Beam descriptors: probe type and the named field-of-view vertices.
//!
//! A beam is described by four corner vertices in pixel coordinates:
//! `p1` top-left, `p2` top-right, `p3` bottom-left, `p4` bottom-right.
//! Convex probes (curvilinear and phased array) additionally carry the apex
//! `p0`, the intersection of the lateral lines `p1p3` and `p2p4`, and the
//! apex angle `theta0` between those lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2D point in pixel coordinates (x right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Angle of `v = to - from` with the downward vertical, positive to the right.
pub(crate) fn angle_with_vertical(from: Point, to: Point) -> f64 {
    (to.x - from.x).atan2(to.y - from.y)
}

/// Intersection of the infinite lines `a1a2` and `b1b2`.
pub(crate) fn line_intersection(a1: Point, a2: Point, b1: Point, b2: Point) -> Result<Point> {
    let d1 = Point::new(a2.x - a1.x, a2.y - a1.y);
    let d2 = Point::new(b2.x - b1.x, b2.y - b1.y);
    let denom = d1.x * d2.y - d1.y * d2.x;
    if denom.abs() < 1e-12 {
        return Err(Error::Geometry("lateral lines are parallel".into()));
    }
    let t = ((b1.x - a1.x) * d2.y - (b1.y - a1.y) * d2.x) / denom;
    Ok(Point::new(a1.x + t * d1.x, a1.y + t * d1.y))
}

/// Ultrasound probe geometry class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeType {
    Linear,
    Curvilinear,
    #[serde(rename = "phased")]
    PhasedArray,
}

impl ProbeType {
    /// Curvilinear and phased-array beams share the convex sector model.
    pub fn is_convex(&self) -> bool {
        !matches!(self, ProbeType::Linear)
    }
}

impl std::fmt::Display for ProbeType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbeType::Linear => write!(f, "linear"),
            ProbeType::Curvilinear => write!(f, "curvilinear"),
            ProbeType::PhasedArray => write!(f, "phased"),
        }
    }
}

/// Named beam vertices plus probe type; travels with every image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamDescriptor {
    pub probe_type: ProbeType,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
    pub p4: Point,
    /// Apex `p0`; present iff the probe type is convex.
    pub apex: Option<Point>,
    /// Apex angle in radians; present iff the probe type is convex.
    pub theta0: Option<f64>,
    /// Width/height ratio of the pre-resize acquisition, when known.
    pub original_aspect: Option<f64>,
}

impl BeamDescriptor {
    /// Linear beam from its four corners.
    pub fn linear(p1: Point, p2: Point, p3: Point, p4: Point) -> Result<Self> {
        let beam = Self {
            probe_type: ProbeType::Linear,
            p1,
            p2,
            p3,
            p4,
            apex: None,
            theta0: None,
            original_aspect: None,
        };
        beam.validate()?;
        Ok(beam)
    }

    /// Convex beam from its corners; the apex and apex angle are derived
    /// from the lateral lines when not supplied.
    pub fn convex(
        probe_type: ProbeType,
        p1: Point,
        p2: Point,
        p3: Point,
        p4: Point,
        apex: Option<Point>,
        theta0: Option<f64>,
    ) -> Result<Self> {
        if !probe_type.is_convex() {
            return Err(Error::Geometry(
                "convex constructor called with a linear probe type".into(),
            ));
        }
        let derived = line_intersection(p1, p3, p2, p4)?;
        let apex = apex.unwrap_or(derived);
        if apex.distance(&derived) > 1.5 {
            return Err(Error::Geometry(format!(
                "supplied apex ({:.2}, {:.2}) is not the lateral-line intersection ({:.2}, {:.2})",
                apex.x, apex.y, derived.x, derived.y
            )));
        }
        let theta0 = theta0.unwrap_or_else(|| {
            angle_with_vertical(apex, p4) - angle_with_vertical(apex, p3)
        });
        let beam = Self {
            probe_type,
            p1,
            p2,
            p3,
            p4,
            apex: Some(apex),
            theta0: Some(theta0),
            original_aspect: None,
        };
        beam.validate()?;
        Ok(beam)
    }

    pub fn with_original_aspect(mut self, aspect: f64) -> Self {
        self.original_aspect = Some(aspect);
        self
    }

    /// Check the vertex invariants; all transform entry points call this.
    pub fn validate(&self) -> Result<()> {
        let eps = 1e-6;
        if (self.p1.y - self.p2.y).abs() > eps || (self.p3.y - self.p4.y).abs() > eps {
            return Err(Error::Geometry(
                "top and bottom vertex pairs must be horizontally aligned".into(),
            ));
        }
        if self.p1.x >= self.p2.x || self.p3.x >= self.p4.x {
            return Err(Error::Geometry("vertices must satisfy x1 < x2 and x3 < x4".into()));
        }
        if self.p3.y <= self.p1.y {
            return Err(Error::Geometry("bottom vertices must lie below top vertices".into()));
        }
        if self.probe_type.is_convex() {
            let apex = self
                .apex
                .ok_or_else(|| Error::Geometry("convex beam is missing its apex".into()))?;
            let theta0 = self
                .theta0
                .ok_or_else(|| Error::Geometry("convex beam is missing theta0".into()))?;
            if theta0 <= 0.0 {
                return Err(Error::Geometry(format!("theta0 must be positive, got {theta0}")));
            }
            if apex.y > self.p1.y + eps {
                return Err(Error::Geometry("apex must lie at or above the top vertices".into()));
            }
        } else if self.apex.is_some() || self.theta0.is_some() {
            return Err(Error::Geometry("linear beams carry no apex or theta0".into()));
        }
        Ok(())
    }

    /// Distance from the apex to the top vertices (convex only).
    pub fn radius_top(&self) -> Result<f64> {
        let apex = self.require_apex()?;
        Ok(apex.distance(&self.p1))
    }

    /// Distance from the apex to the bottom vertices (convex only).
    pub fn radius_bottom(&self) -> Result<f64> {
        let apex = self.require_apex()?;
        Ok(apex.distance(&self.p3))
    }

    /// Angle bounds of the sector, measured from the downward vertical.
    ///
    /// Computed from the bottom vertices: they lie on the same rays as the
    /// top vertices but farther from the apex, which keeps the angles stable
    /// when the apex nearly coincides with a top vertex (phased arrays).
    pub fn sector_angles(&self) -> Result<(f64, f64)> {
        let apex = self.require_apex()?;
        let a1 = angle_with_vertical(apex, self.p3);
        let a2 = angle_with_vertical(apex, self.p4);
        if a2 <= a1 {
            return Err(Error::Geometry("sector angles are out of order".into()));
        }
        Ok((a1, a2))
    }

    pub fn require_apex(&self) -> Result<Point> {
        self.apex
            .ok_or_else(|| Error::Geometry("operation requires a convex beam with an apex".into()))
    }

    pub fn top_width(&self) -> f64 {
        self.p2.x - self.p1.x
    }

    pub fn bottom_width(&self) -> f64 {
        self.p4.x - self.p3.x
    }

    /// Translate every vertex (and the apex) by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        self.mapped(|p| Point::new(p.x + dx, p.y + dy))
    }

    /// Mirror about the vertical axis of a `width`-pixel frame. Left and
    /// right vertices swap roles so the descriptor stays well-formed.
    pub fn mirrored_horizontal(&self, width: usize) -> Self {
        let m = |p: Point| Point::new((width - 1) as f64 - p.x, p.y);
        Self {
            probe_type: self.probe_type,
            p1: m(self.p2),
            p2: m(self.p1),
            p3: m(self.p4),
            p4: m(self.p3),
            apex: self.apex.map(m),
            theta0: self.theta0,
            original_aspect: self.original_aspect,
        }
    }

    /// Apply an arbitrary coordinate mapping to all vertices and the apex.
    pub fn mapped<F: Fn(Point) -> Point>(&self, f: F) -> Self {
        Self {
            probe_type: self.probe_type,
            p1: f(self.p1),
            p2: f(self.p2),
            p3: f(self.p3),
            p4: f(self.p4),
            apex: self.apex.map(&f),
            theta0: self.theta0,
            original_aspect: self.original_aspect,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn linear_beam_validates() {
        let b = BeamDescriptor::linear(pt(0.0, 0.0), pt(99.0, 0.0), pt(0.0, 99.0), pt(99.0, 99.0));
        assert!(b.is_ok());
    }

    #[test]
    fn misordered_vertices_rejected() {
        let b = BeamDescriptor::linear(pt(99.0, 0.0), pt(0.0, 0.0), pt(0.0, 99.0), pt(99.0, 99.0));
        assert!(b.is_err());
    }

    #[test]
    fn derives_apex_from_lateral_lines() {
        // Symmetric sector: lateral lines meet above the frame center line.
        let b = BeamDescriptor::convex(
            ProbeType::Curvilinear,
            pt(40.0, 20.0),
            pt(80.0, 20.0),
            pt(20.0, 100.0),
            pt(100.0, 100.0),
            None,
            None,
        )
        .unwrap();
        let apex = b.apex.unwrap();
        assert_relative_eq!(apex.x, 60.0, epsilon = 1e-9);
        assert_relative_eq!(apex.y, -60.0, epsilon = 1e-9);
        assert!(b.theta0.unwrap() > 0.0);
    }

    #[test]
    fn rejects_inconsistent_apex() {
        let b = BeamDescriptor::convex(
            ProbeType::Curvilinear,
            pt(40.0, 20.0),
            pt(80.0, 20.0),
            pt(20.0, 100.0),
            pt(100.0, 100.0),
            Some(pt(10.0, -60.0)),
            None,
        );
        assert!(b.is_err());
    }

    #[test]
    fn mirror_swaps_and_reflects() {
        let b = BeamDescriptor::convex(
            ProbeType::Curvilinear,
            pt(40.0, 20.0),
            pt(80.0, 20.0),
            pt(20.0, 100.0),
            pt(100.0, 100.0),
            None,
            None,
        )
        .unwrap();
        let m = b.mirrored_horizontal(128);
        m.validate().unwrap();
        assert_relative_eq!(m.p1.x, 127.0 - 80.0);
        assert_relative_eq!(m.p2.x, 127.0 - 40.0);
        // Mirroring twice restores the original.
        let mm = m.mirrored_horizontal(128);
        assert_relative_eq!(mm.p1.x, b.p1.x, epsilon = 1e-12);
        assert_relative_eq!(mm.apex.unwrap().x, b.apex.unwrap().x, epsilon = 1e-12);
    }

    #[test]
    fn sector_angles_ordered() {
        let b = BeamDescriptor::convex(
            ProbeType::PhasedArray,
            pt(63.0, 2.0),
            pt(65.0, 2.0),
            pt(10.0, 120.0),
            pt(118.0, 120.0),
            None,
            None,
        )
        .unwrap();
        let (a1, a2) = b.sector_angles().unwrap();
        assert!(a1 < 0.0 && a2 > 0.0);
    }
}
