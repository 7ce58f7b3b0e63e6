//! Corpus manifest: image paths plus the beam geometry of each frame.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use usaug::beam::{BeamDescriptor, Point, ProbeType};
use usaug::image::Image;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Beam geometry as written in manifests and beam files. The apex and apex
/// angle may be omitted for convex probes, in which case they are derived
/// from the lateral lines.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub probe_type: ProbeType,
    pub p1: [f64; 2],
    pub p2: [f64; 2],
    pub p3: [f64; 2],
    pub p4: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_aspect: Option<f64>,
}

impl BeamSpec {
    pub fn to_beam(&self) -> usaug::Result<BeamDescriptor> {
        let p = |a: [f64; 2]| Point::new(a[0], a[1]);
        let mut beam = if self.probe_type.is_convex() {
            BeamDescriptor::convex(
                self.probe_type,
                p(self.p1),
                p(self.p2),
                p(self.p3),
                p(self.p4),
                self.p0.map(p),
                self.theta0,
            )?
        } else {
            BeamDescriptor::linear(p(self.p1), p(self.p2), p(self.p3), p(self.p4))?
        };
        beam.original_aspect = self.original_aspect;
        Ok(beam)
    }

    pub fn from_beam(beam: &BeamDescriptor) -> Self {
        let a = |p: Point| [p.x, p.y];
        Self {
            probe_type: beam.probe_type,
            p1: a(beam.p1),
            p2: a(beam.p2),
            p3: a(beam.p3),
            p4: a(beam.p4),
            p0: beam.apex.map(a),
            theta0: beam.theta0,
            original_aspect: beam.original_aspect,
        }
    }
}

/// One corpus image with its geometry.
///
/// Serde's `flatten` cannot be combined with `deny_unknown_fields`, so the
/// beam fields are spelled out instead of embedding [`BeamSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Image path, relative to the manifest file's directory.
    pub path: String,
    pub probe_type: ProbeType,
    pub p1: [f64; 2],
    pub p2: [f64; 2],
    pub p3: [f64; 2],
    pub p4: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_aspect: Option<f64>,
}

impl ManifestEntry {
    pub fn new(path: String, beam: &BeamDescriptor) -> Self {
        let spec = BeamSpec::from_beam(beam);
        Self {
            path,
            probe_type: spec.probe_type,
            p1: spec.p1,
            p2: spec.p2,
            p3: spec.p3,
            p4: spec.p4,
            p0: spec.p0,
            theta0: spec.theta0,
            original_aspect: spec.original_aspect,
        }
    }

    pub fn beam_spec(&self) -> BeamSpec {
        BeamSpec {
            probe_type: self.probe_type,
            p1: self.p1,
            p2: self.p2,
            p3: self.p3,
            p4: self.p4,
            p0: self.p0,
            theta0: self.theta0,
            original_aspect: self.original_aspect,
        }
    }

    pub fn to_beam(&self) -> usaug::Result<BeamDescriptor> {
        self.beam_spec().to_beam()
    }
}

/// A corpus manifest document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            entries,
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read manifest {}: {e}", path.display()))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("malformed manifest {}: {e}", path.display()))?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            anyhow::bail!(
                "unsupported manifest schema_version {} (expected {MANIFEST_SCHEMA_VERSION})",
                manifest.schema_version
            );
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)
            .map_err(|e| anyhow::anyhow!("cannot write manifest {}: {e}", path.display()))?;
        Ok(())
    }

    /// Resolve an entry's image path against the manifest's directory.
    pub fn resolve_path(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        base.join(&entry.path)
    }
}

/// Decode a PNG into the internal raster. Gray inputs stay single-channel;
/// everything else is converted to 8-bit RGB.
pub fn load_image(path: &Path) -> anyhow::Result<Image> {
    let decoded = image::open(path)
        .map_err(|e| anyhow::anyhow!("cannot decode {}: {e}", path.display()))?;
    let img = match decoded {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            Image::from_raw(h, w, 1, g.into_raw())
        }
        image::DynamicImage::ImageLuma16(_) | image::DynamicImage::ImageLumaA8(_) => {
            let g = decoded.to_luma8();
            let (w, h) = (g.width() as usize, g.height() as usize);
            Image::from_raw(h, w, 1, g.into_raw())
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            Image::from_raw(h, w, 3, rgb.into_raw())
        }
    };
    img.map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// Encode the internal raster as PNG.
pub fn save_image(image: &Image, path: &Path) -> anyhow::Result<()> {
    let (h, w) = (image.height() as u32, image.width() as u32);
    let err = |e: image::ImageError| anyhow::anyhow!("cannot write {}: {e}", path.display());
    if image.channels() == 1 {
        let buf = image::GrayImage::from_raw(w, h, image.data().to_vec())
            .expect("buffer length checked by Image invariants");
        buf.save(path).map_err(err)
    } else {
        let buf = image::RgbImage::from_raw(w, h, image.data().to_vec())
            .expect("buffer length checked by Image invariants");
        buf.save(path).map_err(err)
    }
}
