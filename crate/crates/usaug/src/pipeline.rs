//! Probabilistic transform pipelines: the BYOL, AugUS-O, AugUS-D, and
//! CropOnly presets, JSON (de)serialization with per-transform bound
//! overrides, and deterministic positive-pair generation.
//!
//! Each transform in a pipeline derives its own random sub-stream from
//! `(master_seed, image_id, view_id, transform id)`. One Bernoulli draw
//! gates inclusion, after which the transform's parameters are sampled
//! whether or not it runs. Removing or editing one transform therefore never
//! perturbs any other transform's draws, which is what makes leave-one-out
//! pipeline edits well-behaved.

use serde::{Deserialize, Serialize};

use crate::beam::BeamDescriptor;
use crate::error::{Error, Result};
use crate::fov::{apply_mask, build_fov_mask};
use crate::geometry::{
    convexity_change_map, depth_change, probe_type_change_sampled, remap, GeometryParams,
};
use crate::image::Image;
use crate::noise::{
    gaussian_blur, gaussian_noise, salt_pepper, speckle, wavelet_denoise, NoiseParams,
    SpeckleParams, WaveletParams,
};
use crate::photometric::{
    brightness_contrast, clahe, color_jitter, gamma_correct, solarize, to_grayscale,
    PhotometricParams,
};
use crate::rng::{make_rng_stream, RngStream};
use crate::spatial::{crop_resize_traced, hflip, rotate_shift, AffineParams, CropParams};
use crate::wavelet::MotherWavelet;

/// Inclusive lower/upper bounds of a uniform draw.
pub type Range = [f64; 2];

fn check_range(name: &str, r: Range) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(Error::Config(format!("{name} range [{}, {}] is invalid", r[0], r[1])));
    }
    Ok(())
}

macro_rules! bounds_struct {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty = $default:expr),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            $($(#[$fmeta])* pub $field: $ty,)+
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $($field: $default,)+ }
            }
        }
    };
}

bounds_struct!(
    /// Crop area and aspect bounds for B00.
    CropBounds {
        area: Range = [0.08, 1.0],
        aspect: Range = [0.75, 4.0 / 3.0],
    }
);

bounds_struct!(
    /// Factor bounds for B02.
    ColorJitterBounds {
        brightness: Range = [0.6, 1.4],
        contrast: Range = [0.6, 1.4],
        saturation: Range = [0.8, 1.2],
        hue: Range = [-0.1, 0.1],
    }
);

bounds_struct!(
    /// Kernel size and sigma bounds for B04.
    BlurBounds {
        kernel: usize = 13,
        sigma: Range = [0.1, 2.0],
    }
);

bounds_struct!(
    /// Inversion threshold for B05.
    SolarizeBounds {
        threshold: u16 = 128,
    }
);

bounds_struct!(
    /// Radius-factor and width-fraction bounds for U00.
    ProbeChangeBounds {
        rho: Range = [
            crate::geometry::DEFAULT_RHO_RANGE.0,
            crate::geometry::DEFAULT_RHO_RANGE.1,
        ],
        omega: Range = [
            crate::geometry::DEFAULT_OMEGA_RANGE.0,
            crate::geometry::DEFAULT_OMEGA_RANGE.1,
        ],
    }
);

bounds_struct!(
    /// New-top-width bounds for U01, as a fraction of the current top width.
    ConvexityBounds {
        top_width_fraction: Range = [
            crate::geometry::DEFAULT_TOP_WIDTH_FRACTION_RANGE.0,
            crate::geometry::DEFAULT_TOP_WIDTH_FRACTION_RANGE.1,
        ],
    }
);

bounds_struct!(
    /// Wavelet set and sparsity bounds for U02.
    WaveletBounds {
        wavelets: Vec<String> = vec!["db2".into(), "db5".into()],
        alpha: Range = [2.0, 4.0],
        levels: usize = 3,
        keep_level: usize = 2,
    }
);

bounds_struct!(
    /// Clip-limit bounds and tile layout for U03. With `tile_pixels` false
    /// (the default) `tiles` is the grid dimension; with it true, `tiles` is
    /// a tile side length in pixels and the grid is derived per image.
    ClaheBounds {
        clip: Range = [30.0, 50.0],
        tiles: usize = 8,
        tile_pixels: bool = false,
    }
);

bounds_struct!(
    /// Exponent bounds for U04.
    GammaBounds {
        gamma: Range = [0.5, 1.75],
    }
);

bounds_struct!(
    /// Factor bounds for U05.
    BrightnessContrastBounds {
        brightness: Range = [0.6, 1.4],
        contrast: Range = [0.6, 1.4],
    }
);

bounds_struct!(
    /// Zoom-factor bounds for U06.
    DepthBounds {
        depth: Range = [
            crate::geometry::DEFAULT_DEPTH_RANGE.0,
            crate::geometry::DEFAULT_DEPTH_RANGE.1,
        ],
    }
);

bounds_struct!(
    /// Grid resolution and phasor-count bounds for U07.
    SpeckleBounds {
        lateral: [usize; 2] = [35, 45],
        axial: [usize; 2] = [75, 85],
        phasors: [usize; 2] = [5, 10],
    }
);

bounds_struct!(
    /// Multiplicative-noise sigma bounds for U08.
    GaussianNoiseBounds {
        sigma: Range = [0.5, 2.5],
    }
);

bounds_struct!(
    /// Pixel-fraction bounds for U09.
    SaltPepperBounds {
        salt: Range = [0.001, 0.005],
        pepper: Range = [0.001, 0.005],
    }
);

bounds_struct!(
    /// Rotation and shift bounds for U11.
    AffineBounds {
        angle: Range = [-22.5, 22.5],
        shift_x: Range = [-0.2, 0.2],
        shift_y: Range = [-0.2, 0.2],
    }
);

/// Stable transform identifiers, as used in configuration files and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformId {
    B00,
    B01,
    B02,
    B03,
    B04,
    B05,
    U00,
    U01,
    U02,
    U03,
    U04,
    U05,
    U06,
    U07,
    U08,
    U09,
    U10,
    U11,
}

impl std::fmt::Display for TransformId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for TransformId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use TransformId::*;
        Ok(match s {
            "B00" => B00,
            "B01" => B01,
            "B02" => B02,
            "B03" => B03,
            "B04" => B04,
            "B05" => B05,
            "U00" => U00,
            "U01" => U01,
            "U02" => U02,
            "U03" => U03,
            "U04" => U04,
            "U05" => U05,
            "U06" => U06,
            "U07" => U07,
            "U08" => U08,
            "U09" => U09,
            "U10" => U10,
            "U11" => U11,
            other => return Err(Error::Lookup(format!("unknown transform id '{other}'"))),
        })
    }
}

/// One transform with its parameter bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum TransformKind {
    CropResize(CropBounds),
    HorizontalFlip,
    ColorJitter(ColorJitterBounds),
    Grayscale,
    GaussianBlur(BlurBounds),
    Solarize(SolarizeBounds),
    ProbeTypeChange(ProbeChangeBounds),
    ConvexityChange(ConvexityBounds),
    WaveletDenoise(WaveletBounds),
    Clahe(ClaheBounds),
    GammaCorrect(GammaBounds),
    BrightnessContrast(BrightnessContrastBounds),
    DepthChange(DepthBounds),
    Speckle(SpeckleBounds),
    GaussianNoise(GaussianNoiseBounds),
    SaltPepper(SaltPepperBounds),
    HorizontalFlipUs,
    RotateShift(AffineBounds),
}

impl TransformKind {
    pub fn id(&self) -> TransformId {
        use TransformKind::*;
        match self {
            CropResize(_) => TransformId::B00,
            HorizontalFlip => TransformId::B01,
            ColorJitter(_) => TransformId::B02,
            Grayscale => TransformId::B03,
            GaussianBlur(_) => TransformId::B04,
            Solarize(_) => TransformId::B05,
            ProbeTypeChange(_) => TransformId::U00,
            ConvexityChange(_) => TransformId::U01,
            WaveletDenoise(_) => TransformId::U02,
            Clahe(_) => TransformId::U03,
            GammaCorrect(_) => TransformId::U04,
            BrightnessContrast(_) => TransformId::U05,
            DepthChange(_) => TransformId::U06,
            Speckle(_) => TransformId::U07,
            GaussianNoise(_) => TransformId::U08,
            SaltPepper(_) => TransformId::U09,
            HorizontalFlipUs => TransformId::U10,
            RotateShift(_) => TransformId::U11,
        }
    }

    /// Default bounds for an id.
    pub fn with_defaults(id: TransformId) -> Self {
        use TransformKind::*;
        match id {
            TransformId::B00 => CropResize(CropBounds::default()),
            TransformId::B01 => HorizontalFlip,
            TransformId::B02 => ColorJitter(ColorJitterBounds::default()),
            TransformId::B03 => Grayscale,
            TransformId::B04 => GaussianBlur(BlurBounds::default()),
            TransformId::B05 => Solarize(SolarizeBounds::default()),
            TransformId::U00 => ProbeTypeChange(ProbeChangeBounds::default()),
            TransformId::U01 => ConvexityChange(ConvexityBounds::default()),
            TransformId::U02 => WaveletDenoise(WaveletBounds::default()),
            TransformId::U03 => Clahe(ClaheBounds::default()),
            TransformId::U04 => GammaCorrect(GammaBounds::default()),
            TransformId::U05 => BrightnessContrast(BrightnessContrastBounds::default()),
            TransformId::U06 => DepthChange(DepthBounds::default()),
            TransformId::U07 => Speckle(SpeckleBounds::default()),
            TransformId::U08 => GaussianNoise(GaussianNoiseBounds::default()),
            TransformId::U09 => SaltPepper(SaltPepperBounds::default()),
            TransformId::U10 => HorizontalFlipUs,
            TransformId::U11 => RotateShift(AffineBounds::default()),
        }
    }

    /// Human-readable transform name.
    pub fn description(&self) -> &'static str {
        use TransformKind::*;
        match self {
            CropResize(_) => "Crop and resize",
            HorizontalFlip | HorizontalFlipUs => "Horizontal reflection",
            ColorJitter(_) => "Color jitter",
            Grayscale => "Conversion to grayscale",
            GaussianBlur(_) => "Gaussian blur",
            Solarize(_) => "Solarization",
            ProbeTypeChange(_) => "Probe type change",
            ConvexityChange(_) => "Convexity change",
            WaveletDenoise(_) => "Wavelet denoising",
            Clahe(_) => "CLAHE",
            GammaCorrect(_) => "Gamma correction",
            BrightnessContrast(_) => "Brightness and contrast change",
            DepthChange(_) => "Depth change simulation",
            Speckle(_) => "Speckle noise simulation",
            GaussianNoise(_) => "Gaussian noise",
            SaltPepper(_) => "Salt & pepper noise",
            RotateShift(_) => "Rotation & shift",
        }
    }

    fn validate(&self) -> Result<()> {
        use TransformKind::*;
        match self {
            CropResize(b) => {
                check_range("area", b.area)?;
                check_range("aspect", b.aspect)?;
                CropParams {
                    min_area_c: b.area[0],
                    max_area: b.area[1],
                    aspect_lo: b.aspect[0],
                    aspect_hi: b.aspect[1],
                }
                .validate()
            }
            ColorJitter(b) => {
                check_range("brightness", b.brightness)?;
                check_range("contrast", b.contrast)?;
                check_range("saturation", b.saturation)?;
                check_range("hue", b.hue)?;
                if b.brightness[0] <= 0.0 || b.contrast[0] <= 0.0 || b.saturation[0] <= 0.0 {
                    return Err(Error::Config("jitter factor bounds must be positive".into()));
                }
                if b.hue[0] < -0.5 || b.hue[1] > 0.5 {
                    return Err(Error::Config("hue bounds must lie in [-0.5, 0.5]".into()));
                }
                Ok(())
            }
            GaussianBlur(b) => {
                check_range("sigma", b.sigma)?;
                if b.kernel % 2 == 0 || b.kernel == 0 {
                    return Err(Error::Config("blur kernel must be odd".into()));
                }
                if b.sigma[0] <= 0.0 {
                    return Err(Error::Config("blur sigma bounds must be positive".into()));
                }
                Ok(())
            }
            Solarize(b) => {
                if b.threshold > 256 {
                    return Err(Error::Config("solarize threshold must be in [0, 256]".into()));
                }
                Ok(())
            }
            ProbeTypeChange(b) => {
                check_range("rho", b.rho)?;
                check_range("omega", b.omega)?;
                if b.rho[0] < 1.0 {
                    return Err(Error::Config("rho bounds must start at 1 or above".into()));
                }
                if b.omega[0] <= 0.0 || b.omega[1] > 1.0 {
                    return Err(Error::Config("omega bounds must lie in (0, 1]".into()));
                }
                Ok(())
            }
            ConvexityChange(b) => {
                check_range("top_width_fraction", b.top_width_fraction)?;
                if b.top_width_fraction[0] <= 0.0 {
                    return Err(Error::Config("top width fraction must be positive".into()));
                }
                Ok(())
            }
            WaveletDenoise(b) => {
                check_range("alpha", b.alpha)?;
                if b.alpha[0] <= 1.0 {
                    return Err(Error::Config("alpha bounds must exceed 1".into()));
                }
                if b.wavelets.is_empty() {
                    return Err(Error::Config("wavelet set must not be empty".into()));
                }
                for name in &b.wavelets {
                    name.parse::<MotherWavelet>()
                        .map_err(|e| Error::Config(e.to_string()))?;
                }
                if b.keep_level < 1 || b.levels < b.keep_level {
                    return Err(Error::Config("levels must satisfy J >= J0 >= 1".into()));
                }
                Ok(())
            }
            Clahe(b) => {
                check_range("clip", b.clip)?;
                if b.clip[0] <= 0.0 {
                    return Err(Error::Config("clip bounds must be positive".into()));
                }
                if b.tiles < 1 {
                    return Err(Error::Config("tiles must be at least 1".into()));
                }
                Ok(())
            }
            GammaCorrect(b) => {
                check_range("gamma", b.gamma)?;
                if b.gamma[0] <= 0.0 {
                    return Err(Error::Config("gamma bounds must be positive".into()));
                }
                Ok(())
            }
            BrightnessContrast(b) => {
                check_range("brightness", b.brightness)?;
                check_range("contrast", b.contrast)?;
                if b.brightness[0] <= 0.0 || b.contrast[0] <= 0.0 {
                    return Err(Error::Config("factor bounds must be positive".into()));
                }
                Ok(())
            }
            DepthChange(b) => {
                check_range("depth", b.depth)?;
                if b.depth[0] <= 0.0 {
                    return Err(Error::Config("depth bounds must be positive".into()));
                }
                Ok(())
            }
            Speckle(b) => {
                for (name, r) in [("lateral", b.lateral), ("axial", b.axial), ("phasors", b.phasors)] {
                    if r[0] > r[1] {
                        return Err(Error::Config(format!("{name} bounds out of order")));
                    }
                }
                // Probe the extremes against the parameter invariants.
                for params in [
                    SpeckleParams {
                        lateral_resolution: b.lateral[0],
                        axial_resolution: b.axial[0],
                        num_phasors: b.phasors[0],
                    },
                    SpeckleParams {
                        lateral_resolution: b.lateral[1],
                        axial_resolution: b.axial[1],
                        num_phasors: b.phasors[1],
                    },
                ] {
                    params.validate().map_err(|e| Error::Config(e.to_string()))?;
                }
                Ok(())
            }
            GaussianNoise(b) => {
                check_range("sigma", b.sigma)?;
                if b.sigma[0] <= 0.0 {
                    return Err(Error::Config("sigma bounds must be positive".into()));
                }
                Ok(())
            }
            SaltPepper(b) => {
                check_range("salt", b.salt)?;
                check_range("pepper", b.pepper)?;
                if b.salt[0] < 0.0 || b.pepper[0] < 0.0 || b.salt[1] + b.pepper[1] > 1.0 {
                    return Err(Error::Config("salt/pepper bounds must be non-negative and sum to at most 1".into()));
                }
                Ok(())
            }
            RotateShift(b) => {
                check_range("angle", b.angle)?;
                check_range("shift_x", b.shift_x)?;
                check_range("shift_y", b.shift_y)?;
                if b.angle[0] < -180.0 || b.angle[1] > 180.0 {
                    return Err(Error::Config("angle bounds must lie in [-180, 180]".into()));
                }
                Ok(())
            }
            HorizontalFlip | HorizontalFlipUs | Grayscale => Ok(()),
        }
    }

    fn bounds_json(&self) -> serde_json::Value {
        use TransformKind::*;
        match self {
            CropResize(b) => serde_json::to_value(b),
            ColorJitter(b) => serde_json::to_value(b),
            GaussianBlur(b) => serde_json::to_value(b),
            Solarize(b) => serde_json::to_value(b),
            ProbeTypeChange(b) => serde_json::to_value(b),
            ConvexityChange(b) => serde_json::to_value(b),
            WaveletDenoise(b) => serde_json::to_value(b),
            Clahe(b) => serde_json::to_value(b),
            GammaCorrect(b) => serde_json::to_value(b),
            BrightnessContrast(b) => serde_json::to_value(b),
            DepthChange(b) => serde_json::to_value(b),
            Speckle(b) => serde_json::to_value(b),
            GaussianNoise(b) => serde_json::to_value(b),
            SaltPepper(b) => serde_json::to_value(b),
            RotateShift(b) => serde_json::to_value(b),
            HorizontalFlip | HorizontalFlipUs | Grayscale => Ok(serde_json::json!({})),
        }
        .expect("bounds serialize")
    }

    fn from_id_and_params(id: TransformId, params: serde_json::Value) -> Result<Self> {
        use TransformKind::*;
        fn parse<T: serde::de::DeserializeOwned>(id: TransformId, v: serde_json::Value) -> Result<T> {
            serde_json::from_value(v)
                .map_err(|e| Error::Config(format!("invalid params for {id}: {e}")))
        }
        let kind = match id {
            TransformId::B00 => CropResize(parse(id, params)?),
            TransformId::B01 => expect_empty(id, params, HorizontalFlip)?,
            TransformId::B02 => ColorJitter(parse(id, params)?),
            TransformId::B03 => expect_empty(id, params, Grayscale)?,
            TransformId::B04 => GaussianBlur(parse(id, params)?),
            TransformId::B05 => Solarize(parse(id, params)?),
            TransformId::U00 => ProbeTypeChange(parse(id, params)?),
            TransformId::U01 => ConvexityChange(parse(id, params)?),
            TransformId::U02 => WaveletDenoise(parse(id, params)?),
            TransformId::U03 => Clahe(parse(id, params)?),
            TransformId::U04 => GammaCorrect(parse(id, params)?),
            TransformId::U05 => BrightnessContrast(parse(id, params)?),
            TransformId::U06 => DepthChange(parse(id, params)?),
            TransformId::U07 => Speckle(parse(id, params)?),
            TransformId::U08 => GaussianNoise(parse(id, params)?),
            TransformId::U09 => SaltPepper(parse(id, params)?),
            TransformId::U10 => expect_empty(id, params, HorizontalFlipUs)?,
            TransformId::U11 => RotateShift(parse(id, params)?),
        };
        kind.validate()?;
        Ok(kind)
    }

    /// Summary of the bounds for table rendering.
    pub fn bounds_summary(&self) -> String {
        use TransformKind::*;
        let u = |r: Range| format!("U({}, {})", fmt_num(r[0]), fmt_num(r[1]));
        let ui = |r: [usize; 2]| format!("U{{{}..{}}}", r[0], r[1]);
        match self {
            CropResize(b) => format!("area {}, aspect {}", u(b.area), u(b.aspect)),
            ColorJitter(b) => format!(
                "brightness {}, contrast {}, saturation {}, hue {}",
                u(b.brightness),
                u(b.contrast),
                u(b.saturation),
                u(b.hue)
            ),
            GaussianBlur(b) => format!("kernel {}, sigma {}", b.kernel, u(b.sigma)),
            Solarize(b) => format!("threshold {}", b.threshold),
            ProbeTypeChange(b) => format!("rho {}, omega {}", u(b.rho), u(b.omega)),
            ConvexityChange(b) => format!("top width fraction {}", u(b.top_width_fraction)),
            WaveletDenoise(b) => format!(
                "wavelet {{{}}}, alpha {}, J {}, J0 {}",
                b.wavelets.join(", "),
                u(b.alpha),
                b.levels,
                b.keep_level
            ),
            Clahe(b) => format!("clip {}, tiles {}x{}", u(b.clip), b.tiles, b.tiles),
            GammaCorrect(b) => format!("gamma {}", u(b.gamma)),
            BrightnessContrast(b) => {
                format!("brightness {}, contrast {}", u(b.brightness), u(b.contrast))
            }
            DepthChange(b) => format!("depth {}", u(b.depth)),
            Speckle(b) => format!(
                "lateral {}, axial {}, phasors {}",
                ui(b.lateral),
                ui(b.axial),
                ui(b.phasors)
            ),
            GaussianNoise(b) => format!("sigma {}", u(b.sigma)),
            SaltPepper(b) => format!("salt {}, pepper {}", u(b.salt), u(b.pepper)),
            RotateShift(b) => format!(
                "angle {} deg, shift x {}, shift y {}",
                u(b.angle),
                u(b.shift_x),
                u(b.shift_y)
            ),
            HorizontalFlip | HorizontalFlipUs | Grayscale => "-".into(),
        }
    }
}

fn expect_empty(id: TransformId, params: serde_json::Value, kind: TransformKind) -> Result<TransformKind> {
    match &params {
        serde_json::Value::Object(map) if map.is_empty() => Ok(kind),
        serde_json::Value::Null => Ok(kind),
        _ => Err(Error::Config(format!("{id} takes no params"))),
    }
}

/// Number formatting for tables: integers get one decimal, fractions are
/// trimmed to at most four decimal places.
pub fn fmt_num(x: f64) -> String {
    if x == x.trunc() {
        format!("{x:.1}")
    } else {
        let s = format!("{x:.4}");
        let s = s.trim_end_matches('0');
        s.trim_end_matches('.').to_string()
    }
}

/// One pipeline entry: a transform and its application probability.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    pub probability: f64,
    pub kind: TransformKind,
}

impl TransformSpec {
    pub fn new(probability: f64, kind: TransformKind) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::Config(format!(
                "probability must be in [0, 1], got {probability}"
            )));
        }
        kind.validate()?;
        Ok(Self { probability, kind })
    }

    pub fn id(&self) -> TransformId {
        self.kind.id()
    }
}

/// An ordered, seeded augmentation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub name: String,
    pub transforms: Vec<TransformSpec>,
    pub master_seed: u64,
    pub views_per_image: u32,
    /// Re-apply the current beam mask after every included transform, so the
    /// output silhouette always matches the threaded beam descriptor. On for
    /// the AugUS-O preset.
    pub preserve_fov: bool,
}

impl PipelineConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }
}

/// Resolve a preset by name. Accepted (case- and dash-insensitive):
/// BYOL, AugUS-O, AugUS-D, CropOnly.
pub fn preset(name: &str) -> Result<PipelineConfig> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    let spec = |p: f64, id: TransformId| {
        TransformSpec::new(p, TransformKind::with_defaults(id)).expect("preset entry")
    };
    use TransformId::*;
    let config = match key.as_str() {
        "byol" => PipelineConfig {
            name: "BYOL".into(),
            transforms: vec![
                spec(1.0, B00),
                spec(0.5, B01),
                spec(0.8, B02),
                spec(0.2, B03),
                spec(0.5, B04),
                spec(0.1, B05),
            ],
            master_seed: 0,
            views_per_image: 2,
            preserve_fov: false,
        },
        "auguso" => PipelineConfig {
            name: "AugUS-O".into(),
            transforms: vec![
                spec(0.3, U00),
                spec(0.75, U01),
                spec(0.5, U02),
                spec(0.2, U03),
                spec(0.5, U04),
                spec(0.5, U05),
                spec(0.5, U06),
                spec(0.333, U07),
                spec(0.333, U08),
                spec(0.1, U09),
                spec(0.5, U10),
                spec(0.5, U11),
            ],
            master_seed: 0,
            views_per_image: 2,
            preserve_fov: true,
        },
        "augusd" => PipelineConfig {
            name: "AugUS-D".into(),
            transforms: vec![spec(0.2, U03), spec(0.8, B02), spec(0.5, U11), spec(1.0, B00)],
            master_seed: 0,
            views_per_image: 2,
            preserve_fov: false,
        },
        "croponly" => PipelineConfig {
            name: "CropOnly".into(),
            transforms: vec![spec(1.0, B00)],
            master_seed: 0,
            views_per_image: 2,
            preserve_fov: false,
        },
        _ => return Err(Error::Lookup(format!("unknown preset '{name}'"))),
    };
    Ok(config)
}

// JSON document shape. Unknown keys are rejected.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    seed: u64,
    #[serde(default = "default_views")]
    views: u32,
    #[serde(default)]
    preserve_fov: bool,
    transforms: Vec<RawSpec>,
}

fn default_views() -> u32 {
    2
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    id: String,
    p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if raw.views < 1 {
            return Err(Error::Config("views must be at least 1".into()));
        }
        let mut transforms = Vec::with_capacity(raw.transforms.len());
        for entry in raw.transforms {
            let id: TransformId = entry.id.parse()?;
            let kind = TransformKind::from_id_and_params(
                id,
                entry.params.unwrap_or(serde_json::json!({})),
            )?;
            transforms.push(TransformSpec::new(entry.p, kind)?);
        }
        Ok(Self {
            name: raw.name,
            transforms,
            master_seed: raw.seed,
            views_per_image: raw.views,
            preserve_fov: raw.preserve_fov,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawConfig {
            name: self.name.clone(),
            seed: self.master_seed,
            views: self.views_per_image,
            preserve_fov: self.preserve_fov,
            transforms: self
                .transforms
                .iter()
                .map(|t| RawSpec {
                    id: t.id().to_string(),
                    p: t.probability,
                    params: Some(t.kind.bounds_json()),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("config serialize")
    }
}

/// Record of one transform's draw within a pipeline invocation.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub id: TransformId,
    pub included: bool,
    /// Reason the transform was skipped despite being included.
    pub skipped: Option<String>,
    /// The sampled parameter record.
    pub params: serde_json::Value,
}

/// Output of a traced pipeline invocation.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub image: Image,
    pub beam: BeamDescriptor,
    pub trace: Vec<TraceEntry>,
}

/// Apply the pipeline to one image, threading the beam descriptor through
/// the geometric transforms.
pub fn apply_pipeline(
    config: &PipelineConfig,
    image: &Image,
    beam: &BeamDescriptor,
    stream: &RngStream,
) -> Result<(Image, BeamDescriptor)> {
    let run = apply_pipeline_traced(config, image, beam, stream)?;
    Ok((run.image, run.beam))
}

/// [`apply_pipeline`] with a per-transform draw trace.
///
/// Inclusion and parameters are drawn for every transform whether or not it
/// runs. A transform that fails with a geometry error on a degenerate beam
/// is skipped and recorded in the trace; other errors propagate.
pub fn apply_pipeline_traced(
    config: &PipelineConfig,
    image: &Image,
    beam: &BeamDescriptor,
    stream: &RngStream,
) -> Result<PipelineRun> {
    beam.validate()?;
    let mut current = image.clone();
    let mut current_beam = beam.clone();
    let mut trace = Vec::with_capacity(config.transforms.len());
    let mut seen = std::collections::HashMap::new();

    for spec in &config.transforms {
        let occurrence = seen.entry(spec.id()).or_insert(0u32);
        let tag = format!("{}#{occurrence}", spec.id());
        *occurrence += 1;
        let mut sub = stream.substream(&tag);
        let included = sub.bernoulli(spec.probability)?;

        let step = run_transform(&spec.kind, &current, &current_beam, included, &mut sub);
        let (params, outcome) = match step {
            Ok((params, outcome)) => (params, outcome),
            Err(Error::Geometry(reason)) => {
                trace.push(TraceEntry {
                    id: spec.id(),
                    included,
                    skipped: Some(reason),
                    params: serde_json::json!({}),
                });
                continue;
            }
            Err(other) => return Err(other),
        };
        let mut skipped = None;
        if included {
            match outcome {
                Some((img, bm)) => {
                    current = img;
                    current_beam = bm;
                    if config.preserve_fov {
                        let mask =
                            build_fov_mask(&current_beam, current.height(), current.width())?;
                        current = apply_mask(&current, &mask)?;
                    }
                }
                None => skipped = Some("transform produced no output".into()),
            }
        }
        trace.push(TraceEntry {
            id: spec.id(),
            included,
            skipped,
            params,
        });
    }
    Ok(PipelineRun {
        image: current,
        beam: current_beam,
        trace,
    })
}

type StepResult = Result<(serde_json::Value, Option<(Image, BeamDescriptor)>)>;

fn sample_range(stream: &mut RngStream, r: Range) -> Result<f64> {
    stream.sample_uniform(r[0], r[1])
}

fn sample_int(stream: &mut RngStream, r: [usize; 2]) -> Result<usize> {
    Ok(stream.sample_int_inclusive(r[0] as i64, r[1] as i64)? as usize)
}

/// Sample the transform's parameters (always) and apply it (when included).
fn run_transform(
    kind: &TransformKind,
    image: &Image,
    beam: &BeamDescriptor,
    included: bool,
    sub: &mut RngStream,
) -> StepResult {
    use TransformKind::*;
    match kind {
        CropResize(b) => {
            let params = CropParams {
                min_area_c: b.area[0],
                max_area: b.area[1],
                aspect_lo: b.aspect[0],
                aspect_hi: b.aspect[1],
            };
            if included {
                let (img, draw) = crop_resize_traced(image, &params, sub)?;
                Ok((
                    serde_json::json!({"bounds": params, "draw": draw}),
                    Some((img, beam.clone())),
                ))
            } else {
                // Consume the draws of the common path.
                sample_range(sub, b.area)?;
                sample_range(sub, b.aspect)?;
                sub.sample_int_inclusive(0, 0)?;
                sub.sample_int_inclusive(0, 0)?;
                Ok((serde_json::json!({ "bounds": params }), None))
            }
        }
        HorizontalFlip | HorizontalFlipUs => {
            let out = included.then(|| {
                (
                    hflip(image),
                    beam.mirrored_horizontal(image.width()),
                )
            });
            Ok((serde_json::json!({}), out))
        }
        ColorJitter(b) => {
            let params = PhotometricParams {
                brightness_factor: sample_range(sub, b.brightness)?,
                contrast_factor: sample_range(sub, b.contrast)?,
                saturation_factor: sample_range(sub, b.saturation)?,
                hue_shift: sample_range(sub, b.hue)?,
                ..PhotometricParams::default()
            };
            let out = if included {
                Some((
                    color_jitter(
                        image,
                        params.brightness_factor,
                        params.contrast_factor,
                        params.saturation_factor,
                        params.hue_shift,
                    )?,
                    beam.clone(),
                ))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        Grayscale => {
            let out = included.then(|| (to_grayscale(image), beam.clone()));
            Ok((serde_json::json!({}), out))
        }
        GaussianBlur(b) => {
            let params = NoiseParams {
                blur_kernel: b.kernel,
                blur_sigma: sample_range(sub, b.sigma)?,
                ..NoiseParams::default()
            };
            let out = if included {
                Some((gaussian_blur(image, params.blur_kernel, params.blur_sigma)?, beam.clone()))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        Solarize(b) => {
            let params = PhotometricParams {
                solarize_threshold: b.threshold,
                ..PhotometricParams::default()
            };
            let out = if included {
                Some((solarize(image, b.threshold)?, beam.clone()))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        ProbeTypeChange(b) => {
            let params = GeometryParams {
                rho: sample_range(sub, b.rho)?,
                omega: sample_range(sub, b.omega)?,
                ..GeometryParams::default()
            };
            let out = if included {
                let (img, bm) = probe_type_change_sampled(image, beam, params.rho, params.omega)?;
                Some((img, bm))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        ConvexityChange(b) => {
            let fraction = sample_range(sub, b.top_width_fraction)?;
            let params = GeometryParams {
                w_prime: fraction * beam.top_width(),
                ..GeometryParams::default()
            };
            let out = if included {
                let (map, bm) =
                    convexity_change_map(beam, params.w_prime, image.height(), image.width())?;
                let remapped = remap(image, &map);
                let mask = build_fov_mask(&bm, remapped.height(), remapped.width())?;
                Some((apply_mask(&remapped, &mask)?, bm))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        WaveletDenoise(b) => {
            let pick = sample_int(sub, [0, b.wavelets.len() - 1])?;
            let params = WaveletParams {
                mother_wavelet: b.wavelets[pick].parse()?,
                alpha: sample_range(sub, b.alpha)?,
                levels_j: b.levels,
                level_j0: b.keep_level,
            };
            let out = if included {
                Some((wavelet_denoise(image, &params)?, beam.clone()))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        Clahe(b) => {
            let tiles = if b.tile_pixels {
                (image.height().min(image.width()) / b.tiles).max(1)
            } else {
                b.tiles
            };
            let params = PhotometricParams {
                clahe_clip: sample_range(sub, b.clip)?,
                clahe_tiles: tiles,
                ..PhotometricParams::default()
            };
            let out = if included {
                let mask = build_fov_mask(beam, image.height(), image.width())?;
                Some((clahe(image, params.clahe_clip, tiles, &mask)?, beam.clone()))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        GammaCorrect(b) => {
            let params = PhotometricParams {
                gamma: sample_range(sub, b.gamma)?,
                ..PhotometricParams::default()
            };
            let out = if included {
                Some((gamma_correct(image, params.gamma)?, beam.clone()))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        BrightnessContrast(b) => {
            let params = PhotometricParams {
                brightness_factor: sample_range(sub, b.brightness)?,
                contrast_factor: sample_range(sub, b.contrast)?,
                ..PhotometricParams::default()
            };
            let out = if included {
                let mask = build_fov_mask(beam, image.height(), image.width())?;
                Some((
                    brightness_contrast(
                        image,
                        params.brightness_factor,
                        params.contrast_factor,
                        &mask,
                    )?,
                    beam.clone(),
                ))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        DepthChange(b) => {
            let params = GeometryParams {
                depth_factor_d: sample_range(sub, b.depth)?,
                ..GeometryParams::default()
            };
            let out = if included {
                Some((depth_change(image, beam, params.depth_factor_d)?, beam.clone()))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        Speckle(b) => {
            let params = SpeckleParams {
                lateral_resolution: sample_int(sub, b.lateral)?,
                axial_resolution: sample_int(sub, b.axial)?,
                num_phasors: sample_int(sub, b.phasors)?,
            };
            let out = if included {
                Some((speckle(image, beam, &params, sub)?, beam.clone()))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        GaussianNoise(b) => {
            let params = NoiseParams {
                gaussian_sigma: sample_range(sub, b.sigma)?,
                ..NoiseParams::default()
            };
            let out = if included {
                Some((gaussian_noise(image, params.gaussian_sigma, sub)?, beam.clone()))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        SaltPepper(b) => {
            let params = NoiseParams {
                salt_fraction: sample_range(sub, b.salt)?,
                pepper_fraction: sample_range(sub, b.pepper)?,
                ..NoiseParams::default()
            };
            let out = if included {
                Some((
                    salt_pepper(image, params.salt_fraction, params.pepper_fraction, sub)?,
                    beam.clone(),
                ))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
        RotateShift(b) => {
            let params = AffineParams {
                angle_deg: sample_range(sub, b.angle)?,
                shift_x_frac: sample_range(sub, b.shift_x)?,
                shift_y_frac: sample_range(sub, b.shift_y)?,
            };
            let out = if included {
                Some((rotate_shift(image, &params)?, beam.clone()))
            } else {
                None
            };
            Ok((serde_json::to_value(params).unwrap(), out))
        }
    }
}

/// Two stochastically augmented views of the same image: view ids 0 and 1
/// under the same configuration.
pub fn make_positive_pair(
    config: &PipelineConfig,
    image: &Image,
    beam: &BeamDescriptor,
    image_id: u64,
) -> Result<(Image, Image)> {
    let s0 = make_rng_stream(config.master_seed, image_id, 0);
    let s1 = make_rng_stream(config.master_seed, image_id, 1);
    let (v0, _) = apply_pipeline(config, image, beam, &s0)?;
    let (v1, _) = apply_pipeline(config, image, beam, &s1)?;
    Ok((v0, v1))
}
