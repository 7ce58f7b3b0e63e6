//! 8-bit raster image type used by every transform.
//!
//! Pixels are stored row-major and channel-interleaved. Intensity arithmetic
//! throughout the crate is performed in `f64` and rounded to the nearest
//! integer, then clamped to `[0, 255]`, at the final write.

use crate::error::{Error, Result};

/// An 8-bit image with 1 (grayscale) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    /// All-zero image. Height and width must be at least 2; channels 1 or 3.
    pub fn new(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::check_dims(height, width, channels)?;
        Ok(Self {
            height,
            width,
            channels,
            data: vec![0; height * width * channels],
        })
    }

    /// Wrap an existing row-major, channel-interleaved buffer.
    pub fn from_raw(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        Self::check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "buffer length {} does not match {}x{}x{}",
                data.len(),
                height,
                width,
                channels
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Build an image from a per-sample function of (row, col, channel).
    pub fn from_fn<F>(height: usize, width: usize, channels: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> u8,
    {
        Self::check_dims(height, width, channels)?;
        let mut data = Vec::with_capacity(height * width * channels);
        for row in 0..height {
            for col in 0..width {
                for ch in 0..channels {
                    data.push(f(row, col, ch));
                }
            }
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    fn check_dims(height: usize, width: usize, channels: usize) -> Result<()> {
        if height < 2 || width < 2 {
            return Err(Error::Shape(format!(
                "image must be at least 2x2, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!("channels must be 1 or 3, got {channels}")));
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn sample_index(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.width + col) * self.channels + channel
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> u8 {
        self.data[self.sample_index(row, col, channel)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: u8) {
        let idx = self.sample_index(row, col, channel);
        self.data[idx] = value;
    }

    /// Number of pixels (samples per channel).
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    /// Sum of all sample intensities.
    pub fn intensity_sum(&self) -> u64 {
        self.data.iter().map(|&v| v as u64).sum()
    }

    /// Bilinear resize to `(out_height, out_width)` with half-pixel centers
    /// and clamp-to-edge sampling. A same-size resize is the identity.
    pub fn resize_bilinear(&self, out_height: usize, out_width: usize) -> Result<Self> {
        Self::check_dims(out_height, out_width, self.channels)?;
        if out_height == self.height && out_width == self.width {
            return Ok(self.clone());
        }
        let sy = self.height as f64 / out_height as f64;
        let sx = self.width as f64 / out_width as f64;
        let ch = self.channels;
        let mut out = vec![0u8; out_height * out_width * ch];
        for row in 0..out_height {
            let src_y = ((row as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = src_y.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let fy = src_y - y0 as f64;
            for col in 0..out_width {
                let src_x = ((col as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = src_x.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let fx = src_x - x0 as f64;
                for c in 0..ch {
                    let p00 = self.get(y0, x0, c) as f64;
                    let p01 = self.get(y0, x1, c) as f64;
                    let p10 = self.get(y1, x0, c) as f64;
                    let p11 = self.get(y1, x1, c) as f64;
                    let top = p00 + fx * (p01 - p00);
                    let bottom = p10 + fx * (p11 - p10);
                    let v = top + fy * (bottom - top);
                    out[(row * out_width + col) * ch + c] = clamp_u8(v);
                }
            }
        }
        Self::from_raw(out_height, out_width, self.channels, out)
    }
}

/// Round to nearest and clamp into the 8-bit range.
#[inline]
pub fn clamp_u8(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}
