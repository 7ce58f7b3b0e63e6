//! Deterministic random streams keyed by (master seed, image id, view id).
//!
//! Every stochastic transform draws from an [`RngStream`]. The draw sequence
//! is a pure function of the keying tuple plus an optional derivation tag, so
//! replaying any operation with an identical stream reproduces its output
//! bit for bit, regardless of thread scheduling elsewhere in a batch.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut hash = seed ^ FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// A seeded random stream with a logical draw counter.
///
/// Streams built from different `(master_seed, image_id, view_id)` tuples, or
/// derived with different tags, are statistically independent.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    image_id: u64,
    view_id: u64,
    tag_hash: u64,
    draw_counter: u64,
    rng: ChaCha12Rng,
    spare_normal: Option<f64>,
}

/// Create the stream for one (image, view) realization.
pub fn make_rng_stream(master_seed: u64, image_id: u64, view_id: u64) -> RngStream {
    RngStream::with_tag(master_seed, image_id, view_id, 0)
}

impl RngStream {
    fn with_tag(master_seed: u64, image_id: u64, view_id: u64, tag_hash: u64) -> Self {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&image_id.to_le_bytes());
        seed[16..24].copy_from_slice(&view_id.to_le_bytes());
        seed[24..32].copy_from_slice(&tag_hash.to_le_bytes());
        Self {
            master_seed,
            image_id,
            view_id,
            tag_hash,
            draw_counter: 0,
            rng: ChaCha12Rng::from_seed(seed),
            spare_normal: None,
        }
    }

    /// Derive an independent stream keyed by this stream's identity plus `tag`.
    ///
    /// Used by pipelines to give each transform its own sub-stream, so that
    /// editing one transform's draws never perturbs another's.
    pub fn substream(&self, tag: &str) -> RngStream {
        let hash = fnv1a(self.tag_hash, tag.as_bytes());
        Self::with_tag(self.master_seed, self.image_id, self.view_id, hash)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn image_id(&self) -> u64 {
        self.image_id
    }

    pub fn view_id(&self) -> u64 {
        self.view_id
    }

    /// Number of logical draws taken so far.
    pub fn draw_counter(&self) -> u64 {
        self.draw_counter
    }

    /// Uniform value in `[0, 1)` with 53 bits of precision.
    #[inline]
    fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`. A degenerate interval returns `lo` but
    /// still consumes one draw, so stream alignment does not depend on
    /// parameter values. Advances the draw counter by exactly one.
    pub fn sample_uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if lo > hi {
            return Err(Error::Parameter(format!(
                "uniform bounds out of order: [{lo}, {hi})"
            )));
        }
        let u = self.next_f64();
        self.draw_counter += 1;
        if lo == hi {
            return Ok(lo);
        }
        let mut v = lo + u * (hi - lo);
        if v >= hi {
            // Rounding at the top of the interval; stay inside the half-open range.
            v = lo + (hi - lo) * (1.0 - f64::EPSILON);
        }
        Ok(v)
    }

    /// Uniform integer in the inclusive range `[lo, hi]`. One draw.
    pub fn sample_int_inclusive(&mut self, lo: i64, hi: i64) -> Result<i64> {
        if lo > hi {
            return Err(Error::Parameter(format!(
                "integer bounds out of order: [{lo}, {hi}]"
            )));
        }
        let span = (hi - lo) as u64 + 1;
        let u = self.next_f64();
        self.draw_counter += 1;
        let offset = ((u * span as f64) as u64).min(span - 1);
        Ok(lo + offset as i64)
    }

    /// Bernoulli trial with success probability `p`. One draw.
    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        Ok(self.sample_uniform(0.0, 1.0)? < p)
    }

    /// Normal draw via Box-Muller. A fresh pair consumes two uniform draws;
    /// the second variate is cached and returned by the next call for free.
    pub fn sample_normal(&mut self, mean: f64, std: f64) -> Result<f64> {
        if let Some(z) = self.spare_normal.take() {
            return Ok(mean + std * z);
        }
        let u1 = self.sample_uniform(0.0, 1.0)?;
        let u2 = self.sample_uniform(0.0, 1.0)?;
        // 1 - u1 lies in (0, 1], keeping the logarithm finite.
        let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        Ok(mean + std * radius * angle.cos())
    }
}
