//! Data-parallel batch helpers.
//!
//! Pipelines are pure functions of `(inputs, stream)`, so a corpus can be
//! dispatched to any number of worker threads without changing a single
//! output byte. With the `parallel` feature (default) batches run on rayon;
//! [`Parallelism::Sequential`] runs the identical code path on one thread
//! and is always available.

use crate::beam::BeamDescriptor;
use crate::error::Result;
use crate::image::Image;
use crate::pipeline::{make_positive_pair, PipelineConfig};

/// Execution strategy for batch helpers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Single-threaded, always available.
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    /// Rayon work-stealing over the current thread pool.
    #[cfg(feature = "parallel")]
    #[cfg_attr(feature = "parallel", default)]
    Rayon,
}

/// Positive pairs for a batch of images. Image ids are the batch indices,
/// so outputs are independent of the execution strategy.
pub fn generate_pairs(
    config: &PipelineConfig,
    items: &[(Image, BeamDescriptor)],
    parallelism: Parallelism,
) -> Result<Vec<(Image, Image)>> {
    match parallelism {
        Parallelism::Sequential => items
            .iter()
            .enumerate()
            .map(|(i, (image, beam))| make_positive_pair(config, image, beam, i as u64))
            .collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            use rayon::prelude::*;
            items
                .par_iter()
                .enumerate()
                .map(|(i, (image, beam))| make_positive_pair(config, image, beam, i as u64))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::Point;
    use crate::pipeline::preset;

    fn batch(n: usize) -> Vec<(Image, BeamDescriptor)> {
        (0..n)
            .map(|i| {
                let img = Image::from_fn(32, 32, 1, |r, c, _| ((r * 7 + c * 3 + i) % 256) as u8)
                    .unwrap();
                let beam = BeamDescriptor::linear(
                    Point::new(0.0, 0.0),
                    Point::new(31.0, 0.0),
                    Point::new(0.0, 31.0),
                    Point::new(31.0, 31.0),
                )
                .unwrap();
                (img, beam)
            })
            .collect()
    }

    #[test]
    fn sequential_output_is_deterministic() {
        let config = preset("BYOL").unwrap().with_seed(9);
        let items = batch(6);
        let a = generate_pairs(&config, &items, Parallelism::Sequential).unwrap();
        let b = generate_pairs(&config, &items, Parallelism::Sequential).unwrap();
        for ((a0, a1), (b0, b1)) in a.iter().zip(b.iter()) {
            assert_eq!(a0, b0);
            assert_eq!(a1, b1);
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let config = preset("BYOL").unwrap().with_seed(9);
        let items = batch(8);
        let seq = generate_pairs(&config, &items, Parallelism::Sequential).unwrap();
        let par = generate_pairs(&config, &items, Parallelism::Rayon).unwrap();
        for ((a0, a1), (b0, b1)) in seq.iter().zip(par.iter()) {
            assert_eq!(a0, b0);
            assert_eq!(a1, b1);
        }
    }
}
