//! Synthetic corpus fixtures shared by the integration and acceptance tests.
#![allow(dead_code)] // each test target uses a different subset

use std::path::{Path, PathBuf};

use usaug::beam::{BeamDescriptor, Point, ProbeType};
use usaug::image::Image;
use usaug::rng::make_rng_stream;
use usaug_cli::manifest::{save_image, Manifest, ManifestEntry};

pub fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// Full-frame linear beam.
pub fn linear_beam(h: usize, w: usize) -> BeamDescriptor {
    BeamDescriptor::linear(
        pt(0.0, 0.0),
        pt((w - 1) as f64, 0.0),
        pt(0.0, (h - 1) as f64),
        pt((w - 1) as f64, (h - 1) as f64),
    )
    .unwrap()
}

/// Symmetric curvilinear beam occupying most of the frame.
pub fn curvilinear_beam(h: usize, w: usize) -> BeamDescriptor {
    let (hf, wf) = ((h - 1) as f64, (w - 1) as f64);
    BeamDescriptor::convex(
        ProbeType::Curvilinear,
        pt(0.35 * wf, 0.10 * hf),
        pt(0.65 * wf, 0.10 * hf),
        pt(0.10 * wf, 0.90 * hf),
        pt(0.90 * wf, 0.90 * hf),
        None,
        None,
    )
    .unwrap()
}

/// Near-degenerate-top sector, apex just above the frame.
pub fn phased_beam(h: usize, w: usize) -> BeamDescriptor {
    let (hf, wf) = ((h - 1) as f64, (w - 1) as f64);
    BeamDescriptor::convex(
        ProbeType::PhasedArray,
        pt(0.48 * wf, 0.02 * hf),
        pt(0.52 * wf, 0.02 * hf),
        pt(0.08 * wf, 0.92 * hf),
        pt(0.92 * wf, 0.92 * hf),
        None,
        None,
    )
    .unwrap()
}

/// Textured test image with smooth structure plus pseudo-random detail.
pub fn textured_image(h: usize, w: usize, seed: u64) -> Image {
    let mut stream = make_rng_stream(seed, 0, 0);
    Image::from_fn(h, w, 1, |r, c, _| {
        let base = 40.0
            + 120.0 * (r as f64 / (h - 1) as f64)
            + 60.0 * (c as f64 / (w - 1) as f64).sin();
        let detail = stream.sample_uniform(-20.0, 20.0).unwrap();
        (base + detail).clamp(0.0, 255.0) as u8
    })
    .unwrap()
}

/// Write `n` synthetic images cycling through the three probe types, plus a
/// manifest referencing them. Returns the manifest path.
pub fn write_corpus(dir: &Path, n: usize, size: usize) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let beam = match i % 3 {
            0 => linear_beam(size, size),
            1 => curvilinear_beam(size, size),
            _ => phased_beam(size, size),
        };
        let image = textured_image(size, size, i as u64);
        let file = format!("img{i:03}.png");
        save_image(&image, &dir.join(&file)).unwrap();
        entries.push(ManifestEntry::new(file, &beam));
    }
    let path = dir.join("manifest.json");
    Manifest::new(entries).save(&path).unwrap();
    path
}

/// Recursively collect (relative path, bytes) for every file under `dir`.
pub fn snapshot_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}
