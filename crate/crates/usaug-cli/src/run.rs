//! The four batch operations behind the CLI subcommands.

use std::path::Path;
use std::time::Instant;

use usaug::pipeline::{
    apply_pipeline, fmt_num, preset, PipelineConfig, TransformSpec,
};
use usaug::rng::make_rng_stream;
use usaug::{preprocess, BeamDescriptor};

use crate::manifest::{load_image, save_image, BeamSpec, Manifest, ManifestEntry};
use crate::report::{summarize, RuntimeReport, TransformTiming, REPORT_SCHEMA_VERSION};

/// Environment variable overriding the worker pool size.
pub const WORKERS_ENV: &str = "USAUG_WORKERS";

/// Outcome of a corpus run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunSummary {
    pub processed: usize,
    pub skipped: usize,
    pub errors: Vec<EntryError>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EntryError {
    pub path: String,
    pub error: String,
}

impl RunSummary {
    fn from_results(results: Vec<Result<(), EntryError>>) -> Self {
        let mut summary = Self {
            processed: 0,
            skipped: 0,
            errors: Vec::new(),
        };
        for r in results {
            match r {
                Ok(()) => summary.processed += 1,
                Err(e) => {
                    summary.skipped += 1;
                    summary.errors.push(e);
                }
            }
        }
        summary
    }
}

/// Resolve `--pipeline`: a preset name, else a JSON config file path.
pub fn resolve_pipeline(arg: &str) -> anyhow::Result<PipelineConfig> {
    if let Ok(config) = preset(arg) {
        return Ok(config);
    }
    let path = Path::new(arg);
    if !path.exists() {
        anyhow::bail!("'{arg}' is neither a preset (byol, augus-o, augus-d, crop-only) nor a config file");
    }
    let text = std::fs::read_to_string(path)?;
    Ok(PipelineConfig::from_json(&text)?)
}

/// Worker-pool size: `USAUG_WORKERS` when set, else the logical core count.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
}

/// Map entries to per-entry results on the worker pool. Entry outputs are
/// independent of scheduling, so parallel and sequential runs agree.
fn for_each_entry<F>(entries: &[ManifestEntry], f: F) -> Vec<Result<(), EntryError>>
where
    F: Fn(usize, &ManifestEntry) -> Result<(), EntryError> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(worker_count())
            .build()
            .expect("worker pool");
        pool.install(|| {
            entries
                .par_iter()
                .enumerate()
                .map(|(i, e)| f(i, e))
                .collect()
        })
    }
    #[cfg(not(feature = "parallel"))]
    {
        entries.iter().enumerate().map(|(i, e)| f(i, e)).collect()
    }
}

fn fail<E: std::fmt::Display>(entry: &ManifestEntry, e: E) -> EntryError {
    EntryError {
        path: entry.path.clone(),
        error: e.to_string(),
    }
}

/// Mask, crop, and re-emit every corpus image, writing the cropped images
/// and an updated manifest (with translated vertices) under `out_dir`.
pub fn run_preprocess(manifest_path: &Path, out_dir: &Path) -> anyhow::Result<RunSummary> {
    let manifest = Manifest::load(manifest_path)?;
    std::fs::create_dir_all(out_dir)?;

    let updated: Vec<std::sync::Mutex<Option<ManifestEntry>>> =
        manifest.entries.iter().map(|_| std::sync::Mutex::new(None)).collect();

    let results = for_each_entry(&manifest.entries, |index, entry| {
        let image = load_image(&Manifest::resolve_path(manifest_path, entry))
            .map_err(|e| fail(entry, e))?;
        let beam = entry.to_beam().map_err(|e| fail(entry, e))?;
        let result = preprocess(&image, &beam).map_err(|e| fail(entry, e))?;
        let file_name = Path::new(&entry.path)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| entry.path.clone());
        save_image(&result.image, &out_dir.join(&file_name)).map_err(|e| fail(entry, e))?;
        let mut new_entry = ManifestEntry::new(file_name, &result.beam);
        new_entry.original_aspect = entry.original_aspect;
        *updated[index].lock().unwrap() = Some(new_entry);
        Ok(())
    });

    let entries: Vec<ManifestEntry> = updated
        .into_iter()
        .filter_map(|m| m.into_inner().unwrap())
        .collect();
    Manifest::new(entries).save(&out_dir.join("manifest.json"))?;
    Ok(RunSummary::from_results(results))
}

/// Emit `views_per_image` augmented views per corpus entry, named
/// `{stem}_v{view}.png`. Deterministic in the pipeline seed and entry order.
pub fn run_pair_emit(
    manifest_path: &Path,
    config: &PipelineConfig,
    out_dir: &Path,
) -> anyhow::Result<RunSummary> {
    let manifest = Manifest::load(manifest_path)?;
    std::fs::create_dir_all(out_dir)?;

    let results = for_each_entry(&manifest.entries, |index, entry| {
        let image = load_image(&Manifest::resolve_path(manifest_path, entry))
            .map_err(|e| fail(entry, e))?;
        let beam = entry.to_beam().map_err(|e| fail(entry, e))?;
        let stem = Path::new(&entry.path)
            .file_stem()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("entry{index}"));
        for view in 0..config.views_per_image {
            let stream = make_rng_stream(config.master_seed, index as u64, view as u64);
            let (out, _) =
                apply_pipeline(config, &image, &beam, &stream).map_err(|e| fail(entry, e))?;
            save_image(&out, &out_dir.join(format!("{stem}_v{view}.png")))
                .map_err(|e| fail(entry, e))?;
        }
        Ok(())
    });
    Ok(RunSummary::from_results(results))
}

/// Time each transform of the pipeline individually on one image.
///
/// The inclusion probability is forced to 1 so the gate is not measured.
/// Every invocation draws fresh parameters from its iteration's stream, and
/// the whole run executes on a single thread.
pub fn run_bench(
    config: &PipelineConfig,
    image_path: &Path,
    beam_spec: &BeamSpec,
    iters: usize,
    warmup: usize,
) -> anyhow::Result<RuntimeReport> {
    if iters < 1 {
        anyhow::bail!("iterations must be at least 1");
    }
    let image = load_image(image_path)?;
    let beam = beam_spec.to_beam()?;

    let run = |config: &PipelineConfig, image: &usaug::Image, beam: &BeamDescriptor| {
        bench_timings(config, image, beam, iters, warmup)
    };
    #[cfg(feature = "parallel")]
    let results = {
        // Benchmarking is single-threaded by contract; pin the pool so inner
        // data parallelism cannot skew per-transform timings.
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
        pool.install(|| run(config, &image, &beam))
    }?;
    #[cfg(not(feature = "parallel"))]
    let results = run(config, &image, &beam)?;

    Ok(RuntimeReport {
        schema_version: REPORT_SCHEMA_VERSION,
        pipeline: config.name.clone(),
        image: image_path.display().to_string(),
        height: image.height(),
        width: image.width(),
        iterations: iters,
        environment: format!(
            "{}-{}, single-threaded, opt-level {}",
            std::env::consts::OS,
            std::env::consts::ARCH,
            if cfg!(debug_assertions) { "dev" } else { "release" },
        ),
        results,
    })
}

fn bench_timings(
    config: &PipelineConfig,
    image: &usaug::Image,
    beam: &BeamDescriptor,
    iters: usize,
    warmup: usize,
) -> anyhow::Result<Vec<TransformTiming>> {
    let mut results = Vec::with_capacity(config.transforms.len());
    for spec in &config.transforms {
        let single = PipelineConfig {
            name: config.name.clone(),
            transforms: vec![TransformSpec {
                probability: 1.0,
                kind: spec.kind.clone(),
            }],
            master_seed: config.master_seed,
            views_per_image: config.views_per_image,
            preserve_fov: config.preserve_fov,
        };
        let mut samples = Vec::with_capacity(iters);
        for iter in 0..warmup + iters {
            let stream = make_rng_stream(config.master_seed, iter as u64, 0);
            let start = Instant::now();
            let out = apply_pipeline(&single, image, beam, &stream)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(out);
            if iter >= warmup {
                samples.push(elapsed);
            }
        }
        let (mean_ms, median_ms, std_ms) = summarize(&samples);
        results.push(TransformTiming {
            id: spec.id().to_string(),
            transform: spec.kind.description().to_string(),
            mean_ms,
            median_ms,
            std_ms,
        });
    }
    Ok(results)
}

/// Render the pipeline table: order, probabilities, and parameter bounds.
pub fn render_inspect(config: &PipelineConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("Pipeline: {}\n", config.name));
    out.push_str(&format!(
        "{:<5}{:<8}{:<33}{}\n",
        "ID", "Prob", "Transformation", "Parameters"
    ));
    for spec in &config.transforms {
        out.push_str(&format!(
            "{:<5}{:<8}{:<33}{}\n",
            spec.id().to_string(),
            fmt_num(spec.probability),
            spec.kind.description(),
            spec.kind.bounds_summary()
        ));
    }
    out
}

/// Write `path` with the report JSON, creating parent directories.
pub fn write_report(report: &RuntimeReport, path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, report.to_json())?;
    Ok(())
}
