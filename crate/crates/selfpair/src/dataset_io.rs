//! Directory ingestion, lossless sample emission, and the manifest that makes
//! every sample re-derivable byte for byte.

use crate::error::{Error, Result};
use crate::instances::{connected_components, instances_from_labels};
use crate::pipeline::{
    synthesize_sample, ChangeSample, PipelineConfig, SourceInput, StrategyKind, StrategyParams,
};
use crate::raster::{RasterImage, SemanticMask};
use image::{DynamicImage, GrayImage, RgbImage};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Binary,
    InstanceId,
}

#[derive(Debug, Clone)]
pub struct SourceEntry {
    pub stem: String,
    pub image_path: PathBuf,
    pub mask_path: PathBuf,
    pub mask_kind: MaskKind,
}

fn list_stems(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    if !dir.exists() {
        return Ok(out);
    }
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn decode(path: &Path, stem: &str) -> Result<DynamicImage> {
    image::open(path).map_err(|e| Error::UndecodableFile(stem.to_string(), e.to_string()))
}

/// Scans `root/images` and `root/masks` for matching stems. Ordering is
/// lexicographic by stem regardless of filesystem enumeration order. Mask
/// kind is auto-detected: values within {0, 1, 255} mean binary, anything
/// else is treated as one instance id per value.
pub fn ingest(root: &Path) -> Result<Vec<SourceEntry>> {
    let images = list_stems(&root.join("images"))?;
    let masks = list_stems(&root.join("masks"))?;
    let mask_by_stem: std::collections::BTreeMap<&str, &PathBuf> =
        masks.iter().map(|(s, p)| (s.as_str(), p)).collect();

    let mut entries = Vec::new();
    for (stem, image_path) in &images {
        let mask_path = mask_by_stem
            .get(stem.as_str())
            .ok_or_else(|| Error::MissingMask(stem.clone()))?;
        let img = decode(image_path, stem)?;
        let mask = decode(mask_path, stem)?;
        if img.width() != mask.width() || img.height() != mask.height() {
            return Err(Error::DimensionMismatch(format!(
                "stem '{stem}': image {}x{} vs mask {}x{}",
                img.height(),
                img.width(),
                mask.height(),
                mask.width()
            )));
        }
        let values = mask_values(&mask);
        let binary = values.iter().all(|v| matches!(v, 0 | 1 | 255));
        entries.push(SourceEntry {
            stem: stem.clone(),
            image_path: image_path.clone(),
            mask_path: (*mask_path).clone(),
            mask_kind: if binary {
                MaskKind::Binary
            } else {
                MaskKind::InstanceId
            },
        });
    }
    Ok(entries)
}

/// Raw mask values at native bit depth; `to_luma16` would rescale 8-bit data.
fn mask_values(img: &DynamicImage) -> Vec<u32> {
    match img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&v| v as u32).collect(),
        DynamicImage::ImageLuma16(g) => g.as_raw().iter().map(|&v| v as u32).collect(),
        _ => img.to_luma8().into_raw().iter().map(|&v| v as u32).collect(),
    }
}

fn raster_from_dynamic(img: &DynamicImage) -> Result<RasterImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(g) => RasterImage::new(w, h, 1, g.as_raw().clone()),
        _ => {
            let rgb = img.to_rgb8();
            RasterImage::new(w, h, 3, rgb.into_raw())
        }
    }
}

/// Loads an entry into memory. Binary masks map any nonzero value to 1;
/// instance-id masks also produce the per-object pixel sets directly.
pub fn load_source(entry: &SourceEntry) -> Result<SourceInput> {
    let img = decode(&entry.image_path, &entry.stem)?;
    let image = raster_from_dynamic(&img)?;
    let mask = decode(&entry.mask_path, &entry.stem)?;
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let values = mask_values(&mask);
    let (label, instances) = match entry.mask_kind {
        MaskKind::Binary => {
            let data: Vec<u8> = values.iter().map(|&v| (v != 0) as u8).collect();
            let label = SemanticMask::new(w, h, data)?;
            let instances = connected_components(&label);
            (label, instances)
        }
        MaskKind::InstanceId => {
            let labels = values;
            let data: Vec<u8> = labels.iter().map(|&v| (v != 0) as u8).collect();
            let label = SemanticMask::new(w, h, data)?;
            let instances = instances_from_labels(w, h, &labels);
            (label, instances)
        }
    };
    Ok(SourceInput {
        id: entry.stem.clone(),
        image,
        label,
        instances,
    })
}

/// Splits sources into non-overlapping n x n tiles (remainders dropped), so
/// synthesis never has to hold a full large scene per sample.
pub fn tile_sources(sources: Vec<SourceInput>, n: usize) -> Vec<SourceInput> {
    if n == 0 {
        return sources;
    }
    let mut out = Vec::new();
    for src in sources {
        let (h, w) = (src.image.height(), src.image.width());
        if h <= n && w <= n {
            out.push(src);
            continue;
        }
        for tr in 0..h / n {
            for tc in 0..w / n {
                let patch = crate::geometry::crop_patch(&src.image, &src.label, tr * n, tc * n, n);
                let instances = connected_components(&patch.label);
                out.push(SourceInput {
                    id: format!("{}#{}_{}", src.id, tr, tc),
                    image: patch.image,
                    label: patch.label,
                    instances,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileChecksums {
    pub pre: String,
    pub post: String,
    pub change: String,
}

/// One manifest line: everything needed to re-derive the sample with the
/// same binary and verify the written files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub sample_id: String,
    pub source_id: String,
    pub strategy: StrategyKind,
    pub fallback_from: Option<StrategyKind>,
    pub global_seed: u64,
    pub sample_index: u64,
    pub params: StrategyParams,
    pub files: FileChecksums,
    pub checksums: FileChecksums,
}

/// Run configuration persisted next to the manifest so `validate` can
/// re-derive samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub tile: Option<usize>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

fn encode_png(img: &RasterImage) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut cursor = std::io::Cursor::new(&mut buf);
    match img.channels() {
        1 => {
            let g = GrayImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
                .expect("length verified by RasterImage");
            g.write_to(&mut cursor, image::ImageFormat::Png)?;
        }
        _ => {
            let rgb =
                RgbImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
                    .expect("length verified by RasterImage");
            rgb.write_to(&mut cursor, image::ImageFormat::Png)?;
        }
    }
    Ok(buf)
}

fn mask_to_png(mask: &SemanticMask) -> Result<Vec<u8>> {
    let data: Vec<u8> = mask.data().iter().map(|&v| v * 255).collect();
    let img = RasterImage::new(mask.width(), mask.height(), 1, data)?;
    encode_png(&img)
}

pub fn sample_id(sample_index: u64) -> String {
    format!("{sample_index:08}")
}

/// Writes t0/<id>.png, t1/<id>.png, change/<id>.png (change as 0/255) and
/// returns the manifest record with per-file checksums.
pub fn write_sample(sample: &ChangeSample, out: &Path) -> Result<ManifestRecord> {
    let id = sample_id(sample.provenance.sample_index);
    let mut checksums = FileChecksums {
        pre: String::new(),
        post: String::new(),
        change: String::new(),
    };
    let files = FileChecksums {
        pre: format!("t0/{id}.png"),
        post: format!("t1/{id}.png"),
        change: format!("change/{id}.png"),
    };
    for (rel, bytes, slot) in [
        (&files.pre, encode_png(&sample.pre)?, &mut checksums.pre),
        (&files.post, encode_png(&sample.post)?, &mut checksums.post),
        (&files.change, mask_to_png(&sample.change)?, &mut checksums.change),
    ] {
        let path = out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, &bytes)?;
        *slot = sha256_hex(&bytes);
    }
    let p = &sample.provenance;
    Ok(ManifestRecord {
        sample_id: id,
        source_id: p.source_id.clone(),
        strategy: p.strategy,
        fallback_from: p.fallback_from,
        global_seed: p.global_seed,
        sample_index: p.sample_index,
        params: p.params.clone(),
        files,
        checksums,
    })
}

pub fn append_manifest(out: &Path, records: &[ManifestRecord]) -> Result<()> {
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(out.join("manifest.jsonl"))?;
    for rec in records {
        let line = serde_json::to_string(rec)?;
        writeln!(file, "{line}")?;
    }
    Ok(())
}

pub fn write_run_config(out: &Path, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.json"), serde_json::to_vec_pretty(cfg)?)?;
    Ok(())
}

pub fn read_run_config(out: &Path) -> Result<RunConfig> {
    let bytes = fs::read(out.join("config.json"))?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn read_manifest(out: &Path) -> Result<Vec<ManifestRecord>> {
    let text = fs::read_to_string(out.join("manifest.jsonl"))?;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line)?);
    }
    Ok(records)
}

/// Re-reads a written change mask back to {0, 1}.
pub fn read_change_mask(path: &Path) -> Result<SemanticMask> {
    let stem = path.display().to_string();
    let img = decode(path, &stem)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<u8> = img.pixels().map(|p| (p.0[0] != 0) as u8).collect();
    SemanticMask::new(w, h, data)
}

/// Verifies every manifest record: on-disk checksums always; full byte-level
/// re-derivation when the source dataset is supplied.
pub fn validate(out: &Path, input: Option<&Path>) -> Result<()> {
    let records = read_manifest(out)?;
    let run_cfg = read_run_config(out)?;

    let sources: Option<std::collections::BTreeMap<String, SourceInput>> = match input {
        Some(root) => {
            let entries = ingest(root)?;
            let loaded: Result<Vec<SourceInput>> = entries.iter().map(load_source).collect();
            let tiled = match run_cfg.tile {
                Some(n) => tile_sources(loaded?, n),
                None => loaded?,
            };
            Some(tiled.into_iter().map(|s| (s.id.clone(), s)).collect())
        }
        None => None,
    };

    for rec in &records {
        for (rel, expect) in [
            (&rec.files.pre, &rec.checksums.pre),
            (&rec.files.post, &rec.checksums.post),
            (&rec.files.change, &rec.checksums.change),
        ] {
            let bytes = fs::read(out.join(rel)).map_err(|e| {
                Error::ValidationFailed(rec.sample_id.clone(), format!("missing {rel}: {e}"))
            })?;
            let actual = sha256_hex(&bytes);
            if &actual != expect {
                return Err(Error::ValidationFailed(
                    rec.sample_id.clone(),
                    format!("checksum mismatch for {rel}"),
                ));
            }
        }
        if let Some(sources) = &sources {
            let src = sources.get(&rec.source_id).ok_or_else(|| {
                Error::ValidationFailed(
                    rec.sample_id.clone(),
                    format!("source '{}' not found in input", rec.source_id),
                )
            })?;
            let sample = synthesize_sample(
                &src.image,
                &src.label,
                &src.instances,
                &run_cfg.pipeline,
                &src.id,
                rec.sample_index,
            )
            .map_err(|e| Error::ValidationFailed(rec.sample_id.clone(), e.to_string()))?;
            let rederived = write_checksums_only(&sample)?;
            if rederived.pre != rec.checksums.pre
                || rederived.post != rec.checksums.post
                || rederived.change != rec.checksums.change
            {
                return Err(Error::ValidationFailed(
                    rec.sample_id.clone(),
                    "re-derived sample differs from manifest checksums".into(),
                ));
            }
        }
    }
    Ok(())
}

fn write_checksums_only(sample: &ChangeSample) -> Result<FileChecksums> {
    Ok(FileChecksums {
        pre: sha256_hex(&encode_png(&sample.pre)?),
        post: sha256_hex(&encode_png(&sample.post)?),
        change: sha256_hex(&mask_to_png(&sample.change)?),
    })
}
