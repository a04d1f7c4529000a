//! Orchestration: per sample, draw a manipulation strategy, apply it to one
//! source, and emit a validated (pre, post, change) triple with provenance.

use crate::blend::BlendSpec;
use crate::copypaste::{copy_paste_strategy, PastePlan};
use crate::error::{Error, Result};
use crate::geometry::{crop_pair_strategy, Rotation};
use crate::inpaint::erase_instances_strategy;
use crate::instances::InstanceSet;
use crate::labelgen::xor_change;
use crate::raster::{RasterImage, SemanticMask};
use crate::rng::{derive_rng, SeededRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Crop,
    Inpaint,
    CopyPaste,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Crop,
        StrategyKind::Inpaint,
        StrategyKind::CopyPaste,
    ];
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategyKind::Crop => write!(f, "crop"),
            StrategyKind::Inpaint => write!(f, "inpaint"),
            StrategyKind::CopyPaste => write!(f, "copy_paste"),
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crop" => Ok(StrategyKind::Crop),
            "inpaint" => Ok(StrategyKind::Inpaint),
            "copy_paste" | "copy-paste" => Ok(StrategyKind::CopyPaste),
            other => Err(Error::InvalidConfig(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub crop_size: usize,
    /// Enabled strategies, parallel to `strategy_weights`.
    pub strategies: Vec<StrategyKind>,
    pub strategy_weights: Vec<f64>,
    pub blend: BlendSpec,
    pub erase_fraction: f64,
    pub dilation: usize,
    pub telea_radius: usize,
    pub max_instances: usize,
    pub max_attempts: usize,
    pub global_seed: u64,
    pub samples_per_source: u64,
    /// Inpaint order: false = inpainted image is the pre-event image.
    pub swap_inpaint_order: bool,
    /// Post-crop inpaint samples to crop_size, centered on the change.
    pub normalize_size: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            crop_size: 256,
            strategies: StrategyKind::ALL.to_vec(),
            strategy_weights: vec![1.0 / 3.0; 3],
            blend: BlendSpec::default(),
            erase_fraction: 0.5,
            dilation: 2,
            telea_radius: 5,
            max_instances: 8,
            max_attempts: 20,
            global_seed: 0,
            samples_per_source: 1,
            swap_inpaint_order: false,
            normalize_size: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("no strategy enabled".into()));
        }
        if self.strategies.len() != self.strategy_weights.len() {
            return Err(Error::InvalidConfig(
                "strategies and weights differ in length".into(),
            ));
        }
        if self.strategy_weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidConfig("weights must be nonnegative".into()));
        }
        let sum: f64 = self.strategy_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        if self.crop_size == 0 {
            return Err(Error::InvalidConfig("crop_size must be >= 1".into()));
        }
        self.blend.validate()
    }
}

/// Per-strategy parameters captured for reproduction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyParams {
    Crop {
        origin_pre: (usize, usize),
        origin_post: (usize, usize),
        rotation: Rotation,
    },
    Inpaint {
        erased_ids: Vec<u32>,
        dilation: usize,
        radius: usize,
        swapped: bool,
        crop_origin: Option<(usize, usize)>,
    },
    CopyPaste {
        origin_pre: (usize, usize),
        origin_post: (usize, usize),
        rotation: Rotation,
        plan: PastePlan,
        blend: BlendSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub strategy: StrategyKind,
    /// Set when the drawn strategy failed or produced an empty plan and the
    /// sample fell back to another strategy.
    pub fallback_from: Option<StrategyKind>,
    pub global_seed: u64,
    pub sample_index: u64,
    pub params: StrategyParams,
}

/// The pipeline output: a synthetic bi-temporal pair with its change label,
/// the intermediate semantic labels, and full provenance.
#[derive(Debug, Clone)]
pub struct ChangeSample {
    pub pre: RasterImage,
    pub post: RasterImage,
    pub change: SemanticMask,
    pub pre_label: SemanticMask,
    pub post_label: SemanticMask,
    pub provenance: Provenance,
}

/// Draws a strategy according to the configured weights. Exposed so the
/// sampling distribution can be checked without running full syntheses.
pub fn draw_strategy(cfg: &PipelineConfig, rng: &mut SeededRng) -> StrategyKind {
    let u = rng.gen_f64();
    let mut cum = 0.0;
    for (&s, &w) in cfg.strategies.iter().zip(&cfg.strategy_weights) {
        cum += w;
        if u < cum {
            return s;
        }
    }
    *cfg.strategies.last().expect("validated nonempty")
}

fn centered_window(change: &SemanticMask, size: usize) -> (usize, usize) {
    let (w, h) = (change.width(), change.height());
    let (mut sum_r, mut sum_c, mut n) = (0usize, 0usize, 0usize);
    for r in 0..h {
        for c in 0..w {
            if change.get(r, c) == 1 {
                sum_r += r;
                sum_c += c;
                n += 1;
            }
        }
    }
    let (cr, cc) = if n > 0 {
        (sum_r / n, sum_c / n)
    } else {
        (h / 2, w / 2)
    };
    let row = cr.saturating_sub(size / 2).min(h - size);
    let col = cc.saturating_sub(size / 2).min(w - size);
    (row, col)
}

fn crop_all(
    sample: (RasterImage, RasterImage, SemanticMask, SemanticMask, SemanticMask),
    origin: (usize, usize),
    size: usize,
) -> (RasterImage, RasterImage, SemanticMask, SemanticMask, SemanticMask) {
    use crate::geometry::crop_patch;
    let (pre, post, change, pre_label, post_label) = sample;
    let crop_img = |img: &RasterImage, mask: &SemanticMask| {
        crop_patch(img, mask, origin.0, origin.1, size)
    };
    let a = crop_img(&pre, &pre_label);
    let b = crop_img(&post, &post_label);
    let c = crop_img(&pre, &change); // image part unused
    (a.image, b.image, c.label, a.label, b.label)
}

struct StrategyOutput {
    pre: RasterImage,
    post: RasterImage,
    change: SemanticMask,
    pre_label: SemanticMask,
    post_label: SemanticMask,
    params: StrategyParams,
}

fn run_strategy(
    kind: StrategyKind,
    image: &RasterImage,
    label: &SemanticMask,
    instances: &InstanceSet,
    cfg: &PipelineConfig,
    rng: &mut SeededRng,
) -> Result<StrategyOutput> {
    match kind {
        StrategyKind::Crop => {
            let (pre, post, params) = crop_pair_strategy(image, label, cfg.crop_size, rng)?;
            let change = xor_change(&pre.label, &post.label)?;
            Ok(StrategyOutput {
                pre: pre.image,
                post: post.image,
                change,
                pre_label: pre.label,
                post_label: post.label,
                params: StrategyParams::Crop {
                    origin_pre: params.origin_pre,
                    origin_post: params.origin_post,
                    rotation: params.rotation,
                },
            })
        }
        StrategyKind::Inpaint => {
            let (inpainted, original, change, erase) = erase_instances_strategy(
                image,
                label,
                instances,
                rng,
                cfg.erase_fraction,
                cfg.dilation,
                cfg.telea_radius,
            )?;
            // surviving label: original label minus change
            let surviving = xor_change(label, &change)?;
            let (pre, post, pre_label, post_label) = if cfg.swap_inpaint_order {
                (original, inpainted, label.clone(), surviving)
            } else {
                (inpainted, original, surviving, label.clone())
            };
            let mut out = StrategyOutput {
                pre,
                post,
                change,
                pre_label,
                post_label,
                params: StrategyParams::Inpaint {
                    erased_ids: erase.erased_ids,
                    dilation: cfg.dilation,
                    radius: cfg.telea_radius,
                    swapped: cfg.swap_inpaint_order,
                    crop_origin: None,
                },
            };
            if cfg.normalize_size
                && image.height() >= cfg.crop_size
                && image.width() >= cfg.crop_size
                && (image.height() != cfg.crop_size || image.width() != cfg.crop_size)
            {
                let origin = centered_window(&out.change, cfg.crop_size);
                let (pre, post, change, pre_label, post_label) = crop_all(
                    (out.pre, out.post, out.change, out.pre_label, out.post_label),
                    origin,
                    cfg.crop_size,
                );
                out.pre = pre;
                out.post = post;
                out.change = change;
                out.pre_label = pre_label;
                out.post_label = post_label;
                if let StrategyParams::Inpaint { crop_origin, .. } = &mut out.params {
                    *crop_origin = Some(origin);
                }
            }
            Ok(out)
        }
        StrategyKind::CopyPaste => {
            let (pre, post, params) = crop_pair_strategy(image, label, cfg.crop_size, rng)?;
            let (pre_img, post_img, change, cp) = copy_paste_strategy(
                &pre,
                &post,
                &cfg.blend,
                rng,
                cfg.max_instances,
                cfg.max_attempts,
            )?;
            if cp.plan.placements.is_empty() && !pre.label.is_empty_foreground() {
                // crowded target: nothing could be placed, caller falls back
                return Err(Error::NoInstances);
            }
            // post-side label after pasting: change ^ pre_label
            let post_label = xor_change(&change, &pre.label)?;
            Ok(StrategyOutput {
                pre: pre_img,
                post: post_img,
                change,
                pre_label: pre.label,
                post_label,
                params: StrategyParams::CopyPaste {
                    origin_pre: params.origin_pre,
                    origin_post: params.origin_post,
                    rotation: params.rotation,
                    plan: cp.plan,
                    blend: cfg.blend,
                },
            })
        }
    }
}

/// Synthesizes one sample. The strategy is drawn from the seeded stream for
/// (global_seed, sample_index); if it fails, the remaining enabled strategies
/// are tried in declaration order before the source is declared unusable.
pub fn synthesize_sample(
    image: &RasterImage,
    label: &SemanticMask,
    instances: &InstanceSet,
    cfg: &PipelineConfig,
    source_id: &str,
    sample_index: u64,
) -> Result<ChangeSample> {
    cfg.validate()?;
    if !label.matches_image(image) {
        return Err(Error::DimensionMismatch(
            "label dimensions do not match image".into(),
        ));
    }
    let mut rng = derive_rng(cfg.global_seed, sample_index);
    let drawn = draw_strategy(cfg, &mut rng);

    let mut order = vec![drawn];
    for &s in &cfg.strategies {
        if !order.contains(&s) {
            order.push(s);
        }
    }

    let mut last_err = None;
    for (attempt, &kind) in order.iter().enumerate() {
        match run_strategy(kind, image, label, instances, cfg, &mut rng) {
            Ok(out) => {
                let provenance = Provenance {
                    source_id: source_id.to_string(),
                    strategy: kind,
                    fallback_from: (attempt > 0).then_some(drawn),
                    global_seed: cfg.global_seed,
                    sample_index,
                    params: out.params,
                };
                let sample = ChangeSample {
                    pre: out.pre,
                    post: out.post,
                    change: out.change,
                    pre_label: out.pre_label,
                    post_label: out.post_label,
                    provenance,
                };
                self_check(&sample, sample_index)?;
                return Ok(sample);
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::SourceUnusable(
        source_id.to_string(),
        last_err.map(|e| e.to_string()).unwrap_or_default(),
    ))
}

/// change must equal xor(pre_label, post_label). Always checked in debug
/// builds, on a 1% stride in release.
fn self_check(sample: &ChangeSample, sample_index: u64) -> Result<()> {
    let enabled = cfg!(debug_assertions) || sample_index % 100 == 0;
    if !enabled {
        return Ok(());
    }
    let expect = xor_change(&sample.pre_label, &sample.post_label)?;
    if expect != sample.change {
        return Err(Error::ValidationFailed(
            format!("{}-{}", sample.provenance.source_id, sample_index),
            "change label does not equal xor(pre_label, post_label)".into(),
        ));
    }
    Ok(())
}

/// One ingested source ready for synthesis.
#[derive(Debug, Clone)]
pub struct SourceInput {
    pub id: String,
    pub image: RasterImage,
    pub label: SemanticMask,
    pub instances: InstanceSet,
}

#[derive(Debug, Default)]
pub struct DatasetReport {
    /// (source id, error message) for sources that produced no sample.
    pub failures: Vec<(String, String)>,
}

/// samples_per_source samples per source with globally unique, stable sample
/// indices. Content is independent of worker count; per-source failures are
/// collected instead of aborting.
pub fn synthesize_dataset(
    sources: &[SourceInput],
    cfg: &PipelineConfig,
) -> Result<(Vec<ChangeSample>, DatasetReport)> {
    cfg.validate()?;
    if sources.is_empty() {
        return Err(Error::InvalidConfig("no sources supplied".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..sources.len())
        .flat_map(|s| {
            (0..cfg.samples_per_source)
                .map(move |j| (s, s as u64 * cfg.samples_per_source + j))
        })
        .collect();
    let results: Vec<(u64, std::result::Result<ChangeSample, (String, String)>)> = jobs
        .par_iter()
        .map(|&(s, idx)| {
            let src = &sources[s];
            let r = synthesize_sample(&src.image, &src.label, &src.instances, cfg, &src.id, idx)
                .map_err(|e| (src.id.clone(), e.to_string()));
            (idx, r)
        })
        .collect();

    let mut samples = Vec::new();
    let mut report = DatasetReport::default();
    let mut failed_sources = std::collections::BTreeSet::new();
    let mut ordered = results;
    ordered.sort_by_key(|(idx, _)| *idx);
    for (_, r) in ordered {
        match r {
            Ok(s) => samples.push(s),
            Err((id, msg)) => {
                if failed_sources.insert(id.clone()) {
                    report.failures.push((id, msg));
                }
            }
        }
    }
    Ok((samples, report))
}
