//! Appearance strategy: copy instances out of one crop, paste them into the
//! other at random non-overlapping offsets, then blend away the seams.

use crate::blend::{apply_blend, BlendSpec};
use crate::error::{Error, Result};
use crate::geometry::Patch;
use crate::instances::{connected_components, InstanceSet};
use crate::labelgen::xor_change;
use crate::raster::{RasterImage, SemanticMask};
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

/// One accepted placement: the instance keeps its shape; its bounding box is
/// translated so the top-left corner lands at `target_offset`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Placement {
    pub instance_id: u32,
    /// (min_row, min_col, max_row, max_col) of the instance in its source.
    pub source_bbox: (usize, usize, usize, usize),
    pub target_offset: (usize, usize),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PastePlan {
    pub placements: Vec<Placement>,
    /// Instances that failed every placement attempt.
    pub dropped_ids: Vec<u32>,
}

fn bbox(pixels: &[(usize, usize)]) -> (usize, usize, usize, usize) {
    let mut bb = (usize::MAX, usize::MAX, 0usize, 0usize);
    for &(r, c) in pixels {
        bb.0 = bb.0.min(r);
        bb.1 = bb.1.min(c);
        bb.2 = bb.2.max(r);
        bb.3 = bb.3.max(c);
    }
    bb
}

/// Chooses up to `max_instances` instances at random and assigns each a
/// uniform in-bounds offset, resampling (up to `max_attempts` per instance)
/// until it overlaps neither the target foreground nor earlier placements.
pub fn plan_paste(
    source_instances: &InstanceSet,
    target_label: &SemanticMask,
    rng: &mut SeededRng,
    max_instances: usize,
    max_attempts: usize,
) -> Result<PastePlan> {
    if max_instances == 0 {
        return Err(Error::InvalidConfig("max_instances must be >= 1".into()));
    }
    let (w, h) = (target_label.width(), target_label.height());
    let mut occupied: Vec<u8> = target_label.data().to_vec();
    let mut plan = PastePlan::default();
    if source_instances.is_empty() {
        return Ok(plan);
    }

    let chosen = rng.sample_without_replacement(
        source_instances.len(),
        max_instances.min(source_instances.len()),
    );

    'instances: for &i in &chosen {
        let inst = &source_instances.instances[i];
        let bb = bbox(&inst.pixels);
        let bb_h = bb.2 - bb.0 + 1;
        let bb_w = bb.3 - bb.1 + 1;
        if bb_h > h || bb_w > w {
            plan.dropped_ids.push(inst.id);
            continue;
        }
        let row_range = h - bb_h + 1;
        let col_range = w - bb_w + 1;
        for _ in 0..max_attempts {
            let off = (rng.gen_index(row_range), rng.gen_index(col_range));
            let clear = inst.pixels.iter().all(|&(r, c)| {
                let tr = r - bb.0 + off.0;
                let tc = c - bb.1 + off.1;
                occupied[tr * w + tc] == 0
            });
            if clear {
                for &(r, c) in &inst.pixels {
                    let tr = r - bb.0 + off.0;
                    let tc = c - bb.1 + off.1;
                    occupied[tr * w + tc] = 1;
                }
                plan.placements.push(Placement {
                    instance_id: inst.id,
                    source_bbox: bb,
                    target_offset: off,
                });
                continue 'instances;
            }
        }
        plan.dropped_ids.push(inst.id);
    }
    Ok(plan)
}

/// Executes a plan: planned pixels take the source value and label 1,
/// everything else is untouched. Also returns the paste mask alone.
pub fn apply_paste(
    target_image: &RasterImage,
    target_label: &SemanticMask,
    source_image: &RasterImage,
    source_instances: &InstanceSet,
    plan: &PastePlan,
) -> Result<(RasterImage, SemanticMask, SemanticMask)> {
    if !target_label.matches_image(target_image) {
        return Err(Error::DimensionMismatch(
            "target label does not match target image".into(),
        ));
    }
    let (w, h, ch) = (
        target_image.width(),
        target_image.height(),
        target_image.channels(),
    );
    if source_image.channels() != ch {
        return Err(Error::DimensionMismatch(
            "source and target channel counts differ".into(),
        ));
    }
    let mut cp_image = target_image.clone();
    let mut cp_label = target_label.clone();
    let mut paste_mask = SemanticMask::zeros(w, h)?;

    for placement in &plan.placements {
        let inst = source_instances
            .instances
            .iter()
            .find(|i| i.id == placement.instance_id)
            .ok_or(Error::PlanOutOfBounds)?;
        let (br, bc, _, _) = placement.source_bbox;
        let (or, oc) = placement.target_offset;
        for &(r, c) in &inst.pixels {
            if r >= source_image.height() || c >= source_image.width() {
                return Err(Error::PlanOutOfBounds);
            }
            let tr = r - br + or;
            let tc = c - bc + oc;
            if tr >= h || tc >= w {
                return Err(Error::PlanOutOfBounds);
            }
            for k in 0..ch {
                cp_image.set(tr, tc, k, source_image.get(r, c, k));
            }
            cp_label.set(tr, tc, 1);
            paste_mask.set(tr, tc, 1);
        }
    }
    Ok((cp_image, cp_label, paste_mask))
}

/// Parameters recorded by the copy-paste strategy for provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CopyPasteParams {
    pub plan: PastePlan,
}

/// Full appearance strategy over a crop pair: instances come from the pre
/// patch, land in the post patch, and the result is blended. The change label
/// is the xor of the pre label with the pasted label and never depends on the
/// blend.
pub fn copy_paste_strategy(
    patch_pre: &Patch,
    patch_post: &Patch,
    spec: &BlendSpec,
    rng: &mut SeededRng,
    max_instances: usize,
    max_attempts: usize,
) -> Result<(RasterImage, RasterImage, SemanticMask, CopyPasteParams)> {
    if !patch_pre.image.same_shape(&patch_post.image) {
        return Err(Error::DimensionMismatch(
            "crop pair patches differ in shape".into(),
        ));
    }
    let source_instances = connected_components(&patch_pre.label);
    let plan = plan_paste(
        &source_instances,
        &patch_post.label,
        rng,
        max_instances,
        max_attempts,
    )?;
    let (cp_image, cp_label, paste_mask) = apply_paste(
        &patch_post.image,
        &patch_post.label,
        &patch_pre.image,
        &source_instances,
        &plan,
    )?;
    let post = apply_blend(&patch_post.image, &cp_image, &paste_mask, spec)?;
    let change = xor_change(&patch_pre.label, &cp_label)?;
    Ok((
        patch_pre.image.clone(),
        post,
        change,
        CopyPasteParams { plan },
    ))
}
