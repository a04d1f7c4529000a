//! Random-crop strategy: two disjoint patches from one source, the second
//! rotated by a random quarter turn.

use crate::error::{Error, Result};
use crate::raster::{RasterImage, SemanticMask};
use crate::rng::SeededRng;

const REJECTION_ATTEMPTS: usize = 100;

/// A window cut from a source image, label cut at the identical location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub image: RasterImage,
    pub label: SemanticMask,
    /// (row, col) of the window's top-left corner in the source.
    pub origin: (usize, usize),
}

/// Clockwise 90-degree multiples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Rotation {
    quarter_turns: u8,
}

impl Rotation {
    pub fn new(quarter_turns: u8) -> Result<Self> {
        if quarter_turns > 3 {
            return Err(Error::InvalidConfig(format!(
                "quarter_turns must be in 0..=3, got {quarter_turns}"
            )));
        }
        Ok(Self { quarter_turns })
    }

    pub fn quarter_turns(&self) -> u8 {
        self.quarter_turns
    }

    pub fn sample(rng: &mut SeededRng) -> Self {
        Self {
            quarter_turns: rng.gen_index(4) as u8,
        }
    }
}

fn crop_image(src: &RasterImage, row: usize, col: usize, size: usize) -> RasterImage {
    let ch = src.channels();
    let mut data = Vec::with_capacity(size * size * ch);
    for r in row..row + size {
        let start = (r * src.width() + col) * ch;
        data.extend_from_slice(&src.data()[start..start + size * ch]);
    }
    RasterImage::new(size, size, ch, data).expect("crop bounds checked by caller")
}

fn crop_mask(src: &SemanticMask, row: usize, col: usize, size: usize) -> SemanticMask {
    let mut data = Vec::with_capacity(size * size);
    for r in row..row + size {
        let start = r * src.width() + col;
        data.extend_from_slice(&src.data()[start..start + size]);
    }
    SemanticMask::new(size, size, data).expect("crop bounds checked by caller")
}

pub fn crop_patch(
    image: &RasterImage,
    label: &SemanticMask,
    row: usize,
    col: usize,
    size: usize,
) -> Patch {
    Patch {
        image: crop_image(image, row, col, size),
        label: crop_mask(label, row, col, size),
        origin: (row, col),
    }
}

fn rects_overlap(a: (usize, usize), b: (usize, usize), size: usize) -> bool {
    (a.0 as i64 - b.0 as i64).abs() < size as i64 && (a.1 as i64 - b.1 as i64).abs() < size as i64
}

/// Number of origins in an (n_rows x n_cols) grid overlapping `a`.
fn overlap_count(a: (usize, usize), n_rows: usize, n_cols: usize, size: usize) -> usize {
    let rows = (a.0.saturating_sub(size - 1)..(a.0 + size).min(n_rows)).len();
    let cols = (a.1.saturating_sub(size - 1)..(a.1 + size).min(n_cols)).len();
    rows * cols
}

/// Two size x size patches whose rectangles share no pixel. Image and label
/// are cropped at identical origins. Rejection sampling first; if that fails,
/// a deterministic fallback draws patch 1 from the origins that still admit a
/// disjoint partner, so the call errors only when no disjoint pair exists.
pub fn sample_disjoint_crops(
    image: &RasterImage,
    label: &SemanticMask,
    size: usize,
    rng: &mut SeededRng,
) -> Result<(Patch, Patch)> {
    if !label.matches_image(image) {
        return Err(Error::DimensionMismatch(
            "label dimensions do not match image".into(),
        ));
    }
    let (h, w) = (image.height(), image.width());
    if size == 0 || size > h || size > w {
        return Err(Error::InfeasibleCrop {
            height: h,
            width: w,
            size,
        });
    }
    let n_rows = h - size + 1;
    let n_cols = w - size + 1;
    // Disjoint pairs exist iff the patches can be separated along one axis.
    let feasible = h >= 2 * size || w >= 2 * size;
    if !feasible {
        return Err(Error::InfeasibleCrop {
            height: h,
            width: w,
            size,
        });
    }

    for _ in 0..REJECTION_ATTEMPTS {
        let a = (rng.gen_index(n_rows), rng.gen_index(n_cols));
        let b = (rng.gen_index(n_rows), rng.gen_index(n_cols));
        if !rects_overlap(a, b, size) {
            return Ok((crop_patch(image, label, a.0, a.1, size), crop_patch(image, label, b.0, b.1, size)));
        }
    }

    // Fallback: patch 1 uniform over origins with at least one disjoint
    // partner, patch 2 uniform over that partner set.
    let viable: Vec<(usize, usize)> = (0..n_rows)
        .flat_map(|r| (0..n_cols).map(move |c| (r, c)))
        .filter(|&a| overlap_count(a, n_rows, n_cols, size) < n_rows * n_cols)
        .collect();
    debug_assert!(!viable.is_empty(), "feasibility check guarantees a pair");
    let a = viable[rng.gen_index(viable.len())];
    let partners: Vec<(usize, usize)> = (0..n_rows)
        .flat_map(|r| (0..n_cols).map(move |c| (r, c)))
        .filter(|&b| !rects_overlap(a, b, size))
        .collect();
    let b = partners[rng.gen_index(partners.len())];
    Ok((crop_patch(image, label, a.0, a.1, size), crop_patch(image, label, b.0, b.1, size)))
}

fn rotate_image_cw(src: &RasterImage) -> RasterImage {
    let (h, w, ch) = (src.height(), src.width(), src.channels());
    // out is w x h; out(r, c) = in(h-1-c, r)
    let mut data = vec![0u8; w * h * ch];
    for r in 0..w {
        for c in 0..h {
            for k in 0..ch {
                data[(r * h + c) * ch + k] = src.get(h - 1 - c, r, k);
            }
        }
    }
    RasterImage::new(h, w, ch, data).expect("rotation preserves pixel count")
}

fn rotate_mask_cw(src: &SemanticMask) -> SemanticMask {
    let (h, w) = (src.height(), src.width());
    let mut data = vec![0u8; w * h];
    for r in 0..w {
        for c in 0..h {
            data[r * h + c] = src.get(h - 1 - c, r);
        }
    }
    SemanticMask::new(h, w, data).expect("rotation preserves pixel count")
}

/// Rotates image and label in lockstep. Dimensions swap for odd quarter
/// turns; the recorded origin refers to the pre-rotation source window.
pub fn rotate(patch: &Patch, rot: Rotation) -> Patch {
    let mut image = patch.image.clone();
    let mut label = patch.label.clone();
    for _ in 0..rot.quarter_turns {
        image = rotate_image_cw(&image);
        label = rotate_mask_cw(&label);
    }
    Patch {
        image,
        label,
        origin: patch.origin,
    }
}

/// Parameters drawn while building a crop pair, kept for provenance.
#[derive(Debug, Clone, Copy)]
pub struct CropPairParams {
    pub origin_pre: (usize, usize),
    pub origin_post: (usize, usize),
    pub rotation: Rotation,
}

/// The full crop strategy: patch 1 unrotated as pre, patch 2 rotated by a
/// uniformly drawn quarter turn as post.
pub fn crop_pair_strategy(
    image: &RasterImage,
    label: &SemanticMask,
    size: usize,
    rng: &mut SeededRng,
) -> Result<(Patch, Patch, CropPairParams)> {
    let (pre, post_raw) = sample_disjoint_crops(image, label, size, rng)?;
    let rotation = Rotation::sample(rng);
    let post = rotate(&post_raw, rotation);
    let params = CropPairParams {
        origin_pre: pre.origin,
        origin_post: post_raw.origin,
        rotation,
    };
    Ok((pre, post, params))
}
