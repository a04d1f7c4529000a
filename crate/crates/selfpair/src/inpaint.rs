//! Object-removal inpainting with the fast-marching method. Unknown pixels
//! are filled in ascending arrival-time order, each as a normalized weighted
//! average of already-known neighbors; weights combine a direction factor
//! (alignment with the marching front), inverse squared distance, and a
//! level-set proximity factor.

use crate::error::{Error, Result};
use crate::instances::InstanceSet;
use crate::labelgen::erase_change;
use crate::raster::{RasterImage, SemanticMask};
use crate::rng::SeededRng;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// 0 = known, 1 = to be filled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoleMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl HoleMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "hole mask length {} != {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::DimensionMismatch(
                "hole mask values must be 0/1".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_mask(mask: &SemanticMask) -> Self {
        Self {
            width: mask.width(),
            height: mask.height(),
            data: mask.data().to_vec(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Binary dilation by a square structuring element of the given radius.
    pub fn dilate(&self, radius: usize) -> Self {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width, self.height);
        let mut out = vec![0u8; w * h];
        let r = radius as i64;
        for row in 0..h {
            for col in 0..w {
                if self.data[row * w + col] == 0 {
                    continue;
                }
                for dr in -r..=r {
                    for dc in -r..=r {
                        let (nr, nc) = (row as i64 + dr, col as i64 + dc);
                        if nr >= 0 && nc >= 0 && (nr as usize) < h && (nc as usize) < w {
                            out[nr as usize * w + nc as usize] = 1;
                        }
                    }
                }
            }
        }
        Self {
            width: w,
            height: h,
            data: out,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Known,
    Band,
    Inside,
}

#[derive(PartialEq)]
struct HeapEntry {
    time: f64,
    idx: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on arrival time, index as tiebreak for determinism
        other
            .time
            .partial_cmp(&self.time)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Eikonal update |grad T| = 1 from the smaller of each axis pair.
fn solve_arrival(t: &[f64], state: &[State], w: usize, h: usize, r: usize, c: usize) -> f64 {
    let known_t = |rr: i64, cc: i64| -> Option<f64> {
        if rr < 0 || cc < 0 || rr >= h as i64 || cc >= w as i64 {
            return None;
        }
        let i = rr as usize * w + cc as usize;
        (state[i] != State::Inside).then(|| t[i])
    };
    let horiz = known_t(r as i64, c as i64 - 1)
        .into_iter()
        .chain(known_t(r as i64, c as i64 + 1))
        .fold(f64::INFINITY, f64::min);
    let vert = known_t(r as i64 - 1, c as i64)
        .into_iter()
        .chain(known_t(r as i64 + 1, c as i64))
        .fold(f64::INFINITY, f64::min);
    let (a, b) = (horiz.min(vert), horiz.max(vert));
    if b.is_infinite() {
        return a + 1.0;
    }
    // two-sided quadratic: (T-a)^2 + (T-b)^2 = 1 when consistent
    if (a - b).abs() >= 1.0 {
        a + 1.0
    } else {
        let sum = a + b;
        let diff = a - b;
        (sum + (2.0 - diff * diff).sqrt()) / 2.0
    }
}

/// Central-difference gradient of the arrival time where neighbors are known.
fn arrival_gradient(t: &[f64], state: &[State], w: usize, h: usize, r: usize, c: usize) -> (f64, f64) {
    let sample = |rr: i64, cc: i64| -> Option<f64> {
        if rr < 0 || cc < 0 || rr >= h as i64 || cc >= w as i64 {
            return None;
        }
        let i = rr as usize * w + cc as usize;
        (state[i] != State::Inside).then(|| t[i])
    };
    let here = t[r * w + c];
    let axis = |lo: Option<f64>, hi: Option<f64>| match (lo, hi) {
        (Some(a), Some(b)) => (b - a) / 2.0,
        (Some(a), None) => here - a,
        (None, Some(b)) => b - here,
        (None, None) => 0.0,
    };
    let gr = axis(sample(r as i64 - 1, c as i64), sample(r as i64 + 1, c as i64));
    let gc = axis(sample(r as i64, c as i64 - 1), sample(r as i64, c as i64 + 1));
    (gr, gc)
}

pub(crate) struct FillTrace {
    /// (pixel index, arrival time) in the order pixels were finalized.
    pub order: Vec<(usize, f64)>,
}

fn run_fast_marching(
    image: &RasterImage,
    hole: &HoleMask,
    radius: usize,
) -> Result<(RasterImage, FillTrace)> {
    if hole.width() != image.width() || hole.height() != image.height() {
        return Err(Error::DimensionMismatch(format!(
            "hole {}x{} vs image {}x{}",
            hole.height(),
            hole.width(),
            image.height(),
            image.width()
        )));
    }
    let radius = radius.max(1);
    let (w, h, ch) = (image.width(), image.height(), image.channels());
    let n = w * h;

    let mut state: Vec<State> = hole
        .data()
        .iter()
        .map(|&v| if v == 1 { State::Inside } else { State::Known })
        .collect();
    let mut arrival = vec![0.0f64; n];
    for i in 0..n {
        if state[i] == State::Inside {
            arrival[i] = f64::INFINITY;
        }
    }

    // Working image in float; known pixels never move.
    let mut value: Vec<f64> = image.data().iter().map(|&v| v as f64).collect();

    let neighbors4 = |r: usize, c: usize| {
        let mut out: [(i64, i64); 4] = [(0, 0); 4];
        let mut k = 0;
        for (dr, dc) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            out[k] = (r as i64 + dr, c as i64 + dc);
            k += 1;
        }
        out
    };

    let mut heap = BinaryHeap::new();
    // narrow band: unknown pixels adjacent to a known pixel
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if state[i] != State::Inside {
                continue;
            }
            let touches_known = neighbors4(r, c).iter().any(|&(nr, nc)| {
                nr >= 0
                    && nc >= 0
                    && nr < h as i64
                    && nc < w as i64
                    && state[nr as usize * w + nc as usize] == State::Known
            });
            if touches_known {
                let t = solve_arrival(&arrival, &state, w, h, r, c);
                state[i] = State::Band;
                arrival[i] = t;
                heap.push(HeapEntry { time: t, idx: i });
            }
        }
    }

    let mut trace = FillTrace { order: Vec::new() };
    let ri = radius as i64;

    while let Some(HeapEntry { time, idx }) = heap.pop() {
        if state[idx] == State::Known || time > arrival[idx] {
            continue; // stale entry
        }
        let (r, c) = (idx / w, idx % w);

        // inpaint this pixel from known neighbors within the radius
        let (gtr, gtc) = arrival_gradient(&arrival, &state, w, h, r, c);
        let gnorm = (gtr * gtr + gtc * gtc).sqrt();
        let mut acc = vec![0.0f64; ch];
        let mut wsum = 0.0f64;
        for dr in -ri..=ri {
            for dc in -ri..=ri {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                    continue;
                }
                let ni = nr as usize * w + nc as usize;
                if state[ni] == State::Inside || state[ni] == State::Band {
                    continue;
                }
                let dist2 = (dr * dr + dc * dc) as f64;
                if dist2 > (radius * radius) as f64 {
                    continue;
                }
                let dist = dist2.sqrt();
                let dir = if gnorm > 1e-12 {
                    ((dr as f64 * gtr + dc as f64 * gtc).abs() / (dist * gnorm)).max(1e-6)
                } else {
                    1.0
                };
                let dst = 1.0 / dist2;
                let lev = 1.0 / (1.0 + (arrival[idx] - arrival[ni]).abs());
                let weight = dir * dst * lev;
                for k in 0..ch {
                    acc[k] += weight * value[ni * ch + k];
                }
                wsum += weight;
            }
        }
        if wsum > 0.0 {
            for k in 0..ch {
                value[idx * ch + k] = acc[k] / wsum;
            }
        }
        state[idx] = State::Known;
        trace.order.push((idx, arrival[idx]));

        // relax 4-neighbors
        for &(nr, nc) in neighbors4(r, c).iter() {
            if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                continue;
            }
            let ni = nr as usize * w + nc as usize;
            if state[ni] == State::Known {
                continue;
            }
            let t = solve_arrival(&arrival, &state, w, h, nr as usize, nc as usize);
            if t < arrival[ni] {
                arrival[ni] = t;
                state[ni] = State::Band;
                heap.push(HeapEntry { time: t, idx: ni });
            }
        }
    }

    let mut out = image.clone();
    for i in 0..n {
        if hole.data()[i] == 1 {
            for k in 0..ch {
                let v = value[i * ch + k].round();
                out.set(i / w, i % w, k, v.clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok((out, trace))
}

/// Fills the hole region of `image`; pixels outside the hole are returned
/// bit-identical.
pub fn telea_inpaint(image: &RasterImage, hole: &HoleMask, radius: usize) -> Result<RasterImage> {
    run_fast_marching(image, hole, radius).map(|(img, _)| img)
}

/// Same fill plus the finalization order, for inspecting front propagation.
pub fn telea_inpaint_traced(
    image: &RasterImage,
    hole: &HoleMask,
    radius: usize,
) -> Result<(RasterImage, Vec<(usize, f64)>)> {
    run_fast_marching(image, hole, radius).map(|(img, trace)| (img, trace.order))
}

/// Parameters drawn by the erase strategy, kept for provenance.
#[derive(Debug, Clone)]
pub struct EraseParams {
    pub erased_ids: Vec<u32>,
}

/// The disappearance strategy: erase a random subset of instances and fill
/// the holes. pre = inpainted image, post = original, change = erased pixels.
/// Dilation widens the inpainted area only; the change label ignores it.
pub fn erase_instances_strategy(
    image: &RasterImage,
    label: &SemanticMask,
    instances: &InstanceSet,
    rng: &mut SeededRng,
    erase_fraction: f64,
    dilation: usize,
    radius: usize,
) -> Result<(RasterImage, RasterImage, SemanticMask, EraseParams)> {
    if instances.is_empty() {
        return Err(Error::NoInstances);
    }
    if !(erase_fraction > 0.0 && erase_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "erase_fraction must be in (0, 1], got {erase_fraction}"
        )));
    }
    let count = ((erase_fraction * instances.len() as f64).ceil() as usize)
        .clamp(1, instances.len());
    let chosen = rng.sample_without_replacement(instances.len(), count);

    let (w, h) = (label.width(), label.height());
    let mut hole_data = vec![0u8; w * h];
    let mut kept = vec![1u8; w * h];
    let mut erased_ids = Vec::with_capacity(count);
    for &i in &chosen {
        let inst = &instances.instances[i];
        erased_ids.push(inst.id);
        for &(r, c) in &inst.pixels {
            hole_data[r * w + c] = 1;
            kept[r * w + c] = 0;
        }
    }
    erased_ids.sort_unstable();

    let hole = HoleMask::new(w, h, hole_data)?.dilate(dilation);
    let pre = telea_inpaint(image, &hole, radius)?;
    let kept = SemanticMask::new(w, h, kept)?;
    let change = erase_change(label, &kept)?;
    Ok((pre, image.clone(), change, EraseParams { erased_ids }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::connected_components;
    use crate::rng::derive_rng;

    fn hole_at(w: usize, h: usize, px: &[(usize, usize)]) -> HoleMask {
        let mut data = vec![0u8; w * h];
        for &(r, c) in px {
            data[r * w + c] = 1;
        }
        HoleMask::new(w, h, data).unwrap()
    }

    #[test]
    fn constant_image_fills_exactly() {
        let img = RasterImage::filled(7, 7, 1, 100).unwrap();
        let hole = hole_at(7, 7, &[(3, 3), (3, 4), (4, 3)]);
        let out = telea_inpaint(&img, &hole, 3).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn empty_hole_is_identity() {
        let mut rng = derive_rng(1, 0);
        let data: Vec<u8> = (0..25).map(|_| (rng.next_u64() & 0xff) as u8).collect();
        let img = RasterImage::new(5, 5, 1, data).unwrap();
        let hole = HoleMask::new(5, 5, vec![0; 25]).unwrap();
        assert_eq!(telea_inpaint(&img, &hole, 3).unwrap(), img);
    }

    #[test]
    fn known_pixels_are_untouched() {
        let mut rng = derive_rng(2, 0);
        let data: Vec<u8> = (0..100).map(|_| (rng.next_u64() & 0xff) as u8).collect();
        let img = RasterImage::new(10, 10, 1, data).unwrap();
        let hole = hole_at(10, 10, &[(4, 4), (4, 5), (5, 4), (5, 5)]);
        let out = telea_inpaint(&img, &hole, 4).unwrap();
        for r in 0..10 {
            for c in 0..10 {
                if hole.data()[r * 10 + c] == 0 {
                    assert_eq!(out.get(r, c, 0), img.get(r, c, 0));
                }
            }
        }
    }

    #[test]
    fn ramp_fill_stays_within_neighbor_range() {
        // 7x7 horizontal ramp, value = col * 30
        let mut data = vec![0u8; 49];
        for r in 0..7 {
            for c in 0..7 {
                data[r * 7 + c] = (c * 30) as u8;
            }
        }
        let img = RasterImage::new(7, 7, 1, data).unwrap();
        let hole = hole_at(7, 7, &[(3, 3)]);
        let out = telea_inpaint(&img, &hole, 3).unwrap();
        let v = out.get(3, 3, 0);
        // known 8-neighborhood spans columns 2..=4 -> values 60..=120
        assert!((60..=120).contains(&v), "filled value {v} outside neighbor range");
    }

    #[test]
    fn fill_order_is_nondecreasing_in_arrival_time() {
        let mut rng = derive_rng(3, 0);
        let data: Vec<u8> = (0..144).map(|_| (rng.next_u64() & 0xff) as u8).collect();
        let img = RasterImage::new(12, 12, 1, data).unwrap();
        let hole = hole_at(
            12,
            12,
            &(4..8)
                .flat_map(|r| (4..8).map(move |c| (r, c)))
                .collect::<Vec<_>>(),
        );
        let (_, order) = telea_inpaint_traced(&img, &hole, 3).unwrap();
        assert_eq!(order.len(), 16);
        for pair in order.windows(2) {
            assert!(pair[0].1 <= pair[1].1 + 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let img = RasterImage::filled(4, 4, 1, 0).unwrap();
        let hole = HoleMask::new(5, 4, vec![0; 20]).unwrap();
        assert!(matches!(
            telea_inpaint(&img, &hole, 3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn dilation_grows_hole() {
        let hole = hole_at(7, 7, &[(3, 3)]);
        let grown = hole.dilate(1);
        let count: usize = grown.data().iter().map(|&v| v as usize).sum();
        assert_eq!(count, 9);
    }

    fn two_instance_scene() -> (RasterImage, SemanticMask) {
        let mut img = RasterImage::filled(16, 16, 1, 50).unwrap();
        let mut label = SemanticMask::zeros(16, 16).unwrap();
        for r in 2..5 {
            for c in 2..5 {
                img.set(r, c, 0, 200);
                label.set(r, c, 1);
            }
        }
        for r in 10..13 {
            for c in 10..14 {
                img.set(r, c, 0, 220);
                label.set(r, c, 1);
            }
        }
        (img, label)
    }

    #[test]
    fn erase_strategy_change_is_exactly_the_erased_instance() {
        let (img, label) = two_instance_scene();
        let instances = connected_components(&label);
        assert_eq!(instances.len(), 2);
        let mut rng = derive_rng(5, 0);
        let (pre, post, change, params) =
            erase_instances_strategy(&img, &label, &instances, &mut rng, 0.5, 0, 3).unwrap();
        assert_eq!(params.erased_ids.len(), 1);
        let erased = &instances.instances[(params.erased_ids[0] - 1) as usize];
        assert_eq!(change.count_foreground(), erased.pixels.len());
        for &(r, c) in &erased.pixels {
            assert_eq!(change.get(r, c), 1);
        }
        assert_eq!(post, img);
        // pre differs from post only inside the (undilated) hole
        for r in 0..16 {
            for c in 0..16 {
                if change.get(r, c) == 0 {
                    assert_eq!(pre.get(r, c, 0), post.get(r, c, 0));
                }
            }
        }
    }

    #[test]
    fn erase_strategy_change_ignores_dilation_and_radius() {
        let (img, label) = two_instance_scene();
        let instances = connected_components(&label);
        let run = |dil, rad| {
            let mut rng = derive_rng(9, 4);
            erase_instances_strategy(&img, &label, &instances, &mut rng, 1.0, dil, rad).unwrap()
        };
        let (_, _, change_a, ids_a) = run(0, 2);
        let (_, _, change_b, ids_b) = run(3, 6);
        assert_eq!(change_a, change_b);
        assert_eq!(ids_a.erased_ids, ids_b.erased_ids);
    }

    #[test]
    fn erase_strategy_is_deterministic() {
        let (img, label) = two_instance_scene();
        let instances = connected_components(&label);
        let run = || {
            let mut rng = derive_rng(11, 2);
            erase_instances_strategy(&img, &label, &instances, &mut rng, 0.5, 2, 5).unwrap()
        };
        let (pre_a, _, change_a, params_a) = run();
        let (pre_b, _, change_b, params_b) = run();
        assert_eq!(pre_a, pre_b);
        assert_eq!(change_a, change_b);
        assert_eq!(params_a.erased_ids, params_b.erased_ids);
    }

    #[test]
    fn no_instances_is_an_error() {
        let img = RasterImage::filled(4, 4, 1, 0).unwrap();
        let label = SemanticMask::zeros(4, 4).unwrap();
        let instances = connected_components(&label);
        let mut rng = derive_rng(0, 0);
        assert!(matches!(
            erase_instances_strategy(&img, &label, &instances, &mut rng, 0.5, 0, 3),
            Err(Error::NoInstances)
        ));
    }
}
