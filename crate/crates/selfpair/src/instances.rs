//! Object instances extracted from a binary mask. Instances are the unit of
//! erase and paste; 8-connectivity so diagonally touching buildings stay one unit.

use crate::raster::SemanticMask;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: u32,
    /// (row, col) pixels, raster-scan sorted.
    pub pixels: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceSet {
    pub instances: Vec<Instance>,
}

impl InstanceSet {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// 8-connected components of the foreground. Ids are assigned in raster-scan
/// order of each component's first pixel, starting at 1.
pub fn connected_components(mask: &SemanticMask) -> InstanceSet {
    let (w, h) = (mask.width(), mask.height());
    let mut visited = vec![false; w * h];
    let mut instances = Vec::new();
    let mut next_id = 1u32;

    for start in 0..w * h {
        if visited[start] || mask.data()[start] == 0 {
            continue;
        }
        let mut pixels = Vec::new();
        let mut stack = vec![start];
        visited[start] = true;
        while let Some(idx) = stack.pop() {
            let (r, c) = (idx / w, idx % w);
            pixels.push((r, c));
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                        continue;
                    }
                    let nidx = nr as usize * w + nc as usize;
                    if !visited[nidx] && mask.data()[nidx] == 1 {
                        visited[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }
        pixels.sort_unstable();
        instances.push(Instance {
            id: next_id,
            pixels,
        });
        next_id += 1;
    }

    InstanceSet { instances }
}

/// Builds an InstanceSet from an integer-labeled mask (one label per object,
/// 0 = background), bypassing connected-component analysis. Ids are reassigned
/// in raster-scan order of each label's first pixel.
pub fn instances_from_labels(width: usize, height: usize, labels: &[u32]) -> InstanceSet {
    debug_assert_eq!(labels.len(), width * height);
    let mut order: Vec<u32> = Vec::new();
    let mut pixels_by_label: std::collections::HashMap<u32, Vec<(usize, usize)>> =
        std::collections::HashMap::new();
    for (idx, &lab) in labels.iter().enumerate() {
        if lab == 0 {
            continue;
        }
        let entry = pixels_by_label.entry(lab).or_default();
        if entry.is_empty() {
            order.push(lab);
        }
        entry.push((idx / width, idx % width));
    }
    let instances = order
        .into_iter()
        .enumerate()
        .map(|(i, lab)| Instance {
            id: i as u32 + 1,
            pixels: pixels_by_label.remove(&lab).unwrap(),
        })
        .collect();
    InstanceSet { instances }
}
