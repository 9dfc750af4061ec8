//! Connected-component scans and the post-clustering connectivity pass.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Label value for pixels no cluster window reached.
pub const UNASSIGNED: u32 = u32::MAX;

/// A 4-connected run of equally labelled pixels.
#[derive(Debug, Clone)]
pub struct Component {
    pub label: u32,
    /// Pixel indices, first one is the component's first pixel in scan order.
    pub pixels: Vec<usize>,
}

/// Splits a label map into 4-connected components, ordered by their first
/// pixel in row-major scan order. Returns the components and the component
/// index of every pixel.
pub fn connected_components(labels: &[u32], width: usize, height: usize) -> (Vec<Component>, Vec<usize>) {
    assert_eq!(labels.len(), width * height, "label map size");
    let mut owner = vec![usize::MAX; labels.len()];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if owner[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let label = labels[start];
        let mut pixels = Vec::new();
        owner[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            pixels.push(p);
            for q in neighbors4(p, width, height).into_iter().flatten() {
                if owner[q] == usize::MAX && labels[q] == label {
                    owner[q] = id;
                    queue.push_back(q);
                }
            }
        }
        comps.push(Component { label, pixels });
    }
    (comps, owner)
}

/// Number of 4-connected components for each label value `0..num_labels`.
pub fn components_per_label(labels: &[u32], width: usize, height: usize, num_labels: usize) -> Vec<usize> {
    let (comps, _) = connected_components(labels, width, height);
    let mut counts = vec![0; num_labels];
    for c in comps {
        if let Some(n) = counts.get_mut(c.label as usize) {
            *n += 1;
        }
    }
    counts
}

#[inline]
pub(crate) fn neighbors4(p: usize, width: usize, height: usize) -> [Option<usize>; 4] {
    let x = p % width;
    let y = p / width;
    [
        (x > 0).then(|| p - 1),
        (x + 1 < width).then(|| p + 1),
        (y > 0).then(|| p - width),
        (y + 1 < height).then(|| p + width),
    ]
}

struct Group {
    label: u32,
    settled: bool,
    alive: bool,
    pixels: Vec<usize>,
}

/// Makes every label's pixel set 4-connected.
///
/// Components with at least `region_size² / 4` pixels are kept; when a label
/// keeps several, the largest retains the label and the rest receive fresh
/// labels above the current maximum. Smaller components and [`UNASSIGNED`]
/// regions are merged, in scan order, into the neighbouring region sharing the
/// most 4-adjacent pixel pairs (ties go to the lower label). Surviving labels
/// are not renumbered.
pub fn enforce_connectivity(labels: &[u32], width: usize, height: usize, region_size: f64) -> Vec<u32> {
    if labels.is_empty() {
        return Vec::new();
    }
    let (comps, comp_of) = connected_components(labels, width, height);
    let min_size = region_size * region_size / 4.0;

    let mut kept: Vec<bool> = comps
        .iter()
        .map(|c| c.label != UNASSIGNED && c.pixels.len() as f64 >= min_size)
        .collect();
    if !kept.iter().any(|&k| k) {
        // Nothing is large enough: the biggest labelled region anchors the rest.
        let best = comps.iter().enumerate().filter(|(_, c)| c.label != UNASSIGNED).fold(
            None::<(usize, usize)>,
            |best, (i, c)| match best {
                Some((_, n)) if n >= c.pixels.len() => best,
                _ => Some((i, c.pixels.len())),
            },
        );
        match best {
            Some((i, _)) => kept[i] = true,
            None => return vec![0; labels.len()],
        }
    }

    // One kept component per label; extra kept components get fresh labels.
    let mut final_label: Vec<u32> = comps.iter().map(|c| c.label).collect();
    let mut next_label = comps
        .iter()
        .filter(|c| c.label != UNASSIGNED)
        .map(|c| c.label)
        .max()
        .map_or(0, |m| m + 1);
    let mut primary: Vec<(u32, usize)> = Vec::new(); // (label, component)
    for (i, c) in comps.iter().enumerate().filter(|(i, _)| kept[*i]) {
        match primary.iter_mut().find(|(l, _)| *l == c.label) {
            None => primary.push((c.label, i)),
            Some(entry) => {
                if comps[entry.1].pixels.len() < c.pixels.len() {
                    entry.1 = i;
                }
            }
        }
    }
    for (i, c) in comps.iter().enumerate().filter(|(i, _)| kept[*i]) {
        let is_primary = primary.iter().any(|&(l, j)| l == c.label && j == i);
        if !is_primary {
            final_label[i] = next_label;
            next_label += 1;
        }
    }

    let mut groups: Vec<Group> = comps
        .into_iter()
        .enumerate()
        .map(|(i, c)| Group {
            label: final_label[i],
            settled: kept[i],
            alive: true,
            pixels: c.pixels,
        })
        .collect();
    let mut owner = comp_of;

    let pending: Vec<usize> = (0..groups.len()).filter(|&g| !groups[g].settled).collect();
    for g in pending {
        if !groups[g].alive || groups[g].settled {
            continue;
        }
        let mut shared: Vec<(usize, usize)> = Vec::new();
        for &p in &groups[g].pixels {
            for q in neighbors4(p, width, height).into_iter().flatten() {
                let other = owner[q];
                if other == g {
                    continue;
                }
                match shared.iter_mut().find(|(o, _)| *o == other) {
                    Some(entry) => entry.1 += 1,
                    None => shared.push((other, 1)),
                }
            }
        }
        let target = shared
            .iter()
            .copied()
            .fold(None::<(usize, usize)>, |best, (o, n)| match best {
                None => Some((o, n)),
                Some((b, bn)) => {
                    if n > bn || (n == bn && groups[o].label < groups[b].label) {
                        Some((o, n))
                    } else {
                        best
                    }
                }
            });
        let Some((target, _)) = target else {
            // Only possible when this group covers the whole image.
            continue;
        };
        let moved = core::mem::take(&mut groups[g].pixels);
        for &p in &moved {
            owner[p] = target;
        }
        groups[target].pixels.extend(moved);
        groups[g].alive = false;
    }

    let mut out = vec![0u32; labels.len()];
    for group in groups.iter().filter(|g| g.alive) {
        for &p in &group.pixels {
            out[p] = group.label;
        }
    }
    out
}

/// Renumbers labels to `0..count`, preserving their relative order.
pub fn compact_labels(labels: &[u32]) -> (Vec<u32>, usize) {
    let mut values: Vec<u32> = labels.to_vec();
    values.sort_unstable();
    values.dedup();
    let out = labels
        .iter()
        .map(|l| values.binary_search(l).expect("label present") as u32)
        .collect();
    (out, values.len())
}
