//! Postprocessing of the fused mask: hole filling, largest 4-connected
//! component selection, and dilation by a disk whose radius scales with the
//! lesion diameter.

use crate::error::{Error, Result};
use crate::imgcore::BinaryMask;

/// Reference image width the dilation scale is calibrated to.
pub const REFERENCE_WIDTH: f64 = 512.0;

/// Default dilation scale factor.
pub const DEFAULT_EXPAND_K: f64 = 7.0;

/// A closed discrete disk: all offsets with `dy^2 + dx^2 <= R^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    radius: usize,
    offsets: Vec<(isize, isize)>,
}

impl StructuringElement {
    pub fn disk(radius: usize) -> Self {
        let r = radius as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dy * dy + dx * dx <= r * r {
                    offsets.push((dy, dx));
                }
            }
        }
        Self { radius, offsets }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    /// Horizontal half-width of the disk on row offset `dy`.
    fn half_width(&self, dy: isize) -> usize {
        let r = self.radius as isize;
        let mut w = 0;
        while (w + 1) * (w + 1) + dy * dy <= r * r {
            w += 1;
        }
        w as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentStats {
    pub pixel_count: usize,
    /// Maximum distance between two foreground pixel centers.
    pub diameter: f64,
    /// `(min_row, min_col, max_row, max_col)`, inclusive.
    pub bounding_box: (usize, usize, usize, usize),
}

fn neighbors4(r: usize, c: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    let up = (r > 0).then(|| (r - 1, c));
    let down = (r + 1 < h).then_some((r + 1, c));
    let left = (c > 0).then(|| (r, c - 1));
    let right = (c + 1 < w).then_some((r, c + 1));
    [up, down, left, right].into_iter().flatten()
}

fn neighbors8(r: usize, c: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    (r.saturating_sub(1)..(r + 2).min(h))
        .flat_map(move |rr| (c.saturating_sub(1)..(c + 2).min(w)).map(move |cc| (rr, cc)))
        .filter(move |&p| p != (r, c))
}

/// Turns every background pixel that cannot reach the image border through
/// 8-connected background into foreground.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut outside = vec![false; w * h];
    let mut stack = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let on_border = r == 0 || c == 0 || r + 1 == h || c + 1 == w;
            if on_border && !mask.get(r, c) {
                outside[r * w + c] = true;
                stack.push((r, c));
            }
        }
    }
    while let Some((r, c)) = stack.pop() {
        for (rr, cc) in neighbors8(r, c, w, h) {
            let i = rr * w + cc;
            if !outside[i] && !mask.get(rr, cc) {
                outside[i] = true;
                stack.push((rr, cc));
            }
        }
    }
    let labels = outside.into_iter().map(|o| !o).collect();
    BinaryMask::new(w, h, labels).expect("same dimensions")
}

/// Keeps only the largest 4-connected foreground component. Among equally
/// large components, the one reached first in raster order wins.
pub fn largest_component(mask: &BinaryMask) -> Result<BinaryMask> {
    let (w, h) = mask.dims();
    let mut label = vec![0u32; w * h];
    let mut best: Option<(u32, usize)> = None;
    let mut next = 0u32;
    let mut stack = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) || label[r * w + c] != 0 {
                continue;
            }
            next += 1;
            label[r * w + c] = next;
            stack.push((r, c));
            let mut size = 0;
            while let Some((pr, pc)) = stack.pop() {
                size += 1;
                for (rr, cc) in neighbors4(pr, pc, w, h) {
                    let i = rr * w + cc;
                    if mask.get(rr, cc) && label[i] == 0 {
                        label[i] = next;
                        stack.push((rr, cc));
                    }
                }
            }
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((next, size));
            }
        }
    }
    let (keep, _) = best.ok_or(Error::EmptyMask)?;
    let labels = label.into_iter().map(|l| l == keep).collect();
    BinaryMask::new(w, h, labels)
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull of integer points (monotone chain), counter-clockwise,
/// collinear points dropped.
pub(crate) fn convex_hull(mut points: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    points.sort_unstable();
    points.dedup();
    if points.len() < 3 {
        return points;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * points.len());
    for &p in &points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    // the upper chain may not pop vertices of the finished lower chain
    let lower_len = hull.len() + 1;
    for &p in points.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Area, bounding box and exact Feret diameter of the foreground, taken as
/// one object.
pub fn component_stats(mask: &BinaryMask) -> Result<ComponentStats> {
    let (w, h) = mask.dims();
    let mut pixel_count = 0;
    let mut bbox: Option<(usize, usize, usize, usize)> = None;
    // only the leftmost and rightmost pixel of a row can be hull vertices
    let mut extremes = Vec::new();
    for r in 0..h {
        let row = &mask.labels()[r * w..(r + 1) * w];
        let Some(first) = row.iter().position(|&v| v) else {
            continue;
        };
        let last = row.iter().rposition(|&v| v).unwrap_or(first);
        pixel_count += row.iter().filter(|&&v| v).count();
        extremes.push((r as i64, first as i64));
        extremes.push((r as i64, last as i64));
        bbox = Some(match bbox {
            None => (r, first, r, last),
            Some((r0, c0, _, c1)) => (r0, c0.min(first), r, c1.max(last)),
        });
    }
    let bounding_box = bbox.ok_or(Error::EmptyMask)?;
    let hull = convex_hull(extremes);
    let mut best = 0i64;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            let (dr, dc) = (a.0 - b.0, a.1 - b.1);
            best = best.max(dr * dr + dc * dc);
        }
    }
    Ok(ComponentStats {
        pixel_count,
        diameter: (best as f64).sqrt(),
        bounding_box,
    })
}

/// `floor(k * diameter / 512)`.
pub fn dilation_radius(diameter: f64, k: f64) -> usize {
    (k * diameter / REFERENCE_WIDTH).floor().max(0.0) as usize
}

/// Binary dilation by `se`, clipped to the image.
///
/// The disk is decomposed into horizontal runs: row offset `dy` contributes
/// a run of half-width `w(dy)`, tested in O(1) with per-row prefix counts.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    if se.radius() == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let mut prefix = vec![0u32; h * (w + 1)];
    for r in 0..h {
        let base = r * (w + 1);
        for c in 0..w {
            prefix[base + c + 1] = prefix[base + c] + u32::from(mask.get(r, c));
        }
    }
    let radius = se.radius() as isize;
    let runs: Vec<(isize, usize)> = (-radius..=radius).map(|dy| (dy, se.half_width(dy))).collect();
    let mut labels = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            labels[r * w + c] = runs.iter().any(|&(dy, half)| {
                let rr = r as isize + dy;
                if rr < 0 || rr >= h as isize {
                    return false;
                }
                let base = rr as usize * (w + 1);
                let lo = c.saturating_sub(half);
                let hi = (c + half + 1).min(w);
                prefix[base + hi] > prefix[base + lo]
            });
        }
    }
    BinaryMask::new(w, h, labels).expect("same dimensions")
}

/// Summary of one postprocessing run.
#[derive(Clone, Debug, PartialEq)]
pub struct Postprocessed {
    pub mask: BinaryMask,
    /// Stats of the selected component before dilation.
    pub stats: ComponentStats,
    pub radius: usize,
}

/// Fill holes, keep the largest component, then dilate with a disk of radius
/// `floor(k D / 512)`. `expand_k = None` skips the dilation.
pub fn postprocess(mask: &BinaryMask, expand_k: Option<f64>) -> Result<Postprocessed> {
    if let Some(k) = expand_k {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidConfig(format!("expansion factor must be positive, got {k}")));
        }
    }
    let filled = fill_holes(mask);
    let lesion = largest_component(&filled)?;
    let stats = component_stats(&lesion)?;
    let radius = expand_k.map_or(0, |k| dilation_radius(stats.diameter, k));
    let mask = dilate(&lesion, &StructuringElement::disk(radius));
    Ok(Postprocessed { mask, stats, radius })
}
