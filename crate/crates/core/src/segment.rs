//! Region selection: thresholding, connected-component labeling, Moore
//! boundary tracing and sub-image extraction.

use thiserror::Error;

use crate::raster::{GrayImage, RasterError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SegmentError {
    #[error("region extends outside the {width}x{height} image")]
    RegionOutOfBounds { width: usize, height: usize },
    #[error("connectivity must be 4 or 8, got {0}")]
    BadConnectivity(u32),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Foreground flags, one per pixel, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Sets a bit exactly where the intensity is at least `t`.
pub fn threshold_mask(img: &GrayImage, t: u8) -> BitMask {
    BitMask {
        width: img.width(),
        height: img.height(),
        bits: img.pixels().iter().map(|&v| v >= t).collect(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl TryFrom<u32> for Connectivity {
    type Error = SegmentError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        match value {
            4 => Ok(Self::Four),
            8 => Ok(Self::Eight),
            other => Err(SegmentError::BadConnectivity(other)),
        }
    }
}

/// Inclusive bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min + 1
    }
}

/// Horizontal span of foreground pixels `x_start..=x_end` on row `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Run {
    pub y: usize,
    pub x_start: usize,
    pub x_end: usize,
}

impl Run {
    pub fn len(&self) -> usize {
        self.x_end - self.x_start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A connected set of foreground pixels, stored as row runs in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    label: usize,
    runs: Vec<Run>,
    area: usize,
    bbox: BoundingBox,
}

impl Region {
    /// Builds a region from runs; they are sorted into raster order. Returns
    /// `None` for an empty run list. Connectivity is not checked.
    pub fn from_runs(label: usize, mut runs: Vec<Run>) -> Option<Self> {
        runs.sort_by_key(|r| (r.y, r.x_start));
        let first = runs.first()?;
        let mut bbox = BoundingBox {
            x_min: first.x_start,
            y_min: first.y,
            x_max: first.x_end,
            y_max: first.y,
        };
        let mut area = 0;
        for r in &runs {
            debug_assert!(r.x_start <= r.x_end);
            bbox.x_min = bbox.x_min.min(r.x_start);
            bbox.x_max = bbox.x_max.max(r.x_end);
            bbox.y_max = bbox.y_max.max(r.y);
            area += r.len();
        }
        Some(Self {
            label,
            runs,
            area,
            bbox,
        })
    }

    /// Groups arbitrary pixel coordinates into runs.
    pub fn from_pixels(label: usize, pixels: impl IntoIterator<Item = (usize, usize)>) -> Option<Self> {
        let mut pts: Vec<(usize, usize)> = pixels.into_iter().map(|(x, y)| (y, x)).collect();
        pts.sort_unstable();
        pts.dedup();
        let mut runs: Vec<Run> = Vec::new();
        for (y, x) in pts {
            match runs.last_mut() {
                Some(r) if r.y == y && r.x_end + 1 == x => r.x_end = x,
                _ => runs.push(Run {
                    y,
                    x_start: x,
                    x_end: x,
                }),
            }
        }
        Self::from_runs(label, runs)
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn area(&self) -> usize {
        self.area
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    /// Pixels in raster order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (r.x_start..=r.x_end).map(move |x| (x, r.y)))
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        let idx = self.runs.partition_point(|r| (r.y, r.x_start) <= (y, x));
        idx > 0 && {
            let r = &self.runs[idx - 1];
            r.y == y && x <= r.x_end
        }
    }

    /// Region mask cropped to the bounding box.
    fn local_mask(&self) -> BitMask {
        let b = self.bbox;
        let mut mask = BitMask::new(b.width(), b.height());
        for r in &self.runs {
            let y = r.y - b.y_min;
            for x in r.x_start..=r.x_end {
                mask.set(x - b.x_min, y, true);
            }
        }
        mask
    }
}

fn row_runs(mask: &BitMask, y: usize, out: &mut Vec<Run>) {
    let row = &mask.bits[y * mask.width..(y + 1) * mask.width];
    let mut x = 0;
    while x < row.len() {
        if row[x] {
            let start = x;
            while x + 1 < row.len() && row[x + 1] {
                x += 1;
            }
            out.push(Run {
                y,
                x_start: start,
                x_end: x,
            });
        }
        x += 1;
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// Labels connected foreground components, dropping those with fewer than
/// `min_area` pixels. Regions are ordered by the top-left corner of their
/// bounding box (`y_min`, then `x_min`, then first pixel in raster order)
/// and labeled `0..n` in that order.
pub fn connected_components(mask: &BitMask, connectivity: Connectivity, min_area: usize) -> Vec<Region> {
    let slack = match connectivity {
        Connectivity::Four => 0,
        Connectivity::Eight => 1,
    };
    let mut runs: Vec<Run> = Vec::new();
    let mut parent: Vec<usize> = Vec::new();
    let mut prev = 0..0;
    for y in 0..mask.height {
        let start = runs.len();
        row_runs(mask, y, &mut runs);
        parent.extend(start..runs.len());
        let cur = start..runs.len();
        // Both rows are sorted by x_start; sweep them together.
        let (mut i, mut j) = (prev.start, cur.start);
        while i < prev.end && j < cur.end {
            let (a, b) = (runs[i], runs[j]);
            if a.x_start <= b.x_end + slack && b.x_start <= a.x_end + slack {
                union(&mut parent, i, j);
            }
            if a.x_end < b.x_end {
                i += 1;
            } else {
                j += 1;
            }
        }
        prev = cur;
    }

    let mut groups: Vec<Vec<Run>> = Vec::new();
    let mut group_of_root = vec![usize::MAX; runs.len()];
    for (idx, &run) in runs.iter().enumerate() {
        let root = find(&mut parent, idx);
        if group_of_root[root] == usize::MAX {
            group_of_root[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[group_of_root[root]].push(run);
    }

    // Groups are created in raster order of their first run, which is the
    // final tie-break.
    let mut regions: Vec<Region> = groups
        .into_iter()
        .filter_map(|g| Region::from_runs(0, g))
        .filter(|r| r.area >= min_area)
        .collect();
    regions.sort_by_key(|r| (r.bbox.y_min, r.bbox.x_min));
    for (label, r) in regions.iter_mut().enumerate() {
        r.label = label;
    }
    regions
}

/// Threshold, connectivity and minimum area used for region selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentConfig {
    pub threshold: u8,
    pub connectivity: Connectivity,
    pub min_area: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            threshold: 1,
            connectivity: Connectivity::Eight,
            min_area: 4,
        }
    }
}

impl SegmentConfig {
    pub fn segment(&self, img: &GrayImage) -> Vec<Region> {
        connected_components(&threshold_mask(img, self.threshold), self.connectivity, self.min_area)
    }

    /// Largest region by area; the earliest one wins ties.
    pub fn largest_region(&self, img: &GrayImage) -> Option<Region> {
        self.segment(img)
            .into_iter()
            .reduce(|best, r| if r.area > best.area { r } else { best })
    }
}

// Clockwise on screen (y grows downward), starting west.
const MOORE: [(isize, isize); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn moore_index(dx: isize, dy: isize) -> usize {
    MOORE
        .iter()
        .position(|&d| d == (dx, dy))
        .expect("offset is an 8-neighbor")
}

/// Moore-neighbor trace of the exterior contour, clockwise, starting at the
/// topmost-then-leftmost pixel. The loop is closed implicitly: the start is
/// not repeated at the end. Pixels on one-pixel-wide necks appear once per
/// visit.
pub fn boundary_trace(region: &Region) -> Vec<(usize, usize)> {
    let mask = region.local_mask();
    let b = region.bbox;
    let (w, h) = (mask.width as isize, mask.height as isize);
    let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && mask.get(x as usize, y as usize);

    let first = region.runs[0];
    let start = ((first.x_start - b.x_min) as isize, 0isize);
    let to_global = |(x, y): (isize, isize)| (x as usize + b.x_min, y as usize + b.y_min);

    // Everything west of and above the start is background; enter from the west.
    let mut cur = start;
    let mut back = 0usize;
    let mut contour = vec![start];
    let mut second = None;
    let limit = 8 * region.area + 8;
    for _ in 0..limit {
        let mut next = None;
        for k in 1..=8 {
            let d = (back + k) % 8;
            let cand = (cur.0 + MOORE[d].0, cur.1 + MOORE[d].1);
            if inside(cand.0, cand.1) {
                let p = (d + 7) % 8;
                let prev = (cur.0 + MOORE[p].0, cur.1 + MOORE[p].1);
                next = Some((cand, moore_index(prev.0 - cand.0, prev.1 - cand.1)));
                break;
            }
        }
        let Some((cand, new_back)) = next else {
            break; // isolated pixel
        };
        match second {
            None => second = Some(cand),
            Some(s) if cur == start && cand == s => {
                contour.pop();
                break;
            }
            Some(_) => {}
        }
        contour.push(cand);
        cur = cand;
        back = new_back;
    }
    contour.into_iter().map(to_global).collect()
}

/// Copies the region's pixels into a fresh zero frame of size
/// `(bbox width + 2 margin) x (bbox height + 2 margin)`.
pub fn extract_subimage(img: &GrayImage, region: &Region, margin: usize) -> Result<GrayImage, SegmentError> {
    let b = region.bbox;
    if b.x_max >= img.width() || b.y_max >= img.height() {
        return Err(SegmentError::RegionOutOfBounds {
            width: img.width(),
            height: img.height(),
        });
    }
    let mut out = GrayImage::zeros(b.width() + 2 * margin, b.height() + 2 * margin)?;
    for r in &region.runs {
        let src = &img.row(r.y)[r.x_start..=r.x_end];
        for (i, &v) in src.iter().enumerate() {
            out.set(r.x_start - b.x_min + margin + i, r.y - b.y_min + margin, v);
        }
    }
    Ok(out)
}
