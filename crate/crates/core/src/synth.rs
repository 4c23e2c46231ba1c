//! Deterministic synthetic shapes and geometric transforms.
//!
//! Shapes are rendered with a pixel-center inclusion test around a real
//! center point, so a shape centered in its frame is exactly point-symmetric
//! whenever its geometry is. Arbitrary rotations and rescales resample with
//! bilinear interpolation about the frame center, which preserves that
//! symmetry up to rounding.

use thiserror::Error;

use crate::raster::{GrayImage, RasterError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("shape does not fit inside the frame with a 2-pixel zero border")]
    ShapeOutOfFrame,
    #[error("translation by ({dx}, {dy}) would clip nonzero pixels")]
    ContentClipped { dx: isize, dy: isize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Minimum zero border kept around rendered and resampled content.
pub const BORDER: usize = 2;

/// Shape geometry in pixels, relative to the shape center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeKind {
    /// Filled ellipse with semi-axes `rx`, `ry`; a circle when they match.
    Disk { rx: f64, ry: f64 },
    Rect { width: f64, height: f64 },
    Triangle { vertices: [(f64, f64); 3] },
    /// Region inside the outer ellipse and strictly outside the inner one.
    Annulus { outer: (f64, f64), inner: (f64, f64) },
}

impl ShapeKind {
    /// Half-extents of the shape's bounding box.
    fn half_extent(&self) -> (f64, f64) {
        match *self {
            ShapeKind::Disk { rx, ry } => (rx, ry),
            ShapeKind::Rect { width, height } => (width / 2.0, height / 2.0),
            ShapeKind::Annulus { outer, .. } => outer,
            ShapeKind::Triangle { vertices } => vertices.iter().fold((0.0, 0.0), |(ax, ay), &(x, y)| {
                (f64::max(ax, x.abs()), f64::max(ay, y.abs()))
            }),
        }
    }

    pub fn perimeter(&self) -> f64 {
        fn ellipse(a: f64, b: f64) -> f64 {
            // Ramanujan's second approximation.
            let h = ((a - b) / (a + b)).powi(2);
            std::f64::consts::PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
        }
        match *self {
            ShapeKind::Disk { rx, ry } => ellipse(rx, ry),
            ShapeKind::Rect { width, height } => 2.0 * (width + height),
            ShapeKind::Annulus { outer, inner } => ellipse(outer.0, outer.1) + ellipse(inner.0, inner.1),
            ShapeKind::Triangle { vertices: [a, b, c] } => {
                let d = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).hypot(p.1 - q.1);
                d(a, b) + d(b, c) + d(c, a)
            }
        }
    }

    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            ShapeKind::Disk { rx, ry } => PI * rx * ry,
            ShapeKind::Rect { width, height } => width * height,
            ShapeKind::Annulus { outer, inner } => PI * (outer.0 * outer.1 - inner.0 * inner.1),
            ShapeKind::Triangle { vertices: [a, b, c] } => {
                0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs()
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            ShapeKind::Disk { rx, ry } => ShapeKind::Disk { rx: rx * s, ry: ry * s },
            ShapeKind::Rect { width, height } => ShapeKind::Rect {
                width: width * s,
                height: height * s,
            },
            ShapeKind::Annulus { outer, inner } => ShapeKind::Annulus {
                outer: (outer.0 * s, outer.1 * s),
                inner: (inner.0 * s, inner.1 * s),
            },
            ShapeKind::Triangle { vertices } => ShapeKind::Triangle {
                vertices: vertices.map(|(x, y)| (x * s, y * s)),
            },
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SynthError::InvalidParameter(format!("{what} must be positive, got {v}")))
            }
        };
        match *self {
            ShapeKind::Disk { rx, ry } => {
                positive(rx, "rx")?;
                positive(ry, "ry")
            }
            ShapeKind::Rect { width, height } => {
                positive(width, "width")?;
                positive(height, "height")
            }
            ShapeKind::Annulus { outer, inner } => {
                positive(outer.0, "outer rx")?;
                positive(outer.1, "outer ry")?;
                positive(inner.0, "inner rx")?;
                positive(inner.1, "inner ry")?;
                if inner.0 >= outer.0 || inner.1 >= outer.1 {
                    return Err(SynthError::InvalidParameter(
                        "inner ellipse must lie strictly inside the outer one".into(),
                    ));
                }
                Ok(())
            }
            ShapeKind::Triangle { vertices } => {
                if vertices.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(SynthError::InvalidParameter("non-finite vertex".into()));
                }
                positive(self.area(), "triangle area")
            }
        }
    }

    #[inline]
    fn contains(&self, dx: f64, dy: f64) -> bool {
        match *self {
            ShapeKind::Disk { rx, ry } => (dx / rx).powi(2) + (dy / ry).powi(2) <= 1.0,
            ShapeKind::Rect { width, height } => dx.abs() <= width / 2.0 && dy.abs() <= height / 2.0,
            ShapeKind::Annulus { outer, inner } => {
                (dx / outer.0).powi(2) + (dy / outer.1).powi(2) <= 1.0
                    && (dx / inner.0).powi(2) + (dy / inner.1).powi(2) > 1.0
            }
            ShapeKind::Triangle { vertices: [a, b, c] } => {
                let edge = |p: (f64, f64), q: (f64, f64)| (q.0 - p.0) * (dy - p.1) - (q.1 - p.1) * (dx - p.0);
                let (e0, e1, e2) = (edge(a, b), edge(b, c), edge(c, a));
                (e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0) || (e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    /// Frame size `(width, height)`.
    pub frame: (usize, usize),
    /// Shape center in pixel coordinates.
    pub center: (f64, f64),
    pub fg: u8,
}

impl ShapeSpec {
    /// Shape centered in its frame.
    pub fn centered(kind: ShapeKind, frame: (usize, usize), fg: u8) -> Self {
        Self {
            kind,
            frame,
            center: ((frame.0 as f64 - 1.0) / 2.0, (frame.1 as f64 - 1.0) / 2.0),
            fg,
        }
    }

    /// Centered shape in the smallest even-sized frame leaving `margin`
    /// zero pixels on every side.
    pub fn fitted(kind: ShapeKind, margin: usize, fg: u8) -> Self {
        let (hx, hy) = kind.half_extent();
        let side = |h: f64| {
            let n = (2.0 * h).ceil() as usize + 2 * margin + 2;
            n + n % 2
        };
        Self::centered(kind, (side(hx), side(hy)), fg)
    }
}

pub fn render(spec: &ShapeSpec) -> Result<GrayImage, SynthError> {
    spec.kind.validate()?;
    if spec.fg == 0 {
        return Err(SynthError::InvalidParameter("foreground intensity must be at least 1".into()));
    }
    let (w, h) = spec.frame;
    if w <= 2 * BORDER || h <= 2 * BORDER {
        return Err(SynthError::ShapeOutOfFrame);
    }
    let (cx, cy) = spec.center;
    let (hx, hy) = spec.kind.half_extent();
    // Pixel centers more than one pixel beyond the bounding box are outside.
    let x_lo = ((cx - hx - 1.0).floor().max(0.0)) as usize;
    let x_hi = ((cx + hx + 1.0).ceil().min(w as f64 - 1.0)).max(0.0) as usize;
    let y_lo = ((cy - hy - 1.0).floor().max(0.0)) as usize;
    let y_hi = ((cy + hy + 1.0).ceil().min(h as f64 - 1.0)).max(0.0) as usize;

    let mut img = GrayImage::zeros(w, h)?;
    let mut lit = false;
    for y in y_lo..=y_hi.min(h - 1) {
        let dy = y as f64 - cy;
        for x in x_lo..=x_hi.min(w - 1) {
            if spec.kind.contains(x as f64 - cx, dy) {
                img.set(x, y, spec.fg);
                lit = true;
            }
        }
    }
    if !lit || !img.has_zero_border(BORDER) {
        return Err(SynthError::ShapeOutOfFrame);
    }
    Ok(img)
}

/// Rotates clockwise (as displayed, y pointing down) about the frame
/// center. Multiples of 90 degrees are exact pixel permutations; any other
/// angle is resampled bilinearly into an enlarged frame.
pub fn rotate(img: &GrayImage, degrees: f64) -> GrayImage {
    let turns = degrees.rem_euclid(360.0);
    if turns % 90.0 == 0.0 {
        rotate_quarter(img, (turns / 90.0) as u32)
    } else {
        rotate_bilinear(img, degrees)
    }
}

/// Exact rotation by `n` clockwise quarter turns. For one turn pixel
/// `(x, y)` moves to `(H - 1 - y, x)` in an `H x W` frame.
pub fn rotate_quarter(img: &GrayImage, n: u32) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let out = match n % 4 {
        0 => return img.clone(),
        1 => GrayImage::from_fn(h, w, |x, y| img.get(y, h - 1 - x)),
        2 => GrayImage::from_fn(w, h, |x, y| img.get(w - 1 - x, h - 1 - y)),
        _ => GrayImage::from_fn(h, w, |x, y| img.get(w - 1 - y, x)),
    };
    out.expect("dimensions come from a valid image")
}

/// Left-right mirror.
pub fn mirror_x(img: &GrayImage) -> GrayImage {
    let w = img.width();
    GrayImage::from_fn(w, img.height(), |x, y| img.get(w - 1 - x, y)).expect("same dimensions")
}

/// Top-bottom mirror.
pub fn mirror_y(img: &GrayImage) -> GrayImage {
    let h = img.height();
    GrayImage::from_fn(img.width(), h, |x, y| img.get(x, h - 1 - y)).expect("same dimensions")
}

/// Bilinear sample at offset `(ox, oy)` from the frame center, zero outside
/// the frame. Offsets in the lower half-plane are read through the point
/// reflection of the frame, so point-symmetric images resample to
/// point-symmetric images bit for bit.
#[inline]
fn sample(img: &GrayImage, ox: f64, oy: f64) -> f64 {
    let flip = oy < 0.0 || (oy == 0.0 && ox < 0.0);
    let (ox, oy) = if flip { (-ox, -oy) } else { (ox, oy) };
    let (w, h) = (img.width() as isize, img.height() as isize);
    let (sx, sy) = ((w - 1) as f64 / 2.0 + ox, (h - 1) as f64 / 2.0 + oy);
    if !(sx > -1.0 && sy > -1.0 && sx < w as f64 && sy < h as f64) {
        return 0.0;
    }
    let (x0, y0) = (floor(sx), floor(sy));
    let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
    let last = img.pixels().len() as isize - 1;
    let px = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w || y >= h {
            return 0.0;
        }
        let i = y * w + x;
        f64::from(img.pixels()[if flip { last - i } else { i } as usize])
    };
    let (a, b, c, d) = if x0 >= 0 && y0 >= 0 && x0 + 1 < w && y0 + 1 < h {
        let p = img.pixels();
        let i = y0 * w + x0;
        let at = |k: isize| f64::from(p[if flip { last - k } else { k } as usize]);
        (at(i), at(i + 1), at(i + w), at(i + w + 1))
    } else {
        (px(x0, y0), px(x0 + 1, y0), px(x0, y0 + 1), px(x0 + 1, y0 + 1))
    };
    let top = (1.0 - fx) * a + fx * b;
    let bottom = (1.0 - fx) * c + fx * d;
    (1.0 - fy) * top + fy * bottom
}

#[inline]
fn floor(v: f64) -> isize {
    let t = v as isize;
    if (t as f64) > v {
        t - 1
    } else {
        t
    }
}

#[inline]
fn quantize(v: f64) -> u8 {
    // Non-negative input: truncation is floor, and the cast saturates.
    (v + 0.5) as u8
}

/// Inverse-mapped resampling: output pixel `(u, v)` at offset `(du, dv)`
/// from the output center reads the source at `center + map(du, dv)`.
fn resample(img: &GrayImage, out_w: usize, out_h: usize, map: impl Fn(f64, f64) -> (f64, f64)) -> GrayImage {
    let (ocx, ocy) = ((out_w as f64 - 1.0) / 2.0, (out_h as f64 - 1.0) / 2.0);
    let mut pixels = vec![0u8; out_w * out_h];
    for v in 0..out_h {
        let dv = v as f64 - ocy;
        let row = &mut pixels[v * out_w..(v + 1) * out_w];
        for (u, out) in row.iter_mut().enumerate() {
            let (ox, oy) = map(u as f64 - ocx, dv);
            *out = quantize(sample(img, ox, oy));
        }
    }
    GrayImage::new(out_w, out_h, pixels).expect("sized above")
}

/// Bilinear rotation, even for multiples of 90 degrees. The output frame
/// holds the whole rotated input frame plus a 2-pixel border.
pub fn rotate_bilinear(img: &GrayImage, degrees: f64) -> GrayImage {
    let t = degrees.to_radians();
    let (c, s) = (t.cos(), t.sin());
    let (w, h) = (img.width() as f64, img.height() as f64);
    let out_w = (w * c.abs() + h * s.abs()).ceil() as usize + 2 * BORDER;
    let out_h = (w * s.abs() + h * c.abs()).ceil() as usize + 2 * BORDER;
    resample(img, out_w, out_h, |du, dv| (c * du + s * dv, c * dv - s * du))
}

/// Bilinear rescale about the frame center into a
/// `(ceil(sW) + 4) x (ceil(sH) + 4)` frame.
pub fn scale(img: &GrayImage, s: f64) -> Result<GrayImage, SynthError> {
    if !(s.is_finite() && s > 0.0) {
        return Err(SynthError::InvalidParameter(format!("scale factor must be positive, got {s}")));
    }
    let out_w = (img.width() as f64 * s).ceil() as usize + 2 * BORDER;
    let out_h = (img.height() as f64 * s).ceil() as usize + 2 * BORDER;
    Ok(resample(img, out_w, out_h, |du, dv| (du / s, dv / s)))
}

/// Integer shift within the same frame, zero fill.
pub fn translate(img: &GrayImage, dx: isize, dy: isize) -> Result<GrayImage, SynthError> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut out = GrayImage::zeros(img.width(), img.height())?;
    for y in 0..h {
        for x in 0..w {
            let v = img.get(x as usize, y as usize);
            if v == 0 {
                continue;
            }
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                return Err(SynthError::ContentClipped { dx, dy });
            }
            out.set(nx as usize, ny as usize, v);
        }
    }
    Ok(out)
}

/// A corpus entry.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedShape {
    pub name: String,
    pub spec: ShapeSpec,
}

/// Perimeter-to-area ratio the corpus shapes are sized to. Resampling leaves
/// a one-pixel band of intermediate gray levels along the outline, and the
/// foreground entropy grows with that band's share of the area.
pub const CORPUS_PERIMETER_RATIO: f64 = 0.0042;

const CORPUS_INTENSITIES: [u8; 7] = [255, 96, 200, 64, 160, 128, 224];

/// Fifty distinct shapes: elliptic disks and rectangles over an interleaved
/// ladder of aspect ratios, rings of two wall thicknesses and scalene
/// triangles. Every shape is scaled to [`CORPUS_PERIMETER_RATIO`] so the
/// set is size-homogeneous in the quantity that matters for resampling.
pub fn corpus() -> Vec<NamedShape> {
    let mut kinds: Vec<(String, ShapeKind)> = Vec::new();

    // Disks and rectangles alternate on one ladder of k - 1/k so that their
    // (phi1, phi2) curves, which nearly coincide, never collide.
    for i in 0..28 {
        let spread = 0.42 * 1.092f64.powi(i);
        let k = (spread + (spread * spread + 4.0).sqrt()) / 2.0;
        let kind = if i % 2 == 0 {
            ShapeKind::Disk { rx: k, ry: 1.0 }
        } else {
            ShapeKind::Rect { width: k, height: 1.0 }
        };
        let tag = if i % 2 == 0 { "disk" } else { "rect" };
        kinds.push((format!("{tag}-{:02}", i / 2), kind));
    }

    for (i, &(k, r)) in [(1.3, 0.3), (1.7, 0.3), (2.3, 0.3), (3.1, 0.3), (1.15, 0.4), (1.5, 0.4), (2.0, 0.4), (2.7, 0.4), (1.25, 0.35), (3.6, 0.35)]
        .iter()
        .enumerate()
    {
        kinds.push((format!("annulus-{i:02}"), ShapeKind::Annulus { outer: (k, 1.0), inner: (k * r, r) }));
    }

    let triangles: [[(f64, f64); 3]; 12] = [
        [(0.0, 0.0), (1.0, 0.0), (0.3, 0.8)],
        [(0.0, 0.0), (1.0, 0.0), (0.15, 0.55)],
        [(0.0, 0.0), (1.0, 0.0), (0.7, 1.1)],
        [(0.0, 0.0), (1.0, 0.0), (0.8, 0.9)],
        [(0.0, 0.0), (1.0, 0.0), (0.25, 1.4)],
        [(0.0, 0.0), (1.0, 0.0), (0.05, 1.0)],
        [(0.0, 0.0), (1.0, 0.0), (0.38, 1.9)],
        [(0.0, 0.0), (1.0, 0.0), (0.2, 0.7)],
        [(0.0, 0.0), (1.0, 0.0), (0.9, 1.05)],
        [(0.0, 0.0), (1.0, 0.0), (0.1, 0.85)],
        [(0.0, 0.0), (1.0, 0.0), (0.68, 0.6)],
        [(0.0, 0.0), (1.0, 0.0), (0.35, 0.65)],
    ];
    for (i, tri) in triangles.iter().enumerate() {
        // Center on the bounding box so the frame is tight.
        let (xs, ys): (Vec<f64>, Vec<f64>) = tri.iter().copied().unzip();
        let mid = |v: &[f64]| (v.iter().cloned().fold(f64::INFINITY, f64::min) + v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)) / 2.0;
        let (mx, my) = (mid(&xs), mid(&ys));
        kinds.push((
            format!("tri-{i:02}"),
            ShapeKind::Triangle {
                vertices: tri.map(|(x, y)| (x - mx, y - my)),
            },
        ));
    }

    kinds
        .into_iter()
        .enumerate()
        .map(|(i, (name, unit))| {
            let s = unit.perimeter() / unit.area() / CORPUS_PERIMETER_RATIO;
            let fg = CORPUS_INTENSITIES[i % CORPUS_INTENSITIES.len()];
            NamedShape {
                name,
                spec: ShapeSpec::fitted(unit.scaled(s), 3, fg),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_features, moments, EntropyScope, ORDERS};
    use std::f64::consts::PI;

    fn nonzero(img: &GrayImage) -> usize {
        img.pixels().iter().filter(|&&v| v > 0).count()
    }

    #[test]
    fn disk_area_matches_pi_r_squared() {
        let img = render(&ShapeSpec::centered(ShapeKind::Disk { rx: 10.0, ry: 10.0 }, (64, 64), 255)).unwrap();
        let n = nonzero(&img) as f64;
        assert!((n - PI * 100.0).abs() / (PI * 100.0) < 0.03, "{n}");
        assert!(img.pixels().iter().all(|&v| v == 0 || v == 255));
    }

    #[test]
    fn rect_pixel_count_is_exact() {
        let img = render(&ShapeSpec::centered(ShapeKind::Rect { width: 10.0, height: 4.0 }, (64, 64), 9)).unwrap();
        assert_eq!(nonzero(&img), 40);
    }

    #[test]
    fn out_of_frame_and_bad_parameters() {
        let spec = ShapeSpec::centered(ShapeKind::Disk { rx: 31.0, ry: 31.0 }, (64, 64), 255);
        assert_eq!(render(&spec), Err(SynthError::ShapeOutOfFrame));
        let mut off = ShapeSpec::centered(ShapeKind::Disk { rx: 5.0, ry: 5.0 }, (64, 64), 255);
        off.center = (4.0, 30.0);
        assert_eq!(render(&off), Err(SynthError::ShapeOutOfFrame));
        let bad = ShapeSpec::centered(ShapeKind::Annulus { outer: (5.0, 5.0), inner: (6.0, 2.0) }, (64, 64), 255);
        assert!(matches!(render(&bad), Err(SynthError::InvalidParameter(_))));
        let flat = ShapeSpec::centered(ShapeKind::Triangle { vertices: [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)] }, (64, 64), 255);
        assert!(matches!(render(&flat), Err(SynthError::InvalidParameter(_))));
        let dark = ShapeSpec::centered(ShapeKind::Rect { width: 4.0, height: 4.0 }, (64, 64), 0);
        assert!(matches!(render(&dark), Err(SynthError::InvalidParameter(_))));
    }

    #[test]
    fn rendering_is_deterministic_and_symmetric() {
        let spec = ShapeSpec::centered(ShapeKind::Annulus { outer: (20.0, 12.0), inner: (8.0, 5.0) }, (51, 36), 77);
        let a = render(&spec).unwrap();
        assert_eq!(a, render(&spec).unwrap());
        assert_eq!(a, rotate_quarter(&a, 2));
    }

    #[test]
    fn zero_and_quarter_rotations() {
        let img = render(&ShapeSpec::centered(ShapeKind::Triangle { vertices: [(-6.0, -5.0), (7.0, -1.0), (0.0, 6.0)] }, (20, 20), 200)).unwrap();
        assert_eq!(rotate(&img, 0.0), img);
        let r90 = rotate(&img, 90.0);
        for y in 0..20 {
            for x in 0..20 {
                assert_eq!(r90.get(19 - y, x), img.get(x, y));
            }
        }
        assert_eq!(rotate(&rotate(&img, 90.0), 90.0), rotate(&img, 180.0));
        assert_eq!(rotate(&img, -90.0), rotate(&img, 270.0));
        assert_eq!(rotate(&img, 450.0), r90);
    }

    #[test]
    fn quarter_turns_on_non_square_frames() {
        let img = GrayImage::from_fn(3, 2, |x, y| (y * 3 + x) as u8).unwrap();
        // 0 1 2      3 0
        // 3 4 5  ->  4 1
        //            5 2
        let r = rotate_quarter(&img, 1);
        assert_eq!((r.width(), r.height()), (2, 3));
        assert_eq!(r.pixels(), &[3, 0, 4, 1, 5, 2]);
        assert_eq!(rotate_quarter(&r, 3), img);
        let mut sorted_a = img.pixels().to_vec();
        let mut sorted_b = rotate_quarter(&img, 3).into_pixels();
        sorted_a.sort_unstable();
        sorted_b.sort_unstable();
        assert_eq!(sorted_a, sorted_b);
    }

    #[test]
    fn full_turn_through_bilinear_path() {
        let img = render(&ShapeSpec::centered(ShapeKind::Triangle { vertices: [(-60.0, -50.0), (70.0, -10.0), (0.0, 60.0)] }, (144, 128), 200)).unwrap();
        let a = extract_features(&img, EntropyScope::Foreground).unwrap();
        let b = extract_features(&rotate_bilinear(&img, 360.0), EntropyScope::Foreground).unwrap();
        for i in 0..7 {
            assert!((a.psi[i] - b.psi[i]).abs() <= 0.05, "psi{}: {} vs {}", i + 1, a.psi[i], b.psi[i]);
        }
    }

    #[test]
    fn unit_scale_is_identity_up_to_padding() {
        let img = render(&ShapeSpec::centered(ShapeKind::Disk { rx: 7.0, ry: 4.0 }, (20, 14), 180)).unwrap();
        let s = scale(&img, 1.0).unwrap();
        assert_eq!((s.width(), s.height()), (24, 18));
        for y in 0..14 {
            for x in 0..20 {
                assert_eq!(s.get(x + 2, y + 2), img.get(x, y));
            }
        }
        assert!(scale(&img, 0.0).is_err());
        assert!(scale(&img, f64::NAN).is_err());
    }

    #[test]
    fn doubling_quadruples_area() {
        let img = render(&ShapeSpec::centered(ShapeKind::Rect { width: 40.0, height: 24.0 }, (60, 40), 255)).unwrap();
        let mass = |g: &GrayImage| g.pixels().iter().map(|&v| f64::from(v)).sum::<f64>();
        let before = mass(&img);
        let after = mass(&scale(&img, 2.0).unwrap());
        assert!((after / before - 4.0).abs() / 4.0 < 0.02, "{after} / {before}");
    }

    #[test]
    fn translation_preserves_central_moments() {
        let img = render(&ShapeSpec::centered(ShapeKind::Triangle { vertices: [(-6.0, -5.0), (7.0, -1.0), (0.0, 6.0)] }, (30, 30), 130)).unwrap();
        let moved = translate(&img, 3, 5).unwrap();
        let (a, b) = (moments(&img).unwrap(), moments(&moved).unwrap());
        for &(p, q) in &ORDERS {
            let scale = a.mu[(0, 0)] * 30f64.powi((p + q) as i32);
            assert!((a.mu[(p, q)] - b.mu[(p, q)]).abs() <= 1e-12 * scale, "({p},{q})");
        }
        assert_eq!(translate(&img, 20, 0), Err(SynthError::ContentClipped { dx: 20, dy: 0 }));
        assert_eq!(translate(&moved, -3, -5).unwrap(), img);
    }

    #[test]
    fn resampling_keeps_point_symmetry_exact() {
        let img = render(&ShapeSpec::centered(ShapeKind::Rect { width: 31.0, height: 12.0 }, (50, 40), 200)).unwrap();
        for out in [rotate_bilinear(&img, 37.0), scale(&img, 1.3).unwrap(), rotate_bilinear(&scale(&img, 0.7).unwrap(), 75.0)] {
            assert_eq!(rotate_quarter(&out, 2), out);
            let f = extract_features(&out, EntropyScope::Foreground).unwrap();
            assert_eq!(&f.phi[2..], &[0.0; 5]);
        }
    }

    #[test]
    fn corpus_is_well_formed() {
        let corpus = corpus();
        assert_eq!(corpus.len(), 50);
        let mut names: Vec<&str> = corpus.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 50);
        for entry in &corpus {
            let k = entry.spec.kind;
            assert!((k.perimeter() / k.area() - CORPUS_PERIMETER_RATIO).abs() < 1e-9);
            assert!(entry.spec.frame.0 < 4000 && entry.spec.frame.1 < 4000, "{}: {:?}", entry.name, entry.spec.frame);
        }
        // One small render to check that fitted frames are valid.
        let small = ShapeSpec::fitted(corpus[41].spec.kind.scaled(0.05), 3, 255);
        assert!(render(&small).unwrap().has_zero_border(BORDER));
    }
}
