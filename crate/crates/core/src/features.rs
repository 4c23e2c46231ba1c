//! Region descriptors: gray-level entropy and the seven Hu moment invariants.
//!
//! Moments are integrals of `x^p y^q g(x, y)` over the pixel grid, evaluated
//! with the composite trapezoidal rule at unit spacing: pixel centers are the
//! quadrature nodes, so node weights are 1 in the interior, 1/2 on
//! non-corner border nodes and 1/4 on the corners. On a frame whose border
//! is all zero this coincides with plain summation, which
//! [`raw_moments_sum`] computes independently as a cross-check.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::raster::GrayImage;
use crate::segment::BitMask;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("image has no mass: every pixel is zero")]
    ZeroMass,
    #[error("trapezoidal quadrature needs at least a 2x2 grid, got {width}x{height}")]
    DegenerateGrid { width: usize, height: usize },
    #[error("frame {width}x{height} exceeds the {MAX_SIDE}-pixel side limit for moment sums")]
    FrameTooLarge { width: usize, height: usize },
    #[error("histogram sample is empty")]
    EmptySample,
    #[error("mask is {mask:?} but image is {image:?}")]
    MaskMismatch {
        mask: (usize, usize),
        image: (usize, usize),
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quadrature {
    Trapezoidal,
    Summation,
}

/// Moment orders `(p, q)` with `p + q <= 3`, grouped by total order.
pub const ORDERS: [(usize, usize); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

const fn slot(p: usize, q: usize) -> usize {
    let n = p + q;
    assert!(n <= 3, "moment order above 3");
    n * (n + 1) / 2 + q
}

/// One real per moment order up to 3, indexed by `(p, q)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MomentTable([f64; 10]);

impl MomentTable {
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        ORDERS.iter().map(|&(p, q)| ((p, q), self[(p, q)]))
    }
}

impl Index<(usize, usize)> for MomentTable {
    type Output = f64;

    fn index(&self, (p, q): (usize, usize)) -> &f64 {
        &self.0[slot(p, q)]
    }
}

impl IndexMut<(usize, usize)> for MomentTable {
    fn index_mut(&mut self, (p, q): (usize, usize)) -> &mut f64 {
        &mut self.0[slot(p, q)]
    }
}

/// Raw moments `m_pq` before centering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawMoments {
    pub m: MomentTable,
    pub quadrature: Quadrature,
    /// Largest intensity in the image; the gray-level function is normalized
    /// by it when forming `eta`.
    pub peak: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSet {
    pub m: MomentTable,
    pub centroid: (f64, f64),
    pub mu: MomentTable,
    /// Scale-normalized central moments of the peak-normalized image.
    pub eta: MomentTable,
    pub quadrature: Quadrature,
}

fn check_mass(img: &GrayImage) -> Result<f64, FeatureError> {
    match img.max_intensity() {
        0 => Err(FeatureError::ZeroMass),
        peak => Ok(f64::from(peak)),
    }
}

/// Largest frame side accepted by the exact moment sums.
pub const MAX_SIDE: usize = 100_000;

fn check_frame(img: &GrayImage) -> Result<(), FeatureError> {
    if img.width() > MAX_SIDE || img.height() > MAX_SIDE {
        return Err(FeatureError::FrameTooLarge {
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(())
}

/// Direct summation `m_pq = sum_y sum_x x^p y^q g(x, y)`.
pub fn raw_moments_sum(img: &GrayImage) -> Result<RawMoments, FeatureError> {
    let peak = check_mass(img)?;
    let mut m = MomentTable::default();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let g = f64::from(img.get(x, y));
            for &(p, q) in &ORDERS {
                m[(p, q)] += (x as f64).powi(p as i32) * (y as f64).powi(q as i32) * g;
            }
        }
    }
    Ok(RawMoments {
        m,
        quadrature: Quadrature::Summation,
        peak,
    })
}

/// Composite trapezoidal rule over nodes `f_{i,j}`, `i = 0..=N` (rows,
/// `N = height - 1`) and `j = 0..=M` (columns, `M = width - 1`), `h = k = 1`.
pub fn raw_moments_trap(img: &GrayImage) -> Result<RawMoments, FeatureError> {
    if img.width() < 2 || img.height() < 2 {
        return Err(FeatureError::DegenerateGrid {
            width: img.width(),
            height: img.height(),
        });
    }
    check_frame(img)?;
    let peak = check_mass(img)?;
    Ok(RawMoments {
        m: scaled(&integer_sums(img, (0, 0), Quadrature::Trapezoidal), Quadrature::Trapezoidal),
        quadrature: Quadrature::Trapezoidal,
        peak,
    })
}

/// Exact sums `sum w(x, y) g(x, y) X^p Y^q` with `X = 2x - o.0` and
/// `Y = 2y - o.1`, where `w` is the node weight scaled to an integer
/// (1, 2 or 4 for the trapezoidal rule, 1 for summation).
///
/// The integrand is separable, so each row is first reduced to four
/// bracket sums (one per power of `X`), which are then combined across rows
/// with the powers of `Y`. For the trapezoidal rule a row bracket is
/// `f_0 + f_M + 2 (f_1 + ... + f_{M-1})` and the grid total is
/// `hk/4 [B_0 + B_N + 2 (B_1 + ... + B_{N-1})]`.
fn integer_sums(img: &GrayImage, o: (i64, i64), quadrature: Quadrature) -> [i128; 10] {
    debug_assert!(check_frame(img).is_ok());
    let (w, h) = (img.width(), img.height());
    let trap = quadrature == Quadrature::Trapezoidal;
    let weight = |n: usize, i: usize| if trap && i != 0 && i + 1 != n { 2 } else { 1 };
    let powers = |d: i64, wt: i64| [wt, wt * d, wt * d * d, wt * d * d * d];

    let xp: Vec<[i64; 4]> = (0..w).map(|j| powers(2 * j as i64 - o.0, weight(w, j))).collect();
    let mut sums = [0i128; 10];
    for i in 0..h {
        let mut bracket = [0i128; 4];
        for (&g, col) in img.row(i).iter().zip(&xp) {
            if g == 0 {
                continue;
            }
            let g = i64::from(g);
            for k in 0..4 {
                bracket[k] += i128::from(g * col[k]);
            }
        }
        if bracket[0] == 0 {
            continue;
        }
        let yp = powers(2 * i as i64 - o.1, weight(h, i)).map(i128::from);
        for (slot, &(p, q)) in ORDERS.iter().enumerate() {
            sums[slot] += yp[q] * bracket[p];
        }
    }
    sums
}

/// Converts [`integer_sums`] to moments in pixel units.
fn scaled(sums: &[i128; 10], quadrature: Quadrature) -> MomentTable {
    let norm = if quadrature == Quadrature::Trapezoidal { 0.25 } else { 1.0 };
    let mut m = MomentTable::default();
    for (slot, &(p, q)) in ORDERS.iter().enumerate() {
        m.0[slot] = sums[slot] as f64 * norm / f64::from(1u32 << (p + q));
    }
    m
}

const BINOMIAL: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];

/// Re-expands moments taken about one point as moments about a point
/// displaced from it by `d`.
fn shift(m: &MomentTable, d: (f64, f64)) -> MomentTable {
    let mut out = MomentTable::default();
    for &(p, q) in &ORDERS {
        let mut acc = 0.0;
        for a in 0..=p {
            for b in 0..=q {
                acc += BINOMIAL[p][a] * BINOMIAL[q][b] * (-d.0).powi((p - a) as i32) * (-d.1).powi((q - b) as i32) * m[(a, b)];
            }
        }
        out[(p, q)] = acc;
    }
    out
}

/// Centroid, central moments and normalized moments
/// `eta_pq = mu_pq / mu_00^lambda`, `lambda = (p + q) / 2 + 1`.
///
/// Central moments are integrated exactly about the frame center and then
/// shifted to the centroid, so a point-symmetric frame yields odd central
/// moments that are exactly zero.
///
/// `eta` is taken over `g / peak` so that it is unchanged when all
/// intensities are multiplied by a constant.
pub fn complete_moments(img: &GrayImage, raw: &RawMoments) -> Result<MomentSet, FeatureError> {
    if raw.m[(0, 0)].is_nan() || raw.m[(0, 0)] <= 0.0 {
        return Err(FeatureError::ZeroMass);
    }
    check_frame(img)?;
    let center = frame_center(img);
    let about_center = scaled(&integer_sums(img, center, raw.quadrature), raw.quadrature);
    Ok(finish(raw.m, &about_center, center, raw.quadrature, raw.peak))
}

fn frame_center(img: &GrayImage) -> (i64, i64) {
    (img.width() as i64 - 1, img.height() as i64 - 1)
}

fn finish(m: MomentTable, about_center: &MomentTable, center: (i64, i64), quadrature: Quadrature, peak: f64) -> MomentSet {
    let c00 = about_center[(0, 0)];
    let d = (about_center[(1, 0)] / c00, about_center[(0, 1)] / c00);
    let centroid = (center.0 as f64 / 2.0 + d.0, center.1 as f64 / 2.0 + d.1);
    let mut mu = shift(about_center, d);
    mu[(1, 0)] = 0.0;
    mu[(0, 1)] = 0.0;
    let mu00 = mu[(0, 0)] / peak;
    let mut eta = MomentTable::default();
    for &(p, q) in &ORDERS {
        let lambda = (p + q) as f64 / 2.0 + 1.0;
        eta[(p, q)] = mu[(p, q)] / peak / mu00.powf(lambda);
    }
    eta[(0, 0)] = 1.0;
    MomentSet {
        m,
        centroid,
        mu,
        eta,
        quadrature,
    }
}

/// Trapezoidal moments of the full image, from a single pass over the
/// pixels: raw moments are shifted back from the frame center.
pub fn moments(img: &GrayImage) -> Result<MomentSet, FeatureError> {
    if img.width() < 2 || img.height() < 2 {
        return Err(FeatureError::DegenerateGrid {
            width: img.width(),
            height: img.height(),
        });
    }
    check_frame(img)?;
    let peak = check_mass(img)?;
    let center = frame_center(img);
    let q = Quadrature::Trapezoidal;
    let about_center = scaled(&integer_sums(img, center, q), q);
    let m = shift(&about_center, (-(center.0 as f64) / 2.0, -(center.1 as f64) / 2.0));
    Ok(finish(m, &about_center, center, q, peak))
}

/// Hu's seven invariants. The seventh is the skew invariant: it changes sign
/// under reflection.
pub fn hu_invariants(ms: &MomentSet) -> [f64; 7] {
    let e = &ms.eta;
    let (n20, n02, n11) = (e[(2, 0)], e[(0, 2)], e[(1, 1)]);
    let (n30, n21, n12, n03) = (e[(3, 0)], e[(2, 1)], e[(1, 2)], e[(0, 3)]);

    let a = n30 + n12;
    let b = n21 + n03;
    let c = n30 - 3.0 * n12;
    let d = 3.0 * n21 - n03;
    [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        c * c + d * d,
        a * a + b * b,
        c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b),
    ]
}

/// Magnitudes below this are treated as exact zeros by [`log_scale`].
pub const LOG_FLOOR: f64 = 1e-30;

/// Signed decimal log: `sign(phi) * log10(|phi|)`, or 0 below [`LOG_FLOOR`].
pub fn log_scale(phi: &[f64; 7]) -> [f64; 7] {
    phi.map(|v| {
        if v.abs() < LOG_FLOOR {
            0.0
        } else {
            v.signum() * v.abs().log10()
        }
    })
}

/// 256-bin gray-level histogram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; 256],
    total: u64,
}

impl Histogram {
    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

pub fn histogram(img: &GrayImage, mask: Option<&BitMask>) -> Result<Histogram, FeatureError> {
    let mut counts = [0u64; 256];
    match mask {
        None => {
            for &v in img.pixels() {
                counts[usize::from(v)] += 1;
            }
        }
        Some(mask) => {
            if (mask.width(), mask.height()) != (img.width(), img.height()) {
                return Err(FeatureError::MaskMismatch {
                    mask: (mask.width(), mask.height()),
                    image: (img.width(), img.height()),
                });
            }
            for (&v, _) in img.pixels().iter().zip(mask.bits()).filter(|(_, &b)| b) {
                counts[usize::from(v)] += 1;
            }
        }
    }
    let total = counts.iter().sum();
    if total == 0 {
        return Err(FeatureError::EmptySample);
    }
    Ok(Histogram { counts, total })
}

/// Shannon entropy in bits, with `0 log 0 = 0`. Bins are visited in
/// intensity order, so the result depends only on the histogram.
pub fn entropy(h: &Histogram) -> f64 {
    let total = h.total as f64;
    let sum: f64 = h
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.log2()
        })
        .sum();
    let s = -sum;
    if s > 0.0 {
        s.min(8.0)
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum EntropyScope {
    /// Pixels with intensity at least 1.
    #[default]
    Foreground,
    Whole,
}

/// Per-region index payload.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub entropy: f64,
    pub phi: [f64; 7],
    pub psi: [f64; 7],
}

impl FeatureVector {
    pub fn new(entropy: f64, phi: [f64; 7]) -> Self {
        Self {
            entropy,
            phi,
            psi: log_scale(&phi),
        }
    }
}

/// Entropy plus trapezoidal Hu invariants of a zero-bordered sub-image.
pub fn extract_features(sub: &GrayImage, scope: EntropyScope) -> Result<FeatureVector, FeatureError> {
    let ms = moments(sub)?;
    let hist = match scope {
        EntropyScope::Whole => histogram(sub, None)?,
        EntropyScope::Foreground => histogram(sub, Some(&crate::segment::threshold_mask(sub, 1)))?,
    };
    Ok(FeatureVector::new(entropy(&hist), hu_invariants(&ms)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, px: &[u8]) -> GrayImage {
        GrayImage::new(w, h, px.to_vec()).unwrap()
    }

    fn disk(size: usize, r: f64, fg: u8) -> GrayImage {
        let c = (size as f64 - 1.0) / 2.0;
        GrayImage::from_fn(size, size, |x, y| {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            if dx * dx + dy * dy <= r * r { fg } else { 0 }
        })
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        let s = a.abs().max(b.abs());
        if s == 0.0 { 0.0 } else { (a - b).abs() / s }
    }

    /// Unweighted normalized moments by brute force.
    fn eta_oracle(img: &GrayImage) -> MomentTable {
        let peak = f64::from(img.max_intensity());
        let mut m00 = 0.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        for (i, &v) in img.pixels().iter().enumerate() {
            let g = f64::from(v) / peak;
            let (x, y) = ((i % img.width()) as f64, (i / img.width()) as f64);
            m00 += g;
            sx += x * g;
            sy += y * g;
        }
        let (xc, yc) = (sx / m00, sy / m00);
        let mut eta = MomentTable::default();
        for &(p, q) in &ORDERS {
            let mut mu = 0.0;
            for (i, &v) in img.pixels().iter().enumerate() {
                let (x, y) = ((i % img.width()) as f64, (i / img.width()) as f64);
                mu += (x - xc).powi(p as i32) * (y - yc).powi(q as i32) * f64::from(v) / peak;
            }
            eta[(p, q)] = mu / m00.powf((p + q) as f64 / 2.0 + 1.0);
        }
        eta
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&img(2, 2, &[5, 5, 5, 5]), None).unwrap();
        assert_eq!((h.counts()[5], h.total()), (4, 4));
        let h = histogram(&img(2, 1, &[0, 255]), None).unwrap();
        assert_eq!((h.counts()[0], h.counts()[255]), (1, 1));
        let empty = BitMask::new(2, 1);
        assert_eq!(histogram(&img(2, 1, &[0, 255]), Some(&empty)), Err(FeatureError::EmptySample));
        assert!(matches!(
            histogram(&img(2, 1, &[0, 255]), Some(&BitMask::new(1, 1))),
            Err(FeatureError::MaskMismatch { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let constant = histogram(&img(3, 1, &[9, 9, 9]), None).unwrap();
        assert_eq!(entropy(&constant), 0.0);
        assert!(entropy(&constant).is_sign_positive());
        let two = histogram(&img(2, 2, &[0, 7, 7, 0]), None).unwrap();
        assert_eq!(entropy(&two), 1.0);
        let all: Vec<u8> = (0..=255).collect();
        assert_eq!(entropy(&histogram(&img(16, 16, &all), None).unwrap()), 8.0);
    }

    #[test]
    fn raw_sum_examples() {
        let one = raw_moments_sum(&img(1, 1, &[5])).unwrap();
        assert_eq!((one.m[(0, 0)], one.m[(1, 0)], one.m[(0, 1)]), (5.0, 0.0, 0.0));
        let ones = raw_moments_sum(&img(3, 3, &[1; 9])).unwrap();
        assert_eq!((ones.m[(0, 0)], ones.m[(1, 0)], ones.m[(0, 1)]), (9.0, 9.0, 9.0));
        assert_eq!(raw_moments_sum(&img(2, 2, &[0; 4])), Err(FeatureError::ZeroMass));
    }

    #[test]
    fn trapezoid_hand_case() {
        // (1/4) * ((1 + 1 + 2) + 2 * (1 + 1 + 2) + (1 + 1 + 2)) = 4
        let t = raw_moments_trap(&img(3, 3, &[1; 9])).unwrap();
        assert_eq!(t.m[(0, 0)], 4.0);
        assert_eq!(t.quadrature, Quadrature::Trapezoidal);
    }

    #[test]
    fn trapezoid_degenerate_and_empty() {
        assert_eq!(
            raw_moments_trap(&img(1, 3, &[1, 2, 3])),
            Err(FeatureError::DegenerateGrid { width: 1, height: 3 })
        );
        assert_eq!(raw_moments_trap(&img(2, 2, &[0; 4])), Err(FeatureError::ZeroMass));
    }

    #[test]
    fn trapezoid_equals_sum_on_zero_border() {
        let mut im = GrayImage::zeros(7, 6).unwrap();
        for (x, y, v) in [(1, 1, 3u8), (2, 4, 250), (5, 2, 17), (3, 3, 1)] {
            im.set(x, y, v);
        }
        let (t, s) = (raw_moments_trap(&im).unwrap(), raw_moments_sum(&im).unwrap());
        for &(p, q) in &ORDERS {
            assert!(rel(t.m[(p, q)], s.m[(p, q)]) <= 1e-12, "({p},{q})");
        }
    }

    #[test]
    fn centroid_and_first_central_moments() {
        let ms = moments(&img(3, 3, &[1; 9])).unwrap();
        assert_eq!(ms.centroid, (1.0, 1.0));
        let d = disk(41, 15.0, 200);
        let ms = moments(&d).unwrap();
        let m00 = ms.m[(0, 0)];
        assert!(ms.mu[(1, 0)].abs() <= 1e-9 * m00);
        assert!(ms.mu[(0, 1)].abs() <= 1e-9 * m00);
        assert!(ms.mu[(1, 1)].abs() <= 1e-9 * m00);
        assert_eq!(ms.eta[(0, 0)], 1.0);
        assert!(ms.eta[(1, 0)].abs() < 1e-12 && ms.eta[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn complete_rejects_zero_mass() {
        let raw = RawMoments {
            m: MomentTable::default(),
            quadrature: Quadrature::Summation,
            peak: 1.0,
        };
        assert_eq!(complete_moments(&img(2, 2, &[0; 4]), &raw), Err(FeatureError::ZeroMass));
    }

    #[test]
    fn eta_matches_brute_force() {
        let im = GrayImage::from_fn(12, 9, |x, y| {
            if x == 0 || y == 0 || x == 11 || y == 8 { 0 } else { ((x * 37 + y * 11) % 200) as u8 + 1 }
        })
        .unwrap();
        let ms = moments(&im).unwrap();
        let oracle = eta_oracle(&im);
        for &(p, q) in &ORDERS[3..] {
            assert!((ms.eta[(p, q)] - oracle[(p, q)]).abs() <= 1e-12 * oracle[(p, q)].abs().max(1e-6), "({p},{q})");
        }
    }

    #[test]
    fn square_symmetry_zeros() {
        let sq = GrayImage::from_fn(20, 20, |x, y| if (4..16).contains(&x) && (4..16).contains(&y) { 90 } else { 0 }).unwrap();
        let phi = hu_invariants(&moments(&sq).unwrap());
        let tol = 1e-9 * phi[0].abs().max(1.0);
        assert!(phi[1..].iter().all(|v| v.abs() <= tol), "{phi:?}");
        assert!(log_scale(&phi)[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disk_matches_analytic_phi1() {
        // Unit-intensity disk: mu20 = mu02 = pi r^4 / 4, mu00 = pi r^2,
        // so phi1 = 2 / (4 pi) = 1 / (2 pi).
        let phi = hu_invariants(&moments(&disk(256, 100.0, 255)).unwrap());
        let expected = 1.0 / (2.0 * std::f64::consts::PI);
        assert!(rel(phi[0], expected) < 0.01, "{}", phi[0]);
        assert!(phi[1..].iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn mirror_negates_skew_invariant() {
        let tri = GrayImage::from_fn(30, 24, |x, y| {
            let (x, y) = (x as i64, y as i64);
            if (3..=20).contains(&y) && x >= 3 && x <= 3 + (y - 3) * 3 / 2 && x + y < 40 { (50 + x) as u8 } else { 0 }
        })
        .unwrap();
        let mirrored = GrayImage::from_fn(30, 24, |x, y| tri.get(29 - x, y)).unwrap();
        let a = hu_invariants(&moments(&tri).unwrap());
        let b = hu_invariants(&moments(&mirrored).unwrap());
        for i in 0..6 {
            assert!(rel(a[i], b[i]) <= 1e-9, "phi{}", i + 1);
        }
        assert!(a[6].abs() > 1e-20);
        assert!(rel(a[6], -b[6]) <= 1e-9);
    }

    #[test]
    fn log_scale_examples() {
        let psi = log_scale(&[0.01, -0.01, 0.0, 1e-31, -1e-31, 1.0, 1e-30]);
        assert_eq!(psi[0], -2.0);
        assert_eq!(psi[1], 2.0);
        assert_eq!(&psi[2..6], &[0.0, 0.0, 0.0, 0.0]);
        assert!((psi[6] + 30.0).abs() < 1e-12);
    }

    #[test]
    fn features_of_constant_disk() {
        let d = disk(64, 20.0, 140);
        let f = extract_features(&d, EntropyScope::Foreground).unwrap();
        assert_eq!(f.entropy, 0.0);
        assert!(rel(f.phi[0], 1.0 / (2.0 * std::f64::consts::PI)) < 0.02);
        assert_eq!(f.psi, log_scale(&f.phi));
        let whole = extract_features(&d, EntropyScope::Whole).unwrap();
        assert!(whole.entropy > 0.5);
    }

    #[test]
    fn quarter_turns_leave_psi_unchanged() {
        let base = GrayImage::from_fn(21, 21, |x, y| {
            if (3..17).contains(&x) && (5..12).contains(&y) || (x == 15 && y > 11 && y < 18) { (x * 7 + y) as u8 + 20 } else { 0 }
        })
        .unwrap();
        let rot90 = GrayImage::from_fn(21, 21, |x, y| base.get(y, 20 - x)).unwrap();
        let a = extract_features(&base, EntropyScope::Foreground).unwrap();
        let b = extract_features(&rot90, EntropyScope::Foreground).unwrap();
        assert_eq!(a.entropy, b.entropy);
        for i in 0..7 {
            assert!((a.psi[i] - b.psi[i]).abs() <= 1e-9, "psi{}", i + 1);
        }
    }

    #[test]
    fn extract_propagates_errors() {
        assert_eq!(extract_features(&img(1, 4, &[0, 1, 1, 0]), EntropyScope::Whole), Err(FeatureError::DegenerateGrid { width: 1, height: 4 }));
        assert_eq!(extract_features(&img(3, 3, &[0; 9]), EntropyScope::Foreground), Err(FeatureError::ZeroMass));
    }

    fn zero_border_image() -> impl Strategy<Value = GrayImage> {
        (2usize..14, 2usize..14).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h).prop_map(move |mut px| {
                px[0] = px[0].max(1);
                let (fw, fh) = (w + 2, h + 2);
                GrayImage::from_fn(fw, fh, |x, y| {
                    if x == 0 || y == 0 || x == fw - 1 || y == fh - 1 { 0 } else { px[(y - 1) * w + x - 1] }
                })
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn quadrature_identity(im in zero_border_image()) {
            let (t, s) = (raw_moments_trap(&im).unwrap(), raw_moments_sum(&im).unwrap());
            for &(p, q) in &ORDERS {
                prop_assert!(rel(t.m[(p, q)], s.m[(p, q)]) <= 1e-12);
            }
        }

        #[test]
        fn first_central_moments_vanish(w in 2usize..16, h in 2usize..16, seed in any::<u64>()) {
            let im = GrayImage::from_fn(w, h, |x, y| ((seed >> ((x + 3 * y) % 60)) as u8) | 1).unwrap();
            let ms = moments(&im).unwrap();
            prop_assert!(ms.mu[(1, 0)].abs() <= 1e-9 * ms.m[(0, 0)]);
            prop_assert!(ms.mu[(0, 1)].abs() <= 1e-9 * ms.m[(0, 0)]);
        }

        #[test]
        fn translation_invariance(im in zero_border_image(), dx in 0usize..5, dy in 0usize..5) {
            let (w, h) = (im.width() + 6, im.height() + 6);
            let place = |ox: usize, oy: usize| GrayImage::from_fn(w, h, |x, y| {
                if x >= ox && y >= oy && x - ox < im.width() && y - oy < im.height() { im.get(x - ox, y - oy) } else { 0 }
            }).unwrap();
            let a = moments(&place(1, 1)).unwrap();
            let b = moments(&place(dx + 1, dy + 1)).unwrap();
            let scale = a.mu[(0, 0)] * (w.max(h) as f64).powi(3);
            for &(p, q) in &ORDERS {
                prop_assert!((a.mu[(p, q)] - b.mu[(p, q)]).abs() <= 1e-12 * scale);
            }
            let (pa, pb) = (hu_invariants(&a), hu_invariants(&b));
            for i in 0..2 {
                prop_assert!(rel(pa[i], pb[i]) <= 1e-9);
            }
        }

        #[test]
        fn intensity_scaling_invariance(im in zero_border_image(), c in 2u8..=3) {
            let peak = im.max_intensity();
            let base = GrayImage::from_fn(im.width(), im.height(), |x, y| {
                ((u16::from(im.get(x, y)) * 85 / u16::from(peak)) as u8).max(u8::from(x == 1 && y == 1))
            }).unwrap();
            let scaled = GrayImage::from_fn(base.width(), base.height(), |x, y| base.get(x, y) * c).unwrap();
            let (a, b) = (moments(&base).unwrap(), moments(&scaled).unwrap());
            for &(p, q) in &ORDERS[3..] {
                let tol = 1e-9 * a.eta[(2, 0)].abs().max(a.eta[(0, 2)].abs());
                prop_assert!((a.eta[(p, q)] - b.eta[(p, q)]).abs() <= tol.max(1e-9 * a.eta[(p, q)].abs()));
            }
            let (pa, pb) = (hu_invariants(&a), hu_invariants(&b));
            prop_assert!(rel(pa[0], pb[0]) <= 1e-9);
        }

        #[test]
        fn entropy_is_permutation_invariant(px in proptest::collection::vec(any::<u8>(), 1..200), seed in any::<u64>()) {
            let n = px.len();
            let mut shuffled = px.clone();
            let mut s = seed | 1;
            for i in (1..n).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                shuffled.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let a = entropy(&histogram(&img(n, 1, &px), None).unwrap());
            let b = entropy(&histogram(&img(n, 1, &shuffled), None).unwrap());
            prop_assert_eq!(a.to_bits(), b.to_bits());
            prop_assert!((0.0..=8.0).contains(&a));
        }
    }
}
