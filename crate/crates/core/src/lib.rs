//! Query-by-example shape retrieval.
//!
//! Images are split into connected foreground regions; each region is
//! described by its gray-level entropy and the seven Hu moment invariants.
//! A query first keeps the indexed regions whose entropy is close to the
//! template's, then ranks them by distance between log-scaled invariants.
//!
//! ```
//! use cbir_core::{features::EntropyScope, index::{IndexDb, IndexRecord}, query, segment::SegmentConfig, synth};
//!
//! let spec = synth::ShapeSpec::centered(synth::ShapeKind::Disk { rx: 30.0, ry: 18.0 }, (80, 60), 200);
//! let img = synth::render(&spec).unwrap();
//! let regions = cbir_core::region_features(&img, &SegmentConfig::default(), EntropyScope::Foreground).unwrap();
//!
//! let mut db = IndexDb::new();
//! db.add(IndexRecord::new("ellipse#0", "ellipse.pgm", &regions[0].1)).unwrap();
//!
//! let template = synth::rotate(&img, 90.0);
//! let (_, features) = cbir_core::largest_region_features(&template, &SegmentConfig::default(), EntropyScope::Foreground)
//!     .unwrap()
//!     .unwrap();
//! let hits = query::query(&db, &features, query::DEFAULT_TAU, query::DEFAULT_TOP);
//! assert_eq!(hits[0].id, "ellipse#0");
//! ```

pub mod cli;
pub mod features;
pub mod index;
pub mod query;
pub mod raster;
pub mod segment;
pub mod synth;

use thiserror::Error;

use crate::features::{EntropyScope, FeatureError, FeatureVector};
use crate::segment::{Region, SegmentConfig, SegmentError};

pub use crate::raster::GrayImage;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Raster(#[from] raster::RasterError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Index(#[from] index::IndexError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
}

/// Margin of zero pixels placed around every extracted sub-image.
pub const SUBIMAGE_MARGIN: usize = 1;

/// Features of one region, computed on its zero-bordered sub-image.
pub fn features_of_region(img: &GrayImage, region: &Region, scope: EntropyScope) -> Result<FeatureVector, Error> {
    let sub = segment::extract_subimage(img, region, SUBIMAGE_MARGIN)?;
    Ok(features::extract_features(&sub, scope)?)
}

/// Segments `img` and describes every region, in region order.
pub fn region_features(
    img: &GrayImage,
    config: &SegmentConfig,
    scope: EntropyScope,
) -> Result<Vec<(Region, FeatureVector)>, Error> {
    config
        .segment(img)
        .into_iter()
        .map(|r| features_of_region(img, &r, scope).map(|f| (r, f)))
        .collect()
}

/// Features of the largest region, or `None` when nothing is segmented.
pub fn largest_region_features(
    img: &GrayImage,
    config: &SegmentConfig,
    scope: EntropyScope,
) -> Result<Option<(Region, FeatureVector)>, Error> {
    config
        .largest_region(img)
        .map(|r| features_of_region(img, &r, scope).map(|f| (r, f)))
        .transpose()
}
