//! Two-stage retrieval: an entropy gate narrows the database, then the
//! surviving records are ranked by distance between log-scaled invariants.

use std::cmp::Ordering;

use crate::features::{log_scale, FeatureVector};
use crate::index::{IndexDb, IndexRecord};

pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_TOP: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub id: String,
    pub source: String,
    pub distance: f64,
    pub entropy_gap: f64,
}

/// Records whose entropy is within `tau` bits of `s_q` (inclusive), in
/// database order. A negative or NaN `tau` admits nothing.
pub fn entropy_filter(db: &IndexDb, s_q: f64, tau: f64) -> Vec<&IndexRecord> {
    db.records()
        .iter()
        .filter(|r| (r.entropy - s_q).abs() <= tau)
        .collect()
}

/// Euclidean distance over the seven log-scaled invariants.
pub fn moment_distance(a: &[f64; 7], b: &[f64; 7]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn by_rank(a: &QueryResult, b: &QueryResult) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.id.cmp(&b.id))
}

/// Every record passing the entropy gate, ranked by `(distance, id)`.
pub fn rank(db: &IndexDb, template: &FeatureVector, tau: f64) -> Vec<QueryResult> {
    let mut results: Vec<QueryResult> = entropy_filter(db, template.entropy, tau)
        .into_iter()
        .map(|r| QueryResult {
            id: r.id.clone(),
            source: r.source.clone(),
            distance: moment_distance(&log_scale(&r.phi), &template.psi),
            entropy_gap: (r.entropy - template.entropy).abs(),
        })
        .collect();
    results.sort_by(by_rank);
    results
}

/// The `k` best matches for `template` among records within `tau` bits.
pub fn query(db: &IndexDb, template: &FeatureVector, tau: f64, k: usize) -> Vec<QueryResult> {
    let mut results = rank(db, template, tau);
    results.truncate(k);
    results
}
