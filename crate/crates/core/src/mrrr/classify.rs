use std::ops::Range;

use crate::bisect::EigInterval;
use crate::precision::Real;

/// Relative separation of two neighbouring enclosures; infinite when all
/// four endpoints vanish.
pub fn reldist<W: Real>(a: &EigInterval<W>, b: &EigInterval<W>) -> f64 {
    let denom = a.lo.abs().max(a.hi.abs()).max(b.lo.abs()).max(b.hi.abs());
    if denom == W::zero() {
        return f64::INFINITY;
    }
    ((b.lo - a.hi) / denom).to_f64()
}

/// Splits ascending enclosures into maximal runs whose neighbours are closer
/// than `gaptol`; returns positions into `intervals`.
pub fn classify<W: Real>(intervals: &[EigInterval<W>], gaptol: f64) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    if intervals.is_empty() {
        return groups;
    }
    let mut start = 0;
    for j in 0..intervals.len() - 1 {
        if reldist(&intervals[j], &intervals[j + 1]) >= gaptol {
            groups.push(start..j + 1);
            start = j + 1;
        }
    }
    groups.push(start..intervals.len());
    groups
}
