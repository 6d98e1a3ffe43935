//! Exact vertex enumeration by solving every k-subset of constraint rows.

use std::collections::BTreeSet;

use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use super::{DofRegion, RegionError};
use crate::exactlin::{Rational, RationalMatrix};

pub const MAX_VERTEX_K: usize = 4;

/// All vertices of the region, sorted lexicographically.
pub fn vertices(region: &DofRegion) -> Result<Vec<Vec<Rational>>, RegionError> {
    let k = region.k();
    if k > MAX_VERTEX_K {
        return Err(RegionError::VertexUnsupported { k, max: MAX_VERTEX_K });
    }
    let mut rows: Vec<(Vec<Rational>, Rational)> =
        region.all_rows().into_iter().map(|q| (q.coefficients, q.rhs)).collect();
    for j in 0..k {
        let mut v = vec![Rational::zero(); k];
        v[j] = -Rational::one();
        rows.push((v, Rational::zero()));
    }
    let subsets: Vec<Vec<usize>> = (0..rows.len()).combinations(k).collect();
    let found: BTreeSet<Vec<Rational>> = subsets
        .par_iter()
        .filter_map(|idx| solve(&rows, idx, k))
        .filter(|p| region.contains(p))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    Ok(found.into_iter().collect())
}

/// Unique solution of the selected rows held at equality, if the normals are
/// independent.
fn solve(rows: &[(Vec<Rational>, Rational)], idx: &[usize], k: usize) -> Option<Vec<Rational>> {
    let mut entries = Vec::with_capacity(k * (k + 1));
    for &i in idx {
        entries.extend(rows[i].0.iter().cloned());
        entries.push(rows[i].1.clone());
    }
    let aug = RationalMatrix::new(k, k + 1, entries).ok()?;
    let (r, pivots) = aug.rref();
    if pivots != (0..k).collect::<Vec<_>>() {
        return None;
    }
    Some((0..k).map(|i| r.get(i, k).clone()).collect())
}

/// Some coordinate lies strictly between 0 and 1.
pub fn is_nontrivial(point: &[Rational]) -> bool {
    point.iter().any(|x| x.is_positive() && *x < Rational::one())
}

pub fn nontrivial_vertices(region: &DofRegion) -> Result<Vec<Vec<Rational>>, RegionError> {
    Ok(vertices(region)?.into_iter().filter(|v| is_nontrivial(v)).collect())
}
