//! Exact dense linear algebra over arbitrary-precision rationals.
//!
//! Every rank statement in the crate bottoms out here. Ranks are computed by
//! fraction-free (Bareiss) elimination after clearing row denominators, so
//! the arithmetic stays in `BigInt` and is exact. Empty matrices (zero rows
//! or zero columns) are legal everywhere and have rank 0.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational scalar, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

/// Parses `p/q` or `p`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Decimal approximation for human-readable output only.
pub fn approx_f64(q: &Rational) -> f64 {
    let n: f64 = q.numer().to_string().parse().unwrap_or(f64::NAN);
    let d: f64 = q.denom().to_string().parse().unwrap_or(f64::NAN);
    n / d
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}")))
    }

    pub mod vec {
        use super::super::{format_rational, parse_rational, Rational};
        use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for q in v {
                seq.serialize_element(&format_rational(q))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| parse_rational(s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}"))))
                .collect()
        }
    }
}

/// Dense row-major matrix of exact rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(format_rational).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = Rational::one();
        }
        m
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            entries.extend(r.iter().map(|&x| rat(x)));
        }
        Self { rows: rows.len(), cols, entries }
    }

    /// Builds a matrix from row vectors that all have length `cols`.
    pub fn from_rows(cols: usize, rows: &[Vec<Rational>]) -> Result<Self, LinalgError> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "row of length {} in a matrix with {cols} columns",
                    r.len()
                )));
            }
            entries.extend(r.iter().cloned());
        }
        Ok(Self { rows: rows.len(), cols, entries })
    }

    /// Single-row matrix.
    pub fn row_vector(v: &[Rational]) -> Self {
        Self { rows: 1, cols: v.len(), entries: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.entries[c * self.rows + r] = self.get(r, c).clone();
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let b = rhs.get(k, c);
                    if !b.is_zero() {
                        out.entries[r * rhs.cols + c] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn left_mul_vector(&self, v: &[Rational]) -> Result<Vec<Rational>, LinalgError> {
        if v.len() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} times {}x{}",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![Rational::zero(); self.cols];
        for (r, a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                let b = self.get(r, c);
                if !b.is_zero() {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            for &c in cols {
                entries.push(self.get(r, c).clone());
            }
        }
        Self { rows: self.rows, cols: cols.len(), entries }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            entries.extend_from_slice(self.row(r));
        }
        Self { rows: rows.len(), cols: self.cols, entries }
    }

    /// Leading `count` rows.
    pub fn top_rows(&self, count: usize) -> Self {
        Self {
            rows: count,
            cols: self.cols,
            entries: self.entries[..count * self.cols].to_vec(),
        }
    }

    pub fn hstack(&self, other: &Self) -> Result<Self, LinalgError> {
        hstack(self, other)
    }

    pub fn vstack(&self, other: &Self) -> Result<Self, LinalgError> {
        vstack(self, other)
    }

    pub fn rank(&self) -> usize {
        rank(self)
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).recip();
            for j in c..m.cols {
                let v = m.get(r, j) * &inv;
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..m.cols {
                    let v = m.get(i, j) - &f * m.get(r, j);
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    /// Basis (as rows) of the row space, taken from the nonzero rows of the
    /// reduced echelon form.
    pub fn row_space_basis(&self) -> Self {
        let (r, pivots) = self.rref();
        r.top_rows(pivots.len())
    }

    /// Basis (as rows) of the right null space `{x : M x = 0}`. Each basis
    /// vector is scaled to a primitive integer vector.
    pub fn nullspace(&self) -> Self {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![Rational::zero(); self.cols];
            v[f] = Rational::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(i, f).clone();
            }
            basis.push(primitive_integer_vector(&v));
        }
        Self::from_rows(self.cols, &basis).expect("consistent nullspace rows")
    }

    /// True when `v` lies in the row space of `self`.
    pub fn row_span_contains(&self, v: &[Rational]) -> bool {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        if v.iter().all(Zero::is_zero) {
            return true;
        }
        let base = self.rank();
        let stacked = vstack(self, &Self::row_vector(v)).expect("same width");
        stacked.rank() == base
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

/// Scales a rational vector by a positive factor so that it becomes an
/// integer vector with coprime entries. Zero vectors are returned unchanged.
pub fn primitive_integer_vector(v: &[Rational]) -> Vec<Rational> {
    let lcm = v.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = v.iter().map(|q| (q * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if gcd.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| Rational::from_integer(x / &gcd)).collect()
}

/// Exact rank by fraction-free Gaussian elimination.
pub fn rank(m: &RationalMatrix) -> usize {
    if m.rows == 0 || m.cols == 0 {
        return 0;
    }
    // Clear denominators row by row; row scaling preserves rank.
    let mut a: Vec<Vec<BigInt>> = (0..m.rows)
        .map(|r| {
            let row = m.row(r);
            let lcm = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            row.iter().map(|q| q.numer() * (&lcm / q.denom())).collect()
        })
        .collect();
    bareiss_rank(&mut a, m.cols)
}

fn bareiss_rank(a: &mut [Vec<BigInt>], cols: usize) -> usize {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let (head, tail) = a.split_at_mut(r + 1);
        let pivot_row = &head[r];
        let pivot = &pivot_row[c];
        for row in tail.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            for j in c + 1..cols {
                let v = pivot * &row[j] - &lead * &pivot_row[j];
                row[j] = if prev.is_one() { v } else { v / &prev };
            }
        }
        prev = pivot.clone();
        r += 1;
    }
    r
}

pub fn hstack(a: &RationalMatrix, b: &RationalMatrix) -> Result<RationalMatrix, LinalgError> {
    if a.rows != b.rows {
        return Err(LinalgError::DimensionMismatch(format!(
            "hstack of {} and {} rows",
            a.rows, b.rows
        )));
    }
    let cols = a.cols + b.cols;
    let mut entries = Vec::with_capacity(a.rows * cols);
    for r in 0..a.rows {
        entries.extend_from_slice(a.row(r));
        entries.extend_from_slice(b.row(r));
    }
    Ok(RationalMatrix { rows: a.rows, cols, entries })
}

pub fn vstack(a: &RationalMatrix, b: &RationalMatrix) -> Result<RationalMatrix, LinalgError> {
    if a.cols != b.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "vstack of {} and {} columns",
            a.cols, b.cols
        )));
    }
    let mut entries = a.entries.clone();
    entries.extend_from_slice(&b.entries);
    Ok(RationalMatrix { rows: a.rows + b.rows, cols: a.cols, entries })
}

/// Stacks several matrices vertically. All must share the column count `cols`.
pub fn vstack_all(cols: usize, parts: &[RationalMatrix]) -> Result<RationalMatrix, LinalgError> {
    parts.iter().try_fold(RationalMatrix::zeros(0, cols), |acc, p| vstack(&acc, p))
}

/// Stacks several matrices horizontally. All must share the row count `rows`.
pub fn hstack_all(rows: usize, parts: &[RationalMatrix]) -> Result<RationalMatrix, LinalgError> {
    parts.iter().try_fold(RationalMatrix::zeros(rows, 0), |acc, p| hstack(&acc, p))
}

/// Full-row-rank `N` with `cols(M) - rank(M)` rows such that `M Nᵀ = 0`.
///
/// `M` must itself have full row rank.
pub fn orthogonal_complement(m: &RationalMatrix) -> Result<RationalMatrix, LinalgError> {
    let r = m.rank();
    if r != m.rows {
        return Err(LinalgError::Degenerate(format!(
            "{}x{} matrix has rank {r}, not full row rank",
            m.rows, m.cols
        )));
    }
    Ok(m.nullspace())
}

/// `rank[A; B] - rank[B]`.
pub fn conditional_rank(a: &RationalMatrix, b: &RationalMatrix) -> Result<usize, LinalgError> {
    let joint = vstack(a, b)?;
    Ok(joint.rank() - b.rank())
}

/// Dimension of the subspace of `rowspan(M)` made of vectors that vanish on
/// every column in `zero_cols`.
///
/// Computed from a row-space basis `B` as the dimension of the left null space
/// of `B` restricted to `zero_cols`; the rows of `B` are independent, so
/// `x ↦ x B` is injective on that null space.
pub fn coordinate_intersection_dim(m: &RationalMatrix, zero_cols: &[usize]) -> Result<usize, LinalgError> {
    if let Some(&bad) = zero_cols.iter().find(|&&c| c >= m.cols) {
        return Err(LinalgError::OutOfRange(format!("column {bad} of {}", m.cols)));
    }
    let basis = m.row_space_basis();
    if basis.rows == 0 {
        return Ok(0);
    }
    let restricted = basis.select_columns(zero_cols);
    // Left null space of `restricted` = right null space of its transpose.
    Ok(restricted.transpose().nullspace().rows())
}

pub fn sign(q: &Rational) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}
